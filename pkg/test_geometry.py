import math

import pytest

from src.codegen import make_patch, patch_checks
from src.exceptions import ContractError, InfeasibleLayoutError
from src.geometry import (
    CZGate, build_layout, cluster_pitch, rectangle_plaquettes, round_duration,
    rydberg_conflicts, schedule_cz_layers,
)


def _round_gates(layout, group=(0, 0)):
    gates = []
    for position in range(layout.k):
        patch = make_patch(layout, group, position)
        for check in patch_checks(layout, patch):
            for site, _, step in check.legs:
                gates.append(CZGate(check.ancilla, site, step))
    return gates


def test_rotated_code_plaquettes():
    plaqs = rectangle_plaquettes(0, 0, 3, 3)
    assert len(plaqs) == 8
    assert sum(1 for p in plaqs if p.kind == "X") == 4
    assert sum(1 for p in plaqs if len(p.corners) == 2) == 4
    assert len(rectangle_plaquettes(0, 0, 5, 5)) == 24


def test_cluster_pitch():
    assert cluster_pitch(1, 10.0) == 20.0
    assert cluster_pitch(4, 10.0) == 30.0
    assert cluster_pitch(16, 10.0) == 50.0


@pytest.mark.parametrize("k,leg", [(1, 10.0), (4, 15.0), (9, 20.0), (16, 25.0)])
def test_default_radius_reaches_every_group_size(k, leg):
    layout = build_layout(k, 3)
    assert math.isclose(layout.leg_length, leg)
    assert layout.count("data") == 9 * k
    patch = make_patch(layout, (0, 0), k - 1)
    for check in patch_checks(layout, patch):
        for site, _, _ in check.legs:
            assert layout.distance(check.ancilla, site) <= 28.0 + 1e-9


def test_atom_counts():
    layout = build_layout(4, 3)
    assert layout.count("data") == 4 * 9
    assert layout.count("ancilla") == 4 * 8
    frame = layout.to_frame()
    assert list(frame.columns) == ["site_id", "x_um", "y_um", "species", "cluster", "pos"]
    assert len(frame) == 4 * 17


def test_same_position_legs_are_equal_length():
    layout = build_layout(4, 3)
    patch = make_patch(layout, (0, 0), 2)
    for check in patch_checks(layout, patch):
        for site, _, _ in check.legs:
            assert math.isclose(layout.distance(check.ancilla, site), layout.leg_length)


def test_infeasible_radius():
    with pytest.raises(InfeasibleLayoutError):
        build_layout(4, 3, r_ancilla_data=12.0)
    with pytest.raises(InfeasibleLayoutError):
        build_layout(16, 3, r_ancilla_data=24.0)
    with pytest.raises(InfeasibleLayoutError):
        build_layout(4, 3, r_data_data=5.0)


def test_invalid_parameters():
    with pytest.raises(ContractError):
        build_layout(2, 3)
    with pytest.raises(ContractError):
        build_layout(4, 4)


@pytest.mark.parametrize("d", [3, 5, 7])
@pytest.mark.parametrize("k", [1, 4, 9, 16])
def test_layers_per_round(k, d):
    layout = build_layout(k, d)
    layers = schedule_cz_layers(layout, _round_gates(layout))
    assert len(layers) == 4 * k


@pytest.mark.parametrize("k", [4, 16])
def test_layers_are_conflict_free(k):
    layout = build_layout(k, 3)
    for layer in schedule_cz_layers(layout, _round_gates(layout)):
        assert not rydberg_conflicts(layout, layer)
        atoms = [s for g in layer for s in (g.ancilla, g.data)]
        assert len(atoms) == len(set(atoms))


def test_steps_never_share_a_layer():
    layout = build_layout(1, 5)
    for layer in schedule_cz_layers(layout, _round_gates(layout)):
        assert len({g.step for g in layer}) == 1


def test_shared_atom_conflicts():
    layout = build_layout(1, 3)
    gates = _round_gates(layout)
    same_ancilla = [g for g in gates if g.ancilla == gates[0].ancilla][:2]
    assert rydberg_conflicts(layout, same_ancilla) == {(0, 1)}


def test_cluster_neighbours_conflict_and_lattice_copies_do_not():
    layout = build_layout(16, 3)
    gates = [g for g in _round_gates(layout) if g.step == 0]
    cluster = layout.sites[gates[0].ancilla].cluster_id
    same_cluster = [g for g in gates if layout.sites[g.ancilla].cluster_id == cluster]
    assert len(same_cluster) == 16
    assert len(rydberg_conflicts(layout, same_cluster)) == 16 * 15 // 2
    same_position = [g for g in gates if layout.sites[g.ancilla].position == 5]
    assert len(same_position) > 1
    assert rydberg_conflicts(layout, same_position) == set()


def test_round_duration():
    assert round_duration(16, 3, 1.0, 5.0, 1e4) == 1e4 + 80 + 3
