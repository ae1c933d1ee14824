import numpy as np
import pytest

from src.circuit_ir import parities, reference_sample
from src.codegen import (
    STATES, DetectorLedger, frame_letter, frame_state, gen_interleaved_merge,
    gen_lattice_surgery_cnot_experiment, gen_memory, gen_transversal_cnot_experiment,
    make_patch, patch_footprint,
)
from src.exceptions import ContractError, InfeasibleSeamError
from src.geometry import build_layout
from src.pauli_core import simulate_tableau

LS_GROUPS = ((0, 0), (1, 0), (1, 1))


def _ls_layout(d=3):
    return build_layout(1, d, group_grid=(2, 2), groups=LS_GROUPS)


def _observables(circuit, seeds=range(4)):
    """
    Executa o circuito sem ruído com resultados aleatórios e verifica que
    os detectores repetem a referência; devolve os observáveis (iguais em
    todas as sementes).
    """
    ref = reference_sample(circuit)
    det_records = circuit.detector_records()
    obs_records = circuit.observable_records()
    expected_dets = parities(det_records, ref)
    expected_obs = parities(obs_records, ref)
    for seed in seeds:
        bits = simulate_tableau(circuit, seed=seed)
        assert np.array_equal(parities(det_records, bits), expected_dets)
        assert np.array_equal(parities(obs_records, bits), expected_obs)
    return expected_obs.tolist()


def test_frame_helpers():
    assert frame_letter(0, 0, "X") == "Z"
    assert frame_letter(0, 1, "X") == "X"
    assert frame_state(2, 0, "+") == "0"
    assert frame_state(1, 2, "-") == "-"


def test_ledger_repeated_parity_checks():
    ledger = DetectorLedger(2)
    ledger.initialize([0, 1])
    zz = ledger.pauli([(0, "Z"), (1, "Z")])
    xx = ledger.pauli([(0, "X"), (1, "X")])
    assert ledger.measure_round([(zz, 0, False)]) == [0b1]
    assert ledger.measure_round([(zz, 1, False)]) == [0b11]
    assert ledger.measure_round([(xx, 2, False)]) == []
    assert ledger.measure_round([(xx, 3, False), (zz, 4, False)]) == [0b1100, 0b10010]


def test_ledger_fresh_entries_emit_nothing():
    ledger = DetectorLedger(1)
    ledger.initialize([0])
    z = ledger.pauli([(0, "Z")])
    assert ledger.measure_round([(z, 0, True)]) == []
    assert ledger.measure_round([(z, 1, False)]) == [0b11]


@pytest.mark.parametrize("rounds", [1, 2, 3])
def test_memory_detector_count(rounds):
    circuit = gen_memory(build_layout(1, 3), rounds=rounds)
    assert circuit.count("DETECTOR") == 8 * rounds
    assert len(circuit.observable_records()) == 1


@pytest.mark.parametrize("state,expected", [("0", 0), ("1", 1), ("+", 0), ("-", 1)])
def test_memory_logical_value(state, expected):
    circuit = gen_memory(build_layout(1, 3), rounds=2, state=state)
    assert _observables(circuit) == [expected]


def test_memory_on_interleaved_position():
    layout = build_layout(4, 3)
    circuit = gen_memory(layout, patch=make_patch(layout, (0, 0), 2), rounds=2, state="1")
    assert _observables(circuit) == [1]
    assert circuit.count("DETECTOR") == 16


def test_memory_tick_durations_follow_timing():
    layout = build_layout(1, 3)
    circuit = gen_memory(layout, rounds=1)
    ticks = [i.duration for i in circuit.instructions if i.name == "TICK"]
    assert 10000.0 in ticks
    assert 5.0 in ticks


CNOT_TRUTH_TABLE = [
    (("0", "0"), [0, 0]),
    (("1", "0"), [1, 1]),
    (("1", "1"), [1, 0]),
    (("0", "-"), [0, 1]),
    (("-", "+"), [1, 0]),
    (("+", "-"), [1, 1]),
]


@pytest.mark.parametrize("inputs,expected", CNOT_TRUTH_TABLE)
def test_transversal_cnot_truth_table(inputs, expected):
    circuit = gen_transversal_cnot_experiment(build_layout(4, 3), inputs=inputs, rounds=2)
    assert _observables(circuit) == expected


@pytest.mark.parametrize("inputs,expected", CNOT_TRUTH_TABLE)
def test_lattice_surgery_cnot_truth_table(inputs, expected):
    circuit = gen_lattice_surgery_cnot_experiment(_ls_layout(), inputs=inputs)
    assert _observables(circuit) == expected


def test_cnot_generators_validate_inputs():
    with pytest.raises(ContractError):
        gen_transversal_cnot_experiment(build_layout(1, 3))
    with pytest.raises(ContractError):
        gen_transversal_cnot_experiment(build_layout(4, 3), d=5)
    with pytest.raises(ContractError):
        gen_lattice_surgery_cnot_experiment(build_layout(1, 3))
    with pytest.raises(ContractError):
        gen_memory(build_layout(1, 3), state="2")


def test_transversal_uses_fewer_measurements():
    transversal = gen_transversal_cnot_experiment(build_layout(4, 3))
    surgery = gen_lattice_surgery_cnot_experiment(_ls_layout())
    assert transversal.num_measurements < surgery.num_measurements


@pytest.mark.parametrize("states,expected", [(("+", "+"), 0), (("+", "-"), 1)])
def test_interleaved_xx_merge(states, expected):
    layout = build_layout(4, 3, group_grid=(1, 2))
    circuit = gen_interleaved_merge(layout, (0, 0), 0, (0, 1), 0, "X", states=states, rounds=2)
    assert _observables(circuit, seeds=range(2)) == [expected]


def test_interleaved_zz_merge():
    layout = build_layout(4, 3, group_grid=(2, 1))
    circuit = gen_interleaved_merge(layout, (0, 0), 1, (1, 0), 1, "Z", states=("0", "1"),
                                    rounds=2)
    assert _observables(circuit, seeds=range(2)) == [1]


def test_merge_validation():
    layout = build_layout(4, 3, group_grid=(1, 2))
    with pytest.raises(ContractError):
        gen_interleaved_merge(layout, (0, 0), 0, (0, 1), 0, "Z", states=("0", "0"))
    with pytest.raises(ContractError):
        gen_interleaved_merge(layout, (0, 1), 0, (0, 0), 0, "X")
    with pytest.raises(ContractError):
        gen_interleaved_merge(layout, (0, 0), 0, (0, 1), 0, "X", states=("0", "+"))


def test_mismatched_positions_break_the_seam():
    layout = build_layout(4, 3, group_grid=(1, 2))
    with pytest.raises(InfeasibleSeamError):
        gen_interleaved_merge(layout, (0, 0), 0, (0, 1), 3, "X")


def test_patch_footprint():
    row = patch_footprint(3, k=4, n_logical=10)
    assert row["qubits_per_patch"] == 17
    assert row["total_qubits"] == 170
    assert row["ls_cnot_qubits"] == 51
    assert row["transversal_cnot_qubits"] == 34
    assert row["ls_over_transversal"] == 1.5
    assert row["groups_needed"] == 3


def test_all_states_are_accepted():
    layout = build_layout(1, 3)
    for state in STATES:
        assert gen_memory(layout, state=state).count("OBSERVABLE") == 1
