import math
from dataclasses import replace

import pytest

from src.benchmarks import LogicalProgram, gen_distill_15to1, gen_ghz, make_benchmark
from src.exceptions import CapacityError, ContractError, UsageError
from src.routing_sim import (
    CSV_COLUMNS, DATA, FACTORY, MODES, RoutingState, TimingParams, audit_capacity,
    audit_movement, build_device_layout, estimate_compute_time, map_qubits, normalize_mode,
    route_rows, route_slice, schedule_asap, sensitivity_sweep, simulate, space_overhead,
)


def _cnot_program(n=2):
    prog = LogicalProgram(n)
    prog.add("CNOT", 0, 1)
    return prog


def test_timing_params():
    timing = TimingParams(d=3, k=16)
    assert timing.t_round == 1e4 + 4 * 16 * 5 + 3
    assert timing.tile_pitch == 3 * 50.0
    assert timing.for_group_size(1).t_round == 1e4 + 20 + 3


def test_mode_aliases():
    assert normalize_mode("ils") == "interleaved_ls"
    assert normalize_mode("sls") == "standard_ls"
    assert normalize_mode("movement") == "movement"
    with pytest.raises(UsageError):
        normalize_mode("teleport")


def test_layout_shapes():
    compact = build_device_layout("compact", 16, 1)
    fast = build_device_layout("fast", 16, 1)
    assert len(compact.data_tiles) == len(fast.data_tiles) == 16
    assert compact.count(DATA) == 16
    assert compact.factories and all(compact.tile(f) == FACTORY for f in compact.factories)
    assert space_overhead(fast) > space_overhead(compact)
    assert compact.to_text().count("\n") == compact.height


def test_layout_errors():
    with pytest.raises(UsageError):
        build_device_layout("ring", 4, 1)
    with pytest.raises(ContractError):
        build_device_layout("compact", 4, 2)


def test_mapping_keeps_partners_together():
    layout = build_device_layout("compact", 4, 4)
    mapping = map_qubits({(0, 3): 5, (1, 2): 1}, 4, layout)
    assert mapping[0] == mapping[3]
    with pytest.raises(CapacityError):
        map_qubits({}, 5, build_device_layout("compact", 2, 1))


def test_schedule_asap():
    assert schedule_asap(gen_ghz(4)) == [[0], [1], [2], [3]]


def test_same_group_cnot_is_transversal():
    timing = TimingParams(d=3, k=16)
    total, relative, _ = estimate_compute_time(_cnot_program(), "compact", "interleaved_ls", timing)
    assert math.isclose(total, 3 * timing.t_round)
    baseline = 2 * 3 * timing.for_group_size(1).t_round
    assert math.isclose(relative, total / baseline)


def test_movement_cnot_between_tiles():
    timing = TimingParams(d=3, k=1)
    layout = build_device_layout("compact", 2, 1)
    travel = 2 * 1 * timing.tile_pitch / timing.speed
    moved = simulate(_cnot_program(), layout, "movement", timing)
    assert math.isclose(moved.total_us, travel + 3 * timing.t_round)
    assert moved.moves == 1
    hybrid = simulate(_cnot_program(), layout, "hybrid", timing)
    assert math.isclose(hybrid.total_us, moved.total_us)
    routed = simulate(_cnot_program(), layout, "interleaved_ls", timing)
    assert math.isclose(routed.total_us, 2 * 3 * timing.t_round)


def test_t_gate_costs():
    prog = LogicalProgram(1)
    prog.add("T", 0)
    timing = TimingParams(d=3, k=1)
    layout = build_device_layout("compact", 1, 1)
    routed = simulate(prog, layout, "interleaved_ls", timing)
    assert math.isclose(routed.total_us, 2 * 3 * timing.t_round)
    moved = simulate(prog, layout, "movement", timing)
    travel = 2 * 2 * timing.tile_pitch / timing.speed
    assert math.isclose(moved.total_us, travel + 3 * timing.t_round)
    assert moved.moves == 1 and moved.total_us < routed.total_us
    hybrid = simulate(prog, layout, "hybrid", timing)
    assert math.isclose(hybrid.total_us, moved.total_us)


def test_one_qubit_cliffords_are_free():
    prog = LogicalProgram(1)
    prog.add("H", 0)
    prog.add("S", 0)
    result = simulate(prog, build_device_layout("compact", 1, 1), "standard_ls", TimingParams(d=3))
    assert result.total_us == 0.0
    assert [e.kind for e in result.events] == ["H", "S"]


def test_unsynthesized_program_rejected():
    prog = LogicalProgram(1)
    prog.add("RZ", 0, angle=0.3)
    with pytest.raises(ContractError):
        simulate(prog, build_device_layout("compact", 1, 1), "movement", TimingParams(d=3))


@pytest.mark.parametrize("mode", MODES)
def test_event_logs_pass_audits(mode):
    timing = TimingParams(d=3, k=4)
    program = make_benchmark("qft:8", epsilon=1e-3)
    layout = build_device_layout("compact", program.n, timing.k)
    result = simulate(program, layout, mode, timing)
    capacity = 1 if mode == "standard_ls" else timing.k
    assert audit_capacity(result.events, capacity) == []
    assert audit_movement(result.events) == []
    finished = {e.gate for e in result.events if e.kind != "MOVE"}
    assert finished == set(range(len(program.gates)))


def test_standard_ls_postpones_under_contention():
    timing = TimingParams(d=3, k=1)
    prog = LogicalProgram(8)
    for q in range(4):
        prog.add("CNOT", q, 7 - q)
    result = simulate(prog, build_device_layout("compact", 8, 1), "standard_ls", timing)
    assert result.postponed > 0
    assert result.steps > 1


@pytest.mark.parametrize("layout_kind", ["compact", "fast"])
def test_distillation_fits_one_group(layout_kind):
    timing = TimingParams(d=9, k=16)
    _, relative, result = estimate_compute_time(gen_distill_15to1(), layout_kind,
                                                "interleaved_ls", timing)
    assert 0.30 <= relative <= 0.60
    assert result.routed_cnots == 0
    assert result.moves == 0 and result.postponed == 0


def _qft_times(n, timing, modes):
    program = make_benchmark(f"qft:{n}", epsilon=1e-3)
    layout = build_device_layout("compact", n, timing.k)
    mapping = map_qubits(program.interaction_graph(), n, layout)
    return [simulate(program, layout, mode, timing, mapping, record=False).total_us
            for mode in modes]


def test_movement_wins_small_qft_and_loses_large_qft():
    timing = TimingParams(d=9, k=16)
    gaps = []
    for n in (8, 16, 32, 64, 96):
        moved, routed = _qft_times(n, timing, ("movement", "interleaved_ls"))
        gaps.append(moved - routed)
    assert gaps[0] < 0 < gaps[-1]
    slower = [gap > 0 for gap in gaps]
    assert sum(a != b for a, b in zip(slower, slower[1:])) == 1


def _relative(program, mode, timing):
    return estimate_compute_time(program, "compact", mode, timing)[1]


def test_movement_sensitivity_directions():
    program = make_benchmark("qft:8", epsilon=1e-3)
    timing = TimingParams(d=9, k=16)
    base = _relative(program, "movement", timing)
    assert _relative(program, "movement", replace(timing, t_meas=timing.t_meas / 10)) > base
    assert _relative(program, "movement", replace(timing, speed=timing.speed * 10)) < base


def test_group_size_nine_is_almost_as_good_as_sixteen():
    program = make_benchmark("qft:8", epsilon=1e-3)
    timing = TimingParams(d=9, k=16)
    sixteen = _relative(program, "interleaved_ls", timing)
    nine = _relative(program, "interleaved_ls", timing.for_group_size(9))
    assert abs(sixteen / nine - 1) < 0.10


def test_route_rows_and_sweep():
    program = make_benchmark("ghz:8")
    rows = route_rows("ghz:8", program, ["compact", "fast"], ["ils", "movement"],
                      TimingParams(d=3, k=4), seed=1)
    assert len(rows) == 4
    assert all(list(row) == CSV_COLUMNS for row in rows)
    assert {row["mode"] for row in rows} == {"interleaved_ls", "movement"}

    sweep = sensitivity_sweep("t_meas", [1e3, 1e5], "ghz:8", program, "compact",
                              TimingParams(d=3, k=4))
    assert [row["t_meas_us"] for row in sweep] == [1e3, 1e3, 1e5, 1e5]
    with pytest.raises(UsageError):
        sensitivity_sweep("d", [3], "ghz:8", program, "compact", TimingParams(d=3))


def _crossing_slice(mode):
    # quatro grupos 2x2; os dois CNOTs só têm caminho pela borda esquerda/inferior
    layout = build_device_layout("compact", 16, 4)
    mapping = {0: (2, 1), 1: (3, 2), 2: (2, 2), 3: (3, 1)}
    prog = LogicalProgram(4)
    prog.add("CNOT", 0, 1)
    prog.add("CNOT", 2, 3)
    state = RoutingState.for_layout(layout, mapping)
    return route_slice([0, 1], prog, layout, mode, TimingParams(d=3, k=4), state), state


def test_route_slice_shares_tiles_when_interleaved():
    (events, finished, postponed), state = _crossing_slice("interleaved_ls")
    assert finished == [0, 1] and postponed == []
    assert state.routed == 2
    assert set(events[0].path) & set(events[1].path)


def test_route_slice_postpones_in_standard_mode():
    (events, finished, postponed), state = _crossing_slice("standard_ls")
    assert finished == [0] and postponed == [1]
    assert state.postponed == 1
    assert events[0].path == ((2, 0), (3, 0), (4, 0), (4, 1), (4, 2))


def test_route_slice_serializes_the_movement_channel():
    (events, finished, _), state = _crossing_slice("movement")
    moves = [e for e in events if e.kind == "MOVE"]
    assert finished == [0, 1] and len(moves) == 2
    assert moves[1].start == moves[0].end
    assert state.channel_free == moves[1].end
