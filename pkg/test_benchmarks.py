import math

import networkx as nx
import pytest

from src.benchmarks import (
    BENCHMARKS, LogicalProgram, emit_program, gen_bv, gen_distill_15to1, gen_ghz, gen_grover,
    gen_qaoa, gen_qft, make_benchmark, parse_program, rotation_t_count, synthesize_rotations,
)
from src.exceptions import ContractError, ParseError, UsageError


def test_bv_structure():
    prog = gen_bv(4, 0b1010)
    assert prog.n == 5
    assert prog.count("CNOT") == 2
    assert prog.interaction_graph() == {(1, 4): 1, (3, 4): 1}
    with pytest.raises(ContractError):
        gen_bv(3, 8)


def test_ghz_chain():
    prog = gen_ghz(6)
    assert prog.count("CNOT") == 5
    assert prog.count("H") == 1
    assert prog.is_clifford_t


def test_qft_counts():
    n = 5
    prog = gen_qft(n)
    pairs = n * (n - 1) // 2
    assert prog.count("CNOT") == 2 * pairs + 3 * (n // 2)
    assert prog.count("RZ") == 3 * pairs
    assert not prog.is_clifford_t


def test_grover_toffoli_ladder():
    n = 5
    prog = gen_grover(n, iterations=2)
    assert prog.n == 2 * n - 2
    toffolis = 2 * 2 * (n - 2)
    assert prog.t_count == 7 * toffolis
    assert prog.is_clifford_t
    with pytest.raises(ContractError):
        gen_grover(2)


def test_qaoa_per_edge_gates():
    graph = nx.cycle_graph(5)
    prog = gen_qaoa(graph, p_layers=2)
    assert prog.count("CNOT") == 2 * 2 * 5
    assert prog.count("RZ") == 2 * (5 + 5)


def test_distillation_counts():
    prog = gen_distill_15to1()
    assert prog.n == 16
    assert prog.count("CNOT") == 34
    assert prog.t_count == 15
    assert prog.is_clifford_t


def test_rotation_length():
    assert rotation_t_count(1e-10) == math.ceil(3 * math.log2(1e10))
    assert rotation_t_count(0.5) == 3
    with pytest.raises(ContractError):
        rotation_t_count(0.0)


def test_synthesis_of_exact_and_generic_angles():
    prog = LogicalProgram(1)
    prog.add("RZ", 0, angle=math.pi / 2)
    prog.add("RZ", 0, angle=math.pi / 4)
    prog.add("RZ", 0, angle=0.3)
    out = synthesize_rotations(prog, epsilon=1e-3)
    length = rotation_t_count(1e-3)
    assert out.count("S") == 1
    assert out.t_count == 1 + length
    assert out.count("H") == length
    assert out.is_clifford_t


def test_tiny_rotations_still_cost_a_full_sequence():
    prog = LogicalProgram(1)
    prog.add("RZ", 0, angle=math.pi / 2 ** 40)
    prog.add("RZ", 0, angle=0.0)
    out = synthesize_rotations(prog, epsilon=1e-3)
    assert out.t_count == rotation_t_count(1e-3)


def test_long_range_qft_rotations_are_synthesized():
    n = 40
    prog = make_benchmark(f"qft:{n}", epsilon=1e-3)
    generic = (n - 1) * (n - 2) // 2
    assert prog.t_count == 3 * generic * rotation_t_count(1e-3) + 3 * (n - 1)


def test_program_text_format():
    prog = make_benchmark("qft:4", epsilon=1e-4)
    again = parse_program(emit_program(prog))
    assert again.n == prog.n
    assert again.name == prog.name
    assert again.gates == prog.gates


def test_parse_program_errors():
    with pytest.raises(ParseError):
        parse_program("CNOT 1\n")
    with pytest.raises(ParseError):
        parse_program("FOO 1\n")
    with pytest.raises(ParseError):
        parse_program("# qubits 2\nH 3\n")
    assert parse_program("RZ(0.5) 2\n").gates[0].angle == 0.5


def test_program_rejects_bad_gates():
    prog = LogicalProgram(2)
    with pytest.raises(ContractError):
        prog.add("H", 2)
    with pytest.raises(ContractError):
        prog.add("CNOT", 1, 1)


@pytest.mark.parametrize("name", BENCHMARKS)
def test_catalogue_produces_clifford_t(name):
    label = name if name == "distill15" else f"{name}:6"
    prog = make_benchmark(label, epsilon=1e-4, seed=3)
    assert prog.is_clifford_t
    assert prog.n >= 6


def test_catalogue_errors():
    with pytest.raises(UsageError):
        make_benchmark("shor:8")
    with pytest.raises(UsageError):
        make_benchmark("qft")
