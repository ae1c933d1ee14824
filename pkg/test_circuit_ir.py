import numpy as np
import pytest

from src.circuit_ir import (
    Circuit, CircuitBuilder, Instruction, detector_count, observable_count, parities,
    parse_circuit, reference_sample,
)
from src.exceptions import ContractError, ParseError

REPETITION = """
# código de repetição de 3 qubits, uma rodada
RESET 0 1 2 3 4
TICK(1)
CX 0 3
CX 1 3
CX 1 4
CX 2 4
TICK(10)
MZ 3 4
MZ 0 1 2
DETECTOR rec[-5]
DETECTOR rec[-4]
OBSERVABLE(0) rec[-1]
"""


def test_parse_and_emit_are_stable():
    circuit = parse_circuit(REPETITION)
    assert circuit.n_qubits == 5
    assert circuit.num_measurements == 5
    again = parse_circuit(circuit.to_text())
    assert again.instructions == circuit.instructions
    assert again.to_text() == circuit.to_text()


def test_record_bookkeeping():
    circuit = parse_circuit(REPETITION)
    assert detector_count(circuit) == 2
    assert observable_count(circuit) == 1
    assert circuit.detector_records() == [[0], [1]]
    assert circuit.observable_records() == [[4]]


def test_tick_durations():
    circuit = parse_circuit(REPETITION)
    assert sum(i.duration for i in circuit.instructions) == 11.0


def test_reference_sample_is_deterministic():
    circuit = parse_circuit(REPETITION)
    ref = reference_sample(circuit)
    assert ref.tolist() == [0, 0, 0, 0, 0]
    assert parities(circuit.detector_records(), ref).tolist() == [0, 0]


@pytest.mark.parametrize("text", [
    "FOO 1",
    "CX 0",
    "CX 1 1",
    "DEPOL1(1.5) 0",
    "MZ 0\nDETECTOR rec[-2]",
    "H rec[-1]",
    "PAULI_CHANNEL(0.5,0.5,0.5) 0",
    "TICK(-1)",
    "H x",
])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_circuit(text)


def test_parse_error_reports_line():
    with pytest.raises(ParseError) as info:
        parse_circuit("H 0\nMZ 0\nDETECTOR rec[-3]\n")
    assert info.value.line == 3


def test_explicit_qubit_count_validates_targets():
    with pytest.raises(ParseError):
        parse_circuit("H 4", n_qubits=3)
    assert parse_circuit("H 1", n_qubits=3).n_qubits == 3


def test_builder_uses_relative_records():
    b = CircuitBuilder(2)
    b.append("H", [0])
    first = b.measure("MX", [0])
    second = b.measure("MZ", [0, 1])
    b.detector(first + second[:1])
    b.observable(0, second[1:])
    circuit = b.build()
    assert circuit.detector_records() == [[0, 1]]
    assert circuit.observable_records() == [[2]]
    with pytest.raises(ContractError):
        b.detector([])


def test_builder_drops_empty_gates():
    b = CircuitBuilder(1)
    b.append("H", [])
    b.tick(3.0)
    assert [i.name for i in b.build().instructions] == ["TICK"]


def test_circuit_validation_on_construction():
    with pytest.raises(ParseError):
        Circuit(1, (Instruction("CZ", (0, 1)),))


def test_parities_helper():
    bits = np.array([1, 0, 1, 1], dtype=np.uint8)
    assert parities([[0, 2], [1], [0, 2, 3], []], bits).tolist() == [0, 0, 1, 0]
