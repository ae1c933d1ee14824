"""
Representação de circuitos físicos e formato texto.

Formato: uma instrução por linha, ``MNEMONICO(args) alvos...``; ``#`` inicia
comentário; ``rec[-k]`` referencia a k-ésima medição mais recente.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.exceptions import ContractError, ParseError
from src.pauli_core import simulate_tableau

logger = logging.getLogger(__name__)

ONE_QUBIT_GATES = ("H", "S", "X", "Z")
TWO_QUBIT_GATES = ("CX", "CZ")
MEASUREMENTS = ("MZ", "MX")
NOISE = ("DEPOL1", "DEPOL2", "PAULI_CHANNEL", "MFLIP")
ANNOTATIONS = ("DETECTOR", "OBSERVABLE", "TICK")

KNOWN = ONE_QUBIT_GATES + TWO_QUBIT_GATES + MEASUREMENTS + ("RESET",) + NOISE + ANNOTATIONS

# Número de argumentos entre parênteses por mnemônico
_ARG_COUNT = {
    "DEPOL1": 1, "DEPOL2": 1, "MFLIP": 1, "PAULI_CHANNEL": 3,
    "OBSERVABLE": 1, "TICK": 1,
}


@dataclass(frozen=True)
class Instruction:
    """
    Instrução do circuito.

    ``targets`` são índices de qubits, exceto em DETECTOR/OBSERVABLE, onde
    são offsets negativos no registro de medições. ``args`` guarda
    probabilidades, o id do observável ou a duração do TICK.
    """
    name: str
    targets: Tuple[int, ...] = ()
    args: Tuple[float, ...] = ()

    @property
    def duration(self) -> float:
        """Duração em µs; só TICK carrega tempo"""
        return float(self.args[0]) if self.name == "TICK" and self.args else 0.0

    @property
    def is_noise(self) -> bool:
        return self.name in NOISE

    def to_text(self) -> str:
        head = self.name
        if self.args:
            head += "(" + ",".join(_fmt_number(a) for a in self.args) + ")"
        if self.name in ("DETECTOR", "OBSERVABLE"):
            body = [f"rec[{t}]" for t in self.targets]
        else:
            body = [str(t) for t in self.targets]
        return " ".join([head] + body)


def _fmt_number(value: float) -> str:
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    instructions: Tuple[Instruction, ...] = ()
    labels: Dict[int, str] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        validate(self)

    # --- contagens -----------------------------------------------------
    @property
    def num_measurements(self) -> int:
        return sum(len(i.targets) for i in self.instructions if i.name in MEASUREMENTS)

    def count(self, name: str) -> int:
        return sum(1 for i in self.instructions if i.name == name)

    @property
    def has_noise(self) -> bool:
        return any(i.is_noise for i in self.instructions)

    def without_noise(self) -> "Circuit":
        return Circuit(self.n_qubits,
                       tuple(i for i in self.instructions if not i.is_noise),
                       dict(self.labels))

    def to_text(self) -> str:
        return emit_circuit(self)

    def detector_records(self) -> List[List[int]]:
        """Índices absolutos das medições de cada detector"""
        return _absolute_records(self, "DETECTOR")

    def observable_records(self) -> List[List[int]]:
        """Índices absolutos por observável (ids agregados)"""
        per_id: Dict[int, List[int]] = {}
        seen = 0
        for inst in self.instructions:
            if inst.name in MEASUREMENTS:
                seen += len(inst.targets)
            elif inst.name == "OBSERVABLE":
                obs = int(inst.args[0])
                per_id.setdefault(obs, []).extend(seen + t for t in inst.targets)
        if not per_id:
            return []
        return [per_id.get(i, []) for i in range(max(per_id) + 1)]


def _absolute_records(circuit: Circuit, kind: str) -> List[List[int]]:
    result = []
    seen = 0
    for inst in circuit.instructions:
        if inst.name in MEASUREMENTS:
            seen += len(inst.targets)
        elif inst.name == kind:
            result.append([seen + t for t in inst.targets])
    return result


def validate(circuit: Circuit) -> None:
    """Verifica alvos, probabilidades e referências de medição"""
    measured = 0
    for number, inst in enumerate(circuit.instructions, start=1):
        _validate_instruction(inst, circuit.n_qubits, measured, number)
        if inst.name in MEASUREMENTS:
            measured += len(inst.targets)


def _validate_instruction(inst: Instruction, n_qubits: int, measured: int, line: int) -> None:
    name = inst.name
    if name not in KNOWN:
        raise ParseError(f"mnemônico desconhecido: {name}", line)
    expected_args = _ARG_COUNT.get(name, 0)
    if name == "TICK" and not inst.args:
        expected_args = 0
    if len(inst.args) != expected_args:
        raise ParseError(f"{name} espera {expected_args} argumento(s)", line)

    if name in ("DETECTOR", "OBSERVABLE"):
        for t in inst.targets:
            if t >= 0 or -t > measured:
                raise ParseError(f"referência rec[{t}] para medição inexistente", line)
        return

    if name in NOISE:
        for p in inst.args:
            if not 0.0 <= p <= 1.0:
                raise ParseError(f"probabilidade fora de [0, 1]: {p}", line)
        if name == "PAULI_CHANNEL" and sum(inst.args) > 1.0 + 1e-12:
            raise ParseError("soma das probabilidades do canal excede 1", line)
    if name == "TICK":
        if inst.args and inst.args[0] < 0:
            raise ParseError("duração negativa", line)
        return

    for t in inst.targets:
        if not 0 <= t < n_qubits:
            raise ParseError(f"qubit {t} fora do intervalo [0, {n_qubits})", line)
    if name in TWO_QUBIT_GATES or name == "DEPOL2":
        if len(inst.targets) != 2 or inst.targets[0] == inst.targets[1]:
            raise ParseError(f"{name} precisa de exatamente 2 alvos distintos", line)


# ----------------------------------------------------------------------
# Texto
# ----------------------------------------------------------------------
def parse_circuit(text: str, n_qubits: Optional[int] = None) -> Circuit:
    """
    Lê o formato texto.

    Args:
        text: circuito em texto
        n_qubits: número de qubits; por padrão 1 + maior índice usado

    Returns:
        Circuit validado
    """
    instructions: List[Instruction] = []
    max_target = -1
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        inst = _parse_line(line, number)
        if inst.name not in ("DETECTOR", "OBSERVABLE") and inst.targets:
            max_target = max(max_target, max(inst.targets))
        instructions.append(inst)

    size = n_qubits if n_qubits is not None else max_target + 1
    measured = 0
    for number, inst in enumerate(instructions, start=1):
        _validate_instruction(inst, size, measured, number)
        if inst.name in MEASUREMENTS:
            measured += len(inst.targets)
    return Circuit(size, tuple(instructions))


def _parse_line(line: str, number: int) -> Instruction:
    tokens = line.split()
    head = tokens[0]
    args: Tuple[float, ...] = ()
    if "(" in head:
        if not head.endswith(")"):
            raise ParseError(f"argumentos malformados: {head}", number)
        name, arg_text = head[:-1].split("(", 1)
        try:
            args = tuple(float(a) for a in arg_text.split(",") if a.strip())
        except ValueError:
            raise ParseError(f"argumento não numérico: {arg_text}", number)
    else:
        name = head
    name = name.upper()
    if name not in KNOWN:
        raise ParseError(f"mnemônico desconhecido: {name}", number)

    targets: List[int] = []
    for token in tokens[1:]:
        if token.startswith("rec[") and token.endswith("]"):
            if name not in ("DETECTOR", "OBSERVABLE"):
                raise ParseError(f"rec[] só vale em DETECTOR/OBSERVABLE", number)
            value = token[4:-1]
        else:
            if name in ("DETECTOR", "OBSERVABLE"):
                raise ParseError(f"{name} aceita apenas rec[-k]", number)
            value = token
        try:
            targets.append(int(value))
        except ValueError:
            raise ParseError(f"alvo inválido: {token}", number)
    return Instruction(name, tuple(targets), args)


def emit_circuit(circuit: Circuit) -> str:
    return "\n".join(inst.to_text() for inst in circuit.instructions) + (
        "\n" if circuit.instructions else "")


# ----------------------------------------------------------------------
# Referência e contagens
# ----------------------------------------------------------------------
def reference_sample(circuit: Circuit) -> np.ndarray:
    """Resultado sem ruído de cada medição; aleatórios fixados em 0"""
    return simulate_tableau(circuit, pinned=True)


def detector_count(circuit: Circuit) -> int:
    return circuit.count("DETECTOR")


def observable_count(circuit: Circuit) -> int:
    ids = {int(i.args[0]) for i in circuit.instructions if i.name == "OBSERVABLE"}
    return len(ids)


def parities(records: Sequence[Sequence[int]], bits: np.ndarray) -> np.ndarray:
    """Paridade de cada conjunto de índices sobre um vetor de bits"""
    return np.array([int(np.bitwise_xor.reduce(bits[list(r)])) if r else 0 for r in records],
                    dtype=np.uint8)


class CircuitBuilder:
    """Acumulador de instruções com contagem do registro de medições"""

    def __init__(self, n_qubits: int = 0):
        self.n_qubits = n_qubits
        self.instructions: List[Instruction] = []
        self.labels: Dict[int, str] = {}
        self.measurements = 0

    def append(self, name: str, targets: Iterable[int] = (), args: Sequence[float] = ()) -> None:
        targets = tuple(int(t) for t in targets)
        if name not in ANNOTATIONS and not targets:
            return
        self.instructions.append(Instruction(name, targets, tuple(float(a) for a in args)))
        if name in MEASUREMENTS:
            self.measurements += len(targets)

    def measure(self, name: str, qubits: Sequence[int]) -> List[int]:
        """Emite medições e devolve seus índices absolutos"""
        start = self.measurements
        self.append(name, qubits)
        return list(range(start, start + len(qubits)))

    def tick(self, duration: float) -> None:
        self.append("TICK", (), (duration,))

    def detector(self, records: Iterable[int]) -> None:
        records = sorted(set(records))
        if not records:
            raise ContractError("detector sem medições")
        self.append("DETECTOR", [r - self.measurements for r in records])

    def observable(self, obs_id: int, records: Iterable[int]) -> None:
        self.append("OBSERVABLE", [r - self.measurements for r in sorted(records)], (obs_id,))

    def build(self) -> Circuit:
        return Circuit(self.n_qubits, tuple(self.instructions), dict(self.labels))
