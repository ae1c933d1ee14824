"""
Programas de benchmark Clifford+T e modelo de síntese de rotações.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from src.exceptions import ContractError, ParseError, UsageError

logger = logging.getLogger(__name__)

CLIFFORD_T = ("H", "S", "T", "CNOT")
GATE_ARITY = {"H": 1, "S": 1, "T": 1, "RZ": 1, "CNOT": 2}
QUARTER_PI = math.pi / 4


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: Tuple[int, ...]
    angle: Optional[float] = None

    def to_text(self) -> str:
        head = f"RZ({self.angle:.8f})" if self.name == "RZ" else self.name
        return " ".join([head] + [str(q) for q in self.qubits])


@dataclass
class LogicalProgram:
    """Programa lógico: lista ordenada de portas sobre n qubits"""
    n: int
    gates: List[Gate] = field(default_factory=list)
    name: str = ""

    def add(self, name: str, *qubits: int, angle: Optional[float] = None) -> None:
        for q in qubits:
            if not 0 <= q < self.n:
                raise ContractError(f"qubit {q} fora de [0, {self.n})")
        if name == "CNOT" and qubits[0] == qubits[1]:
            raise ContractError("CNOT com controle igual ao alvo")
        self.gates.append(Gate(name, tuple(qubits), angle))

    def count(self, name: str) -> int:
        return sum(1 for g in self.gates if g.name == name)

    @property
    def t_count(self) -> int:
        return self.count("T")

    @property
    def is_clifford_t(self) -> bool:
        return all(g.name in CLIFFORD_T for g in self.gates)

    def interaction_graph(self) -> Counter:
        """Contagem de CNOTs por par não ordenado"""
        pairs: Counter = Counter()
        for g in self.gates:
            if g.name == "CNOT":
                a, b = g.qubits
                pairs[(min(a, b), max(a, b))] += 1
        return pairs


# ----------------------------------------------------------------------
# Blocos
# ----------------------------------------------------------------------
def _x(prog: LogicalProgram, q: int) -> None:
    # X = H·S·S·H
    for name in ("H", "S", "S", "H"):
        prog.add(name, q)


def _tdag(prog: LogicalProgram, q: int) -> None:
    # T† = S·S·S·T
    for name in ("S", "S", "S", "T"):
        prog.add(name, q)


def _toffoli(prog: LogicalProgram, a: int, b: int, c: int) -> None:
    """Decomposição padrão: 7 T, 6 CNOT e Cliffords"""
    prog.add("H", c)
    prog.add("CNOT", b, c)
    _tdag(prog, c)
    prog.add("CNOT", a, c)
    prog.add("T", c)
    prog.add("CNOT", b, c)
    _tdag(prog, c)
    prog.add("CNOT", a, c)
    prog.add("T", b)
    prog.add("T", c)
    prog.add("H", c)
    prog.add("CNOT", a, b)
    prog.add("T", a)
    _tdag(prog, b)
    prog.add("CNOT", a, b)


def _cz(prog: LogicalProgram, a: int, b: int) -> None:
    prog.add("H", b)
    prog.add("CNOT", a, b)
    prog.add("H", b)


def _mcx(prog: LogicalProgram, controls: Sequence[int], target: int,
         ancillas: Sequence[int]) -> None:
    """
    Escada de Toffolis com ancillas limpas; a desalocação das ancillas é por
    medição em X com correção CZ (sem T).
    """
    if len(controls) == 1:
        prog.add("CNOT", controls[0], target)
        return
    if len(controls) == 2:
        _toffoli(prog, controls[0], controls[1], target)
        return
    needed = len(controls) - 1
    if len(ancillas) < needed:
        raise ContractError(f"MCX com {len(controls)} controles precisa de {needed} ancillas")
    chain = [ancillas[0]]
    _toffoli(prog, controls[0], controls[1], ancillas[0])
    for i, ctrl in enumerate(controls[2:], start=1):
        _toffoli(prog, ctrl, chain[-1], ancillas[i])
        chain.append(ancillas[i])
    prog.add("CNOT", chain[-1], target)
    # desalocação por medição: H na ancilla e CZ de correção entre seus controles
    firsts = [controls[1]] + chain[:-1]
    for i in reversed(range(len(chain))):
        prog.add("H", chain[i])
        _cz(prog, controls[i + 1] if i > 0 else controls[0], firsts[i])


def _cphase(prog: LogicalProgram, theta: float, control: int, target: int) -> None:
    """CP(θ) = 2 CNOT + 3 RZ"""
    prog.add("RZ", control, angle=theta / 2)
    prog.add("CNOT", control, target)
    prog.add("RZ", target, angle=-theta / 2)
    prog.add("CNOT", control, target)
    prog.add("RZ", target, angle=theta / 2)


def _swap(prog: LogicalProgram, a: int, b: int) -> None:
    prog.add("CNOT", a, b)
    prog.add("CNOT", b, a)
    prog.add("CNOT", a, b)


# ----------------------------------------------------------------------
# Geradores
# ----------------------------------------------------------------------
def gen_bv(n: int, secret: int) -> LogicalProgram:
    """Bernstein-Vazirani: n qubits de entrada (bit i do segredo = qubit i) e um alvo"""
    if n < 1:
        raise ContractError("n deve ser >= 1")
    if not 0 <= secret < 2 ** n:
        raise ContractError(f"segredo {secret} não cabe em {n} bits")
    prog = LogicalProgram(n + 1, name=f"bv:{n}")
    target = n
    _x(prog, target)
    for q in range(n + 1):
        prog.add("H", q)
    for q in range(n):
        if (secret >> q) & 1:
            prog.add("CNOT", q, target)
    for q in range(n):
        prog.add("H", q)
    return prog


def gen_ghz(n: int) -> LogicalProgram:
    if n < 1:
        raise ContractError("n deve ser >= 1")
    prog = LogicalProgram(n, name=f"ghz:{n}")
    prog.add("H", 0)
    for q in range(n - 1):
        prog.add("CNOT", q, q + 1)
    return prog


def gen_qft(n: int) -> LogicalProgram:
    """QFT padrão com CP decompostos e trocas finais como triplas de CNOT"""
    if n < 1:
        raise ContractError("n deve ser >= 1")
    prog = LogicalProgram(n, name=f"qft:{n}")
    for j in range(n):
        prog.add("H", j)
        for m in range(j + 1, n):
            _cphase(prog, math.pi / 2 ** (m - j), m, j)
    for i in range(n // 2):
        _swap(prog, i, n - 1 - i)
    return prog


def gen_grover(n: int, iterations: int = 2) -> LogicalProgram:
    """
    Grover sobre n qubits (n >= 3) com n-2 ancillas; oráculo marca |1...1>.
    Cada iteração tem dois MCX (oráculo e difusor).
    """
    if n < 3:
        raise ContractError("Grover exige n >= 3")
    if iterations < 1:
        raise ContractError("iterations deve ser >= 1")
    register = list(range(n))
    ancillas = list(range(n, 2 * n - 2))
    prog = LogicalProgram(2 * n - 2, name=f"grover:{n}")
    for q in register:
        prog.add("H", q)
    target = register[-1]
    for _ in range(iterations):
        # oráculo: MCZ = H·MCX·H no último qubit
        prog.add("H", target)
        _mcx(prog, register[:-1], target, ancillas)
        prog.add("H", target)
        # difusor
        for q in register:
            prog.add("H", q)
            _x(prog, q)
        prog.add("H", target)
        _mcx(prog, register[:-1], target, ancillas)
        prog.add("H", target)
        for q in register:
            _x(prog, q)
            prog.add("H", q)
    return prog


def default_qaoa_graph(n: int, seed: int = 0) -> nx.Graph:
    """Grafo 3-regular aleatório (n par >= 4) ou ciclo"""
    if n >= 4 and n % 2 == 0:
        return nx.random_regular_graph(3, n, seed=seed)
    return nx.cycle_graph(n)


def gen_qaoa(graph: nx.Graph, p_layers: int = 1, gamma: float = 0.3,
             beta: float = 0.7) -> LogicalProgram:
    """QAOA MaxCut: CNOT-RZ(γ)-CNOT por aresta e RX(β) = H·RZ·H por nó"""
    nodes = sorted(graph.nodes)
    index = {node: i for i, node in enumerate(nodes)}
    prog = LogicalProgram(len(nodes), name=f"qaoa:{len(nodes)}")
    for q in range(prog.n):
        prog.add("H", q)
    for _ in range(p_layers):
        for u, v in sorted((min(index[a], index[b]), max(index[a], index[b]))
                           for a, b in graph.edges):
            prog.add("CNOT", u, v)
            prog.add("RZ", v, angle=gamma)
            prog.add("CNOT", u, v)
        for q in range(prog.n):
            prog.add("H", q)
            prog.add("RZ", q, angle=beta)
            prog.add("H", q)
    return prog


def gen_distill_15to1() -> LogicalProgram:
    """
    Destilação 15-para-1: qubit 0 de entrada e 15 qubits rotulados pelos
    inteiros 1..15 (código de Reed-Muller perfurado), 34 CNOTs e 15 T.
    """
    prog = LogicalProgram(16, name="distill15")
    generators = (1, 2, 4, 8)
    for g in generators:
        prog.add("H", g)
    for label in (3, 5, 6, 9, 10, 12):
        prog.add("CNOT", 0, label)
    for g in generators:
        for label in range(1, 16):
            if label != g and label & g:
                prog.add("CNOT", g, label)
    for label in range(1, 16):
        prog.add("T", label)
    return prog


# ----------------------------------------------------------------------
# Síntese
# ----------------------------------------------------------------------
def rotation_t_count(epsilon: float) -> int:
    """L(ε) = ceil(3·log2(1/ε))"""
    if not 0 < epsilon < 1:
        raise ContractError("epsilon deve estar em (0, 1)")
    return math.ceil(3 * math.log2(1 / epsilon))


def _exact_eighth(theta: float) -> Optional[int]:
    """Múltiplo de π/4 (mod 8) ou None; ângulos minúsculos não nulos são genéricos"""
    m = theta / QUARTER_PI
    nearest = round(m)
    if nearest == 0:
        return 0 if theta == 0 else None
    if abs(m - nearest) < 1e-9:
        return nearest % 8
    return None


def synthesize_rotations(program: LogicalProgram, epsilon: float = 1e-10) -> LogicalProgram:
    """
    Substitui cada RZ: múltiplos de π/4 viram produtos exatos de S e T;
    ângulos genéricos viram L(ε) T's alternados com H.
    """
    length = rotation_t_count(epsilon)
    out = LogicalProgram(program.n, name=program.name)
    for g in program.gates:
        if g.name != "RZ":
            out.gates.append(g)
            continue
        q = g.qubits[0]
        eighth = _exact_eighth(g.angle)
        if eighth is not None:
            for _ in range(eighth // 2):
                out.add("S", q)
            if eighth % 2:
                out.add("T", q)
            continue
        for _ in range(length):
            out.add("T", q)
            out.add("H", q)
    return out


# ----------------------------------------------------------------------
# Formato texto
# ----------------------------------------------------------------------
def emit_program(program: LogicalProgram) -> str:
    lines = [f"# qubits {program.n}"]
    if program.name:
        lines.append(f"# name {program.name}")
    lines += [g.to_text() for g in program.gates]
    return "\n".join(lines) + "\n"


def parse_program(text: str) -> LogicalProgram:
    """Lê o formato ``CNOT 3 7`` / ``T 2`` / ``RZ(0.19634954) 5``"""
    declared: Optional[int] = None
    name = ""
    gates: List[Gate] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "qubits":
                declared = int(parts[1])
            elif len(parts) == 2 and parts[0] == "name":
                name = parts[1]
            continue
        tokens = line.split()
        head, angle = tokens[0], None
        if head.upper().startswith("RZ(") and head.endswith(")"):
            try:
                angle = float(head[3:-1])
            except ValueError:
                raise ParseError(f"ângulo inválido: {head}", number)
            head = "RZ"
        head = head.upper()
        if head not in GATE_ARITY:
            raise ParseError(f"porta desconhecida: {head}", number)
        try:
            qubits = tuple(int(t) for t in tokens[1:])
        except ValueError:
            raise ParseError(f"qubits inválidos: {line}", number)
        if len(qubits) != GATE_ARITY[head] or any(q < 0 for q in qubits):
            raise ParseError(f"{head} espera {GATE_ARITY[head]} qubit(s)", number)
        gates.append(Gate(head, qubits, angle))

    used = max((q for g in gates for q in g.qubits), default=-1) + 1
    n = declared if declared is not None else used
    if used > n:
        raise ParseError(f"programa usa {used} qubits, declarado {n}")
    prog = LogicalProgram(n, name=name)
    for g in gates:
        prog.add(g.name, *g.qubits, angle=g.angle)
    return prog


# ----------------------------------------------------------------------
# Catálogo
# ----------------------------------------------------------------------
BENCHMARKS = ("bv", "ghz", "qft", "grover", "qaoa", "distill15")


def make_benchmark(label: str, epsilon: float = 1e-10, grover_iterations: int = 2,
                   seed: int = 0) -> LogicalProgram:
    """
    Gera e sintetiza um benchmark a partir de ``nome:n`` (ex.: ``qft:8``).

    Raises:
        UsageError: nome desconhecido ou tamanho ausente/inválido
    """
    name, _, size = label.partition(":")
    name = name.strip().lower()
    if name not in BENCHMARKS:
        raise UsageError(f"benchmark desconhecido: {label!r} (opções: {', '.join(BENCHMARKS)})")
    if name == "distill15":
        program = gen_distill_15to1()
    else:
        try:
            n = int(size)
        except ValueError:
            raise UsageError(f"tamanho inválido em {label!r}; use {name}:<n>")
        if name == "bv":
            # segredo alternado 1010...
            secret = sum(1 << q for q in range(n) if q % 2 == 1)
            program = gen_bv(n, secret)
        elif name == "ghz":
            program = gen_ghz(n)
        elif name == "qft":
            program = gen_qft(n)
        elif name == "grover":
            program = gen_grover(n, grover_iterations)
        else:
            program = gen_qaoa(default_qaoa_graph(n, seed))
    synthesized = synthesize_rotations(program, epsilon)
    logger.debug(f"benchmark {label}: {synthesized.n} qubits, {len(synthesized.gates)} portas, "
                 f"{synthesized.t_count} T")
    return synthesized
