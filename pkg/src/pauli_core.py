"""
Álgebra de Pauli e simulador de tableau estabilizador (estilo CHP).

Linhas empacotadas em palavras de 64 bits. Convenção de fase: uma linha
(x, z) representa o Pauli i^(x·z) X^x Z^z em cada qubit, de forma que
x = z = 1 é exatamente Y; a fase global é i^phase com phase em Z4.
"""

import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.exceptions import DimensionError, TargetError

logger = logging.getLogger(__name__)

WORD_BITS = 64
_ONE = np.uint64(1)
_POPCOUNT8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)

_SIGNS = {0: 1 + 0j, 1: 1j, 2: -1 + 0j, 3: -1j}


def n_words(n: int) -> int:
    return max(1, (n + WORD_BITS - 1) // WORD_BITS)


def word_mask(q: int) -> Tuple[int, np.uint64]:
    """Índice da palavra e máscara do bit do qubit q"""
    return q >> 6, _ONE << np.uint64(q & 63)


def popcount(words: np.ndarray) -> np.ndarray:
    """Contagem de bits ao longo do último eixo de um array uint64"""
    words = np.ascontiguousarray(words, dtype=np.uint64)
    as_bytes = words.view(np.uint8).reshape(*words.shape[:-1], -1)
    return _POPCOUNT8[as_bytes].sum(axis=-1)


def _product_phase(x1, z1, x2, z2) -> np.ndarray:
    """Expoente de i gerado pelo produto canônico (x1,z1)·(x2,z2)"""
    x3 = x1 ^ x2
    z3 = z1 ^ z2
    return (popcount(x1 & z1) + popcount(x2 & z2)
            + 2 * popcount(z1 & x2) - popcount(x3 & z3))


# ----------------------------------------------------------------------
# PauliString
# ----------------------------------------------------------------------
@dataclass(eq=False)
class PauliString:
    n: int
    xs: np.ndarray
    zs: np.ndarray
    phase: int = 0

    def __post_init__(self):
        if self.xs.shape != self.zs.shape or self.xs.shape[-1] != n_words(self.n):
            raise DimensionError("xs e zs precisam ter o mesmo comprimento n")
        self.phase %= 4

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        w = n_words(n)
        return cls(n, np.zeros(w, dtype=np.uint64), np.zeros(w, dtype=np.uint64))

    @classmethod
    def single(cls, n: int, q: int, pauli: str) -> "PauliString":
        p = cls.identity(n)
        p.set(q, pauli)
        return p

    @classmethod
    def from_str(cls, text: str) -> "PauliString":
        """'+XZ_Y', '-ZZ', 'iX' (sinal opcional; '_' ou 'I' para identidade)"""
        phase = 0
        for prefix, value in (("+i", 1), ("-i", 3), ("i", 1), ("+", 0), ("-", 2)):
            if text.startswith(prefix):
                phase = value
                text = text[len(prefix):]
                break
        p = cls.identity(len(text))
        for q, ch in enumerate(text):
            p.set(q, ch)
        p.phase = phase
        return p

    def set(self, q: int, pauli: str) -> None:
        if not 0 <= q < self.n:
            raise TargetError(f"qubit {q} fora do intervalo [0, {self.n})")
        w, m = word_mask(q)
        pauli = pauli.upper()
        if pauli not in "IXYZ_":
            raise ValueError(f"Pauli desconhecido: {pauli}")
        self.xs[w] = (self.xs[w] | m) if pauli in "XY" else (self.xs[w] & ~m)
        self.zs[w] = (self.zs[w] | m) if pauli in "ZY" else (self.zs[w] & ~m)

    def get(self, q: int) -> str:
        w, m = word_mask(q)
        x = bool(self.xs[w] & m)
        z = bool(self.zs[w] & m)
        return "_XZY"[x + 2 * z]

    @property
    def sign(self) -> complex:
        return _SIGNS[self.phase]

    def copy(self) -> "PauliString":
        return PauliString(self.n, self.xs.copy(), self.zs.copy(), self.phase)

    def commutes(self, other: "PauliString") -> bool:
        if other.n != self.n:
            raise DimensionError("Paulis com tamanhos diferentes")
        anti = popcount((self.xs & other.zs) ^ (self.zs & other.xs))
        return int(anti) % 2 == 0

    def weight(self) -> int:
        return int(popcount(self.xs | self.zs))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return (self.n == other.n and self.phase == other.phase
                and np.array_equal(self.xs, other.xs)
                and np.array_equal(self.zs, other.zs))

    def __str__(self) -> str:
        prefix = {0: "+", 1: "+i", 2: "-", 3: "-i"}[self.phase]
        return prefix + "".join(self.get(q) for q in range(self.n))

    __repr__ = __str__


def pauli_mul(a: PauliString, b: PauliString) -> PauliString:
    """Produto de grupo a·b com fase exata"""
    if a.n != b.n:
        raise DimensionError(f"tamanhos diferentes: {a.n} != {b.n}")
    phase = a.phase + b.phase + int(_product_phase(a.xs, a.zs, b.xs, b.zs))
    return PauliString(a.n, a.xs ^ b.xs, a.zs ^ b.zs, phase)


# ----------------------------------------------------------------------
# Tableau
# ----------------------------------------------------------------------
@dataclass
class MeasureResult:
    outcome: int            # 0 -> autovalor +1, 1 -> autovalor -1
    deterministic: bool

    @property
    def eigenvalue(self) -> int:
        return -1 if self.outcome else 1


class StabilizerTableau:
    """
    Tableau de Aaronson-Gottesman: linhas 0..n-1 são desestabilizadores,
    n..2n-1 estabilizadores. Começa em |0...0>.
    """

    GATES = ("H", "S", "X", "Z", "CX", "CZ", "RESET")

    def __init__(self, n: int):
        self.n = n
        w = n_words(n)
        self.xs = np.zeros((2 * n, w), dtype=np.uint64)
        self.zs = np.zeros((2 * n, w), dtype=np.uint64)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        for q in range(n):
            word, m = word_mask(q)
            self.xs[q, word] = m
            self.zs[n + q, word] = m

    # --- acesso por coluna -------------------------------------------
    @staticmethod
    def _column(arr: np.ndarray, q: int) -> np.ndarray:
        w, m = word_mask(q)
        return (arr[:, w] & m) != 0

    @staticmethod
    def _store(arr: np.ndarray, q: int, bits: np.ndarray) -> None:
        w, m = word_mask(q)
        arr[:, w] = np.where(bits, arr[:, w] | m, arr[:, w] & ~m)

    def _check(self, targets: Sequence[int]) -> None:
        for q in targets:
            if not 0 <= q < self.n:
                raise TargetError(f"qubit {q} fora do intervalo [0, {self.n})")

    # --- portas --------------------------------------------------------
    def h(self, q: int) -> None:
        x = self._column(self.xs, q)
        z = self._column(self.zs, q)
        self.r ^= (x & z).astype(np.uint8)
        self._store(self.xs, q, z)
        self._store(self.zs, q, x)

    def s(self, q: int) -> None:
        x = self._column(self.xs, q)
        z = self._column(self.zs, q)
        self.r ^= (x & z).astype(np.uint8)
        self._store(self.zs, q, z ^ x)

    def x(self, q: int) -> None:
        self.r ^= self._column(self.zs, q).astype(np.uint8)

    def z(self, q: int) -> None:
        self.r ^= self._column(self.xs, q).astype(np.uint8)

    def cx(self, a: int, b: int) -> None:
        xa = self._column(self.xs, a)
        za = self._column(self.zs, a)
        xb = self._column(self.xs, b)
        zb = self._column(self.zs, b)
        self.r ^= (xa & zb & ~(xb ^ za)).astype(np.uint8)
        self._store(self.xs, b, xb ^ xa)
        self._store(self.zs, a, za ^ zb)

    def cz(self, a: int, b: int) -> None:
        self.h(b)
        self.cx(a, b)
        self.h(b)

    def reset(self, q: int) -> None:
        result = self.measure_pauli(PauliString.single(self.n, q, "Z"), rng=None)
        if result.outcome:
            self.x(q)

    def apply_clifford(self, gate: str, targets: Sequence[int]) -> None:
        """Aplica uma porta do conjunto {H, S, X, Z, CX, CZ, RESET}"""
        targets = list(targets)
        self._check(targets)
        gate = gate.upper()
        if gate in ("CX", "CZ"):
            if len(targets) % 2:
                raise TargetError(f"{gate} precisa de pares de alvos")
            for a, b in zip(targets[::2], targets[1::2]):
                if a == b:
                    raise TargetError(f"{gate} com alvos duplicados ({a})")
                self.cx(a, b) if gate == "CX" else self.cz(a, b)
            return
        single = {"H": self.h, "S": self.s, "X": self.x, "Z": self.z,
                  "RESET": self.reset}.get(gate)
        if single is None:
            raise ValueError(f"porta não suportada: {gate}")
        for q in targets:
            single(q)

    # --- medições ------------------------------------------------------
    def _rowsum(self, targets: np.ndarray, src: int) -> None:
        """Linha[t] <- linha[t]·linha[src] para todo t em targets"""
        if targets.size == 0:
            return
        x1, z1 = self.xs[targets], self.zs[targets]
        x2, z2 = self.xs[src], self.zs[src]
        e = (2 * self.r[targets].astype(np.int64) + 2 * int(self.r[src])
             + _product_phase(x1, z1, x2[None, :], z2[None, :])) % 4
        self.r[targets] = ((e >> 1) & 1).astype(np.uint8)
        self.xs[targets] = x1 ^ x2
        self.zs[targets] = z1 ^ z2

    def measure_pauli(self, p: PauliString, rng: Optional[np.random.Generator] = None) -> MeasureResult:
        """
        Mede o Pauli hermitiano p.

        Args:
            p: operador (fase +1 ou -1)
            rng: gerador para resultados aleatórios; None fixa o resultado em 0

        Returns:
            MeasureResult(outcome, deterministic)
        """
        if p.n != self.n:
            raise DimensionError(f"Pauli com {p.n} qubits em tableau de {self.n}")
        if p.phase % 2:
            raise ValueError("só operadores hermitianos podem ser medidos")

        anti = (popcount((self.xs & p.zs[None, :]) ^ (self.zs & p.xs[None, :])) & 1).astype(bool)
        stab_anti = np.flatnonzero(anti[self.n:])

        if stab_anti.size:
            src = self.n + int(stab_anti[0])
            targets = np.flatnonzero(anti)
            targets = targets[(targets != src) & (targets != src - self.n)]
            self._rowsum(targets, src)
            self.xs[src - self.n] = self.xs[src]
            self.zs[src - self.n] = self.zs[src]
            self.r[src - self.n] = self.r[src]
            outcome = int(rng.integers(2)) if rng is not None else 0
            self.xs[src] = p.xs
            self.zs[src] = p.zs
            self.r[src] = outcome ^ (p.phase >> 1)
            return MeasureResult(outcome, False)

        acc_x = np.zeros_like(p.xs)
        acc_z = np.zeros_like(p.zs)
        acc_phase = 0
        for i in np.flatnonzero(anti[:self.n]):
            row = self.n + int(i)
            acc_phase += 2 * int(self.r[row]) + int(
                _product_phase(acc_x, acc_z, self.xs[row], self.zs[row]))
            acc_x = acc_x ^ self.xs[row]
            acc_z = acc_z ^ self.zs[row]
        outcome = ((acc_phase - p.phase) % 4) >> 1
        return MeasureResult(outcome, True)

    def measure_z(self, q: int, rng: Optional[np.random.Generator] = None) -> MeasureResult:
        return self.measure_pauli(PauliString.single(self.n, q, "Z"), rng)

    def measure_x(self, q: int, rng: Optional[np.random.Generator] = None) -> MeasureResult:
        self.h(q)
        result = self.measure_z(q, rng)
        self.h(q)
        return result

    # --- inspeção ------------------------------------------------------
    def row(self, i: int) -> PauliString:
        return PauliString(self.n, self.xs[i].copy(), self.zs[i].copy(), 2 * int(self.r[i]))

    def stabilizers(self) -> List[PauliString]:
        return [self.row(self.n + i) for i in range(self.n)]

    def check_invariants(self) -> bool:
        """Comutação estabilizador/desestabilizador e posto 2n"""
        sym = (popcount((self.xs[:, None, :] & self.zs[None, :, :])
                        ^ (self.zs[:, None, :] & self.xs[None, :, :])) & 1)
        n = self.n
        expected = np.zeros((2 * n, 2 * n), dtype=np.int64)
        expected[np.arange(n), n + np.arange(n)] = 1
        expected[n + np.arange(n), np.arange(n)] = 1
        stab_block = sym[n:, n:]
        cross = sym[:n, n:]
        return (not stab_block.any()) and np.array_equal(cross, np.eye(n, dtype=np.int64))


# ----------------------------------------------------------------------
# Execução de circuitos
# ----------------------------------------------------------------------
_SKIPPED = {"TICK", "DEPOL1", "DEPOL2", "PAULI_CHANNEL", "MFLIP", "DETECTOR", "OBSERVABLE"}


def simulate_tableau(circuit, seed: Optional[int] = None, pinned: bool = False) -> np.ndarray:
    """
    Executa o circuito sem ruído num tableau.

    Args:
        circuit: objeto com ``n_qubits`` e ``instructions``
        seed: semente para resultados aleatórios
        pinned: se True, resultados aleatórios são fixados em 0

    Returns:
        vetor uint8 com o resultado de cada medição, em ordem
    """
    tableau = StabilizerTableau(circuit.n_qubits)
    rng = None if pinned else np.random.default_rng(seed)
    record: List[int] = []
    for inst in circuit.instructions:
        name = inst.name
        if name in _SKIPPED:
            continue
        if name == "MZ":
            record.extend(tableau.measure_z(q, rng).outcome for q in inst.targets)
        elif name == "MX":
            record.extend(tableau.measure_x(q, rng).outcome for q in inst.targets)
        else:
            tableau.apply_clifford(name, inst.targets)
    return np.array(record, dtype=np.uint8)


def statevector_probabilities(n: int, ops: Iterable[Tuple[str, Tuple[int, ...]]]) -> np.ndarray:
    """Oráculo de vetor de estado para n pequeno (usado nos testes)"""
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    mats = {
        "H": h,
        "S": np.diag([1, 1j]),
        "X": np.array([[0, 1], [1, 0]], dtype=complex),
        "Z": np.diag([1, -1]).astype(complex),
    }
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = 1.0
    psi = psi.reshape([2] * n)
    for name, targets in ops:
        if name in mats:
            psi = np.moveaxis(np.tensordot(mats[name], psi, axes=([1], [targets[0]])), 0, targets[0])
        elif name in ("CX", "CZ"):
            a, b = targets
            full = psi.copy()
            idx = [slice(None)] * n
            idx[a] = 1
            sub = full[tuple(idx)]
            b_axis = b if b < a else b - 1
            if name == "CX":
                sub = np.flip(sub, axis=b_axis)
            else:
                sl = [slice(None)] * (n - 1)
                sl[b_axis] = 1
                sub = sub.copy()
                sub[tuple(sl)] *= -1
            full[tuple(idx)] = sub
            psi = full
        else:
            raise ValueError(name)
    return np.abs(psi.reshape(-1)) ** 2
