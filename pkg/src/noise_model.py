"""
Modelo de ruído em nível de circuito e amostragem por Pauli frames.

O ruído é anexado como instruções explícitas (DEPOL1, DEPOL2, MFLIP,
PAULI_CHANNEL) e a amostragem propaga frames empacotados em palavras de 64
bits, um bit por shot.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from src.circuit_ir import (
    MEASUREMENTS, NOISE, ONE_QUBIT_GATES, TWO_QUBIT_GATES, Circuit, Instruction,
    parities,
)
from src.exceptions import ContractError, DoubleAnnotationError, ParameterError
from src.pauli_core import WORD_BITS, n_words

logger = logging.getLogger(__name__)

DEFAULT_BATCH_SHOTS = 8192

# As 15 componentes não triviais do canal de dois qubits, em ordem fixa
TWO_QUBIT_PAULIS: Tuple[Tuple[str, str], ...] = tuple(
    (a, b) for a in "IXYZ" for b in "IXYZ" if (a, b) != ("I", "I"))


@dataclass(frozen=True)
class NoiseParams:
    """Parâmetros do modelo de ruído (tempos em µs)"""
    p_1q: float = 0.001
    p_2q: float = 0.001
    p_meas: float = 0.001
    t_1q: float = 1.0
    t_2q: float = 5.0
    t_meas: float = 10000.0
    T1: float = 1e6
    T2: float = 1e6

    def __post_init__(self):
        errors = []
        for name in ("p_1q", "p_2q", "p_meas"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                errors.append(f"{name} fora de [0, 1]")
        for name in ("t_1q", "t_2q", "t_meas", "T1", "T2"):
            if not getattr(self, name) > 0:
                errors.append(f"{name} deve ser > 0")
        if self.T2 > 2 * self.T1:
            errors.append("T2 > 2·T1")
        if errors:
            raise ParameterError("; ".join(errors))

    @classmethod
    def noiseless(cls, **timing) -> "NoiseParams":
        return cls(p_1q=0.0, p_2q=0.0, p_meas=0.0, T1=math.inf, T2=math.inf, **timing)

    def scaled(self, p: float) -> "NoiseParams":
        """Mesmos tempos, taxas de porta e medição iguais a p"""
        return NoiseParams(p, p, p, self.t_1q, self.t_2q, self.t_meas, self.T1, self.T2)

    def with_coherence(self, t1: float, t2: Optional[float] = None) -> "NoiseParams":
        return NoiseParams(self.p_1q, self.p_2q, self.p_meas, self.t_1q, self.t_2q,
                           self.t_meas, t1, t1 if t2 is None else t2)


def idle_twirl_probs(t: float, T1: float, T2: float) -> Tuple[float, float, float]:
    """
    Aproximação de Pauli twirling para decoerência durante um intervalo ocioso.

    Returns:
        (px, py, pz)
    """
    if t < 0:
        raise ParameterError("intervalo ocioso negativo")
    if T2 > 2 * T1:
        raise ParameterError("T2 não pode exceder 2·T1")
    if t == 0:
        return 0.0, 0.0, 0.0
    decay_1 = 0.0 if math.isinf(T1) else -math.expm1(-t / T1)
    decay_2 = 0.0 if math.isinf(T2) else -math.expm1(-t / T2)
    px = decay_1 / 4
    pz = max(0.0, decay_2 / 2 - decay_1 / 4)
    return px, px, pz


# ----------------------------------------------------------------------
# Passo de anotação
# ----------------------------------------------------------------------
def attach_noise(circuit: Circuit, params: NoiseParams) -> Circuit:
    """
    Anexa o modelo de ruído de nível de circuito.

    Regras: DEPOL1(p_1q) após portas de 1 qubit, DEPOL2(p_2q) após CX/CZ,
    MFLIP(p_meas) antes de medições, X com probabilidade p_meas após RESET e
    PAULI_CHANNEL de decoerência nos qubits ociosos de cada camada (TICK).
    """
    if circuit.has_noise:
        raise DoubleAnnotationError("circuito já possui instruções de ruído")

    out: List[Instruction] = []
    touched: Set[int] = set()
    all_qubits = sorted(_used_qubits(circuit))
    twirl_cache: Dict[float, Tuple[float, float, float]] = {}

    for inst in circuit.instructions:
        name = inst.name
        if name == "TICK":
            t = inst.duration
            if t > 0:
                if t not in twirl_cache:
                    twirl_cache[t] = idle_twirl_probs(t, params.T1, params.T2)
                probs = twirl_cache[t]
                idle = [q for q in all_qubits if q not in touched]
                if idle and sum(probs) > 0:
                    out.append(Instruction("PAULI_CHANNEL", tuple(idle), probs))
            touched.clear()
            out.append(inst)
            continue

        if name in MEASUREMENTS and params.p_meas > 0:
            out.append(Instruction("MFLIP", inst.targets, (params.p_meas,)))
        out.append(inst)

        if name in ONE_QUBIT_GATES and params.p_1q > 0:
            out.append(Instruction("DEPOL1", inst.targets, (params.p_1q,)))
        elif name in TWO_QUBIT_GATES and params.p_2q > 0:
            out.append(Instruction("DEPOL2", inst.targets, (params.p_2q,)))
        elif name == "RESET" and params.p_meas > 0:
            out.append(Instruction("PAULI_CHANNEL", inst.targets, (params.p_meas, 0.0, 0.0)))

        if name not in ("DETECTOR", "OBSERVABLE"):
            touched.update(inst.targets)

    noisy = Circuit(circuit.n_qubits, tuple(out), dict(circuit.labels))
    logger.debug(f"ruído anexado: {len(circuit.instructions)} -> {len(out)} instruções")
    return noisy


def _used_qubits(circuit: Circuit) -> Set[int]:
    used: Set[int] = set()
    for inst in circuit.instructions:
        if inst.name not in ("DETECTOR", "OBSERVABLE", "TICK"):
            used.update(inst.targets)
    return used


# ----------------------------------------------------------------------
# Propagação de frames
# ----------------------------------------------------------------------
class PauliFrame:
    """
    Frames X/Z de um lote de shots, empacotados (n_qubits, palavras), mais o
    registro de inversões de medição e as inversões pendentes (MFLIP).
    """

    def __init__(self, n_qubits: int, n_measurements: int, words: int):
        self.words = words
        self.xs = np.zeros((n_qubits, words), dtype=np.uint64)
        self.zs = np.zeros((n_qubits, words), dtype=np.uint64)
        self.pending = np.zeros((n_qubits, words), dtype=np.uint64)
        self.record = np.zeros((n_measurements, words), dtype=np.uint64)
        self.cursor = 0

    def apply(self, inst: Instruction) -> None:
        """Propaga o frame por uma instrução sem ruído"""
        name = inst.name
        t = np.asarray(inst.targets, dtype=np.intp)
        if name == "H":
            self.xs[t], self.zs[t] = self.zs[t].copy(), self.xs[t].copy()
        elif name == "S":
            self.zs[t] ^= self.xs[t]
        elif name == "CX":
            a, b = inst.targets
            self.xs[b] ^= self.xs[a]
            self.zs[a] ^= self.zs[b]
        elif name == "CZ":
            a, b = inst.targets
            self.zs[a] ^= self.xs[b]
            self.zs[b] ^= self.xs[a]
        elif name == "RESET":
            self.xs[t] = 0
            self.zs[t] = 0
        elif name in MEASUREMENTS:
            flips = self.xs[t] if name == "MZ" else self.zs[t]
            self.record[self.cursor:self.cursor + len(t)] = flips ^ self.pending[t]
            self.pending[t] = 0
            self.cursor += len(t)
        # X, Z, TICK e anotações não alteram o frame

    def inject(self, qubits: np.ndarray, columns: np.ndarray, paulis: np.ndarray) -> None:
        """
        Aplica Paulis pontuais. ``paulis``: 1 = X, 2 = Z, 3 = Y, 4 = flip de medição.
        """
        if qubits.size == 0:
            return
        word = (columns >> 6).astype(np.intp)
        mask = np.left_shift(np.uint64(1), (columns & 63).astype(np.uint64))
        has_x = (paulis & 1) == 1
        has_z = (paulis & 2) == 2
        is_flip = paulis == 4
        if has_x.any():
            np.bitwise_xor.at(self.xs, (qubits[has_x], word[has_x]), mask[has_x])
        if has_z.any():
            np.bitwise_xor.at(self.zs, (qubits[has_z], word[has_z]), mask[has_z])
        if is_flip.any():
            np.bitwise_xor.at(self.pending, (qubits[is_flip], word[is_flip]), mask[is_flip])


def xor_records(record: np.ndarray, groups: Sequence[Sequence[int]]) -> np.ndarray:
    """XOR das linhas do registro para cada grupo de índices"""
    out = np.zeros((len(groups), record.shape[1]), dtype=np.uint64)
    for i, group in enumerate(groups):
        if group:
            out[i] = np.bitwise_xor.reduce(record[list(group)], axis=0)
    return out


def unpack_columns(words: np.ndarray, shots: int) -> np.ndarray:
    """(linhas, palavras) uint64 -> (shots, linhas) bool"""
    if words.shape[0] == 0:
        return np.zeros((shots, 0), dtype=bool)
    as_bytes = np.ascontiguousarray(words).view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :shots]
    return bits.T.astype(bool)


# ----------------------------------------------------------------------
# Amostragem
# ----------------------------------------------------------------------
def _geometric_hits(rng: np.random.Generator, p: float, total: int) -> np.ndarray:
    """Posições (em [0, total)) atingidas por eventos Bernoulli(p) independentes"""
    if p <= 0 or total == 0:
        return np.zeros(0, dtype=np.int64)
    if p >= 1:
        return np.arange(total, dtype=np.int64)
    chunks = []
    position = -1
    expected = int(total * p * 1.2) + 16
    while True:
        gaps = rng.geometric(p, size=expected)
        positions = position + np.cumsum(gaps)
        inside = positions[positions < total]
        chunks.append(inside)
        if inside.size < positions.size:
            break
        position = int(positions[-1])
    return np.concatenate(chunks)


def _channel_components(inst: Instruction) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Probabilidade total, pesos relativos e códigos Pauli (por alvo) das
    componentes do canal. Para DEPOL2 os códigos têm duas colunas.
    """
    name = inst.name
    if name == "DEPOL1":
        return inst.args[0], np.full(3, 1 / 3), np.array([[1], [3], [2]])
    if name == "DEPOL2":
        codes = np.array([[_PAULI_CODE[a], _PAULI_CODE[b]] for a, b in TWO_QUBIT_PAULIS])
        return inst.args[0], np.full(15, 1 / 15), codes
    if name == "PAULI_CHANNEL":
        px, py, pz = inst.args
        total = px + py + pz
        weights = np.array([px, py, pz]) / total if total > 0 else np.full(3, 1 / 3)
        return total, weights, np.array([[1], [3], [2]])
    if name == "MFLIP":
        return inst.args[0], np.ones(1), np.array([[4]])
    raise ValueError(name)


_PAULI_CODE = {"I": 0, "X": 1, "Z": 2, "Y": 3}


def _sample_batch(circuit: Circuit, shots: int, rng: np.random.Generator) -> np.ndarray:
    words = n_words(shots)
    frame = PauliFrame(circuit.n_qubits, circuit.num_measurements, words)
    for inst in circuit.instructions:
        if not inst.is_noise:
            frame.apply(inst)
            continue
        prob, weights, codes = _channel_components(inst)
        width = codes.shape[1]
        sites = len(inst.targets) // width
        hits = _geometric_hits(rng, prob, sites * shots)
        if hits.size == 0:
            continue
        site, column = np.divmod(hits, shots)
        choice = rng.choice(len(weights), size=hits.size, p=weights) if len(weights) > 1 \
            else np.zeros(hits.size, dtype=np.intp)
        targets = np.asarray(inst.targets, dtype=np.intp).reshape(sites, width)
        for k in range(width):
            paulis = codes[choice, k]
            keep = paulis != 0
            frame.inject(targets[site[keep], k], column[keep], paulis[keep])
    # bits além de `shots` na última palavra são ignorados pelo desempacotamento
    return frame.record


def batch_rng(seed: int, batch: int) -> np.random.Generator:
    """Fluxo aleatório contável por (seed, lote): independente do nº de workers"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(batch)])))


def sample_flips(circuit: Circuit, shots: int, seed: int, batch_index: int = 0) -> np.ndarray:
    """Registro empacotado de inversões de medição de um lote"""
    return _sample_batch(circuit, shots, batch_rng(seed, batch_index))


def sample_shots(circuit: Circuit, ref: np.ndarray, shots: int, seed: int,
                 batch_shots: int = DEFAULT_BATCH_SHOTS,
                 first_batch: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Amostra shots ruidosos.

    Args:
        circuit: circuito com ruído anexado
        ref: reference_sample do circuito sem ruído
        shots: número de shots
        seed: semente
        batch_shots: tamanho fixo do lote (define os fluxos aleatórios)
        first_batch: índice do primeiro lote (para dividir o trabalho entre workers)

    Returns:
        (detectores, observáveis): matrizes bool (shots, n_det) e (shots, n_obs)
        com as paridades absolutas (referência XOR inversões)
    """
    ref = np.asarray(ref, dtype=np.uint8)
    if ref.size != circuit.num_measurements:
        raise ContractError(
            f"referência com {ref.size} bits para {circuit.num_measurements} medições")
    det_groups = circuit.detector_records()
    obs_groups = circuit.observable_records()
    ref_det = parities(det_groups, ref).astype(bool)
    ref_obs = parities(obs_groups, ref).astype(bool)

    dets, obs = [], []
    for batch, start in enumerate(range(0, shots, batch_shots), start=first_batch):
        size = min(batch_shots, shots - start)
        record = sample_flips(circuit, size, seed, batch)
        dets.append(unpack_columns(xor_records(record, det_groups), size) ^ ref_det)
        obs.append(unpack_columns(xor_records(record, obs_groups), size) ^ ref_obs)
    if not dets:
        return np.zeros((0, len(det_groups)), bool), np.zeros((0, len(obs_groups)), bool)
    return np.concatenate(dets), np.concatenate(obs)
