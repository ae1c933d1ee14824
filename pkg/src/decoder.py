"""
Modelo de erros de detectores (DEM) e decodificação por emparelhamento
perfeito de peso mínimo.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from src.circuit_ir import Circuit
from src.exceptions import ContractError, NonGraphlikeError, OracleSizeError
from src.noise_model import (
    TWO_QUBIT_PAULIS, PauliFrame, unpack_columns, xor_records,
)
from src.pauli_core import n_words

logger = logging.getLogger(__name__)

FAULT_CHUNK = 8192
ORACLE_LIMIT = 10
_INFINITE = 1e12

_CODE = {"X": 1, "Z": 2, "Y": 3}


@dataclass(frozen=True)
class Mechanism:
    probability: float
    detectors: Tuple[int, ...]
    observables: Tuple[int, ...]


@dataclass
class DetectorErrorModel:
    n_detectors: int
    n_observables: int
    mechanisms: List[Mechanism] = field(default_factory=list)

    def to_text(self) -> str:
        """Uma linha por mecanismo: ``error(p) D3 D7 L0``"""
        lines = []
        for m in self.mechanisms:
            parts = [f"error({m.probability:.12g})"]
            parts += [f"D{d}" for d in m.detectors]
            parts += [f"L{o}" for o in m.observables]
            lines.append(" ".join(parts))
        return "\n".join(lines) + ("\n" if lines else "")


def combine_probabilities(p1: float, p2: float) -> float:
    """Probabilidade de exatamente um de dois eventos independentes ocorrer"""
    return p1 * (1 - p2) + p2 * (1 - p1)


# ----------------------------------------------------------------------
# Extração
# ----------------------------------------------------------------------
def _basis_faults(circuit: Circuit) -> List[Tuple[int, int, int]]:
    """(índice da instrução, qubit, código) de cada falha de base"""
    faults = []
    for index, inst in enumerate(circuit.instructions):
        if not inst.is_noise or not any(inst.args):
            continue
        for q in inst.targets:
            if inst.name == "MFLIP":
                faults.append((index, q, 4))
            else:
                faults.append((index, q, 1))
                faults.append((index, q, 2))
    return faults


def _propagate(circuit: Circuit, faults: Sequence[Tuple[int, int, int]],
               det_groups, obs_groups) -> Tuple[np.ndarray, np.ndarray]:
    """
    Propaga um bloco de falhas, uma por coluna, pelo restante sem ruído.

    Returns:
        (colunas, detectores) e (colunas, observáveis) em bool
    """
    columns = len(faults)
    words = n_words(columns)
    frame = PauliFrame(circuit.n_qubits, circuit.num_measurements, words)
    start = faults[0][0]
    frame.cursor = sum(len(i.targets) for i in circuit.instructions[:start]
                       if i.name in ("MZ", "MX"))
    by_instruction: Dict[int, List[int]] = {}
    for column, (index, _, _) in enumerate(faults):
        by_instruction.setdefault(index, []).append(column)

    for index in range(start, len(circuit.instructions)):
        inst = circuit.instructions[index]
        if inst.is_noise:
            cols = by_instruction.get(index)
            if cols:
                qubits = np.array([faults[c][1] for c in cols], dtype=np.intp)
                codes = np.array([faults[c][2] for c in cols], dtype=np.int64)
                frame.inject(qubits, np.array(cols, dtype=np.int64), codes)
            continue
        frame.apply(inst)

    dets = unpack_columns(xor_records(frame.record, det_groups), columns)
    obs = unpack_columns(xor_records(frame.record, obs_groups), columns)
    return dets, obs


def _components(inst) -> List[Tuple[float, Tuple[Tuple[int, str], ...]]]:
    """Componentes (probabilidade, ((qubit, Pauli), ...)) de um canal"""
    name = inst.name
    result = []
    if name == "DEPOL1":
        p = inst.args[0] / 3
        for q in inst.targets:
            result += [(p, ((q, letter),)) for letter in "XYZ"]
    elif name == "PAULI_CHANNEL":
        for q in inst.targets:
            result += [(p, ((q, letter),)) for p, letter in zip(inst.args, "XYZ") if p > 0]
    elif name == "DEPOL2":
        p = inst.args[0] / 15
        for a, b in zip(inst.targets[::2], inst.targets[1::2]):
            for pa, pb in TWO_QUBIT_PAULIS:
                paulis = tuple((q, letter) for q, letter in ((a, pa), (b, pb)) if letter != "I")
                result.append((p, paulis))
    elif name == "MFLIP":
        result += [(inst.args[0], ((q, "M"),)) for q in inst.targets]
    return [(p, paulis) for p, paulis in result if p > 0]


def extract_dem(circuit: Circuit) -> DetectorErrorModel:
    """
    Extrai o DEM por propagação de falhas isoladas.

    Cada componente de cada canal é a composição (XOR) das falhas de base X/Z
    dos seus qubits. Componentes que disparam mais de 2 detectores são
    decompostos em partes X e Z e, se preciso, por qubit.
    """
    det_groups = circuit.detector_records()
    obs_groups = circuit.observable_records()
    n_det, n_obs = len(det_groups), len(obs_groups)
    faults = _basis_faults(circuit)

    effect: Dict[Tuple[int, int, int], Tuple[frozenset, frozenset]] = {}
    for begin in range(0, len(faults), FAULT_CHUNK):
        chunk = faults[begin:begin + FAULT_CHUNK]
        dets, obs = _propagate(circuit, chunk, det_groups, obs_groups)
        for column, fault in enumerate(chunk):
            effect[fault] = (frozenset(np.flatnonzero(dets[column]).tolist()),
                             frozenset(np.flatnonzero(obs[column]).tolist()))

    merged: Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], float] = {}
    for index, inst in enumerate(circuit.instructions):
        if not inst.is_noise:
            continue
        for p, paulis in _components(inst):
            for dets, obs in _decompose(index, paulis, effect):
                if not dets and not obs:
                    continue
                key = (tuple(sorted(dets)), tuple(sorted(obs)))
                merged[key] = combine_probabilities(merged.get(key, 0.0), p)

    mechanisms = [Mechanism(p, dets, obs) for (dets, obs), p in sorted(merged.items())]
    logger.debug(f"DEM: {len(mechanisms)} mecanismos, {n_det} detectores, {n_obs} observáveis")
    return DetectorErrorModel(n_det, n_obs, mechanisms)


def _compose(index: int, paulis, effect) -> Tuple[frozenset, frozenset]:
    dets: frozenset = frozenset()
    obs: frozenset = frozenset()
    for q, letter in paulis:
        codes = (4,) if letter == "M" else tuple(c for c in (1, 2) if _CODE[letter] & c)
        for code in codes:
            d, o = effect[(index, q, code)]
            dets ^= d
            obs ^= o
    return dets, obs


def _decompose(index: int, paulis, effect) -> List[Tuple[frozenset, frozenset]]:
    whole = _compose(index, paulis, effect)
    if len(whole[0]) <= 2:
        return [whole]

    # Partes X e Z do componente
    x_part = tuple((q, "X") for q, letter in paulis if letter in "XY")
    z_part = tuple((q, "Z") for q, letter in paulis if letter in "ZY")
    parts = [_compose(index, part, effect) for part in (x_part, z_part) if part]
    if all(len(d) <= 2 for d, _ in parts):
        return parts

    # Paulis de um qubit
    singles = []
    for q, letter in paulis:
        for single in ("X", "Z"):
            if _CODE[letter] & _CODE[single]:
                singles.append(_compose(index, ((q, single),), effect))
    if all(len(d) <= 2 for d, _ in singles):
        return singles
    raise NonGraphlikeError(
        f"componente {paulis} dispara {len(whole[0])} detectores e não se decompõe", index)


# ----------------------------------------------------------------------
# Grafo de emparelhamento
# ----------------------------------------------------------------------
def edge_weight(p: float) -> float:
    """ln((1-p)/p), limitado a um valor positivo mínimo"""
    if p <= 0:
        return _INFINITE
    if p >= 0.5:
        return 1e-9
    return max(math.log((1 - p) / p), 1e-9)


class MatchingGraph:
    """
    Detectores mais um nó de fronteira virtual. Arestas paralelas com a mesma
    máscara de observáveis são fundidas; com máscaras diferentes fica a mais
    provável.
    """

    def __init__(self, dem: DetectorErrorModel):
        self.n_detectors = dem.n_detectors
        self.n_observables = dem.n_observables
        self.boundary = dem.n_detectors
        self.edges: Dict[Tuple[int, int], Tuple[float, int]] = {}
        self.dropped_parallel = 0
        for m in dem.mechanisms:
            if not m.detectors:
                continue
            if len(m.detectors) > 2:
                raise NonGraphlikeError(f"mecanismo com {len(m.detectors)} detectores")
            u = m.detectors[0]
            v = m.detectors[1] if len(m.detectors) == 2 else self.boundary
            mask = sum(1 << o for o in m.observables)
            self._add_edge(u, v, m.probability, mask)
        if self.dropped_parallel:
            logger.warning(f"⚠️ {self.dropped_parallel} arestas paralelas com máscaras de "
                           f"observáveis diferentes descartadas")

        n = self.n_detectors + 1
        rows, cols, data = [], [], []
        for (u, v), (p, _) in self.edges.items():
            w = edge_weight(p)
            rows += [u, v]
            cols += [v, u]
            data += [w, w]
        self.matrix = csr_matrix((data, (rows, cols)), shape=(n, n))
        self._paths: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
        self._cache: Dict[Tuple[int, ...], Tuple[float, int]] = {}

    def _add_edge(self, u: int, v: int, p: float, mask: int) -> None:
        key = (min(u, v), max(u, v))
        if key not in self.edges:
            self.edges[key] = (p, mask)
            return
        old_p, old_mask = self.edges[key]
        if old_mask == mask:
            self.edges[key] = (combine_probabilities(old_p, p), mask)
        else:
            self.dropped_parallel += 1
            if p > old_p:
                self.edges[key] = (p, mask)

    @classmethod
    def from_circuit(cls, circuit: Circuit) -> "MatchingGraph":
        return cls(extract_dem(circuit))

    # --- caminhos ------------------------------------------------------
    def _shortest(self, source: int) -> Tuple[np.ndarray, np.ndarray]:
        if source not in self._paths:
            dist, pred = dijkstra(self.matrix, directed=False, indices=source,
                                  return_predecessors=True)
            self._paths[source] = (dist, pred)
        return self._paths[source]

    def distance(self, u: int, v: int) -> float:
        dist = self._shortest(u)[0][v]
        return float(dist) if np.isfinite(dist) else _INFINITE

    def path_mask(self, u: int, v: int) -> int:
        """Máscara de observáveis ao longo do caminho mínimo u -> v"""
        _, pred = self._shortest(u)
        mask = 0
        node = v
        while node != u:
            prev = int(pred[node])
            if prev < 0:
                return 0
            mask ^= self.edges[(min(prev, node), max(prev, node))][1]
            node = prev
        return mask

    def _check(self, syndrome: Sequence[int]) -> Tuple[int, ...]:
        fired = tuple(sorted(set(int(s) for s in syndrome)))
        for s in fired:
            if not 0 <= s < self.n_detectors:
                raise ContractError(f"detector {s} fora de [0, {self.n_detectors})")
        return fired

    # --- decodificação -------------------------------------------------
    def decode_detailed(self, syndrome: Sequence[int]) -> Tuple[float, int]:
        """(peso do emparelhamento, máscara de observáveis prevista)"""
        fired = self._check(syndrome)
        if fired in self._cache:
            return self._cache[fired]
        result = self._match(fired)
        self._cache[fired] = result
        return result

    def decode(self, syndrome: Sequence[int]) -> np.ndarray:
        _, mask = self.decode_detailed(syndrome)
        return np.array([(mask >> o) & 1 for o in range(self.n_observables)], dtype=bool)

    def decode_batch(self, detections: np.ndarray) -> np.ndarray:
        """Decodifica uma matriz (shots, detectores); síndromes repetidas são reaproveitadas"""
        shots = detections.shape[0]
        out = np.zeros((shots, self.n_observables), dtype=bool)
        if shots == 0:
            return out
        unique, inverse = np.unique(detections.astype(bool), axis=0, return_inverse=True)
        for row, pattern in enumerate(unique):
            prediction = self.decode(np.flatnonzero(pattern))
            out[inverse.reshape(-1) == row] = prediction
        return out

    def _match(self, fired: Tuple[int, ...]) -> Tuple[float, int]:
        if not fired:
            return 0.0, 0
        b = self.boundary
        to_boundary = {u: self.distance(u, b) for u in fired}

        # Pares que valem mais que ir à fronteira formam componentes independentes
        parent = {u: u for u in fired}

        def find(u):
            while parent[u] != u:
                parent[u] = parent[parent[u]]
                u = parent[u]
            return u

        pair_weight: Dict[Tuple[int, int], float] = {}
        for u, v in itertools.combinations(fired, 2):
            w = self.distance(u, v)
            if w < to_boundary[u] + to_boundary[v]:
                pair_weight[(u, v)] = w
                parent[find(u)] = find(v)

        groups: Dict[int, List[int]] = {}
        for u in fired:
            groups.setdefault(find(u), []).append(u)

        total, mask = 0.0, 0
        for nodes in groups.values():
            for u, v in self._solve(sorted(nodes), pair_weight, to_boundary):
                if v == b:
                    total += to_boundary[u]
                    mask ^= self.path_mask(u, b)
                else:
                    total += pair_weight.get((u, v), self.distance(u, v))
                    mask ^= self.path_mask(u, v)
        return total, mask

    def _solve(self, nodes: List[int], pair_weight, to_boundary) -> List[Tuple[int, int]]:
        b = self.boundary
        if len(nodes) == 1:
            return [(nodes[0], b)]
        if len(nodes) == 2:
            u, v = nodes
            if (u, v) in pair_weight and pair_weight[(u, v)] <= to_boundary[u] + to_boundary[v]:
                return [(u, v)]
            return [(u, b), (v, b)]

        graph = nx.Graph()
        weights = list(pair_weight.values()) + list(to_boundary.values())
        big = max(weights) + 1.0
        for u, v in itertools.combinations(nodes, 2):
            if (u, v) in pair_weight:
                graph.add_edge(("d", u), ("d", v), weight=big - pair_weight[(u, v)])
            graph.add_edge(("b", u), ("b", v), weight=big)
        for u in nodes:
            graph.add_edge(("d", u), ("b", u), weight=big - to_boundary[u])
        matching = nx.max_weight_matching(graph, maxcardinality=True)

        result = []
        for x, y in sorted(matching):
            if x[0] == "d" and y[0] == "d":
                result.append((min(x[1], y[1]), max(x[1], y[1])))
            elif x[0] == "d":
                result.append((x[1], b))
            elif y[0] == "d":
                result.append((y[1], b))
        return result


def decode(graph: MatchingGraph, syndrome: Sequence[int]) -> np.ndarray:
    return graph.decode(syndrome)


def brute_force_decode(graph: MatchingGraph, syndrome: Sequence[int]) -> Tuple[float, int]:
    """
    Oráculo exaustivo: mínimo sobre todos os emparelhamentos (com fronteira).

    Raises:
        OracleSizeError: mais de 10 detectores disparados
    """
    fired = graph._check(syndrome)
    if len(fired) > ORACLE_LIMIT:
        raise OracleSizeError(f"oráculo limitado a {ORACLE_LIMIT} detectores, recebido {len(fired)}")
    b = graph.boundary

    def best(remaining: Tuple[int, ...]) -> Tuple[float, int]:
        if not remaining:
            return 0.0, 0
        u, rest = remaining[0], remaining[1:]
        sub_w, sub_m = best(rest)
        candidate = (graph.distance(u, b) + sub_w, graph.path_mask(u, b) ^ sub_m)
        for i, v in enumerate(rest):
            sub_w, sub_m = best(rest[:i] + rest[i + 1:])
            w = graph.distance(u, v) + sub_w
            if w < candidate[0] - 1e-12:
                candidate = (w, graph.path_mask(u, v) ^ sub_m)
        return candidate

    return best(fired)
