"""
Geometria do array de átomos: clusters intercalados, raios de Rydberg,
conflitos entre CZs e serialização gulosa das camadas de CZ.

Coordenadas de rede: o dado (r, c) fica no centro de cluster (c·L, r·L) e a
ancilla da plaqueta (r, c) em ((c+½)·L, (r+½)·L). O passo entre clusters da
mesma espécie, medido na diagonal da plaqueta, é P = spacing·(√k+1); a rede
usa L = P/√2, então cada perna mede P/2. O lógico q de um grupo ocupa a
posição q de todos os clusters.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

from src.exceptions import ContractError, InfeasibleLayoutError

logger = logging.getLogger(__name__)

VALID_GROUP_SIZES = (1, 4, 9, 16)
DISTANCE_TOLERANCE = 1e-9

# Cantos de uma plaqueta (dr, dc) e o Pauli ZXXZ de cada perna
CORNERS = {"NW": (0, 0), "NE": (0, 1), "SW": (1, 0), "SE": (1, 1)}
LEG_PAULI = {"NW": "Z", "NE": "X", "SW": "X", "SE": "Z"}
# Ordem das pernas: em Z para plaquetas tipo X padrão, em N para tipo Z
LEG_ORDER = {"X": ("NW", "NE", "SW", "SE"), "Z": ("NW", "SW", "NE", "SE")}


@dataclass(frozen=True)
class AtomSite:
    id: int
    x: float
    y: float
    species: str            # 'data' ou 'ancilla'
    cluster_id: int
    position: int           # posição dentro do cluster, 0..k-1
    row: int                # linha do dado ou da plaqueta
    col: int


@dataclass(frozen=True)
class Plaquette:
    """Estabilizador em coordenadas de rede; ``kind`` é o tipo padrão (X/Z)"""
    row: int
    col: int
    kind: str
    corners: Tuple[str, ...]   # cantos presentes, na ordem de agendamento

    def data_cell(self, corner: str) -> Tuple[int, int]:
        dr, dc = CORNERS[corner]
        return self.row + dr, self.col + dc


@dataclass(frozen=True)
class CZGate:
    ancilla: int     # id do sítio ancilla
    data: int        # id do sítio de dado
    step: int        # índice da perna (0..3)


def plaquette_kind(r: int, c: int) -> str:
    return "X" if (r + c) % 2 == 0 else "Z"


def rectangle_plaquettes(r0: int, c0: int, rows: int, cols: int) -> List[Plaquette]:
    """
    Estabilizadores do código de superfície rotacionado sobre o retângulo de
    dados [r0, r0+rows) x [c0, c0+cols). Bordas superior/inferior hospedam
    plaquetas tipo X; esquerda/direita, tipo Z.
    """
    inside = lambda r, c: r0 <= r < r0 + rows and c0 <= c < c0 + cols
    result = []
    for r in range(r0 - 1, r0 + rows):
        for c in range(c0 - 1, c0 + cols):
            kind = plaquette_kind(r, c)
            top_or_bottom = r in (r0 - 1, r0 + rows - 1)
            left_or_right = c in (c0 - 1, c0 + cols - 1)
            if top_or_bottom and left_or_right:
                continue
            if top_or_bottom and kind != "X":
                continue
            if left_or_right and kind != "Z":
                continue
            corners = tuple(k for k in LEG_ORDER[kind]
                            if inside(r + CORNERS[k][0], c + CORNERS[k][1]))
            if len(corners) in (2, 4):
                result.append(Plaquette(r, c, kind, corners))
    return result


def cluster_pitch(k: int, spacing: float) -> float:
    """Passo entre clusters da mesma espécie: (√k + 1)·spacing"""
    return spacing * (math.isqrt(k) + 1)


def member_offset(position: int, k: int, spacing: float) -> Tuple[float, float]:
    s = math.isqrt(k)
    i, j = divmod(position, s)
    return (j - (s - 1) / 2) * spacing, (i - (s - 1) / 2) * spacing


class InterleavedLayout:
    """Array com grupos intercalados de k lógicos dispostos em grade"""

    def __init__(self, k: int, d: int, spacing: float, r_ancilla_data: float,
                 r_data_data: float, group_grid: Tuple[int, int],
                 groups: Sequence[Tuple[int, int]]):
        self.k = k
        self.d = d
        self.spacing = spacing
        self.r_ancilla_data = r_ancilla_data
        self.r_data_data = r_data_data
        self.group_grid = group_grid
        self.groups = tuple(sorted(groups))
        self.pitch = cluster_pitch(k, spacing)
        self.step = self.pitch / math.sqrt(2)
        self.sites: List[AtomSite] = []
        self._data: Dict[Tuple[int, int, int], int] = {}
        self._ancilla: Dict[Tuple[int, int, int], int] = {}
        self._clusters = 0

    # --- construção ----------------------------------------------------
    def _add_cluster(self, species: str, row: int, col: int) -> None:
        table = self._data if species == "data" else self._ancilla
        if (row, col, 0) in table:
            return
        cx, cy = (col * self.step, row * self.step) if species == "data" else \
            ((col + 0.5) * self.step, (row + 0.5) * self.step)
        cluster = self._clusters
        self._clusters += 1
        for q in range(self.k):
            ox, oy = member_offset(q, self.k, self.spacing)
            site = AtomSite(len(self.sites), cx + ox, cy + oy, species, cluster, q, row, col)
            self.sites.append(site)
            table[(row, col, q)] = site.id

    # --- consultas -----------------------------------------------------
    def group_origin(self, group: Tuple[int, int]) -> Tuple[int, int]:
        return group[0] * (self.d + 1), group[1] * (self.d + 1)

    def has_group(self, group: Tuple[int, int]) -> bool:
        return tuple(group) in self.groups

    def data_site(self, row: int, col: int, member: int) -> int:
        try:
            return self._data[(row, col, member)]
        except KeyError:
            raise ContractError(f"não existe dado em ({row}, {col}) posição {member}")

    def ancilla_site(self, row: int, col: int, member: int) -> int:
        try:
            return self._ancilla[(row, col, member)]
        except KeyError:
            raise ContractError(f"não existe ancilla na plaqueta ({row}, {col}) posição {member}")

    def has_ancilla(self, row: int, col: int) -> bool:
        return (row, col, 0) in self._ancilla

    def position(self, site_id: int) -> np.ndarray:
        s = self.sites[site_id]
        return np.array([s.x, s.y])

    def distance(self, a: int, b: int) -> float:
        return float(np.linalg.norm(self.position(a) - self.position(b)))

    def count(self, species: str) -> int:
        return sum(1 for s in self.sites if s.species == species)

    @property
    def leg_length(self) -> float:
        """Comprimento de uma perna entre membros de mesma posição"""
        return self.pitch / 2

    def to_frame(self) -> pd.DataFrame:
        """Tabela `site_id,x_um,y_um,species,cluster,pos`"""
        return pd.DataFrame(
            [(s.id, round(s.x, 6), round(s.y, 6), s.species, s.cluster_id, s.position)
             for s in self.sites],
            columns=["site_id", "x_um", "y_um", "species", "cluster", "pos"],
        )


def build_layout(k: int, d: int, spacing: float = 10.0, r_ancilla_data: float = 28.0,
                 r_data_data: float = 14.0, group_grid: Tuple[int, int] = (1, 1),
                 groups: Optional[Iterable[Tuple[int, int]]] = None) -> InterleavedLayout:
    """
    Monta o array intercalado.

    Args:
        k: lógicos por grupo (quadrado perfeito em {1, 4, 9, 16})
        d: distância do código (ímpar, >= 3)
        spacing: passo intra-cluster em µm
        r_ancilla_data, r_data_data: raios de Rydberg em µm
        group_grid: (linhas, colunas) da grade de grupos
        groups: subconjunto de posições da grade ocupadas (padrão: todas)

    Returns:
        InterleavedLayout com dados de cada grupo, linhas de costura entre
        grupos vizinhos e todas as ancillas usadas por patches e costuras
    """
    if k not in VALID_GROUP_SIZES:
        raise ContractError(f"k deve estar em {VALID_GROUP_SIZES}, recebido {k}")
    if d < 3 or d % 2 == 0:
        raise ContractError(f"d deve ser ímpar e >= 3, recebido {d}")

    occupied = sorted(set(groups) if groups is not None else
                      {(i, j) for i in range(group_grid[0]) for j in range(group_grid[1])})
    layout = InterleavedLayout(k, d, spacing, r_ancilla_data, r_data_data, group_grid, occupied)

    leg = layout.leg_length
    if leg > r_ancilla_data * (1 + DISTANCE_TOLERANCE):
        raise InfeasibleLayoutError(
            f"perna ancilla-dado de {leg:.2f} µm excede r_ancilla_data = {r_ancilla_data} µm "
            f"(k={k}, spacing={spacing} µm)")
    if k > 1 and spacing > r_data_data * (1 + DISTANCE_TOLERANCE):
        raise InfeasibleLayoutError(
            f"passo intra-cluster de {spacing} µm excede r_data_data = {r_data_data} µm")

    for region in _regions(layout):
        r0, c0, rows, cols = region
        for r in range(r0, r0 + rows):
            for c in range(c0, c0 + cols):
                layout._add_cluster("data", r, c)

    for region in _regions(layout):
        for plaq in rectangle_plaquettes(*region):
            layout._add_cluster("ancilla", plaq.row, plaq.col)

    logger.info(f"✅ Layout k={k} d={d}: {layout.count('data')} dados, "
                f"{layout.count('ancilla')} ancillas, grupos {occupied}")
    return layout


def _regions(layout: InterleavedLayout) -> List[Tuple[int, int, int, int]]:
    """Retângulos de cada patch e de cada par de grupos vizinhos (fundidos)"""
    d = layout.d
    regions = []
    occupied = set(layout.groups)
    for group in layout.groups:
        r0, c0 = layout.group_origin(group)
        regions.append((r0, c0, d, d))
        right = (group[0], group[1] + 1)
        below = (group[0] + 1, group[1])
        if right in occupied:
            regions.append((r0, c0, d, 2 * d + 1))
        if below in occupied:
            regions.append((r0, c0, 2 * d + 1, d))
    return regions


# ----------------------------------------------------------------------
# Conflitos e serialização
# ----------------------------------------------------------------------
def rydberg_conflicts(layout: InterleavedLayout, gates: Sequence[CZGate]) -> Set[Tuple[int, int]]:
    """
    Relação de conflito entre CZs (pares de índices i < j).

    Duas portas conflitam se compartilham um átomo, se algum átomo de uma
    cai estritamente dentro do disco de interação da outra (centro na
    ancilla, raio igual à perna da porta) ou se as ancillas estão no mesmo
    cluster e os dois discos se intersectam.
    """
    if not gates:
        return set()
    atoms = np.array([layout.position(s) for g in gates for s in (g.ancilla, g.data)])
    owner = np.repeat(np.arange(len(gates)), 2)
    legs = np.linalg.norm(atoms[0::2] - atoms[1::2], axis=1)
    tree = cKDTree(atoms)

    conflicts: Set[Tuple[int, int]] = set()
    by_atom: Dict[int, List[int]] = {}
    by_cluster: Dict[int, List[int]] = {}
    for i, g in enumerate(gates):
        for s in (g.ancilla, g.data):
            by_atom.setdefault(s, []).append(i)
        by_cluster.setdefault(layout.sites[g.ancilla].cluster_id, []).append(i)
    for members in by_atom.values():
        for a in members:
            for b in members:
                if a < b:
                    conflicts.add((a, b))

    # ancillas vizinhas no mesmo cluster: basta os discos se tocarem
    for members in by_cluster.values():
        idx = np.array(members)
        centers = atoms[2 * idx]
        gaps = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=2)
        reach = legs[idx][:, None] + legs[idx][None, :]
        for a, b in np.argwhere(np.triu(gaps < reach, 1)):
            i, j = int(idx[a]), int(idx[b])
            conflicts.add((min(i, j), max(i, j)))

    for i, g in enumerate(gates):
        radius = legs[i] * (1 - DISTANCE_TOLERANCE)
        for atom in tree.query_ball_point(layout.position(g.ancilla), radius):
            j = int(owner[atom])
            if j != i:
                conflicts.add((min(i, j), max(i, j)))
    return conflicts


def schedule_cz_layers(layout: InterleavedLayout, gates: Sequence[CZGate]) -> List[List[CZGate]]:
    """
    Coloração gulosa first-fit dos CZs de uma rodada.

    Ordem determinística (perna, posição, cluster da ancilla): a posição p
    de todos os clusters cabe numa camada, e as k posições de um cluster
    conflitam entre si, o que dá k camadas por perna. Camadas de pernas
    diferentes nunca se misturam, porque as camadas H globais dos dados
    separam as pernas.
    """
    order = sorted(range(len(gates)), key=lambda i: (
        gates[i].step, layout.sites[gates[i].ancilla].position,
        layout.sites[gates[i].ancilla].cluster_id, gates[i].data))
    ordered = [gates[i] for i in order]
    conflicts = rydberg_conflicts(layout, ordered)
    neighbours: Dict[int, Set[int]] = {}
    for a, b in conflicts:
        neighbours.setdefault(a, set()).add(b)
        neighbours.setdefault(b, set()).add(a)

    layer_of: Dict[int, int] = {}
    layers: List[List[CZGate]] = []
    floor = 0
    current_step = None
    for i, gate in enumerate(ordered):
        if gate.step != current_step:
            floor = len(layers)
            current_step = gate.step
        blocked = {layer_of[j] for j in neighbours.get(i, ()) if j in layer_of}
        layer = floor
        while layer in blocked:
            layer += 1
        layer_of[i] = layer
        while len(layers) <= layer:
            layers.append([])
        layers[layer].append(gate)
    return layers


def round_duration(cz_layers: int, one_qubit_layers: int, t_1q: float, t_2q: float,
                   t_meas: float) -> float:
    """Duração de uma rodada de estabilizadores em µs"""
    return cz_layers * t_2q + one_qubit_layers * t_1q + t_meas
