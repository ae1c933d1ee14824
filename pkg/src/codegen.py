"""
Geração de circuitos físicos: memória ZXXZ, CNOT transversal, CNOT por
lattice surgery e merge intercalado entre grupos vizinhos.

Os detectores são derivados por um livro-razão de estabilizadores sobre
GF(2): cada medição cujo valor já é conhecido (como paridade de medições
anteriores) vira um detector comparando com a informação mais recente.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from src.circuit_ir import Circuit, CircuitBuilder
from src.exceptions import ContractError, GenerationError, InfeasibleSeamError
from src.geometry import (
    DISTANCE_TOLERANCE, LEG_ORDER, LEG_PAULI, CZGate, InterleavedLayout,
    Plaquette, rectangle_plaquettes, schedule_cz_layers,
)
from src.noise_model import NoiseParams

logger = logging.getLogger(__name__)

STATES = ("0", "1", "+", "-")


# ----------------------------------------------------------------------
# Moldura ZXXZ
# ----------------------------------------------------------------------
def frame_letter(row: int, col: int, std: str) -> str:
    """Pauli físico correspondente ao Pauli padrão no dado (row, col)"""
    if (row + col) % 2 == 0:
        return {"X": "Z", "Z": "X"}.get(std, std)
    return std


def frame_state(row: int, col: int, std_state: str) -> str:
    """Estado físico de um qubit de dado para o estado padrão pedido"""
    if (row + col) % 2 == 0:
        return {"0": "+", "1": "-", "+": "0", "-": "1"}[std_state]
    return std_state


def state_basis(state: str) -> str:
    return "Z" if state in ("0", "1") else "X"


# ----------------------------------------------------------------------
# Livro-razão de detectores
# ----------------------------------------------------------------------
class DetectorLedger:
    """
    Acompanha o grupo estabilizador dos dados (sem sinais) e, para cada
    Pauli de valor conhecido, a paridade de medições que o determina.

    Paulis são inteiros: bits X em [0, N) e bits Z em [N, 2N), indexados
    pelo id do sítio.
    """

    def __init__(self, n_sites: int):
        self.n = n_sites
        self.mask = (1 << n_sites) - 1
        self.facts: List[int] = []
        self.known: Dict[int, int] = {}

    # --- álgebra -------------------------------------------------------
    def pauli(self, letters: Iterable[Tuple[int, str]]) -> int:
        p = 0
        for site, letter in letters:
            if letter in "XY":
                p ^= 1 << site
            if letter in "ZY":
                p ^= 1 << (self.n + site)
        return p

    def anticommutes(self, a: int, b: int) -> bool:
        x1, z1 = a & self.mask, a >> self.n
        x2, z2 = b & self.mask, b >> self.n
        return bin((x1 & z2) ^ (z1 & x2)).count("1") % 2 == 1

    def support(self, p: int) -> int:
        return (p & self.mask) | (p >> self.n)

    # --- atualização ---------------------------------------------------
    def initialize(self, sites: Iterable[int]) -> None:
        """Todos os sítios começam em |0>"""
        for site in sites:
            z = self.pauli([(site, "Z")])
            self.facts.append(z)
            self.known[z] = 0

    def _random_update(self, p: int) -> bool:
        anti = [i for i, f in enumerate(self.facts) if self.anticommutes(f, p)]
        if not anti:
            return False
        pivot = self.facts[anti[0]]
        for i in anti[1:]:
            self.facts[i] ^= pivot
        self.facts[anti[0]] = p
        for key in [k for k in self.known if self.anticommutes(k, p)]:
            del self.known[key]
        return True

    def reset(self, site: int, letter: str) -> None:
        p = self.pauli([(site, letter)])
        self._random_update(p)
        bit = 1 << site
        for key in [k for k in self.known if self.support(k) & bit]:
            del self.known[key]
        self.known[p] = 0

    def conjugate_cx(self, control: int, target: int) -> None:
        def conj(p: int) -> int:
            if (p >> control) & 1:
                p ^= 1 << target
            if (p >> (self.n + target)) & 1:
                p ^= 1 << (self.n + control)
            return p

        self.facts = [conj(f) for f in self.facts]
        self.known = {conj(k): v for k, v in self.known.items()}

    def _basis(self) -> Dict[int, Tuple[int, int]]:
        """Eliminação gaussiana priorizando os valores mais recentes"""
        basis: Dict[int, Tuple[int, int]] = {}
        for key in reversed(list(self.known)):
            vec, rec = key, self.known[key]
            while vec:
                top = vec.bit_length() - 1
                if top not in basis:
                    basis[top] = (vec, rec)
                    break
                bvec, brec = basis[top]
                vec ^= bvec
                rec ^= brec
        return basis

    @staticmethod
    def _express(basis: Dict[int, Tuple[int, int]], p: int) -> Optional[int]:
        rec = 0
        while p:
            top = p.bit_length() - 1
            if top not in basis:
                return None
            bvec, brec = basis[top]
            p ^= bvec
            rec ^= brec
        return rec

    def expression(self, p: int) -> Optional[int]:
        if p in self.known:
            return self.known[p]
        return self._express(self._basis(), p)

    def measure_round(self, entries: Sequence[Tuple[int, int, bool]]) -> List[int]:
        """
        Processa medições simultâneas (Pauli, índice do registro, fresh).

        Returns:
            máscaras de registros de cada detector emitido
        """
        detectors: List[int] = []
        basis = None
        random_entries = []
        for p, record, fresh in entries:
            if any(self.anticommutes(f, p) for f in self.facts):
                random_entries.append(p)
                continue
            if fresh:
                continue
            if p in self.known:
                value = self.known[p]
            else:
                if basis is None:
                    basis = self._basis()
                value = self._express(basis, p)
            if value is not None:
                detectors.append(value ^ (1 << record))
        for p in random_entries:
            self._random_update(p)
        for p, record, _ in entries:
            self.known.pop(p, None)
            self.known[p] = 1 << record
        return detectors

    def measure_readout(self, readouts: Dict[int, Tuple[str, int]],
                        closing: Sequence[int]) -> List[int]:
        """
        Leitura de qubits de dados; fecha os estabilizadores em ``closing``
        cujo suporte inteiro foi lido na base correspondente.
        """
        detectors = []
        basis = None
        for p in closing:
            records = 0
            ok = True
            for site in _bits(self.support(p)):
                if site not in readouts:
                    ok = False
                    break
                letter, record = readouts[site]
                if self.pauli([(site, letter)]) != self._restrict(p, site):
                    ok = False
                    break
                records ^= 1 << record
            if not ok:
                continue
            if p in self.known:
                value = self.known[p]
            else:
                if basis is None:
                    basis = self._basis()
                value = self._express(basis, p)
            if value is not None:
                detectors.append(value ^ records)
        self.measure_round([(self.pauli([(site, letter)]), record, True)
                            for site, (letter, record) in sorted(readouts.items())])
        return detectors

    def _restrict(self, p: int, site: int) -> int:
        keep = (1 << site) | (1 << (self.n + site))
        return p & keep


def _bits(value: int) -> List[int]:
    result = []
    while value:
        low = value & -value
        result.append(low.bit_length() - 1)
        value ^= low
    return result


# ----------------------------------------------------------------------
# Patches e estabilizadores
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class Check:
    """Estabilizador ativo: ancilla, pernas (sítio, Pauli físico, passo)"""
    plaquette: Plaquette
    ancilla: int
    legs: Tuple[Tuple[int, str, int], ...]

    @property
    def kind(self) -> str:
        return self.plaquette.kind


@dataclass(frozen=True)
class Patch:
    """Qubit lógico: grupo da grade, posição no cluster e origem na rede"""
    group: Tuple[int, int]
    position: int
    row0: int
    col0: int
    d: int

    def cells(self) -> List[Tuple[int, int]]:
        return [(r, c) for r in range(self.row0, self.row0 + self.d)
                for c in range(self.col0, self.col0 + self.d)]

    def rectangle(self) -> Tuple[int, int, int, int]:
        return self.row0, self.col0, self.d, self.d

    def logical(self, std: str) -> List[Tuple[int, int]]:
        """Células do operador lógico padrão: Z numa linha, X numa coluna"""
        if std == "Z":
            return [(self.row0, c) for c in range(self.col0, self.col0 + self.d)]
        return [(r, self.col0) for r in range(self.row0, self.row0 + self.d)]


def make_patch(layout: InterleavedLayout, group: Tuple[int, int], position: int) -> Patch:
    if not layout.has_group(group):
        raise ContractError(f"grupo {group} não existe no layout")
    if not 0 <= position < layout.k:
        raise ContractError(f"posição {position} fora de [0, {layout.k})")
    r0, c0 = layout.group_origin(group)
    return Patch(tuple(group), position, r0, c0, layout.d)


def region_checks(layout: InterleavedLayout, rect: Tuple[int, int, int, int],
                  member_of_cell, ancilla_member, only: Optional[Set[Tuple[int, int]]] = None
                  ) -> List[Check]:
    """
    Estabilizadores do retângulo com membros escolhidos por célula.

    Args:
        member_of_cell: (row, col) -> posição do dado no cluster
        ancilla_member: Plaquette -> posição da ancilla no cluster
        only: se dado, mantém só plaquetas cujo canto toque essas células
    """
    checks = []
    for plaq in rectangle_plaquettes(*rect):
        cells = [plaq.data_cell(c) for c in plaq.corners]
        if only is not None and not any(cell in only for cell in cells):
            continue
        anc = layout.ancilla_site(plaq.row, plaq.col, ancilla_member(plaq))
        legs = []
        for corner in plaq.corners:
            r, c = plaq.data_cell(corner)
            legs.append((layout.data_site(r, c, member_of_cell(r, c)), LEG_PAULI[corner],
                         LEG_ORDER[plaq.kind].index(corner)))
        checks.append(Check(plaq, anc, tuple(legs)))
    return checks


def patch_checks(layout: InterleavedLayout, patch: Patch) -> List[Check]:
    return region_checks(layout, patch.rectangle(), lambda r, c: patch.position,
                         lambda plaq: patch.position)


# ----------------------------------------------------------------------
# Construtor de experimentos
# ----------------------------------------------------------------------
class _Experiment:
    """Emite rodadas, preparações e leituras mantendo o livro-razão"""

    def __init__(self, layout: InterleavedLayout, data_cells: Dict[Tuple[int, int], Set[int]],
                 timing: Optional[NoiseParams] = None):
        self.layout = layout
        self.timing = timing or NoiseParams()
        self.builder = CircuitBuilder()
        self.qubits: Dict[int, int] = {}
        self.ledger = DetectorLedger(len(layout.sites))
        self.data_sites = sorted(layout.data_site(r, c, m)
                                 for (r, c), members in data_cells.items() for m in members)
        for site in self.data_sites:
            self.q(site)
        self.ledger.initialize(self.data_sites)
        self._pending_resets: List[int] = []
        self._pending_h: List[int] = []
        self._pending_paulis: Dict[str, List[int]] = {"X": [], "Z": []}
        self._schedules: Dict[frozenset, List[List[CZGate]]] = {}
        self.cz_layers_per_round: List[int] = []

    def q(self, site: int) -> int:
        if site not in self.qubits:
            self.qubits[site] = len(self.qubits)
            s = self.layout.sites[site]
            self.builder.labels[self.qubits[site]] = (
                f"{s.species[0].upper()}({s.row},{s.col})#{s.position}")
        return self.qubits[site]

    def qs(self, sites: Iterable[int]) -> List[int]:
        return [self.q(s) for s in sites]

    # --- preparação ----------------------------------------------------
    def prepare(self, cells: Iterable[Tuple[int, int]], member_of_cell, std_state: str) -> None:
        """Agenda a preparação de dados no estado padrão pedido"""
        for r, c in cells:
            site = self.layout.data_site(r, c, member_of_cell(r, c))
            physical = frame_state(r, c, std_state)
            self._pending_resets.append(site)
            if physical in ("+", "-"):
                self._pending_h.append(site)
            if physical == "1":
                self._pending_paulis["X"].append(site)
            elif physical == "-":
                self._pending_paulis["Z"].append(site)
            self.ledger.reset(site, state_basis(physical))

    # --- rodadas -------------------------------------------------------
    def _schedule(self, checks: Sequence[Check]) -> List[List[CZGate]]:
        key = frozenset(checks)
        if key in self._schedules:
            return self._schedules[key]
        gates = [CZGate(ch.ancilla, site, step) for ch in checks for site, _, step in ch.legs]
        used = {(self.layout.sites[ch.ancilla].cluster_id, self.layout.sites[ch.ancilla].position)
                for ch in checks}
        for ch in checks:
            members = {self.layout.sites[site].position for site, _, _ in ch.legs}
            members.add(self.layout.sites[ch.ancilla].position)
            if len(members) != 1:
                continue
            for other in range(self.layout.k):
                anc_site = self.layout.ancilla_site(ch.plaquette.row, ch.plaquette.col, other)
                if (self.layout.sites[anc_site].cluster_id, other) in used:
                    continue
                for corner in ch.plaquette.corners:
                    r, c = ch.plaquette.data_cell(corner)
                    gates.append(CZGate(anc_site, self.layout.data_site(r, c, other),
                                        LEG_ORDER[ch.kind].index(corner)))
        layers = schedule_cz_layers(self.layout, gates)
        self._schedules[key] = layers
        return layers

    def _layer(self, duration: float) -> None:
        self.builder.tick(duration)

    def round(self, checks: Sequence[Check], fresh: Set[Check] = frozenset(),
              end_measure: Sequence[Tuple[int, str]] = (),
              swap: Sequence[Tuple[int, int]] = ()) -> Dict[Check, int]:
        """
        Uma rodada de estabilizadores.

        Args:
            checks: estabilizadores ativos
            fresh: estabilizadores cuja medição reinicia a cadeia (sem detector)
            end_measure: medições de dados (sítio, base física) junto das ancillas
            swap: pares (dado, ancilla livre) para leitura por troca

        Returns:
            índice do registro de cada estabilizador medido
        """
        t = self.timing
        b = self.builder
        ancillas = [ch.ancilla for ch in checks]
        if len(set(ancillas)) != len(ancillas):
            raise GenerationError("duas plaquetas ativas compartilham a mesma ancilla")

        # Reset
        b.append("RESET", self.qs(ancillas + self._pending_resets + [a for _, a in swap]))
        self._layer(0.0)
        # Hadamards de preparação
        b.append("H", self.qs(ancillas + self._pending_h))
        self._layer(t.t_1q)
        if self._pending_paulis["X"] or self._pending_paulis["Z"]:
            b.append("X", self.qs(self._pending_paulis["X"]))
            b.append("Z", self.qs(self._pending_paulis["Z"]))
            self._layer(t.t_1q)
        self._pending_resets, self._pending_h = [], []
        self._pending_paulis = {"X": [], "Z": []}

        # Camadas de CZ com H globais nos dados entre as pernas
        active = {(ch.ancilla, site) for ch in checks for site, _, _ in ch.legs}
        layers = self._schedule(checks)
        cz_count = 0
        current_step = 0
        for layer in layers:
            step = layer[0].step
            while current_step < step:
                current_step += 1
                if current_step in (1, 3):
                    b.append("H", self.qs(self.data_sites))
                    self._layer(t.t_1q)
            for gate in layer:
                if (gate.ancilla, gate.data) in active:
                    b.append("CZ", [self.q(gate.ancilla), self.q(gate.data)])
            self._layer(t.t_2q)
            cz_count += 1
        while current_step < 3:
            current_step += 1
            if current_step in (1, 3):
                b.append("H", self.qs(self.data_sites))
                self._layer(t.t_1q)
        self.cz_layers_per_round.append(cz_count)

        if swap:
            self._emit_swap(swap)

        # Medição
        records = b.measure("MX", self.qs(ancillas))
        end_z = [s for s, basis in end_measure if basis == "Z"]
        end_x = [s for s, basis in end_measure if basis == "X"]
        end_records = dict(zip(end_z, b.measure("MZ", self.qs(end_z))))
        end_records.update(zip(end_x, b.measure("MX", self.qs(end_x))))
        self._layer(t.t_meas)

        entries = []
        by_check = {}
        for ch, rec in zip(checks, records):
            p = self.ledger.pauli((site, letter) for site, letter, _ in ch.legs)
            entries.append((p, rec, ch in fresh))
            by_check[ch] = rec
        for detector in self.ledger.measure_round(entries):
            b.detector(_bits(detector))
        if end_measure:
            singles = [(self.ledger.pauli([(s, basis)]), end_records[s], False)
                       for s, basis in end_measure]
            for detector in self.ledger.measure_round(singles):
                b.detector(_bits(detector))
        return by_check

    def _emit_swap(self, pairs: Sequence[Tuple[int, int]]) -> None:
        """Troca dado <-> ancilla com 3 CX alternados (H-CZ-H)"""
        t = self.timing
        b = self.builder
        data = [d for d, _ in pairs]
        anc = [a for _, a in pairs]
        for target, then in ((anc, data), (data, anc), (anc, None)):
            b.append("H", self.qs(target))
            self._layer(t.t_1q)
            for d, a in pairs:
                b.append("CZ", [self.q(a), self.q(d)])
            self._layer(t.t_2q)
            b.append("H", self.qs(target))
            self._layer(t.t_1q)

    def transversal_cnot(self, pairs: Sequence[Tuple[int, int, int, int]]) -> None:
        """
        CNOT transversal na moldura ZXXZ: pares (controle, alvo, row, col);
        em células de paridade par a direção física se inverte.
        """
        t = self.timing
        b = self.builder
        physical = []
        for c_site, t_site, r, c in pairs:
            if (r + c) % 2 == 0:
                physical.append((t_site, c_site))
            else:
                physical.append((c_site, t_site))
        targets = [tgt for _, tgt in physical]
        b.append("H", self.qs(targets))
        self._layer(t.t_1q)
        for ctrl, tgt in physical:
            b.append("CZ", [self.q(ctrl), self.q(tgt)])
        self._layer(t.t_2q)
        b.append("H", self.qs(targets))
        self._layer(t.t_1q)
        for ctrl, tgt in physical:
            self.ledger.conjugate_cx(ctrl, tgt)

    def readout(self, sites: Sequence[Tuple[int, str]], closing: Sequence[Check]) -> Dict[int, int]:
        """Medição direta de dados (sítio, base física) fechando detectores"""
        b = self.builder
        z_sites = [s for s, basis in sites if basis == "Z"]
        x_sites = [s for s, basis in sites if basis == "X"]
        records = dict(zip(z_sites, b.measure("MZ", self.qs(z_sites))))
        records.update(zip(x_sites, b.measure("MX", self.qs(x_sites))))
        self._layer(self.timing.t_meas)
        readouts = {s: (basis, records[s]) for s, basis in sites}
        closing_paulis = [self.ledger.pauli((site, letter) for site, letter, _ in ch.legs)
                          for ch in closing]
        for detector in self.ledger.measure_readout(readouts, closing_paulis):
            self.builder.detector(_bits(detector))
        return records

    def build(self) -> Circuit:
        self.builder.n_qubits = len(self.qubits)
        return self.builder.build()


def _logical_readout_sites(layout: InterleavedLayout, patch: Patch, std: str,
                           member_of_cell=None) -> List[Tuple[int, str]]:
    """Todos os dados do patch medidos na base física de ``std``"""
    member = member_of_cell or (lambda r, c: patch.position)
    return [(layout.data_site(r, c, member(r, c)), frame_letter(r, c, std))
            for r, c in patch.cells()]


def _logical_records(layout: InterleavedLayout, patch: Patch, std: str,
                     records: Dict[int, int]) -> List[int]:
    return [records[layout.data_site(r, c, patch.position)] for r, c in patch.logical(std)]


def _closing(checks: Sequence[Check], std: str) -> List[Check]:
    return [ch for ch in checks if ch.kind == std]


def _check_state(state: str) -> None:
    if state not in STATES:
        raise ContractError(f"estado de entrada inválido: {state!r} (use {STATES})")


# ----------------------------------------------------------------------
# Experimentos
# ----------------------------------------------------------------------
def gen_memory(layout: InterleavedLayout, patch: Optional[Patch] = None, rounds: int = 1,
               state: str = "0", timing: Optional[NoiseParams] = None) -> Circuit:
    """
    Memória ZXXZ de um patch.

    Args:
        layout: layout intercalado
        patch: patch a simular (padrão: grupo (0,0), posição 0)
        rounds: número de rodadas (>= 1)
        state: estado lógico preparado e lido ('0', '1', '+', '-')
        timing: tempos de porta/medição para as durações dos TICKs

    Returns:
        Circuit com detectores e um observável (o lógico lido)
    """
    if rounds < 1:
        raise ContractError("rounds deve ser >= 1")
    _check_state(state)
    patch = patch or make_patch(layout, layout.groups[0], 0)
    member = lambda r, c: patch.position
    exp = _Experiment(layout, {cell: {patch.position} for cell in patch.cells()}, timing)
    checks = patch_checks(layout, patch)
    exp.prepare(patch.cells(), member, state)
    for _ in range(rounds):
        exp.round(checks)
    std = state_basis(state)
    records = exp.readout(_logical_readout_sites(layout, patch, std), _closing(checks, std))
    exp.builder.observable(0, _logical_records(layout, patch, std, records))
    circuit = exp.build()
    logger.debug(f"memória d={layout.d} k={layout.k}: {circuit.num_measurements} medições")
    return circuit


def gen_transversal_cnot_experiment(layout: InterleavedLayout, d: Optional[int] = None,
                                    inputs: Tuple[str, str] = ("0", "+"),
                                    rounds: Optional[int] = None,
                                    timing: Optional[NoiseParams] = None) -> Circuit:
    """
    CNOT transversal entre as posições 0 (controle) e 1 (alvo) de um grupo.

    d rodadas antes e d depois do CNOT; observáveis: lógico do controle e do
    alvo na base de cada entrada.
    """
    if layout.k < 2:
        raise ContractError("CNOT transversal exige k >= 2")
    if d is not None and d != layout.d:
        raise ContractError(f"layout tem d={layout.d}, pedido d={d}")
    for state in inputs:
        _check_state(state)
    rounds = rounds or layout.d
    group = layout.groups[0]
    control = make_patch(layout, group, 0)
    target = make_patch(layout, group, 1)
    cells = {cell: {0, 1} for cell in control.cells()}
    exp = _Experiment(layout, cells, timing)

    c_checks = patch_checks(layout, control)
    t_checks = patch_checks(layout, target)
    checks = c_checks + t_checks
    exp.prepare(control.cells(), lambda r, c: 0, inputs[0])
    exp.prepare(target.cells(), lambda r, c: 1, inputs[1])
    for _ in range(rounds):
        exp.round(checks)

    exp.transversal_cnot([(layout.data_site(r, c, 0), layout.data_site(r, c, 1), r, c)
                          for r, c in control.cells()])

    # Setores que recebem estabilizadores do outro patch reiniciam a cadeia
    fresh = {ch for ch in c_checks if ch.kind == "X"} | {ch for ch in t_checks if ch.kind == "Z"}
    for i in range(rounds):
        exp.round(checks, fresh=(fresh if i == 0 else frozenset()))

    bases = [state_basis(s) for s in inputs]
    sites = (_logical_readout_sites(layout, control, bases[0])
             + _logical_readout_sites(layout, target, bases[1]))
    records = exp.readout(sites, _closing(c_checks, bases[0]) + _closing(t_checks, bases[1]))
    exp.builder.observable(0, _logical_records(layout, control, bases[0], records))
    exp.builder.observable(1, _logical_records(layout, target, bases[1], records))
    return exp.build()


def _adjacency(a: Tuple[int, int], b: Tuple[int, int]) -> str:
    if a[0] == b[0] and b[1] == a[1] + 1:
        return "horizontal"
    if a[1] == b[1] and b[0] == a[0] + 1:
        return "vertical"
    raise ContractError(f"grupos {a} e {b} não são vizinhos (b à direita ou abaixo de a)")


def _gap_cells(layout: InterleavedLayout, a: Tuple[int, int], orientation: str) -> List[Tuple[int, int]]:
    r0, c0 = layout.group_origin(a)
    d = layout.d
    if orientation == "vertical":
        return [(r0 + d, c) for c in range(c0, c0 + d)]
    return [(r, c0 + d) for r in range(r0, r0 + d)]


def _merged_rect(layout: InterleavedLayout, a: Tuple[int, int], orientation: str):
    r0, c0 = layout.group_origin(a)
    d = layout.d
    return (r0, c0, 2 * d + 1, d) if orientation == "vertical" else (r0, c0, d, 2 * d + 1)


def _merge_checks(layout: InterleavedLayout, patch_a: Patch, patch_b: Patch, orientation: str,
                  gap_member: int) -> Tuple[List[Check], List[Check]]:
    """
    Estabilizadores do patch fundido e, separadamente, os de costura (tipo
    do merge, tocando a lacuna). Valida o comprimento das pernas.
    """
    gap = set(_gap_cells(layout, patch_a.group, orientation))
    cells_a = set(patch_a.cells())

    def member_of_cell(r, c):
        if (r, c) in gap:
            return gap_member
        return patch_a.position if (r, c) in cells_a else patch_b.position

    def ancilla_member(plaq: Plaquette):
        cells = [plaq.data_cell(corner) for corner in plaq.corners]
        if any(cell in cells_a for cell in cells) or all(cell in gap for cell in cells):
            return patch_a.position
        return patch_b.position

    rect = _merged_rect(layout, patch_a.group, orientation)
    merged = region_checks(layout, rect, member_of_cell, ancilla_member)
    seam_kind = "Z" if orientation == "vertical" else "X"
    seam = [ch for ch in merged if ch.kind == seam_kind
            and any(ch.plaquette.data_cell(corner) in gap for corner in ch.plaquette.corners)]

    limit = layout.r_ancilla_data * (1 + DISTANCE_TOLERANCE)
    for ch in merged:
        for site, _, _ in ch.legs:
            length = layout.distance(ch.ancilla, site)
            if length > limit:
                raise InfeasibleSeamError(
                    f"perna de {length:.2f} µm na plaqueta ({ch.plaquette.row}, "
                    f"{ch.plaquette.col}) excede r_ancilla_data = {layout.r_ancilla_data} µm")
    return merged, seam


def gen_lattice_surgery_cnot_experiment(layout: InterleavedLayout, d: Optional[int] = None,
                                        inputs: Tuple[str, str] = ("0", "0"),
                                        rounds: Optional[int] = None,
                                        timing: Optional[NoiseParams] = None) -> Circuit:
    """
    CNOT por medições: M_ZZ(C, A), M_XX(A, T), M_Z(A).

    Layout padrão (k=1) com controle em (0,0), ancilla em (1,0) e alvo em
    (1,1). As correções X_T^(m1⊕m3) e Z_C^(m2) entram nos observáveis.
    """
    if d is not None and d != layout.d:
        raise ContractError(f"layout tem d={layout.d}, pedido d={d}")
    for group in ((0, 0), (1, 0), (1, 1)):
        if not layout.has_group(group):
            raise ContractError("layout precisa dos grupos (0,0), (1,0) e (1,1) adjacentes")
    for state in inputs:
        _check_state(state)
    rounds = rounds or layout.d
    dd = layout.d

    control = make_patch(layout, (0, 0), 0)
    ancilla = make_patch(layout, (1, 0), 0)
    target = make_patch(layout, (1, 1), 0)
    gap_zz = _gap_cells(layout, (0, 0), "vertical")
    gap_xx = _gap_cells(layout, (1, 0), "horizontal")
    cells = {cell: {0} for p in (control, ancilla, target) for cell in p.cells()}
    cells.update({cell: {0} for cell in gap_zz + gap_xx})
    exp = _Experiment(layout, cells, timing)
    zero = lambda r, c: 0

    c_checks = patch_checks(layout, control)
    a_checks = patch_checks(layout, ancilla)
    t_checks = patch_checks(layout, target)
    zz_checks, zz_seam = _merge_checks(layout, control, ancilla, "vertical", 0)
    xx_checks, xx_seam = _merge_checks(layout, ancilla, target, "horizontal", 0)

    exp.prepare(control.cells(), zero, inputs[0])
    exp.prepare(ancilla.cells(), zero, "+")
    exp.prepare(target.cells(), zero, inputs[1])
    for _ in range(rounds):
        exp.round(c_checks + a_checks + t_checks)

    # M_ZZ(C, A): lacuna em |+>, costura tipo Z
    exp.prepare(gap_zz, zero, "+")
    m1: List[int] = []
    for i in range(dd):
        split = [(layout.data_site(r, c, 0), frame_letter(r, c, "X")) for r, c in gap_zz] \
            if i == dd - 1 else ()
        recs = exp.round(zz_checks + t_checks, end_measure=split)
        m1 = [recs[ch] for ch in zz_seam]

    # M_XX(A, T): lacuna em |0>, costura tipo X
    exp.prepare(gap_xx, zero, "0")
    m2: List[int] = []
    for i in range(dd):
        split = [(layout.data_site(r, c, 0), frame_letter(r, c, "Z")) for r, c in gap_xx] \
            if i == dd - 1 else ()
        recs = exp.round(c_checks + xx_checks, end_measure=split)
        m2 = [recs[ch] for ch in xx_seam]

    # M_Z(A): troca dado -> ancilla livre, medição da espécie ancilla
    partners = []
    for r, c in ancilla.cells():
        if not layout.has_ancilla(r - 1, c):
            raise GenerationError(f"sem ancilla livre para o dado ({r}, {c})")
        partners.append((layout.data_site(r, c, 0), layout.ancilla_site(r - 1, c, 0), r, c))
    swap = [(dsite, asite) for dsite, asite, _, _ in partners]
    exp.round(c_checks + t_checks, swap=swap)
    m3_records = _swap_readout(exp, partners, ancilla, _closing(a_checks, "Z"))

    bases = [state_basis(s) for s in inputs]
    sites = (_logical_readout_sites(layout, control, bases[0])
             + _logical_readout_sites(layout, target, bases[1]))
    records = exp.readout(sites, _closing(c_checks, bases[0]) + _closing(t_checks, bases[1]))

    obs_c = _logical_records(layout, control, bases[0], records)
    if bases[0] == "X":
        obs_c = obs_c + m2
    obs_t = _logical_records(layout, target, bases[1], records)
    if bases[1] == "Z":
        obs_t = obs_t + m1 + [m3_records[layout.data_site(r, c, 0)] for r, c in ancilla.logical("Z")]
    exp.builder.observable(0, _cancel_pairs(obs_c))
    exp.builder.observable(1, _cancel_pairs(obs_t))
    circuit = exp.build()
    logger.debug(f"lattice surgery d={dd}: {circuit.n_qubits} qubits, "
                 f"{circuit.num_measurements} medições")
    return circuit


def _cancel_pairs(records: Sequence[int]) -> List[int]:
    """Remove registros repetidos um número par de vezes"""
    odd: Set[int] = set()
    for r in records:
        odd ^= {r}
    return sorted(odd)


def _swap_readout(exp: _Experiment, partners, patch: Patch, closing: Sequence[Check]) -> Dict[int, int]:
    """
    Mede as ancillas que receberam o estado dos dados (após a troca da
    rodada anterior) e fecha os detectores do patch. Devolve registro por
    sítio de dado.
    """
    # A troca foi emitida dentro da rodada; as ancillas parceiras são medidas
    # agora na base física do lógico Z padrão.
    b = exp.builder
    z_pairs = [(d, a) for d, a, r, c in partners if frame_letter(r, c, "Z") == "Z"]
    x_pairs = [(d, a) for d, a, r, c in partners if frame_letter(r, c, "Z") == "X"]
    records = dict(zip([d for d, _ in z_pairs], b.measure("MZ", exp.qs([a for _, a in z_pairs]))))
    records.update(zip([d for d, _ in x_pairs], b.measure("MX", exp.qs([a for _, a in x_pairs]))))
    exp._layer(exp.timing.t_meas)
    readouts = {d: (frame_letter(r, c, "Z"), records[d]) for d, a, r, c in partners}
    closing_paulis = [exp.ledger.pauli((site, letter) for site, letter, _ in ch.legs)
                      for ch in closing]
    for detector in exp.ledger.measure_readout(readouts, closing_paulis):
        b.detector(_bits(detector))
    for d, _, r, c in partners:
        exp.ledger.reset(d, "Z")
    return records


def gen_interleaved_merge(layout: InterleavedLayout, group_a: Tuple[int, int], pos_a: int,
                          group_b: Tuple[int, int], pos_b: int, basis: str,
                          d: Optional[int] = None, rounds: Optional[int] = None,
                          states: Tuple[str, str] = ("+", "+"),
                          timing: Optional[NoiseParams] = None) -> Circuit:
    """
    Merge intercalado entre a posição pos_a do grupo A e pos_b do grupo B.

    basis 'X' exige B à direita de A; 'Z' exige B abaixo. Os demais lógicos
    dos dois grupos seguem com rodadas normais. Observável 0: produto da
    costura na primeira rodada fundida (paridade lógica conjunta).
    """
    if d is not None and d != layout.d:
        raise ContractError(f"layout tem d={layout.d}, pedido d={d}")
    orientation = _adjacency(tuple(group_a), tuple(group_b))
    expected = "X" if orientation == "horizontal" else "Z"
    if basis != expected:
        raise ContractError(f"merge {orientation} mede {expected}{expected}, não {basis}{basis}")
    for state in states:
        _check_state(state)
        if state_basis(state) != basis:
            raise ContractError("estados de entrada devem estar na base do merge")
    rounds = rounds or layout.d
    k = layout.k

    patch_a = make_patch(layout, group_a, pos_a)
    patch_b = make_patch(layout, group_b, pos_b)
    gap = _gap_cells(layout, patch_a.group, orientation)
    merged, seam = _merge_checks(layout, patch_a, patch_b, orientation, pos_a)

    others = [make_patch(layout, g, q) for g in (tuple(group_a), tuple(group_b)) for q in range(k)
              if (g, q) not in ((patch_a.group, pos_a), (patch_b.group, pos_b))]
    cells: Dict[Tuple[int, int], Set[int]] = {}
    for p in others + [patch_a, patch_b]:
        for cell in p.cells():
            cells.setdefault(cell, set()).add(p.position)
    for cell in gap:
        cells.setdefault(cell, set()).add(pos_a)
    exp = _Experiment(layout, cells, timing)

    other_checks = [ch for p in others for ch in patch_checks(layout, p)]
    a_checks = patch_checks(layout, patch_a)
    b_checks = patch_checks(layout, patch_b)
    for p in others:
        exp.prepare(p.cells(), lambda r, c, p=p: p.position, "0")
    exp.prepare(patch_a.cells(), lambda r, c: pos_a, states[0])
    exp.prepare(patch_b.cells(), lambda r, c: pos_b, states[1])
    exp.round(other_checks + a_checks + b_checks)

    exp.prepare(gap, lambda r, c: pos_a, "+" if basis == "Z" else "0")
    seam_records: List[int] = []
    for i in range(rounds):
        recs = exp.round(other_checks + merged)
        if i == 0:
            seam_records = [recs[ch] for ch in seam]

    member = lambda r, c: pos_a if (r, c) in set(patch_a.cells()) | set(gap) else pos_b
    merged_sites = [(layout.data_site(r, c, member(r, c)), frame_letter(r, c, basis))
                    for r, c in patch_a.cells() + patch_b.cells() + gap]
    other_sites = [s for p in others for s in _logical_readout_sites(layout, p, "Z")]
    exp.readout(merged_sites + other_sites,
                _closing(merged, basis) + _closing(other_checks, "Z"))
    exp.builder.observable(0, seam_records)
    return exp.build()


# ----------------------------------------------------------------------
# Contabilidade de qubits
# ----------------------------------------------------------------------
def patch_footprint(d: int, k: int = 1, n_logical: int = 1) -> Dict[str, float]:
    """
    Qubits físicos por lógico e economia do CNOT transversal.

    Returns:
        dicionário com qubits por patch, total para n lógicos, custo extra
        do patch ancilla do CNOT por lattice surgery e a razão entre os dois
        CNOTs (3 patches contra 2)
    """
    per_patch = 2 * d * d - 1
    return {
        "d": d,
        "k": k,
        "n_logical": n_logical,
        "qubits_per_patch": per_patch,
        "total_qubits": n_logical * per_patch,
        "ls_cnot_qubits": 3 * per_patch,
        "transversal_cnot_qubits": 2 * per_patch,
        "ls_over_transversal": 1.5,
        "groups_needed": -(-n_logical // k),
    }
