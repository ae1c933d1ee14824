"""
Simulador de eventos discretos em nível lógico: estima o tempo total de
programas Clifford+T nos layouts compact/fast com roteamento por lattice
surgery (padrão ou intercalada), por movimento de átomos ou híbrido.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from src.benchmarks import LogicalProgram
from src.exceptions import CapacityError, ContractError, RoutingError, UsageError
from src.geometry import VALID_GROUP_SIZES, cluster_pitch

logger = logging.getLogger(__name__)

LAYOUT_KINDS = ("compact", "fast")
MODES = ("standard_ls", "interleaved_ls", "movement", "hybrid")
MODE_ALIASES = {"sls": "standard_ls", "ils": "interleaved_ls", "move": "movement"}
CSV_COLUMNS = ["benchmark", "n", "layout", "mode", "k", "d", "t_meas_us",
               "speed_um_per_us", "total_us", "relative", "seed"]

DATA, ROUTING, FACTORY, EMPTY = "D", "R", "F", "."

Tile = Tuple[int, int]


def normalize_mode(mode: str) -> str:
    mode = MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        raise UsageError(f"modo desconhecido: {mode!r} (use {', '.join(MODES)} ou sls/ils)")
    return mode


# ----------------------------------------------------------------------
# Tempos
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class TimingParams:
    """Tempos em µs e geometria em µm"""
    d: int
    k: int = 16
    spacing: float = 10.0
    t_1q: float = 1.0
    t_2q: float = 5.0
    t_meas: float = 1e4
    speed: float = 0.55

    def __post_init__(self):
        if self.d < 1:
            raise ContractError("d deve ser >= 1")
        if self.speed <= 0 or self.t_meas <= 0:
            raise ContractError("velocidade e t_meas devem ser > 0")

    @classmethod
    def from_hardware(cls, k: int, d: int, spacing: float, t_1q: float, t_2q: float,
                      t_meas: float, speed: float) -> "TimingParams":
        return cls(d=d, k=k, spacing=spacing, t_1q=t_1q, t_2q=t_2q, t_meas=t_meas, speed=speed)

    @property
    def t_round(self) -> float:
        """Medição + 4k camadas de CZ + 3 camadas de 1 qubit"""
        return self.t_meas + 4 * self.k * self.t_2q + 3 * self.t_1q

    @property
    def tile_pitch(self) -> float:
        """Lado de um tile lógico: d passos de cluster"""
        return self.d * cluster_pitch(self.k, self.spacing)

    def for_group_size(self, k: int) -> "TimingParams":
        return replace(self, k=k)


# ----------------------------------------------------------------------
# Layout de dispositivo
# ----------------------------------------------------------------------
@dataclass
class DeviceLayout:
    kind: str
    k: int
    grid: List[List[str]]
    data_tiles: List[Tile] = field(default_factory=list)
    factories: List[Tile] = field(default_factory=list)

    @property
    def height(self) -> int:
        return len(self.grid)

    @property
    def width(self) -> int:
        return len(self.grid[0]) if self.grid else 0

    def tile(self, t: Tile) -> str:
        r, c = t
        if 0 <= r < self.height and 0 <= c < self.width:
            return self.grid[r][c]
        return EMPTY

    def neighbours(self, t: Tile) -> List[Tile]:
        r, c = t
        return sorted(n for n in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1))
                      if self.tile(n) != EMPTY)

    def routing_neighbours(self, t: Tile) -> List[Tile]:
        return [n for n in self.neighbours(t) if self.tile(n) == ROUTING]

    def count(self, kind: str) -> int:
        return sum(row.count(kind) for row in self.grid)

    @property
    def slots(self) -> int:
        return len(self.data_tiles) * self.k

    def to_text(self) -> str:
        return "\n".join("".join(row) for row in self.grid) + "\n"


def _place_factories(row: List[str], count: int, width: int) -> int:
    placed = 0
    for i in range(count):
        col = 1 + int((i + 0.5) * width / count)
        col = min(col, width)
        if row[col] != FACTORY:
            row[col] = FACTORY
            placed += 1
    return placed


def build_device_layout(kind: str, n_qubits: int, k: int) -> DeviceLayout:
    """
    Monta o layout de tiles.

    compact: fábricas, faixa R, blocos (D, D, R)..., fábricas; fast: R, D, R,
    D, ..., R. Ambos com uma coluna de roteamento à esquerda e largura
    ceil(sqrt(tiles de dados)).
    """
    if kind not in LAYOUT_KINDS:
        raise UsageError(f"layout desconhecido: {kind!r} (use {', '.join(LAYOUT_KINDS)})")
    if k not in VALID_GROUP_SIZES:
        raise ContractError(f"k deve estar em {VALID_GROUP_SIZES}")
    if n_qubits < 1:
        raise ContractError("programa sem qubits")
    n_tiles = -(-n_qubits // k)
    width = math.isqrt(n_tiles - 1) + 1 if n_tiles > 1 else 1
    data_rows = -(-n_tiles // width)

    body: List[str] = [ROUTING]
    if kind == "compact":
        for i in range(data_rows):
            body.append(DATA)
            if i % 2 == 1 or i == data_rows - 1:
                body.append(ROUTING)
    else:
        for _ in range(data_rows):
            body += [DATA, ROUTING]

    grid: List[List[str]] = [[EMPTY] * (width + 1)]
    remaining = n_tiles
    data_tiles: List[Tile] = []
    for kind_of_row in body:
        r = len(grid)
        row = [ROUTING] + [ROUTING] * width
        if kind_of_row == DATA:
            for c in range(1, width + 1):
                if remaining > 0:
                    row[c] = DATA
                    data_tiles.append((r, c))
                    remaining -= 1
        grid.append(row)
    grid.append([EMPTY] * (width + 1))

    n_factories = max(1, n_qubits // 8)
    top = -(-n_factories // 2)
    placed = _place_factories(grid[0], top, width)
    placed += _place_factories(grid[-1], n_factories - top, width) if n_factories > top else 0
    if placed < n_factories:
        logger.warning(f"⚠️ {n_factories} fábricas pedidas, {placed} cabem na largura {width}")
    factories = [(r, c) for r in (0, len(grid) - 1) for c in range(width + 1)
                 if grid[r][c] == FACTORY]
    layout = DeviceLayout(kind, k, grid, data_tiles, factories)
    logger.debug(f"layout {kind} k={k}: {len(data_tiles)} dados, "
                 f"{layout.count(ROUTING)} roteamento, {len(factories)} fábricas")
    return layout


def space_overhead(layout: DeviceLayout) -> float:
    """Tiles lógicos (dados + roteamento) por tile de dados"""
    return (len(layout.data_tiles) + layout.count(ROUTING)) / len(layout.data_tiles)


# ----------------------------------------------------------------------
# Mapeamento e agendamento
# ----------------------------------------------------------------------
def map_qubits(interactions: Dict[Tuple[int, int], int], n_qubits: int,
               layout: DeviceLayout) -> Dict[int, Tile]:
    """
    Guloso: arestas por contagem decrescente colocam os dois extremos no
    mesmo grupo quando há vagas; o resto preenche os grupos em ordem.
    """
    if n_qubits > layout.slots:
        raise CapacityError(f"{n_qubits} qubits excedem {layout.slots} vagas do layout")
    free = {t: layout.k for t in layout.data_tiles}
    where: Dict[int, Tile] = {}

    def first_with(room: int) -> Optional[Tile]:
        for t in layout.data_tiles:
            if free[t] >= room:
                return t
        return None

    for (u, v), _ in sorted(interactions.items(), key=lambda item: (-item[1], item[0])):
        if u in where and v in where:
            continue
        if u not in where and v not in where:
            t = first_with(2)
            if t is None:
                continue
            where[u] = where[v] = t
            free[t] -= 2
            continue
        placed, other = (u, v) if u in where else (v, u)
        t = where[placed]
        if free[t] > 0:
            where[other] = t
            free[t] -= 1

    for q in range(n_qubits):
        if q not in where:
            t = first_with(1)
            where[q] = t
            free[t] -= 1
    return where


def schedule_asap(program: LogicalProgram) -> List[List[int]]:
    """Fatias ASAP: cada porta na primeira fatia após seus predecessores"""
    level_of_qubit = [0] * program.n
    slices: List[List[int]] = []
    for index, gate in enumerate(program.gates):
        level = max(level_of_qubit[q] for q in gate.qubits)
        if level == len(slices):
            slices.append([])
        slices[level].append(index)
        for q in gate.qubits:
            level_of_qubit[q] = level + 1
    return slices


# ----------------------------------------------------------------------
# Eventos
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class LogicalOpEvent:
    kind: str                       # CNOT, T, H, S ou MOVE
    gate: int
    operands: Tuple[int, ...]
    step: int
    start: float
    end: float
    path: Tuple[Tile, ...] = ()

    def to_text(self) -> str:
        path = " ".join(f"{r},{c}" for r, c in self.path)
        ops = ",".join(str(o) for o in self.operands)
        return f"{self.step}\t{self.kind}\t{self.gate}\t{ops}\t{self.start:.3f}\t{self.end:.3f}\t{path}"


@dataclass
class SimulationResult:
    total_us: float
    steps: int
    postponed: int
    routed_cnots: int
    moves: int
    events: List[LogicalOpEvent] = field(default_factory=list)


class _Router:
    """BFS sobre tiles de roteamento com capacidade restante"""

    def __init__(self, layout: DeviceLayout):
        self.layout = layout
        self.factory_adjacent = sorted({r for f in layout.factories
                                        for r in layout.routing_neighbours(f)})
        self._static: Dict[Tuple[Tuple[Tile, ...], Tuple[Tile, ...]], Optional[Tuple[Tile, ...]]] = {}

    def _bfs(self, sources: Sequence[Tile], targets: Set[Tile],
             usage: Optional[Dict[Tile, int]], capacity: int) -> Optional[Tuple[Tile, ...]]:
        ok = lambda t: usage is None or usage.get(t, 0) < capacity
        parent: Dict[Tile, Optional[Tile]] = {}
        queue = deque()
        for s in sorted(sources):
            if ok(s) and s not in parent:
                parent[s] = None
                queue.append(s)
        while queue:
            t = queue.popleft()
            if t in targets:
                path = [t]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                return tuple(reversed(path))
            for n in self.layout.routing_neighbours(t):
                if n not in parent and ok(n):
                    parent[n] = t
                    queue.append(n)
        return None

    def path(self, sources: Sequence[Tile], targets: Sequence[Tile],
             usage: Dict[Tile, int], capacity: int) -> Optional[Tuple[Tile, ...]]:
        key = (tuple(sources), tuple(targets))
        if key not in self._static:
            self._static[key] = self._bfs(sources, set(targets), None, capacity)
        static = self._static[key]
        if static is None:
            return None
        if all(usage.get(t, 0) < capacity for t in static):
            return static
        return self._bfs(sources, set(targets), usage, capacity)

    def between(self, a: Tile, b: Tile, usage, capacity) -> Optional[Tuple[Tile, ...]]:
        return self.path(self.layout.routing_neighbours(a), self.layout.routing_neighbours(b),
                         usage, capacity)

    def to_factory(self, a: Tile, usage, capacity) -> Optional[Tuple[Tile, ...]]:
        return self.path(self.layout.routing_neighbours(a), self.factory_adjacent, usage, capacity)


def _euclid(a: Tile, b: Tile) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass
class RoutingState:
    """Estado que atravessa as fatias: relógio, canal de movimento e contadores"""
    mapping: Dict[int, Tile]
    router: "_Router"
    now: float = 0.0
    channel_free: float = 0.0
    step: int = 0
    postponed: int = 0
    routed: int = 0
    moves: int = 0

    @classmethod
    def for_layout(cls, layout: DeviceLayout, mapping: Dict[int, Tile]) -> "RoutingState":
        return cls(dict(mapping), _Router(layout))


def _move(state: RoutingState, index: int, gate, distance: float,
          timing: TimingParams) -> Tuple[float, LogicalOpEvent]:
    travel = 2 * distance * timing.tile_pitch / timing.speed
    start = max(state.now, state.channel_free)
    state.channel_free = start + travel
    event = LogicalOpEvent("MOVE", index, gate.qubits, state.step, start, state.channel_free)
    return state.channel_free + timing.d * timing.t_round, event


def route_slice(indices: Iterable[int], program: LogicalProgram, layout: DeviceLayout, mode: str,
                timing: TimingParams, state: RoutingState
                ) -> Tuple[List[LogicalOpEvent], List[int], List[int]]:
    """
    Aloca as portas CNOT/T de uma fatia de tempo.

    Devolve (eventos, portas concluídas, portas adiadas). O canal de
    movimento é global e serializado; os tiles de roteamento têm
    capacidade 1 no modo padrão e k nos modos intercalados.

    Uma porta T custa o mesmo que um CNOT até a fábrica: 2d rodadas por
    lattice surgery, ou ida e volta até a fábrica mais próxima e d rodadas
    de CNOT transversal no modo de movimento.
    """
    mode = normalize_mode(mode)
    capacity = 1 if mode == "standard_ls" else layout.k
    d, t_round = timing.d, timing.t_round
    usage: Dict[Tile, int] = {}
    events: List[LogicalOpEvent] = []
    finished: List[int] = []
    postponed: List[int] = []

    for index in sorted(indices):
        gate = program.gates[index]
        end = None
        path: Tuple[Tile, ...] = ()
        move_event = None
        if gate.name == "CNOT":
            a, b = (state.mapping[q] for q in gate.qubits)
            if a == b and mode != "standard_ls":
                end = state.now + d * t_round
            elif mode == "standard_ls":
                path = state.router.between(a, b, usage, capacity)
                if path is not None:
                    end = state.now + 2 * d * t_round
            else:
                travel = 2 * _euclid(a, b) * timing.tile_pitch / timing.speed
                if mode == "movement" or (mode == "hybrid" and travel < d * t_round):
                    end, move_event = _move(state, index, gate, _euclid(a, b), timing)
                else:
                    path = state.router.between(a, b, usage, capacity)
                    if path is not None:
                        end = state.now + 2 * d * t_round
                if end is not None:
                    state.routed += 1
        elif gate.name == "T":
            # injeção: CNOT entre o qubit e o estado mágico da fábrica
            a = state.mapping[gate.qubits[0]]
            target = min(layout.factories, key=lambda f: (_euclid(a, f), f))
            travel = 2 * _euclid(a, target) * timing.tile_pitch / timing.speed
            if mode == "movement" or (mode == "hybrid" and travel < d * t_round):
                end, move_event = _move(state, index, gate, _euclid(a, target), timing)
            else:
                path = state.router.to_factory(a, usage, capacity)
                if path is not None:
                    end = state.now + 2 * d * t_round
        else:
            raise ContractError(f"porta {gate.name} não passa pelo roteador")

        if end is None:
            state.postponed += 1
            postponed.append(index)
            continue
        for t in path:
            usage[t] = usage.get(t, 0) + 1
        if move_event is not None:
            state.moves += 1
            events.append(move_event)
        events.append(LogicalOpEvent(gate.name, index, gate.qubits, state.step, state.now, end, path))
        finished.append(index)
    return events, finished, postponed


def simulate(program: LogicalProgram, layout: DeviceLayout, mode: str, timing: TimingParams,
             mapping: Optional[Dict[int, Tile]] = None, record: bool = True) -> SimulationResult:
    """
    Executa o programa passo a passo.

    Em cada passo rodam as portas prontas (predecessores concluídos em
    passos anteriores); H e S são imediatos. Portas sem caminho disponível
    são adiadas para o passo seguinte.
    """
    mode = normalize_mode(mode)
    if any(g.name not in ("H", "S", "T", "CNOT") for g in program.gates):
        raise ContractError("programa precisa estar sintetizado (somente H, S, T, CNOT)")
    if program.t_count and not layout.factories:
        raise RoutingError("programa com portas T e layout sem fábricas")
    state = RoutingState.for_layout(
        layout, mapping or map_qubits(program.interaction_graph(), program.n, layout))

    # filas por qubit
    queues: List[deque] = [deque() for _ in range(program.n)]
    for index, gate in enumerate(program.gates):
        for q in gate.qubits:
            queues[q].append(index)

    def is_ready(index: int) -> bool:
        return all(queues[q] and queues[q][0] == index for q in program.gates[index].qubits)

    ready: Set[int] = {queues[q][0] for q in range(program.n) if queues[q] and is_ready(queues[q][0])}
    events: List[LogicalOpEvent] = []
    remaining = len(program.gates)

    def complete(index: int, pending: Set[int]) -> None:
        nonlocal remaining
        remaining -= 1
        for q in program.gates[index].qubits:
            queues[q].popleft()
            if queues[q] and is_ready(queues[q][0]):
                pending.add(queues[q][0])

    def drain_free(pending: Set[int]) -> Set[int]:
        while True:
            free = sorted(i for i in pending if program.gates[i].name in ("H", "S"))
            if not free:
                return pending
            for i in free:
                pending.discard(i)
                if record:
                    g = program.gates[i]
                    events.append(LogicalOpEvent(g.name, i, g.qubits, state.step, state.now, state.now))
                complete(i, pending)

    ready = drain_free(ready)
    while remaining:
        if not ready:
            raise RoutingError("nenhuma porta pronta; dependências inconsistentes")
        new_events, finished, postponed = route_slice(ready, program, layout, mode, timing, state)
        if not finished:
            raise RoutingError(f"nenhuma porta roteável no passo {state.step}")
        if record:
            events.extend(new_events)
        state.now = max([state.now] + [e.end for e in new_events])
        state.step += 1
        pending = set(postponed)
        for index in finished:
            complete(index, pending)
        ready = drain_free(pending)

    if record and state.postponed:
        logger.warning(f"⚠️ {mode}: {state.postponed} portas adiadas por falta de caminho livre")
    logger.debug(f"{mode}: {state.step} passos, {state.postponed} adiamentos, "
                 f"{state.routed} CNOTs roteados, {state.moves} movimentos, total {state.now:.0f} µs")
    return SimulationResult(state.now, state.step, state.postponed, state.routed, state.moves, events)


# ----------------------------------------------------------------------
# Estimativas
# ----------------------------------------------------------------------
def baseline_time(program: LogicalProgram, layout: DeviceLayout, timing: TimingParams,
                  mapping: Optional[Dict[int, Tile]] = None) -> float:
    """Arquitetura padrão: capacidade 1, sem transversais, rodada com k = 1"""
    result = simulate(program, layout, "standard_ls", timing.for_group_size(1), mapping, record=False)
    return result.total_us


def estimate_compute_time(program: LogicalProgram, layout_kind: str, mode: str,
                          timing: TimingParams, record: bool = False
                          ) -> Tuple[float, float, SimulationResult]:
    """
    Returns:
        (tempo total em µs, tempo relativo ao baseline, resultado detalhado)
    """
    layout = build_device_layout(layout_kind, program.n, timing.k)
    mapping = map_qubits(program.interaction_graph(), program.n, layout)
    result = simulate(program, layout, mode, timing, mapping, record=record)
    base = baseline_time(program, layout, timing, mapping)
    relative = result.total_us / base if base > 0 else 1.0
    return result.total_us, relative, result


def _csv_row(benchmark: str, program: LogicalProgram, layout_kind: str, mode: str,
             timing: TimingParams, total: float, relative: float, seed: int) -> Dict:
    return {
        "benchmark": benchmark, "n": program.n, "layout": layout_kind, "mode": mode,
        "k": timing.k, "d": timing.d, "t_meas_us": timing.t_meas,
        "speed_um_per_us": timing.speed, "total_us": total, "relative": relative, "seed": seed,
    }


def route_rows(benchmark: str, program: LogicalProgram, layout_kinds: Iterable[str],
               modes: Iterable[str], timing: TimingParams, seed: int = 0) -> List[Dict]:
    """Linhas CSV de {layout × modo}; o baseline é calculado uma vez por layout"""
    rows = []
    for layout_kind in layout_kinds:
        layout = build_device_layout(layout_kind, program.n, timing.k)
        mapping = map_qubits(program.interaction_graph(), program.n, layout)
        base = baseline_time(program, layout, timing, mapping)
        for mode in modes:
            mode = normalize_mode(mode)
            result = simulate(program, layout, mode, timing, mapping, record=False)
            relative = result.total_us / base if base > 0 else 1.0
            logger.info(f"✅ {benchmark} {layout_kind} {mode}: {result.total_us:.0f} µs "
                        f"(relativo {relative:.3f})")
            rows.append(_csv_row(benchmark, program, layout_kind, mode, timing,
                                 result.total_us, relative, seed))
    return rows


SWEEP_AXES = ("group_size", "t_meas", "movement_speed")


def sensitivity_sweep(axis: str, grid: Sequence[float], benchmark: str, program: LogicalProgram,
                      layout_kind: str, timing: TimingParams,
                      modes: Iterable[str] = ("interleaved_ls", "movement"),
                      seed: int = 0) -> List[Dict]:
    """Uma linha por ponto da grade e por modo; demais parâmetros fixos"""
    if axis not in SWEEP_AXES:
        raise UsageError(f"eixo desconhecido: {axis!r} (use {', '.join(SWEEP_AXES)})")
    rows = []
    for value in grid:
        if axis == "group_size":
            point = timing.for_group_size(int(value))
        elif axis == "t_meas":
            point = replace(timing, t_meas=float(value))
        else:
            point = replace(timing, speed=float(value))
        logger.info(f"▶ {axis} = {value:g}")
        rows += route_rows(benchmark, program, [layout_kind], modes, point, seed)
    return rows


# ----------------------------------------------------------------------
# Auditorias do log de eventos
# ----------------------------------------------------------------------
def audit_capacity(events: Sequence[LogicalOpEvent], capacity: int) -> List[str]:
    """Violações de capacidade: uso simultâneo de um tile acima do limite"""
    intervals: Dict[Tile, List[Tuple[float, float]]] = {}
    for e in events:
        for t in e.path:
            intervals.setdefault(t, []).append((e.start, e.end))
    violations = []
    for tile, spans in sorted(intervals.items()):
        points = sorted([(s, 1) for s, _ in spans] + [(e, -1) for _, e in spans])
        level = 0
        for _, delta in points:
            level += delta
            if level > capacity:
                violations.append(f"tile {tile} com {level} caminhos simultâneos")
                break
    return violations


def audit_movement(events: Sequence[LogicalOpEvent]) -> List[str]:
    """Violações de exclusividade do canal global de movimento"""
    moves = sorted((e.start, e.end, e.gate) for e in events if e.kind == "MOVE")
    violations = []
    for (s1, e1, g1), (s2, e2, g2) in zip(moves, moves[1:]):
        if s2 < e1 - 1e-9:
            violations.append(f"movimentos das portas {g1} e {g2} se sobrepõem")
    return violations
