# src/main.py
"""
Ponto de entrada: ``python -m src.main <comando> [opções]``

Comandos: cnot-compare, route, sweep, bench-gen, layout-dump, footprint, runs.
Saída em CSV UTF-8 para ``--out`` ou stdout. Códigos de saída: 0 sucesso,
1 erro de simulação/contrato, 2 erro de uso.
"""

import argparse
import logging
import os
import sys
from typing import Dict, List, Optional

from config.settings import Settings
from src.benchmarks import LogicalProgram, emit_program, make_benchmark, parse_program
from src.codegen import patch_footprint
from src.database import ResultsDatabase
from src.exceptions import SimulationError, UsageError
from src.geometry import build_layout
from src.montecarlo import CSV_COLUMNS as MC_COLUMNS, MODES as MC_MODES
from src.montecarlo import build_experiment, coherence_sweep, threshold_sweep
from src.noise_model import attach_noise
from src.routing_sim import (
    CSV_COLUMNS as ROUTE_COLUMNS, LAYOUT_KINDS, MODES as ROUTE_MODES, SWEEP_AXES,
    build_device_layout, map_qubits, normalize_mode, route_rows, sensitivity_sweep, simulate,
)
from src.utils import parse_number_list, write_csv, write_text

logger = logging.getLogger("src.main")

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

FOOTPRINT_COLUMNS = ["d", "k", "n_logical", "qubits_per_patch", "total_qubits",
                     "ls_cnot_qubits", "transversal_cnot_qubits", "ls_over_transversal",
                     "groups_needed"]

SWEEP_DEFAULT_GRIDS = {
    "group_size": "4,9,16",
    "t_meas": "1000,10000,100000",
    "movement_speed": "0.055,0.55,5.5",
}


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------
class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="python -m src.main",
                     description="Simulador de código de superfície intercalado em átomos neutros")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="arquivo chave = valor")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="arquivo de saída (padrão: stdout)")
    common.add_argument("--db", help="banco SQLite para registrar as linhas emitidas")
    common.add_argument("--workers", type=int)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true")
    verbosity.add_argument("--quiet", action="store_true")

    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("cnot-compare", parents=[common], help="CNOT transversal vs lattice surgery")
    p.add_argument("--distances", default="3,5,7")
    p.add_argument("--error-rates", default="0.001,0.003,0.01")
    p.add_argument("--modes", default=",".join(MC_MODES))
    p.add_argument("--shots", type=int)
    p.add_argument("--t1-sweep", help="valores de T1 = T2 em µs (troca para a varredura de coerência)")
    p.add_argument("--dump-circuit", help="grava o circuito ruidoso do primeiro ponto")

    p = sub.add_parser("route", parents=[common], help="tempo de execução de benchmarks")
    p.add_argument("--bench", action="append", help="nome:n, ex. qft:8 (repetível)")
    p.add_argument("--program", help="programa no formato de bench-gen")
    p.add_argument("--layout", default="compact", help="compact, fast ou all")
    p.add_argument("--mode", action="append", help="movement, ils, sls ou hybrid (repetível)")
    p.add_argument("--k", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--t-meas", type=float)
    p.add_argument("--speed", type=float)
    p.add_argument("--trace", help="grava o log de eventos do primeiro ponto")

    p = sub.add_parser("sweep", parents=[common], help="sensibilidade do tempo de execução")
    p.add_argument("--axis", default="t_meas", choices=SWEEP_AXES)
    p.add_argument("--grid")
    p.add_argument("--bench", default="qft:16")
    p.add_argument("--layout", default="compact")
    p.add_argument("--mode", action="append")
    p.add_argument("--k", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--epsilon", type=float)

    p = sub.add_parser("bench-gen", parents=[common], help="gera um programa de benchmark")
    p.add_argument("--bench", required=True)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--grover-iterations", type=int)

    p = sub.add_parser("layout-dump", parents=[common], help="posições dos átomos")
    p.add_argument("--k", type=int)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--grid", default="1x1", help="linhas x colunas de grupos")

    p = sub.add_parser("footprint", parents=[common], help="qubits físicos por lógico")
    p.add_argument("--distances", default="3,5,7,9")
    p.add_argument("--k", type=int)
    p.add_argument("--n-logical", type=int, default=1)

    p = sub.add_parser("runs", parents=[common], help="execuções registradas no banco")
    p.add_argument("--run", type=int, help="mostra as linhas desta execução")
    p.add_argument("--limit", type=int, default=20)
    return parser


def _settings(args) -> Settings:
    overrides = {
        "seed": args.seed,
        "workers": args.workers,
        "database_path": args.db,
        "shots": getattr(args, "shots", None),
        "group_size": getattr(args, "k", None),
        "routing_distance": getattr(args, "d", None) if args.command in ("route", "sweep") else None,
        "epsilon": getattr(args, "epsilon", None),
        "t_meas_us": getattr(args, "t_meas", None),
        "movement_speed_um_per_us": getattr(args, "speed", None),
        "grover_iterations": getattr(args, "grover_iterations", None),
    }
    return Settings.load(args.config, overrides)


def _record(settings: Settings, command: str, rows: List[Dict]) -> None:
    if settings.database_path:
        db = ResultsDatabase(settings.database_path)
        try:
            db.save_run(command, settings.as_dict(), rows)
        finally:
            db.close()


# ----------------------------------------------------------------------
# Comandos
# ----------------------------------------------------------------------
def cmd_cnot_compare(args, settings: Settings) -> List[Dict]:
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    for mode in modes:
        if mode not in MC_MODES:
            raise UsageError(f"modo desconhecido: {mode!r} (use {', '.join(MC_MODES)})")
    distances = parse_number_list(args.distances, int)
    base = settings.noise_params()
    layout_kwargs = dict(spacing=settings.atom_spacing_um,
                         r_ancilla_data=settings.r_ancilla_data_um,
                         r_data_data=settings.r_data_data_um)

    if args.dump_circuit:
        for mode in modes:
            circuit = attach_noise(build_experiment(mode, distances[0], base, **layout_kwargs), base)
            path = args.dump_circuit
            if len(modes) > 1:
                stem, ext = os.path.splitext(path)
                path = f"{stem}_{mode}{ext}"
            write_text(circuit.to_text(), path)
            logger.info(f"✅ Circuito {mode} d={distances[0]} gravado em {path}")

    if args.t1_sweep:
        rows = []
        for d in distances:
            rows += coherence_sweep(modes, d, parse_number_list(args.t1_sweep), settings.shots,
                                    settings.seed, settings.workers, base, **layout_kwargs)
    else:
        rows = threshold_sweep(modes, distances, parse_number_list(args.error_rates),
                               settings.shots, settings.seed, settings.workers, base,
                               **layout_kwargs)
    write_csv(rows, MC_COLUMNS, args.out)
    return rows


def _programs(args, settings: Settings) -> List[tuple]:
    programs = []
    if args.program:
        with open(args.program, "r", encoding="utf-8") as fh:
            program = parse_program(fh.read())
        programs.append((program.name or os.path.basename(args.program), program))
    for label in args.bench or ([] if args.program else ["qft:8"]):
        programs.append((label, make_benchmark(label, settings.epsilon,
                                              settings.grover_iterations, settings.seed)))
    return programs


def _layouts(text: str) -> List[str]:
    if text == "all":
        return list(LAYOUT_KINDS)
    if text not in LAYOUT_KINDS:
        raise UsageError(f"layout desconhecido: {text!r} (use {', '.join(LAYOUT_KINDS)} ou all)")
    return [text]


def cmd_route(args, settings: Settings) -> List[Dict]:
    timing = settings.timing_params()
    modes = [normalize_mode(m) for m in (args.mode or ROUTE_MODES)]
    layouts = _layouts(args.layout)
    rows = []
    traced = False
    for name, program in _programs(args, settings):
        rows += route_rows(name, program, layouts, modes, timing, settings.seed)
        if args.trace and not traced:
            layout = build_device_layout(layouts[0], program.n, timing.k)
            mapping = map_qubits(program.interaction_graph(), program.n, layout)
            result = simulate(program, layout, modes[0], timing, mapping, record=True)
            write_text("".join(e.to_text() + "\n" for e in result.events), args.trace)
            logger.info(f"✅ {len(result.events)} eventos gravados em {args.trace}")
            traced = True
    write_csv(rows, ROUTE_COLUMNS, args.out)
    return rows


def cmd_sweep(args, settings: Settings) -> List[Dict]:
    timing = settings.timing_params()
    grid = parse_number_list(args.grid or SWEEP_DEFAULT_GRIDS[args.axis])
    modes = [normalize_mode(m) for m in (args.mode or ("interleaved_ls", "movement"))]
    program = make_benchmark(args.bench, settings.epsilon, settings.grover_iterations, settings.seed)
    layout = _layouts(args.layout)[0]
    rows = sensitivity_sweep(args.axis, grid, args.bench, program, layout, timing, modes,
                             settings.seed)
    write_csv(rows, ROUTE_COLUMNS, args.out)
    return rows


def cmd_bench_gen(args, settings: Settings) -> List[Dict]:
    program: LogicalProgram = make_benchmark(args.bench, settings.epsilon,
                                             settings.grover_iterations, settings.seed)
    write_text(emit_program(program), args.out)
    logger.info(f"✅ {args.bench}: {len(program.gates)} portas, {program.t_count} T, "
                f"{program.count('CNOT')} CNOT")
    return [{"benchmark": args.bench, "n": program.n, "gates": len(program.gates),
             "t_count": program.t_count, "cnot_count": program.count("CNOT")}]


def cmd_layout_dump(args, settings: Settings) -> List[Dict]:
    try:
        rows_text, cols_text = args.grid.lower().split("x")
        grid = (int(rows_text), int(cols_text))
    except ValueError:
        raise UsageError(f"grade inválida: {args.grid!r}; use LxC, ex. 2x2")
    layout = build_layout(settings.group_size, args.d, settings.atom_spacing_um,
                          settings.r_ancilla_data_um, settings.r_data_data_um, group_grid=grid)
    frame = layout.to_frame()
    if args.out:
        frame.to_csv(args.out, index=False, encoding="utf-8")
    else:
        frame.to_csv(sys.stdout, index=False)
    return frame.to_dict("records")


def cmd_footprint(args, settings: Settings) -> List[Dict]:
    rows = [patch_footprint(d, settings.group_size, args.n_logical)
            for d in parse_number_list(args.distances, int)]
    write_csv(rows, FOOTPRINT_COLUMNS, args.out)
    return rows


def cmd_runs(args, settings: Settings) -> List[Dict]:
    if not settings.database_path:
        raise UsageError("informe --db ou database_path na configuração")
    db = ResultsDatabase(settings.database_path)
    try:
        if args.run is not None:
            rows = db.fetch_rows(args.run)
            columns = list(rows[0].keys()) if rows else []
        else:
            rows = db.list_runs(args.limit)
            columns = ["id", "command", "n_rows", "created_at"]
    finally:
        db.close()
    write_csv(rows, columns, args.out)
    return []


COMMANDS = {
    "cnot-compare": cmd_cnot_compare,
    "route": cmd_route,
    "sweep": cmd_sweep,
    "bench-gen": cmd_bench_gen,
    "layout-dump": cmd_layout_dump,
    "footprint": cmd_footprint,
    "runs": cmd_runs,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("nenhum comando informado")
    except UsageError as e:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"erro: {e}\n")
        return 2

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)

    try:
        settings = _settings(args)
        logger.info(f"🚀 Iniciando {args.command}...")
        rows = COMMANDS[args.command](args, settings)
        if args.command != "runs":
            _record(settings, args.command, rows)
        logger.info(f"✅ {args.command} concluído.")
        return 0
    except UsageError as e:
        parser.print_usage(sys.stderr)
        logger.error(f"❌ {e}")
        return 2
    except (SimulationError, ValueError, OSError) as e:
        logger.error(f"❌ {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
