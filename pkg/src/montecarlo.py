"""
Estimativa de taxas de erro lógico por amostragem e varreduras de limiar
e de coerência.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from src.circuit_ir import Circuit, parities, reference_sample
from src.codegen import gen_lattice_surgery_cnot_experiment, gen_transversal_cnot_experiment
from src.decoder import MatchingGraph, extract_dem
from src.exceptions import ContractError
from src.geometry import build_layout
from src.noise_model import DEFAULT_BATCH_SHOTS, NoiseParams, attach_noise, sample_shots

logger = logging.getLogger(__name__)

MODES = ("transversal", "lattice_surgery")
CSV_COLUMNS = ["mode", "d", "p", "T1_us", "shots", "errors", "rate", "ci_lo", "ci_hi", "seed"]

# Tamanho de grupo usado por cada experimento de CNOT
TRANSVERSAL_GROUP_SIZE = 4
LATTICE_SURGERY_GROUPS = ((0, 0), (1, 0), (1, 1))


@dataclass(frozen=True)
class ErrorRateEstimate:
    rate: float
    ci_lo: float
    ci_hi: float
    shots: int
    errors: int


def wilson_interval(errors: int, shots: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Intervalo de Wilson para uma proporção binomial"""
    if shots <= 0:
        return 0.0, 1.0
    z = norm.ppf(0.5 + confidence / 2)
    phat = errors / shots
    denom = 1 + z * z / shots
    center = (phat + z * z / (2 * shots)) / denom
    half = z * math.sqrt(phat * (1 - phat) / shots + z * z / (4 * shots * shots)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _count_batch(job) -> int:
    """Falhas lógicas de um lote (executado em processo separado)"""
    noisy, ref, graph, size, seed, batch = job
    dets, obs = sample_shots(noisy, ref, size, seed, DEFAULT_BATCH_SHOTS, first_batch=batch)
    ref_det = parities(noisy.detector_records(), ref).astype(bool)
    ref_obs = parities(noisy.observable_records(), ref).astype(bool)
    flips = dets ^ ref_det
    actual = obs ^ ref_obs
    predicted = graph.decode_batch(flips)
    return int(np.any(predicted != actual, axis=1).sum())


def estimate_logical_error_rate(circuit: Circuit, params: NoiseParams, shots: int, seed: int,
                                workers: int = 1) -> ErrorRateEstimate:
    """
    Taxa de erro lógico com IC de Wilson 95%.

    Uma execução falha se qualquer observável for previsto errado pelo
    decodificador. Determinística por semente e independente de ``workers``.
    """
    if shots < 1:
        raise ContractError("shots deve ser >= 1")
    clean = circuit.without_noise() if circuit.has_noise else circuit
    noisy = attach_noise(clean, params)
    if not noisy.has_noise:
        lo, hi = wilson_interval(0, shots)
        return ErrorRateEstimate(0.0, lo, hi, shots, 0)

    ref = reference_sample(clean)
    graph = MatchingGraph(extract_dem(noisy))
    jobs = [(noisy, ref, graph, min(DEFAULT_BATCH_SHOTS, shots - start), seed, batch)
            for batch, start in enumerate(range(0, shots, DEFAULT_BATCH_SHOTS))]

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_count_batch, jobs))
    else:
        counts = [_count_batch(job) for job in jobs]
    errors = sum(counts)
    lo, hi = wilson_interval(errors, shots)
    logger.debug(f"{errors}/{shots} falhas em {len(jobs)} lote(s)")
    return ErrorRateEstimate(errors / shots, lo, hi, shots, errors)


def build_experiment(mode: str, d: int, timing: Optional[NoiseParams] = None,
                     spacing: float = 10.0, r_ancilla_data: float = 28.0,
                     r_data_data: float = 14.0) -> Circuit:
    """Circuito sem ruído do CNOT no modo pedido"""
    timing = timing or NoiseParams()
    if mode == "transversal":
        layout = build_layout(TRANSVERSAL_GROUP_SIZE, d, spacing, r_ancilla_data, r_data_data)
        return gen_transversal_cnot_experiment(layout, timing=timing)
    if mode == "lattice_surgery":
        layout = build_layout(1, d, spacing, r_ancilla_data, r_data_data, group_grid=(2, 2),
                              groups=LATTICE_SURGERY_GROUPS)
        return gen_lattice_surgery_cnot_experiment(layout, timing=timing)
    raise ContractError(f"modo desconhecido: {mode} (use {MODES})")


def _row(mode: str, d: int, p: float, t1: float, estimate: ErrorRateEstimate, seed: int) -> Dict:
    return {
        "mode": mode, "d": d, "p": p, "T1_us": t1, "shots": estimate.shots,
        "errors": estimate.errors, "rate": estimate.rate, "ci_lo": estimate.ci_lo,
        "ci_hi": estimate.ci_hi, "seed": seed,
    }


def _params_for(base: NoiseParams, p: float) -> NoiseParams:
    # p = 0 desliga também a decoerência: a linha serve de controle sem ruído
    if p == 0:
        return NoiseParams.noiseless(t_1q=base.t_1q, t_2q=base.t_2q, t_meas=base.t_meas)
    return base.scaled(p)


def threshold_sweep(modes: Iterable[str], distances: Sequence[int], error_rates: Sequence[float],
                    shots: int, seed: int, workers: int = 1,
                    base: Optional[NoiseParams] = None, **layout_kwargs) -> List[Dict]:
    """
    Uma linha por (modo, d, p); erros de porta e medição escalados juntos.
    """
    base = base or NoiseParams()
    if isinstance(modes, str):
        modes = [modes]
    rows = []
    for mode in modes:
        for d in distances:
            circuit = build_experiment(mode, d, base, **layout_kwargs)
            for p in error_rates:
                params = _params_for(base, p)
                logger.info(f"▶ {mode} d={d} p={p}")
                estimate = estimate_logical_error_rate(circuit, params, shots, seed, workers)
                rows.append(_row(mode, d, p, params.T1, estimate, seed))
                logger.info(f"✅ {mode} d={d} p={p}: taxa {estimate.rate:.3e} "
                            f"[{estimate.ci_lo:.2e}, {estimate.ci_hi:.2e}]")
    return rows


def coherence_sweep(modes: Iterable[str], d: int, t1_values: Sequence[float], shots: int,
                    seed: int, workers: int = 1, base: Optional[NoiseParams] = None,
                    **layout_kwargs) -> List[Dict]:
    """Uma linha por (modo, T1), com T2 = T1 e demais parâmetros fixos"""
    base = base or NoiseParams()
    if isinstance(modes, str):
        modes = [modes]
    rows = []
    for mode in modes:
        circuit = build_experiment(mode, d, base, **layout_kwargs)
        for t1 in t1_values:
            params = base.with_coherence(t1, t1)
            logger.info(f"▶ {mode} d={d} T1={t1:g} µs")
            estimate = estimate_logical_error_rate(circuit, params, shots, seed, workers)
            rows.append(_row(mode, d, base.p_2q, t1, estimate, seed))
    return rows


def required_distance(rows: Sequence[Dict], target_rate: float, mode: str,
                      p: Optional[float] = None, max_distance: int = 99) -> int:
    """
    Menor d ímpar cuja taxa extrapolada (ajuste log-linear em d) fica abaixo
    do alvo.

    Raises:
        ContractError: menos de duas linhas utilizáveis ou sem supressão com d
    """
    usable = [r for r in rows if r["mode"] == mode and r["errors"] > 0
              and (p is None or math.isclose(r["p"], p))]
    if p is None and len({r["p"] for r in usable}) > 1:
        raise ContractError("linhas com vários valores de p; informe p")
    if len({r["d"] for r in usable}) < 2:
        raise ContractError("são necessárias ao menos duas distâncias com erros observados")
    ds = np.array([r["d"] for r in usable], dtype=float)
    logs = np.log([r["rate"] for r in usable])
    slope, intercept = np.polyfit(ds, logs, 1)
    if slope >= 0:
        raise ContractError("a taxa não diminui com d (acima do limiar?)")
    for d in range(3, max_distance + 1, 2):
        if math.exp(intercept + slope * d) <= target_rate:
            return d
    raise ContractError(f"nenhum d <= {max_distance} atinge {target_rate:g}")
