import math

import numpy as np
import pytest

from src.circuit_ir import Circuit, Instruction, parities, parse_circuit, reference_sample
from src.codegen import gen_memory, gen_transversal_cnot_experiment
from src.exceptions import ContractError, DoubleAnnotationError, ParameterError
from src.geometry import build_layout
from src.noise_model import (
    NoiseParams, attach_noise, idle_twirl_probs, sample_flips, sample_shots, unpack_columns,
)
from src.pauli_core import simulate_tableau

BELL = """
RESET 0 1
TICK(1)
H 0
TICK(1)
CX 0 1
TICK(5)
MZ 0 1
DETECTOR rec[-1] rec[-2]
OBSERVABLE(0) rec[-1]
"""


def test_twirl_probabilities():
    px, py, pz = idle_twirl_probs(100.0, 1000.0, 1000.0)
    decay = -math.expm1(-0.1)
    assert math.isclose(px, decay / 4)
    assert math.isclose(py, px)
    assert math.isclose(pz, decay / 2 - decay / 4)
    assert idle_twirl_probs(0.0, 10.0, 10.0) == (0.0, 0.0, 0.0)
    assert idle_twirl_probs(5.0, math.inf, math.inf) == (0.0, 0.0, 0.0)
    with pytest.raises(ParameterError):
        idle_twirl_probs(1.0, 10.0, 30.0)


def test_noise_params_validation():
    with pytest.raises(ParameterError):
        NoiseParams(p_1q=1.5)
    with pytest.raises(ParameterError):
        NoiseParams(T1=10.0, T2=25.0)
    scaled = NoiseParams().scaled(0.01)
    assert scaled.p_1q == scaled.p_2q == scaled.p_meas == 0.01


def test_attach_noise_rules():
    clean = parse_circuit(BELL)
    noisy = attach_noise(clean, NoiseParams(p_1q=0.01, p_2q=0.02, p_meas=0.03, T1=1e3, T2=1e3))
    names = [i.name for i in noisy.instructions]
    assert names.count("DEPOL1") == 1
    assert names.count("DEPOL2") == 1
    assert names.count("MFLIP") == 1
    assert names.index("MFLIP") == names.index("MZ") - 1
    # X após reset com p_meas
    reset_noise = noisy.instructions[names.index("RESET") + 1]
    assert reset_noise.name == "PAULI_CHANNEL" and reset_noise.args == (0.03, 0.0, 0.0)
    # qubit 1 fica ocioso durante o H
    idle = [i for i in noisy.instructions if i.name == "PAULI_CHANNEL" and i.targets == (1,)]
    assert len(idle) == 1
    assert noisy.without_noise().instructions == clean.instructions


def test_double_annotation_rejected():
    noisy = attach_noise(parse_circuit(BELL), NoiseParams())
    with pytest.raises(DoubleAnnotationError):
        attach_noise(noisy, NoiseParams())


def test_noiseless_params_add_nothing():
    clean = parse_circuit(BELL)
    assert not attach_noise(clean, NoiseParams.noiseless()).has_noise


def test_sampling_without_noise_matches_reference():
    clean = parse_circuit(BELL)
    ref = reference_sample(clean)
    dets, obs = sample_shots(clean, ref, 100, seed=5)
    assert dets.shape == (100, 1) and obs.shape == (100, 1)
    assert not dets.any()
    assert not obs.any()


def test_sampling_is_deterministic_per_seed():
    clean = parse_circuit(BELL)
    noisy = attach_noise(clean, NoiseParams().scaled(0.05))
    ref = reference_sample(clean)
    a = sample_shots(noisy, ref, 10000, seed=9)
    b = sample_shots(noisy, ref, 10000, seed=9)
    c = sample_shots(noisy, ref, 10000, seed=10)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert not np.array_equal(a[0], c[0])


def test_batches_split_across_calls_agree():
    clean = parse_circuit(BELL)
    noisy = attach_noise(clean, NoiseParams().scaled(0.05))
    ref = reference_sample(clean)
    whole, _ = sample_shots(noisy, ref, 2 * 8192, seed=3)
    second, _ = sample_shots(noisy, ref, 8192, seed=3, first_batch=1)
    assert np.array_equal(whole[8192:], second)


def test_measurement_flip_rate():
    clean = parse_circuit("RESET 0\nMZ 0\nDETECTOR rec[-1]\n")
    noisy = attach_noise(clean, NoiseParams(p_1q=0.0, p_2q=0.0, p_meas=0.2,
                                            T1=math.inf, T2=math.inf))
    dets, _ = sample_shots(noisy, reference_sample(clean), 20000, seed=1)
    # reset X (0.2) e MFLIP (0.2) independentes: 0.2·0.8·2 = 0.32
    assert abs(dets.mean() - 0.32) < 0.02


def test_unpack_columns_shape():
    flips = sample_flips(parse_circuit(BELL), 70, seed=0)
    assert flips.shape == (2, 2)
    assert unpack_columns(flips, 70).shape == (70, 2)


def test_reference_size_mismatch():
    clean = parse_circuit(BELL)
    with pytest.raises(ContractError):
        sample_shots(clean, np.zeros(3, dtype=np.uint8), 10, seed=0)


# canal determinístico e portas equivalentes no tableau
_FAULTS = {
    "X": ((1.0, 0.0, 0.0), ("X",)),
    "Y": ((0.0, 1.0, 0.0), ("X", "Z")),
    "Z": ((0.0, 0.0, 1.0), ("Z",)),
}


def _with_faults(circuit, faults, as_gates):
    """Insere Paulis após as posições dadas, como canal (frames) ou como portas (tableau)"""
    at = {}
    for position, qubit, pauli in faults:
        at.setdefault(position, []).append((qubit, pauli))
    out = []
    for index, inst in enumerate(circuit.instructions):
        out.append(inst)
        for qubit, pauli in at.get(index, []):
            probs, gates = _FAULTS[pauli]
            if as_gates:
                out.extend(Instruction(g, (qubit,)) for g in gates)
            else:
                out.append(Instruction("PAULI_CHANNEL", (qubit,), probs))
    return Circuit(circuit.n_qubits, tuple(out))


@pytest.mark.parametrize("make_circuit", [
    lambda: gen_memory(build_layout(1, 3), rounds=2),
    lambda: gen_transversal_cnot_experiment(build_layout(4, 3)),
], ids=["memory", "transversal"])
def test_frame_flips_match_tableau_with_inserted_paulis(make_circuit):
    clean = make_circuit()
    ref = reference_sample(clean)
    rng = np.random.default_rng(21)
    last_measure = max(i for i, inst in enumerate(clean.instructions) if inst.name in ("MZ", "MX"))
    for _ in range(12):
        faults = [(int(rng.integers(0, last_measure)), int(rng.integers(0, clean.n_qubits)),
                   str(rng.choice(list(_FAULTS)))) for _ in range(int(rng.integers(1, 4)))]
        dets, obs = sample_shots(_with_faults(clean, faults, as_gates=False), ref, 4, seed=0)
        record = simulate_tableau(_with_faults(clean, faults, as_gates=True), seed=1)
        expected_dets = parities(clean.detector_records(), record).astype(bool)
        expected_obs = parities(clean.observable_records(), record).astype(bool)
        for shot in range(4):
            assert np.array_equal(dets[shot], expected_dets), faults
            assert np.array_equal(obs[shot], expected_obs), faults


def _random_clifford_then_inverse(rng, n_qubits, depth):
    """U seguido de U⁻¹ e medição de todos: cada resultado é determinístico"""
    forward = []
    for _ in range(depth):
        if rng.random() < 0.5:
            a, b = (int(q) for q in rng.choice(n_qubits, size=2, replace=False))
            forward.append(Instruction(str(rng.choice(["CX", "CZ"])), (a, b)))
        else:
            forward.append(Instruction(str(rng.choice(["H", "S"])), (int(rng.integers(n_qubits)),)))
    backward = []
    for inst in reversed(forward):
        # S⁻¹ = S³
        backward.extend([inst] * (3 if inst.name == "S" else 1))
    qubits = tuple(range(n_qubits))
    body = [Instruction("RESET", qubits)] + forward + backward + [Instruction("MZ", qubits)]
    body += [Instruction("DETECTOR", (-(i + 1),)) for i in range(n_qubits)]
    return Circuit(n_qubits, tuple(body))


@pytest.mark.parametrize("seed", range(5))
def test_frame_flips_match_tableau_on_random_cliffords(seed):
    rng = np.random.default_rng(seed)
    clean = _random_clifford_then_inverse(rng, n_qubits=6, depth=30)
    ref = reference_sample(clean)
    assert not ref.any()
    last_measure = len(clean.instructions) - 7
    for _ in range(20):
        faults = [(int(rng.integers(0, last_measure)), int(rng.integers(0, 6)),
                   str(rng.choice(list(_FAULTS)))) for _ in range(int(rng.integers(1, 4)))]
        dets, _ = sample_shots(_with_faults(clean, faults, as_gates=False), ref, 3, seed=seed)
        record = simulate_tableau(_with_faults(clean, faults, as_gates=True), pinned=True)
        expected = parities(clean.detector_records(), record).astype(bool)
        assert all(np.array_equal(row, expected) for row in dets), faults
