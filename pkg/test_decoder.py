import math

import numpy as np
import pytest

from src.circuit_ir import parse_circuit
from src.codegen import gen_memory
from src.decoder import (
    DetectorErrorModel, MatchingGraph, Mechanism, brute_force_decode, combine_probabilities,
    decode, edge_weight, extract_dem,
)
from src.exceptions import ContractError, NonGraphlikeError, OracleSizeError
from src.geometry import build_layout
from src.noise_model import NoiseParams, attach_noise


def _chain_dem():
    """Cadeia fronteira - D0 - D1 - fronteira; só a aresta esquerda toca L0"""
    return DetectorErrorModel(2, 1, [
        Mechanism(0.1, (0,), (0,)),
        Mechanism(0.1, (0, 1), ()),
        Mechanism(0.1, (1,), ()),
    ])


def _memory_graph(d=3, rounds=3, p=0.001):
    layout = build_layout(1, d)
    circuit = gen_memory(layout, rounds=rounds)
    noisy = attach_noise(circuit, NoiseParams(p, p, p, T1=math.inf, T2=math.inf))
    return MatchingGraph(extract_dem(noisy))


def test_combine_probabilities():
    assert combine_probabilities(0.0, 0.2) == 0.2
    assert math.isclose(combine_probabilities(0.1, 0.1), 0.18)
    assert math.isclose(combine_probabilities(0.5, 0.3), 0.5)


def test_edge_weight():
    assert math.isclose(edge_weight(0.1), math.log(9))
    assert edge_weight(0.0) > 1e6
    assert edge_weight(0.7) > 0


def test_extract_dem_merges_components():
    circuit = parse_circuit("RESET 0\nDEPOL1(0.3) 0\nMZ 0\nDETECTOR rec[-1]\nOBSERVABLE(0) rec[-1]\n")
    dem = extract_dem(circuit)
    assert dem.n_detectors == 1 and dem.n_observables == 1
    assert len(dem.mechanisms) == 1
    mech = dem.mechanisms[0]
    assert mech.detectors == (0,) and mech.observables == (0,)
    assert math.isclose(mech.probability, 0.18)
    assert dem.to_text() == "error(0.18) D0 L0\n"


def test_measurement_flip_mechanism():
    circuit = parse_circuit("RESET 0 1\nCX 0 1\nMFLIP(0.01) 1\nMZ 0 1\n"
                            "DETECTOR rec[-1]\nDETECTOR rec[-1] rec[-2]\n")
    dem = extract_dem(circuit)
    assert [(m.detectors, m.observables) for m in dem.mechanisms] == [((0, 1), ())]


def test_chain_decoding():
    graph = MatchingGraph(_chain_dem())
    assert decode(graph, [0]).tolist() == [True]
    assert decode(graph, [1]).tolist() == [False]
    assert decode(graph, [0, 1]).tolist() == [False]
    assert decode(graph, []).tolist() == [False]
    weight, mask = graph.decode_detailed([0, 1])
    assert math.isclose(weight, math.log(9))
    assert mask == 0


def test_syndrome_out_of_range():
    graph = MatchingGraph(_chain_dem())
    with pytest.raises(ContractError):
        graph.decode([2])


def test_hyperedge_rejected():
    dem = DetectorErrorModel(3, 0, [Mechanism(0.1, (0, 1, 2), ())])
    with pytest.raises(NonGraphlikeError):
        MatchingGraph(dem)


def test_parallel_edges():
    dem = DetectorErrorModel(2, 1, [
        Mechanism(0.1, (0, 1), ()),
        Mechanism(0.1, (0, 1), ()),
        Mechanism(0.05, (0, 1), (0,)),
    ])
    graph = MatchingGraph(dem)
    p, mask = graph.edges[(0, 1)]
    assert math.isclose(p, 0.18) and mask == 0
    assert graph.dropped_parallel == 1


def test_memory_dem_is_graphlike():
    graph = _memory_graph()
    assert graph.n_detectors == 8 * 3
    assert graph.n_observables == 1
    assert all(len(edge) == 2 for edge in graph.edges)


@pytest.mark.parametrize("size", range(1, 11))
def test_matching_agrees_with_oracle(size):
    graph = _memory_graph()
    rng = np.random.default_rng(400 + size)
    for _ in range(100):
        syndrome = sorted(rng.choice(graph.n_detectors, size=size, replace=False).tolist())
        weight, _ = graph.decode_detailed(syndrome)
        oracle, _ = brute_force_decode(graph, syndrome)
        assert math.isclose(weight, oracle, rel_tol=1e-9, abs_tol=1e-9)


def test_oracle_size_limit():
    graph = _memory_graph()
    with pytest.raises(OracleSizeError):
        brute_force_decode(graph, list(range(11)))


def test_decode_batch_matches_single_decodes():
    graph = _memory_graph()
    rng = np.random.default_rng(8)
    detections = rng.random((40, graph.n_detectors)) < 0.05
    detections[5] = detections[3]
    batch = graph.decode_batch(detections)
    for row in range(40):
        assert np.array_equal(batch[row], graph.decode(np.flatnonzero(detections[row])))
