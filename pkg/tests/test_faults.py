import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cultivation.circuit import parse_text
from cultivation.faults import (
    FaultLocation,
    FaultModel,
    brute_force_undetected,
    combine_probability,
    enumerate_undetected,
    extract_fault_model,
    is_connected,
    leading_order_rate,
    min_fault_distance,
)
from cultivation.frame import frame_sample
from cultivation.noise import NoiseModel, apply_noise_model
from cultivation.simulate import reference_sample
from cultivation.stages import assemble, stage_plan

REP = (
    "RESET_Z 0 1 2 3 4\nTICK\nCX 0 1 2 3\nTICK\nCX 2 1 4 3\nTICK\nMEASURE_Z 1 3\n"
    "DETECTOR rec[-2]\nDETECTOR rec[-1]\nMEASURE_Z 0 2 4\n"
    "DETECTOR rec[-3] rec[-2] rec[-5]\nDETECTOR rec[-2] rec[-1] rec[-4]\nOBSERVABLE 0 rec[-3]\n"
)


def _model(faults, n):
    return FaultModel([FaultLocation(i, p, tuple(sorted(d)), o) for i, (p, d, o) in enumerate(faults)],
                      n, tuple(range(n)), ("CULTIVATE",))


def test_combine_probability():
    assert combine_probability(0.1, 0.2) == pytest.approx(0.1 * 0.8 + 0.2 * 0.9)
    assert combine_probability(0.3, 0.0) == 0.3


def test_extract_matches_injected_errors():
    # every single Pauli injected by hand must reproduce the model's signature
    c = parse_text(REP)
    m = extract_fault_model(apply_uniform(c, 0.01), regions=None)
    sigs = {(f.detectors, f.obs_flip) for f in m.faults}
    for q in range(5):
        for pos in ("TICK\nCX 0 1 2 3", "TICK\nCX 2 1 4 3"):
            text = REP.replace(pos, pos + f"\nX_ERROR(1) {q}", 1)
            d, o = reference_sample(parse_text(text))
            key = (tuple(int(i) for i in np.flatnonzero(d)), int(o[0]))
            if key != ((), 0):
                assert key in sigs


def apply_uniform(c, p):
    return apply_noise_model(c, NoiseModel("uniform", p))


def test_model_predicts_detector_rates():
    c = apply_uniform(parse_text(REP), 0.01)
    m = extract_fault_model(c, regions=None)
    want = np.zeros(m.num_detectors)
    for j in range(m.num_detectors):
        prod = 1.0
        for f in m.faults:
            if j in f.detectors:
                prod *= 1 - 2 * f.probability
        want[j] = (1 - prod) / 2
    n = 100_000
    got = frame_sample(c, n, seed=4).unpack_detectors().mean(axis=1)
    sigma = np.sqrt(want * (1 - want) / n)
    # components of one channel are exclusive, not independent: O(p^2) bias, well below 4 sigma
    assert np.all(np.abs(got - want) < 4 * sigma + 5e-4)


def test_enumerate_toy():
    # 0 and 1 cancel with flip; 2,3,4 form a weight-3 logical loop
    m = _model([(0.1, {0}, 1), (0.1, {0}, 0), (0.01, {1, 2}, 1), (0.01, {2, 3}, 0), (0.01, {1, 3}, 0),
                (0.2, {4}, 0)], 5)
    r = enumerate_undetected(m, 3)
    assert r.complete
    assert sorted(r.sets) == [(0, 1), (2, 3, 4)]
    rep = leading_order_rate(m, r.sets)
    assert rep.raw == pytest.approx(0.01 + 1e-6)
    assert rep.doubled == 2 * rep.raw
    assert rep.count_per_weight == {2: 1, 3: 1}
    assert min_fault_distance(m, 3) == 2


def test_undetectable_single_fault():
    m = _model([(0.1, (), 1), (0.1, {0}, 0)], 1)
    assert enumerate_undetected(m, 2).sets == [(0,)]


_FAULT = st.tuples(st.sets(st.integers(0, 6), min_size=1, max_size=3), st.integers(0, 1))


def _undetected(m, sub):
    sig, obs = 0, 0
    for i in sub:
        for d in m.faults[i].detectors:
            sig ^= 1 << d
        obs ^= m.faults[i].obs_flip
    return sig == 0, obs


def _irreducible(m, sub):
    return not any(_undetected(m, part)[0] for k in range(1, len(sub))
                   for part in itertools.combinations(sub, k))


@settings(max_examples=120, deadline=None)
@given(st.lists(_FAULT, min_size=1, max_size=20), st.integers(1, 4))
def test_enumerate_against_brute_force(faults, w):
    m = _model([(0.01, d, o) for d, o in faults], 7)
    got = enumerate_undetected(m, w).sets
    assert len(got) == len(set(got))
    brute = brute_force_undetected(m, w)
    assert {s for s in brute if _irreducible(m, s)} <= set(got)
    assert set(got) <= {s for s in brute if is_connected(m, s)}


@settings(max_examples=60, deadline=None)
@given(st.lists(_FAULT, min_size=1, max_size=20, unique_by=lambda f: (frozenset(f[0]), f[1])),
       st.integers(1, 4))
def test_enumerate_merged_models_exact(faults, w):
    # once faults are merged by effect, small reducible sets need an undetected trivial pair,
    # which merging rules out, so the sets found are exactly those of the oracle
    m = _model([(0.01, d, o) for d, o in faults], 7)
    got = sorted(enumerate_undetected(m, min(w, 3)).sets)
    want = sorted(s for s in brute_force_undetected(m, min(w, 3)) if is_connected(m, s))
    assert got == want


def test_node_cap_reports_incomplete():
    faults = [(0.01, {i, i + 1}, int(i == 0)) for i in range(12)] + [(0.01, {0}, 0), (0.01, {12}, 0)]
    m = _model(faults, 13)
    r = enumerate_undetected(m, 8, max_nodes=5)
    assert not r.complete
    with pytest.raises(RuntimeError):
        min_fault_distance(m, 14, max_nodes=5)


@pytest.fixture(scope="module")
def d3_model():
    return extract_fault_model(assemble(stage_plan(3, None)).noisy(NoiseModel("uniform", 1e-3)))


def test_d3_weight2_against_brute_force(d3_model):
    assert enumerate_undetected(d3_model, 2).sets == []
    assert brute_force_undetected(d3_model, 2) == []


def test_d3_fault_model_shape(d3_model):
    assert all(0 < f.probability < 0.5 for f in d3_model.faults)
    assert len({(f.detectors, f.obs_flip) for f in d3_model.faults}) == len(d3_model)
    assert all(f.provenance for f in d3_model.faults)
    js = d3_model.to_json()
    assert '"faults"' in js
