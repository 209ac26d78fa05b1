import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cultivation.circuit import (
    CircuitBuilder,
    CircuitError,
    DetectorCircuit,
    clifford_substitute,
    parse_text,
)
from cultivation.frame import frame_sample, pack_bits, unpack_bits
from cultivation.noise import (
    NoiseModel,
    apply_noise_model,
    depolarizing_no_idle,
    uniform_depolarizing,
)
from cultivation.simulate import (
    NondeterministicDetector,
    noisy_tableau_sample,
    reference_sample,
)


def test_parse_minimal():
    c = parse_text("H 0\nMEASURE_X 0\nDETECTOR rec[-1]")
    assert len(c) == 3
    assert c.num_detectors == 1
    assert c.detectors[0].measurements == (0,)


def test_round_trip_canonical():
    text = (
        "QUBIT_COORDS 0 1.5 2\n"
        "RESET_Z 0 1\n"
        "TICK\n"
        "CX 0 1\n"
        "DEPOLARIZE2(0.001) 0 1\n"
        "TICK\n"
        "FLIP_RESULT(0.25) 0\n"
        "MEASURE_Z 0 1\n"
        "DETECTOR[ESCAPE](0.5, 1, 2) rec[-1] rec[-2]\n"
        "MPP X0*Y1*Z2 Z1\n"
        "OBSERVABLE 0 rec[-1]\n"
    )
    c = parse_text(text)
    assert c.to_text() == text
    assert parse_text(c.to_text()) == c
    assert c.detectors[0].region == "ESCAPE"
    assert c.detectors[0].coords == (0.5, 1.0, 2.0)
    assert c.num_measurements == 4


def test_syntax_errors_carry_line_numbers():
    with pytest.raises(CircuitError) as e:
        parse_text("RESET_Z 0\nMEASURE_Z 0\nDETECTOR rec[-2]\n")
    assert e.value.line == 3
    with pytest.raises(CircuitError) as e:
        parse_text("H 0\nFOO 1\n")
    assert e.value.line == 2
    with pytest.raises(CircuitError):
        parse_text("CX 0 1 2\n")
    with pytest.raises(CircuitError):
        parse_text("DEPOLARIZE1(1.5) 0\n")


def test_comments_and_whitespace():
    c = parse_text("# header\n\n  H 0   # trailing\nTICK\n")
    assert [i.name for i in c.instructions] == ["H", "TICK"]


_OPS = st.sampled_from(["H 0", "S 1", "CX 0 1", "CXSWAP 1 2", "RESET_X 2", "MEASURE_Z 1",
                        "DEPOLARIZE1(0.125) 0 2", "TICK", "T_DAG 0", "H_XY 1"])


@settings(max_examples=50)
@given(st.lists(_OPS, max_size=20))
def test_round_trip_property(lines):
    text = "".join(l + "\n" for l in lines)
    c = parse_text(text)
    assert c.to_text() == text


def test_clifford_substitution():
    c = parse_text("H 0\nCX 0 1\n")
    assert clifford_substitute(c) == c
    c = parse_text("RESET_X 0\nT 0\nT_DAG 1\n")
    s = clifford_substitute(c)
    assert [i.name for i in s.instructions] == ["RESET_X", "S", "S_DAG"]
    assert s.is_clifford and not c.is_clifford


def test_builder_offsets():
    b = CircuitBuilder()
    b.append("RESET_Z", [0, 1])
    m = b.append("MEASURE_Z", [0, 1])
    b.detector([m[0]])
    m2 = b.append("MEASURE_Z", [1])
    b.detector([m[1], m2[0]], region="ESCAPE")
    b.observable(m2)
    c = b.build()
    assert [d.measurements for d in c.detectors] == [(0,), (1, 2)]
    assert c.observables == [(2,)]
    assert parse_text(c.to_text()) == c


# -- reference sampler ---------------------------------------------------

def test_reference_bell_pair():
    c = parse_text("RESET_Z 0 1\nH 0\nCX 0 1\nMEASURE_Z 0 1\nDETECTOR rec[-1] rec[-2]\nOBSERVABLE 0 rec[-1] rec[-2]\n")
    d, o = reference_sample(c)
    assert d.tolist() == [0] and o.tolist() == [0]


def test_reference_nondeterministic():
    c = parse_text("RESET_Z 0\nMEASURE_X 0\nDETECTOR rec[-1]\n")
    with pytest.raises(NondeterministicDetector) as e:
        reference_sample(c)
    assert e.value.index == 0


def test_reference_reset_one_and_minus_sign():
    c = parse_text("RESET_ONE 0\nMEASURE_Z 0\nDETECTOR rec[-1]\n")
    d, _ = reference_sample(c)
    assert d.tolist() == [1]
    c = parse_text("RESET_X 0\nS 0\nMPP Y0\nDETECTOR rec[-1]\nS_DAG 0\nS_DAG 0\nMPP Y0\nDETECTOR rec[-1]\n")
    d, _ = reference_sample(c)
    assert d.tolist() == [0, 1]


def test_reference_measurement_reset_chain():
    # measured random value copied to a second qubit must be consistent
    c = parse_text(
        "RESET_X 0\nRESET_Z 1\nCX 0 1\nMEASURE_Z 0\nRESET_Z 0\nMEASURE_Z 1 0\n"
        "DETECTOR rec[-3] rec[-2]\nDETECTOR rec[-1]\n")
    d, _ = reference_sample(c)
    assert d.tolist() == [0, 0]


# -- noise insertion -----------------------------------------------------

LAYER = "RESET_Z 0 1 2\nTICK\nCX 0 1\nTICK\nMEASURE_Z 0 1 2\n"


def test_idle_noise_uniform_vs_no_idle():
    c = parse_text(LAYER)
    u = apply_noise_model(c, NoiseModel("uniform", 1e-3))
    lines = u.to_text().splitlines()
    assert "DEPOLARIZE2(0.001) 0 1" in lines
    assert "DEPOLARIZE1(0.001) 2" in lines
    n = apply_noise_model(c, NoiseModel("no-idle", 1e-3))
    assert "DEPOLARIZE1(0.001) 2" not in n.to_text().splitlines()
    diff = [l for l in lines if l not in n.to_text().splitlines()]
    assert diff == ["DEPOLARIZE1(0.001) 2"]


def test_noise_rules():
    c = parse_text("RESET_Z 0\nRESET_X 1\nRESET_ONE 2\nTICK\nH 0\nTICK\nMEASURE_X 0 1\nMEASURE_Z 2\n")
    u = apply_noise_model(c, uniform_depolarizing(0.01)).to_text().splitlines()
    assert u[:6] == ["RESET_Z 0", "X_ERROR(0.01) 0", "RESET_X 1", "Z_ERROR(0.01) 1",
                     "RESET_ONE 2", "X_ERROR(0.01) 2"]
    assert "DEPOLARIZE1(0.01) 0" in u
    assert "FLIP_RESULT(0.01) 0 1" in u
    with pytest.raises(CircuitError):
        apply_noise_model(apply_noise_model(c, uniform_depolarizing(0.01)), uniform_depolarizing(0.01))


def test_zero_noise_is_identity():
    c = parse_text(LAYER)
    assert apply_noise_model(c, NoiseModel("uniform", 0.0)) == c
    assert depolarizing_no_idle(0.0).idle == 0


def test_noise_keeps_skeleton_order():
    c = parse_text(LAYER)
    u = apply_noise_model(c, NoiseModel("uniform", 0.1))
    assert u.without_noise() == c


# -- frame sampler ---------------------------------------------------------

def test_pack_round_trip():
    rng = np.random.default_rng(0)
    bits = rng.integers(0, 2, size=(3, 130)).astype(np.uint8)
    assert np.array_equal(unpack_bits(pack_bits(bits), 130), bits)


def test_frame_zero_noise():
    c = parse_text("RESET_Z 0 1\nH 0\nCX 0 1\nMEASURE_Z 0 1\nDETECTOR rec[-1] rec[-2]\n")
    b = frame_sample(c, 1000, seed=3)
    assert not b.unpack_detectors().any()


def test_frame_certain_error():
    c = parse_text("RESET_Z 0\nX_ERROR(1) 0\nMEASURE_Z 0\nDETECTOR rec[-1]\n")
    assert frame_sample(c, 200, seed=1).unpack_detectors().all()


def test_frame_seed_determinism():
    c = parse_text("RESET_Z 0 1\nDEPOLARIZE1(0.3) 0\nCX 0 1\nDEPOLARIZE2(0.2) 0 1\nMEASURE_Z 0 1\n"
                   "DETECTOR rec[-1]\nDETECTOR rec[-2]\n")
    a = frame_sample(c, 5000, seed=7, batch=1024)
    b = frame_sample(c, 5000, seed=7, batch=1024)
    assert a == b
    assert not (a == frame_sample(c, 5000, seed=8, batch=1024))


REP = (
    "RESET_Z 0 1 2\nX_ERROR(0.1) 0 1 2\nTICK\nCX 0 2\nDEPOLARIZE2(0.1) 0 2\nTICK\nCX 1 2\n"
    "DEPOLARIZE2(0.1) 1 2\nTICK\nFLIP_RESULT(0.1) 2\nMEASURE_Z 2\nDETECTOR rec[-1]\n"
    "RESET_X 2\nZ_ERROR(0.1) 2\nCZ 2 0\nDEPOLARIZE1(0.1) 0\nMEASURE_X 2\nFLIP_RESULT(0.1) 0 1\nMEASURE_Z 0 1\n"
    "DETECTOR rec[-1] rec[-2] rec[-4]\nDETECTOR rec[-3]\nOBSERVABLE 0 rec[-1]\n"
)


def test_frame_matches_tableau_marginals():
    c = parse_text(REP)
    n = 4000
    D, O = noisy_tableau_sample(c, n, seed=11)
    fb = frame_sample(c, 100_000, seed=5)
    fd = fb.unpack_detectors().mean(axis=1)
    fo = fb.unpack_observables().mean(axis=1)
    for got, want in zip(list(fd) + list(fo), list(D.mean(axis=0)) + list(O.mean(axis=0))):
        sigma = np.sqrt(max(want * (1 - want), 1e-4) / n)
        assert abs(got - want) < 4 * sigma
