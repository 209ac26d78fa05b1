import pytest
from hypothesis import given, settings, strategies as st

from cultivation.circuit import parse_text
from cultivation.noise import (
    ChannelPolicy,
    NoiseModel,
    apply_noise_model,
    depolarizing_no_idle,
    uniform_depolarizing,
)

RESET_LAYER = "RESET_Z 0 1\nTICK\nCX 0 1\nTICK\nRESET_X 2\nTICK\nCX 1 2\nTICK\nMEASURE_Z 0 1 2\n"


def test_idle_in_reset_layers_only_with_all():
    c = parse_text(RESET_LAYER)
    p = uniform_depolarizing(0.01)
    gate_only = ChannelPolicy(p.name, p.gate_1q, p.gate_2q, p.reset, p.measure, p.idle, "gate")
    a = apply_noise_model(c, p).to_text()
    g = apply_noise_model(c, gate_only).to_text()
    # qubits 0 and 1 idle while 2 is reset
    assert "RESET_X 2\nZ_ERROR(0.01) 2\nDEPOLARIZE1(0.01) 0 1\n" in a
    assert "RESET_X 2\nZ_ERROR(0.01) 2\nTICK" in g


def test_policy_validation():
    with pytest.raises(ValueError):
        ChannelPolicy("x", 0, 0, 0, 0, 0, "sometimes")
    with pytest.raises(ValueError):
        NoiseModel("uniform", 1.0)


def test_reset_one_flips_like_reset():
    c = parse_text("RESET_ONE 0\nMEASURE_Z 0\n")
    t = apply_noise_model(c, depolarizing_no_idle(0.02)).to_text()
    assert "RESET_ONE 0\nX_ERROR(0.02) 0\n" in t


_LINES = st.sampled_from(["H 0", "S 1", "CX 0 1", "CX 1 2", "CZ 0 2", "RESET_Z 2", "RESET_X 0",
                          "MEASURE_Z 1", "MEASURE_X 2", "TICK", "H_XY 2"])


@settings(max_examples=60, deadline=None)
@given(st.lists(_LINES, min_size=1, max_size=25))
def test_uniform_minus_no_idle_is_idle_channels(lines):
    c = parse_text("RESET_Z 0 1 2\nTICK\n" + "\n".join(lines) + "\n")
    u = apply_noise_model(c, NoiseModel("uniform", 1e-3)).instructions
    n = apply_noise_model(c, NoiseModel("no-idle", 1e-3)).instructions
    # removing the uniform-only DEPOLARIZE1 lines must leave exactly the no-idle circuit
    i = 0
    extra = []
    for ins in u:
        if i < len(n) and ins == n[i]:
            i += 1
        else:
            extra.append(ins)
    assert i == len(n)
    assert all(e.name == "DEPOLARIZE1" for e in extra)
