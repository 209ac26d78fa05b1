import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cultivation.circuit import CULTIVATE, ESCAPE, clifford_substitute, parse_text
from cultivation.noise import NoiseModel
from cultivation.pauli import PauliString
from cultivation.simulate import reference_sample, run_tableau
from cultivation.stages import (
    FULL,
    StageContext,
    StageError,
    StagePlan,
    assemble,
    build_injection,
    build_readout,
    build_syndrome_cycle,
    stage_plan,
)


@pytest.fixture(scope="module")
def d3():
    return assemble(stage_plan(3))


def test_plan_defaults():
    assert stage_plan(3).d_final == 7
    assert stage_plan(4).d_final == 9
    assert stage_plan(5).d_final == 11
    assert stage_plan(4, None).d_final is None
    with pytest.raises(StageError):
        stage_plan(6)


@pytest.mark.parametrize("kw", [
    dict(d_mid=4, distances=(3,)),
    dict(distances=(3, 3), rounds_per_stage=(1, 1), checks_per_stage=(1, 1)),
    dict(d_final=2),
    dict(checks_per_stage=(0,)),
    dict(distances=(4,), d_mid=4),
])
def test_plan_validation(kw):
    with pytest.raises(StageError):
        StagePlan(**kw)


def test_end_to_end_deterministic(d3):
    d, o = reference_sample(d3.clifford)
    assert not d.any() and not o.any()
    assert set(r.region for r in d3.circuit.detectors) == {CULTIVATE, ESCAPE}


def test_ungrown_has_no_escape():
    a = assemble(stage_plan(3, None))
    assert all(r.region == CULTIVATE for r in a.circuit.detectors)


def test_text_round_trip(d3):
    text = d3.circuit.to_text()
    assert parse_text(text) == d3.circuit
    assert "T " in text and "MPP" in text


def test_noisy_circuit_only_adds_channels(d3):
    u = d3.noisy(NoiseModel("uniform", 1e-3))
    n = d3.noisy(NoiseModel("no-idle", 1e-3))
    assert u.without_noise() == d3.circuit == n.without_noise()
    extra = [i for i in u.instructions if i.name == "DEPOLARIZE1"]
    assert len(extra) > len([i for i in n.instructions if i.name == "DEPOLARIZE1"])


def test_check_sees_required_z_signs(d3):
    # singly-even Z checks must read -1 when the transversal layer starts
    s = d3.clifford
    nq = len(d3.context.qubits)
    for ch in d3.context.checks:
        t = run_tableau(s, stop=ch.position + nq).tableau
        for z in ch.layout.z_plaquettes:
            v = t.expectation(PauliString.from_sets(t.n, zs=z))
            assert v == (-1 if len(z) % 4 == 2 else 1)


def test_single_round_circuit_deterministic():
    ctx = StageContext()
    build_injection(ctx)
    build_syndrome_cycle(ctx.layout, FULL, ctx)
    build_readout(ctx)
    c = clifford_substitute(ctx.build())
    d, o = reference_sample(c)
    assert c.num_detectors == 16 and not d.any() and not o.any()


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 2), st.integers(1, 2), st.sampled_from([None, 3, 5]))
def test_any_d3_plan_is_deterministic(rounds, checks, final):
    plan = StagePlan(3, final, (3,), (rounds,), (checks,), 1)
    a = assemble(plan)
    d, o = reference_sample(a.clifford)
    assert not d.any() and not o.any()
    assert a.circuit.num_observables == 1
    assert np.all([r.region in (CULTIVATE, ESCAPE) for r in a.circuit.detectors])
