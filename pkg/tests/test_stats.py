import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cultivation.decoder import DECIBAN, detector_graph_for, mwpm_decode
from cultivation.frame import ShotBatch, pack_bits
from cultivation.noise import NoiseModel
from cultivation.stages import stage_plan
from cultivation.stats import (
    DecodeResults,
    clopper_pearson,
    cultivation_stats,
    cutoff_for_discard,
    decode_batch,
    gap_sweep,
    measure_volume,
    run_pipeline,
    sampling_circuit,
    spacetime_volume,
    stream_end_to_end,
)


def test_clopper_pearson_edges():
    r = clopper_pearson(0, 100)
    assert r.low == 0 and r.high == pytest.approx(1 - 0.025 ** (1 / 100))
    r = clopper_pearson(100, 100)
    assert r.high == 1 and r.low == pytest.approx(0.025 ** (1 / 100))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 10 ** 7), st.data())
def test_clopper_pearson_contains_proportion(n, data):
    k = data.draw(st.integers(0, n))
    r = clopper_pearson(k, n)
    assert r.low <= k / n <= r.high


def test_noiseless_pipeline():
    plan = stage_plan(3)
    b = run_pipeline(plan, NoiseModel("uniform", 0.0), 500, seed=1)
    assert not b.unpack_detectors().any() and not b.unpack_observables().any()
    disc, kept = cultivation_stats(b)
    assert disc.k == 0 and kept.shots == 500
    g = detector_graph_for(sampling_circuit(plan, NoiseModel("uniform", 1e-3)))
    r = decode_batch(kept, g)
    assert not r.errors.any()
    assert np.allclose(r.gaps, g.logical_weight * DECIBAN)
    # a known logical flip is an error at cutoff 0
    flipped = ShotBatch(kept.shots, kept.detectors, kept.observables ^ np.uint64(0xFFFFFFFFFFFFFFFF), kept.regions)
    r2 = decode_batch(flipped, g)
    assert r2.errors.all()
    assert gap_sweep(r2, [0.0]).rows[0].errors == kept.shots


def test_seed_reproducible():
    plan = stage_plan(3, None)
    nm = NoiseModel("uniform", 1e-3)
    assert run_pipeline(plan, nm, 3000, seed=9) == run_pipeline(plan, nm, 3000, seed=9)
    assert not run_pipeline(plan, nm, 3000, seed=9) == run_pipeline(plan, nm, 3000, seed=10)


def test_cultivation_stats_counts():
    regions = ["CULTIVATE", "CULTIVATE", "ESCAPE"]
    d = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 1, 1]], dtype=np.uint8)
    b = ShotBatch(4, pack_bits(d), pack_bits(np.zeros((1, 4), dtype=np.uint8)), regions)
    disc, kept = cultivation_stats(b)
    assert (disc.k, disc.n) == (2, 4)
    assert kept.shots == 2
    assert kept.unpack_detectors()[2].tolist() == [1, 1]
    with pytest.raises(ValueError):
        cultivation_stats(ShotBatch(0, d[:, :0], d[:1, :0], regions))


@pytest.fixture(scope="module")
def d3_results():
    return stream_end_to_end(stage_plan(3), NoiseModel("uniform", 1e-3), 200_000, seed=3, chunk=1 << 16)


def test_sweep_invariants(d3_results):
    r = d3_results
    sw = gap_sweep(r, np.arange(0, 80, 2.5))
    sw.check()
    for row in sw.rows:
        assert row.error_rate_doubled == 2 * row.error_rate_raw or row.kept_shots == 0
        assert row.kept_shots + row.discarded == r.total_shots
        if row.kept_shots:
            assert row.ci_low <= row.error_rate_raw <= row.ci_high
    # below the smallest observed gap only cultivation discards
    low = gap_sweep(r, [float(r.gaps.min())]).rows[0]
    assert low.kept_shots == len(r)
    csv_text = sw.to_csv()
    assert csv_text.splitlines()[0].startswith("cutoff_deciban,kept_shots")
    assert '"schema": 1' in sw.to_json()


def test_cutoff_for_discard(d3_results):
    r = d3_results
    for target in (0.55, 0.6, 0.66):
        cut = cutoff_for_discard(r, target)
        row = gap_sweep(r, [cut]).rows[0]
        assert row.discard_rate >= target - 1e-9
        # the next-lower cutoff keeps more than the target allows
        assert (r.gaps >= cut).sum() <= (1 - target) * r.total_shots + 1


def test_stream_resume_merges(d3_results):
    plan, nm = stage_plan(3), NoiseModel("uniform", 1e-3)
    seen = {}
    part = stream_end_to_end(plan, nm, 200_000, seed=3, chunk=1 << 16, skip={0, 2},
                             on_chunk=lambda k, r: seen.setdefault(k, r))
    assert sorted(seen) == [1, 3]
    rest = stream_end_to_end(plan, nm, 200_000, seed=3, chunk=1 << 16, skip={1, 3})
    assert part.total_shots + rest.total_shots == d3_results.total_shots
    assert int(part.errors.sum() + rest.errors.sum()) == int(d3_results.errors.sum())
    assert sorted(np.concatenate([part.gaps, rest.gaps])) == sorted(d3_results.gaps)


def test_decoder_agrees_with_blossom_route():
    plan, nm = stage_plan(3), NoiseModel("uniform", 1e-3)
    c = sampling_circuit(plan, nm)
    g = detector_graph_for(c)
    b = run_pipeline(plan, nm, 4000, seed=21)
    _, kept = cultivation_stats(b)
    kept = kept.select(np.arange(kept.shots) < 1000)
    r = decode_batch(kept, g)
    D = kept.unpack_detectors()[list(g.detector_ids)]
    O = kept.unpack_observables()[0]
    other = np.array([mwpm_decode(g, D[:, j])[0] != O[j] for j in range(kept.shots)])
    sure = r.gaps > 1e-6
    assert np.array_equal(other[sure], r.errors[sure])
    assert abs(int(other.sum()) - int(r.errors.sum())) <= int((~sure).sum())


def test_spacetime_volume():
    assert spacetime_volume([10] * 5, [1.0] * 5).volume == 50
    assert spacetime_volume([10, 10], [1.0, 0.5], success=0.25).volume == pytest.approx(60)
    with pytest.raises(ValueError):
        spacetime_volume([1, 2], [1.0])
    with pytest.raises(ValueError):
        spacetime_volume([1, 2], [1.0, 0.0])


def test_volume_curves_shape():
    r = measure_volume(stage_plan(3), NoiseModel("uniform", 1e-3), shots=4096, seed=1)
    assert r.ticks_per_cycle == 6
    assert r.volume > 0
    assert np.all(np.diff(r.survival) <= 1e-12)
    assert r.active.max() * r.ticks_per_cycle == 97
