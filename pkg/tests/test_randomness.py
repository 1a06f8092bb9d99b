import numpy as np
from scipy import stats

from glauberkit.lattice import Rect
from glauberkit.randomness import Patch, RandomnessSource, clock_events, init_uniforms


def test_deterministic_and_empty_window():
    a = clock_events(RandomnessSource(7), (3, -2), (0.0, 50.0))
    b = clock_events(RandomnessSource(7), (3, -2), (0.0, 50.0))
    assert a == b and len(a) > 0
    assert clock_events(RandomnessSource(7), (3, -2), (0.0, 0.0)) == []
    assert init_uniforms(RandomnessSource(7), (1, 1)) == init_uniforms(RandomnessSource(7), (1, 1))
    assert init_uniforms(RandomnessSource(8), (1, 1)) != init_uniforms(RandomnessSource(7), (1, 1))


def test_events_sorted_and_in_window(src):
    ev = clock_events(src, (0, 0), (2.5, 40.0))
    t = [e.time for e in ev]
    assert t == sorted(t)
    assert all(2.5 < x <= 40.0 for x in t)
    assert all(0.0 <= e.u < 1.0 for e in ev)


def test_unit_rate_poisson_counts(src):
    xs, ys = np.meshgrid(np.arange(250), np.arange(400))
    coords = np.stack([xs.ravel(), ys.ravel()], axis=1)
    ev = src.events(coords, 0.0, 1.0)
    assert 98735 <= len(ev) <= 101265
    counts = np.bincount(ev.site, minlength=len(coords))
    assert abs(counts.var() - 1.0) < 0.03


def test_window_consistency(src):
    coords = np.array([[x, 0] for x in range(50)])
    whole = src.events(coords, 0.0, 9.0)
    parts = [src.events(coords, a, b) for a, b in [(0.0, 2.2), (2.2, 5.0), (5.0, 9.0)]]
    assert np.array_equal(whole.times, np.concatenate([p.times for p in parts]))
    assert np.array_equal(whole.u, np.concatenate([p.u for p in parts]))
    assert np.array_equal(whole.site, np.concatenate([p.site for p in parts]))


def test_init_uniforms_distribution(src):
    xs, ys = np.meshgrid(np.arange(300), np.arange(300))
    coords = np.stack([xs.ravel(), ys.ravel()], axis=1)
    upi = src.uniforms(coords, "init-pi")
    uq = src.uniforms(coords, "init-q")
    assert abs(upi.mean() - 0.5) < 0.002
    assert stats.kstest(upi, "uniform").statistic < 0.02
    assert abs(np.corrcoef(upi, uq)[0, 1]) < 0.05
    ev = src.events(coords[:20000], 0.0, 1.0)
    assert stats.kstest(ev.u, "uniform").statistic < 0.02


def test_interarrival_exponential(src):
    t = np.array([e.time for e in clock_events(src, (5, 5), (0.0, 20000.0))])
    gaps = np.diff(np.concatenate([[0.0], t]))
    assert stats.kstest(gaps, "expon").pvalue > 1e-4


def test_derive_independent(src):
    a, b = src.derive(1), src.derive(2)
    assert a.seed != b.seed and a.derive(3) == src.derive(1).derive(3)


def test_patch_rekeys_outside_region(src):
    region = (Rect(0, 0, 4, 4),)
    patched = RandomnessSource(src.seed, Patch(99, region, 5.0))
    inside = np.array([[1, 1]])
    outside = np.array([[10, 10]])
    a, b = src.events(inside, 0.0, 5.0), patched.events(inside, 0.0, 5.0)
    assert np.array_equal(a.times, b.times)
    a, b = src.events(outside, 0.0, 5.0), patched.events(outside, 0.0, 5.0)
    assert not np.array_equal(a.times, b.times)
    a, b = src.events(inside, 6.0, 30.0), patched.events(inside, 6.0, 30.0)
    assert not np.array_equal(a.times, b.times)


def test_derive_chains_with_large_seeds():
    src = RandomnessSource(2 ** 64 - 5)
    for labs in [(16, 1), (3, 4, 5), (2 ** 40, 7)]:
        a = src.derive(*labs)
        b = src
        for lab in labs:
            b = b.derive(lab)
        assert a == b and 0 <= a.seed < 2 ** 64
