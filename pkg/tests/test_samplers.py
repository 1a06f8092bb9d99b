import math

import numpy as np
import pytest

from glauberkit.dynamics import ModelParams
from glauberkit.errors import InvalidRegion, NonCoalesced
from glauberkit.lattice import Rect, SpinConfig, all_minus, all_plus, box, torus
from glauberkit.randomness import RandomnessSource
from glauberkit.samplers import (InitSpec, burn_in_plus_phase, cftp_batch, cftp_with_horizon,
                                 initial_config, integrated_autocorr, min_overlay, sample_rad,
                                 sample_stationary_cftp, sample_torus_plus_phase)


def test_single_site_cftp_probability():
    d = box(1)
    out = cftp_batch(RandomnessSource(3), d, all_plus(d), ModelParams(1.0), 100_000)
    assert abs((out[:, 0] > 0).mean() - 0.99966465) <= 0.0005


def test_batch_rows_match_single_calls():
    d = box(3)
    p = ModelParams(0.4)
    src = RandomnessSource(11)
    out = cftp_batch(src, d, all_plus(d), p, 5, first=2)
    for r in range(5):
        assert np.array_equal(out[r], sample_stationary_cftp(src.derive(2 + r), d, all_plus(d), p).spins)


def test_boundary_ordering_under_shared_randomness():
    d = box(6)
    p = ModelParams(0.5)
    for s in range(10):
        src = RandomnessSource(s)
        hi = sample_stationary_cftp(src, d, all_plus(d), p)
        lo = sample_stationary_cftp(src, d, all_minus(d), p)
        assert lo <= hi


def test_larger_limit_same_sample():
    d = box(4)
    p = ModelParams(0.6)
    src = RandomnessSource(5)
    a, T = cftp_with_horizon(src, d, all_plus(d), p, limit=20)
    b, _ = cftp_with_horizon(src, d, all_plus(d), p, limit=24)
    assert np.array_equal(a.spins, b.spins) and T >= 1


def test_non_coalescence_reported():
    d = box(12)
    with pytest.raises(NonCoalesced):
        sample_stationary_cftp(RandomnessSource(1), d, all_plus(d), ModelParams(2.0), limit=0)


def test_rad_density():
    d = box(100)
    cfg = sample_rad(RandomnessSource(9), d, 0.9)
    assert abs((cfg.spins > 0).mean() - 0.9) <= 0.012
    assert (sample_rad(RandomnessSource(9), d, 1.0).spins == 1).all()
    assert (sample_rad(RandomnessSource(9), d, 0.0).spins == -1).all()


def test_min_overlay_examples():
    d = box(4)
    plus = SpinConfig.constant(d, 1)
    minus = SpinConfig.constant(d, -1)
    assert (min_overlay(plus, minus).spins == -1).all()
    r = Rect(0, 0, 2, 2)
    out = min_overlay(plus, minus, r)
    assert (out.spins == -1).sum() == 4 and out.spins[d.index(0, 0)] == -1
    assert np.array_equal(min_overlay(minus, plus).spins, minus.spins)
    with pytest.raises(InvalidRegion):
        min_overlay(plus, SpinConfig.constant(box(5), 1))


def test_torus_plus_phase_positive():
    for s in range(10):
        cfg = sample_torus_plus_phase(RandomnessSource(s), 5, ModelParams(0.5))
        assert cfg.spins.sum() > 0


def test_init_specs():
    d = box(6)
    src = RandomnessSource(2)
    spec = InitSpec.from_dict({"kind": "min-overlay", "base": {"kind": "all-plus"},
                               "q": {"kind": "product-rad", "p": 0.5}, "region": [0, 0, 3, 3]})
    cfg = initial_config(src, d, spec)
    outside = [d.index(x, y) for x in range(6) for y in range(6) if x >= 3 or y >= 3]
    assert (cfg.spins[outside] == 1).all()
    st = initial_config(src, torus(4), InitSpec("stationary", bc="plus-phase", beta=0.6))
    assert st.spins.sum() > 0


def test_integrated_autocorr_ar1():
    rng = np.random.default_rng(0)
    phi = 0.8
    x = np.zeros(200_000)
    e = rng.standard_normal(len(x))
    for i in range(1, len(x)):
        x[i] = phi * x[i - 1] + e[i]
    expected = 0.5 * (1 + phi) / (1 - phi)
    assert integrated_autocorr(x) == pytest.approx(expected, rel=0.1)


def test_burn_in_audit():
    cfg, audit = burn_in_plus_phase(RandomnessSource(4), 32, ModelParams(0.6), 100.0)
    assert audit.ok and cfg.spins.mean() > 0.9
    assert math.isfinite(audit.tau_int)
