import math

import numpy as np
import pytest

from glauberkit.dynamics import (ChainState, CoupledEnsemble, ModelParams, disagreement_set, evolve,
                                 heat_bath_update, majority_update, plus_probability, run_chain,
                                 threshold_table)
from glauberkit.errors import IncompatibleChains, PreconditionViolation
from glauberkit.lattice import SpinConfig, all_minus, all_plus, box, make_bc, torus
from glauberkit.randomness import RandomnessSource
from glauberkit.samplers import sample_rad


def test_threshold_examples():
    # logistic at 2*beta*S: 8 for (beta=1, S=4); the value at 16 belongs to beta=2
    assert plus_probability(4, 1.0) == pytest.approx(1 / (1 + math.exp(-8)), abs=1e-14)
    assert plus_probability(4, 2.0) == pytest.approx(0.99999988746, abs=1e-11)
    assert plus_probability(-2, 0.5) == pytest.approx(0.11920292, abs=1e-8)
    thr = threshold_table(1.0)
    assert all(thr[i] < thr[i + 1] for i in range(8))


def test_heat_bath_update_rule():
    d = box(3)
    cfg = SpinConfig.constant(d, 1)
    p = ModelParams(0.5)
    q = plus_probability(4, 0.5)
    assert heat_bath_update(cfg, all_plus(d), (1, 1), q, p) == 1
    assert heat_bath_update(cfg, all_plus(d), (1, 1), np.nextafter(q, 1), p) == -1


def test_majority_rule():
    d = box(3)
    plus = SpinConfig.constant(d, 1)
    assert majority_update(plus, all_minus(d), (1, 1), 0.99) == 1
    assert majority_update(plus, all_minus(d), (0, 0), 0.1) == 1   # two plus, two minus: tie
    assert majority_update(plus, all_minus(d), (0, 0), 0.7) == -1
    thr = threshold_table(math.inf)
    assert thr[4] < 0.5 and thr[5] == 1.0 and thr[3] == -1.0


def test_bad_params():
    with pytest.raises(ValueError):
        ModelParams(0.0)
    with pytest.raises(ValueError):
        ModelParams(1.0, math.nan)


def test_evolve_to_horizon_is_noop(src):
    d = box(5)
    c = ChainState(d, all_plus(d), sample_rad(src, d, 0.5))
    before = c.spins.copy()
    ens = CoupledEnsemble([c], src, ModelParams(1.0))
    evolve(ens, 0.0)
    assert np.array_equal(before, c.spins)
    with pytest.raises(PreconditionViolation):
        evolve(evolve(ens, 1.0), 0.5)


def test_identical_chains_stay_identical(src):
    d = box(8)
    cfg = sample_rad(src, d, 0.5)
    a = ChainState(d, all_plus(d), cfg)
    b = ChainState(d, all_plus(d), cfg.spins.copy())
    ens = CoupledEnsemble([a, b], src, ModelParams(0.4))
    m = ens.monitor(0, 1)
    evolve(ens, 20.0)
    assert m.holds and disagreement_set(a, b) == set()


def test_run_chain_matches_ensemble_and_split_windows(src):
    d = torus(6)
    cfg = sample_rad(src, d, 0.3)
    a = run_chain(ChainState(d, None, cfg), src, ModelParams(0.7), 15.0)
    b = ChainState(d, None, cfg.spins.copy())
    ens = CoupledEnsemble([b], src, ModelParams(0.7))
    evolve(ens, 4.0)
    evolve(ens, 15.0, window=1.3)
    assert np.array_equal(a.spins, b.spins) and b.now == 15.0


def test_monotone_coupling_preserves_order(rng):
    d = box(10)
    for s in range(20):
        src = RandomnessSource(int(rng.integers(2 ** 63)))
        lo = ChainState(d, all_minus(d), SpinConfig.constant(d, -1))
        hi = ChainState(d, all_plus(d), SpinConfig.constant(d, 1))
        mid = ChainState(d, make_bc(d, "dobrushin"), sample_rad(src, d, 0.5))
        ens = CoupledEnsemble([lo, mid, hi], src, ModelParams(0.6), ordered_pairs=[(0, 1), (1, 2)])
        evolve(ens, 10.0)
        assert ens.violations == 0


def test_coalescence_low_temperature_box():
    d = box(8)
    coalesced = 0
    for s in range(50):
        src = RandomnessSource(1000 + s)
        a = ChainState(d, all_plus(d), SpinConfig.constant(d, 1))
        b = ChainState(d, all_plus(d), SpinConfig.constant(d, -1))
        ens = CoupledEnsemble([a, b], src, ModelParams(3.0))
        evolve(ens, 200.0)
        coalesced += not disagreement_set(a, b)
    assert coalesced == 50


def test_disagreement_set_and_incompatible():
    d = box(3)
    a = ChainState(d, all_plus(d), SpinConfig.constant(d, 1))
    s = a.spins.copy()
    s[d.index(2, 1)] = -1
    b = ChainState(d, all_plus(d), s)
    assert disagreement_set(a, b) == {(2, 1)}
    with pytest.raises(IncompatibleChains):
        disagreement_set(a, ChainState(box(4), all_plus(box(4)), SpinConfig.constant(box(4), 1)))
    with pytest.raises(PreconditionViolation):
        ChainState(d, None, SpinConfig.constant(d, 1))
