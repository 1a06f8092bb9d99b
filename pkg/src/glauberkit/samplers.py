"""Initial conditions: product Rad(p), exact Gibbs samples by monotone CFTP,
the torus plus phase, and the pointwise-minimum overlay.

CFTP runs the top (all plus) and bottom (all minus) chains over
``(-T, 0]`` with the keyed past stream, doubling ``T`` until they meet.
The past randomness of a vertex does not depend on ``T``, so extending the
past never changes values already used, and samples for ordered boundary
conditions (or nested domains) under one seed are pointwise ordered.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .dynamics import ModelParams, threshold_table
from .errors import InvalidRegion, NonCoalesced, PreconditionViolation
from .lattice import BoundaryCondition, Domain, Rect, SpinConfig, make_bc, torus
from .randomness import CFTP_CLOCK, CFTP_U, REJECT, RandomnessSource, key_hash, window_events

DEFAULT_LIMIT = 24


def sample_rad(src: RandomnessSource, domain: Domain, p: float) -> SpinConfig:
    """Product Rad(p): spin +1 iff the time-zero uniform ``u_q(v) <= p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    u = src.uniforms(domain.key_coords, "init-q")
    return SpinConfig(domain, np.where(u <= p, 1, -1).astype(np.int8))


@nb.njit(cache=True)
def _cftp_core(seeds, alt, cuts, xs, ys, nbr, ghosts, thr, limit):
    n = len(xs)
    L = n + len(ghosts)
    top = np.empty(L, dtype=np.int8)
    bot = np.empty(L, dtype=np.int8)
    T = 1.0
    t, s, u = window_events(seeds, alt, cuts, xs, ys, -T, 0.0, CFTP_CLOCK, CFTP_U)
    for epoch in range(limit + 1):
        top[:n] = 1
        bot[:n] = -1
        top[n:] = ghosts
        bot[n:] = ghosts
        for k in range(len(s)):
            i = s[k]
            St = top[nbr[i, 0]] + top[nbr[i, 1]] + top[nbr[i, 2]] + top[nbr[i, 3]]
            Sb = bot[nbr[i, 0]] + bot[nbr[i, 1]] + bot[nbr[i, 2]] + bot[nbr[i, 3]]
            top[i] = 1 if u[k] <= thr[St + 4] else -1
            bot[i] = 1 if u[k] <= thr[Sb + 4] else -1
        same = True
        for i in range(n):
            if top[i] != bot[i]:
                same = False
                break
        if same:
            return top[:n].copy(), T
        if epoch == limit:
            break
        # extend the past: events of (-2T, -T] precede those already held
        t2, s2, u2 = window_events(seeds, alt, cuts, xs, ys, -2.0 * T, -T, CFTP_CLOCK, CFTP_U)
        s = np.concatenate((s2, s))
        u = np.concatenate((u2, u))
        T *= 2.0
    return top[:n].copy(), -T


@nb.njit(cache=True)
def _cftp_batch(base_seed, first, count, xs, ys, nbr, ghosts, thr, limit):
    n = len(xs)
    out = np.empty((count, n), dtype=np.int8)
    horizon = np.empty(count, dtype=np.float64)
    cuts = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    for r in range(count):
        s = key_hash(np.uint64(base_seed), 99, first + r, 0, 0, 0)
        seeds = np.full(n, s, dtype=np.uint64)
        spins, T = _cftp_core(seeds, seeds, cuts, xs, ys, nbr, ghosts, thr, limit)
        out[r] = spins
        horizon[r] = T
    return out, horizon


def _bc_spins(domain: Domain, bc: BoundaryCondition | None) -> np.ndarray:
    if bc is None:
        if domain.n_ghosts:
            raise PreconditionViolation("non-periodic domain needs a boundary condition")
        return np.zeros(0, dtype=np.int8)
    return bc.spins


def cftp_with_horizon(src: RandomnessSource, domain: Domain, bc: BoundaryCondition | None,
                      p: ModelParams, limit: int = DEFAULT_LIMIT) -> tuple[SpinConfig, float]:
    """CFTP sample and the past horizon ``T`` at which coalescence was detected."""
    kc = domain.key_coords
    seeds, alt, cuts = src.seed_arrays(kc)
    spins, T = _cftp_core(seeds, alt, cuts, kc[:, 0].copy(), kc[:, 1].copy(), domain.nbr,
                          _bc_spins(domain, bc), threshold_table(p.beta, p.h), int(limit))
    if T < 0:
        raise NonCoalesced(f"no coalescence within 2^{limit} time units", -T / 2)
    return SpinConfig(domain, spins), T


def sample_stationary_cftp(src: RandomnessSource, domain: Domain, bc: BoundaryCondition | None,
                           p: ModelParams, limit: int = DEFAULT_LIMIT) -> SpinConfig:
    """Exact sample of the Gibbs measure on ``domain`` with boundary ``bc``."""
    return cftp_with_horizon(src, domain, bc, p, limit)[0]


def cftp_batch(src: RandomnessSource, domain: Domain, bc: BoundaryCondition | None,
               p: ModelParams, count: int, first: int = 0,
               limit: int = DEFAULT_LIMIT) -> np.ndarray:
    """``count`` independent CFTP samples; row ``r`` equals
    ``sample_stationary_cftp(src.derive(first + r), ...)``."""
    if src.patch is not None:
        raise PreconditionViolation("batched sampling does not support patched sources")
    kc = domain.key_coords
    out, hor = _cftp_batch(np.uint64(src.seed), int(first), int(count), kc[:, 0].copy(),
                           kc[:, 1].copy(), domain.nbr, _bc_spins(domain, bc),
                           threshold_table(p.beta, p.h), int(limit))
    if (hor < 0).any():
        raise NonCoalesced(f"no coalescence within 2^{limit} time units", float(-hor.min() / 2))
    return out


def sample_torus_plus_phase(src: RandomnessSource, n: int, p: ModelParams,
                            limit: int = DEFAULT_LIMIT, max_rejects: int = 1000) -> SpinConfig:
    """Torus Gibbs sample conditioned on nonnegative magnetization.

    Unconditioned CFTP, then a global flip when the magnetization is
    negative; a zero magnetization is rejected and redrawn from a salted key.
    """
    dom = torus(n)
    s = src
    for attempt in range(max_rejects + 1):
        cfg = sample_stationary_cftp(s, dom, None, p, limit)
        m = int(cfg.spins.sum(dtype=np.int64))
        if m < 0:
            return SpinConfig(dom, -cfg.spins)
        if m > 0:
            return cfg
        s = src.derive(REJECT, attempt)
    raise NonCoalesced("too many zero-magnetization rejections", float("nan"))


def torus_plus_batch(src: RandomnessSource, n: int, p: ModelParams, count: int,
                     limit: int = DEFAULT_LIMIT) -> np.ndarray:
    """Batched :func:`sample_torus_plus_phase`; row ``r`` uses ``src.derive(r)``."""
    dom = torus(n)
    out = cftp_batch(src, dom, None, p, count, 0, limit)
    m = out.sum(axis=1, dtype=np.int64)
    out[m < 0] *= -1
    for r in np.nonzero(m == 0)[0]:
        out[r] = sample_torus_plus_phase(src.derive(int(r)), n, p, limit).spins
    return out


def min_overlay(base: SpinConfig, q: SpinConfig, region=None) -> SpinConfig:
    """Pointwise ``min(base, q)`` on ``region`` (a Rect, coordinate array or None
    for the whole domain); ``base`` elsewhere."""
    if not base.domain.same_as(q.domain):
        raise InvalidRegion("base and overlay live on different domains")
    out = base.spins.copy()
    if region is None:
        idx = np.arange(base.domain.n_sites)
    else:
        idx = base.domain.region_indices(region)
    out[idx] = np.minimum(out[idx], q.spins[idx])
    return SpinConfig(base.domain, out)


@dataclass
class InitSpec:
    """Declarative initial condition.

    kind: all-plus, all-minus, product-rad, stationary, or min-overlay.  A
    stationary spec uses ``bc`` (preset name or dict), ``beta`` and ``h``;
    a min-overlay combines ``base`` with ``q`` on ``region``.
    """

    kind: str = "all-plus"
    p: float = 1.0
    bc: object = "all-plus"
    beta: float = 1.0
    h: float = 0.0
    base: "InitSpec | None" = None
    q: "InitSpec | None" = None
    region: Rect | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")

    @classmethod
    def from_dict(cls, d: dict) -> "InitSpec":
        d = dict(d)
        for k in ("base", "q"):
            if isinstance(d.get(k), dict):
                d[k] = cls.from_dict(d[k])
        if isinstance(d.get("region"), (list, tuple)):
            d["region"] = Rect(*d["region"])
        if d.get("beta") in ("inf", "infinity"):
            d["beta"] = math.inf
        return cls(**d)


def initial_config(src: RandomnessSource, domain: Domain, spec: InitSpec) -> SpinConfig:
    k = spec.kind
    if k == "all-plus":
        return SpinConfig.constant(domain, 1)
    if k == "all-minus":
        return SpinConfig.constant(domain, -1)
    if k == "product-rad":
        return sample_rad(src, domain, spec.p)
    if k == "stationary":
        params = ModelParams(spec.beta, spec.h)
        if domain.periodic and spec.bc in ("plus-phase", {"preset": "plus-phase"}):
            return sample_torus_plus_phase(src, domain.width, params)
        bc = None if domain.periodic else make_bc(domain, spec.bc)
        return sample_stationary_cftp(src, domain, bc, params)
    if k == "min-overlay":
        if spec.base is None or spec.q is None:
            raise PreconditionViolation("min-overlay needs base and q specs")
        return min_overlay(initial_config(src, domain, spec.base),
                           initial_config(src, domain, spec.q), spec.region)
    raise ValueError(f"unknown init kind {k!r}")


BURN_IN_LABEL = 11


@dataclass
class BurnInAudit:
    """Magnetization trace of a burn-in run and its stationarity diagnostics.

    ``tau_int`` is the integrated autocorrelation time of the trace over
    its second half (unit spacing); the audit passes when the burn-in is at
    least ``min_ratio`` autocorrelation times and the last two quarters
    agree within three standard errors.
    """

    t_burn: float
    trace: np.ndarray
    tau_int: float
    drift: float
    drift_se: float
    min_ratio: float = 20.0

    @property
    def ok(self) -> bool:
        return self.t_burn >= self.min_ratio * self.tau_int and abs(self.drift) <= 3 * self.drift_se


def integrated_autocorr(x) -> float:
    """Sokal's windowed estimate with the self-consistent window c = 5."""
    x = np.asarray(x, dtype=np.float64)
    x = x - x.mean()
    n = len(x)
    if n < 4 or not np.any(x):
        return 0.5
    f = np.fft.rfft(x, 2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n]
    acf /= acf[0]
    tau = 0.5
    for w in range(1, n):
        tau += acf[w]
        if w >= 5 * tau:
            break
    return float(max(tau, 0.5))


def burn_in_plus_phase(src: RandomnessSource, n: int, p: ModelParams,
                       t_burn: float) -> tuple[SpinConfig, BurnInAudit]:
    """Approximate torus plus-phase sample: all-plus start run for ``t_burn``
    on an independent sub-stream, with the magnetization trace audited."""
    from .dynamics import ChainState, CoupledEnsemble, evolve
    dom = torus(n)
    ens = CoupledEnsemble([ChainState(dom, None, SpinConfig.constant(dom, 1))],
                          src.derive(BURN_IN_LABEL), p)
    steps = max(int(math.ceil(t_burn)), 4)
    trace = np.empty(steps)
    for j in range(steps):
        evolve(ens, t_burn * (j + 1) / steps)
        trace[j] = ens.chains[0].spins.mean(dtype=np.float64)
    half = trace[steps // 2:]
    tau = integrated_autocorr(half)
    q = len(trace) // 4
    a, b = trace[2 * q: 3 * q], trace[3 * q:]
    se = math.sqrt(2 * tau * (a.var() / max(len(a), 1) + b.var() / max(len(b), 1))) + 1e-12
    audit = BurnInAudit(float(t_burn), trace, tau * t_burn / steps, float(b.mean() - a.mean()), se)
    return SpinConfig(dom, ens.chains[0].spins.copy()), audit
