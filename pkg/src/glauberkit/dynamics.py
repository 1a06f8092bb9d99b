"""Continuous-time Glauber dynamics driven by shared keyed randomness.

Heat-bath updates at finite beta and majority updates at beta = inf.  All
chains in a :class:`CoupledEnsemble` read one merged list of clock events
and the same event uniforms; a chain ignores events at vertices outside its
domain.  Chains may live on different domains: their state vectors are
concatenated into one flat array and a single numba kernel advances them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .errors import IncompatibleChains, PreconditionViolation
from .lattice import BoundaryCondition, Domain, SpinConfig, neighbor_sum
from .randomness import RandomnessSource

EVENTS_PER_WINDOW = 4_000_000


@dataclass(frozen=True)
class ModelParams:
    beta: float
    h: float = 0.0

    def __post_init__(self):
        if not (self.beta > 0):
            raise ValueError("beta must be positive (use math.inf for zero temperature)")
        if not math.isfinite(self.h):
            raise ValueError("external field must be finite")

    @property
    def zero_temperature(self) -> bool:
        return math.isinf(self.beta)


def plus_probability(S: int, beta: float, h: float = 0.0) -> float:
    """Heat-bath probability of +1 given neighbour sum ``S``."""
    return 1.0 / (1.0 + math.exp(-2.0 * (beta * S + h)))


def threshold_table(beta: float, h: float = 0.0) -> np.ndarray:
    """``thr[S + 4]`` such that the new spin is +1 iff ``u <= thr``.

    At beta = inf the tie entry is the float just below 1/2, so that
    ``u <= thr`` means ``u < 1/2``.
    """
    thr = np.empty(9, dtype=np.float64)
    for S in range(-4, 5):
        if math.isinf(beta):
            thr[S + 4] = 1.0 if S > 0 else (-1.0 if S < 0 else np.nextafter(0.5, 0.0))
        else:
            thr[S + 4] = plus_probability(S, beta, h)
    return thr


def heat_bath_update(cfg: SpinConfig, bc: BoundaryCondition | None, v, u: float,
                     p: ModelParams) -> int:
    """+1 iff ``u <= e^{2(bS+h)} / (e^{2(bS+h)} + 1)`` with ``S`` the neighbour sum."""
    S = neighbor_sum(cfg, bc, v)
    return 1 if u <= threshold_table(p.beta, p.h)[S + 4] else -1


def majority_update(cfg: SpinConfig, bc: BoundaryCondition | None, v, u: float) -> int:
    """Sign of the neighbour sum; a tie goes to +1 iff ``u < 1/2``."""
    S = neighbor_sum(cfg, bc, v)
    if S != 0:
        return 1 if S > 0 else -1
    return 1 if u < 0.5 else -1


# -- kernels ------------------------------------------------------------------

@nb.njit(cache=True)
def apply_events(state, nbr, local_of, ev_site, ev_u, thr):
    """Process merged events on one chain in place; returns the update count."""
    n = 0
    for k in range(len(ev_site)):
        i = local_of[ev_site[k]]
        if i < 0:
            continue
        S = state[nbr[i, 0]] + state[nbr[i, 1]] + state[nbr[i, 2]] + state[nbr[i, 3]]
        state[i] = 1 if ev_u[k] <= thr[S + 4] else -1
        n += 1
    return n


@nb.njit(cache=True)
def run_ensemble(state, nbr, loc, ev_site, ev_time, ev_u, thr,
                 mon_a, mon_b, mon_kind, mon_mask, mon_fail_time, mon_count):
    """Advance every chain (flat ``state``) through the merged events.

    ``loc[c, s]`` is the flat index of union site ``s`` in chain ``c`` (or -1).
    After each event the updated coordinate is compared for every monitor
    whose region contains it: kind 0 requires equality, kind 1 requires
    ``chain a <= chain b``.  The first failing time and the number of
    failing checks are recorded.
    """
    C = loc.shape[0]
    M = len(mon_a)
    for k in range(len(ev_site)):
        s = ev_site[k]
        u = ev_u[k]
        for c in range(C):
            i = loc[c, s]
            if i < 0:
                continue
            S = state[nbr[i, 0]] + state[nbr[i, 1]] + state[nbr[i, 2]] + state[nbr[i, 3]]
            state[i] = 1 if u <= thr[S + 4] else -1
        for m in range(M):
            if not mon_mask[m, s]:
                continue
            a = state[loc[mon_a[m], s]]
            b = state[loc[mon_b[m], s]]
            bad = (a != b) if mon_kind[m] == 0 else (a > b)
            if bad:
                mon_count[m] += 1
                if not (mon_fail_time[m] <= ev_time[k]):
                    mon_fail_time[m] = ev_time[k]


@nb.njit(cache=True)
def record_codes(state, nbr, n_sites, ev_site, ev_time, ev_u, thr, sample_times):
    """Single chain: integer code (bit i set iff site i is +1) at each sample time.

    Sample times must be sorted; the state at time ``t`` includes events at ``t``.
    """
    out = np.empty(len(sample_times), dtype=np.int64)
    j = 0
    for k in range(len(ev_site)):
        while j < len(sample_times) and sample_times[j] < ev_time[k]:
            code = 0
            for i in range(n_sites):
                if state[i] > 0:
                    code |= 1 << i
            out[j] = code
            j += 1
        i = ev_site[k]
        S = state[nbr[i, 0]] + state[nbr[i, 1]] + state[nbr[i, 2]] + state[nbr[i, 3]]
        state[i] = 1 if ev_u[k] <= thr[S + 4] else -1
    while j < len(sample_times):
        code = 0
        for i in range(n_sites):
            if state[i] > 0:
                code |= 1 << i
        out[j] = code
        j += 1
    return out


# -- chains and ensembles -----------------------------------------------------

class ChainState:
    """One chain: domain, boundary condition and the state vector ``[sites, ghosts]``."""

    def __init__(self, domain: Domain, bc: BoundaryCondition | None, cfg: SpinConfig | np.ndarray,
                 now: float = 0.0, name: str = ""):
        spins = cfg.spins if isinstance(cfg, SpinConfig) else np.asarray(cfg, dtype=np.int8)
        if bc is None:
            if domain.n_ghosts:
                raise PreconditionViolation("non-periodic domain needs a boundary condition")
            bc = BoundaryCondition(domain, np.zeros(0, dtype=np.int8), "none")
        if bc.domain is not domain and not bc.domain.same_as(domain):
            raise IncompatibleChains("boundary condition belongs to another domain")
        if len(spins) != domain.n_sites:
            raise PreconditionViolation("configuration does not match domain")
        if now < 0:
            raise PreconditionViolation("chain time must be nonnegative")
        self.domain = domain
        self.bc = bc
        self.state = np.concatenate([np.asarray(spins, dtype=np.int8), bc.spins]).astype(np.int8)
        self.now = float(now)
        self.name = name

    @property
    def spins(self) -> np.ndarray:
        return self.state[: self.domain.n_sites]

    @property
    def cfg(self) -> SpinConfig:
        return SpinConfig(self.domain, self.spins.copy())

    def copy(self) -> "ChainState":
        return ChainState(self.domain, self.bc, self.spins.copy(), self.now, self.name)

    def region_spins(self, region) -> np.ndarray:
        return self.spins[self.domain.region_indices(region)]

    def __repr__(self):
        return f"ChainState({self.name or self.domain.kind}, t={self.now:.3f}, m={self.spins.mean():+.4f})"


@dataclass
class Monitor:
    """Pathwise constraint between chains ``a`` and ``b`` on global ``coords``.

    ``kind`` is ``"eq"`` (agreement) or ``"le"`` (a <= b).  ``fail_time`` is
    the first time the constraint failed (nan if never) and ``count`` the
    number of failing checks.
    """

    a: int
    b: int
    coords: np.ndarray | None = field(repr=False)
    kind: str = "eq"
    fail_time: float = math.nan
    count: int = 0

    @property
    def holds(self) -> bool:
        return self.count == 0


def union_coords(domains) -> np.ndarray:
    """Sorted (row-major) union of the key coordinates of several domains."""
    allc = np.concatenate([d.key_coords for d in domains])
    allc = np.unique(allc[:, ::-1], axis=0)[:, ::-1]
    return np.ascontiguousarray(allc)


@dataclass
class CoupledEnsemble:
    """Chains advanced in lockstep against one :class:`RandomnessSource`."""

    chains: list
    src: RandomnessSource
    params: ModelParams
    horizon: float = 0.0
    ordered_pairs: list = field(default_factory=list)
    monitors: list = field(default_factory=list)
    violations: int = 0

    def __post_init__(self):
        if self.horizon < 0:
            raise PreconditionViolation("horizon must be nonnegative")
        self.chains = list(self.chains)
        self._build()

    def _build(self):
        chains = self.chains
        if not chains:
            raise PreconditionViolation("ensemble needs at least one chain")
        for c in chains:
            c.now = self.horizon
        self._coords = union_coords([c.domain for c in chains])
        sizes = [len(c.state) for c in chains]
        offs = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        flat = np.concatenate([c.state for c in chains]).astype(np.int8)
        nbr = np.zeros((len(flat), 4), dtype=np.int64)
        loc = -np.ones((len(chains), len(self._coords)), dtype=np.int64)
        for j, c in enumerate(chains):
            d = c.domain
            nbr[offs[j]: offs[j] + d.n_sites] = d.nbr + offs[j]
            li = d.indices(self._coords)
            loc[j] = np.where(li >= 0, li + offs[j], -1)
        self._flat, self._nbr, self._loc = flat, nbr, loc
        for j, c in enumerate(chains):
            c.state = flat[offs[j]: offs[j + 1]]
        self._site_of = {tuple(c): i for i, c in enumerate(self._coords.tolist())}

    def add_chain(self, chain: ChainState) -> int:
        """Join a chain at the current horizon; returns its index."""
        self.chains.append(chain)
        self._build()
        return len(self.chains) - 1

    @property
    def coords(self) -> np.ndarray:
        return self._coords

    def monitor(self, a: int, b: int, coords=None, kind: str = "eq") -> Monitor:
        """Watch chain ``a`` against chain ``b`` on ``coords`` from now on.

        The constraint is checked at once and then after every event; with
        ``coords=None`` the common sites of both domains are watched.
        """
        if kind not in ("eq", "le"):
            raise ValueError("monitor kind must be 'eq' or 'le'")
        if coords is None:
            da, db = self.chains[a].domain, self.chains[b].domain
            both = (da.indices(self._coords) >= 0) & (db.indices(self._coords) >= 0)
            coords = self._coords[both]
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, 2)
        m = Monitor(a, b, coords, kind)
        if len(coords):
            va = self.chains[a].region_spins(coords)
            vb = self.chains[b].region_spins(coords)
            bad = (va != vb) if kind == "eq" else (va > vb)
            if bad.any():
                m.count = int(bad.sum())
                m.fail_time = self.horizon
        self.monitors.append(m)
        return m

    def _mon_arrays(self):
        mons = list(self.monitors) + [Monitor(lo, hi, None, "le") for lo, hi in self.ordered_pairs]
        M = len(mons)
        a = np.zeros(M, dtype=np.int64)
        b = np.zeros(M, dtype=np.int64)
        kind = np.zeros(M, dtype=np.int64)
        mask = np.zeros((M, len(self._coords)), dtype=np.bool_)
        fail = np.full(M, np.nan)
        cnt = np.zeros(M, dtype=np.int64)
        for i, m in enumerate(mons):
            a[i], b[i] = m.a, m.b
            kind[i] = 0 if m.kind == "eq" else 1
            if m.coords is None:
                mask[i] = (self._loc[m.a] >= 0) & (self._loc[m.b] >= 0)
            else:
                kc = self.chains[m.a].domain.to_key(m.coords)
                idx = [self._site_of[tuple(c)] for c in kc.tolist()]
                mask[i, idx] = True
            fail[i] = m.fail_time
            cnt[i] = m.count
        return a, b, kind, mask, fail, cnt


def evolve(ens: CoupledEnsemble, until: float, window: float | None = None,
           past: bool = False) -> CoupledEnsemble:
    """Advance every chain through all merged events in ``(horizon, until]``.

    Monitors and ordered pairs are checked after every event; the number of
    order violations accumulates in ``ens.violations``.
    """
    if until < ens.horizon:
        raise PreconditionViolation("cannot evolve backwards")
    if until == ens.horizon:
        return ens
    thr = threshold_table(ens.params.beta, ens.params.h)
    n = max(len(ens._coords), 1)
    if window is None:
        window = max(1.0, EVENTS_PER_WINDOW / n)
    a, b, kind, mask, fail, cnt = ens._mon_arrays()
    n_user = len(ens.monitors)
    t = ens.horizon
    while t < until:
        t1 = min(until, t + window)
        ev = ens.src.events(ens._coords, t, t1, past=past)
        run_ensemble(ens._flat, ens._nbr, ens._loc, ev.site, ev.times, ev.u, thr,
                     a, b, kind, mask, fail, cnt)
        t = t1
    for i, m in enumerate(ens.monitors):
        m.fail_time = float(fail[i])
        m.count = int(cnt[i])
    ens.violations += int(cnt[n_user:].sum())
    for c in ens.chains:
        c.now = until
    ens.horizon = until
    return ens


def run_chain(chain: ChainState, src: RandomnessSource, params: ModelParams, until: float) -> ChainState:
    ens = CoupledEnsemble([chain], src, params, horizon=chain.now)
    evolve(ens, until)
    return ens.chains[0]


def trajectory_codes(chain: ChainState, src: RandomnessSource, params: ModelParams,
                     sample_times, window: float = 50_000.0) -> np.ndarray:
    """State codes (bit ``i`` = site ``i`` is +1) at sorted sample times; tiny domains only."""
    d = chain.domain
    if d.n_sites > 62:
        raise PreconditionViolation("state codes need at most 62 sites")
    sample_times = np.asarray(sample_times, dtype=np.float64)
    if len(sample_times) and sample_times[0] < chain.now:
        raise PreconditionViolation("sample times precede the chain time")
    thr = threshold_table(params.beta, params.h)
    t = chain.now
    n_now = int(np.sum(sample_times <= t))
    code = sum(1 << i for i in range(d.n_sites) if chain.state[i] > 0)
    out = [np.full(n_now, code, dtype=np.int64)]
    end = float(sample_times[-1]) if len(sample_times) else t
    while t < end:
        t1 = min(end, t + window)
        sel = sample_times[(sample_times > t) & (sample_times <= t1)]
        ev = src.events(d.key_coords, t, t1)
        out.append(record_codes(chain.state, d.nbr, d.n_sites, ev.site, ev.times, ev.u, thr, sel))
        t = t1
    chain.now = max(chain.now, end)
    return np.concatenate(out)


def disagreement_set(a: ChainState, b: ChainState) -> set:
    """Global coordinates where the two chains differ."""
    if not a.domain.same_as(b.domain):
        raise IncompatibleChains("chains live on different domains")
    idx = np.nonzero(a.spins != b.spins)[0]
    return {tuple(int(x) for x in a.domain.sites[i]) for i in idx}
