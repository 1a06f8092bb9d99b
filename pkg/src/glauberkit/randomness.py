"""Keyed, replayable randomness for the grand coupling.

Every random number is a pure function of ``(seed, purpose, x, y, a, b)``
where ``(x, y)`` is the *global* lattice coordinate, so chains living on
different domains see identical clocks and uniforms at shared vertices.

Poisson clocks are generated per unit time cell: vertex ``v`` rings
``N ~ Poisson(1)`` times in ``(m, m+1)`` (count by inverse CDF from one keyed
uniform) at iid uniform positions.  Independent cells concatenate to a
rate-1 Poisson process, and any time window can be generated without
replaying the stream from zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numba as nb
import numpy as np

from .lattice import Rect

PURPOSES = {
    "clock": 1,
    "event-uniform": 2,
    "init-pi": 3,
    "init-q": 4,
    "cftp-epoch": 5,
    "cftp-uniform": 6,
    "sweep": 7,
    "reject": 8,
}
CLOCK, EVENT_U, INIT_PI, INIT_Q, CFTP_CLOCK, CFTP_U, SWEEP, REJECT = (
    PURPOSES[k] for k in ("clock", "event-uniform", "init-pi", "init-q",
                          "cftp-epoch", "cftp-uniform", "sweep", "reject"))

NEVER = np.iinfo(np.int64).max
ALWAYS = np.iinfo(np.int64).min
ALWAYS_CELL = np.int64(-(2 ** 62))
_GOLD = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_K = np.uint64(0xD1B54A32D192ED03)
_M32 = np.uint64(0xFFFFFFFF)
_S30, _S27, _S31, _S32, _S11 = (np.uint64(s) for s in (30, 27, 31, 32, 11))
_INV53 = 1.0 / 9007199254740992.0
# Poisson(1) CDF; a cell holds at most _NMAX - 1 events (tail mass < 1e-30)
_NMAX = 28
_POIS_CDF = np.cumsum([math.exp(-1.0) / math.factorial(j) for j in range(_NMAX)])
_POIS_CDF[-1] = 2.0


@nb.njit(inline="always", cache=True)
def _mix(z):
    z = (z ^ (z >> _S30)) * _C1
    z = (z ^ (z >> _S27)) * _C2
    return z ^ (z >> _S31)


@nb.njit(inline="always", cache=True)
def key_prefix(seed, purpose, x, y):
    """Hash state after absorbing ``(seed, purpose, x, y)``; shared by all counters of a vertex."""
    h = _mix(np.uint64(seed) + _GOLD)
    h = _mix(h ^ (np.uint64(purpose) * _K + _GOLD))
    return _mix(h ^ ((np.uint64(x) << _S32) ^ (np.uint64(y) & _M32)))


@nb.njit(inline="always", cache=True)
def prefix_hash(h, a, b):
    h = _mix(h ^ (np.uint64(a) * _GOLD + _C1))
    return _mix(h ^ (np.uint64(b) * _C2 + _K))


@nb.njit(cache=True)
def key_hash(seed, purpose, x, y, a, b):
    return prefix_hash(key_prefix(seed, purpose, x, y), a, b)


@nb.njit(inline="always", cache=True)
def _to_unit(h):
    return float(h >> _S11) * _INV53


@nb.njit(inline="always", cache=True)
def _to_unit_open(h):
    return (float(h >> _S11) + 0.5) * _INV53


@nb.njit(inline="always", cache=True)
def key_uniform(seed, purpose, x, y, a, b):
    """Uniform on [0, 1) with 53 random bits."""
    return _to_unit(key_hash(seed, purpose, x, y, a, b))


@nb.njit(inline="always", cache=True)
def key_uniform_open(seed, purpose, x, y, a, b):
    """Uniform on (0, 1); used for inverse-CDF exponentials."""
    return _to_unit_open(key_hash(seed, purpose, x, y, a, b))


@nb.njit(cache=True)
def _prefixes(seeds, xs, ys, purpose):
    out = np.empty(len(xs), dtype=np.uint64)
    for i in range(len(xs)):
        out[i] = key_prefix(seeds[i], purpose, xs[i], ys[i])
    return out


@nb.njit(cache=True)
def _sort_cells(times, site, us, starts, m0):
    """Stable sort by time inside each unit-cell group (groups are already in
    cell order).  Bucket sort on the fractional time, then insertion sort
    inside buckets; linear in the number of events."""
    nmax = 0
    for g in range(len(starts) - 1):
        nmax = max(nmax, starts[g + 1] - starts[g])
    cnt = np.zeros(nmax + 1, dtype=np.int64)
    tt = np.empty(nmax, dtype=np.float64)
    ss = np.empty(nmax, dtype=np.int64)
    uu = np.empty(nmax, dtype=np.float64)
    bk = np.empty(nmax, dtype=np.int64)
    for g in range(len(starts) - 1):
        a, b = starts[g], starts[g + 1]
        n = b - a
        if n < 2:
            continue
        base = float(m0 + g)
        cnt[: n + 1] = 0
        for k in range(n):
            q = int((times[a + k] - base) * n)
            q = min(max(q, 0), n - 1)
            bk[k] = q
            cnt[q + 1] += 1
        for q in range(n):
            cnt[q + 1] += cnt[q]
        for k in range(n):
            q = bk[k]
            d = cnt[q]
            cnt[q] += 1
            tt[d] = times[a + k]
            ss[d] = site[a + k]
            uu[d] = us[a + k]
        # buckets are contiguous and ordered; finish with a stable insertion sort
        for k in range(1, n):
            t, sv, u = tt[k], ss[k], uu[k]
            j = k - 1
            while j >= 0 and tt[j] > t:
                tt[j + 1] = tt[j]
                ss[j + 1] = ss[j]
                uu[j + 1] = uu[j]
                j -= 1
            tt[j + 1] = t
            ss[j + 1] = sv
            uu[j + 1] = u
        times[a:b] = tt[:n]
        site[a:b] = ss[:n]
        us[a:b] = uu[:n]


@nb.njit(cache=True)
def window_events(seeds, alt_seeds, cuts, xs, ys, t0, t1, pclock, pu):
    """All clock events with time in ``(t0, t1]`` for the listed vertices.

    Returns ``(times, site, u)`` sorted by time; ties (equal floats) keep
    the order of the vertex list.
    """
    n = len(xs)
    cap = int(n * (t1 - t0) * 1.25) + 64
    times = np.empty(cap, dtype=np.float64)
    site = np.empty(cap, dtype=np.int64)
    us = np.empty(cap, dtype=np.float64)
    pc0 = _prefixes(seeds, xs, ys, pclock)
    pu0 = _prefixes(seeds, xs, ys, pu)
    pc1 = _prefixes(alt_seeds, xs, ys, pclock)
    pu1 = _prefixes(alt_seeds, xs, ys, pu)
    k = 0
    m0 = int(math.floor(t0))
    m1 = int(math.floor(t1))
    starts = np.empty(m1 - m0 + 2, dtype=np.int64)
    buf = np.empty(_NMAX, dtype=np.float64)
    for m in range(m0, m1 + 1):
        starts[m - m0] = k
        for i in range(n):
            if m >= cuts[i]:
                hc, hu = pc1[i], pu1[i]
            else:
                hc, hu = pc0[i], pu0[i]
            # Poisson(1) count for this unit cell, then iid uniform positions
            c = _to_unit(prefix_hash(hc, m, 0))
            N = 0
            while N < _NMAX - 1 and c >= _POIS_CDF[N]:
                N += 1
            if N == 0:
                continue
            for j in range(N):
                x = m + _to_unit_open(prefix_hash(hc, m, j + 1))
                r = j
                while r > 0 and buf[r - 1] > x:
                    buf[r] = buf[r - 1]
                    r -= 1
                buf[r] = x
            for j in range(N):
                t = buf[j]
                if t <= t0 or t > t1:
                    continue
                if k == cap:
                    cap *= 2
                    nt = np.empty(cap, dtype=np.float64)
                    ns = np.empty(cap, dtype=np.int64)
                    nu = np.empty(cap, dtype=np.float64)
                    nt[:k] = times[:k]
                    ns[:k] = site[:k]
                    nu[:k] = us[:k]
                    times, site, us = nt, ns, nu
                times[k] = t
                site[k] = i
                us[k] = _to_unit(prefix_hash(hu, m, j))
                k += 1
    starts[m1 - m0 + 1] = k
    times, site, us = times[:k], site[:k], us[:k]
    _sort_cells(times, site, us, starts, m0)
    return times, site, us


@nb.njit(inline="always", cache=True)
def site_seed(seeds, alt_seeds, cuts, i, cell):
    return alt_seeds[i] if cell >= cuts[i] else seeds[i]


@nb.njit(cache=True)
def site_uniforms(seeds, alt_seeds, cuts, xs, ys, purpose, a):
    out = np.empty(len(xs), dtype=np.float64)
    for i in range(len(xs)):
        s = site_seed(seeds, alt_seeds, cuts, i, ALWAYS_CELL)
        out[i] = key_uniform(s, purpose, xs[i], ys[i], a, 0)
    return out



class ClockEvent(NamedTuple):
    vertex: tuple
    time: float
    u: float


class EventBatch(NamedTuple):
    """Merged, time-sorted events; ``site`` indexes the coordinate list used."""

    times: np.ndarray
    site: np.ndarray
    u: np.ndarray

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class Patch:
    """Re-key randomness outside ``region`` (all times) and inside it after ``t_cut``.

    Used to test that a quantity depends only on the randomness of
    ``region x [0, t_cut]``.  The unit cell containing ``t_cut`` keeps its
    original values, so strictly more randomness than required is preserved.
    """

    alt_seed: int
    region: tuple[Rect, ...]
    t_cut: float


@dataclass(frozen=True)
class RandomnessSource:
    """Deterministic keyed source of clocks, event uniforms and time-zero uniforms."""

    seed: int
    patch: Patch | None = None

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & 0xFFFFFFFFFFFFFFFF)

    def derive(self, *labels: int) -> "RandomnessSource":
        """Independent sub-source (e.g. per replica)."""
        s = np.uint64(self.seed)
        for lab in labels:
            s = np.uint64(key_hash(s, 99, int(lab), 0, 0, 0))
        return RandomnessSource(int(s), self.patch)

    def seed_arrays(self, coords: np.ndarray):
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, 2)
        n = len(coords)
        seeds = np.full(n, self.seed, dtype=np.uint64)
        if self.patch is None:
            return seeds, seeds, np.full(n, NEVER, dtype=np.int64)
        p = self.patch
        inside = np.zeros(n, dtype=bool)
        for r in p.region:
            inside |= ((coords[:, 0] >= r.x0) & (coords[:, 0] < r.x1)
                       & (coords[:, 1] >= r.y0) & (coords[:, 1] < r.y1))
        cut = int(math.ceil(p.t_cut))
        cuts = np.where(inside, cut, ALWAYS).astype(np.int64)
        alt = np.full(n, int(p.alt_seed) & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64)
        return seeds, alt, cuts

    def events(self, coords: np.ndarray, t0: float, t1: float, past: bool = False) -> EventBatch:
        """Merged events of all ``coords`` in ``(t0, t1]``, sorted by (time, list order).

        ``past=True`` draws from the CFTP stream (used for negative times).
        """
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, 2)
        if t1 <= t0 or len(coords) == 0:
            z = np.zeros(0)
            return EventBatch(z, np.zeros(0, dtype=np.int64), z)
        seeds, alt, cuts = self.seed_arrays(coords)
        pc, pu = (CFTP_CLOCK, CFTP_U) if past else (CLOCK, EVENT_U)
        t, s, u = window_events(seeds, alt, cuts, coords[:, 0].copy(), coords[:, 1].copy(),
                                float(t0), float(t1), pc, pu)
        return EventBatch(t, s, u)

    def uniforms(self, coords: np.ndarray, purpose: str, index: int = 0) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, 2)
        seeds, alt, cuts = self.seed_arrays(coords)
        return site_uniforms(seeds, alt, cuts, coords[:, 0].copy(), coords[:, 1].copy(),
                             PURPOSES[purpose], index)


def clock_events(src: RandomnessSource, v: Sequence[int], window: tuple[float, float]) -> list[ClockEvent]:
    """Events of vertex ``v`` with time in ``(t0, t1]``, in time order."""
    t0, t1 = window
    if t0 < 0 or t1 < t0:
        raise ValueError("window must satisfy 0 <= t0 <= t1")
    b = src.events(np.array([v]), t0, t1)
    vv = (int(v[0]), int(v[1]))
    return [ClockEvent(vv, float(t), float(u)) for t, u in zip(b.times, b.u)]


def init_uniforms(src: RandomnessSource, v: Sequence[int]) -> tuple[float, float]:
    """The pair (u_pi, u_q) attached to vertex ``v`` at time zero."""
    c = np.array([v], dtype=np.int64)
    return float(src.uniforms(c, "init-pi")[0]), float(src.uniforms(c, "init-q")[0])
