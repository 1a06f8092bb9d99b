"""Detection of (L, T)-propagating chains of clock rings.

A chain is a subsequence ``(v_1, t_1), ..., (v_N, t_N)`` of the time-sorted
event list with ``v_i ~ v_{i+1}`` adjacent sites of the region.  The longest
chain ending at an event is one more than the longest chain ending at an
earlier event of a neighbouring vertex, so one pass in time order suffices.
"""
from __future__ import annotations

import numba as nb
import numpy as np

from ..errors import PreconditionViolation
from ..lattice import Domain, Rect, rect_domain
from ..randomness import RandomnessSource


@nb.njit(cache=True)
def longest_chain(ev_local, nbr, n_sites):
    """Longest chain over events given as local site indices (``-1`` = outside).

    ``nbr`` rows may point at ghost indices ``>= n_sites``, which never hold
    events.  Returns the length and, for a witness, the per-event best value
    and predecessor event.
    """
    best_at = np.zeros(n_sites, dtype=np.int64)
    last_at = -np.ones(n_sites, dtype=np.int64)
    val = np.zeros(len(ev_local), dtype=np.int64)
    pred = -np.ones(len(ev_local), dtype=np.int64)
    top = 0
    for k in range(len(ev_local)):
        i = ev_local[k]
        if i < 0:
            continue
        b = 0
        p = -1
        for d in range(4):
            w = nbr[i, d]
            if w < n_sites and best_at[w] > b:
                b = best_at[w]
                p = last_at[w]
        val[k] = b + 1
        pred[k] = p
        if b + 1 > best_at[i]:
            best_at[i] = b + 1
            last_at[i] = k
        if b + 1 > top:
            top = b + 1
    return top, val, pred


def detect_propagating_chain(events, region, L: int, T: float):
    """Longest time-ordered chain of adjacent clock rings inside ``region`` up to ``T``.

    ``events`` is a sequence of ``ClockEvent``-like ``(vertex, time, ...)``
    records sorted by time; ``region`` a set of ``(x, y)`` tuples, a
    :class:`Rect` or a :class:`Domain`.  Returns ``(max_len, witness, found)``
    where ``witness`` is a longest chain as ``[(vertex, time), ...]`` (None
    when empty) and ``found`` reports ``max_len >= L``.
    """
    times = np.array([e[1] for e in events], dtype=np.float64)
    if len(times) > 1 and np.any(np.diff(times) < 0):
        raise PreconditionViolation("events must be sorted by time")
    if isinstance(region, Domain):
        dom = region
    elif isinstance(region, Rect):
        dom = rect_domain(region)
    else:
        pts = np.array(sorted(set(map(tuple, region))), dtype=np.int64).reshape(-1, 2)
        if len(pts) == 0:
            return 0, None, L <= 0
        x0, y0 = pts.min(axis=0)
        x1, y1 = pts.max(axis=0) + 1
        mask = np.zeros((y1 - y0, x1 - x0), dtype=bool)
        mask[pts[:, 1] - y0, pts[:, 0] - x0] = True
        dom = Domain("region", int(x1 - x0), int(y1 - y0), (int(x0), int(y0)), mask)
    if not events:
        return 0, None, L <= 0
    xy = np.array([e[0] for e in events], dtype=np.int64).reshape(-1, 2)
    loc = dom.indices(xy)
    loc[(times > T) | (times < 0)] = -1
    top, val, pred = longest_chain(loc, dom.nbr, dom.n_sites)
    if top == 0:
        return 0, None, L <= 0
    k = int(np.argmax(val))
    path = []
    while k >= 0:
        path.append(((int(xy[k, 0]), int(xy[k, 1])), float(times[k])))
        k = int(pred[k])
    return int(top), path[::-1], top >= L


def brute_force_chain(events, region) -> int:
    """Exhaustive longest chain over all subsequences (oracle for small inputs)."""
    region = set(map(tuple, region))
    ev = [(tuple(e[0]), e[1]) for e in events if tuple(e[0]) in region]
    n = len(ev)
    best = 0
    for mask in range(1, 1 << n):
        idx = [i for i in range(n) if mask >> i & 1]
        ok = all(abs(ev[a][0][0] - ev[b][0][0]) + abs(ev[a][0][1] - ev[b][0][1]) == 1
                 and ev[a][1] <= ev[b][1] for a, b in zip(idx, idx[1:]))
        if ok:
            best = max(best, len(idx))
    return best


def max_chain_in(src: RandomnessSource, region: Rect, T: float) -> int:
    """Longest chain among the clock rings of ``region x (0, T]``."""
    dom = rect_domain(region)
    ev = src.events(dom.key_coords, 0.0, float(T))
    top, _, _ = longest_chain(ev.site, dom.nbr, dom.n_sites)
    return int(top)
