"""Covering a small set of bad blocks by well-separated squares.

Start from one square per block; while two squares are closer than
``10 * ell_prev`` replace them by a smallest square covering both.  Each
merge reduces the count, and the total side length grows by at most the
gap, which keeps every side below ``100 * s_k * ell_prev``.
"""
from __future__ import annotations

from ..errors import CapacityExceeded
from ..lattice import Rect


def covering_square(a: Rect, b: Rect, container: Rect | None = None, unit: int = 1) -> Rect:
    """Smallest square containing ``a`` and ``b``.

    The hull is widened along its short axis, half on each side in steps of
    ``unit`` (so block-aligned input stays aligned), then shifted to sit
    inside ``container`` when that is possible.
    """
    h = a.hull(b)
    side = max(h.w, h.h)
    x0, y0 = h.x0, h.y0
    for axis in (0, 1):
        extra = side - (h.w if axis == 0 else h.h)
        lo = (extra // unit // 2) * unit
        if axis == 0:
            x0 -= lo
        else:
            y0 -= lo
    sq = Rect(x0, y0, side, side)
    if container is not None:
        sq = _shift_inside(sq, container, unit)
    return sq


def _shift_inside(sq: Rect, c: Rect, unit: int) -> Rect:
    """Move ``sq`` by whole units so it fits in ``c`` where possible."""
    def step(lo, hi, clo, chi):
        if lo < clo:
            return -((lo - clo) // unit) * unit
        if hi > chi:
            return -(-(hi - chi) // unit) * unit * -1
        return 0
    dx = step(sq.x0, sq.x1, c.x0, c.x1)
    dy = step(sq.y0, sq.y1, c.y0, c.y1)
    moved = Rect(sq.x0 + dx, sq.y0 + dy, sq.w, sq.h)
    return moved if c.contains_rect(moved) else sq


def cover_bad_blocks(D, ell_prev: int, s_k: float, container: Rect | None = None) -> list[Rect]:
    """Squares ``R_1..R_K`` covering the blocks ``D`` with pairwise distance >= 10 ell_prev."""
    D = list(D)
    if len(D) > s_k:
        raise CapacityExceeded(f"|D| = {len(D)} exceeds s_k = {s_k:.3f}")
    squares = []
    for b in D:
        side = max(b.w, b.h)
        squares.append(Rect(b.x0, b.y0, side, side))
    gap = 10 * ell_prev
    merged = True
    while merged:
        merged = False
        for i in range(len(squares)):
            for j in range(i + 1, len(squares)):
                if squares[i].distance(squares[j]) < gap:
                    new = covering_square(squares[i], squares[j], container, ell_prev)
                    squares = [s for k, s in enumerate(squares) if k not in (i, j)] + [new]
                    merged = True
                    break
            if merged:
                break
    # a merged square may swallow another one; drop squares contained in others
    out = []
    for i, s in enumerate(squares):
        if not any(j != i and t.contains_rect(s) and (t != s or j < i) for j, t in enumerate(squares)):
            out.append(s)
    return out


def cover_violations(D, R, ell_prev: int, s_k: float) -> list[str]:
    """Postcondition failures of a cover (empty list when it is valid)."""
    bad = []
    for b in D:
        if not any(r.contains_rect(b) for r in R):
            bad.append(f"block {b} not covered")
    if len(R) > s_k:
        bad.append(f"K = {len(R)} > s_k")
    for i in range(len(R)):
        if not ell_prev <= R[i].w <= 100 * s_k * ell_prev or R[i].w != R[i].h:
            bad.append(f"square {R[i]} side out of range")
        for j in range(i + 1, len(R)):
            if R[i].distance(R[j]) < 10 * ell_prev:
                bad.append(f"squares {R[i]} and {R[j]} closer than 10 ell_prev")
    return bad
