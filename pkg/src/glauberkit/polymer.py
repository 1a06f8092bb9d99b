"""Tame interface polymer: i.i.d. integer increments with weights exp(-2b|k| + bHk).

The increment is the difference of independent Geom(1-a) and Geom(1-b)
variables with a = exp(-beta(2-H)), b = exp(-beta(2+H)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergentTilt, OutOfRange, TooLarge

TAIL_MASS = 1e-14
MAX_SUPPORT = 50_000_000
FLUSH = 1e-300


@dataclass(frozen=True)
class PolymerParams:
    beta: float
    H: float = 0.0
    N: int = 1

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not abs(self.H) < 2:
            raise DivergentTilt(f"|H| = {abs(self.H)} must be below 2")
        if int(self.N) < 1:
            raise ValueError("N must be a positive integer")

    @property
    def a(self) -> float:
        return math.exp(-self.beta * (2 - self.H))

    @property
    def b(self) -> float:
        return math.exp(-self.beta * (2 + self.H))

    @property
    def Z(self) -> float:
        a, b = self.a, self.b
        return 1 + a / (1 - a) + b / (1 - b)


def increment_pmf(params: PolymerParams, k: int) -> float:
    k = int(k)
    w = params.a ** k if k >= 0 else params.b ** (-k)
    return w / params.Z


def moments(params: PolymerParams) -> tuple[float, float]:
    """(M_H, D_H): mean and variance of one increment."""
    a, b = params.a, params.b
    return a / (1 - a) - b / (1 - b), a / (1 - a) ** 2 + b / (1 - b) ** 2


def series_moments(params: PolymerParams, K: int | None = None) -> tuple[float, float]:
    """Mean and variance by direct summation over a truncated support (oracle).

    The default cut leaves geometric tails below 1e-22, small enough that
    the neglected k^2-weighted mass stays far under 1e-10.
    """
    lo, hi = support(params, 1e-22) if K is None else (-K, K)
    ks = np.arange(lo, hi + 1)
    pm = increment_array(params, lo, hi)
    m = float((ks * pm).sum())
    return m, float(((ks - m) ** 2 * pm).sum())


def support(params: PolymerParams, tail: float = TAIL_MASS) -> tuple[int, int]:
    """Smallest [-K_minus, K_plus] with each geometric tail below ``tail``."""
    def cut(r):
        # P(X >= K) for the one-sided part ~ r^K / (1 - r) / Z
        K = 1
        while r ** K / (1 - r) / params.Z >= tail:
            K += 1
        return K
    return -cut(params.b), cut(params.a)


def increment_array(params: PolymerParams, lo: int, hi: int) -> np.ndarray:
    ks = np.arange(lo, hi + 1, dtype=np.float64)
    la, lb = math.log(params.a), math.log(params.b)
    w = np.exp(np.where(ks >= 0, ks * la, -ks * lb))
    return w / params.Z


def _convolve(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    out = np.convolve(p, q)
    out[out < FLUSH] = 0.0
    return out


def exact_walk_pmf(params: PolymerParams, tail: float = TAIL_MASS) -> tuple[int, np.ndarray]:
    """Law of S_N = X_1 + ... + X_N on its truncated support.

    Returns ``(offset, pmf)`` with ``pmf[j] = P(S_N = offset + j)``; computed by
    binary powering of direct convolutions.
    """
    lo, hi = support(params, tail)
    N = int(params.N)
    if N * (hi - lo) + 1 > MAX_SUPPORT:
        raise TooLarge(f"support of size {N * (hi - lo) + 1} exceeds the limit")
    base = increment_array(params, lo, hi)
    res, res_off = np.array([1.0]), 0
    pw, pw_off = base, lo
    n = N
    while n:
        if n & 1:
            res, res_off = _convolve(res, pw), res_off + pw_off
        n >>= 1
        if n:
            pw, pw_off = _convolve(pw, pw), 2 * pw_off
    return res_off, res


def lclt_bounds_check(params: PolymerParams) -> dict:
    """Log-concave local CLT bracket for S_N.

    ``e^{-1} / sqrt(1 + 12 N D) <= P(S_N = floor or ceil of N M)`` and
    ``max_y P(S_N = y) <= 2 / sqrt(1 + 4 N D)``, plus log-concavity.
    """
    M, D = moments(params)
    N = int(params.N)
    off, pmf = exact_walk_pmf(params)
    var = N * D
    lower = math.exp(-1) / math.sqrt(1 + 12 * var)
    upper = 2 / math.sqrt(1 + 4 * var)
    mean = N * M
    near = [int(math.floor(mean)), int(math.ceil(mean))]
    mode_near = max(pmf[j - off] if 0 <= j - off < len(pmf) else 0.0 for j in near)
    mx = float(pmf.max())
    nz = pmf > 0
    inner = np.nonzero(nz)[0]
    lc_ok = True
    if len(inner) > 2:
        i0, i1 = inner[0], inner[-1]
        seg = pmf[i0:i1 + 1]
        # relative slack for rounding in the far tails
        lc_ok = bool(np.all(seg[1:-1] ** 2 >= seg[:-2] * seg[2:] * (1 - 1e-9)))
    return {"beta": params.beta, "H": params.H, "N": N, "M": M, "D": D,
            "mode_mass": float(mx), "mass_at_mean": float(mode_near),
            "lower": lower, "upper": upper, "total_mass": float(pmf.sum()),
            "mean_error": abs(float((np.arange(len(pmf)) + off) @ pmf) - mean),
            "log_concave": lc_ok,
            "ok": bool(lower <= mode_near and mx <= upper and lc_ok)}


def solve_tilt_for_slope(beta: float, slope: float, tol: float = 1e-12) -> float:
    """H with M_H = slope, by bisection on |H| <= 2 - 1/(10 beta)."""
    Hmax = 2 - 1 / (10 * beta)
    if Hmax <= 0:
        raise OutOfRange("no admissible tilt range at this beta")
    f = lambda H: moments(PolymerParams(beta, H))[0] - slope
    lo, hi = -Hmax, Hmax
    if not f(lo) <= 0 <= f(hi):
        raise OutOfRange(f"slope {slope} not reachable with |H| <= {Hmax:.4f}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def sample_walk(params: PolymerParams, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` draws of S_N, each increment a difference of two geometrics."""
    N = int(params.N)
    g1 = rng.geometric(1 - params.a, size=(size, N)) - 1
    g2 = rng.geometric(1 - params.b, size=(size, N)) - 1
    return (g1 - g2).sum(axis=1)


def var_equivalence(params: PolymerParams) -> tuple[float, float, float]:
    """(D_H, lower, upper) for 1/2 (e^{-2b} + |M|) <= D <= 4/c0 (e^{-2b} + |M|), c0 = 1 - e^{-1/10}.

    The bound is stated for H >= 0; D is even in H and M odd, hence |M|.
    """
    M, D = moments(params)
    base = math.exp(-2 * params.beta) + abs(M)
    return D, 0.5 * base, 4 / (1 - math.exp(-0.1)) * base
