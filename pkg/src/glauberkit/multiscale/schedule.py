"""Scale sequences ell_k, t_k, T_k, q_k, s_k.

Exact mode follows log ell_k = (log ell_{k-1})^M and is arithmetic only:
values are held as logarithms because ell_1 already overflows a double for
modest inputs.  Practical mode uses ell_k = ceil(ell_{k-1}^gamma) with
plain integers and is what simulations run on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from ..errors import RangeError


@dataclass(frozen=True)
class ScaleValues:
    """One level of a schedule.  In exact mode the ``log_*`` fields are authoritative
    and the plain fields are ``inf``/``0.0`` when they overflow."""

    k: int
    ell: float
    t: float
    T: float
    q: float
    s: float
    log_ell: float
    log_t: float
    log_T: float
    log_q: float


def _logsumexp(xs) -> float:
    xs = [x for x in xs if x != -math.inf]
    if not xs:
        return -math.inf
    m = max(xs)
    return m + math.log(sum(math.exp(x - m) for x in xs))


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class ScaleSchedule:
    """``ell0`` is the base length (practical) or ``exp(log_ell0)`` (exact).

    Time steps use t_0 = 0 and t_k = ell_k / M for k >= 1, so T_0 = 0.
    """

    ell0: int = 8
    M: float = 2.0
    mode: str = "practical"
    gamma: float = 1.5
    log_ell0: float | None = None

    def __post_init__(self):
        if self.mode not in ("exact", "practical"):
            raise ValueError("mode must be 'exact' or 'practical'")
        if self.M < 2:
            raise ValueError("M must be at least 2")
        if self.mode == "practical":
            if int(self.ell0) < 2:
                raise ValueError("ell0 must be an integer >= 2")
            if not self.gamma > 1:
                raise ValueError("gamma must exceed 1")
        else:
            le = self.log_ell0 if self.log_ell0 is not None else math.log(self.ell0)
            if not le > 1:
                raise ValueError("exact mode needs log ell0 > 1 for growth")

    def _le0(self) -> float:
        return float(self.log_ell0 if self.log_ell0 is not None else math.log(self.ell0))

    # -- lengths -------------------------------------------------------
    def log_ell(self, k: int) -> float:
        if k < 0:
            raise ValueError("level must be nonnegative")
        if self.mode == "practical":
            return math.log(self.ell(k))
        le = self._le0()
        try:
            v = le ** (float(self.M) ** k)
        except OverflowError:
            v = math.inf
        if not math.isfinite(v):
            raise RangeError(f"log ell_{k} overflows", self.largest_level())
        return v

    def ell(self, k: int) -> int | float:
        if k < 0:
            raise ValueError("level must be nonnegative")
        if self.mode == "practical":
            return _practical_ell(int(self.ell0), float(self.gamma), k)
        return _safe_exp(self.log_ell(k))

    def largest_level(self) -> int:
        """Largest k whose full tuple (which needs ell_{k+3}) is representable."""
        if self.mode == "practical":
            return 10 ** 9
        le = self._le0()
        k = 0
        while True:
            try:
                v = le ** (float(self.M) ** (k + 4))
            except OverflowError:
                return k
            if not math.isfinite(v):
                return k
            k += 1

    # -- derived sequences ---------------------------------------------
    def log_t(self, k: int) -> float:
        return -math.inf if k == 0 else self.log_ell(k) - math.log(self.M)

    def t(self, k: int) -> float:
        if k == 0:
            return 0.0
        if self.mode == "practical":
            return self.ell(k) / self.M
        return _safe_exp(self.log_t(k))

    def log_T(self, k: int) -> float:
        return _logsumexp([self.log_t(i) for i in range(k + 1)])

    def T(self, k: int) -> float:
        if self.mode == "practical":
            return float(sum(self.t(i) for i in range(k + 1)))
        return _safe_exp(self.log_T(k))

    def log_q(self, k: int) -> float:
        return -self.log_ell(k + 3)

    def q(self, k: int) -> float:
        return _safe_exp(self.log_q(k))

    def s(self, k: int) -> float:
        return self.log_ell(k + 3)

    def values(self, k: int) -> ScaleValues:
        if self.mode == "exact" and k > self.largest_level():
            raise RangeError(f"level {k} is beyond the representable range", self.largest_level())
        return ScaleValues(k, self.ell(k), self.t(k), self.T(k), self.q(k), self.s(k),
                           self.log_ell(k), self.log_t(k), self.log_T(k), self.log_q(k))

    def enlargement_radius(self, k: int, j: float) -> int:
        """floor(ell_k * j / 10), the growth of E_{+j} at level k."""
        return int(math.floor(self.ell(k) * j / 10 + 1e-9))

    def chain_length(self, k: int) -> int:
        """Length L of the forbidden (L, T_k) chain: floor(ell_k / 10), at least 1."""
        return max(1, int(math.floor(self.ell(k) / 10 + 1e-9)))


@lru_cache(maxsize=None)
def _practical_ell(ell0: int, gamma: float, k: int) -> int:
    v = ell0
    for _ in range(k):
        v = max(int(math.ceil(math.exp(gamma * math.log(v)) - 1e-9)), v + 1)
    return v


def schedule_values(ell0=None, M: float = 2.0, k: int = 0, mode: str = "exact",
                    gamma: float = 1.5, log_ell0: float | None = None) -> ScaleValues:
    """(ell_k, t_k, T_k, q_k, s_k) with their logarithms.

    Exact mode takes ``log_ell0`` (or ``ell0``) and returns exact log-domain
    values; practical mode takes an integer ``ell0``.
    """
    if mode == "exact":
        sched = ScaleSchedule(ell0 or 3, M, "exact", gamma,
                              log_ell0 if log_ell0 is not None else math.log(ell0))
    else:
        sched = ScaleSchedule(int(ell0), M, "practical", gamma)
    return sched.values(k)
