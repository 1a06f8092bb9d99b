"""Exact surface tension of the 2D Ising model and Kramers-Wannier duality.

    tau(theta) = eta1 cos(theta) + eta2 sin(theta)
    eta1 = asinh(alpha cos theta),  eta2 = asinh(alpha sin theta)
    alpha = M sqrt(1 - (2/M)^2) (1 + sqrt(sin^2 2t + (2/M)^2 cos^2 2t))^{-1/2}
    M = cosh^2(2 beta) / sinh(2 beta)

At theta = 0 this reduces to tau = asinh(sqrt(M(M-2))) = 2 beta + ln tanh beta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import SubcriticalError

BETA_C = 0.5 * math.asinh(1.0)


@dataclass(frozen=True)
class SurfaceTensionParams:
    beta: float

    def __post_init__(self):
        if not self.beta > BETA_C:
            raise SubcriticalError(f"beta = {self.beta} is not above beta_c = {BETA_C:.7f}")

    @property
    def M(self) -> float:
        s = math.sinh(2 * self.beta)
        return math.cosh(2 * self.beta) ** 2 / s


def _params(p) -> SurfaceTensionParams:
    return p if isinstance(p, SurfaceTensionParams) else SurfaceTensionParams(float(p))


def alpha(params, theta):
    p = _params(params)
    M = p.M
    r2 = (2.0 / M) ** 2
    Q = np.sin(2 * theta) ** 2 + r2 * np.cos(2 * theta) ** 2
    return M * math.sqrt(1 - r2) / np.sqrt(1 + np.sqrt(Q))


def tau(params, theta):
    """Surface tension per unit length at angle ``theta`` (radians, |theta| <= pi/2)."""
    a = alpha(params, theta)
    return np.arcsinh(a * np.cos(theta)) * np.cos(theta) + np.arcsinh(a * np.sin(theta)) * np.sin(theta)


def stiffness(params, theta):
    """tau + tau'' in closed form."""
    a = alpha(params, theta)
    s2, c2 = np.sin(theta) ** 2, np.cos(theta) ** 2
    return a / (s2 * np.sqrt(1 + a * a * c2) + c2 * np.sqrt(1 + a * a * s2))


def tau_second(params, theta):
    return stiffness(params, theta) - tau(params, theta)


def tau_second_fd(params, theta: float, h: float | None = None, con: float = 1.4,
                  ntab: int = 12) -> float:
    """Second derivative of tau by central differences with Ridders extrapolation.

    The initial step is scaled to the curvature width ~1/M near theta = 0;
    the tableau keeps the estimate with the smallest error indicator.
    """
    p = _params(params)
    if h is None:
        h = 0.2 * min(1.0, max(abs(theta), 1.0 / p.M))

    def d2(step):
        return float((tau(p, theta + step) - 2 * tau(p, theta) + tau(p, theta - step)) / step ** 2)

    a = np.zeros((ntab, ntab))
    a[0, 0] = d2(h)
    best, err = a[0, 0], math.inf
    c2 = con * con
    for i in range(1, ntab):
        h /= con
        a[0, i] = d2(h)
        fac = c2
        for j in range(1, i + 1):
            a[j, i] = (a[j - 1, i] * fac - a[j - 1, i - 1]) / (fac - 1)
            fac *= c2
            e = max(abs(a[j, i] - a[j - 1, i]), abs(a[j, i] - a[j - 1, i - 1]))
            if e <= err:
                err, best = e, a[j, i]
        if abs(a[i, i] - a[i - 1, i - 1]) >= 2 * err:
            break
    return float(best)


def tau_vec(params, v) -> float:
    """tau(x) = |x| tau(theta_x), using tau(-x) = tau(x) to fold the angle into (-pi/2, pi/2]."""
    x, y = float(v[0]), float(v[1])
    if x < 0 or (x == 0 and y < 0):
        x, y = -x, -y
    r = math.hypot(x, y)
    if r == 0:
        return 0.0
    return r * float(tau(params, math.atan2(y, x)))


def dual_beta(beta: float, tol: float = 1e-13, max_iter: int = 100) -> float:
    """beta* with sinh(2 beta) sinh(2 beta*) = 1, by Newton iteration on asinh-space."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    target = 1.0 / math.sinh(2 * beta)
    # solve g(x) = sinh(2x) - target = 0; start from the log-domain guess
    x = 0.5 * math.log(2 * target + 1.0) if target < 1e300 else 0.5 * math.log(2 * target)
    x = max(x, 1e-300)
    for _ in range(max_iter):
        g = math.sinh(2 * x) - target
        dx = g / (2 * math.cosh(2 * x))
        x_new = x - dx
        if x_new <= 0:
            x_new = x / 2
        if abs(x_new - x) <= tol * max(1.0, x):
            x = x_new
            break
        x = x_new
    return x


class DefectResult(NamedTuple):
    ratio: float
    collinear: bool


def sharp_triangle_defect(params, x, y, eps: float = 1e-12) -> DefectResult:
    """[tau(x) + tau(y) - tau(x+y)] / [|x| + |y| - |x+y|]; collinear pairs are flagged."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = x + y
    nx, ny, ns = np.linalg.norm(x), np.linalg.norm(y), np.linalg.norm(s)
    if nx == 0 or ny == 0 or ns == 0:
        raise ValueError("x, y and x+y must be nonzero")
    den = nx + ny - ns
    if den <= eps * (nx + ny):
        return DefectResult(math.inf, True)
    num = tau_vec(params, x) + tau_vec(params, y) - tau_vec(params, s)
    return DefectResult(num / den, False)


def spontaneous_magnetization(beta: float) -> float:
    """(1 - sinh(2 beta)^-4)^(1/8) above beta_c, else 0."""
    if beta <= BETA_C:
        return 0.0
    return (1 - math.sinh(2 * beta) ** -4) ** 0.125


def angle_table(beta: float, thetas) -> list[dict]:
    p = SurfaceTensionParams(beta)
    rows = []
    for th in thetas:
        rows.append({"beta": beta, "theta": float(th), "tau": float(tau(p, th)),
                     "tau2": float(tau_second(p, th)), "stiffness": float(stiffness(p, th)),
                     "alpha": float(alpha(p, th))})
    return rows
