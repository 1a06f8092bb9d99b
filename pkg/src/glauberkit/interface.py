"""Interfaces of Dobrushin-type configurations and dual two-point functions.

Dual vertices ``(x + 1/2, y + 1/2)`` are stored doubled as odd integer
pairs ``(2x + 1, 2y + 1)``.  A dual edge separates two primal cells (site
or ghost, at least one a site) of opposite sign.  Edges between two ghosts
are not part of the contour, which is why a boundary sign change produces
an odd-degree dual vertex.

Splitting rule at degree-4 vertices: the south arm continues east and the
north arm continues west, which separates the south-east and north-west
cells.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from .dynamics import threshold_table
from .errors import DegenerateConfiguration, InsufficientSamples, NotSubcritical
from .lattice import BoundaryCondition, SpinConfig
from .randomness import SWEEP, key_prefix, prefix_hash, _to_unit
from .stats import batch_means, wilson_interval
from .surface_tension import BETA_C

# arm directions from a dual vertex, as doubled offsets
ARMS = {"E": (2, 0), "N": (0, 2), "W": (-2, 0), "S": (0, -2)}
OPPOSITE = {"E": "W", "W": "E", "N": "S", "S": "N"}
PAIR = {"S": "E", "E": "S", "N": "W", "W": "N"}


@dataclass
class InterfaceContour:
    edges: list            # ordered dual edges ((x2, y2), (x2', y2'))
    endpoints: tuple       # doubled coordinates of the two odd vertices
    profile: dict          # primal column x -> max height (half-integer)
    closed_edges: int = 0  # edges on closed contours, not part of the interface

    @property
    def length(self) -> int:
        return len(self.edges)

    @property
    def max_height(self) -> float:
        return max(self.profile.values()) if self.profile else 0.0

    @property
    def vertices(self) -> list:
        return [self.edges[0][0]] + [e[1] for e in self.edges] if self.edges else []


def _cells(cfg: SpinConfig, bc: BoundaryCondition | None) -> tuple[np.ndarray, int, int]:
    """Padded grid over the bounding box plus one ring: +1/-1, 0 = no cell."""
    d = cfg.domain
    if d.periodic:
        raise DegenerateConfiguration("tori carry no open interface", cfg)
    x0, y0 = d.origin
    g = np.zeros((d.height + 2, d.width + 2), dtype=np.int8)
    g[d.local_xy[:, 1] + 1, d.local_xy[:, 0] + 1] = cfg.spins
    if bc is not None and d.n_ghosts:
        gl = d.ghosts - np.array([x0 - 1, y0 - 1])
        g[gl[:, 1], gl[:, 0]] = bc.spins
    site = np.zeros_like(g, dtype=bool)
    site[d.local_xy[:, 1] + 1, d.local_xy[:, 0] + 1] = True
    return g, site, (x0 - 1, y0 - 1)


def _dual_edges(g: np.ndarray, site: np.ndarray, off) -> tuple[set, set]:
    """Real contour edges and virtual (ghost-ghost) sign changes, in doubled coordinates."""
    ox, oy = off
    real, virtual = set(), set()
    H, W = g.shape
    # horizontal primal pairs (x, y)-(x+1, y): vertical dual edge at x + 1/2
    a, b = g[:, :-1], g[:, 1:]
    diff = (a * b) < 0
    ys, xs = np.nonzero(diff)
    for y, x in zip(ys.tolist(), xs.tolist()):
        gx, gy = x + ox, y + oy
        e = ((2 * gx + 1, 2 * gy - 1), (2 * gx + 1, 2 * gy + 1))
        (real if (site[y, x] or site[y, x + 1]) else virtual).add(e)
    a, b = g[:-1, :], g[1:, :]
    diff = (a * b) < 0
    ys, xs = np.nonzero(diff)
    for y, x in zip(ys.tolist(), xs.tolist()):
        gx, gy = x + ox, y + oy
        e = ((2 * gx - 1, 2 * gy + 1), (2 * gx + 1, 2 * gy + 1))
        (real if (site[y, x] or site[y + 1, x]) else virtual).add(e)
    return real, virtual


def _arm(v, w) -> str:
    dx, dy = w[0] - v[0], w[1] - v[1]
    return {(2, 0): "E", (0, 2): "N", (-2, 0): "W", (0, -2): "S"}[(dx, dy)]


def _step(v, arm):
    dx, dy = ARMS[arm]
    return (v[0] + dx, v[1] + dy)


def _key(v, w):
    return (v, w) if v <= w else (w, v)


def extract_interface(cfg: SpinConfig, bc: BoundaryCondition | None) -> InterfaceContour:
    """The open contour joining the two odd-degree dual vertices.

    Traversal starts at the leftmost (then lowest) odd vertex.  Degree-4
    vertices pair S with E and N with W; at odd boundary vertices the
    ghost-ghost sign change acts as a virtual arm for the same pairing.
    """
    g, site, off = _cells(cfg, bc)
    real, virtual = _dual_edges(g, site, off)
    arms: dict = {}
    varms: dict = {}
    for (v, w) in real:
        arms.setdefault(v, set()).add(_arm(v, w))
        arms.setdefault(w, set()).add(_arm(w, v))
    for (v, w) in virtual:
        varms.setdefault(v, set()).add(_arm(v, w))
        varms.setdefault(w, set()).add(_arm(w, v))
    odd = sorted((v for v, a in arms.items() if len(a) % 2 == 1), key=lambda p: (p[0], p[1]))
    if len(odd) != 2:
        raise DegenerateConfiguration(f"expected 2 odd-degree dual vertices, found {len(odd)}", cfg)
    start, goal = odd

    def next_arm(v, came):
        real_a = arms.get(v, set())
        if came is None:
            opts = sorted(real_a)
            if len(opts) == 1:
                return opts[0]
            # odd vertex of degree 3: the arm paired with the virtual one starts
            for va in varms.get(v, ()):
                p = PAIR[va]
                if p in real_a:
                    return p
            return opts[0]
        rest = real_a - {came}
        if len(rest) == 1:
            return next(iter(rest))
        if not rest:
            return None
        p = PAIR[came]
        if p in rest:
            return p
        return None

    used = set()
    edges = []
    v, came = start, None
    while True:
        a = next_arm(v, came)
        if a is None:
            break
        w = _step(v, a)
        k = _key(v, w)
        if k in used or k not in real:
            break
        used.add(k)
        edges.append((v, w))
        if w == goal:
            v = w
            break
        v, came = w, OPPOSITE[a]
    if v != goal:
        raise DegenerateConfiguration("traversal did not reach the second endpoint", cfg)
    profile: dict = {}
    for (p, q) in edges:
        if p[1] == q[1]:
            x = (min(p[0], q[0]) + 1) // 2
            h = p[1] / 2.0
            if h > profile.get(x, -math.inf):
                profile[x] = h
    return InterfaceContour(edges, (start, goal), profile, len(real) - len(edges))


def height_above(contour: InterfaceContour, y0: int) -> float:
    """Max height in rows above the dual line below row ``y0``; a contour on it has height 0."""
    return contour.max_height - (y0 - 0.5)


def max_height_statistics(heights, hs=None, z: float = 1.96) -> list[dict]:
    """Empirical P(max height >= h) with Wilson intervals."""
    heights = np.asarray(heights, dtype=float)
    if len(heights) < 100:
        raise InsufficientSamples(f"need at least 100 samples, got {len(heights)}")
    if hs is None:
        hs = np.arange(0, math.ceil(heights.max()) + 2)
    rows = []
    n = len(heights)
    for h in hs:
        k = int((heights >= h).sum())
        lo, hi = wilson_interval(k, n, z)
        rows.append({"h": float(h), "tail": k / n, "lo": lo, "hi": hi, "n": n})
    return rows


# -- discrete-time heat-bath sweeps ------------------------------------------------

@nb.njit(cache=True)
def sweep_kernel(state, nbr, n_sites, prefixes, thr, first, count):
    """``count`` systematic-scan heat-bath sweeps; site ``i`` in sweep ``s`` reads
    the keyed uniform ``prefix_hash(prefixes[i], s, 0)``."""
    for s in range(first, first + count):
        for i in range(n_sites):
            u = _to_unit(prefix_hash(prefixes[i], s, 0))
            S = state[nbr[i, 0]] + state[nbr[i, 1]] + state[nbr[i, 2]] + state[nbr[i, 3]]
            state[i] = 1 if u <= thr[S + 4] else -1


@nb.njit(cache=True)
def sweep_prefixes(seed, xs, ys):
    out = np.empty(len(xs), dtype=np.uint64)
    for i in range(len(xs)):
        out[i] = key_prefix(seed, SWEEP, xs[i], ys[i])
    return out


@nb.njit(cache=True)
def torus_correlations(state, W, H, rmax, out):
    """Accumulate the translation average of s(x)s(x + r e) over both axes, r = 0..rmax."""
    for r in range(rmax + 1):
        acc = 0.0
        for y in range(H):
            for x in range(W):
                s = state[y * W + x]
                acc += s * state[y * W + (x + r) % W] + s * state[((y + r) % H) * W + x]
        out[r] = acc / (2.0 * W * H)


@nb.njit(cache=True)
def two_point_run(state, nbr, n_sites, prefixes, thr, burn, n_samples, thin, W, H, rmax):
    sweep_kernel(state, nbr, n_sites, prefixes, thr, 0, burn)
    res = np.empty((n_samples, rmax + 1))
    buf = np.empty(rmax + 1)
    s = burn
    for j in range(n_samples):
        sweep_kernel(state, nbr, n_sites, prefixes, thr, s, thin)
        s += thin
        torus_correlations(state, W, H, rmax, buf)
        res[j] = buf
    return res


def correlation_profile(beta_star: float, n: int, rmax: int, samples: int, seed: int,
                        burn: int = 2000, thin: int = 1) -> np.ndarray:
    """Per-sample translation-averaged <s_0 s_r> on an ``n`` torus (rows = samples)."""
    from .lattice import torus
    if not beta_star < BETA_C:
        raise NotSubcritical(f"beta* = {beta_star} is not below beta_c")
    d = torus(n)
    kc = d.key_coords
    pref = sweep_prefixes(np.uint64(seed & 0xFFFFFFFFFFFFFFFF), kc[:, 0].copy(), kc[:, 1].copy())
    state = np.ones(d.n_sites, dtype=np.int8)
    thr = threshold_table(beta_star, 0.0) if beta_star > 0 else np.full(9, 0.5)
    return two_point_run(state, d.nbr, d.n_sites, pref, thr, burn, samples, thin, n, n, rmax)


def two_point_mc(beta_star: float, n: int, x, y, samples: int, seed: int = 0,
                 burn: int = 2000, n_batches: int = 20) -> tuple[float, float, float]:
    """<s_x s_y> on the ``n`` torus at ``beta_star`` with a batch-means interval.

    Points are given as integer pairs on the torus; the estimate averages
    over all translations of the displacement ``y - x``.
    """
    if not beta_star < BETA_C:
        raise NotSubcritical(f"beta* = {beta_star} is not below beta_c")
    dx, dy = (int(y[0]) - int(x[0])) % n, (int(y[1]) - int(x[1])) % n
    if dx == 0 and dy == 0:
        return 1.0, 1.0, 1.0
    from .lattice import torus
    d = torus(n)
    kc = d.key_coords
    pref = sweep_prefixes(np.uint64(seed & 0xFFFFFFFFFFFFFFFF), kc[:, 0].copy(), kc[:, 1].copy())
    state = np.ones(d.n_sites, dtype=np.int8)
    thr = threshold_table(beta_star, 0.0) if beta_star > 0 else np.full(9, 0.5)
    vals = _displacement_run(state, d.nbr, d.n_sites, pref, thr, burn, samples, n, dx, dy)
    return batch_means(vals, n_batches)


@nb.njit(cache=True)
def _displacement_run(state, nbr, n_sites, prefixes, thr, burn, n_samples, n, dx, dy):
    sweep_kernel(state, nbr, n_sites, prefixes, thr, 0, burn)
    out = np.empty(n_samples)
    for j in range(n_samples):
        sweep_kernel(state, nbr, n_sites, prefixes, thr, burn + j, 1)
        acc = 0.0
        for yy in range(n):
            for xx in range(n):
                acc += state[yy * n + xx] * state[((yy + dy) % n) * n + (xx + dx) % n]
        out[j] = acc / (n * n)
    return out


def fit_oz_rate(r, c, L: int, sigma=None) -> tuple[float, float]:
    """Fit ``A [x^{-1/2} e^{-tau x} + (L - x)^{-1/2} e^{-tau (L - x)}]``; returns (tau, A)."""
    from scipy.optimize import curve_fit
    r = np.asarray(r, dtype=float)
    c = np.asarray(c, dtype=float)

    def model(x, logA, t):
        return np.exp(logA) * (x ** -0.5 * np.exp(-t * x) + (L - x) ** -0.5 * np.exp(-t * (L - x)))

    slope = -np.polyfit(r, np.log(np.maximum(c, 1e-12)), 1)[0]
    p0 = (math.log(max(c[0], 1e-12)) + slope * r[0] + 0.5 * math.log(r[0]), max(slope, 1e-3))
    popt, _ = curve_fit(model, r, c, p0=p0, sigma=sigma, absolute_sigma=sigma is not None,
                        maxfev=20000)
    return float(popt[1]), float(math.exp(popt[0]))


# -- equilibrium interface ensembles ---------------------------------------------

@nb.njit(cache=True)
def _interface_chain(state, nbr, n_sites, prefixes, thr, first, burn, n_samples, thin):
    sweep_kernel(state, nbr, n_sites, prefixes, thr, first, burn)
    out = np.empty((n_samples, n_sites), dtype=np.int8)
    s = first + burn
    for j in range(n_samples):
        sweep_kernel(state, nbr, n_sites, prefixes, thr, s, thin)
        s += thin
        out[j] = state[:n_sites]
    return out


@nb.njit(cache=True)
def _coalesce_sweeps(top, bot, nbr, n_sites, prefixes, thr, first, max_sweeps):
    """Run extremal chains under shared sweeps until they agree; returns sweeps used or -1."""
    for s in range(first, first + max_sweeps):
        sweep_kernel(top, nbr, n_sites, prefixes, thr, s, 1)
        sweep_kernel(bot, nbr, n_sites, prefixes, thr, s, 1)
        same = True
        for i in range(n_sites):
            if top[i] != bot[i]:
                same = False
                break
        if same:
            return s - first + 1
    return -1


def _sweep_setup(domain, bc, beta, h, seed):
    from .lattice import full_state
    kc = domain.key_coords
    pref = sweep_prefixes(np.uint64(seed & 0xFFFFFFFFFFFFFFFF), kc[:, 0].copy(), kc[:, 1].copy())
    thr = threshold_table(beta, h)
    top = full_state(SpinConfig.constant(domain, 1), bc)
    bot = full_state(SpinConfig.constant(domain, -1), bc)
    return pref, thr, top, bot


def coalescence_sweeps(domain, bc, beta: float, seed: int, h: float = 0.0,
                       max_sweeps: int = 1_000_000) -> int:
    """Sweeps until the all-plus and all-minus sweep chains meet (-1 if not within the cap)."""
    pref, thr, top, bot = _sweep_setup(domain, bc, beta, h, seed)
    return int(_coalesce_sweeps(top, bot, domain.nbr, domain.n_sites, pref, thr, 0, max_sweeps))


@dataclass
class InterfaceSample:
    heights: np.ndarray
    burn_in: int
    coalesced_at: int
    lengths: np.ndarray


def interface_heights(domain, bc, beta: float, n_samples: int, seed: int, thin: int,
                      burn_factor: float = 2.0, max_sweeps: int = 2_000_000) -> InterfaceSample:
    """Max interface heights from one sweep chain after an audited burn-in.

    The burn-in is ``burn_factor`` times the forward coalescence time of the
    extremal chains driven by the same sweeps, so the recorded states no
    longer depend on the starting configuration.
    """
    pref, thr, top, bot = _sweep_setup(domain, bc, beta, 0.0, seed)
    tc = int(_coalesce_sweeps(top, bot, domain.nbr, domain.n_sites, pref, thr, 0, max_sweeps))
    if tc < 0:
        raise DegenerateConfiguration("extremal chains did not coalesce within the sweep cap", None)
    burn = max(int(math.ceil(burn_factor * tc)), tc)
    extra = burn - tc
    states = _interface_chain(top, domain.nbr, domain.n_sites, pref, thr, tc, extra, n_samples, thin)
    y0 = domain.origin[1]
    hs, ls = np.empty(n_samples), np.empty(n_samples, dtype=np.int64)
    for j in range(n_samples):
        c = extract_interface(SpinConfig(domain, states[j].copy()), bc)
        hs[j] = height_above(c, y0)
        ls[j] = c.length
    return InterfaceSample(hs, burn, tc, ls)
