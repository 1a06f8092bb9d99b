"""Finite lattice domains, ghost-spin boundary conditions and block geometry.

A domain is a finite set of sites of Z^2 (or a torus) enumerated row-major
from its origin.  Boundary conditions are frozen "ghost" spins on the sites
outside the domain that touch it, so one update routine serves every
geometry: the state of a chain is the vector ``[site spins..., ghost spins...]``
and ``Domain.nbr`` indexes into it.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

from .errors import InvalidGeometry, InvalidRegion

# neighbour order used throughout: east, north, west, south
OFFSETS = ((1, 0), (0, 1), (-1, 0), (0, -1))

DOMAIN_KINDS = ("box", "torus", "strip", "annulus", "region")


@dataclass(frozen=True)
class Rect:
    """Half-open integer rectangle ``[x0, x0+w) x [y0, y0+h)`` in global coordinates."""

    x0: int
    y0: int
    w: int
    h: int

    @property
    def x1(self) -> int:
        return self.x0 + self.w

    @property
    def y1(self) -> int:
        return self.y0 + self.h

    @property
    def area(self) -> int:
        return max(self.w, 0) * max(self.h, 0)

    def grow(self, r: int) -> "Rect":
        return Rect(self.x0 - r, self.y0 - r, self.w + 2 * r, self.h + 2 * r)

    def contains_rect(self, other: "Rect") -> bool:
        return (self.x0 <= other.x0 and self.y0 <= other.y0
                and other.x1 <= self.x1 and other.y1 <= self.y1)

    def contains(self, x: int, y: int) -> bool:
        return self.x0 <= x < self.x1 and self.y0 <= y < self.y1

    def intersect(self, other: "Rect") -> "Rect":
        x0, y0 = max(self.x0, other.x0), max(self.y0, other.y0)
        x1, y1 = min(self.x1, other.x1), min(self.y1, other.y1)
        return Rect(x0, y0, max(0, x1 - x0), max(0, y1 - y0))

    def hull(self, other: "Rect") -> "Rect":
        x0, y0 = min(self.x0, other.x0), min(self.y0, other.y0)
        x1, y1 = max(self.x1, other.x1), max(self.y1, other.y1)
        return Rect(x0, y0, x1 - x0, y1 - y0)

    def distance(self, other: "Rect") -> int:
        """l-infinity distance between the two site sets (0 if they overlap)."""
        dx = max(other.x0 - (self.x1 - 1), self.x0 - (other.x1 - 1), 0)
        dy = max(other.y0 - (self.y1 - 1), self.y0 - (other.y1 - 1), 0)
        return max(dx, dy)

    def cells(self) -> np.ndarray:
        ys, xs = np.mgrid[self.y0:self.y1, self.x0:self.x1]
        return np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.int64)


def centered_rect(cx: int, cy: int, side: int) -> Rect:
    """Square of ``side`` sites around ``(cx, cy)``: floor on the left, so a side-l
    square covers ``[c - l//2, c - l//2 + l)``; these tile ``l Z`` exactly."""
    return Rect(cx - side // 2, cy - side // 2, side, side)


class Domain:
    """A finite site set with its ghost ring and neighbour table.

    ``kind`` is one of box, torus, strip, annulus, region.  ``mask`` (shape
    ``(height, width)``, True = site) selects a subset of the bounding
    rectangle for annuli and general regions.  ``key_period`` makes a
    finite window of a torus: randomness is keyed by coordinates mod the
    period, so the window shares clocks with the torus itself.
    """

    def __init__(self, kind: str, width: int, height: int,
                 origin: tuple[int, int] = (0, 0), mask: np.ndarray | None = None,
                 key_period: int | None = None):
        if kind not in DOMAIN_KINDS:
            raise InvalidGeometry(f"unknown domain kind {kind!r}")
        if width <= 0 or height <= 0:
            raise InvalidGeometry(f"extents must be positive, got {width}x{height}")
        if kind == "torus" and (width < 3 or height < 3):
            raise InvalidGeometry("torus side must be at least 3")
        if kind == "torus" and mask is not None:
            raise InvalidGeometry("torus domains cannot be masked")
        self.kind = kind
        self.width = int(width)
        self.height = int(height)
        self.origin = (int(origin[0]), int(origin[1]))
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != (self.height, self.width):
                raise InvalidGeometry("mask shape must be (height, width)")
            if not mask.any():
                raise InvalidGeometry("domain has no sites")
        if key_period is not None and (width > key_period or height > key_period):
            raise InvalidGeometry("domain wider than its key period")
        self.mask = mask
        self.key_period = key_period
        self._build()

    # -- construction -------------------------------------------------
    def _build(self):
        W, H = self.width, self.height
        x0, y0 = self.origin
        mask = np.ones((H, W), dtype=bool) if self.mask is None else self.mask
        ys, xs = np.nonzero(mask)
        order = np.lexsort((xs, ys))
        xs, ys = xs[order], ys[order]
        n_sites = len(xs)
        # padded local index grid; -1 = not a site
        grid = -np.ones((H + 2, W + 2), dtype=np.int64)
        grid[ys + 1, xs + 1] = np.arange(n_sites)
        nbr = np.empty((n_sites, 4), dtype=np.int64)
        ghost_index: dict[tuple[int, int], int] = {}
        ghosts: list[tuple[int, int]] = []
        periodic = self.kind == "torus"
        # ghosts are enumerated row-major, so collect candidates first
        if not periodic:
            cand = set()
            for k, (dx, dy) in enumerate(OFFSETS):
                gx, gy = xs + dx, ys + dy
                outside = grid[gy + 1, gx + 1] < 0
                cand.update(zip(gx[outside].tolist(), gy[outside].tolist()))
            for g in sorted(cand, key=lambda p: (p[1], p[0])):
                ghost_index[g] = n_sites + len(ghosts)
                ghosts.append(g)
        for k, (dx, dy) in enumerate(OFFSETS):
            gx, gy = xs + dx, ys + dy
            if periodic:
                nbr[:, k] = grid[(gy % H) + 1, (gx % W) + 1]
            else:
                idx = grid[gy + 1, gx + 1]
                miss = idx < 0
                if miss.any():
                    idx = idx.copy()
                    idx[miss] = [ghost_index[(a, b)] for a, b in
                                 zip(gx[miss].tolist(), gy[miss].tolist())]
                nbr[:, k] = idx
        self._grid = grid
        self.nbr = nbr
        self.local_xy = np.stack([xs, ys], axis=1).astype(np.int64)
        self.sites = self.local_xy + np.array([x0, y0], dtype=np.int64)
        if ghosts:
            self.ghosts = np.array(ghosts, dtype=np.int64) + np.array([x0, y0], dtype=np.int64)
        else:
            self.ghosts = np.zeros((0, 2), dtype=np.int64)

    # -- basic queries ---------------------------------------------------
    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def n_ghosts(self) -> int:
        return len(self.ghosts)

    @property
    def rect(self) -> Rect:
        return Rect(self.origin[0], self.origin[1], self.width, self.height)

    @property
    def periodic(self) -> bool:
        return self.kind == "torus"

    def index(self, x: int, y: int) -> int:
        """Local index of the site at global ``(x, y)``; -1 if absent."""
        lx, ly = x - self.origin[0], y - self.origin[1]
        if self.periodic:
            lx %= self.width
            ly %= self.height
        elif self.key_period:
            lx %= self.key_period
            ly %= self.key_period
        if not (0 <= lx < self.width and 0 <= ly < self.height):
            return -1
        return int(self._grid[ly + 1, lx + 1])

    def indices(self, xy: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`index` for an ``(m, 2)`` array of global coordinates."""
        xy = np.asarray(xy, dtype=np.int64).reshape(-1, 2)
        lx = xy[:, 0] - self.origin[0]
        ly = xy[:, 1] - self.origin[1]
        if self.periodic:
            lx %= self.width
            ly %= self.height
        elif self.key_period:
            lx %= self.key_period
            ly %= self.key_period
        ok = (lx >= 0) & (lx < self.width) & (ly >= 0) & (ly < self.height)
        out = -np.ones(len(xy), dtype=np.int64)
        out[ok] = self._grid[ly[ok] + 1, lx[ok] + 1]
        return out

    def __contains__(self, xy) -> bool:
        return self.index(int(xy[0]), int(xy[1])) >= 0

    @cached_property
    def key_coords(self) -> np.ndarray:
        """Global coordinates used to key randomness (reduced mod n on tori)."""
        return self.to_key(self.sites)

    def to_key(self, xy: np.ndarray) -> np.ndarray:
        """Map global coordinates to randomness keys."""
        xy = np.asarray(xy, dtype=np.int64).reshape(-1, 2)
        if self.periodic:
            return np.stack([xy[:, 0] % self.width, xy[:, 1] % self.height], axis=1)
        if self.key_period:
            return xy % self.key_period
        return xy

    def region_indices(self, region) -> np.ndarray:
        """Local indices of a region given as a :class:`Rect` or coordinate array."""
        xy = region.cells() if isinstance(region, Rect) else np.asarray(region).reshape(-1, 2)
        idx = self.indices(xy)
        if (idx < 0).any():
            raise InvalidRegion("region contains sites outside the domain")
        return idx

    def grid_view(self, spins: np.ndarray, fill: int = 0) -> np.ndarray:
        """Spins laid out on the bounding rectangle, row 0 = lowest y."""
        out = np.full((self.height, self.width), fill, dtype=np.int8)
        out[self.local_xy[:, 1], self.local_xy[:, 0]] = spins
        return out

    def same_as(self, other: "Domain") -> bool:
        return (self.kind == other.kind and self.width == other.width
                and self.height == other.height and self.origin == other.origin
                and self.n_sites == other.n_sites and self.key_period == other.key_period
                and np.array_equal(self.sites, other.sites))

    def __repr__(self):
        return (f"Domain({self.kind}, {self.width}x{self.height}, origin={self.origin}, "
                f"sites={self.n_sites}, ghosts={self.n_ghosts})")


def box(width: int, height: int | None = None, origin=(0, 0), kind: str = "box") -> Domain:
    return Domain(kind, width, width if height is None else height, origin)


def torus(n: int) -> Domain:
    return Domain("torus", n, n)


def strip(width: int, height: int, origin=(0, 0)) -> Domain:
    return Domain("strip", width, height, origin)


def annulus(outer: int, inner: int, origin=(0, 0)) -> Domain:
    """Square of side ``outer`` with a centred square hole of side ``inner``."""
    if inner <= 0 or inner >= outer - 1:
        raise InvalidGeometry("annulus needs 0 < inner < outer - 1")
    mask = np.ones((outer, outer), dtype=bool)
    a = (outer - inner) // 2
    mask[a:a + inner, a:a + inner] = False
    return Domain("annulus", outer, outer, origin, mask)


def rect_domain(rect: Rect, exclude: Iterable[Rect] = (), key_period: int | None = None) -> Domain:
    """Domain on ``rect`` with the given sub-rectangles removed (they become ghosts)."""
    exclude = list(exclude)
    if not exclude:
        return Domain("box", rect.w, rect.h, (rect.x0, rect.y0), key_period=key_period)
    mask = np.ones((rect.h, rect.w), dtype=bool)
    for r in exclude:
        q = r.intersect(rect)
        if q.area:
            mask[q.y0 - rect.y0:q.y1 - rect.y0, q.x0 - rect.x0:q.x1 - rect.x0] = False
    return Domain("region", rect.w, rect.h, (rect.x0, rect.y0), mask, key_period)


def make_domain(spec: dict) -> Domain:
    """Build a domain from a descriptor such as ``{"kind": "box", "width": 4, "height": 4}``.

    Tori take ``n``; annuli take ``outer`` and ``inner``; other kinds take
    ``width``/``height`` (or ``side``) and an optional ``origin``.
    """
    kind = spec.get("kind", "box")
    if kind == "strip-segment":
        kind = "strip"
    origin = tuple(spec.get("origin", (0, 0)))
    if kind == "torus":
        return torus(int(spec.get("n", spec.get("side", 0))))
    if kind == "annulus":
        return annulus(int(spec["outer"]), int(spec["inner"]), origin)
    side = spec.get("side")
    w = int(spec.get("width", side if side is not None else 0))
    h = int(spec.get("height", side if side is not None else w))
    return Domain(kind, w, h, origin)


# -- spin configurations and boundary conditions -----------------------------

@dataclass(eq=False)
class SpinConfig:
    domain: Domain
    spins: np.ndarray

    def __post_init__(self):
        self.spins = np.asarray(self.spins, dtype=np.int8)
        if self.spins.shape != (self.domain.n_sites,):
            raise InvalidGeometry("spin array length must equal the site count")
        if not np.all(np.abs(self.spins) == 1):
            raise ValueError("spins must be +1 or -1")

    @classmethod
    def constant(cls, domain: Domain, value: int) -> "SpinConfig":
        return cls(domain, np.full(domain.n_sites, value, dtype=np.int8))

    def copy(self) -> "SpinConfig":
        return SpinConfig(self.domain, self.spins.copy())

    def magnetization(self) -> float:
        return float(self.spins.mean())

    def grid(self) -> np.ndarray:
        return self.domain.grid_view(self.spins)

    def __le__(self, other: "SpinConfig") -> bool:
        return bool(np.all(self.spins <= other.spins))


@dataclass(eq=False)
class BoundaryCondition:
    """Frozen ghost spins, one per ``domain.ghosts`` row (empty on tori)."""

    domain: Domain
    spins: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        self.spins = np.asarray(self.spins, dtype=np.int8)
        if self.spins.shape != (self.domain.n_ghosts,):
            raise InvalidGeometry("boundary condition must assign every ghost site")
        if self.spins.size and not np.all(np.abs(self.spins) == 1):
            raise ValueError("ghost spins must be +1 or -1")

    def __le__(self, other: "BoundaryCondition") -> bool:
        return bool(np.all(self.spins <= other.spins))


def all_plus(domain: Domain) -> BoundaryCondition:
    return BoundaryCondition(domain, np.ones(domain.n_ghosts, dtype=np.int8), "all-plus")


def all_minus(domain: Domain) -> BoundaryCondition:
    return BoundaryCondition(domain, -np.ones(domain.n_ghosts, dtype=np.int8), "all-minus")


def constant_bc(domain: Domain, value: int) -> BoundaryCondition:
    return all_plus(domain) if value > 0 else all_minus(domain)


def _side_of(domain: Domain) -> np.ndarray:
    """0=north, 1=east, 2=south, 3=west for each ghost of a rectangular domain;
    -1 for ghosts in holes."""
    r = domain.rect
    g = domain.ghosts
    side = -np.ones(len(g), dtype=np.int64)
    side[g[:, 1] >= r.y1] = 0
    side[g[:, 0] >= r.x1] = 1
    side[g[:, 1] < r.y0] = 2
    side[g[:, 0] < r.x0] = 3
    return side


def sides_bc(domain: Domain, north: int, east: int, south: int, west: int,
             inner: int = 1, name: str = "sides") -> BoundaryCondition:
    """Constant spin per side; ghosts inside holes get ``inner``."""
    side = _side_of(domain)
    vals = np.array([north, east, south, west], dtype=np.int8)
    spins = np.where(side >= 0, vals[np.maximum(side, 0)], np.int8(inner)).astype(np.int8)
    return BoundaryCondition(domain, spins, name)


def three_minus_one_plus(domain: Domain) -> BoundaryCondition:
    """(-,-,+,-) read clockwise from north: plus on the south side only."""
    return sides_bc(domain, -1, -1, +1, -1, name="three-minus-one-plus")


def dobrushin(domain: Domain, level: int = 0) -> BoundaryCondition:
    """Minus on ghosts at height <= ``level``, plus above (the mp / Dobrushin condition)."""
    spins = np.where(domain.ghosts[:, 1] <= level, -1, 1).astype(np.int8)
    return BoundaryCondition(domain, spins, "dobrushin")


def delta_interval(domain: Domain, length: int) -> BoundaryCondition:
    """(-,+,Delta): minus on the north side and on a south interval of ``length``
    centred along the south side, plus elsewhere."""
    r = domain.rect
    side = _side_of(domain)
    g = domain.ghosts
    a = r.x0 + (r.w - length) // 2
    spins = np.ones(len(g), dtype=np.int8)
    spins[side == 0] = -1
    on_delta = (side == 2) & (g[:, 0] >= a) & (g[:, 0] < a + length)
    spins[on_delta] = -1
    return BoundaryCondition(domain, spins, "minus-plus-delta")


def mixed_annulus(domain: Domain, inner: int = -1, outer: int = 1) -> BoundaryCondition:
    side = _side_of(domain)
    spins = np.where(side >= 0, outer, inner).astype(np.int8)
    return BoundaryCondition(domain, spins, "mixed-annulus")


BC_PRESETS = {
    "all-plus": all_plus,
    "all-minus": all_minus,
    "dobrushin": dobrushin,
    "three-minus-one-plus": three_minus_one_plus,
    "mixed-annulus": mixed_annulus,
}


def make_bc(domain: Domain, spec) -> BoundaryCondition:
    if isinstance(spec, str):
        spec = {"preset": spec}
    preset = spec.get("preset", "all-plus")
    if domain.periodic:
        return BoundaryCondition(domain, np.zeros(0, dtype=np.int8), "none")
    if preset == "delta":
        return delta_interval(domain, int(spec["length"]))
    if preset == "dobrushin":
        return dobrushin(domain, int(spec.get("level", 0)))
    if preset == "sides":
        n, e, s, w = spec["signs"]
        return sides_bc(domain, n, e, s, w)
    return BC_PRESETS[preset](domain)


# -- geometry on states --------------------------------------------------------

def full_state(cfg: SpinConfig, bc: BoundaryCondition | None) -> np.ndarray:
    if bc is None or cfg.domain.n_ghosts == 0:
        return cfg.spins
    return np.concatenate([cfg.spins, bc.spins])


def neighbor_sum(cfg: SpinConfig, bc: BoundaryCondition | None, v) -> int:
    """Sum of the four neighbour spins of site ``v`` (local index or global (x, y))."""
    d = cfg.domain
    i = int(v) if np.isscalar(v) else d.index(int(v[0]), int(v[1]))
    if i < 0 or i >= d.n_sites:
        raise InvalidRegion(f"site {v} not in domain")
    state = full_state(cfg, bc)
    return int(state[d.nbr[i]].sum())


def enlarge(block: Rect, j: float, scale_len: int, ambient: Rect | None = None,
            unit: float = 10.0) -> tuple[Rect, bool]:
    """E_{+j}: grow ``block`` by ``floor(scale_len * j / unit)`` in every direction.

    Returns ``(rect, clipped)``; when ``ambient`` is given the result is
    intersected with it and ``clipped`` reports whether that cut anything.
    """
    r = int(np.floor(scale_len * j / unit + 1e-9))
    out = block.grow(r)
    if ambient is None:
        return out, False
    clipped = not ambient.contains_rect(out)
    return (out.intersect(ambient) if clipped else out), clipped


def checkerboard(domain: Domain, parity: int = 0) -> SpinConfig:
    s = np.where((domain.sites.sum(axis=1) + parity) % 2 == 0, 1, -1).astype(np.int8)
    return SpinConfig(domain, s)
