"""Scale-k block tilings and their enlargements."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import LevelOverflow
from ..lattice import Rect, centered_rect, enlarge
from .schedule import ScaleSchedule


@dataclass
class BlockGrid:
    """Blocks ``B_{v,k}`` with centres ``v`` in ``ell_k Z^2`` inside ``[0, n)^2``.

    A side-l block around ``v`` covers ``[v - l//2, v - l//2 + l)`` in each
    axis, so the blocks of one level are disjoint.  Block ``(i, j)`` has
    centre ``(ell_k * i, ell_k * j)`` for ``0 <= i, j < n // ell_k``.
    """

    schedule: ScaleSchedule
    level: int
    n: int
    blocks: dict = field(init=False, repr=False)

    def __post_init__(self):
        ell = int(self.schedule.ell(self.level))
        self.ell = ell
        m = self.n // ell
        if m < 1:
            raise LevelOverflow(f"level {self.level} block side {ell} exceeds ambient size {self.n}")
        self.blocks = {(i, j): centered_rect(ell * i, ell * j, ell)
                       for j in range(m) for i in range(m)}

    def __iter__(self):
        return iter(self.blocks.items())

    def __len__(self):
        return len(self.blocks)

    def block(self, idx) -> Rect:
        return self.blocks[tuple(idx)]

    def enlarge(self, idx_or_rect, j: float) -> Rect:
        """E_{+j} at this level: grow by floor(ell_k j / 10)."""
        r = idx_or_rect if isinstance(idx_or_rect, Rect) else self.block(idx_or_rect)
        return enlarge(r, j, self.ell)[0]

    @property
    def tiles(self) -> bool:
        """Whether the blocks cover the whole ``n`` torus."""
        return self.n % self.ell == 0

    def inside(self, region: Rect) -> list:
        """Indices of blocks with a periodic image fully contained in ``region``."""
        return [i for i, _ in self.images_inside(region)]

    def images_inside(self, region: Rect) -> list:
        """``(index, image)`` for block images (shifts by multiples of ``n``) inside ``region``."""
        out = []
        n = self.n
        for i, b in self.blocks.items():
            for sy in (-n, 0, n):
                for sx in (-n, 0, n):
                    im = Rect(b.x0 + sx, b.y0 + sy, b.w, b.h)
                    if region.contains_rect(im):
                        out.append((i, im))
        return out

    def check_fits(self, j: float = 4):
        """Raise LevelOverflow when E_{+j} of a block is wider than the ambient size."""
        side = self.ell + 2 * self.schedule.enlargement_radius(self.level, j)
        if side > self.n:
            raise LevelOverflow(
                f"E_+{j} of a level-{self.level} block has side {side} > ambient size {self.n}")


def region_enlarge(R: Rect, j: float, ell_prev: int) -> Rect:
    """E_{+j} of an R-region: growth unit ell_{k-1}/10."""
    return enlarge(R, j, ell_prev)[0]
