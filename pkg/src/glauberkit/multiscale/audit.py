"""Executable form of the multiscale events and the dominating field.

For a scale-k block B the field bit is

    D_k(B) = 1 - 1{|Dis_{k-1}(B)| <= s_k, Bad_{k-1}(B) empty, InfProp_k(B), LocCoup_k(B)}

with D_0(B) = 1{Q = -1 somewhere in B}.  All processes are driven by one
:class:`RandomnessSource`; blocks live in Z^2 but are keyed modulo the
ambient torus side, so they share clocks with the torus chains.

Every block also gets the coupling verdict: whether the two stationary-start
processes U^{B, pi ^ Q} and U^{B, pi} agree on B at T_k.  A zero bit with
disagreement is an implementation error, not a statistic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..dynamics import ChainState, CoupledEnsemble, ModelParams, evolve
from ..errors import CapacityExceeded, LevelOverflow, SetupError
from ..lattice import Rect, SpinConfig, all_plus, rect_domain, sides_bc
from ..randomness import Patch, RandomnessSource
from ..samplers import DEFAULT_LIMIT, sample_stationary_cftp
from ..stats import wilson_interval
from .blocks import BlockGrid, region_enlarge
from .chains import longest_chain
from .cover import cover_bad_blocks
from .schedule import ScaleSchedule


def ring(outer: Rect, inner: Rect) -> np.ndarray:
    """Coordinates of ``outer`` minus ``inner``."""
    c = outer.cells()
    inside = ((c[:, 0] >= inner.x0) & (c[:, 0] < inner.x1)
              & (c[:, 1] >= inner.y0) & (c[:, 1] < inner.y1))
    return c[~inside]


def wrap_rects(r: Rect, n: int) -> tuple[Rect, ...]:
    """Pieces of ``r`` reduced into ``[0, n)^2`` (for keyed-coordinate patches)."""
    out = []
    for ox in (-n, 0, n):
        for oy in (-n, 0, n):
            q = Rect(r.x0 + ox, r.y0 + oy, r.w, r.h).intersect(Rect(0, 0, n, n))
            if q.area:
                out.append(q)
    return tuple(out)


@dataclass
class SandwichResult:
    """Outcome of Sandwich(B, R) plus the implied W-versus-U checks.

    ``clause_coalesce``: V^{R,-} and V^{R,+} agree at T_k.
    ``clause_buffer``: V^{R,pi} = V^{B minus R,pi} on E2(R) minus E1(R) for all t.
    ``lemma_ok``: when both clauses hold, U with minus on R at T_{k-1}
    re-couples with U on E4(B) by T_k and never differs outside E2(R)
    (None when the premise fails).
    """

    R: Rect
    clause_coalesce: bool
    clause_buffer: bool
    buffer_fail_time: float
    lemma_ok: bool | None
    clipped: bool

    @property
    def holds(self) -> bool:
        return self.clause_coalesce and self.clause_buffer

    @property
    def fails(self) -> list[str]:
        out = []
        if not self.clause_coalesce:
            out.append("coalesce")
        if not self.clause_buffer:
            out.append("buffer")
        return out


def check_sandwich(src: RandomnessSource, params: ModelParams, E4B: Rect, R: Rect, ell_prev: int,
                   t_prev: float, t_k: float, U0: SpinConfig | None = None,
                   key_period: int | None = None, limit: int = DEFAULT_LIMIT,
                   v_init: tuple | None = None) -> SandwichResult:
    """Evaluate Sandwich(B, R) over ``[t_prev, t_k]``.

    Processes: U on E4(B) (plus bc, stationary start ``U0`` or a CFTP
    sample), V^{R,pi} on E4(R) (plus bc, stationary), V^{B minus R,pi} on
    E4(B) minus R (plus outside, minus on R, stationary), all from time 0;
    V^{R,+}, V^{R,-} and W (U with minus on R) join at ``t_prev``.  E4(R)
    is clipped to E4(B).  ``v_init`` may override the (V+, V-) initial
    configurations, for degenerate tests.
    """
    if t_k < t_prev or t_prev < 0:
        raise SetupError("window must satisfy 0 <= T_{k-1} <= T_k")
    E4R_full = region_enlarge(R, 4, ell_prev)
    E4R = E4R_full.intersect(E4B)
    clipped = E4R != E4R_full
    E2R = region_enlarge(R, 2, ell_prev).intersect(E4B)
    E1R = region_enlarge(R, 1, ell_prev).intersect(E4B)
    if not E4B.contains_rect(R):
        raise SetupError("R must lie inside E4(B)")
    dB = rect_domain(E4B, key_period=key_period)
    dR = rect_domain(E4R, key_period=key_period)
    dBR = rect_domain(E4B, [R], key_period=key_period)
    bB, bR = all_plus(dB), all_plus(dR)
    bBR = sides_bc(dBR, 1, 1, 1, 1, inner=-1, name="plus-outside-minus-on-R")
    try:
        u0 = U0 if U0 is not None else sample_stationary_cftp(src, dB, bB, params, limit)
        vR = sample_stationary_cftp(src, dR, bR, params, limit)
        vBR = sample_stationary_cftp(src, dBR, bBR, params, limit)
    except Exception as exc:  # stationary inputs are mandatory
        raise SetupError(f"stationary samples unavailable: {exc}") from exc
    ens = CoupledEnsemble([ChainState(dB, bB, u0, name="U"),
                           ChainState(dR, bR, vR, name="V_R_pi"),
                           ChainState(dBR, bBR, vBR, name="V_BR_pi")], src, params)
    evolve(ens, t_prev)
    plus0 = SpinConfig.constant(dR, 1) if v_init is None else v_init[0]
    minus0 = SpinConfig.constant(dR, -1) if v_init is None else v_init[1]
    ip = ens.add_chain(ChainState(dR, bR, plus0, name="V_R_plus"))
    im = ens.add_chain(ChainState(dR, bR, minus0, name="V_R_minus"))
    w0 = ens.chains[0].spins.copy()
    w0[dB.region_indices(R)] = -1
    iw = ens.add_chain(ChainState(dB, bB, w0, name="W"))
    buf = ens.monitor(1, 2, ring(E2R, E1R), "eq")
    outside = ens.monitor(iw, 0, ring(E4B, E2R), "eq")
    evolve(ens, t_k)
    coalesce = bool(np.array_equal(ens.chains[ip].spins, ens.chains[im].spins))
    res = SandwichResult(R, coalesce, buf.holds, buf.fail_time, None, clipped)
    if res.holds:
        res.lemma_ok = bool(outside.holds and np.array_equal(ens.chains[iw].spins, ens.chains[0].spins))
    return res


# -- the dominating field ---------------------------------------------------

@dataclass
class BlockRecord:
    level: int
    index: tuple
    rect: Rect
    bit: int
    reasons: list = field(default_factory=list)
    dis_count: int = 0
    bad: list = field(default_factory=list)
    max_chain: int = 0
    chain_len: int = 0
    sandwiches: list = field(default_factory=list)
    agree: bool | None = None
    lemma_ok: bool | None = None

    @property
    def violation(self) -> bool:
        """Zero bit but the two U-processes disagree on the block."""
        return self.bit == 0 and self.agree is False

    def row(self) -> dict:
        return {"level": self.level, "i": self.index[0], "j": self.index[1], "bit": self.bit,
                "failing": "|".join(self.reasons) or "none", "dis": self.dis_count,
                "bad": len(self.bad), "max_chain": self.max_chain, "L": self.chain_len,
                "n_R": len(self.sandwiches),
                "agree": "" if self.agree is None else int(self.agree)}


@dataclass
class DominatingField:
    level: int
    bits: dict
    provenance: dict

    def q_hat(self, z: float = 1.96) -> tuple[float, float, float]:
        n = len(self.bits)
        k = sum(self.bits.values())
        lo, hi = wilson_interval(k, n, z)
        return (k / n if n else math.nan), lo, hi

    @property
    def violations(self) -> list:
        return [r for r in self.provenance.values() if r.violation]

    @property
    def zero_blocks(self) -> int:
        return sum(1 for b in self.bits.values() if b == 0)


class MultiscaleAudit:
    """Computes D_0..D_k on the blocks of an ``n`` torus for one randomness source.

    Blocks near the edge extend past ``[0, n)``; their sites are keyed
    modulo ``n``.  ``lazy`` skips the Sandwich runs of blocks already known
    to have bit 1 (provenance then lists only the cheaper failures).
    """

    def __init__(self, src: RandomnessSource, schedule: ScaleSchedule, params: ModelParams,
                 p: float, n: int, limit: int = DEFAULT_LIMIT, lazy: bool = False):
        if schedule.mode != "practical":
            raise SetupError("simulation needs a practical-mode schedule")
        self.src, self.schedule, self.params = src, schedule, params
        self.p, self.n, self.limit, self.lazy = float(p), int(n), int(limit), lazy
        self.grids: dict[int, BlockGrid] = {}
        self.fields: dict[int, DominatingField] = {}
        self._stationary: dict = {}
        self._statequiv: dict = {}
        self._infprop: dict = {}

    # -- helpers -------------------------------------------------------
    def grid(self, k: int) -> BlockGrid:
        if k not in self.grids:
            g = BlockGrid(self.schedule, k, self.n)
            g.check_fits(4)
            self.grids[k] = g
        return self.grids[k]

    def E(self, k: int, idx, j: float) -> Rect:
        return self.grid(k).enlarge(idx, j)

    def q_minus(self, rect: Rect) -> np.ndarray:
        """Coordinates of ``rect`` where Q = -1 (u_q > p)."""
        c = rect.cells()
        u = self.src.uniforms(c % self.n, "init-q")
        return c[u > self.p]

    def domain(self, rect: Rect, exclude=()):
        return rect_domain(rect, exclude, key_period=self.n)

    def stationary(self, k: int, idx) -> SpinConfig:
        """CFTP sample of U^{B,pi} at time 0 on E4(B) with plus bc."""
        key = (k, tuple(idx))
        if key not in self._stationary:
            d = self.domain(self.E(k, idx, 4))
            self._stationary[key] = sample_stationary_cftp(self.src, d, all_plus(d), self.params,
                                                           self.limit)
        return self._stationary[key]

    def infprop(self, k: int, idx) -> tuple[bool, int, int]:
        """(holds, longest chain, L) for clock rings in E4(B) x [0, T_k]."""
        key = (k, tuple(idx))
        if key not in self._infprop:
            L = self.schedule.chain_length(k)
            T = self.schedule.T(k)
            d = self.domain(self.E(k, idx, 4))
            ev = self.src.events(d.key_coords, 0.0, float(T))
            top = int(longest_chain(ev.site, d.nbr, d.n_sites)[0]) if len(ev) else 0
            self._infprop[key] = (top < L, top, L)
        return self._infprop[key]

    def statequiv(self, k: int, idx) -> bool:
        """U^{B,pi} = U^{B'',pi} on E3(B) over [0, T_k] for every level-(k+1)
        block B'' of the grid with B inside E3(B'')."""
        key = (k, tuple(idx))
        if key in self._statequiv:
            return self._statequiv[key]
        B = self.grid(k).block(idx)
        E3 = self.E(k, idx, 3)
        T = float(self.schedule.T(k))
        ok = True
        try:
            up = self.grid(k + 1)
        except LevelOverflow:
            up = None
        if up is not None:
            d = self.domain(self.E(k, idx, 4))
            for jdx, Bpp in up:
                E3pp, n = up.enlarge(jdx, 3), self.n
                if not any(E3pp.contains_rect(Rect(B.x0 + sx, B.y0 + sy, B.w, B.h))
                           for sx in (-n, 0, n) for sy in (-n, 0, n)):
                    continue
                dd = self.domain(self.E(k + 1, jdx, 4))
                ens = CoupledEnsemble([ChainState(d, all_plus(d), self.stationary(k, idx)),
                                       ChainState(dd, all_plus(dd), self.stationary(k + 1, jdx))],
                                      self.src, self.params)
                mon = ens.monitor(0, 1, E3.cells(), "eq")
                if T > 0 and mon.holds:
                    evolve(ens, T)
                if not mon.holds:
                    ok = False
                    break
        self._statequiv[key] = ok
        return ok

    # -- levels ----------------------------------------------------------
    def level0(self) -> DominatingField:
        g = self.grid(0)
        bits, prov = {}, {}
        for idx, B in g:
            bad = len(self.q_minus(B)) > 0
            rec = BlockRecord(0, idx, B, int(bad), ["Q-minus"] if bad else [])
            rec.agree = True if not bad else None
            bits[idx], prov[idx] = int(bad), rec
        return DominatingField(0, bits, prov)

    def block_record(self, k: int, idx, check_coupling: bool = True) -> BlockRecord:
        sch = self.schedule
        g, gp = self.grid(k), self.grid(k - 1)
        prev = self.field(k - 1)
        B = g.block(idx)
        E2, E3, E4 = (self.E(k, idx, j) for j in (2, 3, 4))
        rec = BlockRecord(k, idx, B, 0)
        # Dis: bad blocks one scale down inside E2(B)
        dis = [im for i, im in gp.images_inside(E2) if prev.bits[i] == 1]
        rec.dis_count = len(dis)
        s_k = sch.s(k)
        if len(dis) > s_k:
            rec.reasons.append("Dis>s_k")
        # Bad: level-(k-1) blocks inside E3(B) failing StatEquiv or InfProp
        for i in gp.inside(E3):
            if not self.infprop(k - 1, i)[0]:
                rec.bad.append((i, "InfProp"))
            elif not self.statequiv(k - 1, i):
                rec.bad.append((i, "StatEquiv"))
        if rec.bad:
            rec.reasons.append("Bad")
        ok, rec.max_chain, rec.chain_len = self.infprop(k, idx)
        if not ok:
            rec.reasons.append("InfProp")
        # LocCoup over the cover of Dis
        if len(dis) <= s_k and not (self.lazy and rec.reasons):
            try:
                cover = cover_bad_blocks(dis, gp.ell, s_k, E2)
            except CapacityExceeded:
                cover = None
            if cover is not None:
                U0 = self.stationary(k, idx)
                for R in cover:
                    res = check_sandwich(self.src, self.params, E4, R, gp.ell,
                                         float(sch.T(k - 1)), float(sch.T(k)), U0,
                                         key_period=self.n, limit=self.limit)
                    rec.sandwiches.append(res)
                if not all(r.holds for r in rec.sandwiches):
                    rec.reasons.append("LocCoup")
                lem = [r.lemma_ok for r in rec.sandwiches if r.lemma_ok is not None]
                rec.lemma_ok = all(lem) if lem else None
        elif len(dis) <= s_k:
            rec.reasons.append("LocCoup-not-evaluated")
        rec.bit = int(bool(rec.reasons))
        if check_coupling:
            rec.agree = self.coupling_agrees(k, idx)
        return rec

    def coupling_agrees(self, k: int, idx) -> bool:
        """U^{B,pi ^ Q}_{T_k}(B) == U^{B,pi}_{T_k}(B)."""
        d = self.domain(self.E(k, idx, 4))
        pi = self.stationary(k, idx)
        E1 = self.E(k, idx, 1)
        q = pi.spins.copy()
        neg = self.q_minus(E1)
        if len(neg):
            q[d.region_indices(neg)] = -1
        ens = CoupledEnsemble([ChainState(d, all_plus(d), pi), ChainState(d, all_plus(d), q)],
                              self.src, self.params)
        evolve(ens, float(self.schedule.T(k)))
        bi = d.region_indices(self.grid(k).block(idx))
        return bool(np.array_equal(ens.chains[0].spins[bi], ens.chains[1].spins[bi]))

    def field(self, k: int, blocks=None) -> DominatingField:
        """D_k on all blocks (or the given block indices) of level ``k``."""
        if k in self.fields and blocks is None:
            return self.fields[k]
        if k == 0:
            f = self.level0()
        else:
            if not self.grid(k - 1).tiles:
                raise SetupError(f"level-{k - 1} blocks of side {self.grid(k - 1).ell} do not tile "
                                 f"the {self.n} torus")
            g = self.grid(k)
            idxs = list(g.blocks) if blocks is None else [tuple(b) for b in blocks]
            prov = {i: self.block_record(k, i) for i in idxs}
            f = DominatingField(k, {i: r.bit for i, r in prov.items()}, prov)
        if blocks is None:
            self.fields[k] = f
        return f


def compute_dominating_field(src: RandomnessSource, schedule: ScaleSchedule, params: ModelParams,
                             p: float, n: int, level: int, blocks=None,
                             limit: int = DEFAULT_LIMIT, lazy: bool = False) -> list[DominatingField]:
    """Fields D_0..D_level; ``blocks`` restricts the top level to some block indices."""
    audit = MultiscaleAudit(src, schedule, params, p, n, limit, lazy)
    out = [audit.field(k) for k in range(level)]
    out.append(audit.field(level, blocks))
    return out


def measurability_check(src: RandomnessSource, schedule: ScaleSchedule, params: ModelParams,
                        p: float, n: int, k: int, idx, alt_seed: int, limit: int = DEFAULT_LIMIT):
    """Recompute D_k(B) with randomness outside E4(B) x [0, T_k] re-keyed.

    Returns both block records; the bit should depend only on the
    randomness of E4(B) x [0, T_k].
    """
    base = MultiscaleAudit(src, schedule, params, p, n, limit)
    r0 = base.field(k, [idx]).provenance[tuple(idx)]
    E4 = base.E(k, idx, 4)
    patched = RandomnessSource(src.seed, Patch(alt_seed, wrap_rects(E4, n), schedule.T(k)))
    alt = MultiscaleAudit(patched, schedule, params, p, n, limit)
    r1 = alt.field(k, [idx]).provenance[tuple(idx)]
    return r0, r1
