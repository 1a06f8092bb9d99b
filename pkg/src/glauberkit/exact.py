"""Brute-force Gibbs measures on tiny domains (test oracles).

Configurations are coded as integers with bit ``i`` set iff site ``i`` is +1,
matching :func:`glauberkit.dynamics.record_codes`.
"""
from __future__ import annotations

import numpy as np

from .errors import TooLarge
from .lattice import BoundaryCondition, Domain

MAX_SITES = 20


def all_configs(n_sites: int) -> np.ndarray:
    if n_sites > MAX_SITES:
        raise TooLarge(f"{n_sites} sites is beyond brute-force enumeration")
    codes = np.arange(2 ** n_sites, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(n_sites)) & 1
    return (2 * bits - 1).astype(np.int8)


def energies(domain: Domain, bc: BoundaryCondition | None, h: float = 0.0) -> np.ndarray:
    """-H(sigma) = sum over edges s_u s_v + h sum s_v, one value per code.

    Interior edges are counted once; site-ghost edges once each.
    """
    n = domain.n_sites
    cfgs = all_configs(n).astype(np.int64)
    ghosts = np.zeros(domain.n_ghosts, dtype=np.int64) if bc is None else bc.spins.astype(np.int64)
    full = np.concatenate([cfgs, np.broadcast_to(ghosts, (len(cfgs), len(ghosts)))], axis=1)
    e = np.zeros(len(cfgs))
    # each listed (site, neighbour) pair counts once from its lower index, the
    # same multigraph convention as the dynamics' neighbour sums
    for i in range(n):
        for k in range(4):
            j = domain.nbr[i, k]
            if j >= n or j > i:
                e += full[:, i] * full[:, j]
    return e + h * cfgs.sum(axis=1)


def gibbs_pmf(domain: Domain, bc: BoundaryCondition | None, beta: float, h: float = 0.0) -> np.ndarray:
    w = beta * energies(domain, bc, h)
    w -= w.max()
    p = np.exp(w)
    return p / p.sum()


def plus_phase_pmf(domain: Domain, beta: float) -> np.ndarray:
    """Torus Gibbs measure conditioned on positive magnetization (odd site count)."""
    if domain.n_sites % 2 == 0:
        raise ValueError("plus-phase enumeration needs an odd number of sites")
    p = gibbs_pmf(domain, None, beta)
    m = all_configs(domain.n_sites).sum(axis=1, dtype=np.int64)
    p = np.where(m > 0, p, 0.0)
    return p / p.sum()
