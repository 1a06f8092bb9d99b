import numpy as np
import pytest

from glauberkit.errors import InvalidGeometry, InvalidRegion
from glauberkit.lattice import (Rect, SpinConfig, all_minus, all_plus, annulus, box, centered_rect,
                                checkerboard, delta_interval, dobrushin, enlarge, make_bc, make_domain,
                                neighbor_sum, rect_domain, sides_bc, strip, three_minus_one_plus, torus)


def test_domain_counts():
    assert (box(4).n_sites, box(4).n_ghosts) == (16, 16)
    t = torus(8)
    assert (t.n_sites, t.n_ghosts) == (64, 0)
    s = make_domain({"kind": "strip-segment", "width": 3, "height": 2})
    assert (s.n_sites, s.n_ghosts) == (6, 10)


@pytest.mark.parametrize("spec", [{"kind": "box", "width": 0, "height": 3},
                                  {"kind": "box", "width": 3, "height": -1},
                                  {"kind": "torus", "n": 2}])
def test_invalid_geometry(spec):
    with pytest.raises(InvalidGeometry):
        make_domain(spec)


def test_row_major_enumeration_and_bijection():
    d = box(3, 2, origin=(5, 7))
    assert d.sites[:4].tolist() == [[5, 7], [6, 7], [7, 7], [5, 8]]
    for i, (x, y) in enumerate(d.sites.tolist()):
        assert d.index(x, y) == i
    assert d.index(0, 0) == -1


@pytest.mark.parametrize("d", [box(5, 4), torus(5), annulus(7, 3), strip(6, 3)])
def test_neighbour_relation_symmetric(d):
    n = d.n_sites
    for i in range(n):
        for j in d.nbr[i]:
            if j < n:
                assert i in d.nbr[j]
    if d.periodic:
        assert (d.nbr < n).all()


def test_torus_degree_four_without_self_adjacency():
    d = torus(3)
    for i in range(d.n_sites):
        assert i not in d.nbr[i]
        assert len(set(d.nbr[i].tolist())) == 4


def test_neighbor_sum_examples():
    d = box(4)
    cfg = SpinConfig.constant(d, 1)
    assert neighbor_sum(cfg, all_plus(d), (1, 1)) == 4
    cb = checkerboard(d)
    v = next(tuple(xy) for xy, s in zip(d.sites.tolist(), cb.spins) if s == 1 and 0 < xy[0] < 3 and 0 < xy[1] < 3)
    assert neighbor_sum(cb, all_plus(d), v) == -4
    # corner site, minus ghosts, two interior plus neighbours
    assert neighbor_sum(cfg, all_minus(d), (0, 0)) == 0


def test_neighbor_sum_values_even(rng):
    d = box(6)
    for _ in range(20):
        cfg = SpinConfig(d, rng.choice([-1, 1], d.n_sites))
        bc = make_bc(d, "dobrushin")
        vals = {neighbor_sum(cfg, bc, i) for i in range(d.n_sites)}
        assert vals <= {-4, -2, 0, 2, 4}


def test_neighbor_sum_outside_raises():
    d = box(3)
    with pytest.raises(InvalidRegion):
        neighbor_sum(SpinConfig.constant(d, 1), all_plus(d), (10, 10))


def test_enlarge_examples():
    B = Rect(0, 0, 10, 10)
    assert enlarge(B, 4, 10)[0].w == 18
    assert enlarge(B, 0, 10)[0] == B
    assert enlarge(Rect(0, 0, 20, 20), 1, 20)[0].w == 24


def test_enlarge_rounds_down_and_clips():
    assert enlarge(Rect(0, 0, 23, 23), 1, 23)[0].w == 23 + 2 * 2
    r, clipped = enlarge(Rect(0, 0, 10, 10), 4, 10, ambient=Rect(0, 0, 12, 12))
    assert clipped and r == Rect(0, 0, 12, 12)
    r, clipped = enlarge(Rect(5, 5, 10, 10), 1, 10, ambient=Rect(0, 0, 30, 30))
    assert not clipped and r == Rect(4, 4, 12, 12)


def test_enlarge_monotone():
    B = centered_rect(0, 0, 23)
    prev = B
    for j in range(1, 6):
        cur = enlarge(B, j, 23)[0]
        assert cur.contains_rect(prev)
        prev = cur
    inner = Rect(2, 2, 5, 5)
    assert enlarge(B, 2, 23)[0].contains_rect(enlarge(inner, 2, 23)[0])


def test_centered_rect_tiles():
    cells = np.concatenate([centered_rect(8 * i, 8 * j, 8).cells() for i in range(3) for j in range(3)])
    assert len({tuple(c) for c in cells.tolist()}) == 9 * 64


def test_rect_distance_and_hull():
    a, b = Rect(0, 0, 10, 10), Rect(40, 0, 10, 10)
    assert a.distance(b) == 31
    assert a.hull(b) == Rect(0, 0, 50, 10)
    assert a.distance(Rect(5, 5, 10, 10)) == 0


def test_boundary_presets():
    d = box(4, 3)
    bc = three_minus_one_plus(d)
    south = d.ghosts[:, 1] < 0
    assert (bc.spins[south] == 1).all() and (bc.spins[~south] == -1).all()
    db = dobrushin(d)
    assert ((db.spins == -1) == (d.ghosts[:, 1] <= 0)).all()
    dl = delta_interval(box(10, 4), 4)
    s = box(10, 4)
    south = s.ghosts[:, 1] < 0
    assert (dl.spins[south] == -1).sum() == 4
    sb = sides_bc(d, 1, -1, 1, -1)
    assert (sb.spins[d.ghosts[:, 0] >= 4] == -1).all()
    assert all_minus(d) <= all_plus(d)


def test_rect_domain_with_hole_and_key_period():
    d = rect_domain(Rect(-3, -3, 10, 10), [Rect(0, 0, 2, 2)], key_period=20)
    assert d.n_sites == 96
    assert d.index(0, 0) == -1
    assert d.index(-3 + 20, -3) == d.index(-3, -3)
    assert (d.key_coords >= 0).all()
    with pytest.raises(InvalidGeometry):
        rect_domain(Rect(0, 0, 30, 30), key_period=20)
