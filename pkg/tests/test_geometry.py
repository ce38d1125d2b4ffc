import math

import numpy as np
import pytest

from layerflow.geometry import (INFINITY, CylinderPoint, GridSpec, compactify,
                                cyl_metric, pair_weight, weight)


def test_weight_values():
    assert weight((0.0, 0.0)) == 1.0
    assert weight((1.0, 1.0, 1.0)) == 2.0
    # direct evaluation of the definition: sqrt(1 + 9 + 16)
    assert weight((3.0, 4.0)) == pytest.approx(math.sqrt(26.0), rel=0, abs=1e-14)
    assert weight((3.0, 4.0)) == pytest.approx(5.0990195135927845)


def test_weight_lower_bound_and_monotonicity():
    rng = np.random.default_rng(0)
    for _ in range(200):
        x = rng.normal(size=3) * rng.uniform(0, 10)
        y = rng.normal(size=3) * rng.uniform(0, 10)
        assert weight(x) >= 1.0
        lo, hi = sorted((x, y), key=np.linalg.norm)
        assert weight(lo) <= weight(hi) + 1e-15


def test_pair_weight_values_and_symmetry():
    assert pair_weight((0.0, 0.0), (0.0, 0.0)) == 1.0
    assert pair_weight((3.0, 4.0), (0.0, 0.0)) == pytest.approx(math.sqrt(26.0))
    rng = np.random.default_rng(1)
    for _ in range(100):
        x, y = rng.normal(size=(2, 2)) * 5
        assert pair_weight(x, y) == pair_weight(y, x)
        assert pair_weight(x, y) >= weight(x) - 1e-15
        # comparison with sqrt(1+|x|^2+|y|^2) within a factor sqrt(2)
        joint = math.sqrt(1.0 + np.dot(x, x) + np.dot(y, y))
        assert pair_weight(x, y) <= joint + 1e-12
        assert joint <= math.sqrt(2.0) * pair_weight(x, y) + 1e-12


def test_compactify_points():
    p = compactify((0.0, 0.0), 0.3)
    assert p.z0 == pytest.approx(-1.0)
    assert np.allclose(p.z, 0.0)
    assert p.zt == 0.3

    pinf = compactify(INFINITY, 0.2, n=2)
    assert pinf.z0 == 1.0 and pinf.z == (0.0, 0.0) and pinf.zt == 0.2

    # w^2 = 2 at |x| = 1
    q = compactify((1.0, 0.0), 0.0)
    assert q.z0 == pytest.approx(0.0)
    assert q.z[0] == pytest.approx(1.0)
    assert q.z[1] == pytest.approx(0.0)


def test_compactify_on_cylinder_and_injective_on_grid():
    grid = GridSpec(n=2, N=16, L=3.0, M=4, T=1.0)
    seen = set()
    for x0 in grid.axis():
        for x1 in grid.axis():
            p = compactify((x0, x1), 0.0)
            assert p.z0 ** 2 + sum(z * z for z in p.z) == pytest.approx(1.0, abs=1e-12)
            key = (round(p.z0, 12), tuple(round(z, 12) for z in p.z))
            assert key not in seen
            seen.add(key)


def test_cylinder_point_invariant_enforced():
    with pytest.raises(ValueError):
        CylinderPoint(0.5, (0.2, 0.1), 0.0)


def test_cyl_metric_basic():
    assert cyl_metric(((1.0, 2.0), 0.4), ((1.0, 2.0), 0.4)) == 0.0
    # |(-1,0,0) - (1,0,0)| = 2
    assert cyl_metric(((0.0, 0.0), 0.0), (INFINITY, 0.0)) == pytest.approx(2.0)
    assert cyl_metric((INFINITY, 0.0), (INFINITY, 0.5)) == pytest.approx(0.5)


def test_cyl_metric_axioms():
    rng = np.random.default_rng(2)
    pts = [(rng.normal(size=2) * rng.uniform(0, 20), rng.uniform(0, 1)) for _ in range(30)]
    pts.append((INFINITY, 0.5))
    for _ in range(1000):
        a, b, c = (pts[i] for i in rng.integers(0, len(pts), size=3))
        dab = cyl_metric(a, b)
        assert dab >= 0.0
        assert dab == pytest.approx(cyl_metric(b, a), abs=1e-15)
        assert dab <= cyl_metric(a, c) + cyl_metric(c, b) + 1e-12


def test_grid_invariants():
    with pytest.raises(ValueError):
        GridSpec(n=2, N=6, L=1.0, M=2, T=1.0)
    with pytest.raises(ValueError):
        GridSpec(n=2, N=48, L=1.0, M=2, T=1.0)
    with pytest.raises(ValueError):
        GridSpec(n=4, N=16, L=1.0, M=2, T=1.0)
    with pytest.raises(ValueError):
        GridSpec(n=2, N=16, L=1.0, M=0, T=1.0)
    g = GridSpec(n=2, N=16, L=2.0, M=4, T=1.0)
    assert g.h == pytest.approx(0.25)
    assert g.dt == pytest.approx(0.25)
    assert g.axis()[0] == -2.0
    assert 0.0 in g.axis()
