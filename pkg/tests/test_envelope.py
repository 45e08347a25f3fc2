import numpy as np
import pytest

from dualavg import (CapabilityError, ConstraintSetC, LipschitzExtension, MaxAffine, MaxCoord,
                     UsageError, dom_FLstar_membership, estimate_L_on_C, eval_FL, subgrad_FL_on_C)
from dualavg.bench import gen_example61
from dualavg.bench.generators import envelope_from_spec
from dualavg.envelope import NotCertified

TOL = 1e-6


@pytest.fixture(scope="module")
def ext61():
    return envelope_from_spec(gen_example61(1))


def _outside(ext, rng, count, scale=3.0):
    return ext.C.sample(rng, count) + scale * rng.standard_normal((count, ext.C.dim))


def test_example61_instance(ext61):
    C = ext61.C
    assert C.contains(C.base)
    assert np.all(C.base > 0)
    for z in C.sample(np.random.default_rng(0), 50):
        assert np.isfinite(ext61.f.value(z))


@pytest.mark.parametrize("C", [
    ConstraintSetC.shifted_cone([1.0, 1.0, 1.0], [[1.0, 0.2], [0.3, 1.0], [0.5, 0.5]]),
    ConstraintSetC.polytope([[0, 0], [1, 0], [0, 1], [1, 1.5]]),
    ConstraintSetC.box([0, -1, 2], [1, 1, 3]),
])
def test_normal_cone_trivial_inside(C):
    rng = np.random.default_rng(1)
    for _ in range(30):
        if C.kind == "shifted_cone":
            z = C.point(rng.uniform(0.2, 3, C.G.shape[1]))
        elif C.kind == "polytope":
            z = rng.dirichlet(np.ones(C.V.shape[0])) @ C.V
        else:
            z = C.lo + (C.hi - C.lo) * rng.uniform(0.1, 0.9, C.dim)
        v = rng.standard_normal(C.dim)
        if C.kind != "shifted_cone" or C.G.shape[1] >= C.dim:
            assert np.linalg.norm(C.normal_projection(z, v)) <= 1e-9
        else:
            # a cone with fewer generators than dimensions has no interior;
            # the normal cone is then the orthogonal complement of its span
            n = C.normal_projection(z, v)
            assert np.linalg.norm(C.G.T @ n) <= 1e-9


def test_set_round_trip():
    C = ConstraintSetC.shifted_cone([1.0, 2.0], [[1.0, 0.0], [0.5, 1.0]])
    assert ConstraintSetC.from_dict(C.to_dict()).to_dict() == C.to_dict()


def test_extension_identity(ext61):
    rng = np.random.default_rng(2)
    for z in ext61.C.sample(rng, 100):
        r = eval_FL(ext61, z)
        assert abs(r.value - ext61.f.value(z)) <= 1e-4
        assert not r.coarse


def test_abs_control():
    ext = LipschitzExtension(MaxAffine([[1.0], [-1.0]]), ConstraintSetC.box([0.0], [1.0]), 1.0)
    assert abs(eval_FL(ext, [-0.5]).value - 0.5) <= 1e-6
    for z in (-3.0, -0.01, 0.3, 1.0, 2.5):
        r = eval_FL(ext, [z])
        assert abs(r.value - abs(z)) <= 1e-6 and r.gap <= 1e-6


def test_lipschitz_pairs(ext61):
    rng = np.random.default_rng(3)
    pts = np.vstack([_outside(ext61, rng, 200), _outside(ext61, rng, 200, 30.0)])
    res = [eval_FL(ext61, z) for z in pts]
    for i in range(200):
        a, b = res[2 * i], res[2 * i + 1]
        lhs = abs(a.value - b.value)
        assert lhs <= ext61.L * np.linalg.norm(pts[2 * i] - pts[2 * i + 1]) + a.gap + b.gap + 1e-12


def test_value_brackets(ext61):
    rng = np.random.default_rng(4)
    for z in _outside(ext61, rng, 60):
        r = eval_FL(ext61, z)
        assert r.lower <= r.value + 1e-12 and r.gap <= TOL
        # the value is attained at a point of C
        zb = r.argmin
        assert ext61.C.contains(zb, 1e-8)
        assert abs(ext61.f.value(zb) + ext61.L * np.linalg.norm(z - zb) - r.value) <= 1e-9 * (1 + abs(r.value))


def test_monotone_in_L(ext61):
    big = LipschitzExtension(ext61.f, ext61.C, 2 * ext61.L, ext61.norm)
    rng = np.random.default_rng(5)
    for z in _outside(ext61, rng, 50):
        assert eval_FL(big, z).value >= eval_FL(ext61, z).value - 2 * TOL


def test_subgradient_inequality(ext61):
    rng = np.random.default_rng(6)
    certified = 0
    for z in ext61.C.sample(rng, 8):
        g = subgrad_FL_on_C(ext61, z)
        if isinstance(g, NotCertified):
            continue
        certified += 1
        Fz = eval_FL(ext61, z).value
        for zp in np.vstack([ext61.C.sample(rng, 50), _outside(ext61, rng, 50)]):
            assert eval_FL(ext61, zp).value >= Fz + g @ (zp - z) - 2 * TOL
    assert certified > 0


def test_subgradient_interior_cases():
    C = ConstraintSetC.box([-1.0, -1.0], [1.0, 1.0])
    f = MaxAffine([[1.0, 0.0], [0.0, 3.0]])
    z = np.array([0.5, 0.0])
    g = subgrad_FL_on_C(LipschitzExtension(f, C, 1.0), z)
    assert np.array_equal(g, [1.0, 0.0])
    z = np.array([0.0, 0.5])
    out = subgrad_FL_on_C(LipschitzExtension(f, C, 1.0), z)
    assert isinstance(out, NotCertified) and not out
    with pytest.raises(UsageError):
        subgrad_FL_on_C(LipschitzExtension(f, C, 1.0), [2.0, 0.0])


def test_subgradient_on_boundary_uses_normal_cone():
    # f = 3 z_2 on the box; at the bottom face the normal cone absorbs the excess
    C = ConstraintSetC.box([-1.0, -1.0], [1.0, 1.0])
    ext = LipschitzExtension(MaxAffine([[0.0, 3.0]]), C, 1.0)
    g = subgrad_FL_on_C(ext, [0.0, -1.0])
    assert np.allclose(g, [0.0, 0.0])


def _ray_slope(ext, y, z0, d):
    phi = [y @ (z0 + t * d) - eval_FL(ext, z0 + t * d).value for t in (100.0, 1000.0)]
    return (phi[1] - phi[0]) / 900.0


def test_membership_examples(ext61):
    assert dom_FLstar_membership(ext61, np.zeros(3)) == "member"
    y = np.ones(3) * 2 * ext61.L
    assert dom_FLstar_membership(ext61, y) == "nonmember"
    with pytest.raises(CapabilityError):
        dom_FLstar_membership(LipschitzExtension(MaxCoord(3), ext61.C, 1.0), np.zeros(3))


def test_membership_against_conjugate_growth(ext61):
    rng = np.random.default_rng(7)
    z0 = ext61.C.base
    members = 0
    while members < 4:
        y = rng.standard_normal(3) * 0.2 * ext61.L
        if dom_FLstar_membership(ext61, y) != "member":
            continue
        members += 1
        for d in list(rng.standard_normal((4, 3))) + [y]:
            d = d / np.linalg.norm(d)
            assert _ray_slope(ext61, y, z0, d) <= 1e-6
    y = rng.standard_normal(3)
    y *= 1.5 * ext61.L / np.linalg.norm(y)
    assert dom_FLstar_membership(ext61, y) == "nonmember"
    slope = _ray_slope(ext61, y, z0, y / np.linalg.norm(y))
    assert slope >= 0.5 * (np.linalg.norm(y) - ext61.L)


def test_estimate_L():
    C = ConstraintSetC.box([-1, -1, -1], [1, 1, 1])
    est = estimate_L_on_C(MaxCoord(3), C, 400, np.random.default_rng(8), norm="linf")
    assert 1.0 <= est <= 1.25
    const = MaxAffine([[0.0, 0.0, 0.0]], [3.0])
    assert estimate_L_on_C(const, C, 50) == 0.0
    with pytest.raises(UsageError):
        estimate_L_on_C(const, C, np.ones((5, 3)))
    ext = envelope_from_spec(gen_example61(2))
    e = estimate_L_on_C(ext.f, ext.C, 200)
    assert np.isfinite(e) and 0 < e <= 1.25 * ext.L
