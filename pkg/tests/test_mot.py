import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from motbounds import lp_core
from motbounds.costs import CostSpec, straddle_basket, third_moment_cross
from motbounds.couplings import Coupling2, check_marginals
from motbounds.errors import ConvexOrderViolation, InfeasibleProblem, MarginalMismatch
from motbounds.measure import DiscreteMeasure
from motbounds.mot import (DualCertificate, fixed_barycenter_lp, solve_fixed_barycenter,
                           solve_mot2, solve_mot3, solve_overlapping)
from util import highs_value, random_chain, random_pair, vertex_optimum

D = DiscreteMeasure
CERT_TOL = 1e-7


def certified(res, measures):
    scale = max(1.0, np.abs(res.cost_tensor).max())
    assert res.certificate.violation(res.cost_tensor) <= CERT_TOL * scale
    assert abs(res.certificate.price(measures) - res.value) <= 1e-7 * max(1.0, abs(res.value))


# --- two periods ----------------------------------------------------------

def test_mot2_singleton():
    res = solve_mot2(D.dirac(1.0), D([0, 2], [0.5, 0.5]), lambda x, y: x * y)
    assert res.value == pytest.approx(1.0)
    assert np.allclose(res.coupling.mass, [[0.5, 0.5]])


def test_mot2_two_point_target():
    mx = D([0.5, 1.5], [0.5, 0.5])
    my = D([0, 2], [0.5, 0.5])
    for f in (lambda x, y: x * y, lambda x, y: np.abs(y - x) ** 3, lambda x, y: np.sin(x + y)):
        for sense in ("min", "max"):
            res = solve_mot2(mx, my, f, sense)
            assert np.allclose(res.coupling.mass, [[0.375, 0.125], [0.125, 0.375]], atol=1e-12)


@pytest.mark.parametrize("sense", ["minimize", "maximize"])
def test_mot2_quadratic_identity(sense):
    res = solve_mot2(D.dirac(1.0), D([0, 2], [0.5, 0.5]), lambda x, y: (y - x) ** 2, sense)
    assert res.value == pytest.approx(1.0)


def test_mot2_tuple_unpacking_and_certificate():
    mx, my = random_pair(np.random.default_rng(2), 5, 7)
    value, coupling, cert = solve_mot2(mx, my, lambda x, y: np.abs(y - x))
    assert coupling.is_martingale()
    assert check_marginals(coupling, [mx, my], 1e-9) == []
    assert isinstance(cert, DualCertificate) and cert.w is None


def test_mot2_convex_order_violation():
    with pytest.raises(ConvexOrderViolation):
        solve_mot2(D([0, 2], [0.5, 0.5]), D.dirac(1.0), lambda x, y: x)


@given(st.integers(0, 2**32 - 1), st.sampled_from(["minimize", "maximize"]))
@settings(max_examples=30, deadline=None)
def test_mot2_random_matches_highs_and_certifies(seed, sense):
    rng = np.random.default_rng(seed)
    mx, my = random_pair(rng, rng.integers(2, 6), rng.integers(3, 8))
    a, b = rng.normal(size=2)
    res = solve_mot2(mx, my, lambda x, y: a * x * y**2 + b * np.abs(y - x), sense)
    assert res.value == pytest.approx(highs_value(res.lp), abs=1e-9)
    certified(res, [mx, my])
    # martingale pull-through: E[XY] = E[X^2]
    assert res.coupling.integrate(lambda x, y: x * y) == pytest.approx(mx.moment(2), abs=1e-10)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_min_le_max_within_cost_range(seed):
    rng = np.random.default_rng(seed)
    mx, my = random_pair(rng, 4, 5)
    f = lambda x, y: np.cos(3 * x) * y  # noqa: E731
    lo = solve_mot2(mx, my, f, "min")
    hi = solve_mot2(mx, my, f, "max")
    C = lo.cost_tensor
    assert C.min() - 1e-12 <= lo.value <= hi.value + 1e-12 <= C.max() + 2e-12


# --- three periods --------------------------------------------------------

def test_mot3_forced():
    d1 = D.dirac(1.0)
    mz = D([0, 2], [0.5, 0.5])
    spec = CostSpec(lambda x, y: x + y**2, lambda y, z: y * z, lambda x, z: (x - z) ** 3, 0.7)
    for sense in ("min", "max"):
        res = solve_mot3(d1, d1, mz, spec, sense)
        expect = 0.5 * spec.total(1, 1, 0) + 0.5 * spec.total(1, 1, 2)
        assert res.value == pytest.approx(expect)
        assert np.allclose(res.coupling.mass.ravel(), [0.5, 0.5])


@pytest.mark.parametrize("seed", range(5))
def test_mot3_decouples_at_zero(seed):
    mx, my, mz = random_chain(np.random.default_rng(seed), 4, 5, 6)
    spec = straddle_basket(0.0)
    for sense in ("min", "max"):
        full = solve_mot3(mx, my, mz, spec, sense)
        a = solve_mot2(mx, my, spec.c1, sense)
        b = solve_mot2(my, mz, spec.c2, sense)
        assert full.value == pytest.approx(a.value + b.value, rel=1e-9, abs=1e-12)
        # both projections are two-period optimal
        assert full.coupling.project((0, 1)).integrate(spec.c1) == pytest.approx(a.value, abs=1e-7)
        assert full.coupling.project((1, 2)).integrate(spec.c2) == pytest.approx(b.value, abs=1e-7)


@pytest.mark.parametrize("seed", range(4))
def test_mot3_cube_cost_3x3x3_matches_oracle(seed):
    mx, my, mz = random_chain(np.random.default_rng(seed), 3)
    cube = lambda x, y, z: (x + y + z) ** 3  # noqa: E731
    X, Y, Z = np.meshgrid(mx.atoms, my.atoms, mz.atoms, indexing="ij")
    T = cube(X, Y, Z)
    for sense in ("min", "max"):
        res = solve_mot3(mx, my, mz, T, sense)
        assert res.value == pytest.approx(highs_value(res.lp), rel=1e-10, abs=1e-10)
        assert res.coupling.is_martingale()
        certified(res, [mx, my, mz])
        # the cube splits into marginal moments plus the cross-term cost
        moments = 7 * mx.moment(3) + 4 * my.moment(3) + mz.moment(3)
        cross = res.coupling.integrate(third_moment_cross(1.0).total)
        assert res.value == pytest.approx(moments + cross, abs=1e-9)


def test_mot3_cube_cost_vertex_enumeration():
    # tiny enough (2x2x2) for exhaustive vertex enumeration of the feasible polytope
    mx = D([-0.2, 0.3], [0.6, 0.4])
    my = D([-1.0, 1.0], [0.5, 0.5])
    mz = D([-2.0, 2.0], [0.5, 0.5])
    X, Y, Z = np.meshgrid(mx.atoms, my.atoms, mz.atoms, indexing="ij")
    T = (X + Y + Z) ** 3
    for sense in ("min", "max"):
        res = solve_mot3(mx, my, mz, T, sense)
        best, _ = vertex_optimum(res.lp)
        assert res.value == pytest.approx(best, abs=1e-12)


@given(st.integers(0, 2**32 - 1), st.sampled_from(["minimize", "maximize"]))
@settings(max_examples=15, deadline=None)
def test_mot3_random_matches_highs(seed, sense):
    rng = np.random.default_rng(seed)
    mx, my, mz = random_chain(rng, *rng.integers(2, 6, 3))
    res = solve_mot3(mx, my, mz, third_moment_cross(rng.uniform(0, 2)), sense)
    assert res.value == pytest.approx(highs_value(res.lp), rel=1e-9, abs=1e-9)
    assert check_marginals(res.coupling, [mx, my, mz], 1e-9) == []
    assert res.coupling.is_martingale()
    certified(res, [mx, my, mz])


def test_mot3_convex_order_violation():
    d = D.dirac(0.0)
    with pytest.raises(ConvexOrderViolation):
        solve_mot3(d, D([-1, 1], [0.5, 0.5]), d, straddle_basket())


# --- fixed barycenter -----------------------------------------------------

def test_fixed_barycenter_single_x():
    c3 = lambda x, z: (x - z) ** 2 + z  # noqa: E731
    res = solve_fixed_barycenter(D.dirac(0.0), D([-1, 3], [0.5, 0.5]), 1.0, c3)
    assert res.value == pytest.approx(0.5 * c3(0, -1) + 0.5 * c3(0, 3))


def test_fixed_barycenter_forced_split():
    res = solve_fixed_barycenter(D([0, 1], [0.5, 0.5]), D([-1, 3], [0.5, 0.5]), 1.0,
                                 lambda x, z: x * z, "max")
    assert np.allclose(res.coupling.mass, 0.25)


@pytest.mark.parametrize("sense", ["minimize", "maximize"])
def test_fixed_barycenter_2x4_vertex_enumeration(sense):
    sx = D.uniform([0, 1])
    sz = D.uniform([-1, 0, 2, 3])
    c3 = lambda x, z: x * z**2  # noqa: E731
    res = solve_fixed_barycenter(sx, sz, 1.0, c3, sense)
    best, verts = vertex_optimum(res.lp)
    assert res.value == pytest.approx(best, abs=1e-12)
    assert any(np.allclose(res.coupling.mass.ravel(), v, atol=1e-10) for v in verts)
    # each x-conditional has mean ybar
    rows = res.coupling.mass
    assert np.allclose(rows @ sz.atoms / rows.sum(axis=1), 1.0, atol=1e-8)
    cert = res.certificate
    x, z = cert.grids
    hedge = cert.u[:, None] + cert.v[None, :] + cert.g[:, None] * (z[None, :] - 1.0)
    diff = hedge - res.cost_tensor
    assert (diff if sense == "minimize" else -diff).max() <= 1e-9
    assert np.array_equal(cert.portfolio(), hedge)
    certified(res, [sx, sz])
    back = DualCertificate.from_dict(cert.to_dict())
    assert back.barycenter == 1.0 and np.array_equal(back.portfolio(), hedge)


def test_fixed_barycenter_infeasible():
    with pytest.raises(InfeasibleProblem):
        solve_fixed_barycenter(D.dirac(0.0), D([-1, 3], [0.5, 0.5]), 5.0, lambda x, z: x)
    with pytest.raises(InfeasibleProblem):
        solve_fixed_barycenter(D.dirac(0.0), D([-1, 3], [0.5, 0.5]), 0.5, lambda x, z: x)


# --- overlapping marginals ------------------------------------------------

def optimal_pair(seed, nx, ny, nz, sense="min"):
    mx, my, mz = random_chain(np.random.default_rng(seed), nx, ny, nz)
    spec = straddle_basket()
    pxy = solve_mot2(mx, my, spec.c1, sense).coupling
    pyz = solve_mot2(my, mz, spec.c2, sense).coupling
    return mx, my, mz, pxy, pyz


def test_overlapping_identity_second_step():
    mx, my = random_pair(np.random.default_rng(0), 4, 5)
    pxy = solve_mot2(mx, my, lambda x, y: np.abs(y - x)).coupling
    pyz = Coupling2(my.atoms, my.atoms, np.diag(my.weights))
    c3 = lambda x, z: x * z**2  # noqa: E731
    value, coupling = solve_overlapping(pxy, pyz, c3)
    assert value == pytest.approx(pxy.integrate(c3), abs=1e-12)
    for j in range(len(my)):
        assert np.allclose(coupling.mass[:, j, j], pxy.mass[:, j])


def test_overlapping_two_point_forced():
    # y-conditionals of x and z are two-point, so every per-y problem is forced
    mx = D([-0.5, 0.5], [0.5, 0.5])
    my = D([-1.0, 1.0], [0.5, 0.5])
    mz = D([-2.0, 2.0], [0.5, 0.5])
    pxy = solve_mot2(mx, my, lambda x, y: x * y).coupling
    pyz = solve_mot2(my, mz, lambda x, y: x * y).coupling
    f = lambda x, z: np.abs(z - x)  # noqa: E731
    lo = solve_overlapping(pxy, pyz, f, "min")
    hi = solve_overlapping(pxy, pyz, f, "max")
    assert lo.value == pytest.approx(hi.value)
    X, Y, Z = np.meshgrid(mx.atoms, my.atoms, mz.atoms, indexing="ij")
    direct = solve_mot3(mx, my, mz, f(X, Z), "min", pxy=pxy, pyz=pyz)
    assert lo.value == pytest.approx(direct.value, abs=1e-10)


@pytest.mark.parametrize("seed", range(4))
def test_overlapping_straddle_5x3x5_matches_constrained_lp(seed):
    mx, my, mz, pxy, pyz = optimal_pair(seed, 5, 3, 5)
    X, Y, Z = np.meshgrid(mx.atoms, my.atoms, mz.atoms, indexing="ij")
    T = np.abs(Z - X)
    for sense in ("min", "max"):
        res = solve_overlapping(pxy, pyz, lambda x, z: np.abs(z - x), sense)
        direct = solve_mot3(mx, my, mz, T, sense, pxy=pxy, pyz=pyz)
        assert res.value == pytest.approx(direct.value, abs=1e-7)
        assert res.value == pytest.approx(highs_value(direct.lp), abs=1e-7)
        assert np.abs(res.coupling.project((0, 1)).mass - pxy.mass).max() <= 1e-8
        assert np.abs(res.coupling.project((1, 2)).mass - pyz.mass).max() <= 1e-8
        assert res.coupling.is_martingale()
        assert [e["y"] for e in res.per_y] == my.atoms.tolist()


@pytest.mark.parametrize("seed", range(3))
def test_overlapping_bounded_by_unconstrained(seed):
    mx, my, mz, pxy, pyz = optimal_pair(seed, 4, 4, 5)
    f = lambda x, z: x * z**2  # noqa: E731
    X, Y, Z = np.meshgrid(mx.atoms, my.atoms, mz.atoms, indexing="ij")
    free_min = solve_mot3(mx, my, mz, f(X, Z), "min").value
    free_max = solve_mot3(mx, my, mz, f(X, Z), "max").value
    assert solve_overlapping(pxy, pyz, f, "min").value >= free_min - 1e-9
    assert solve_overlapping(pxy, pyz, f, "max").value <= free_max + 1e-9


def test_overlapping_errors():
    mx, my, mz, pxy, pyz = optimal_pair(0, 3, 4, 5)
    with pytest.raises(MarginalMismatch):
        solve_overlapping(pxy, Coupling2(mz.atoms, mz.atoms, np.diag(mz.weights)), lambda x, z: x)
    skewed = Coupling2(pxy.x_atoms, pxy.y_atoms, np.roll(pxy.mass, 1, axis=0))
    bad = Coupling2(skewed.y_atoms, skewed.y_atoms, np.diag(skewed.marginal_weights(1)))
    with pytest.raises(ValueError):
        solve_overlapping(skewed, bad, lambda x, z: x)


def test_fixed_barycenter_lp_rows():
    lp = fixed_barycenter_lp(D.uniform([0, 1]), D.uniform([-1, 0, 2, 3]), 1.0, np.zeros((2, 4)))
    assert lp.constraint_matrix.shape == (2 + 4 + 2, 8)
    assert lp_core.solve(lp).optimal
