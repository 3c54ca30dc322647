import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from motbounds import lp_core
from motbounds.errors import InternalSolverError
from motbounds.lp_core import LinearProgram, check_solution, solve, solve_lexicographic
from util import highs_value, vertex_optimum


def transport_lp(a, b, C, sense="minimize"):
    n, m = len(a), len(b)
    A = np.vstack([np.kron(np.eye(n), np.ones(m)), np.kron(np.ones(n), np.eye(m))])
    return LinearProgram(np.asarray(C, float).ravel(), A, np.concatenate([a, b]), sense)


def assert_certified(lp, sol):
    chk = check_solution(lp, sol)
    assert chk["primal_residual"] <= 1e-8 * (1 + np.abs(lp.rhs).max())
    assert chk["duality_gap"] <= 1e-7 * (1 + abs(sol.value))
    assert chk["dual_violation"] <= 1e-8 * max(1, np.abs(lp.objective).max())
    assert chk["complementarity"] <= 1e-8 * max(1, np.abs(lp.objective).max())


# --- worked examples ------------------------------------------------------

def test_simple_min():
    sol = solve(LinearProgram([1, 0], [[1, 1]], [1]))
    assert sol.optimal
    assert sol.value == 0.0
    assert sol.primal.tolist() == [0.0, 1.0]


def test_unbounded():
    sol = solve(LinearProgram([-1, 0], [[1, -1]], [0]))
    assert sol.status == lp_core.UNBOUNDED


def test_infeasible_is_status_not_exception():
    sol = solve(LinearProgram([1, 1], [[1, 1], [1, 1]], [1, 2]))
    assert sol.status == lp_core.INFEASIBLE
    assert not sol.optimal


def test_transport_2x2_diagonal():
    lp = transport_lp([0.5, 0.5], [0.5, 0.5], [[0, 1], [1, 0]])
    sol = solve(lp)
    assert sol.value == 0.0
    assert np.allclose(sol.primal.reshape(2, 2), [[0.5, 0], [0, 0.5]])
    assert_certified(lp, sol)


def test_lexicographic_examples():
    lp = LinearProgram([0, 0], [[1, 1]], [1])
    assert np.allclose(solve_lexicographic(lp, [1, 0], "minimize").primal, [0, 1])
    lp = LinearProgram([1, 1], [[1, 1]], [1])
    assert np.allclose(solve_lexicographic(lp, [1, 0], "maximize").primal, [1, 0])


def test_lexicographic_degenerate_3x3_matches_vertex_enumeration():
    # cost constant on the anti-diagonal band: many optimal plans
    a = b = np.full(3, 1 / 3)
    C = np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]], float)
    lp = transport_lp(a, b, C)
    best, optimal_vertices = vertex_optimum(lp)
    assert len(optimal_vertices) > 1
    sol = solve(lp)
    assert sol.value == pytest.approx(best, abs=1e-12)
    rng = np.random.default_rng(0)
    for _ in range(10):
        sec = rng.normal(size=9)
        for sense in ("minimize", "maximize"):
            lex = solve_lexicographic(lp, sec, sense)
            vals = [sec @ v for v in optimal_vertices]
            target = min(vals) if sense == "minimize" else max(vals)
            assert lex.value == pytest.approx(target, abs=1e-10)
            assert lp.objective @ lex.primal <= best + 1e-7 * (1 + abs(best))
            # the returned point is one of the enumerated optimal vertices
            assert any(np.allclose(lex.primal, v, atol=1e-9) for v in optimal_vertices)


def test_lexicographic_requires_optimal_primary():
    lp = LinearProgram([-1, 0], [[1, -1]], [0])
    with pytest.raises(ValueError):
        solve_lexicographic(lp, [1, 1])


def test_maximize_duals_certify():
    rng = np.random.default_rng(1)
    a = rng.dirichlet(np.ones(4))
    b = rng.dirichlet(np.ones(5))
    lp = transport_lp(a, b, rng.normal(size=(4, 5)), "maximize")
    sol = solve(lp)
    assert sol.value == pytest.approx(highs_value(lp), abs=1e-12)
    assert_certified(lp, sol)


def test_negative_rhs_rows_flipped():
    lp = LinearProgram([1, 2], [[-1, -1]], [-1])
    sol = solve(lp)
    assert sol.primal.tolist() == [1.0, 0.0]
    assert_certified(lp, sol)


def test_redundant_rows_get_zero_dual():
    lp = LinearProgram([1, 2, 3], [[1, 1, 1], [2, 2, 2], [1, 0, 0]], [1, 2, 0.5])
    sol = solve(lp)
    assert sol.optimal
    assert sol.value == pytest.approx(0.5 + 2 * 0.5)
    assert_certified(lp, sol)


def test_no_rows():
    assert solve(LinearProgram(np.ones(3), np.zeros((0, 3)), [])).value == 0.0
    assert solve(LinearProgram(-np.ones(3), np.zeros((0, 3)), [])).status == lp_core.UNBOUNDED


def test_dump_format():
    lp = LinearProgram([1, 0.5], [[1, 1]], [1], "max")
    buf = io.StringIO()
    lp.dump(buf)
    assert buf.getvalue() == "maximize 1 2\n1 0.5\n1 1 = 1\n"


def test_shape_validation():
    with pytest.raises(ValueError):
        LinearProgram([1, 2, 3], [[1, 1]], [1])
    with pytest.raises(ValueError):
        LinearProgram([1, 2], [[1, 1]], [1, 2])
    with pytest.raises(ValueError):
        LinearProgram([1, 2], [[1, 1]], [1], "sideways")


# --- properties -----------------------------------------------------------

@given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.integers(2, 6))
@settings(max_examples=40, deadline=None)
def test_random_transport_matches_highs(seed, n, m):
    rng = np.random.default_rng(seed)
    lp = transport_lp(rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(m)),
                      rng.integers(0, 4, size=(n, m)), rng.choice(["minimize", "maximize"]))
    sol = solve(lp)
    assert sol.value == pytest.approx(highs_value(lp), abs=1e-10)
    assert_certified(lp, sol)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_random_general_lp_matches_highs(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(2, 6), rng.integers(6, 12)
    A = rng.normal(size=(m, n))
    x0 = rng.uniform(0, 1, n)
    lp = LinearProgram(rng.uniform(0.1, 2, n), A, A @ x0)  # feasible and bounded (c > 0)
    sol = solve(lp)
    assert sol.value == pytest.approx(highs_value(lp), rel=1e-9, abs=1e-10)
    assert_certified(lp, sol)


@given(st.integers(0, 2**32 - 1), st.sampled_from([1e-3, 0.5, 7.0, 1e4]))
@settings(max_examples=30, deadline=None)
def test_scaling_invariance(seed, lam):
    rng = np.random.default_rng(seed)
    lp = transport_lp(rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4)),
                      rng.integers(0, 3, size=(4, 4)))
    scaled = LinearProgram(lam * lp.objective, lp.constraint_matrix, lp.rhs)
    assert np.array_equal(solve(lp).primal, solve(scaled).primal)


def test_determinism():
    rng = np.random.default_rng(5)
    lp = transport_lp(rng.dirichlet(np.ones(6)), rng.dirichlet(np.ones(6)),
                      rng.integers(0, 2, size=(6, 6)))
    a, b = solve(lp), solve(lp)
    assert np.array_equal(a.primal, b.primal) and np.array_equal(a.duals, b.duals)
    assert a.basis == b.basis


def test_lexicographic_infeasible_face_is_internal_error(monkeypatch):
    lp = LinearProgram([1, 1], [[1, 1]], [1])
    bogus = lp_core.LPSolution(lp_core.OPTIMAL, -5.0, np.zeros(2), np.zeros(1))
    with pytest.raises(InternalSolverError):
        solve_lexicographic(lp, [1, 0], "minimize", bogus)
