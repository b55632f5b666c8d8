import io

import numpy as np
import pytest
from scipy.optimize import linprog

from helpers import vertex_lp_oracle
from maxdiv.solver import MathProgram, Status, solve
from maxdiv.solver.ipm import solve_ipm


def test_symmetric_qp():
    p = MathProgram(linear=np.zeros(2), quad=2 * np.eye(2), A_eq=[[1, 1]], b_eq=[1])
    r = solve(p)
    assert r.status is Status.OPTIMAL
    np.testing.assert_allclose(r.v, [0.5, 0.5], atol=1e-10)
    assert r.objective == pytest.approx(0.5, abs=1e-12)


def test_lp_corner():
    p = MathProgram(linear=[-1.0], A_in=[[-1.0]], b_in=[-1.0])
    r = solve(p)
    assert r.status is Status.OPTIMAL
    assert r.v[0] == pytest.approx(1.0, abs=1e-12)


def test_contradiction_is_infeasible():
    p = MathProgram(linear=[0.0], A_in=[[1.0], [-1.0]], b_in=[1.0, 0.0])
    assert solve(p).status is Status.INFEASIBLE


def test_unbounded():
    p = MathProgram(linear=[-1.0, 0.0], A_eq=[[0.0, 1.0]], b_eq=[1.0])
    assert solve(p).status is Status.UNBOUNDED


def test_free_variable_can_go_negative():
    # min z  s.t. z >= -3, z free
    p = MathProgram(linear=[1.0], A_in=[[1.0]], b_in=[-3.0], free_vars=frozenset({0}))
    r = solve(p)
    assert r.status is Status.OPTIMAL
    assert r.v[0] == pytest.approx(-3.0, abs=1e-10)


def test_shifted_lower_bounds():
    p = MathProgram(linear=[1.0, 1.0], A_eq=[[1.0, -1.0]], b_eq=[0.0], lower_bounds=[2.0, 0.5])
    r = solve(p)
    np.testing.assert_allclose(r.v, [2.0, 2.0], atol=1e-10)


def test_empty_row_with_nonzero_rhs_is_infeasible():
    p = MathProgram(linear=[1.0], A_eq=[[0.0]], b_eq=[1.0])
    assert solve(p).status is Status.INFEASIBLE


def test_program_validation():
    with pytest.raises(ValueError):
        MathProgram(linear=[1.0, 2.0], A_eq=[[1.0]], b_eq=[1.0])
    with pytest.raises(ValueError):
        MathProgram(linear=[1.0, 2.0], quad=[[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValueError):
        MathProgram(linear=[1.0], free_vars=frozenset({3}))


def _random_bounded_lp(rng, nv, m_in, m_eq):
    x0 = rng.uniform(0, 1, nv)
    A_in = rng.standard_normal((m_in, nv))
    b_in = A_in @ x0 - rng.uniform(0, 1, m_in)
    # a budget row keeps the region bounded
    A_in = np.vstack([A_in, -np.ones(nv)])
    b_in = np.append(b_in, -(x0.sum() + rng.uniform(0.5, 3)))
    A_eq = rng.standard_normal((m_eq, nv))
    b_eq = A_eq @ x0
    c = rng.standard_normal(nv)
    return c, A_eq, b_eq, A_in, b_in


def test_random_lps_match_vertex_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(60):
        nv = int(rng.integers(2, 6))
        m_eq = int(rng.integers(0, 2))
        c, A_eq, b_eq, A_in, b_in = _random_bounded_lp(rng, nv, int(rng.integers(1, 4)), m_eq)
        oracle = vertex_lp_oracle(c, A_eq, b_eq, A_in, b_in)
        r = solve(MathProgram(linear=c, A_eq=A_eq, b_eq=b_eq, A_in=A_in, b_in=b_in))
        assert r.status is Status.OPTIMAL
        assert r.objective == pytest.approx(oracle, rel=1e-6, abs=1e-9)


def test_random_lps_match_scipy_highs():
    rng = np.random.default_rng(12)
    for _ in range(200):
        nv = int(rng.integers(2, 21))
        m_eq = int(rng.integers(0, min(nv, 4)))
        c, A_eq, b_eq, A_in, b_in = _random_bounded_lp(rng, nv, int(rng.integers(1, 12)), m_eq)
        ref = linprog(c, A_ub=-A_in, b_ub=-b_in, A_eq=A_eq if m_eq else None,
                      b_eq=b_eq if m_eq else None, method="highs")
        r = solve(MathProgram(linear=c, A_eq=A_eq, b_eq=b_eq, A_in=A_in, b_in=b_in))
        assert r.status is Status.OPTIMAL
        assert r.objective == pytest.approx(ref.fun, rel=1e-6, abs=1e-9)
        assert r.primal_residual <= 1e-8
        assert r.kkt_residual <= 1e-7


def test_equality_qp_matches_kkt_closed_form():
    rng = np.random.default_rng(13)
    for _ in range(50):
        nv = int(rng.integers(2, 12))
        m = int(rng.integers(1, nv))
        B = rng.standard_normal((nv + 3, nv))
        Q = B.T @ B
        c = rng.standard_normal(nv)
        A = rng.standard_normal((m, nv))
        b = rng.standard_normal(m)
        K = np.block([[Q, A.T], [A, np.zeros((m, m))]])
        x_ref = np.linalg.solve(K, np.concatenate([-c, b]))[:nv]
        p = MathProgram(linear=c, quad=Q, A_eq=A, b_eq=b, free_vars=frozenset(range(nv)))
        r = solve(p)
        assert r.status is Status.OPTIMAL
        np.testing.assert_allclose(r.v, x_ref, atol=1e-8 * (1 + np.abs(x_ref).max()))


def test_deterministic():
    rng = np.random.default_rng(14)
    c, A_eq, b_eq, A_in, b_in = _random_bounded_lp(rng, 8, 5, 1)
    p = MathProgram(linear=c, A_eq=A_eq, b_eq=b_eq, A_in=A_in, b_in=b_in)
    a, b = solve(p), solve(p)
    assert a.v.tobytes() == b.v.tobytes()
    assert a.objective == b.objective


def test_iteration_cap_reports_numerical_failure():
    rng = np.random.default_rng(15)
    c, A_eq, b_eq, A_in, b_in = _random_bounded_lp(rng, 8, 5, 1)
    r = solve_ipm(MathProgram(linear=c, A_eq=A_eq, b_eq=b_eq, A_in=A_in, b_in=b_in), max_iter=1)
    assert r.status is Status.NUMERICAL_FAILURE
    assert r.message


def test_highs_backend_agrees_and_rejects_qp():
    rng = np.random.default_rng(16)
    c, A_eq, b_eq, A_in, b_in = _random_bounded_lp(rng, 6, 4, 1)
    p = MathProgram(linear=c, A_eq=A_eq, b_eq=b_eq, A_in=A_in, b_in=b_in)
    assert solve(p, "highs").objective == pytest.approx(solve(p).objective, rel=1e-8, abs=1e-10)
    with pytest.raises(ValueError):
        solve(MathProgram(linear=[0.0], quad=[[1.0]]), "highs")
    with pytest.raises(ValueError):
        solve(p, "nope")


def test_dump_lists_objective_and_rows():
    p = MathProgram(linear=[1.0, 0.0], A_eq=[[1, 1]], b_eq=[1], A_in=[[1, -1]], b_in=[0],
                    free_vars=frozenset({1}), var_names=("a", "b"))
    buf = io.StringIO()
    text = p.dump(buf) or buf.getvalue()
    assert "a" in text and "b" in text
    assert "=" in text and ">=" in text
