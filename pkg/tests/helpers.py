"""Instance generators and independent oracles shared by the test modules."""

import itertools

import numpy as np

from maxdiv.risk import asset_risks, risk
from maxdiv.scenarios import ScenarioMatrix


def equicorrelated_cov(sigma, c):
    sigma = np.asarray(sigma, dtype=float)
    C = np.full((sigma.size, sigma.size), c)
    np.fill_diagonal(C, 1.0)
    return C * np.outer(sigma, sigma)


def sample_with_cov(cov, T, rng, mean=None):
    """Return scenarios whose 1/T sample covariance equals ``cov`` up to rounding."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0]
    Z = rng.standard_normal((T, n))
    Z -= Z.mean(axis=0)
    # whiten so that Z'Z / T is exactly the identity
    L = np.linalg.cholesky(Z.T @ Z / T)
    Z = np.linalg.solve(L, Z.T).T
    R = Z @ np.linalg.cholesky(cov).T
    if mean is not None:
        R += np.asarray(mean, dtype=float)
    return ScenarioMatrix(R)


def random_scenarios(rng, T, n, drift=0.0005, scale=0.01, common=0.5):
    """Correlated returns with a shared factor and asset-specific drifts."""
    f = rng.standard_normal((T, 1))
    e = rng.standard_normal((T, n))
    mu = drift * (1 + rng.uniform(-1, 1, n))
    vol = scale * rng.uniform(0.5, 2.0, n)
    return ScenarioMatrix(mu + vol * (common * f + (1 - common) * e))


def comonotone_scenarios(rng, T, n):
    """Every asset an increasing affine map of one driver: all measures additive."""
    z = rng.standard_normal(T)
    z -= z.mean()
    slopes = rng.uniform(0.005, 0.03, n)
    shifts = rng.uniform(-1e-4, 1e-4, n)
    return ScenarioMatrix(shifts + np.outer(z, slopes))


def simplex_grid(n, step):
    """All points of the simplex with coordinates on a ``step`` lattice."""
    m = int(round(1 / step))
    pts = [c for c in itertools.product(range(m + 1), repeat=n - 1) if sum(c) <= m]
    pts = np.array(pts, dtype=float)
    return np.column_stack([pts, m - pts.sum(axis=1)]) / m


def grid_max_dr(s, spec, step=0.01):
    """Best diversification ratio over a simplex lattice, evaluated directly."""
    X = simplex_grid(s.n_assets, step)
    rho = asset_risks(s, spec)
    den = np.asarray(risk(s, X, spec), dtype=float)
    ok = den > 0
    return float(np.max((X @ rho)[ok] / den[ok]))


def vertex_lp_oracle(c, A_eq, b_eq, A_in, b_in):
    """Minimum of ``c'v`` over ``{A_eq v = b_eq, A_in v >= b_in, v >= 0}`` by vertex enumeration.

    Returns ``None`` when no vertex is feasible. Assumes the region is bounded.
    """
    nv = c.size
    rows = [(A_eq[i], b_eq[i], True) for i in range(A_eq.shape[0])]
    rows += [(A_in[i], b_in[i], False) for i in range(A_in.shape[0])]
    rows += [(np.eye(nv)[i], 0.0, False) for i in range(nv)]
    eqs = [k for k, r in enumerate(rows) if r[2]]
    ineqs = [k for k, r in enumerate(rows) if not r[2]]
    best = None
    for active in itertools.combinations(ineqs, nv - len(eqs)):
        idx = eqs + list(active)
        M = np.array([rows[k][0] for k in idx])
        rhs = np.array([rows[k][1] for k in idx])
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        v = np.linalg.solve(M, rhs)
        if np.any(v < -1e-9):
            continue
        if A_eq.size and np.abs(A_eq @ v - b_eq).max() > 1e-9:
            continue
        if A_in.size and np.any(A_in @ v - b_in < -1e-9):
            continue
        val = float(c @ v)
        best = val if best is None else min(best, val)
    return best
