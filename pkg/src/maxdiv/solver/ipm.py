"""Primal-dual interior-point backend (Mehrotra predictor-corrector).

The program is brought to the standard form

    minimize 1/2 x'Qx + c'x   s.t.  Ax = b,  x_j >= 0 (j bounded),  x_j free otherwise

by shifting finite lower bounds to zero and adding a surplus variable per
inequality row. Each iteration factors the regularized augmented system

    [ Q + X^-1 S + rho I    A'       ]
    [ A                    -delta I  ]

once with a sparse LU and reuses it for predictor and corrector, with
iterative refinement against the unregularized matrix. A converged point
is then polished: bounds with ``x_j < s_j`` are fixed at zero and the
remaining equality-constrained KKT system is solved directly, which
recovers vertex-exact LP solutions and sharp QP solutions.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .program import SolveResult, Status

MAX_ITER = 200
GAP_TOL = 1e-9
FEAS_TOL = 1e-9
_REG_PRIMAL = 1e-10
_REG_DUAL = 1e-10
_STEP_FRACTION = 0.995
_DIVERGED = 1e13
_TIGHT_GAP = 1e-13
_EXTRA_ITER = 25


class _StandardForm:
    """Scaled standard-form copy of a MathProgram plus the maps back."""

    def __init__(self, p):
        n, m_eq, m_in = p.n_vars, p.n_eq, p.n_in
        lb = p.lower_bounds
        finite = np.isfinite(lb)
        self.shift = np.where(finite, lb, 0.0)
        self.n, self.m_eq, self.m_in = n, m_eq, m_in
        self.N = n + m_in

        S = sp.vstack([sp.csr_matrix(p.A_eq), sp.csr_matrix(p.A_in)], format="csr")
        S = S if S.shape[1] == n else sp.csr_matrix((m_eq + m_in, n))
        b = np.concatenate([p.b_eq - p.A_eq @ self.shift, p.b_in - p.A_in @ self.shift])

        Qn = np.zeros((n, n)) if p.quad is None else p.quad
        c = np.concatenate([p.linear + Qn @ self.shift, np.zeros(m_in)])
        self.has_quad = p.quad is not None and bool(np.any(p.quad))
        Q = sp.block_diag([sp.csr_matrix(Qn), sp.csr_matrix((m_in, m_in))], format="csr")
        self.offset = float(p.linear @ self.shift + 0.5 * self.shift @ Qn @ self.shift)

        # objective scaling keeps duals and gaps O(1) for tiny variances
        scale = max(np.abs(c).max(initial=0.0), np.abs(Qn).max(initial=0.0))
        self.obj_scale = 1.0 / scale if scale > 0 else 1.0

        # row equilibration on the original columns; each surplus column is
        # then rescaled to -1, which is free since surpluses carry no cost
        m = m_eq + m_in
        row_norm = np.asarray(abs(S).max(axis=1).todense()).ravel() if m else np.zeros(0)
        is_eq = np.arange(m) < m_eq
        self.zero_rows = (row_norm == 0.0) & is_eq
        empty_in = (row_norm == 0.0) & ~is_eq
        self.inconsistent = bool(np.any(np.abs(b[self.zero_rows]) > FEAS_TOL)
                                 or np.any(b[empty_in] > FEAS_TOL))
        keep = ~self.zero_rows
        self.keep = keep
        self.row_scale = np.where(row_norm > 0, 1.0 / np.where(row_norm > 0, row_norm, 1.0), 1.0)
        self.row_scale[self.zero_rows] = 0.0
        surplus = sp.vstack([sp.csr_matrix((m_eq, m_in)), -sp.identity(m_in, format="csr")], format="csr")
        A = sp.hstack([sp.diags(self.row_scale) @ S, surplus], format="csr")
        self.A = A[keep].tocsr()
        self.b = self.row_scale[keep] * b[keep]
        self.c = c * self.obj_scale
        self.Q = (Q * self.obj_scale).tocsr()
        self.bounded = np.concatenate([finite, np.ones(m_in, dtype=bool)])
        self.m = self.A.shape[0]

    def primal(self, x):
        return x[: self.n] + self.shift

    def duals(self, y):
        full = np.zeros(self.zero_rows.size)
        full[self.keep] = y
        full = full * self.row_scale / self.obj_scale
        return full[: self.m_eq], full[self.m_eq:]


def _kkt_matrix(Q, A, d, rho, delta):
    m = A.shape[0]
    top = Q + sp.diags(d + rho)
    if m == 0:
        return sp.csc_matrix(top)
    return sp.bmat([[top, A.T], [A, sp.diags(np.full(m, -delta))]], format="csc")


class _Factor:
    def __init__(self, Q, A, d, rho=_REG_PRIMAL, delta=_REG_DUAL):
        self.N = Q.shape[0]
        self.K = _kkt_matrix(Q, A, d, rho, delta)
        self.K_true = _kkt_matrix(Q, A, d, 0.0, 0.0)
        self.lu = spla.splu(self.K)

    def solve(self, rhs, refine=3):
        z = self.lu.solve(rhs)
        scale = 1.0 + np.abs(rhs).max(initial=0.0)
        for _ in range(refine):
            res = rhs - self.K_true @ z
            if np.abs(res).max(initial=0.0) <= 1e-15 * scale:
                break
            z = z + self.lu.solve(res)
        return z


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


def _measures(Q, c, A, b, bounded, x, y, s):
    Qx = Q @ x
    rp = b - A @ x
    rd = c + Qx - A.T @ y - s
    xQx = float(x @ Qx)
    pobj = float(c @ x) + 0.5 * xQx
    comp = float(x[bounded] @ s[bounded])
    pres = np.abs(rp).max(initial=0.0) / (1.0 + np.abs(b).max(initial=0.0))
    dres = np.abs(rd).max(initial=0.0) / (1.0 + np.abs(c).max(initial=0.0))
    gap = abs(comp) / (1.0 + abs(pobj))
    return rp, rd, pobj, comp, pres, dres, gap


def _initial_point(Q, c, A, b, bounded):
    N, m = A.shape[1], A.shape[0]
    f = _Factor(sp.csr_matrix((N, N)), A, np.ones(N), rho=0.0, delta=1e-8)
    z = f.solve(np.concatenate([np.zeros(N), b]))
    x = z[:N]
    z = f.solve(np.concatenate([c, np.zeros(m)]))
    s, y = z[:N], z[N:]
    s = np.where(bounded, s, 0.0)
    xb, sb = x[bounded], s[bounded]
    if xb.size:
        xb = xb + max(-1.5 * xb.min(), 0.0)
        sb = sb + max(-1.5 * sb.min(), 0.0)
        if xb.sum() <= 0:
            xb = xb + 1.0
        if sb.sum() <= 0:
            sb = sb + 1.0
        xs = float(xb @ sb)
        xb = xb + 0.5 * xs / sb.sum()
        sb = sb + 0.5 * xs / xb.sum()
        # keep a floor so the first scaling matrix is well defined
        xb = np.maximum(xb, 1e-4)
        sb = np.maximum(sb, 1e-4)
        x[bounded], s[bounded] = xb, sb
    return x, y, s


def _ipm_core(Q, c, A, b, bounded, has_quad, max_iter=MAX_ITER, tol=GAP_TOL, start=None):
    N = A.shape[1]
    nb = int(bounded.sum())
    x, y, s = _initial_point(Q, c, A, b, bounded) if start is None else (v.copy() for v in start)
    best, since_best, reason = np.inf, 0, "iteration cap reached"
    tiny_steps = 0
    for it in range(max_iter + 1):
        rp, rd, pobj, comp, pres, dres, gap = _measures(Q, c, A, b, bounded, x, y, s)
        if pres <= FEAS_TOL and dres <= FEAS_TOL and gap <= tol:
            return dict(x=x, y=y, s=s, converged=True, iterations=it, reason="converged")
        if it == max_iter:
            break
        if max(np.abs(x).max(initial=0), np.abs(y).max(initial=0)) > _DIVERGED:
            reason = "iterates diverged"
            break
        merit = max(pres, dres, gap)
        if merit < 0.9 * best:
            best, since_best = merit, 0
        else:
            since_best += 1
            if since_best > 30:
                reason = "no progress"
                break
        mu = comp / nb if nb else 0.0
        d = np.zeros(N)
        d[bounded] = s[bounded] / x[bounded]
        try:
            f = _Factor(Q, A, d)
        except RuntimeError as exc:
            reason = f"factorization failed: {exc}"
            break

        def direction(rc):
            r1 = -rd.copy()
            r1[bounded] += rc / x[bounded]
            z = f.solve(np.concatenate([r1, rp]))
            dx, dy = z[:N], -z[N:]
            ds = np.zeros(N)
            ds[bounded] = (rc - s[bounded] * dx[bounded]) / x[bounded]
            return dx, dy, ds

        xb, sb = x[bounded], s[bounded]
        dx_a, dy_a, ds_a = direction(-xb * sb)
        ap = _max_step(xb, dx_a[bounded])
        ad = _max_step(sb, ds_a[bounded])
        if has_quad:
            ap = ad = min(ap, ad)
        if nb:
            mu_aff = float((xb + ap * dx_a[bounded]) @ (sb + ad * ds_a[bounded])) / nb
            sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0
            rc = sigma * mu - xb * sb - dx_a[bounded] * ds_a[bounded]
        else:
            rc = np.zeros(0)
        dx, dy, ds = direction(rc)
        ap = min(1.0, _STEP_FRACTION * _max_step(xb, dx[bounded]))
        ad = min(1.0, _STEP_FRACTION * _max_step(sb, ds[bounded]))
        if has_quad:
            ap = ad = min(ap, ad)
        if not np.all(np.isfinite(dx)) or not np.all(np.isfinite(dy)):
            reason = "non-finite search direction"
            break
        tiny_steps = tiny_steps + 1 if max(ap, ad) < 1e-10 else 0
        if tiny_steps >= 3:
            reason = "step length collapsed"
            break
        x = x + ap * dx
        y = y + ad * dy
        s = s + ad * ds
        s[~bounded] = 0.0
    return dict(x=x, y=y, s=s, converged=False, iterations=it, reason=reason)


def _polish(Q, c, A, b, bounded, x, y, s):
    N, m = A.shape[1], A.shape[0]
    active = bounded & (x < s)
    inactive = ~active
    idx = np.flatnonzero(inactive)
    Qi = Q[idx][:, idx]
    Ai = A[:, idx]
    rhs = np.concatenate([-c[idx], b])
    try:
        f = _Factor(Qi, Ai, np.zeros(idx.size), rho=1e-9, delta=1e-9)
    except RuntimeError:
        return None
    z = np.concatenate([x[idx], -y])
    for _ in range(30):
        res = rhs - f.K_true @ z
        if np.abs(res).max(initial=0.0) <= 1e-15 * (1.0 + np.abs(rhs).max(initial=0.0)):
            break
        z = z + f.lu.solve(res)
    xn = np.zeros(N)
    xn[idx] = z[: idx.size]
    yn = -z[idx.size:]
    scale = 1.0 + np.abs(xn).max(initial=0.0)
    low = xn[bounded & inactive]
    if low.size and low.min() < -1e-11 * scale:
        return None
    xn[bounded] = np.maximum(xn[bounded], 0.0)
    sn = c + Q @ xn - A.T @ yn
    if np.any(active) and sn[active].min() < -1e-9 * (1.0 + np.abs(c).max(initial=0.0)):
        return None
    sn[inactive] = 0.0
    sn[active] = np.maximum(sn[active], 0.0)
    return xn, yn, sn


def _merit(Q, c, A, b, bounded, x, y, s):
    _, _, _, _, pres, dres, gap = _measures(Q, c, A, b, bounded, x, y, s)
    return max(pres, dres, gap)


def _diagnose(sf, core):
    """Classify a non-converged run via a phase-one feasibility LP."""
    A, b = sf.A, sf.b
    m, N = A.shape
    A1 = sp.hstack([A, sp.identity(m), -sp.identity(m)], format="csr")
    c1 = np.concatenate([np.zeros(N), np.ones(2 * m)])
    b1 = np.concatenate([sf.bounded, np.ones(2 * m, dtype=bool)])
    Q1 = sp.csr_matrix((N + 2 * m, N + 2 * m))
    ph1 = _ipm_core(Q1, c1, A1, b, b1, False)
    infeas = float(c1 @ ph1["x"])
    if ph1["converged"] and infeas > 1e-7 * (1.0 + np.abs(b).max(initial=0.0)):
        return Status.INFEASIBLE, f"phase-one residual {infeas:.3e}"
    if ph1["converged"] and np.abs(core["x"]).max(initial=0.0) > 1e8:
        return Status.UNBOUNDED, "primal iterates diverged on a feasible program"
    if not ph1["converged"]:
        return Status.NUMERICAL_FAILURE, f"{core['reason']}; phase one also failed ({ph1['reason']})"
    return Status.NUMERICAL_FAILURE, core["reason"]


def solve_ipm(p, max_iter=MAX_ITER, tol=GAP_TOL, polish=True):
    """Solve a :class:`MathProgram` with the interior-point method."""
    sf = _StandardForm(p)
    nan_v = np.full(p.n_vars, np.nan)
    if sf.inconsistent:
        return SolveResult(Status.INFEASIBLE, nan_v, float("nan"), float("inf"),
                           message="empty constraint row with nonzero right-hand side")
    Q, c, A, b, bounded = sf.Q, sf.c, sf.A, sf.b, sf.bounded
    core = _ipm_core(Q, c, A, b, bounded, sf.has_quad, max_iter=max_iter, tol=tol)
    if not core["converged"]:
        status, msg = _diagnose(sf, core)
        v = sf.primal(core["x"])
        return SolveResult(status, v, float("nan"), float("inf"), p.primal_residual(v),
                           iterations=core["iterations"], message=msg)
    x, y, s = core["x"], core["y"], core["s"]
    polished = False
    if polish:
        out = _polish(Q, c, A, b, bounded, x, y, s)
        if out is not None:
            m_new = _merit(Q, c, A, b, bounded, *out)
            if m_new <= max(_merit(Q, c, A, b, bounded, x, y, s), 1e-13):
                x, y, s = out
                polished = True
    if not polished:
        # degenerate optimal faces defeat the active-set guess; tighten instead
        more = _ipm_core(Q, c, A, b, bounded, sf.has_quad, max_iter=_EXTRA_ITER,
                         tol=_TIGHT_GAP, start=(x, y, s))
        if _merit(Q, c, A, b, bounded, more["x"], more["y"], more["s"]) < _merit(Q, c, A, b, bounded, x, y, s):
            x, y, s = more["x"], more["y"], more["s"]
    kkt = _merit(Q, c, A, b, bounded, x, y, s)
    v = sf.primal(x)
    pres = p.primal_residual(v)
    duals_eq, duals_in = sf.duals(y)
    status, msg = Status.OPTIMAL, "optimal"
    if pres > 1e-8 or kkt > 1e-7:
        status, msg = Status.NUMERICAL_FAILURE, f"residuals too large (primal {pres:.2e}, kkt {kkt:.2e})"
    return SolveResult(status, v, p.objective(v), kkt, pres, iterations=core["iterations"],
                       polished=polished, duals_eq=duals_eq, duals_in=duals_in, message=msg)
