"""Small convex programs over the hull of a finite cloud.

Everything here reduces to one parametrisation: for hull vertices v_j and a
base point x in the hull,

    x + c (y - x),  y in co{v_j},  c >= 1   <=>   x + sum_j mu_j (v_j - x),  mu >= 0,  sum mu >= 1

so the inner set I_K(x) is a polyhedral cone-like region and every question
about it is a linear (or, for Euclidean seminorms, second-order cone)
program in mu.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .core import PseudometricFamily


@dataclass(frozen=True)
class ConeFit:
    """Result of fitting t - x by sum_j mu_j (v_j - x) with sum mu >= 1."""

    objective: float
    mu: np.ndarray
    point: np.ndarray  # f = x + u / c, a point of the hull
    c: float
    feasible: bool = True


def _solve(c, A_ub, b_ub, A_eq=None, b_eq=None, bounds=None):
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    return res if res.status == 0 else None


def hull_distance_inf(V: np.ndarray, y: np.ndarray) -> float:
    """Chebyshev distance from y to co(V), by LP."""
    m, n = V.shape
    # variables: mu (m), s
    cost = np.r_[np.zeros(m), 1.0]
    A_ub = np.block([[V.T, -np.ones((n, 1))], [-V.T, -np.ones((n, 1))]])
    b_ub = np.r_[y, -y]
    A_eq = np.r_[np.ones(m), 0.0][None, :]
    res = _solve(cost, A_ub, b_ub, A_eq, [1.0], [(0, None)] * (m + 1))
    if res is None:
        return float("inf")
    return max(0.0, float(res.x[-1]))


def hull_contains(V: np.ndarray, y: np.ndarray, tol: float) -> bool:
    V = np.atleast_2d(V)
    y = np.asarray(y, float).reshape(-1)
    if np.any(np.max(np.abs(V - y), axis=1) <= tol):
        return True
    return hull_distance_inf(V, y) <= tol


def _finish(V, x, mu, objective) -> ConeFit:
    mu = np.maximum(mu, 0.0)
    c = float(mu.sum())
    u = (V - x).T @ mu
    return ConeFit(float(objective), mu, x + u / c, c)


def fit_inner_set_inf(V: np.ndarray, x: np.ndarray, t: np.ndarray) -> ConeFit:
    """min ||t - x - sum mu_j (v_j - x)||_inf over the cone, then min c among optima."""
    m, n = V.shape
    W = (V - x).T
    r0 = t - x
    # variables: mu (m), s ; |r0 - W mu| <= s
    cost = np.r_[np.zeros(m), 1.0]
    A_ub = np.block([[-W, -np.ones((n, 1))], [W, -np.ones((n, 1))], [-np.ones((1, m)), np.zeros((1, 1))]])
    b_ub = np.r_[-r0, r0, -1.0]
    res = _solve(cost, A_ub, b_ub, bounds=[(0, None)] * (m + 1))
    if res is None:
        return ConeFit(float("inf"), np.zeros(m), x.copy(), 1.0, feasible=False)
    s_star = max(0.0, float(res.x[-1]))
    # second phase: smallest c with the same residual
    cost2 = np.r_[np.ones(m), 0.0]
    A2 = np.vstack([A_ub, np.r_[np.zeros(m), 1.0][None, :]])
    b2 = np.r_[b_ub, s_star * (1 + 1e-9)]
    res2 = _solve(cost2, A2, b2, bounds=[(0, None)] * (m + 1))
    mu = (res2 if res2 is not None else res).x[:m]
    return _finish(V, x, mu, s_star)


def fit_relative(family: PseudometricFamily, V: np.ndarray, x: np.ndarray, t: np.ndarray,
                 scales: dict[str, float]) -> ConeFit:
    """min s subject to ||t - z||_lambda <= s * scales[lambda] for every lambda, z in I_K(x).

    ``scales`` may contain zeros, which pin ||t - z||_lambda to 0.  Among the
    optimal z the one with the smallest c is returned.  Polyhedral families
    are solved as LPs; otherwise a conic program is used.
    """
    if all(family.metric(lam).polyhedral for lam in scales):
        return _fit_relative_lp(family, V, x, t, scales)
    return _fit_relative_conic(family, V, x, t, scales)


def _fit_relative_lp(family, V, x, t, scales) -> ConeFit:
    m, n = V.shape
    W = (V - x).T
    r0 = t - x
    # variables: mu (m), a (n) with a >= |r0 - W mu|, s
    nv = m + n + 1
    rows, rhs = [], []
    I = np.eye(n)
    for sign in (1.0, -1.0):
        # sign*(r0 - W mu) <= a   ->   -sign*W mu - a <= -sign*r0
        rows.append(np.hstack([-sign * W, -I, np.zeros((n, 1))]))
        rhs.append(-sign * r0)
    rows.append(np.r_[-np.ones(m), np.zeros(n + 1)][None, :])
    rhs.append(np.array([-1.0]))
    for lam, scale in scales.items():
        for w in family.metric(lam).l1_forms(family.dimension):
            rows.append(np.r_[np.zeros(m), w, -scale][None, :])
            rhs.append(np.array([0.0]))
    A_ub = np.vstack(rows)
    b_ub = np.concatenate(rhs)
    bounds = [(0, None)] * nv
    cost = np.zeros(nv)
    cost[-1] = 1.0
    res = _solve(cost, A_ub, b_ub, bounds=bounds)
    if res is None:
        return ConeFit(float("inf"), np.zeros(m), x.copy(), 1.0, feasible=False)
    s_star = max(0.0, float(res.x[-1]))
    cost2 = np.r_[np.ones(m), np.zeros(n + 1)]
    A2 = np.vstack([A_ub, np.r_[np.zeros(m + n), 1.0][None, :]])
    b2 = np.r_[b_ub, s_star * (1 + 1e-9)]
    res2 = _solve(cost2, A2, b2, bounds=bounds)
    mu = (res2 if res2 is not None else res).x[:m]
    return _finish(V, x, mu, s_star)


def _cvx_norm(metric, expr):
    import cvxpy as cp

    kind = metric.kind
    if kind == "coordinate_abs":
        return cp.abs(expr[metric.params["coord"]])
    if kind == "weighted_abs":
        return np.asarray(metric.params["weights"], float) @ cp.abs(expr)
    if kind == "euclidean_subset":
        return cp.norm(cp.hstack([expr[i] for i in metric.params["coords"]]), 2)
    if kind == "max_of":
        return cp.maximum(*[_cvx_norm(mm, expr) for mm in metric.params["members"]]) \
            if len(metric.params["members"]) > 1 else _cvx_norm(metric.params["members"][0], expr)
    raise TypeError(f"{metric.label}: custom pseudometrics are not supported by the conic solver")


def _fit_relative_conic(family, V, x, t, scales) -> ConeFit:
    import cvxpy as cp

    m, _ = V.shape
    W = (V - x).T
    mu = cp.Variable(m, nonneg=True)
    s = cp.Variable(nonneg=True)
    r = (t - x) - W @ mu
    cons = [cp.sum(mu) >= 1]
    cons += [_cvx_norm(family.metric(lam), r) <= s * scale for lam, scale in scales.items()]
    prob = cp.Problem(cp.Minimize(s), cons)
    prob.solve()
    if prob.status not in ("optimal", "optimal_inaccurate"):
        return ConeFit(float("inf"), np.zeros(m), x.copy(), 1.0, feasible=False)
    s_star = max(0.0, float(s.value))
    prob2 = cp.Problem(cp.Minimize(cp.sum(mu)), cons + [s <= s_star * (1 + 1e-6) + 1e-9])
    prob2.solve()
    mu_val = mu.value if prob2.status in ("optimal", "optimal_inaccurate") else None
    if mu_val is None:
        prob.solve()
        mu_val = mu.value
    return _finish(V, x, np.asarray(mu_val, float), s_star)
