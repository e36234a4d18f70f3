"""The potential-induced order and finite Bishop-Phelps / Ekeland searches.

u <= v  iff  d_lambda(u, v) <= phi_lambda(u) - phi_lambda(v) for every lambda.

Maximality is only ever decided relative to a finite candidate set, and
reports say "maximal among candidates".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import PseudometricFamily, float_tol
from .fixedpoint import PotentialFamily
from .hausdorff import PointCloud


@dataclass(frozen=True)
class OrderContext:
    family: PseudometricFamily
    potentials: PotentialFamily
    tol: float = field(default_factory=float_tol)

    def __post_init__(self):
        if not self.family.separating:
            raise ValueError("the order is only antisymmetric on separating families")
        missing = set(self.family.indices) - set(self.potentials.per_index)
        if missing:
            raise KeyError(f"no potential for indices {sorted(missing)}")


def precedes(ctx: OrderContext, u, v) -> bool:
    fam, phi = ctx.family, ctx.potentials
    u, v = fam.point(u), fam.point(v)
    return all(fam.eval(lam, u, v) <= phi(lam, u) - phi(lam, v) + ctx.tol for lam in fam.indices)


def _order_matrix(ctx: OrderContext, P: np.ndarray) -> np.ndarray:
    """M[i, j] = precedes(P[i], P[j]), vectorised."""
    fam, phi = ctx.family, ctx.potentials
    M = np.ones((len(P), len(P)), dtype=bool)
    for lam in fam.indices:
        vals = np.array([phi(lam, p) for p in P])
        D = fam.pairwise(lam, P, P)
        M &= D <= vals[:, None] - vals[None, :] + ctx.tol
    return M


def _maximal_mask(M: np.ndarray, P: np.ndarray, tol: float) -> np.ndarray:
    # v is maximal iff no w distinct from v has v <= w
    distinct = np.max(np.abs(P[:, None, :] - P[None, :, :]), axis=-1) > tol
    return ~np.any(M & distinct, axis=1)


def maximal_elements(ctx: OrderContext, candidates: PointCloud) -> PointCloud:
    """All candidates not strictly dominated by another candidate; O(n^2) brute force."""
    P = candidates.points
    return PointCloud(P[_maximal_mask(_order_matrix(ctx, P), P, ctx.tol)])


@dataclass
class ConditionReport:
    """Verification of the optimality conditions at the chosen point."""

    point: np.ndarray
    conditions: dict[str, bool]
    strict_margin: float  # min over checked x of max_mu phi_mu(x) + d_mu(x, x*) - phi_mu(x*)
    checked_against: int
    scope: str = "maximal among candidates"

    @property
    def passed(self) -> bool:
        return all(self.conditions.values())


def _strict_margin(ctx: OrderContext, xs, P: np.ndarray) -> tuple[float, int]:
    fam, phi = ctx.family, ctx.potentials
    dist = np.max(np.abs(P - xs), axis=1)
    others = P[dist > ctx.tol]
    if len(others) == 0:
        return float("inf"), 0
    margins = np.full(len(others), -np.inf)
    for lam in fam.indices:
        vals = np.array([phi(lam, p) for p in others])
        d = fam.pairwise(lam, others, xs)[:, 0]
        margins = np.maximum(margins, vals + d - phi(lam, xs))
    return float(margins.min()), len(others)


def _pick(ctx: OrderContext, x0, P: np.ndarray, mask: np.ndarray) -> int:
    """Among masked rows pick the one closest to x0 in max_lambda d_lambda, lowest index on ties."""
    idx = np.flatnonzero(mask)
    dmax = np.max([ctx.family.pairwise(lam, x0, P[idx])[0] for lam in ctx.family.indices], axis=0)
    return int(idx[np.argmin(dmax)])


def bishop_phelps_search(ctx: OrderContext, x0, candidates: PointCloud) -> tuple[np.ndarray, ConditionReport]:
    """A maximal element above x0, with both optimality conditions verified.

    Conditions: ``descent`` phi(x*) + d(x0, x*) <= phi(x0) for all lambda,
    and ``strict`` for every other candidate x some mu has
    phi_mu(x*) < phi_mu(x) + d_mu(x, x*) by more than the float tolerance.
    """
    fam, phi = ctx.family, ctx.potentials
    x0 = fam.point(x0)
    P = candidates.points
    if not candidates.contains(x0, ctx.tol):
        raise ValueError("x0 must be one of the candidates")
    up = np.array([precedes(ctx, x0, p) for p in P])
    U = P[up]
    local = _maximal_mask(_order_matrix(ctx, U), U, ctx.tol)
    mask = np.zeros(len(P), dtype=bool)
    mask[np.flatnonzero(up)[local]] = True
    xs = P[_pick(ctx, x0, P, mask)].copy()
    descent = all(phi(lam, xs) + fam.eval(lam, x0, xs) <= phi(lam, x0) + ctx.tol for lam in fam.indices)
    margin, n = _strict_margin(ctx, xs, P)
    report = ConditionReport(xs, {"descent": descent, "strict": margin > ctx.tol}, margin, n)
    return xs, report


class HypothesisViolation(ValueError):
    def __init__(self, index: str, value: float, bound: float):
        super().__init__(f"phi[{index}](x0) = {value:g} exceeds min over candidates + delta = {bound:g}")
        self.index = index
        self.value = value
        self.bound = bound


def ekeland_search(ctx: OrderContext, x0, delta: dict[str, float], candidates: PointCloud
                   ) -> tuple[np.ndarray, ConditionReport]:
    """Ekeland point for a delta-approximate minimizer x0 of every potential.

    Requires phi_lambda(x0) <= min over candidates of phi_lambda + delta_lambda.
    Runs the Bishop-Phelps search inside the sublevel set
    Y = {x : phi_lambda(x) <= phi_lambda(x0) for all lambda} and verifies
    ``sublevel`` phi(x*) <= phi(x0), ``near`` d(x0, x*) <= delta and
    ``strict`` against every candidate, including those outside Y.
    """
    fam, phi = ctx.family, ctx.potentials
    x0 = fam.point(x0)
    P = candidates.points
    for lam in fam.indices:
        if not delta[lam] > 0:
            raise ValueError(f"delta[{lam}] must be positive")
        bound = min(phi(lam, p) for p in P) + delta[lam]
        if phi(lam, x0) > bound + ctx.tol:
            raise HypothesisViolation(lam, phi(lam, x0), bound)
    inY = np.array([all(phi(lam, p) <= phi(lam, x0) + ctx.tol for lam in fam.indices) for p in P])
    xs, _ = bishop_phelps_search(ctx, x0, PointCloud(P[inY]))
    sublevel = all(phi(lam, xs) <= phi(lam, x0) + ctx.tol for lam in fam.indices)
    near = all(fam.eval(lam, x0, xs) <= delta[lam] + ctx.tol for lam in fam.indices)
    margin, n = _strict_margin(ctx, xs, P)
    return xs, ConditionReport(xs, {"sublevel": sublevel, "near": near, "strict": margin > ctx.tol}, margin, n)
