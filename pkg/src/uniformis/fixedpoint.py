"""Fixed-point solvers on uniform spaces.

* ``picard_solve``: iterate a single-valued F-contractive map.
* ``nadler_solve``: select from the images of an F-contractive multi-function.
* ``caristi_descent``: walk along image points that decrease a potential
  family enough to pay for the step, per index.
* ``inward_solve``: fixed points of weakly inward contractions on a convex
  hull K, stepping to hull points found by a witness program.

All solvers return tolerance-approximate points with a full trace; none
claims an exact fixed point.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import _convex
from .core import ContractionConstants, PseudometricFamily, float_tol, sup_metric_rho
from .hausdorff import PointCloud, dist_to_set, hausdorff_rho
from .multifun import MultiFunction, Violation

CONVERGED = "converged"
MAX_ITER = "max-iter"
STALLED = "stalled"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-9
    max_iter: int = 10_000
    slack: Callable[[int], float] | None = None  # Nadler slack eps_n; default tol * 2^-n

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def slack_at(self, n: int) -> float:
        return self.slack(n) if self.slack is not None else self.tol * 2.0 ** -n


@dataclass
class SolverTrace:
    iterates: list[np.ndarray] = field(default_factory=list)
    residuals: list[dict[str, float]] = field(default_factory=list)  # d_lambda(x_n, x_{n+1})
    termination: str = MAX_ITER
    a_priori_bound_satisfied: bool = True
    notes: dict = field(default_factory=dict)

    def records(self):
        """Line-delimited trace records: one per iteration, then a summary."""
        for n, x in enumerate(self.iterates):
            rec = {"type": "iterate", "n": n, "x": np.asarray(x).tolist()}
            if n < len(self.residuals):
                rec["step"] = dict(self.residuals[n])
            yield rec
        yield {"type": "summary", "termination": self.termination,
               "iterations": len(self.residuals),
               "a_priori_bound_satisfied": self.a_priori_bound_satisfied,
               **{k: _jsonable(v) for k, v in self.notes.items()}}


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


def _steps(family: PseudometricFamily, x, y) -> dict[str, float]:
    return family.distances(x, y)


# Picard


def picard_solve(f: Callable, family: PseudometricFamily, k: ContractionConstants, x0,
                 cfg: SolverConfig = SolverConfig()) -> tuple[np.ndarray, SolverTrace]:
    """Iterate x <- f(x) with the a-posteriori stop max_lambda d(x_n, x_{n+1}) * k/(1-k) <= tol.

    The stop rule bounds the distance of x_{n+1} to the fixed point by tol,
    and hence its residual max_lambda d(x, f(x)) by k * tol.  After a
    converged run the a-priori bound k^n/(1-k) * d(x_0, x_1) is checked
    against every iterate.
    """
    k = k.for_family(family)
    ks = k.sup
    x = family.point(x0)
    trace = SolverTrace(iterates=[x])
    for _ in range(cfg.max_iter):
        y = family.point(f(x))
        step = _steps(family, x, y)
        trace.residuals.append(step)
        trace.iterates.append(y)
        x = y
        if max(step.values()) * ks <= cfg.tol * (1 - ks):
            trace.termination = CONVERGED
            break
    if trace.termination == CONVERGED:
        d0 = max(trace.residuals[0].values())
        xs = trace.iterates[-1]
        ratios = {lam: [] for lam in family.indices}
        for a, b in zip(trace.residuals, trace.residuals[1:]):
            for lam in family.indices:
                if a[lam] > 0:
                    ratios[lam].append(b[lam] / a[lam])
        trace.notes["worst_step_ratio"] = {lam: max(r) if r else 0.0 for lam, r in ratios.items()}
        trace.a_priori_bound_satisfied = all(
            family.max_distance(xn, xs) <= ks ** n / (1 - ks) * d0 + cfg.tol
            for n, xn in enumerate(trace.iterates))
    trace.notes["residual"] = max(family.distances(x, family.point(f(x))).values())
    return x, trace


# Nadler


def metric_selection(T: MultiFunction, family: PseudometricFamily, x) -> tuple[np.ndarray, dict[str, float]]:
    """Image point minimizing max_lambda (d_lambda(x, y) - d_lambda(x, T(x))).

    Returns the point and its per-index gaps.  A simultaneous nearest point
    (all gaps zero) wins whenever the image has one; remaining ties go to
    the lowest image index.
    """
    x = family.point(x)
    img = T(x).points
    D = np.vstack([family.pairwise(lam, x, img)[0] for lam in family.indices])  # (L, m)
    gaps = D - D.min(axis=1, keepdims=True)
    j = int(np.argmin(gaps.max(axis=0)))
    return img[j].copy(), dict(zip(family.indices, gaps[:, j].tolist()))


class Divergence(RuntimeError):
    pass


def nadler_solve(T: MultiFunction, family: PseudometricFamily, k: ContractionConstants, x0,
                 cfg: SolverConfig = SolverConfig(), branch: int | None = None,
                 window: int = 10) -> tuple[np.ndarray, SolverTrace]:
    """Nadler iteration with the truncated sup metric rho = min(1, max_lambda d_lambda).

    By default x_{n+1} is the point of T(x_n) nearest to x_n in rho (lowest
    index on ties); ``branch`` forces the image point of that index instead.
    Each step records the Nadler slack bound
    rho(x_n, x_{n+1}) <= H_rho(T x_{n-1}, T x_n) + eps_n and the contraction
    bound rho(x_n, x_{n+1}) <= k rho(x_{n-1}, x_n) + eps_n.  Stops when
    max_lambda d_lambda(x, T(x)) <= tol; flags ``stalled`` if the residual
    has not decreased over ``window`` iterations.
    """
    k = k.for_family(family)
    ks = k.sup
    x = family.point(x0)
    trace = SolverTrace(iterates=[x])
    nadler_ok, contraction_ok = [], []
    res_hist = []
    prev_img = None
    prev_rho = None
    for n in range(cfg.max_iter + 1):
        img = T(x)
        res = max(dist_to_set(family, lam, x, img) for lam in family.indices)
        res_hist.append(res)
        if res <= cfg.tol:
            trace.termination = CONVERGED
            break
        if n == cfg.max_iter:
            break
        if len(res_hist) > window and min(res_hist[-window:]) >= res_hist[-window - 1]:
            trace.termination = STALLED
            break
        if branch is None:
            rhos = [sup_metric_rho(family, x, y) for y in img]
            y = img[int(np.argmin(rhos))]
        else:
            y = img[branch]
        y = family.point(y)
        rho = sup_metric_rho(family, x, y)
        eps = cfg.slack_at(n)
        if prev_img is not None:
            nadler_ok.append(rho <= hausdorff_rho(family, prev_img, img) + eps + 1e-12)
            contraction_ok.append(rho <= ks * prev_rho + eps + 1e-12)
        trace.residuals.append(_steps(family, x, y))
        trace.iterates.append(y)
        prev_img, prev_rho = img, rho
        x = y
    trace.notes["residual"] = res_hist[-1]
    trace.notes["nadler_step_bound"] = all(nadler_ok)
    trace.notes["contraction_step_bound"] = all(contraction_ok)
    trace.a_priori_bound_satisfied = all(contraction_ok)
    return x, trace


# Caristi


class ContractViolation(ValueError):
    pass


@dataclass(frozen=True)
class PotentialFamily:
    """phi_lambda with declared lower bounds; evaluation enforces the bounds."""

    per_index: Mapping[str, Callable]
    lower_bounds: Mapping[str, float]
    tol: float = 1e-9

    def __call__(self, index: str, x) -> float:
        v = float(self.per_index[index](np.asarray(x, float)))
        if v < self.lower_bounds[index] - self.tol:
            raise ContractViolation(f"phi[{index}]({np.asarray(x).tolist()}) = {v} "
                                    f"is below its declared bound {self.lower_bounds[index]}")
        return v

    def values(self, x) -> dict[str, float]:
        return {lam: self(lam, x) for lam in self.per_index}

    @classmethod
    def from_dict(cls, doc: Mapping, family: PseudometricFamily) -> "PotentialFamily":
        """``{"potentials": {label: {"kind": ..., ...}}}``; kinds abs, quadratic, affine, constant."""
        funcs, lows = {}, {}
        for lam, p in doc["potentials"].items():
            funcs[lam], lows[lam] = _potential(p, lam, family)
        missing = set(family.indices) - set(funcs)
        if missing:
            raise KeyError(f"no potential for indices {sorted(missing)}")
        return cls(funcs, lows)

    @classmethod
    def load(cls, path, family: PseudometricFamily) -> "PotentialFamily":
        with open(path) as fh:
            return cls.from_dict(json.load(fh), family)


def _potential(p: Mapping, lam: str, family: PseudometricFamily):
    kind = p["kind"]
    scale = float(p.get("scale", 1.0))
    offset = float(p.get("offset", 0.0))
    center = family.point(p.get("center", [0.0] * family.dimension))
    if kind == "abs":
        # scale * d_lambda(x, center)
        metric = family.metric(p.get("index", lam))
        return (lambda x: scale * metric(x, center) + offset), offset
    if kind == "quadratic":
        return (lambda x: scale * float(np.sum((x - center) ** 2)) + offset), offset
    if kind == "affine":
        a = np.asarray(p["coef"], float)
        return (lambda x: float(a @ x) + offset), float(p["lower_bound"])
    if kind == "constant":
        return (lambda x: offset), offset
    raise ValueError(f"unknown potential kind {kind!r}")


def caristi_descent(T: MultiFunction, family: PseudometricFamily, phi: PotentialFamily, x0,
                    cfg: SolverConfig = SolverConfig(),
                    selection: Callable | None = None) -> tuple[np.ndarray, SolverTrace]:
    """Descend along image points satisfying d_lambda(x, y) <= phi_lambda(x) - phi_lambda(y) for all lambda.

    A step needs strict progress min_lambda(phi(x) - phi(y)) >= tol; among
    admissible image points the one with the largest progress is taken
    (lowest index on ties).  ``selection(T, family, x)`` may instead supply a
    single candidate.  Stops at the first point with no admissible step and
    reports its residual max_lambda d_lambda(x, T(x)).
    """
    x = family.point(x0)
    trace = SolverTrace(iterates=[x])
    trace.notes["potentials"] = [phi.values(x)]
    ftol = float_tol()
    for _ in range(cfg.max_iter):
        px = phi.values(x)
        cands = [selection(T, family, x)[0]] if selection is not None else list(T(x))
        best, best_gain = None, -math.inf
        for y in cands:
            y = family.point(y)
            py = phi.values(y)
            d = family.distances(x, y)
            if any(d[lam] > px[lam] - py[lam] + ftol for lam in family.indices):
                continue
            gain = min(px[lam] - py[lam] for lam in family.indices)
            if gain >= cfg.tol and gain > best_gain:
                best, best_gain = y, gain
        if best is None:
            trace.termination = CONVERGED
            break
        trace.residuals.append(family.distances(x, best))
        trace.iterates.append(best)
        trace.notes["potentials"].append(phi.values(best))
        x = best
    img = T(x)
    trace.notes["residual"] = max(dist_to_set(family, lam, x, img) for lam in family.indices)
    return x, trace


def caristi_contraction_potentials(T: MultiFunction, family: PseudometricFamily,
                                   k: ContractionConstants) -> PotentialFamily:
    """phi_lambda(x) = d_lambda(x, T(x)) / (1 - k_lambda), bounded below by 0."""
    k = k.for_family(family)
    for lam in family.indices:
        if not 0 <= k[lam] < 1:
            raise ValueError(f"k[{lam}] must lie in [0, 1)")

    def make(lam):
        c = 1.0 / (1.0 - k[lam])
        return lambda x: c * dist_to_set(family, lam, x, T(x))

    return PotentialFamily({lam: make(lam) for lam in family.indices},
                           {lam: 0.0 for lam in family.indices})


@dataclass
class ResidualDecreaseReport:
    violations: list[Violation]
    samples_tested: int
    fixed_point: np.ndarray | None = None
    trace: SolverTrace | None = None

    @property
    def passed(self) -> bool:
        return not self.violations


def check_residual_decrease(f: Callable, T: MultiFunction, family: PseudometricFamily, r: Mapping[str, float],
                      samples: Sequence, cfg: SolverConfig = SolverConfig(), x0=None,
                      tol: float | None = None) -> ResidualDecreaseReport:
    """Check d(f(x), T f(x)) <= d(x, Tx) + r_lambda d(x, f(x)) on samples, then descend.

    With every r_lambda < 0 the potentials phi_lambda(x) = -d_lambda(x, Tx)/r_lambda
    make each f-step a Caristi step, so descent from ``x0`` (default: first
    sample) approaches a fixed point of f.
    """
    tol = float_tol() if tol is None else tol
    bad = [lam for lam in family.indices if not r[lam] < 0]
    if bad:
        raise ValueError(f"r must be negative for every index; offending: {bad}")
    violations = []
    pts = [family.point(s) for s in samples]
    for x in pts:
        fx = family.point(f(x))
        for lam in family.indices:
            lhs = dist_to_set(family, lam, fx, T(fx))
            rhs = dist_to_set(family, lam, x, T(x)) + r[lam] * family.eval(lam, x, fx)
            if lhs > rhs + tol:
                violations.append(Violation((x.tolist(),), {"index": lam, "lhs": lhs, "rhs": rhs}))
    report = ResidualDecreaseReport(violations, len(pts))
    if violations:
        return report

    def make(lam):
        return lambda x: -dist_to_set(family, lam, x, T(x)) / r[lam]

    phi = PotentialFamily({lam: make(lam) for lam in family.indices}, {lam: 0.0 for lam in family.indices})
    F = MultiFunction.single_valued(f, family.dimension)
    xs, trace = caristi_descent(F, family, phi, pts[0] if x0 is None else x0, cfg)
    report.fixed_point, report.trace = xs, trace
    return report


# weakly inward maps


@dataclass(frozen=True)
class InwardnessWitness:
    f: np.ndarray
    c: float
    residuals: dict[str, float]  # ||T(x) - x - c (f - x)||_lambda
    epsilons: dict[str, float]

    def __post_init__(self):
        if self.c < 1 - 1e-12:
            raise ValueError("witness needs c >= 1")


class InwardnessError(RuntimeError):
    def __init__(self, message: str, iterate: np.ndarray, trace: SolverTrace | None = None):
        super().__init__(message)
        self.iterate = iterate
        self.trace = trace


def inward_epsilons(k: ContractionConstants, margin: float = 0.9) -> dict[str, float]:
    """eps_lambda = margin * (1 - k)/(1 + k), strictly inside k < (1 - eps)/(1 + eps)."""
    if not 0 < margin < 1:
        raise ValueError("margin must lie in (0, 1)")
    return {lam: margin * (1 - kl) / (1 + kl) for lam, kl in k.per_index.items()}


def inward_witness(T_x, x, K: PointCloud, family: PseudometricFamily, eps: Mapping[str, float],
                   tol: float | None = None) -> InwardnessWitness | None:
    """Find f in co(K) and c >= 1 with ||T(x) - x - c(f - x)||_lambda <= eps_lambda ||T(x) - x||_lambda.

    Returns None when no such pair exists.  Among feasible pairs the one
    minimizing the worst eps-weighted ratio, then c, is returned.
    """
    tol = float_tol() if tol is None else tol
    x, t = family.point(x), family.point(T_x)
    V = K.points
    if _convex.hull_contains(V, t, tol):
        res = {lam: 0.0 for lam in family.indices}
        return InwardnessWitness(t, 1.0, res, dict(eps))
    scales = {lam: eps[lam] * family.seminorm(lam, t - x) for lam in family.indices}
    fit = _convex.fit_relative(family, V, x, t, scales)
    if not fit.feasible or fit.objective > 1 + 1e-9:
        return None
    c = max(fit.c, 1.0)
    f = fit.point
    res = {lam: family.seminorm(lam, t - x - c * (f - x)) for lam in family.indices}
    if any(res[lam] > scales[lam] + tol for lam in family.indices):
        return None
    return InwardnessWitness(f, c, res, dict(eps))


def inward_solve(T: Callable, K: PointCloud, family: PseudometricFamily, k: ContractionConstants, x0,
                 cfg: SolverConfig = SolverConfig(), margin: float = 0.9
                 ) -> tuple[np.ndarray, SolverTrace, list[InwardnessWitness]]:
    """Fixed point of a weakly inward F-contraction T on co(K), in a seminormed space.

    Each iterate x steps to f(x): T(x) itself when it lies in co(K),
    otherwise the hull point of an inwardness witness.  Every accepted step
    records whether
    ||f - T(f)|| <= ||T(x) - x|| + (k - (1 - eps)/(1 + eps)) ||x - f||
    holds per index.  Raises InwardnessError when no witness exists.
    """
    if not family.seminorm_induced:
        raise TypeError("inward_solve needs seminorm-induced pseudometrics")
    k = k.for_family(family)
    eps = inward_epsilons(k, margin)
    ftol = float_tol()
    x = family.point(x0)
    if not _convex.hull_contains(K.points, x, ftol):
        raise ValueError(f"x0 = {x.tolist()} is not in co(K)")
    trace = SolverTrace(iterates=[x])
    witnesses: list[InwardnessWitness] = []
    step_ok = []
    for _ in range(cfg.max_iter):
        tx = family.point(T(x))
        gap = {lam: family.seminorm(lam, tx - x) for lam in family.indices}
        if max(gap.values()) <= cfg.tol:
            trace.termination = CONVERGED
            break
        w = inward_witness(tx, x, K, family, eps, ftol)
        if w is None:
            trace.termination = INFEASIBLE
            trace.notes["residual"] = max(gap.values())
            raise InwardnessError(f"T is not weakly inward at {x.tolist()}: T(x) = {tx.tolist()}", x, trace)
        witnesses.append(w)
        f = family.point(w.f)
        tf = family.point(T(f))
        ok = all(
            family.seminorm(lam, f - tf)
            <= gap[lam] + (k[lam] - (1 - eps[lam]) / (1 + eps[lam])) * family.seminorm(lam, x - f) + ftol
            for lam in family.indices)
        step_ok.append(ok)
        trace.residuals.append(family.distances(x, f))
        trace.iterates.append(f)
        x = f
    trace.notes["residual"] = max(family.seminorm(lam, family.point(T(x)) - x) for lam in family.indices)
    trace.notes["descent_inequality"] = all(step_ok)
    trace.notes["steps_checked"] = len(step_ok)
    trace.a_priori_bound_satisfied = all(step_ok)
    return x, trace, witnesses
