"""Certified interval bounds on the non-compactness measure alpha.

``alpha_bounds`` propagates a two-sided interval through a set expression.
Union, closure, scaling and convex hull have exact rules; sums and
thickenings only one-sided ones, hence intervals.  Every step is logged in
a derivation trace naming the rule used.

The empirical side (``greedy_cover_number``, ``empirical_alpha``) works on
finite clouds and is an approximation, never a certificate.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .core import ContractionConstants, PseudometricFamily
from .hausdorff import PointCloud
from .multifun import MultiFunction, Violation, check_f_contractive

INF = math.inf

# rule identifiers that may appear in a trace
RULES = {
    "finite": "finite sets are precompact: alpha = 0",
    "axiom": "user-supplied bounds",
    "ball": "one ball of radius r covers itself: alpha <= 2r",
    "monotone": "alpha(A) <= alpha(B) for A in B",
    "union": "alpha(A u B) = max(alpha(A), alpha(B))",
    "closure": "alpha(closure A) = alpha(A)",
    "thicken": "alpha(eps-thickening of A) <= alpha(A) + eps; lower bound by monotonicity",
    "sum": "alpha(A + B) <= alpha(A) + alpha(B)",
    "sum-lower": "derived: A + b in A + B and alpha(A + b) = alpha(A)",
    "scale": "alpha(bA) = |b| alpha(A)",
    "hull": "alpha(co A) = alpha(A)",
    "translate": "derived: alpha(A + v) = alpha(A)",
}


@dataclass(frozen=True)
class AlphaInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (0 <= self.lo <= self.hi) or math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError(f"invalid alpha interval [{self.lo}, {self.hi}]")

    def __iter__(self):
        return iter((self.lo, self.hi))

    def __str__(self):
        return f"[{self.lo:g}, {self.hi:g}]"

    def to_list(self):
        return [self.lo, self.hi]


# expression nodes


@dataclass(frozen=True)
class FiniteAtom:
    cloud: PointCloud


@dataclass(frozen=True)
class AbstractAtom:
    name: str
    alpha: AlphaInterval


@dataclass(frozen=True)
class BallAtom:
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")


@dataclass(frozen=True)
class Union_:
    children: tuple

    def __post_init__(self):
        if not self.children:
            raise ValueError("union needs at least one child")


@dataclass(frozen=True)
class MinkowskiSum:
    left: "SetExpr"
    right: "SetExpr"


@dataclass(frozen=True)
class Scale:
    beta: float
    child: "SetExpr"


@dataclass(frozen=True)
class ConvexHull:
    child: "SetExpr"


@dataclass(frozen=True)
class Closure:
    child: "SetExpr"


@dataclass(frozen=True)
class Thicken:
    child: "SetExpr"
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("thickening radius must be positive")


@dataclass(frozen=True)
class SubsetAssert:
    child: "SetExpr"
    superset: "SetExpr"


SetExpr = Union[FiniteAtom, AbstractAtom, BallAtom, Union_, MinkowskiSum, Scale, ConvexHull,
                Closure, Thicken, SubsetAssert]


@dataclass(frozen=True)
class TraceStep:
    path: str
    node: str
    rule: str
    interval: AlphaInterval

    def __str__(self):
        return f"{self.path:<16} {self.node:<14} {self.interval!s:<14} {self.rule}: {RULES[self.rule]}"


@dataclass
class AlphaResult:
    interval: AlphaInterval
    trace: list[TraceStep] = field(default_factory=list)


def _mul(beta: float, v: float) -> float:
    return 0.0 if beta == 0 else abs(beta) * v


def alpha_bounds(expr: SetExpr) -> AlphaResult:
    """Structural recursion; the trace lists children before parents."""
    trace: list[TraceStep] = []
    interval = _bounds(expr, "root", trace)
    return AlphaResult(interval, trace)


def _bounds(e, path: str, trace: list) -> AlphaInterval:
    def emit(node, rule, iv):
        trace.append(TraceStep(path, node, rule, iv))
        return iv

    if isinstance(e, FiniteAtom):
        return emit("finite", "finite", AlphaInterval(0.0, 0.0))
    if isinstance(e, AbstractAtom):
        return emit(f"atom:{e.name}", "axiom", e.alpha)
    if isinstance(e, BallAtom):
        return emit("ball", "ball", AlphaInterval(0.0, 2 * e.radius))
    if isinstance(e, Union_):
        kids = [_bounds(c, f"{path}.{i}", trace) for i, c in enumerate(e.children)]
        return emit("union", "union", AlphaInterval(max(k.lo for k in kids), max(k.hi for k in kids)))
    if isinstance(e, Scale):
        k = _bounds(e.child, f"{path}.0", trace)
        return emit(f"scale({e.beta:g})", "scale", AlphaInterval(_mul(e.beta, k.lo), _mul(e.beta, k.hi)))
    if isinstance(e, ConvexHull):
        return emit("hull", "hull", _bounds(e.child, f"{path}.0", trace))
    if isinstance(e, Closure):
        return emit("closure", "closure", _bounds(e.child, f"{path}.0", trace))
    if isinstance(e, Thicken):
        k = _bounds(e.child, f"{path}.0", trace)
        return emit(f"thicken({e.eps:g})", "thicken", AlphaInterval(k.lo, k.hi + e.eps))
    if isinstance(e, MinkowskiSum):
        a = _bounds(e.left, f"{path}.0", trace)
        b = _bounds(e.right, f"{path}.1", trace)
        iv = AlphaInterval(max(a.lo, b.lo), a.hi + b.hi)
        emit("sum", "sum-lower", iv)
        return emit("sum", "sum", iv)
    if isinstance(e, SubsetAssert):
        k = _bounds(e.child, f"{path}.0", trace)
        s = _bounds(e.superset, f"{path}.1", trace)
        hi = min(k.hi, s.hi)
        if k.lo > hi:
            raise ValueError(f"{path}: subset assertion contradicts the child's lower bound "
                             f"({k.lo} > {hi})")
        return emit("subset", "monotone", AlphaInterval(k.lo, hi))
    raise TypeError(f"{path}: not a set expression: {e!r}")


# serialization: {"op": "...", ...}


def expr_from_dict(doc: Mapping, dimension: int | None = None) -> SetExpr:
    if not isinstance(doc, Mapping) or "op" not in doc:
        raise ValueError(f"set expression node needs an 'op' field: {doc!r}")
    op = doc["op"]
    if op == "finite":
        return FiniteAtom(PointCloud.of(doc["points"], dimension))
    if op == "atom":
        lo, hi = doc["alpha"]
        return AbstractAtom(doc.get("name", "A"), AlphaInterval(float(lo), float(hi)))
    if op == "ball":
        return BallAtom(float(doc["radius"]))
    if op == "union":
        return Union_(tuple(expr_from_dict(a, dimension) for a in doc["args"]))
    if op == "sum":
        left, right = doc["args"]
        return MinkowskiSum(expr_from_dict(left, dimension), expr_from_dict(right, dimension))
    if op == "scale":
        return Scale(float(doc["beta"]), expr_from_dict(doc["arg"], dimension))
    if op == "hull":
        return ConvexHull(expr_from_dict(doc["arg"], dimension))
    if op == "closure":
        return Closure(expr_from_dict(doc["arg"], dimension))
    if op == "thicken":
        return Thicken(expr_from_dict(doc["arg"], dimension), float(doc["eps"]))
    if op == "subset":
        return SubsetAssert(expr_from_dict(doc["arg"], dimension), expr_from_dict(doc["superset"], dimension))
    raise ValueError(f"unknown set expression op {op!r}")


def expr_to_dict(e: SetExpr) -> dict:
    if isinstance(e, FiniteAtom):
        return {"op": "finite", "points": e.cloud.points.tolist()}
    if isinstance(e, AbstractAtom):
        return {"op": "atom", "name": e.name, "alpha": e.alpha.to_list()}
    if isinstance(e, BallAtom):
        return {"op": "ball", "radius": e.radius}
    if isinstance(e, Union_):
        return {"op": "union", "args": [expr_to_dict(c) for c in e.children]}
    if isinstance(e, MinkowskiSum):
        return {"op": "sum", "args": [expr_to_dict(e.left), expr_to_dict(e.right)]}
    if isinstance(e, Scale):
        return {"op": "scale", "beta": e.beta, "arg": expr_to_dict(e.child)}
    if isinstance(e, ConvexHull):
        return {"op": "hull", "arg": expr_to_dict(e.child)}
    if isinstance(e, Closure):
        return {"op": "closure", "arg": expr_to_dict(e.child)}
    if isinstance(e, Thicken):
        return {"op": "thicken", "eps": e.eps, "arg": expr_to_dict(e.child)}
    if isinstance(e, SubsetAssert):
        return {"op": "subset", "arg": expr_to_dict(e.child), "superset": expr_to_dict(e.superset)}
    raise TypeError(f"not a set expression: {e!r}")


def load_expr(path, dimension: int | None = None) -> SetExpr:
    with open(path) as fh:
        return expr_from_dict(json.load(fh), dimension)


# k-set contraction certificates for operators A -> op(A)


@dataclass(frozen=True)
class Arg:
    """The input set A."""


@dataclass(frozen=True)
class OpScale:
    beta: float
    child: object


@dataclass(frozen=True)
class OpTranslate:
    offset: tuple
    child: object


@dataclass(frozen=True)
class OpHull:
    child: object


@dataclass(frozen=True)
class OpUnionFinite:
    child: object
    cloud: PointCloud


@dataclass(frozen=True)
class OpOpaque:
    """An operator step the rule set cannot analyse."""

    name: str
    child: object


@dataclass
class Certificate:
    factor: float
    k: float
    trace: list[tuple[str, str, float]]  # (node, rule, cumulative factor)

    certified = True


@dataclass
class Refusal:
    reason: str
    blocking_node: str
    trace: list[tuple[str, str, float]]

    certified = False


def certify_k_set_contraction(op, k: float) -> Certificate | Refusal:
    """Compose alpha-transfer factors bottom-up and certify alpha(op(A)) <= k alpha(A)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    chain = []
    node = op
    while not isinstance(node, Arg):
        chain.append(node)
        node = getattr(node, "child", None)
        if node is None:
            return Refusal(f"{type(chain[-1]).__name__} has no input", type(chain[-1]).__name__, [])
    factor = 1.0
    trace = [("arg", "identity", 1.0)]
    for n in reversed(chain):
        if isinstance(n, OpScale):
            factor *= abs(n.beta)
            trace.append((f"scale({n.beta:g})", "scale", factor))
        elif isinstance(n, OpTranslate):
            trace.append(("translate", "translate", factor))
        elif isinstance(n, OpHull):
            trace.append(("hull", "hull", factor))
        elif isinstance(n, OpUnionFinite):
            trace.append(("union-finite", "union", factor))
        else:
            name = getattr(n, "name", type(n).__name__)
            return Refusal(f"operator step {name!r} is outside the rule set", name, trace)
    # intermediate factors may exceed k; only the composite matters
    if factor > k:
        return Refusal(f"composed factor {factor:g} exceeds k={k:g}", trace[-1][0], trace)
    return Certificate(factor, k, trace)


def op_from_dict(doc: Mapping, dimension: int | None = None):
    op = doc["op"]
    if op == "arg":
        return Arg()
    child = op_from_dict(doc["arg"], dimension) if "arg" in doc else None
    if op == "scale":
        return OpScale(float(doc["beta"]), child)
    if op == "translate":
        return OpTranslate(tuple(float(v) for v in doc["offset"]), child)
    if op == "hull":
        return OpHull(child)
    if op == "union_finite":
        return OpUnionFinite(child, PointCloud.of(doc["points"], dimension))
    return OpOpaque(op, child)


def load_op(path, dimension: int | None = None):
    with open(path) as fh:
        return op_from_dict(json.load(fh), dimension)


# empirical side


def _projection(metric) -> tuple[int, float] | None:
    """(coord, weight) when d(x, y) = weight * |x_coord - y_coord|, else None."""
    kind = metric.kind
    if kind == "coordinate_abs":
        return metric.params["coord"], 1.0
    if kind == "euclidean_subset" and len(metric.params["coords"]) == 1:
        return metric.params["coords"][0], 1.0
    if kind == "weighted_abs":
        nz = [(i, w) for i, w in enumerate(metric.params["weights"]) if w > 0]
        return nz[0] if len(nz) == 1 else None
    if kind == "max_of" and len(metric.params["members"]) == 1:
        return _projection(metric.params["members"][0])
    return None


def _projected(cloud: PointCloud, metric) -> np.ndarray | None:
    proj = _projection(metric)
    if proj is None:
        return None
    coord, w = proj
    return np.sort(w * cloud.points[:, coord])


def _sweep_count(v: np.ndarray, width: float, closed: bool) -> int:
    """Fewest intervals of the given width covering sorted values (open or closed)."""
    count, i, n = 0, 0, len(v)
    while i < n:
        # compare differences, not v[i] + width, so a width equal to some v[j] - v[i] is exact
        i += int(np.searchsorted(v[i:] - v[i], width, side="right" if closed else "left"))
        count += 1
    return count


def _box_coords(cloud: PointCloud, metric) -> np.ndarray | None:
    """Scaled coordinates when d is a max of weighted coordinate differences (balls are boxes)."""
    if metric.kind != "max_of":
        return None
    projs = [_projection(m) for m in metric.params["members"]]
    if any(p is None for p in projs):
        return None
    return np.column_stack([w * cloud.points[:, c] for c, w in projs])


def _boxes_cover(Q: np.ndarray, width: float, k: int) -> bool:
    """Whether k closed axis-parallel cubes of the given side cover Q.

    Some cube of an optimal cover contains a corner of the bounding box and
    can be slid into it, so trying every corner is exact in the plane for
    k <= 3.
    """
    if len(Q) == 0:
        return True
    if k == 0:
        return False
    lo, hi = Q.min(axis=0), Q.max(axis=0)
    if k == 1:
        return bool(np.all(hi - lo <= width))
    for corner in itertools.product((False, True), repeat=Q.shape[1]):
        inside = np.ones(len(Q), dtype=bool)
        for i, from_top in enumerate(corner):
            inside &= (hi[i] - Q[:, i] <= width) if from_top else (Q[:, i] - lo[i] <= width)
        if _boxes_cover(Q[~inside], width, k - 1):
            return True
    return False


def _candidate_centers(P: np.ndarray) -> np.ndarray:
    """Cloud points followed by all pairwise midpoints."""
    m = len(P)
    i, j = np.triu_indices(m, k=1)
    return np.vstack([P, 0.5 * (P[i] + P[j])])


def _greedy_count(within: np.ndarray) -> int:
    """Greedy max-coverage set cover; rows are candidate balls, columns points."""
    uncovered = np.ones(within.shape[1], dtype=bool)
    count = 0
    while uncovered.any():
        gain = within[:, uncovered].sum(axis=1)
        best = int(np.argmax(gain))  # argmax returns the lowest index on ties
        if gain[best] == 0:
            raise RuntimeError("a point is not covered by any candidate ball")
        uncovered &= ~within[best]
        count += 1
    return count


def greedy_cover_number(cloud: PointCloud, family: PseudometricFamily, index: str, eps: float) -> int:
    """Number of open d_lambda-balls of radius eps used by a greedy cover.

    When d_lambda only sees one coordinate the greedy left-to-right interval
    sweep is used, which is optimal.  Otherwise candidate centres are the
    cloud points and their pairwise midpoints (a midpoint is equidistant
    from both ends under a seminorm), and the ball covering most uncovered
    points is taken first, lowest index on ties; the count then only
    upper-bounds the covering number.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    metric = family.metric(index)
    v = _projected(cloud, metric)
    if v is not None:
        return _sweep_count(v, 2 * eps, closed=False)
    P = cloud.points
    return _greedy_count(metric.pairwise(_candidate_centers(P), P) < eps)


def _min_radius(cloud: PointCloud, metric, budget: int) -> float:
    """Least t such that ``budget`` closed t-balls cover the cloud.

    Exact for single-coordinate pseudometrics (interval sweep) and for planar
    box pseudometrics with budget <= 3 (corner search); greedy otherwise.

    Open balls of any radius above t then cover as well, so t is the
    infimum of admissible open radii.  The search is a bisection over the
    finite set of radii at which the cover can change, so the result is
    exact rather than tolerance-limited.
    """
    v = _projected(cloud, metric)
    Q = _box_coords(cloud, metric) if v is None else None
    if v is not None:
        i, j = np.triu_indices(len(v), k=1)
        values = np.unique(np.r_[0.0, 0.5 * (v[j] - v[i])])
        fits = lambda t: _sweep_count(v, 2 * t, closed=True) <= budget  # noqa: E731
    elif Q is not None and Q.shape[1] <= 2 and budget <= 3:
        i, j = np.triu_indices(len(Q), k=1)
        values = np.unique(np.r_[0.0, 0.5 * np.abs(Q[j] - Q[i]).ravel()])
        fits = lambda t: _boxes_cover(Q, 2 * t, budget)  # noqa: E731
    else:
        P = cloud.points
        D = metric.pairwise(_candidate_centers(P), P)
        values = np.unique(D)
        fits = lambda t: _greedy_count(D <= t) <= budget  # noqa: E731
    lo, hi = 0, len(values) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if fits(values[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(values[lo])


def empirical_alpha(cloud: PointCloud, family: PseudometricFamily, budget: int,
                    index: str | None = None) -> float:
    """2 * (least radius at which ``budget`` balls cover the cloud), maxed over indices.

    Centres may differ between indices, mirroring the per-index quantifier in
    the definition of alpha.  Nonincreasing in ``budget``; 0 once the budget
    reaches the cloud size.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if budget >= len(cloud):
        return 0.0
    indices = family.indices if index is None else (index,)
    return max(2.0 * _min_radius(cloud, family.metric(lam), budget) for lam in indices)


@dataclass
class TransferReport:
    k: float
    budget: int
    image_budget: int
    slack: list[float]  # k * alpha(A) + tol - alpha(T(A)) per cloud
    violations: list[Violation]
    precondition: str | None = None

    @property
    def passed(self) -> bool:
        return self.precondition is None and not self.violations

    @property
    def worst_slack(self) -> float:
        return min(self.slack) if self.slack else INF


def check_alpha_transfer(T: MultiFunction, family: PseudometricFamily, k: ContractionConstants,
                   clouds: Sequence[PointCloud], budget: int, tol: float = 0.05,
                   image_budget: int | None = None) -> TransferReport:
    """empirical_alpha(T(A)) <= k_sup * empirical_alpha(A) + tol on each sampled cloud.

    T(A) is covered with ``image_budget`` balls, by default ``budget`` times
    the largest image size seen: r balls on A map into r image neighbourhoods,
    each needing up to |T(a)| balls of its own.  Pass ``image_budget=budget``
    for the equal-budget comparison.
    """
    pairs = [(A[i], A[j]) for A in clouds for i in range(min(len(A), 8)) for j in range(i)]
    pre = check_f_contractive(T, family, k, pairs)
    images = [T.image_of(A) for A in clouds]
    max_img = max(len(T(a)) for A in clouds for a in A)
    ib = budget * max_img if image_budget is None else image_budget
    report = TransferReport(k.sup, budget, ib, [], [])
    if not pre.passed:
        report.precondition = f"F-contractivity fails on {len(pre.violations)} sampled pair(s)"
    for A, TA in zip(clouds, images):
        lhs = empirical_alpha(TA, family, ib)
        rhs = k.sup * empirical_alpha(A, family, budget)
        report.slack.append(rhs + tol - lhs)
        if lhs > rhs + tol:
            report.violations.append(Violation((A.points.tolist(),), {"alpha_image": lhs, "k_alpha": rhs}))
    return report
