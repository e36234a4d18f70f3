"""Multi-functions with finite images and empirical property checkers.

The semi-continuity checkers sample a grid and probe shrinking neighbourhoods;
they can expose a non-open level set but never certify openness, and their
reports say so.  The residual inequality and F-contractivity checks
are exact on the sampled pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from . import _convex
from .core import ContractionConstants, PseudometricFamily, as_point, float_tol
from .hausdorff import PointCloud, dist_to_set, hausdorff_pseudometric


def _always(x) -> bool:
    return True


@dataclass(frozen=True)
class MultiFunction:
    """T: D -> nonempty finite clouds.

    ``image`` must be deterministic and reentrant.  ``spec`` keeps the
    declarative description (if any) so the map can be written back out.
    """

    image: Callable[[np.ndarray], PointCloud]
    dimension: int
    domain: Callable[[np.ndarray], bool] = _always
    images_compact: bool = True
    spec: Mapping[str, Any] | None = field(default=None, compare=False)

    def __call__(self, x) -> PointCloud:
        x = as_point(x, self.dimension)
        if not self.domain(x):
            raise ValueError(f"{x.tolist()} is outside the domain")
        out = self.image(x)
        if not isinstance(out, PointCloud):
            out = PointCloud.of(out, self.dimension)
        return out

    def image_of(self, A) -> PointCloud:
        """T(A) = union of T(x) over x in A."""
        clouds = [self(a) for a in A]
        return clouds[0].union(*clouds[1:])

    # constructors

    @classmethod
    def affine_branches(cls, branches: Sequence[tuple], dimension: int) -> "MultiFunction":
        """T(x) = {S_i x + b_i}; each scale S_i is a scalar or an n x n matrix."""
        parsed = []
        for scale, offset in branches:
            S = np.asarray(scale, float)
            b = np.broadcast_to(np.asarray(offset, float), (dimension,)).copy()
            if S.ndim not in (0, 2) or (S.ndim == 2 and S.shape != (dimension, dimension)):
                raise ValueError(f"scale must be scalar or {dimension}x{dimension}")
            parsed.append((S, b))

        def image(x):
            return PointCloud(np.vstack([(S @ x if S.ndim else S * x) + b for S, b in parsed]))

        spec = {"kind": "affine_branches",
                "branches": [{"scale": S.tolist(), "offset": b.tolist()} for S, b in parsed]}
        return cls(image, dimension, spec=spec)

    @classmethod
    def constant(cls, cloud, dimension: int | None = None) -> "MultiFunction":
        B = cloud if isinstance(cloud, PointCloud) else PointCloud.of(cloud, dimension)
        return cls(lambda x: B, B.dimension, spec={"kind": "constant", "cloud": B.to_dict()})

    @classmethod
    def single_valued(cls, f: Callable, dimension: int) -> "MultiFunction":
        return cls(lambda x: PointCloud(np.atleast_2d(np.asarray(f(x), float))), dimension)

    @classmethod
    def from_table(cls, table: Mapping[tuple, Iterable], dimension: int = 1) -> "MultiFunction":
        """Finite multi-function given point by point (keys are coordinate tuples)."""
        lookup = {tuple(float(c) for c in np.atleast_1d(k)): PointCloud.of(v, dimension)
                  for k, v in table.items()}

        def image(x):
            try:
                return lookup[tuple(x.tolist())]
            except KeyError:
                raise ValueError(f"{x.tolist()} not in the table") from None

        return cls(image, dimension, domain=lambda x: tuple(x.tolist()) in lookup)

    @classmethod
    def from_dict(cls, doc: Mapping, dimension: int) -> "MultiFunction":
        kind = doc["kind"]
        if kind == "affine_branches":
            return cls.affine_branches([(b["scale"], b.get("offset", 0.0)) for b in doc["branches"]],
                                       dimension)
        if kind == "constant":
            return cls.constant(PointCloud.from_dict(doc["cloud"], dimension))
        raise ValueError(f"unknown multi-function kind {kind!r}")

    @classmethod
    def load(cls, path, dimension: int) -> "MultiFunction":
        with open(path) as fh:
            return cls.from_dict(json.load(fh), dimension)


def residual(T: MultiFunction, family: PseudometricFamily, index: str, x) -> float:
    """d_lambda(x, T(x))."""
    return dist_to_set(family, index, x, T(x))


@dataclass
class Violation:
    witness: tuple
    values: dict


@dataclass
class SemicontinuityReport:
    kind: str
    violations: list[Violation]
    samples_tested: int
    empirical: bool = True

    @property
    def passed(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        tag = "empirical, grid-limited" if self.empirical else "exact on samples"
        verdict = "passed" if self.passed else f"{len(self.violations)} violation(s)"
        return f"{self.kind}: {verdict} over {self.samples_tested} samples ({tag})"


def _probe_offsets(n: int) -> np.ndarray:
    eye = np.eye(n)
    diag = np.ones((1, n)) / np.sqrt(n)
    return np.vstack([eye, -eye, diag, -diag]) if n > 1 else np.vstack([eye, -eye])


def _check_level_set_open(T, family, index, grid, probe_radius, refinements, inside, kind):
    if not probe_radius > 0:
        raise ValueError("probe_radius must be positive")
    pts = [family.point(g) for g in grid]
    offsets = _probe_offsets(family.dimension)
    violations = []
    tested = 0
    for x in pts:
        if not T.domain(x):
            continue
        gx = residual(T, family, index, x)
        if not inside(gx):
            continue
        tested += 1
        ok = False
        for j in range(refinements + 1):
            r = probe_radius * 0.5 ** j
            probes = [x + r * o for o in offsets]
            probes = [p for p in probes if T.domain(p)]
            if all(inside(residual(T, family, index, p)) for p in probes):
                ok = True
                break
        if not ok:
            violations.append(Violation((x.tolist(),), {"residual": gx, "smallest_probe": r}))
    return SemicontinuityReport(kind, violations, tested)


def check_weak_lower_sc(T: MultiFunction, family: PseudometricFamily, index: str, alpha: float,
                        grid: Iterable, probe_radius: float, refinements: int = 8) -> SemicontinuityReport:
    """Probe openness of {x : d_lambda(x, T(x)) < alpha} around each grid point inside it.

    A grid point passes when some probe ball of radius probe_radius * 2^-j
    (j <= refinements) keeps every probe inside the sublevel set.  With
    alpha = 0 the set is empty and the check passes vacuously.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    return _check_level_set_open(T, family, index, grid, probe_radius, refinements,
                                 lambda g: g < alpha, "weak-lower")


def check_weak_upper_sc(T: MultiFunction, family: PseudometricFamily, index: str, alpha: float,
                        grid: Iterable, probe_radius: float, refinements: int = 8) -> SemicontinuityReport:
    """Same probing for the strict superlevel set {x : d_lambda(x, T(x)) > alpha}."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    return _check_level_set_open(T, family, index, grid, probe_radius, refinements,
                                 lambda g: g > alpha, "weak-upper")


def check_residual_inequality(T: MultiFunction, family: PseudometricFamily, index: str | None,
                              pairs: Iterable, tol: float | None = None) -> SemicontinuityReport:
    """|d(u,Tu) - d(v,Tv)| <= d(u,v) + H(Tv,Tu) on every pair (all indices when index is None).

    This holds for every multi-function; a violation means a bug here.
    """
    tol = float_tol() if tol is None else tol
    indices = family.indices if index is None else (index,)
    violations = []
    count = 0
    for u, v in pairs:
        u, v = family.point(u), family.point(v)
        Tu, Tv = T(u), T(v)
        count += 1
        for lam in indices:
            lhs = abs(dist_to_set(family, lam, u, Tu) - dist_to_set(family, lam, v, Tv))
            rhs = family.eval(lam, u, v) + hausdorff_pseudometric(family, lam, Tv, Tu)
            if lhs > rhs + tol:
                violations.append(Violation((u.tolist(), v.tolist()), {"index": lam, "lhs": lhs, "rhs": rhs}))
    return SemicontinuityReport("residual-inequality", violations, count, empirical=False)


@dataclass
class ContractivityReport:
    worst_ratio: dict[str, float]
    violations: list[Violation]
    samples_tested: int

    @property
    def passed(self) -> bool:
        return not self.violations


def check_f_contractive(T: MultiFunction, family: PseudometricFamily, k: ContractionConstants,
                        pairs: Iterable, tol: float | None = None) -> ContractivityReport:
    """H^lambda(Tx, Ty) <= k_lambda d_lambda(x, y) per index on sampled pairs."""
    tol = float_tol() if tol is None else tol
    k = k.for_family(family)
    worst = {lam: 0.0 for lam in family.indices}
    violations = []
    count = 0
    for x, y in pairs:
        x, y = family.point(x), family.point(y)
        Tx, Ty = T(x), T(y)
        count += 1
        for lam in family.indices:
            H = hausdorff_pseudometric(family, lam, Tx, Ty)
            d = family.eval(lam, x, y)
            if d > tol:
                worst[lam] = max(worst[lam], H / d)
            elif H > tol:
                worst[lam] = float("inf")
            if H > k[lam] * d + tol:
                violations.append(Violation((x.tolist(), y.tolist()),
                                            {"index": lam, "H": H, "d": d, "ratio": H / d if d else float("inf")}))
    return ContractivityReport(worst, violations, count)


def _hull_vertices(K) -> np.ndarray:
    return K.points if isinstance(K, PointCloud) else np.atleast_2d(np.asarray(K, float))


def inner_set_membership(K, x, t, tol: float | None = None) -> bool:
    """t in I_K(x) = x + {c (y - x) : y in co(K), c >= 1}, decided by LP."""
    tol = float_tol() if tol is None else tol
    V = _hull_vertices(K)
    x = as_point(x, V.shape[1])
    t = as_point(t, V.shape[1])
    if not _convex.hull_contains(V, x, tol):
        raise ValueError(f"base point {x.tolist()} lies outside co(K)")
    if _convex.hull_contains(V, t, tol):
        return True
    return _convex.fit_inner_set_inf(V, x, t).objective <= tol


DEFAULT_ETA_SCHEDULE = (1.0, 0.5, 0.25, 0.125, 1e-3)


def envelope_ratio(K, x, t, family: PseudometricFamily) -> float:
    """min over z in I_K(x) of max_lambda ||t - z||_lambda / ||t - x||_lambda."""
    V = _hull_vertices(K)
    x, t = family.point(x), family.point(t)
    scales = {lam: family.seminorm(lam, t - x) for lam in family.indices}
    return _convex.fit_relative(family, V, x, t, scales).objective


def envelope_membership(K, x, t, family: PseudometricFamily,
                        eta_schedule: Sequence[float] = DEFAULT_ETA_SCHEDULE,
                        tol: float | None = None) -> bool:
    """Approximate membership of t in the envelope of I_K(x).

    Needs some z in I_K(x) with ||t - z||_lambda <= eta ||t - x||_lambda for
    every lambda and every eta in the schedule, i.e. for its smallest entry.
    """
    tol = float_tol() if tol is None else tol
    if any(e <= 0 for e in eta_schedule) or list(eta_schedule) != sorted(eta_schedule, reverse=True):
        raise ValueError("eta schedule must be positive and decreasing")
    V = _hull_vertices(K)
    x, t = family.point(x), family.point(t)
    if np.allclose(t, x, rtol=0, atol=tol):
        return True
    if not _convex.hull_contains(V, x, tol):
        raise ValueError(f"base point {x.tolist()} lies outside co(K)")
    return envelope_ratio(K, x, t, family) <= min(eta_schedule) + tol


def residual_set_locator(T: MultiFunction, family: PseudometricFamily, grid: Iterable,
                         eta: float) -> PointCloud | None:
    """Grid points with max_lambda d_lambda(x, T(x)) <= eta, or None when there are none."""
    if eta < 0:
        raise ValueError("eta must be >= 0")
    hits = []
    for g in grid:
        x = family.point(g)
        Tx = T(x)
        if max(dist_to_set(family, lam, x, Tx) for lam in family.indices) <= eta:
            hits.append(x)
    return PointCloud(np.vstack(hits)) if hits else None


class ClosureError(RuntimeError):
    pass


def invariant_set_iterate(T: MultiFunction, x0, universe: PointCloud, max_iter: int = 1000,
                          tol: float | None = None) -> PointCloud:
    """Least T-invariant subset of ``universe`` containing x0.

    Iterates C_0 = {x0}, C_{n+1} = {x0} u T(C_n).  Image points are snapped
    to the universe point within ``tol``; an image leaving the universe is an
    error, as is failing to stabilise within ``max_iter`` rounds.
    """
    tol = float_tol() if tol is None else tol
    U = universe.points

    def snap(p) -> int:
        d = np.max(np.abs(U - p), axis=1)
        j = int(np.argmin(d))
        if d[j] > tol:
            raise ClosureError(f"image point {np.asarray(p).tolist()} is not in the universe")
        return j

    start = snap(as_point(x0, universe.dimension))
    members = [start]
    seen = {start}
    frontier = [start]
    for _ in range(max_iter):
        new = []
        for i in frontier:
            for p in T(U[i]):
                j = snap(p)
                if j not in seen:
                    seen.add(j)
                    members.append(j)
                    new.append(j)
        if not new:
            return PointCloud(U[members])
        frontier = new
    raise ClosureError(f"no T-invariant set reached within {max_iter} iterations")
