"""Point-to-set distances and Hausdorff pseudometrics on finite clouds.

For finite clouds every sup/inf is a max/min, so H^lambda is exact.  The
inflation formulation (smallest eps with mutual eps-inclusion) is computed
independently by bisection and serves as a cross-check.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import PseudometricFamily, as_point


class EmptyCloudError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Nonempty finite point set stored as an (m, n) read-only array.

    Points closer than ``dedup_tol`` in every coordinate (Chebyshev distance)
    to an earlier point are dropped; with the default 0 only exact
    duplicates are removed.  Order of first occurrence is kept, which makes
    index-based tie-breaking downstream deterministic.
    """

    points: np.ndarray
    dedup_tol: float = 0.0

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.points, dtype=float))
        if P.size == 0:
            raise EmptyCloudError("a point cloud must be nonempty")
        if not np.all(np.isfinite(P)):
            raise ValueError("non-finite coordinate in cloud")
        if self.dedup_tol < 0:
            raise ValueError("dedup_tol must be >= 0")
        keep = []
        for i, p in enumerate(P):
            if not any(np.max(np.abs(P[j] - p)) <= self.dedup_tol for j in keep):
                keep.append(i)
        P = P[keep].copy()
        P.setflags(write=False)
        object.__setattr__(self, "points", P)

    @classmethod
    def of(cls, points, dimension: int | None = None, dedup_tol: float = 0.0) -> "PointCloud":
        """Build from a list of points; bare scalars are read as 1-d points."""
        rows = [as_point(p, dimension) for p in points]
        if not rows:
            raise EmptyCloudError("a point cloud must be nonempty")
        return cls(np.vstack(rows), dedup_tol)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def __eq__(self, other) -> bool:
        # set equality; order of points is irrelevant
        return isinstance(other, PointCloud) and self.as_set() == other.as_set()

    def __hash__(self):
        return hash(self.as_set())

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, float).reshape(-1)
        return bool(np.any(np.max(np.abs(self.points - x), axis=1) <= tol))

    def as_set(self) -> frozenset:
        return frozenset(map(tuple, self.points.tolist()))

    def union(self, *others: "PointCloud") -> "PointCloud":
        return PointCloud(np.vstack([self.points] + [o.points for o in others]), self.dedup_tol)

    def to_dict(self) -> dict:
        return {"points": self.points.tolist()}

    @classmethod
    def from_dict(cls, doc, dimension: int | None = None) -> "PointCloud":
        return cls.of(doc["points"], dimension)

    @classmethod
    def load(cls, path, dimension: int | None = None) -> "PointCloud":
        with open(path) as fh:
            return cls.from_dict(json.load(fh), dimension)


@dataclass(frozen=True)
class Entourage:
    """U(lambda, eps) = {(x, y): d_lambda(x, y) < eps}."""

    index: str
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("entourage radius must be positive")


def _cloud(A) -> PointCloud:
    if isinstance(A, PointCloud):
        return A
    return PointCloud.of(A)


def dist_to_set(family: PseudometricFamily, index: str, a, A) -> float:
    A = _cloud(A)
    D = family.pairwise(index, family.point(a), A.points)
    return float(D.min())


def excess(family: PseudometricFamily, index: str, A, B) -> float:
    """sup_{x in A} d_lambda(x, B)."""
    A, B = _cloud(A), _cloud(B)
    return float(family.pairwise(index, A.points, B.points).min(axis=1).max())


def hausdorff_pseudometric(family: PseudometricFamily, index: str, A, B) -> float:
    A, B = _cloud(A), _cloud(B)
    D = family.pairwise(index, A.points, B.points)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def hausdorff_rho(family: PseudometricFamily, A, B) -> float:
    """min(1, max_lambda H^lambda(A, B)): the Hausdorff metric of the truncated sup metric."""
    return min(1.0, max(hausdorff_pseudometric(family, lam, A, B) for lam in family.indices))


def _mutually_included(D: np.ndarray, eps: float) -> bool:
    # every row and every column has an entry strictly below eps
    inside = D < eps
    return bool(inside.any(axis=1).all() and inside.any(axis=0).all())


def hausdorff_via_inflation(family: PseudometricFamily, index: str, A, B, tol: float = 1e-9) -> float:
    """inf{eps > 0 : A in B_lambda(B, eps) and B in B_lambda(A, eps)} by bisection.

    The upper seed is the largest pairwise distance between the clouds (plus
    a margin), at which mutual inclusion always holds.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    A, B = _cloud(A), _cloud(B)
    D = family.pairwise(index, A.points, B.points)
    lo, hi = 0.0, float(D.max()) + tol
    if _mutually_included(D, tol):
        return 0.0
    # invariant: inclusion fails at lo, holds at hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _mutually_included(D, mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def entourage_contains(family: PseudometricFamily, U: Entourage, A, B) -> bool:
    """(A, B) in H_U: A within U[B] and B within U[A], strict inequality."""
    family.metric(U.index)
    A, B = _cloud(A), _cloud(B)
    return _mutually_included(family.pairwise(U.index, A.points, B.points), U.radius)
