"""Uniform spaces presented by finite families of pseudometrics.

A space is a dense coordinate space R^n together with a finite, ordered
family {d_lambda} of pseudometrics.  The built-in pseudometric kinds are all
seminorm-induced (d(x, y) = ||x - y||), which the locally convex machinery
in :mod:`uniformis.fixedpoint` relies on; arbitrary callables are accepted
as well but are opaque to the convex solvers.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

MAX_INDEX = "__max"

KINDS = ("coordinate_abs", "weighted_abs", "euclidean_subset", "max_of", "custom")


def float_tol() -> float:
    """Default absolute comparison tolerance (``UNIFORMIS_FLOAT_TOL`` overrides 1e-9)."""
    raw = os.environ.get("UNIFORMIS_FLOAT_TOL")
    if raw is None:
        return 1e-9
    value = float(raw)
    if not value > 0:
        raise ValueError(f"UNIFORMIS_FLOAT_TOL must be positive, got {raw!r}")
    return value


class DimensionError(ValueError):
    pass


def as_point(coords, dimension: int | None = None) -> np.ndarray:
    """Validate ``coords`` and return a read-only float vector."""
    x = np.array(coords, dtype=float).reshape(-1)
    if x.size == 0:
        raise DimensionError("a point needs at least one coordinate")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"non-finite coordinate in {coords!r}")
    if dimension is not None and x.size != dimension:
        raise DimensionError(f"expected dimension {dimension}, got {x.size}")
    x.setflags(write=False)
    return x


@dataclass(frozen=True)
class Pseudometric:
    """One member d_lambda of a family.

    ``kind`` selects the formula; ``params`` carries its data:

    * ``coordinate_abs``: ``{"coord": i}`` -> |x_i - y_i|
    * ``weighted_abs``: ``{"weights": [w_1..w_n]}`` -> sum w_i |x_i - y_i|, w_i >= 0
    * ``euclidean_subset``: ``{"coords": [i, j, ...]}`` -> Euclidean norm on those coordinates
    * ``max_of``: ``{"members": (Pseudometric, ...)}`` -> pointwise max
    * ``custom``: ``{"fn": callable(x, y) -> float}``
    """

    label: str
    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown pseudometric kind {self.kind!r}")
        if self.kind == "weighted_abs" and any(w < 0 for w in self.params["weights"]):
            raise ValueError(f"{self.label}: weights must be nonnegative")
        if self.kind == "custom" and not callable(self.params.get("fn")):
            raise ValueError(f"{self.label}: custom pseudometric needs a callable 'fn'")

    @property
    def seminorm_induced(self) -> bool:
        if self.kind == "custom":
            return bool(self.params.get("seminorm", False))
        if self.kind == "max_of":
            return all(m.seminorm_induced for m in self.params["members"])
        return True

    @property
    def polyhedral(self) -> bool:
        """True when the seminorm is a max of weighted l1 forms (LP-representable)."""
        if self.kind in ("coordinate_abs", "weighted_abs"):
            return True
        if self.kind == "euclidean_subset":
            return len(self.params["coords"]) == 1
        if self.kind == "max_of":
            return all(m.polyhedral for m in self.params["members"])
        return False

    def l1_forms(self, dimension: int) -> list[np.ndarray]:
        """Weight vectors w with ||v|| = max_w sum_i w_i |v_i| (polyhedral kinds only)."""
        if self.kind == "coordinate_abs":
            w = np.zeros(dimension)
            w[self.params["coord"]] = 1.0
            return [w]
        if self.kind == "weighted_abs":
            return [np.asarray(self.params["weights"], dtype=float)]
        if self.kind == "euclidean_subset" and len(self.params["coords"]) == 1:
            w = np.zeros(dimension)
            w[self.params["coords"][0]] = 1.0
            return [w]
        if self.kind == "max_of":
            return [w for m in self.params["members"] for w in m.l1_forms(dimension)]
        raise TypeError(f"{self.label} ({self.kind}) is not polyhedral")

    def norm_rows(self, V: np.ndarray) -> np.ndarray:
        """Seminorm of each row of V (seminorm-induced kinds)."""
        V = np.atleast_2d(V)
        if self.kind == "coordinate_abs":
            return np.abs(V[:, self.params["coord"]])
        if self.kind == "weighted_abs":
            return np.abs(V) @ np.asarray(self.params["weights"], dtype=float)
        if self.kind == "euclidean_subset":
            return np.linalg.norm(V[:, list(self.params["coords"])], axis=1)
        if self.kind == "max_of":
            return np.max([m.norm_rows(V) for m in self.params["members"]], axis=0)
        fn = self.params["fn"]
        zero = np.zeros(V.shape[1])
        return np.array([fn(v, zero) for v in V], dtype=float)

    def pairwise(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Matrix D[i, j] = d(X[i], Y[j])."""
        X = np.atleast_2d(X)
        Y = np.atleast_2d(Y)
        if self.kind == "custom":
            fn = self.params["fn"]
            return np.array([[float(fn(x, y)) for y in Y] for x in X]).reshape(len(X), len(Y))
        if self.kind == "max_of":
            return np.max([m.pairwise(X, Y) for m in self.params["members"]], axis=0)
        diff = X[:, None, :] - Y[None, :, :]
        if self.kind == "coordinate_abs":
            return np.abs(diff[..., self.params["coord"]])
        if self.kind == "weighted_abs":
            return np.abs(diff) @ np.asarray(self.params["weights"], dtype=float)
        return np.linalg.norm(diff[..., list(self.params["coords"])], axis=-1)

    def __call__(self, x, y) -> float:
        if self.kind == "custom":
            return float(self.params["fn"](np.asarray(x, float), np.asarray(y, float)))
        return float(self.pairwise(np.asarray(x, float), np.asarray(y, float))[0, 0])

    def to_dict(self) -> dict:
        if self.kind == "custom":
            raise TypeError(f"{self.label}: custom pseudometrics cannot be serialized")
        if self.kind == "max_of":
            return {"label": self.label, "kind": "max_of",
                    "params": {"members": [m.to_dict() for m in self.params["members"]]}}
        return {"label": self.label, "kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Pseudometric":
        kind = doc["kind"]
        params = dict(doc.get("params", {}))
        if kind == "max_of":
            params["members"] = tuple(cls.from_dict(m) for m in params["members"])
        elif kind == "euclidean_subset":
            params["coords"] = tuple(params["coords"])
        elif kind == "weighted_abs":
            params["weights"] = tuple(float(w) for w in params["weights"])
        return cls(doc["label"], kind, params)


def coordinate_abs(label: str, coord: int) -> Pseudometric:
    return Pseudometric(label, "coordinate_abs", {"coord": coord})


def weighted_abs(label: str, weights: Sequence[float]) -> Pseudometric:
    return Pseudometric(label, "weighted_abs", {"weights": tuple(float(w) for w in weights)})


def euclidean_subset(label: str, coords: Sequence[int]) -> Pseudometric:
    return Pseudometric(label, "euclidean_subset", {"coords": tuple(coords)})


@dataclass(frozen=True)
class PseudometricFamily:
    dimension: int
    metrics: tuple[Pseudometric, ...]
    separating: bool = False
    saturated: bool = False

    def __post_init__(self):
        if self.dimension < 1:
            raise DimensionError("dimension must be positive")
        if not self.metrics:
            raise ValueError("a pseudometric family needs at least one index")
        labels = [m.label for m in self.metrics]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels in {labels}")
        for m in self.metrics:
            _check_coords(m, self.dimension)
        object.__setattr__(self, "_by_label", {m.label: m for m in self.metrics})

    @property
    def indices(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.metrics)

    @property
    def seminorm_induced(self) -> bool:
        return all(m.seminorm_induced for m in self.metrics)

    def metric(self, index: str) -> Pseudometric:
        try:
            return self._by_label[index]
        except KeyError:
            raise KeyError(f"unknown index {index!r}; family has {list(self.indices)}") from None

    def point(self, coords) -> np.ndarray:
        return as_point(coords, self.dimension)

    def eval(self, index: str, x, y) -> float:
        return self.metric(index)(self.point(x), self.point(y))

    def distances(self, x, y) -> dict[str, float]:
        x, y = self.point(x), self.point(y)
        return {m.label: m(x, y) for m in self.metrics}

    def max_distance(self, x, y) -> float:
        return max(self.distances(x, y).values())

    def pairwise(self, index: str, X, Y) -> np.ndarray:
        return self.metric(index).pairwise(_as_rows(X, self.dimension), _as_rows(Y, self.dimension))

    def seminorm(self, index: str, v) -> float:
        m = self.metric(index)
        if not m.seminorm_induced:
            raise TypeError(f"index {index!r} is not seminorm-induced")
        return float(m.norm_rows(np.atleast_2d(np.asarray(v, float)))[0])

    def to_dict(self) -> dict:
        return {"dimension": self.dimension,
                "pseudometrics": [m.to_dict() for m in self.metrics],
                "separating": self.separating}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "PseudometricFamily":
        metrics = tuple(Pseudometric.from_dict(m) for m in doc["pseudometrics"])
        labels = {m.label for m in metrics}
        fam = cls(int(doc["dimension"]), metrics, bool(doc.get("separating", False)),
                  saturated=MAX_INDEX in labels)
        return fam

    @classmethod
    def load(cls, path) -> "PseudometricFamily":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _check_coords(m: Pseudometric, dimension: int) -> None:
    if m.kind == "coordinate_abs":
        coords = [m.params["coord"]]
    elif m.kind == "euclidean_subset":
        coords = list(m.params["coords"])
    elif m.kind == "weighted_abs":
        if len(m.params["weights"]) != dimension:
            raise DimensionError(f"{m.label}: {len(m.params['weights'])} weights for dimension {dimension}")
        return
    elif m.kind == "max_of":
        for member in m.params["members"]:
            _check_coords(member, dimension)
        return
    else:
        return
    if not coords or any(not 0 <= c < dimension for c in coords):
        raise DimensionError(f"{m.label}: coordinates {coords} out of range for dimension {dimension}")


def _as_rows(X, dimension: int) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != dimension:
        raise DimensionError(f"expected dimension {dimension}, got {X.shape[1]}")
    return X


def coordinate_family(dimension: int, *, saturate_: bool = False) -> PseudometricFamily:
    """The family {|x_i - y_i|} labelled d1..dn; separating."""
    fam = PseudometricFamily(dimension, tuple(coordinate_abs(f"d{i + 1}", i) for i in range(dimension)),
                             separating=True)
    return saturate(fam) if saturate_ else fam


def saturate(family: PseudometricFamily) -> PseudometricFamily:
    """Add a top index ``__max`` dominating every member.

    For a finite family the top element witnesses condition (S) for every
    pair at once.  Idempotent.
    """
    if not family.metrics:
        raise ValueError("cannot saturate an empty family")
    if MAX_INDEX in family.indices:
        return family
    top = Pseudometric(MAX_INDEX, "max_of", {"members": family.metrics})
    return PseudometricFamily(family.dimension, family.metrics + (top,),
                              separating=family.separating, saturated=True)


def sup_metric_rho(family: PseudometricFamily, x, y) -> float:
    """min(1, max_lambda d_lambda(x, y))."""
    return min(1.0, family.max_distance(x, y))


def is_cauchy_at_tolerance(seq: Sequence, family: PseudometricFamily, eps: float) -> bool:
    """True iff some tail of at least two terms has every d_lambda-diameter below ``eps``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    pts = _as_rows(seq, family.dimension)
    if len(pts) == 0:
        raise ValueError("sequence must be nonempty")
    # diameter of the tail from N is the max of D[N:, N:]; accumulate rows from the end
    n = len(pts)
    worst = np.zeros(n)
    for m in family.metrics:
        D = m.pairwise(pts, pts)
        row_max = np.array([D[i, i:].max() for i in range(n)])
        tail = np.maximum.accumulate(row_max[::-1])[::-1]
        worst = np.maximum(worst, tail)
    if n == 1:
        return True
    # a one-point tail is trivially small, so only tails with two or more points count
    return bool(np.any(worst[:-1] < eps))


@dataclass(frozen=True)
class ContractionConstants:
    """Per-index constants k_lambda in [0, 1)."""

    per_index: Mapping[str, float]

    def __post_init__(self):
        if not self.per_index:
            raise ValueError("need at least one constant")
        for lam, k in self.per_index.items():
            if not 0 <= k < 1:
                raise ValueError(f"k[{lam}] = {k} outside [0, 1)")

    @property
    def sup(self) -> float:
        return max(self.per_index.values())

    def __getitem__(self, index: str) -> float:
        return self.per_index[index]

    @classmethod
    def uniform(cls, family: PseudometricFamily, k: float) -> "ContractionConstants":
        return cls({lam: k for lam in family.indices})

    def for_family(self, family: PseudometricFamily) -> "ContractionConstants":
        """Fill ``__max`` (if present in family but absent here) with ``sup``."""
        missing = [lam for lam in family.indices if lam not in self.per_index]
        if missing == [MAX_INDEX]:
            return ContractionConstants({**self.per_index, MAX_INDEX: self.sup})
        if missing:
            raise KeyError(f"no constants for indices {missing}")
        return self


def axiom_violations(family: PseudometricFamily, samples: Iterable, tol: float | None = None) -> list[str]:
    """Check zero self-distance, symmetry, triangle and (S) on sampled points."""
    tol = float_tol() if tol is None else tol
    pts = _as_rows(list(samples), family.dimension)
    out = []
    mats = {m.label: m.pairwise(pts, pts) for m in family.metrics}
    for lam, D in mats.items():
        if np.any(np.abs(np.diag(D)) > tol):
            out.append(f"{lam}: nonzero self-distance")
        if np.any(np.abs(D - D.T) > tol):
            out.append(f"{lam}: asymmetric")
        if np.any(D < -tol):
            out.append(f"{lam}: negative distance")
        # D[i,k] <= D[i,j] + D[j,k]
        if np.any(D[:, None, :] > D[:, :, None] + D[None, :, :] + tol):
            out.append(f"{lam}: triangle inequality fails")
    if family.saturated:
        stack = np.stack(list(mats.values()))
        top = stack.max(axis=0)
        if not any(np.all(D >= top - tol) for D in mats.values()):
            out.append("saturated flag set but no index dominates the family")
    return out
