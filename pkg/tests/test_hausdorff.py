import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uniformis.core import coordinate_family
from uniformis.hausdorff import (EmptyCloudError, Entourage, PointCloud, dist_to_set, entourage_contains, excess,
                                 hausdorff_pseudometric, hausdorff_rho, hausdorff_via_inflation)

cloud1 = st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=8)


def test_two_point_example(line):
    A, B = PointCloud.of([0, 1], 1), PointCloud.of([0], 1)
    assert hausdorff_pseudometric(line, "d1", A, B) == 1.0
    assert excess(line, "d1", B, A) == 0.0
    assert hausdorff_via_inflation(line, "d1", A, B) == pytest.approx(1.0, abs=1e-6)


def test_pseudometric_not_metric_on_sets():
    fam = coordinate_family(2)
    A = PointCloud.of([[0, 0], [1, 0]])
    B = PointCloud.of([[0, 5], [1, -3]])
    assert hausdorff_pseudometric(fam, "d1", A, B) == 0.0
    assert hausdorff_pseudometric(fam, "d2", A, B) == 5.0


def test_empty_cloud_is_an_error():
    with pytest.raises(EmptyCloudError):
        PointCloud.of([], 1)


def test_cloud_dedup_and_order():
    C = PointCloud.of([[1.0], [0.0], [1.0]])
    assert len(C) == 2 and C[0][0] == 1.0
    assert C == PointCloud.of([[0.0], [1.0]])


def test_cloud_round_trip(tmp_path):
    C = PointCloud.of([[0.5, 1], [2, 3]])
    p = tmp_path / "c.json"
    p.write_text(__import__("json").dumps(C.to_dict()))
    assert PointCloud.load(p) == C


def test_entourage_is_strict(line):
    A, B = PointCloud.of([0], 1), PointCloud.of([0.5], 1)
    assert not entourage_contains(line, Entourage("d1", 0.5), A, B)
    assert entourage_contains(line, Entourage("d1", 0.5000001), A, B)
    with pytest.raises(ValueError):
        Entourage("d1", 0.0)


def test_rho_truncates(line):
    assert hausdorff_rho(line, PointCloud.of([0], 1), PointCloud.of([7], 1)) == 1.0
    assert hausdorff_rho(line, PointCloud.of([0], 1), PointCloud.of([0.25], 1)) == 0.25


def test_dist_to_set(line):
    assert dist_to_set(line, "d1", [0.4], PointCloud.of([0, 1], 1)) == pytest.approx(0.4)


@given(cloud1, cloud1, cloud1)
def test_hausdorff_axioms(a, b, c):
    fam = coordinate_family(1)
    A, B, C = (PointCloud.of(v, 1) for v in (a, b, c))
    H = lambda X, Y: hausdorff_pseudometric(fam, "d1", X, Y)
    assert H(A, A) == 0
    assert H(A, B) == H(B, A)
    assert H(A, C) <= H(A, B) + H(B, C) + 1e-9


@settings(max_examples=40)
@given(cloud1, cloud1)
def test_inflation_oracle_agrees(a, b):
    fam = coordinate_family(1)
    A, B = PointCloud.of(a, 1), PointCloud.of(b, 1)
    assert abs(hausdorff_pseudometric(fam, "d1", A, B) - hausdorff_via_inflation(fam, "d1", A, B)) <= 1e-6


def test_mixed_family_oracle(mixed_plane, rng):
    for _ in range(20):
        A = PointCloud(rng.normal(size=(rng.integers(1, 10), 2)))
        B = PointCloud(rng.normal(size=(rng.integers(1, 10), 2)))
        for lam in mixed_plane.indices:
            h = hausdorff_pseudometric(mixed_plane, lam, A, B)
            assert h == pytest.approx(hausdorff_via_inflation(mixed_plane, lam, A, B), abs=1e-6)
