"""Triplet generation and factored constraint evaluation tests."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from tripletboost.constraints import (
    ConstraintFactors,
    Dataset,
    TripletConstraint,
    eval_full,
    eval_rank_one,
    factors_from_dataset,
    factors_from_triplet,
    generate_triplets,
    stack_factors,
)


def toy_dataset():
    # Two classes on a line: class 0 at x=0,1,2 and class 1 at x=10,11,12.
    feats = np.array([[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]])
    labels = np.array([0, 0, 0, 1, 1, 1])
    return Dataset(features=feats, labels=labels)


class TestDataset:
    def test_valid_construction(self):
        d = toy_dataset()
        assert d.n_points == 6
        assert d.dim == 1
        assert d.features.flags["C_CONTIGUOUS"]
        assert d.labels.dtype.kind == "i"

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            Dataset(features=np.zeros(4), labels=np.zeros(4, dtype=int))
        with pytest.raises(ValueError):
            Dataset(features=np.zeros((3, 2)), labels=np.zeros(2, dtype=int))
        with pytest.raises(ValueError):
            Dataset(features=np.zeros((1, 2)), labels=np.zeros(1, dtype=int))

    def test_rejects_non_finite_features(self):
        feats = np.array([[0.0, np.nan], [1.0, 2.0]])
        with pytest.raises(ValueError):
            Dataset(features=feats, labels=np.array([0, 1]))

    def test_rejects_fractional_labels(self):
        with pytest.raises(ValueError):
            Dataset(features=np.zeros((2, 1)), labels=np.array([0.5, 1.0]))

    def test_accepts_float_integer_labels(self):
        d = Dataset(features=np.zeros((2, 1)), labels=np.array([0.0, 1.0]))
        assert d.labels.dtype.kind == "i"


class TestGenerateTriplets:
    def test_exact_list_on_toy_data(self):
        # For anchor 0 with k=1: nearest same-label is 1, nearest
        # different-label is 3 (x=10), giving (0, 1, 3); and so on.
        trips = generate_triplets(toy_dataset(), k=1)
        expected = [
            TripletConstraint(0, 1, 3),
            TripletConstraint(1, 0, 3),
            TripletConstraint(2, 1, 3),
            TripletConstraint(3, 4, 2),
            TripletConstraint(4, 3, 2),
            TripletConstraint(5, 4, 2),
        ]
        assert trips == expected

    def test_anchor_contributes_k_squared(self):
        trips = generate_triplets(toy_dataset(), k=2)
        assert len(trips) == 6 * 4
        per_anchor = {}
        for t in trips:
            per_anchor[t.i] = per_anchor.get(t.i, 0) + 1
        assert all(v == 4 for v in per_anchor.values())

    def test_distance_tie_prefers_lower_index(self):
        # Anchors 1 and 2 are equidistant from 0; index 1 must win the
        # single target slot.
        feats = np.array([[0.0], [1.0], [-1.0], [5.0], [6.0]])
        labels = np.array([0, 0, 0, 1, 1])
        trips = generate_triplets(Dataset(features=feats, labels=labels), k=1)
        anchor0 = [t for t in trips if t.i == 0]
        assert anchor0 == [TripletConstraint(0, 1, 3)]

    def test_labels_respected(self):
        rng = np.random.default_rng(4)
        feats = rng.standard_normal((40, 3))
        labels = rng.integers(0, 3, 40)
        while np.min(np.bincount(labels)) < 3:
            labels = rng.integers(0, 3, 40)
        data = Dataset(features=feats, labels=labels)
        for t in generate_triplets(data, k=2):
            assert labels[t.i] == labels[t.j]
            assert labels[t.i] != labels[t.k]
            assert t.i != t.j

    def test_neighbors_are_nearest(self):
        rng = np.random.default_rng(9)
        feats = rng.standard_normal((30, 4))
        labels = np.array([0] * 15 + [1] * 15)
        data = Dataset(features=feats, labels=labels)
        k = 3
        trips = generate_triplets(data, k=k)
        for anchor in range(30):
            d2 = np.sum((feats - feats[anchor]) ** 2, axis=1)
            same = [i for i in range(30) if labels[i] == labels[anchor] and i != anchor]
            diff = [i for i in range(30) if labels[i] != labels[anchor]]
            want_targets = set(sorted(same, key=lambda i: (d2[i], i))[:k])
            want_imposters = set(sorted(diff, key=lambda i: (d2[i], i))[:k])
            got_targets = {t.j for t in trips if t.i == anchor}
            got_imposters = {t.k for t in trips if t.i == anchor}
            assert got_targets == want_targets
            assert got_imposters == want_imposters

    def test_seed_does_not_change_output(self):
        d = toy_dataset()
        assert generate_triplets(d, 2, seed=0) == generate_triplets(d, 2, seed=99)

    def test_small_class_error_names_class(self):
        feats = np.array([[0.0], [1.0], [2.0], [10.0]])
        labels = np.array([0, 0, 0, 7])
        with pytest.raises(ValueError, match="class 7"):
            generate_triplets(Dataset(features=feats, labels=labels), k=1)

    def test_single_class_rejected(self):
        feats = np.array([[0.0], [1.0], [2.0]])
        with pytest.raises(ValueError):
            generate_triplets(Dataset(features=feats, labels=np.zeros(3, dtype=int)), k=1)

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            generate_triplets(toy_dataset(), k=0)


class TestFactors:
    def test_worked_example(self):
        feats = np.array([[1.0, 2.0], [1.0, 3.0], [4.0, 2.0]])
        labels = np.array([0, 0, 1])
        data = Dataset(features=feats, labels=labels)
        f = factors_from_triplet(data, TripletConstraint(0, 1, 2))
        assert_allclose(f.u, [-3.0, 0.0])
        assert_allclose(f.v, [0.0, -1.0])
        # against the identity metric the margin is |u|^2 - |v|^2 = 9 - 1
        assert_allclose(eval_full(f, np.eye(2)), 8.0)

    def test_index_out_of_range(self):
        with pytest.raises(ValueError):
            factors_from_triplet(toy_dataset(), TripletConstraint(0, 1, 6))

    def test_rank_one_matches_full_on_outer_product(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            dim = int(rng.integers(2, 8))
            f = ConstraintFactors(
                u=rng.standard_normal(dim), v=rng.standard_normal(dim)
            )
            xi = rng.standard_normal(dim)
            xi /= np.linalg.norm(xi)
            assert_allclose(
                eval_rank_one(f, xi), eval_full(f, np.outer(xi, xi)), atol=1e-10
            )

    def test_rank_one_rejects_non_unit(self):
        f = ConstraintFactors(u=np.array([1.0, 0.0]), v=np.array([0.0, 1.0]))
        with pytest.raises(ValueError):
            eval_rank_one(f, np.array([1.0, 1.0]))

    def test_full_rejects_asymmetric(self):
        f = ConstraintFactors(u=np.array([1.0, 0.0]), v=np.array([0.0, 1.0]))
        with pytest.raises(ValueError):
            eval_full(f, np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_full_linear_in_metric(self):
        rng = np.random.default_rng(2)
        f = ConstraintFactors(u=rng.standard_normal(4), v=rng.standard_normal(4))
        a = rng.standard_normal((4, 4))
        a = a @ a.T
        b = rng.standard_normal((4, 4))
        b = b @ b.T
        lhs = eval_full(f, 2.0 * a + 3.0 * b)
        rhs = 2.0 * eval_full(f, a) + 3.0 * eval_full(f, b)
        assert_allclose(lhs, rhs, rtol=1e-12)

    def test_stack_factors_shapes(self):
        data = toy_dataset()
        factors = factors_from_dataset(data, generate_triplets(data, 1))
        U, V = stack_factors(factors)
        assert U.shape == V.shape == (6, 1)
        assert U.flags["C_CONTIGUOUS"] and V.flags["C_CONTIGUOUS"]
        assert_allclose(U[0], factors[0].u)
        assert_allclose(V[0], factors[0].v)

    def test_stack_rejects_empty_and_mixed(self):
        with pytest.raises(ValueError):
            stack_factors([])
        mixed = [
            ConstraintFactors(u=np.zeros(2), v=np.zeros(2)),
            ConstraintFactors(u=np.zeros(3), v=np.zeros(3)),
        ]
        with pytest.raises(ValueError):
            stack_factors(mixed)
