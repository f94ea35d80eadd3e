from __future__ import annotations

import numpy as np
import pytest

from bcd_pep.partition import equal_partition, partition_from_sizes
from bcd_pep.problem import (
    IllConditionedError, QuadraticProblem, block_lipschitz, level_radius, load_instance,
    power_iteration, random_least_squares, save_instance,
)

from oracles import sampled_level_radius


def test_power_iteration_against_eigvalsh():
    rng = np.random.default_rng(11)
    for n in (1, 2, 5, 20, 50):
        for _ in range(5):
            G = rng.standard_normal((n + 3, n))
            G = G.T @ G
            ref = np.linalg.eigvalsh(G)[-1]
            assert abs(power_iteration(G) - ref) <= 1e-10 * ref


def test_power_iteration_orthogonal_start():
    # all-ones vector is in the null space
    G = np.array([[1.0, -1.0], [-1.0, 1.0]])
    assert power_iteration(G) == pytest.approx(2.0, rel=1e-12)
    assert power_iteration(np.zeros((3, 3))) == 0.0


def test_block_constants_diagonal_example():
    prob = QuadraticProblem(np.diag([1.0, 2.0]), np.zeros(2), equal_partition(2, 2))
    assert block_lipschitz(prob, 1) == pytest.approx(1.0, rel=1e-14)
    assert block_lipschitz(prob, 2) == pytest.approx(4.0, rel=1e-14)
    assert prob.global_lipschitz == pytest.approx(4.0, rel=1e-14)
    with pytest.raises(IndexError):
        block_lipschitz(prob, 3)


def test_level_radius_diagonal_examples():
    prob = QuadraticProblem(np.diag([1.0, 2.0]), np.zeros(2), equal_partition(2, 2))
    # f(x0) = 1/2; the level set is x1^2 + 4 x2^2 <= 1, widest along x1
    assert level_radius(prob, np.array([1.0, 0.0])) == pytest.approx(1.0, rel=1e-14)
    # f(x0) = 2; the level set is x1^2 + 4 x2^2 <= 4
    assert level_radius(prob, np.array([0.0, 1.0])) == pytest.approx(2.0, rel=1e-14)
    assert level_radius(prob, np.zeros(2)) == 0.0


def test_level_radius_matches_sampled_ellipsoid():
    rng = np.random.default_rng(3)
    for seed in range(5):
        prob = random_least_squares(6, 3, seed)
        x0 = rng.standard_normal(6)
        R = level_radius(prob, x0)
        sampled, exact = sampled_level_radius(prob.design_matrix, prob.rhs, x0, 1000, rng)
        assert sampled <= R * (1 + 1e-9)
        assert exact == pytest.approx(R, rel=1e-9)


def test_random_instance_minimiser():
    prob = random_least_squares(2, 1, 0)
    A, b = prob.design_matrix, prob.rhs
    # Cramer's rule for the 2x2 system
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    xs = np.array([b[0] * A[1, 1] - A[0, 1] * b[1], A[0, 0] * b[1] - b[0] * A[1, 0]]) / det
    assert np.allclose(prob.minimizer, xs, rtol=1e-12, atol=1e-12)
    assert prob.optimal_value <= 1e-16 * float(b @ b)


def test_random_instance_deterministic():
    a = random_least_squares(20, 4, 7)
    b = random_least_squares(20, 4, 7)
    assert np.array_equal(a.design_matrix, b.design_matrix)
    assert np.array_equal(a.rhs, b.rhs)
    assert a.block_lipschitz == b.block_lipschitz
    c = random_least_squares(20, 4, 8)
    assert not np.array_equal(a.design_matrix, c.design_matrix)


def test_random_instance_validation():
    with pytest.raises(ValueError):
        random_least_squares(10, 3, 0)
    with pytest.raises(RuntimeError):
        random_least_squares(4, 2, 0, min_sigma=1e6)


def test_block_constants_bound_global_constant():
    # max_i L_i <= L <= sum_i L_i for any partition
    for seed in range(10):
        prob = random_least_squares(12, 4, seed)
        Ls = prob.block_lipschitz
        assert max(Ls) <= prob.global_lipschitz * (1 + 1e-12)
        assert prob.global_lipschitz <= sum(Ls) * (1 + 1e-12)


def test_gradient_matches_finite_differences():
    prob = random_least_squares(6, 2, 1)
    x = np.linspace(-1, 1, 6)
    h = 1e-6
    fd = np.array([(prob.value(x + h * e) - prob.value(x - h * e)) / (2 * h) for e in np.eye(6)])
    assert np.allclose(prob.gradient(x), fd, rtol=1e-6, atol=1e-6)
    assert np.array_equal(prob.block_gradient(x, 2), prob.gradient(x)[3:])


def test_singular_design_rejected():
    A = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(IllConditionedError):
        QuadraticProblem(A, np.ones(2), equal_partition(2, 1))


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        QuadraticProblem(np.eye(3), np.ones(2), equal_partition(3, 1))


def test_instance_round_trip(tmp_path):
    prob = random_least_squares(9, 3, 5)
    path = tmp_path / "inst.txt"
    save_instance(prob, path)
    back = load_instance(path)
    assert np.array_equal(back.design_matrix, prob.design_matrix)
    assert np.array_equal(back.rhs, prob.rhs)
    assert back.p == 3 and back.seed == 5


def test_instance_round_trip_unseeded(tmp_path):
    prob = QuadraticProblem(np.eye(2), np.ones(2), partition_from_sizes([1, 1]))
    save_instance(prob, tmp_path / "i.txt")
    assert load_instance(tmp_path / "i.txt").seed is None


def test_malformed_instance(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 1 0\n1 0\n0\n1 1\n")
    with pytest.raises(ValueError, match="line 3"):
        load_instance(path)
    path.write_text("2 1\n")
    with pytest.raises(ValueError, match="first line"):
        load_instance(path)
    path.write_text("2 1 0\n1 0\n")
    with pytest.raises(ValueError, match="expected 4 lines"):
        load_instance(path)


def test_block_gradient_lipschitz_property():
    rng = np.random.default_rng(12)
    prob = random_least_squares(12, 3, 4)
    for _ in range(1000):
        i = int(rng.integers(1, 4))
        x = rng.standard_normal(12)
        h = rng.standard_normal(4)
        y = x.copy()
        y[prob.partition.block_slice(i)] += h
        lhs = np.linalg.norm(prob.block_gradient(y, i) - prob.block_gradient(x, i))
        assert lhs <= prob.block_lipschitz[i - 1] * np.linalg.norm(h) * (1 + 1e-12)


def test_benchmark_instance_shape():
    prob = random_least_squares(100, 5, 7)
    assert prob.design_matrix.shape == (100, 100)
    assert [prob.design_matrix[:, blk].shape[1] for blk in prob.partition] == [20] * 5


def test_level_radius_dominates_start_distance():
    rng = np.random.default_rng(5)
    for seed in range(20):
        prob = random_least_squares(8, 2, seed)
        x0 = rng.standard_normal(8) * 3
        assert level_radius(prob, x0) >= np.linalg.norm(x0 - prob.minimizer) - 1e-12
