from __future__ import annotations

import numpy as np
import pytest

from bcd_pep.bcd import (
    NonFiniteIterate, pep_constraint_residuals, run_cyclic_bcd, trace_csv_text, write_trace_csv,
)
from bcd_pep.partition import equal_partition, partition_from_sizes
from bcd_pep.problem import QuadraticProblem, random_least_squares


def _quadratic(Q, b=None, sizes=None):
    Q = np.asarray(Q, dtype=float)
    A = np.linalg.cholesky(Q).T  # A^T A = Q
    n = Q.shape[0]
    part = partition_from_sizes(sizes) if sizes else equal_partition(n, n)
    return QuadraticProblem(A, np.zeros(n) if b is None else b, part)


def test_identity_converges_in_one_cycle():
    prob = QuadraticProblem(np.eye(4), np.array([1.0, 2.0, 3.0, 4.0]), equal_partition(4, 2))
    tr = run_cyclic_bcd(prob, np.zeros(4), 0)
    assert tr.points.shape == (3, 4)
    # L_i = 1 up to the rounding of the power iteration
    assert np.allclose(tr.point(0, 1), [1.0, 2.0, 0.0, 0.0], rtol=0, atol=1e-15)
    assert np.allclose(tr.point(1, 0), [1.0, 2.0, 3.0, 4.0], rtol=0, atol=1e-14)
    assert tr.objective_gaps[-1] <= 1e-28


def test_two_by_two_hand_iterates():
    prob = _quadratic([[2.0, 1.0], [1.0, 2.0]])
    tr = run_cyclic_bcd(prob, np.array([1.0, 1.0]), 0)
    assert np.allclose(tr.point(0, 1), [-0.5, 1.0], atol=1e-14)
    assert np.allclose(tr.point(1, 0), [-0.5, 0.25], atol=1e-14)
    assert tr.objective_gaps[-1] == pytest.approx(0.1875, rel=1e-13)
    assert tr.objective_gaps[0] == pytest.approx(3.0, rel=1e-13)
    assert pep_constraint_residuals(tr, prob).min_full() >= -1e-12


def test_flat_layout():
    prob = random_least_squares(6, 3, 0)
    tr = run_cyclic_bcd(prob, np.zeros(6), 2)
    assert tr.M == 9
    assert tr.points.shape == (10, 6)
    assert np.array_equal(tr.cycle_gaps(), tr.objective_gaps[::3])
    assert len(tr.cycle_gaps()) == 4
    # each step changes only the block it updates
    for q in range(1, 10):
        i = (q - 1) % 3
        changed = np.nonzero(tr.points[q] != tr.points[q - 1])[0]
        assert set(changed) <= set(range(2 * i, 2 * i + 2))
    assert not tr.points.flags.writeable


def test_monotone_descent():
    for seed in range(20):
        prob = random_least_squares(20, 4, seed)
        tr = run_cyclic_bcd(prob, np.zeros(20), 30)
        d = np.diff(tr.objective_gaps)
        assert np.all(d <= 1e-12 * (1 + tr.objective_gaps[0]))


def test_block_update_is_exact_minimiser_for_scalar_blocks():
    # with scalar blocks the step 1/L_i solves the one-dimensional problem exactly
    prob = random_least_squares(5, 5, 3)
    tr = run_cyclic_bcd(prob, np.zeros(5), 1)
    for q in range(1, tr.M + 1):
        i = (q - 1) % 5 + 1
        g = prob.block_gradient(tr.points[q], i)
        assert abs(g[0]) <= 1e-10 * (1 + np.abs(tr.full_gradients[0]).max())


def test_stationary_start():
    prob = random_least_squares(4, 2, 1)
    tr = run_cyclic_bcd(prob, prob.minimizer.copy(), 3)
    assert tr.radius == 0.0
    sl = pep_constraint_residuals(tr, prob)
    assert sl.min_full() == 0.0


def test_validation():
    prob = random_least_squares(4, 2, 1)
    with pytest.raises(ValueError):
        run_cyclic_bcd(prob, np.zeros(4), -1)
    with pytest.raises(ValueError):
        run_cyclic_bcd(prob, np.zeros(3), 1)
    with pytest.raises(ValueError):
        run_cyclic_bcd(prob, np.zeros(4), 1, step_constants=[1.0])
    with pytest.raises(NonFiniteIterate):
        # absurdly long steps blow up
        run_cyclic_bcd(prob, np.ones(4), 2000, step_constants=[1e-8, 1e-8])


def test_constraint_slacks_nonnegative():
    for seed in range(20):
        for p in (2, 5):
            prob = random_least_squares(10, p, seed)
            tr = run_cyclic_bcd(prob, np.zeros(10), 10)
            sl = pep_constraint_residuals(tr, prob)
            assert sl.consecutive.shape == (tr.M, p)
            assert sl.min_full() >= -1e-9
            # relative to the size of the normalised quantities the slack is tiny too
            delta, _ = tr.normalized(prob.L_max)
            assert sl.min_full() >= -1e-9 * delta[0]


def test_constraint_check_detects_wrong_constant():
    # pretending the blocks are much smoother than they are breaks the relaxation
    prob = random_least_squares(10, 2, 0)
    tr = run_cyclic_bcd(prob, np.zeros(10), 5)
    sl = pep_constraint_residuals(tr, prob, L_c=0.01 * prob.L_min)
    assert sl.min_full() < 0


def test_diag_views():
    prob = random_least_squares(6, 3, 0)
    tr = run_cyclic_bcd(prob, np.zeros(6), 1)
    sl = pep_constraint_residuals(tr, prob)
    assert sl.consecutive_diag.shape == (6,)
    assert sl.consecutive_diag[4] == sl.consecutive[4, 1]
    assert sl.min_diag() >= sl.min_full()


def test_trace_csv(tmp_path):
    prob = random_least_squares(4, 2, 0)
    tr = run_cyclic_bcd(prob, np.zeros(4), 1)
    text = trace_csv_text(tr)
    lines = text.splitlines()
    assert lines[0] == "q,k,i,f_gap,grad_norm"
    assert len(lines) == tr.M + 2
    assert lines[1].startswith("0,0,0,")
    assert lines[3].startswith("2,0,2,")
    assert lines[4].startswith("3,1,1,")
    write_trace_csv(tr, tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text() == text
