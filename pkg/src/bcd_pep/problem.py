"""Least-squares test instances f(x) = 1/2 ||Ax - b||^2 and their constants."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .partition import BlockPartition, equal_partition

MAX_REGENERATIONS = 100


class IllConditionedError(ValueError):
    pass


def power_iteration(G: np.ndarray, tol: float = 1e-14, max_iter: int = 10_000) -> float:
    """Largest eigenvalue of the symmetric PSD matrix ``G``.

    Starts from the normalised all-ones vector and stops once the Rayleigh
    quotient's relative change drops below ``tol``.
    """
    G = np.asarray(G, dtype=float)
    n = G.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    mu = 0.0
    for _ in range(max_iter):
        w = G @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            if not np.any(G):
                return 0.0
            # all-ones start lies in the null space; restart on the largest diagonal entry
            v = np.zeros(n)
            v[int(np.argmax(np.diag(G)))] = 1.0
            mu = 0.0
            continue
        mu_new = float(v @ w)
        v = w / norm
        if abs(mu_new - mu) <= tol * abs(mu_new):
            return mu_new
        mu = mu_new
    return mu


@dataclass(frozen=True, eq=False)
class QuadraticProblem:
    """f(x) = 1/2 ||Ax - b||^2 with a nonsingular square ``A``.

    Smoothness constants, the minimiser and the smallest singular value are
    computed once at construction.
    """

    design_matrix: np.ndarray
    rhs: np.ndarray
    partition: BlockPartition
    seed: int | None = None
    block_lipschitz: tuple[float, ...] = field(init=False)
    global_lipschitz: float = field(init=False)
    minimizer: np.ndarray = field(init=False)
    sigma_min: float = field(init=False)
    sigma_max: float = field(init=False)

    def __post_init__(self) -> None:
        A = np.array(self.design_matrix, dtype=float)
        b = np.array(self.rhs, dtype=float)
        D = self.partition.total_dim
        if A.shape != (D, D) or b.shape != (D,):
            raise ValueError(f"expected A of shape {(D, D)} and b of shape {(D,)}, "
                             f"got {A.shape} and {b.shape}")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "design_matrix", A)
        object.__setattr__(self, "rhs", b)

        sv = np.linalg.svd(A, compute_uv=False)
        object.__setattr__(self, "sigma_max", float(sv[0]))
        object.__setattr__(self, "sigma_min", float(sv[-1]))
        Ls = tuple(power_iteration(A[:, blk].T @ A[:, blk]) for blk in self.partition)
        object.__setattr__(self, "block_lipschitz", Ls)
        object.__setattr__(self, "global_lipschitz", power_iteration(A.T @ A))
        if self.sigma_min <= 1e-14 * max(self.sigma_max, 1.0):
            raise IllConditionedError(f"design matrix is numerically singular "
                                      f"(sigma_min={self.sigma_min:.3e})")
        xs = np.linalg.solve(A, b)
        xs.setflags(write=False)
        object.__setattr__(self, "minimizer", xs)

    @property
    def dim(self) -> int:
        return self.partition.total_dim

    @property
    def p(self) -> int:
        return self.partition.p

    @property
    def L_max(self) -> float:
        return max(self.block_lipschitz)

    @property
    def L_min(self) -> float:
        return min(self.block_lipschitz)

    def residual(self, x: np.ndarray) -> np.ndarray:
        return self.design_matrix @ x - self.rhs

    def value(self, x: np.ndarray) -> float:
        r = self.residual(x)
        return 0.5 * float(r @ r)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.design_matrix.T @ self.residual(x)

    def block_gradient(self, x: np.ndarray, i: int) -> np.ndarray:
        blk = self.partition.block_slice(i)
        return self.design_matrix[:, blk].T @ self.residual(x)

    @property
    def optimal_value(self) -> float:
        return self.value(self.minimizer)


def block_lipschitz(problem: QuadraticProblem, i: int) -> float:
    """L_i = largest eigenvalue of A_i^T A_i (``i`` is 1-based)."""
    if not 1 <= i <= problem.p:
        raise IndexError(f"block index {i} outside 1..{problem.p}")
    return problem.block_lipschitz[i - 1]


def random_least_squares(D: int, p: int, seed: int, min_sigma: float = 1e-3) -> QuadraticProblem:
    """Gaussian instance; redraws ``A`` and ``b`` until sigma_min(A) >= ``min_sigma``."""
    if min_sigma <= 0:
        raise ValueError("min_sigma must be positive")
    partition = equal_partition(D, p)
    rng = np.random.default_rng(seed)
    for _ in range(MAX_REGENERATIONS):
        A = rng.standard_normal((D, D))
        b = rng.standard_normal(D)
        if np.linalg.svd(A, compute_uv=False)[-1] >= min_sigma:
            return QuadraticProblem(A, b, partition, seed=seed)
    raise RuntimeError(f"no instance with sigma_min >= {min_sigma} after "
                       f"{MAX_REGENERATIONS} draws; lower min_sigma")


def level_radius(problem: QuadraticProblem, x0: np.ndarray) -> float:
    """R(x0): farthest distance from x* within the level set {f <= f(x0)}.

    The level set is the ellipsoid ||A(x - x*)||^2 <= 2 (f(x0) - f*), whose
    longest semi-axis is sqrt(2 (f(x0) - f*)) / sigma_min(A).
    """
    if problem.sigma_min <= 1e-14 * max(problem.sigma_max, 1.0):
        raise IllConditionedError("sigma_min below tolerance")
    gap = max(problem.value(np.asarray(x0, dtype=float)) - problem.optimal_value, 0.0)
    return float(np.sqrt(2.0 * gap) / problem.sigma_min)


# -- plain-text instance files ------------------------------------------------

def save_instance(problem: QuadraticProblem, path: str | os.PathLike) -> None:
    """Header ``D p seed``, then the D rows of A, then b; 17 significant digits."""
    seed = -1 if problem.seed is None else problem.seed
    lines = [f"{problem.dim} {problem.p} {seed}"]
    for row in problem.design_matrix:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    lines.append(" ".join(f"{v:.17g}" for v in problem.rhs))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_instance(path: str | os.PathLike) -> QuadraticProblem:
    with open(path) as fh:
        rows = [ln.split() for ln in fh if ln.strip()]
    if not rows or len(rows[0]) != 3:
        raise ValueError(f"{path}: first line must be 'D p seed'")
    D, p, seed = (int(v) for v in rows[0])
    if len(rows) != D + 2:
        raise ValueError(f"{path}: expected {D + 2} lines, found {len(rows)}")
    for lineno, r in enumerate(rows[1:], start=2):
        if len(r) != D:
            raise ValueError(f"{path}: line {lineno} has {len(r)} entries, expected {D}")
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    return QuadraticProblem(data[:D], data[D], equal_partition(D, p),
                            seed=None if seed < 0 else seed)
