"""Cyclic block coordinate descent with full traces.

Every intermediate point x_k^i is stored once, at flat index q = k*p + i, so
the end of cycle k and the start of cycle k+1 are literally the same row.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .partition import unflatten
from .problem import QuadraticProblem, level_radius


class NonFiniteIterate(FloatingPointError):
    pass


@dataclass(frozen=True, eq=False)
class BcdTrace:
    """Output of :func:`run_cyclic_bcd`.

    ``points``, ``full_gradients`` and ``objective_gaps`` have ``(N+1)p + 1``
    rows indexed by the flat index ``q``.
    """

    N: int
    p: int
    points: np.ndarray
    full_gradients: np.ndarray
    objective_gaps: np.ndarray
    step_constants: tuple[float, ...]
    radius: float

    @property
    def M(self) -> int:
        return (self.N + 1) * self.p

    def point(self, k: int, i: int) -> np.ndarray:
        return self.points[k * self.p + i]

    def cycle_gaps(self) -> np.ndarray:
        """f(x_k) - f* for k = 0..N+1, i.e. after 0, 1, ..., N+1 completed cycles."""
        return self.objective_gaps[:: self.p]

    def normalized(self, L_c: float) -> tuple[np.ndarray, np.ndarray]:
        """(delta, g) scaled by p L_c R^2 and p L_c R respectively."""
        scale = self.p * L_c * self.radius
        return self.objective_gaps / (scale * self.radius), self.full_gradients / scale


def run_cyclic_bcd(problem: QuadraticProblem, x0: np.ndarray, N: int,
                   step_constants: Sequence[float] | None = None) -> BcdTrace:
    """Run cycles k = 0..N of BCD with step 1/L_i on block i.

    ``step_constants`` defaults to the problem's block Lipschitz constants.
    """
    if N < 0:
        raise ValueError(f"N must be nonnegative, got {N}")
    Ls = tuple(problem.block_lipschitz if step_constants is None else step_constants)
    if len(Ls) != problem.p or min(Ls) <= 0:
        raise ValueError(f"need {problem.p} positive step constants, got {Ls}")

    A = problem.design_matrix
    b = problem.rhs
    blocks = list(problem.partition)
    p = problem.p
    n_points = (N + 1) * p + 1
    points = np.empty((n_points, problem.dim))
    grads = np.empty_like(points)
    values = np.empty(n_points)
    x = np.array(x0, dtype=float)
    if x.shape != (problem.dim,):
        raise ValueError(f"x0 must have shape ({problem.dim},)")

    # overflow is reported below as NonFiniteIterate rather than as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for q in range(n_points):
            r = A @ x - b
            g = A.T @ r
            points[q] = x
            grads[q] = g
            values[q] = 0.5 * float(r @ r)
            if not (np.isfinite(values[q]) and np.all(np.isfinite(g))):
                k, i = unflatten(q, p)
                raise NonFiniteIterate(f"non-finite iterate at q={q} (k={k}, i={i}); "
                                       "rescale the instance")
            if q == n_points - 1:
                break
            i = q % p  # 0-based block updated next
            blk = blocks[i]
            x[blk] -= g[blk] / Ls[i]

    for arr in (points, grads, values):
        arr.setflags(write=False)
    gaps = values - problem.optimal_value
    gaps.setflags(write=False)
    return BcdTrace(N, p, points, grads, gaps, Ls, level_radius(problem, points[0]))


def trace_csv_text(trace: BcdTrace) -> str:
    """Columns ``q,k,i,f_gap,grad_norm``, one row per flat index."""
    lines = ["q,k,i,f_gap,grad_norm"]
    norms = np.linalg.norm(trace.full_gradients, axis=1)
    for q in range(trace.points.shape[0]):
        k, i = unflatten(q, trace.p)
        lines.append(f"{q},{k},{i},{trace.objective_gaps[q]:.17g},{norms[q]:.17g}")
    return "\n".join(lines) + "\n"


def write_trace_csv(trace: BcdTrace, path: str | os.PathLike) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(trace_csv_text(trace))


# -- relaxation constraints on a genuine trace -------------------------------

@dataclass(frozen=True)
class ConstraintSlacks:
    """Slack (rhs - lhs) of every relaxed constraint evaluated on a trace.

    ``consecutive[q-1, t-1]`` is the pair (q-1, q) constraint with norm block
    t; ``at_point`` is the pair (q, x*) constraint (bounded by delta_q) and
    ``to_optimum`` the pair (x*, q) constraint, for q = 1..M and all blocks.
    ``initial`` is the (0, 0) constraint per block.  The ``*_diag`` views keep
    only the t = i entries (i = block updated to reach q; t = 1 at q = 0).
    """

    consecutive: np.ndarray
    at_point: np.ndarray
    to_optimum: np.ndarray
    initial: np.ndarray
    L_c: float
    substituted: bool

    def _diag(self, arr: np.ndarray) -> np.ndarray:
        p = arr.shape[1]
        return arr[np.arange(arr.shape[0]), np.arange(arr.shape[0]) % p]

    @property
    def consecutive_diag(self) -> np.ndarray:
        return self._diag(self.consecutive)

    @property
    def at_point_diag(self) -> np.ndarray:
        return self._diag(self.at_point)

    @property
    def to_optimum_diag(self) -> np.ndarray:
        return self._diag(self.to_optimum)

    def min_full(self) -> float:
        return float(min(self.consecutive.min(), self.at_point.min(),
                         self.to_optimum.min(), self.initial.min()))

    def min_diag(self) -> float:
        return float(min(self.consecutive_diag.min(), self.at_point_diag.min(),
                         self.to_optimum_diag.min(), self.initial[0]))


def pep_constraint_residuals(trace: BcdTrace, problem: QuadraticProblem,
                             L_c: float | None = None) -> ConstraintSlacks:
    """Evaluate the consecutive-pair relaxation constraints on a normalised trace.

    Normalisation uses L_c = max_i L_i unless ``L_c`` is given; ``substituted``
    records whether the block constants were unequal.
    """
    if L_c is None:
        L_c = max(problem.block_lipschitz)
    substituted = max(problem.block_lipschitz) != min(problem.block_lipschitz)
    R = trace.radius
    p = trace.p
    if R == 0.0:
        # x0 = x*: every normalised quantity vanishes, all slacks are zero
        M = trace.M
        z = np.zeros((M, p))
        return ConstraintSlacks(z, z.copy(), z.copy(), np.zeros(p), L_c, substituted)

    delta, g = trace.normalized(L_c)
    X = trace.points
    xs = problem.minimizer

    def block_sq(v: np.ndarray) -> np.ndarray:
        # ||U_t^T v||^2 for every row of v and every block t
        return np.stack([np.einsum("ij,ij->i", v[:, blk], v[:, blk])
                         for blk in problem.partition], axis=1)

    dg = g[:-1] - g[1:]
    ip_step = np.einsum("ij,ij->i", g[1:], X[:-1] - X[1:]) / R
    consecutive = (delta[:-1] - delta[1:] - ip_step)[:, None] - 0.5 * p * block_sq(dg)

    gq = g[1:]
    sq = 0.5 * p * block_sq(gq)
    at_point = delta[1:, None] - sq
    ip_opt = np.einsum("ij,ij->i", gq, xs[None, :] - X[1:]) / R
    to_optimum = (-delta[1:] - ip_opt)[:, None] - sq

    g0 = g[0]
    initial = (-delta[0] - float(g0 @ (xs - X[0])) / R) - 0.5 * p * block_sq(g0[None, :])[0]
    return ConstraintSlacks(consecutive, at_point, to_optimum, initial, L_c, substituted)
