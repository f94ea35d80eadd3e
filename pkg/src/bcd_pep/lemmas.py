"""Numerical checks of the two auxiliary inequalities behind the relaxation.

``lemma1_residual`` evaluates the block co-coercivity inequality

    f(y) - f(x) - <grad f(x), y - x> >= 1/(2 L_i) ||grad_i f(y) - grad_i f(x)||^2

for a least-squares instance.  ``lemma2_gap`` compares the infimum of the
matrix quadratic trace(A X^T B X + 2 b a^T X) over all X with the infimum
over the rank-one family X = xi b^T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import QuadraticProblem, block_lipschitz


class UnboundedBelow(ValueError):
    """The quadratic has no stationary point, so its infimum is -inf."""


def lemma1_residual(problem: QuadraticProblem, x: np.ndarray, y: np.ndarray, i: int) -> float:
    """Slack of the block inequality at ``(x, y)`` for block ``i``; nonnegative in theory.

    For f = 1/2||Ax - b||^2 the left side equals 1/2||A(y - x)||^2 exactly;
    that form is used to avoid cancellation between two large f values.
    """
    A = problem.design_matrix
    blk = problem.partition.block_slice(i)
    d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    Ad = A @ d
    bregman = 0.5 * float(Ad @ Ad)
    dgi = A[:, blk].T @ Ad  # grad_i f(y) - grad_i f(x)
    return bregman - float(dgi @ dgi) / (2.0 * block_lipschitz(problem, i))


def _psd(M: np.ndarray, tol: float) -> bool:
    if M.size == 0:
        return True
    w = np.linalg.eigvalsh(M)
    return w[0] >= -tol * (1.0 + abs(w[-1]))


@dataclass(frozen=True)
class Lemma2Infima:
    full: float       # inf over X in R^{n x m}
    rank_one: float   # inf over X = xi b^T
    X_bar: np.ndarray
    xi_bar: np.ndarray

    @property
    def gap(self) -> float:
        return abs(self.full - self.rank_one)


def lemma2_infima(A: np.ndarray, B: np.ndarray, a: np.ndarray, b: np.ndarray,
                  tol: float = 1e-9) -> Lemma2Infima:
    """Both infima of f(X) = trace(A X^T B X + 2 b a^T X) from their stationarity systems.

    Shapes: ``A`` is m x m, ``B`` is n x n, ``a`` has length n, ``b`` length m,
    and ``X`` is n x m.  Raises :class:`UnboundedBelow` when either infimum is
    -inf (a matrix is not PSD, or a stationarity system has no solution).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    m, n = A.shape[0], B.shape[0]
    if A.shape != (m, m) or B.shape != (n, n) or a.shape != (n,) or b.shape != (m,):
        raise ValueError(f"incompatible shapes A{A.shape} B{B.shape} a{a.shape} b{b.shape}")
    if not np.any(b):
        raise ValueError("b must be nonzero")
    if not (_psd(A, tol) and _psd(B, tol)):
        raise UnboundedBelow("A and B must both be positive semidefinite")

    norm = np.linalg.norm
    scale = 1.0 + norm(a) * norm(b)

    # A Xbar^T B + b a^T = 0, least-norm candidate Xbar^T = -A^+ b a^T B^+.
    # Residuals are judged as backward errors so ill-conditioned A, B pass.
    Xt = -np.linalg.pinv(A, hermitian=True) @ np.outer(b, a) @ np.linalg.pinv(B, hermitian=True)
    if norm(A @ Xt @ B + np.outer(b, a)) > tol * (scale + norm(A) * norm(Xt) * norm(B)):
        raise UnboundedBelow("no X satisfies A X^T B + b a^T = 0")
    X_bar = Xt.T
    full = float(a @ X_bar @ b)  # trace(b a^T Xbar)

    # (b^T A b) B xi + ||b||^2 a = 0
    bAb = float(b @ A @ b)
    bb = float(b @ b)
    if bAb * norm(B) <= tol * scale:
        if norm(a) > tol:
            raise UnboundedBelow("rank-one restriction is linear with nonzero slope")
        xi_bar = np.zeros(n)
    else:
        xi_bar, *_ = np.linalg.lstsq(bAb * B, -bb * a, rcond=None)
        resid = norm(bAb * B @ xi_bar + bb * a)
        if resid > tol * (scale * (1.0 + bb) + bAb * norm(B) * norm(xi_bar)):
            raise UnboundedBelow("no xi satisfies (b^T A b) B xi + ||b||^2 a = 0")
    rank_one = bb * float(a @ xi_bar)
    return Lemma2Infima(full, rank_one, X_bar, xi_bar)


def lemma2_gap(A: np.ndarray, B: np.ndarray, a: np.ndarray, b: np.ndarray,
               tol: float = 1e-9) -> float:
    """|inf_X f(X) - inf_xi f(xi b^T)|; raises :class:`UnboundedBelow` if not finite."""
    return lemma2_infima(A, B, a, b, tol).gap


def lemma2_objective(A: np.ndarray, B: np.ndarray, a: np.ndarray, b: np.ndarray,
                     X: np.ndarray) -> float:
    X = np.atleast_2d(X)
    return float(np.trace(A @ X.T @ B @ X) + 2.0 * np.trace(np.outer(b, a) @ X))
