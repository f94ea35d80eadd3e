"""Dual certificate for the cyclic BCD worst-case bound.

The certificate consists of multipliers lambda_q (q = 1..M, M = (N+1)p), the
derived tau_q (q = 0..M) and a scalar t, and is valid when the bordered
matrix

    S = [[2A, tau], [tau^T, t]]

is positive semidefinite.  The schedule and the matrices are assembled in
exact rational arithmetic and only rounded to float for the spectral checks,
so that two independent constructions of 2A can be compared for equality.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .partition import block_of_flat

Exact = list[list[Fraction]]


# -- multiplier schedule ------------------------------------------------------

@dataclass(frozen=True)
class MultiplierSchedule:
    N: int
    p: int
    lam: tuple[Fraction, ...]  # lam[q - 1] is lambda at flat index q = 1..M
    tau: tuple[Fraction, ...]  # tau[q], q = 0..M
    t: Fraction

    @property
    def M(self) -> int:
        return (self.N + 1) * self.p

    def lam_at(self, k: int, i: int) -> Fraction:
        return self.lam[k * self.p + i - 1]

    def tau_at(self, k: int, i: int) -> Fraction:
        return self.tau[k * self.p + i]

    @property
    def lam_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.lam])

    @property
    def tau_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.tau])


def tau_from_lambda(lam: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """tau_0 = lambda_1, tau_q = lambda_{q+1} - lambda_q, tau_M = 1 - lambda_M.

    These are the conditions under which the Lagrangian is bounded in the
    function-value variables; differences are taken in flat order, including
    across the seam between consecutive cycles.
    """
    lam = [Fraction(v) for v in lam]
    if not lam:
        raise ValueError("need at least one multiplier")
    return tuple([lam[0]] + [lam[q] - lam[q - 1] for q in range(1, len(lam))]
                 + [1 - lam[-1]])


def schedule_from_lambda(N: int, p: int, lam: Sequence[float | Fraction],
                         t: float | Fraction) -> MultiplierSchedule:
    M = (N + 1) * p
    if len(lam) != M:
        raise ValueError(f"expected {M} multipliers, got {len(lam)}")
    lam_f = tuple(Fraction(v) for v in lam)
    return MultiplierSchedule(N, p, lam_f, tau_from_lambda(lam_f), Fraction(t))


def lambda_schedule(N: int, p: int) -> MultiplierSchedule:
    """lambda_q = q / (2M + 1 - q) and t = 1 / (2M + 1)."""
    if N < 0 or p < 1:
        raise ValueError(f"need N >= 0 and p >= 1, got N={N}, p={p}")
    M = (N + 1) * p
    lam = [Fraction(q, 2 * M + 1 - q) for q in range(1, M + 1)]
    return schedule_from_lambda(N, p, lam, Fraction(1, 2 * M + 1))


# -- matrix assembly ----------------------------------------------------------

def _weights(weights: Iterable[float | Fraction] | None, p: int) -> tuple[Fraction, ...]:
    if weights is None:
        return (Fraction(1, p),) * p
    w = tuple(Fraction(v) for v in weights)
    if len(w) != p:
        raise ValueError(f"expected {p} block weights, got {len(w)}")
    if any(v <= 0 for v in w):
        raise ValueError("block weights must be positive")
    if abs(sum(w) - 1) > Fraction(1, 10**12):
        raise ValueError(f"block weights must sum to 1, got {float(sum(w))!r}")
    return w


def assembly_terms(M: int, p: int, weights: Sequence[Fraction]) -> list[tuple[str, int, int, int, Fraction]]:
    """Coefficients of 2A as a linear function of (lambda, tau).

    Each entry is ``(kind, q, row, col, coeff)`` meaning that multiplier
    ``kind``/``q`` contributes ``coeff`` to ``2A[row, col]``.  Off-diagonal
    contributions are listed for both triangles.  Block i's weight enters as
    ``p * D_i / D``; the tau_0 term uses block 1.
    """
    pw = [p * w for w in weights]
    terms: list[tuple[str, int, int, int, Fraction]] = []
    for q in range(1, M + 1):
        c = pw[block_of_flat(q, p) - 1]
        terms.append(("lam", q, q - 1, q - 1, c))
        terms.append(("lam", q, q, q, c))
    terms.append(("tau", 0, 0, 0, pw[0]))
    for q in range(1, M + 1):
        terms.append(("tau", q, q, q, pw[block_of_flat(q, p) - 1]))
        for qq in range(1, q + 1):
            c = pw[block_of_flat(qq, p) - 1]
            terms.append(("tau", q, q, qq - 1, c))
            terms.append(("tau", q, qq - 1, q, c))
    return terms


def dual_matrix_exact(schedule: MultiplierSchedule,
                      weights: Iterable[float | Fraction] | None = None) -> Exact:
    """2A summed term by term from the outer-product representation."""
    M, p = schedule.M, schedule.p
    w = _weights(weights, p)
    out = [[Fraction(0)] * (M + 1) for _ in range(M + 1)]
    for kind, q, r, c, coeff in assembly_terms(M, p, w):
        val = schedule.lam[q - 1] if kind == "lam" else schedule.tau[q]
        out[r][c] += coeff * val
    return out


def pattern_matrix_exact(schedule: MultiplierSchedule) -> Exact:
    """2A for equal blocks written entrywise.

    Diagonal (2 lambda_1, ..., 2 lambda_M, 1); entry (r, c) with r < c equals
    tau_c.
    """
    M = schedule.M
    lam, tau = schedule.lam, schedule.tau
    out = [[Fraction(0)] * (M + 1) for _ in range(M + 1)]
    for r in range(M + 1):
        out[r][r] = 2 * lam[r] if r < M else Fraction(1)
        for c in range(r + 1, M + 1):
            out[r][c] = out[c][r] = tau[c]
    return out


def bordered_exact(twoA: Exact, tau: Sequence[Fraction], t: Fraction) -> Exact:
    n = len(twoA)
    if len(tau) != n:
        raise ValueError(f"tau has length {len(tau)}, expected {n}")
    S = [list(row) + [tau[r]] for r, row in enumerate(twoA)]
    S.append(list(tau) + [Fraction(t)])
    return S


def to_float(mat: Exact) -> np.ndarray:
    return np.array([[float(v) for v in row] for row in mat])


@dataclass(frozen=True, eq=False)
class CertificateMatrix:
    twoA: np.ndarray
    bordered: np.ndarray
    weights: tuple[Fraction, ...]

    @property
    def order(self) -> int:
        return self.twoA.shape[0]


def assemble_certificate(twoA: np.ndarray, tau: np.ndarray, t: float) -> np.ndarray:
    """S = [[2A, tau], [tau^T, t]]."""
    twoA = np.asarray(twoA, dtype=float)
    tau = np.asarray(tau, dtype=float)
    n = twoA.shape[0]
    if twoA.shape != (n, n) or tau.shape != (n,):
        raise ValueError(f"inconsistent shapes 2A{twoA.shape}, tau{tau.shape}")
    S = np.empty((n + 1, n + 1))
    S[:n, :n] = twoA
    S[:n, n] = tau
    S[n, :n] = tau
    S[n, n] = t
    return S


def build_dual_matrix(schedule: MultiplierSchedule,
                      weights: Iterable[float | Fraction] | None = None) -> CertificateMatrix:
    w = _weights(weights, schedule.p)
    exact = dual_matrix_exact(schedule, w)
    S = to_float(bordered_exact(exact, schedule.tau, schedule.t))
    n = schedule.M + 1
    return CertificateMatrix(S[:n, :n].copy(), S, w)


# -- spectral checks ----------------------------------------------------------

@dataclass(frozen=True)
class PsdVerdict:
    is_psd: bool
    min_eigenvalue: float
    spectral_norm: float
    threshold: float

    @property
    def margin(self) -> float:
        """Distance of the smallest eigenvalue above the rejection threshold."""
        return self.min_eigenvalue - self.threshold


def psd_check(S: np.ndarray, tol: float = 1e-8) -> PsdVerdict:
    """PSD iff lambda_min(S) >= -tol (1 + ||S||_2), via a symmetric eigensolver.

    Cholesky alone is not used: optimal certificates are singular.
    """
    w = np.linalg.eigvalsh(np.asarray(S, dtype=float))
    norm = float(max(abs(w[0]), abs(w[-1])))
    threshold = -tol * (1.0 + norm)
    return PsdVerdict(bool(w[0] >= threshold), float(w[0]), norm, threshold)


def cholesky_prescreen(S: np.ndarray, jitter: float = 1e-10) -> bool:
    """Fast sufficient test: Cholesky of S + jitter (1 + max|S_ii|) I succeeds."""
    S = np.asarray(S, dtype=float)
    shift = jitter * (1.0 + float(np.max(np.abs(np.diag(S)))))
    try:
        np.linalg.cholesky(S + shift * np.eye(S.shape[0]))
    except np.linalg.LinAlgError:
        return False
    return True


class CertificateInfeasible(ValueError):
    pass


def min_feasible_t(twoA: np.ndarray, tau: np.ndarray, tol: float = 1e-8) -> float:
    """Smallest t with [[2A, tau], [tau^T, t]] PSD: t* = tau^T (2A)^+ tau.

    Raises :class:`CertificateInfeasible` when 2A is not PSD or tau is not in
    its range, in which case no t works.
    """
    twoA = np.asarray(twoA, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if not psd_check(twoA, tol).is_psd:
        raise CertificateInfeasible("2A is not positive semidefinite")
    z, *_ = np.linalg.lstsq(twoA, tau, rcond=None)
    resid = float(np.linalg.norm(twoA @ z - tau))
    if resid > tol * (1.0 + float(np.linalg.norm(tau))):
        raise CertificateInfeasible(f"tau is outside range(2A) (residual {resid:.3e})")
    return float(tau @ z)


# -- determinants of leading principal minors ----------------------------------

def minor_determinants(twoA: np.ndarray) -> np.ndarray:
    """det of the leading n x n block of ``twoA`` for n = 1..order (LU based)."""
    twoA = np.asarray(twoA, dtype=float)
    return np.array([np.linalg.det(twoA[:n, :n]) for n in range(1, twoA.shape[0] + 1)])


def exact_determinant(mat: Exact) -> Fraction:
    """Fraction-exact Gaussian elimination with row swaps."""
    a = [list(row) for row in mat]
    n = len(a)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        for r in range(col + 1, n):
            f = a[r][col] / a[col][col]
            if f:
                for c in range(col, n):
                    a[r][c] -= f * a[col][c]
    return det


def _recursion_step(d: Fraction, c: Fraction, d_prev: Fraction, c_prev: Fraction
                    ) -> tuple[Fraction, Fraction]:
    # matrix whose row n has c_n left of the diagonal and d_n on it
    if c_prev == 0:
        raise ZeroDivisionError("consecutive multipliers coincide")
    r = c / c_prev
    alpha = d - 2 * c * r + r * r * d_prev
    beta = c * c * (1 - d_prev / c_prev) ** 2
    return alpha, beta


def recursion_coefficients(schedule: MultiplierSchedule, n: int) -> tuple[Fraction, Fraction]:
    """(alpha_n, beta_n) for the order-n minor, 3 <= n <= M, in lambda form."""
    lam = schedule.lam
    l0, l1, l2 = lam[n - 3], lam[n - 2], lam[n - 1]  # lambda_{n-2}, lambda_{n-1}, lambda_n
    if l1 == l0:
        raise ZeroDivisionError(f"lambda_{n - 1} == lambda_{n - 2}")
    alpha = 2 * l2 - 2 * (l2 - l1) ** 2 / (l1 - l0) + (l2 - l1) ** 2 * 2 * l1 / (l1 - l0) ** 2
    beta = (l2 - l1) ** 2 * (1 - 2 * l1 / (l1 - l0)) ** 2
    return alpha, beta


def recursion_determinants(schedule: MultiplierSchedule) -> list[Fraction]:
    """Leading principal minors of 2A for orders 1..M+1 via the three-term recursion.

    Orders 1 and 2 are the base cases 2 lambda_1 and
    4 lambda_1 lambda_2 - (lambda_2 - lambda_1)^2; orders 3..M use
    det_n = alpha_n det_{n-1} - beta_n det_{n-2}.  The last order, whose new
    row is (1 - lambda_M, ..., 1), uses the same elimination with diagonal 1.
    """
    lam = schedule.lam
    M = schedule.M
    dets = [Fraction(1), 2 * lam[0]]  # dets[n] is the order-n minor; order 0 is 1
    if M >= 2:
        dets.append(4 * lam[0] * lam[1] - (lam[1] - lam[0]) ** 2)
    for n in range(3, M + 1):
        alpha, beta = recursion_coefficients(schedule, n)
        dets.append(alpha * dets[n - 1] - beta * dets[n - 2])
    lam_prev = lam[M - 2] if M >= 2 else Fraction(0)
    alpha, beta = _recursion_step(Fraction(1), 1 - lam[M - 1],
                                  2 * lam[M - 1], lam[M - 1] - lam_prev)
    dets.append(alpha * dets[M] - beta * dets[M - 1])
    return dets[1:]


@dataclass(frozen=True)
class RecursionReport:
    direct: np.ndarray
    recursion: np.ndarray
    max_abs_diff: float
    scaled_diff: float  # max |direct - recursion| / (1 + max |det|)
    max_rel_diff: float  # max over orders of |direct - recursion| / |recursion|


def recursion_check(schedule: MultiplierSchedule, twoA: np.ndarray | None = None) -> RecursionReport:
    if twoA is None:
        twoA = build_dual_matrix(schedule).twoA
    direct = minor_determinants(twoA)
    rec = np.array([float(v) for v in recursion_determinants(schedule)])
    diff = float(np.max(np.abs(direct - rec)))
    scale = 1.0 + float(np.max(np.abs(rec)))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(rec != 0, np.abs(direct - rec) / np.abs(rec), np.abs(direct))
    return RecursionReport(direct, rec, diff, diff / scale, float(np.max(rel)))


def closed_form_minor(M: int, q: int) -> Fraction:
    """Candidate closed form for the order-q minor, taken literally."""
    total = Fraction(1)
    prod = Fraction(1)
    for s in range(q):
        h = 2 * M + 4 * M * s - 2 * s * s + 1
        total += Fraction(2 * M - 2 * s - 1, h)
        prod *= Fraction(h, (2 * M + 1 - s) ** 2)
    return Fraction((2 * M + 1) ** 2, (2 * M - q) ** 2) * total * prod


def closed_form_last(N: int) -> Fraction:
    """Candidate closed form for the last minor, written in N only."""
    prod = Fraction(1)
    for i in range(N):
        prod *= Fraction(2 * N + 4 * N * i - 2 * i * i + 1, (2 * N + 1 - i) ** 2)
    return Fraction((2 * N + 1) ** 2, (N + 1) ** 2) * prod


@dataclass(frozen=True)
class ClosedFormDiagnostic:
    orders: tuple[int, ...]
    candidate: tuple[float, ...]
    actual: tuple[float, ...]
    last_candidate: float
    last_actual: tuple[float, float]  # orders M and M+1

    @property
    def max_relative_discrepancy(self) -> float:
        if not self.orders:
            return 0.0
        return max(abs(a - b) / max(abs(b), 1e-300) for a, b in zip(self.candidate, self.actual))


def closed_form_diagnostic(schedule: MultiplierSchedule) -> ClosedFormDiagnostic:
    """Compare the candidate closed forms with the recursion values; informational only."""
    M, N, p = schedule.M, schedule.N, schedule.p
    rec = recursion_determinants(schedule)
    orders = tuple(range(1, N * p + 1))
    candidate = tuple(float(closed_form_minor(M, q)) for q in orders)
    actual = tuple(float(rec[q - 1]) for q in orders)
    return ClosedFormDiagnostic(orders, candidate, actual, float(closed_form_last(N)),
                                (float(rec[M - 1]), float(rec[M])))


# -- end-to-end report --------------------------------------------------------

@dataclass(frozen=True)
class CertificateReport:
    N: int
    p: int
    schedule: MultiplierSchedule
    matrix: CertificateMatrix
    verdict: PsdVerdict
    t_star: float | None
    infeasible_reason: str | None
    recursion: RecursionReport

    @property
    def t_bound_ok(self) -> bool:
        return self.t_star is not None and self.t_star <= float(self.schedule.t) + 1e-8

    @property
    def ok(self) -> bool:
        return self.verdict.is_psd and self.t_bound_ok and self.recursion.max_rel_diff <= 1e-10


def certify(N: int, p: int, tol: float = 1e-8,
            weights: Iterable[float | Fraction] | None = None) -> CertificateReport:
    schedule = lambda_schedule(N, p)
    mat = build_dual_matrix(schedule, weights)
    verdict = psd_check(mat.bordered, tol)
    try:
        t_star: float | None = min_feasible_t(mat.twoA, schedule.tau_float, tol)
        reason = None
    except CertificateInfeasible as exc:
        t_star, reason = None, str(exc)
    return CertificateReport(N, p, schedule, mat, verdict, t_star, reason,
                             recursion_check(schedule, mat.twoA))


def write_certificate(schedule: MultiplierSchedule, S: np.ndarray, path: str | os.PathLike) -> None:
    """Header ``N p M t``, the lambda row, the tau row, then the rows of S."""
    fmt = lambda vals: " ".join(f"{float(v):.17g}" for v in vals)  # noqa: E731
    lines = [f"{schedule.N} {schedule.p} {schedule.M} {float(schedule.t):.17g}",
             fmt(schedule.lam), fmt(schedule.tau)]
    lines.extend(fmt(row) for row in S)
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_certificate(path: str | os.PathLike) -> tuple[int, int, float, np.ndarray, np.ndarray, np.ndarray]:
    with open(path) as fh:
        rows = [ln.split() for ln in fh if ln.strip()]
    N, p, M = int(rows[0][0]), int(rows[0][1]), int(rows[0][2])
    t = float(rows[0][3])
    lam = np.array([float(v) for v in rows[1]])
    tau = np.array([float(v) for v in rows[2]])
    S = np.array([[float(v) for v in r] for r in rows[3:]])
    if lam.shape != (M,) or tau.shape != (M + 1,) or S.shape != (M + 2, M + 2):
        raise ValueError(f"{path}: inconsistent certificate dimensions for M={M}")
    return N, p, t, lam, tau, S

