"""Closed-form worst-case bounds for cyclic BCD.

Counters: ``k`` in :func:`beck_bound` is the number of completed cycles;
``N`` in :func:`new_bound` is the last loop index, so that bound applies to
the point produced after ``N + 1`` cycles.  Comparisons therefore pair
``beck_bound(k=N+1)`` with ``new_bound(N)``.
"""

from __future__ import annotations

from fractions import Fraction


def _positive(**kw: float) -> None:
    for name, v in kw.items():
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")


def beck_bound(k: float, p: int, L_max: float, L_min: float, L: float, R: float) -> float:
    """4 L_max (1 + p L^2 / L_min^2) R^2 / (k + 8/p)."""
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    _positive(p=p, L_max=L_max, L_min=L_min, L=L)
    if R < 0:
        raise ValueError(f"R must be nonnegative, got {R}")
    return 4.0 * L_max * (1.0 + p * L**2 / L_min**2) * R**2 / (k + 8.0 / p)


def beck_bound_equal(k: float, p: int, L_c: float, R: float) -> float:
    """Prior bound with equal block constants: 4 L_c (1 + p^3) R^2 / (k + 8/p).

    This is :func:`beck_bound` with L_max = L_min = L_c and the global constant
    at its largest admissible value L = p L_c.
    """
    return beck_bound(k, p, L_c, L_c, p * L_c, R)


def new_bound(N: int, p: int, L_c: float, R: float) -> float:
    """p L_c R^2 / (4 (N+1) p + 2)."""
    if N < 0:
        raise ValueError(f"N must be nonnegative, got {N}")
    _positive(p=p, L_c=L_c)
    return p * L_c * R**2 / (4 * (N + 1) * p + 2)


def new_bound_after_cycles(k: int, p: int, L_c: float, R: float) -> float:
    """The new bound indexed by completed cycles: p L_c R^2 / (4 k p + 2).

    Equals ``new_bound(k - 1, ...)`` for k >= 1.  At k = 0 it reads
    p L_c R^2 / 2, which is the trivial bound (L/2) R^2 with L <= p L_c.
    """
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    _positive(p=p, L_c=L_c)
    return p * L_c * R**2 / (4 * k * p + 2)


def certificate_t(N: int, p: int) -> Fraction:
    """Multiplier t = 1 / (2 (N+1) p + 1), exact."""
    return Fraction(1, 2 * (N + 1) * p + 1)


def dual_objective(t: float | Fraction, p: int, L_c: float, R: float) -> float:
    """1/2 p L_c R^2 t.

    A :class:`~fractions.Fraction` ``t`` is applied as numerator / (2 denominator),
    which reproduces :func:`new_bound` bit for bit at t = certificate_t(N, p).
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if isinstance(t, Fraction):
        return p * L_c * R**2 * t.numerator / (2 * t.denominator)
    return 0.5 * p * L_c * R**2 * t


def bound_ratio(N: int, p: int, L_c: float = 1.0, R: float = 1.0) -> float:
    """beck_bound_equal(N+1) / new_bound(N); tends to 16 (1 + p^3)."""
    return beck_bound_equal(N + 1, p, L_c, R) / new_bound(N, p, L_c, R)


def asymptotic_ratio(p: int) -> float:
    return 16.0 * (1 + p**3)
