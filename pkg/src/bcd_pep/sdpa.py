"""Export of the certificate search problem as a linear SDP in SDPA sparse format.

Decision variables are y = (lambda_1, ..., lambda_M, t).  With tau eliminated
through its affine dependence on lambda, the constraints are

    S(y) = [[2A(lambda), tau(lambda)], [tau(lambda)^T, t]]  PSD   (order M+2)
    diag(lambda, tau(lambda))                               >= 0  (order 2M+1)

and the objective is to minimise t.  SDPA's convention is
X = sum_i y_i F_i - F_0, so F_0 holds the negated constant part.
"""

from __future__ import annotations

import math
import os
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .certificate import _weights, assembly_terms

Entry = tuple[int, int, int, int, float]  # var, block, row, col (1-based, row <= col), value


class SdpaFormatError(ValueError):
    def __init__(self, path: str, lineno: int, fieldname: str, detail: str):
        super().__init__(f"{path}:{lineno}: bad {fieldname}: {detail}")
        self.lineno = lineno
        self.fieldname = fieldname


@dataclass(frozen=True)
class SdpModel:
    num_vars: int
    block_sizes: tuple[int, ...]  # negative for diagonal blocks
    objective: tuple[float, ...]
    entries: tuple[Entry, ...]
    metadata: dict[str, str] = field(default_factory=dict)

    def block_matrices(self, var: int) -> list[np.ndarray]:
        """Dense symmetric F_var for every block (diagonal blocks as full matrices)."""
        mats = [np.zeros((abs(s), abs(s))) for s in self.block_sizes]
        for v, blk, r, c, val in self.entries:
            if v == var:
                mats[blk - 1][r - 1, c - 1] = val
                mats[blk - 1][c - 1, r - 1] = val
        return mats

    def materialize(self, y: Sequence[float]) -> list[np.ndarray]:
        """sum_i y_i F_i - F_0, each entry summed with ``math.fsum``."""
        if len(y) != self.num_vars:
            raise ValueError(f"expected {self.num_vars} values, got {len(y)}")
        parts: dict[tuple[int, int, int], list[float]] = defaultdict(list)
        for v, blk, r, c, val in self.entries:
            parts[blk, r, c].append(-val if v == 0 else val * y[v - 1])
        mats = [np.zeros((abs(s), abs(s))) for s in self.block_sizes]
        for (blk, r, c), terms in parts.items():
            mats[blk - 1][r - 1, c - 1] = mats[blk - 1][c - 1, r - 1] = math.fsum(terms)
        return mats

    def feasibility_slack(self, y: Sequence[float]) -> float:
        """Smallest eigenvalue over all blocks at ``y`` (diagonal blocks: smallest entry)."""
        slack = math.inf
        for size, mat in zip(self.block_sizes, self.materialize(y)):
            low = float(np.min(np.diag(mat))) if size < 0 else float(np.linalg.eigvalsh(mat)[0])
            slack = min(slack, low)
        return slack


def _affine(coeffs: dict[int, Fraction], var: int, c: Fraction) -> None:
    coeffs[var] = coeffs.get(var, Fraction(0)) + c


def build_sdp(N: int, p: int, weights: Iterable[float | Fraction] | None = None) -> SdpModel:
    """Linear SDP for the best t over all admissible lambda at fixed (N, p)."""
    if N < 0 or p < 1:
        raise ValueError(f"need N >= 0 and p >= 1, got N={N}, p={p}")
    M = (N + 1) * p
    w = _weights(weights, p)
    t_var = M + 1

    # tau_q as {var: coeff}, var 0 = constant, var q = lambda_q
    tau: list[dict[int, Fraction]] = [{1: Fraction(1)}]
    for q in range(1, M):
        tau.append({q + 1: Fraction(1), q: Fraction(-1)})
    tau.append({0: Fraction(1), M: Fraction(-1)})

    # S entries (0-based, upper triangle) -> affine coefficients
    S: dict[tuple[int, int], dict[int, Fraction]] = defaultdict(dict)
    for kind, q, r, c, coeff in assembly_terms(M, p, w):
        if r > c:
            continue
        if kind == "lam":
            _affine(S[r, c], q, coeff)
        else:
            for var, a in tau[q].items():
                _affine(S[r, c], var, coeff * a)
    for q in range(M + 1):
        for var, a in tau[q].items():
            _affine(S[q, M + 1], var, a)
    _affine(S[M + 1, M + 1], t_var, Fraction(1))

    raw: list[tuple[int, int, int, int, Fraction]] = []
    for (r, c), coeffs in S.items():
        for var, a in coeffs.items():
            if a != 0:
                raw.append((var, 1, r + 1, c + 1, -a if var == 0 else a))
    diag = [{q: Fraction(1)} for q in range(1, M + 1)] + tau
    for j, coeffs in enumerate(diag, start=1):
        for var, a in coeffs.items():
            if a != 0:
                raw.append((var, 2, j, j, -a if var == 0 else a))

    entries = tuple(sorted((v, b, r, c, float(a)) for v, b, r, c, a in raw))
    metadata = {
        "N": str(N),
        "p": str(p),
        "M": str(M),
        "variables": "lambda_1..lambda_M, t",
        "objective_scale": f"0.5*p*Lc*R^2 = {p / 2:.17g}*Lc*R^2",
        "weights": ",".join(str(v) for v in w),
        "generator": f"bcd_pep {__version__}",
    }
    objective = tuple([0.0] * M + [1.0])
    return SdpModel(M + 1, (M + 2, -(2 * M + 1)), objective, entries, metadata)


def schedule_point(schedule) -> list[float]:
    """The decision vector y = (lambda, t) of a multiplier schedule."""
    return [float(v) for v in schedule.lam] + [float(schedule.t)]


def write_sdpa(model: SdpModel, path: str | os.PathLike) -> None:
    lines = [f'"{k}: {v}' for k, v in model.metadata.items()]
    lines.append(str(model.num_vars))
    lines.append(str(len(model.block_sizes)))
    lines.append(" ".join(str(s) for s in model.block_sizes))
    lines.append(" ".join(f"{v:.17g}" for v in model.objective))
    lines.extend(f"{v} {b} {r} {c} {val:.17g}" for v, b, r, c, val in model.entries)
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _clean(line: str) -> list[str]:
    for ch in ",{}()":
        line = line.replace(ch, " ")
    return line.split()


def read_sdpa(path: str | os.PathLike) -> SdpModel:
    name = os.fspath(path)
    with open(path) as fh:
        lines = fh.read().splitlines()

    metadata: dict[str, str] = {}
    pos = 0
    while pos < len(lines) and lines[pos][:1] in ('"', "*"):
        key, sep, val = lines[pos][1:].partition(": ")
        if sep:
            metadata[key] = val
        pos += 1

    def header(idx: int, fieldname: str) -> list[str]:
        if pos + idx >= len(lines):
            raise SdpaFormatError(name, pos + idx + 1, fieldname, "missing line")
        return _clean(lines[pos + idx])

    def as_int(tok: str, lineno: int, fieldname: str) -> int:
        try:
            return int(tok)
        except ValueError:
            raise SdpaFormatError(name, lineno, fieldname, f"not an integer: {tok!r}") from None

    tok = header(0, "number of variables")
    if len(tok) < 1:
        raise SdpaFormatError(name, pos + 1, "number of variables", "empty line")
    m = as_int(tok[0], pos + 1, "number of variables")
    tok = header(1, "number of blocks")
    if len(tok) < 1:
        raise SdpaFormatError(name, pos + 2, "number of blocks", "empty line")
    nblocks = as_int(tok[0], pos + 2, "number of blocks")
    tok = header(2, "block sizes")
    if len(tok) != nblocks:
        raise SdpaFormatError(name, pos + 3, "block sizes",
                              f"expected {nblocks} sizes, found {len(tok)}")
    sizes = tuple(as_int(t, pos + 3, "block sizes") for t in tok)
    tok = header(3, "objective vector")
    if len(tok) != m:
        raise SdpaFormatError(name, pos + 4, "objective vector",
                              f"expected {m} values, found {len(tok)}")
    try:
        objective = tuple(float(t) for t in tok)
    except ValueError as exc:
        raise SdpaFormatError(name, pos + 4, "objective vector", str(exc)) from None

    entries: list[Entry] = []
    fields = ("variable", "block", "row", "column", "value")
    for lineno in range(pos + 5, len(lines) + 1):
        tok = _clean(lines[lineno - 1])
        if not tok:
            continue
        if len(tok) != 5:
            raise SdpaFormatError(name, lineno, "entry", f"expected 5 fields, found {len(tok)}")
        ints = [as_int(t, lineno, f) for t, f in zip(tok[:4], fields)]
        try:
            val = float(tok[4])
        except ValueError:
            raise SdpaFormatError(name, lineno, "value", f"not a number: {tok[4]!r}") from None
        v, b, r, c = ints
        if not 0 <= v <= m:
            raise SdpaFormatError(name, lineno, "variable", f"{v} outside 0..{m}")
        if not 1 <= b <= nblocks:
            raise SdpaFormatError(name, lineno, "block", f"{b} outside 1..{nblocks}")
        size = abs(sizes[b - 1])
        if not (1 <= r <= size and 1 <= c <= size):
            raise SdpaFormatError(name, lineno, "row" if not 1 <= r <= size else "column",
                                  f"({r}, {c}) outside block of order {size}")
        if sizes[b - 1] < 0 and r != c:
            raise SdpaFormatError(name, lineno, "column", "off-diagonal entry in diagonal block")
        if r > c:
            r, c = c, r
        entries.append((v, b, r, c, val))
    return SdpModel(m, sizes, objective, tuple(sorted(entries)), metadata)
