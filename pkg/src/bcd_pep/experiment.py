"""Least-squares convergence experiment: empirical BCD gaps against both bounds."""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bcd import pep_constraint_residuals, run_cyclic_bcd
from .bounds import beck_bound, new_bound, new_bound_after_cycles
from .problem import random_least_squares

THREADS_ENV = "BCD_PEP_THREADS"


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 100
    p_list: tuple[int, ...] = (2, 5, 20, 100)
    N: int = 200
    seeds: tuple[int, ...] = (0,)
    min_sigma: float = 1e-3
    slack_tol: float = 1e-9
    l_min_reading: str = "min"
    out_dir: Path | None = None
    gnuplot: bool = False

    def __post_init__(self) -> None:
        if self.n < 1 or self.N < 0:
            raise ValueError(f"need n >= 1 and N >= 0, got n={self.n}, N={self.N}")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if not self.p_list:
            raise ValueError("at least one block count is required")
        for p in self.p_list:
            if p < 1 or p > self.n or self.n % p:
                raise ValueError(f"p={p} does not divide n={self.n}")
        if self.l_min_reading not in ("min", "max"):
            raise ValueError("l_min_reading must be 'min' or 'max'")


@dataclass(frozen=True, eq=False)
class FigureResult:
    """One (p, seed) run; row k holds the state after k completed cycles."""

    n: int
    p: int
    seed: int
    k: np.ndarray
    gap: np.ndarray
    beck: np.ndarray
    new: np.ndarray
    L_c: float
    L: float
    L_max: float
    L_min: float
    R: float
    unequal_blocks: bool
    min_slack_full: float
    min_slack_diag: float
    monotone: bool
    violations: tuple[int, ...] = field(default=())
    strict_violations: tuple[int, ...] = field(default=())

    @property
    def filename(self) -> str:
        return f"figure1_p{self.p}_seed{self.seed}.csv"

    def csv_text(self, N: int) -> str:
        lines = [
            f"# n={self.n} p={self.p} seed={self.seed} N={N} x0=0",
            f"# Lc=max_i L_i={self.L_c:.17g} (block constants unequal: "
            f"{'yes' if self.unequal_blocks else 'no'}) L={self.L:.17g} "
            f"Lmax={self.L_max:.17g} Lmin={self.L_min:.17g} R={self.R:.17g}",
            "# new(k)=p*Lc*R^2/(4*k*p+2) for the point after k cycles; "
            "beck(k)=4*Lmax*(1+p*L^2/Lmin^2)*R^2/(k+8/p)",
            "k,gap,beck,new",
        ]
        for k, g, b, nb in zip(self.k, self.gap, self.beck, self.new):
            lines.append(f"{k},{g:.17g},{b:.17g},{nb:.17g}")
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "p": self.p,
            "seed": self.seed,
            "Lc": self.L_c,
            "L": self.L,
            "Lmax": self.L_max,
            "Lmin": self.L_min,
            "R": self.R,
            "Lc_substituted": self.unequal_blocks,
            "final_gap": float(self.gap[-1]),
            "max_gap_over_new": float(np.max(self.gap / self.new)) if self.R > 0 else 0.0,
            "violations": list(self.violations),
            "strict_violations": list(self.strict_violations),
            "min_slack_full": self.min_slack_full,
            "min_slack_diag": self.min_slack_diag,
            "monotone": self.monotone,
        }


def run_single(config: ExperimentConfig, p: int, seed: int) -> FigureResult:
    problem = random_least_squares(config.n, p, seed, config.min_sigma)
    x0 = np.zeros(config.n)
    # run_cyclic_bcd(N) performs N+1 cycles; N cycles are needed here
    trace = run_cyclic_bcd(problem, x0, max(config.N - 1, 0))
    gaps = np.array(trace.cycle_gaps()[: config.N + 1])
    L_c = problem.L_max
    L_min = problem.L_min if config.l_min_reading == "min" else problem.L_max
    R = trace.radius
    ks = np.arange(config.N + 1)
    beck = np.array([beck_bound(k, p, problem.L_max, L_min, problem.global_lipschitz, R)
                     for k in ks])
    new = np.array([new_bound_after_cycles(int(k), p, L_c, R) for k in ks])
    strict = np.array([new_bound(int(k), p, L_c, R) for k in ks])
    slacks = pep_constraint_residuals(trace, problem)
    d = np.diff(trace.objective_gaps)
    monotone = bool(np.all(d <= 1e-12 * (1.0 + trace.objective_gaps[0])))
    return FigureResult(
        n=config.n, p=p, seed=seed, k=ks, gap=gaps, beck=beck, new=new,
        L_c=L_c, L=problem.global_lipschitz, L_max=problem.L_max, L_min=L_min, R=R,
        unequal_blocks=slacks.substituted,
        min_slack_full=slacks.min_full(), min_slack_diag=slacks.min_diag(),
        monotone=monotone,
        violations=tuple(int(k) for k in ks[gaps > new]),
        strict_violations=tuple(int(k) for k in ks[gaps > strict]),
    )


def worker_count(jobs: int) -> int:
    cap = os.environ.get(THREADS_ENV)
    limit = os.cpu_count() or 1
    if cap:
        limit = max(1, int(cap))
    return max(1, min(jobs, limit))


@dataclass(frozen=True, eq=False)
class FigureReport:
    config: ExperimentConfig
    results: tuple[FigureResult, ...]

    @property
    def violations(self) -> list[tuple[int, int, int]]:
        return [(r.p, r.seed, k) for r in self.results for k in r.violations]

    @property
    def slack_failures(self) -> list[tuple[int, int, float]]:
        return [(r.p, r.seed, r.min_slack_full) for r in self.results
                if r.min_slack_full < -self.config.slack_tol]

    @property
    def ok(self) -> bool:
        return not self.violations and not self.slack_failures and \
            all(r.monotone for r in self.results)

    def summary(self) -> dict:
        return {
            "n": self.config.n,
            "N": self.config.N,
            "p_list": list(self.config.p_list),
            "seeds": list(self.config.seeds),
            "alignment": "gap after k cycles vs new bound with N=k-1 (beck at k)",
            "Lc_rule": "Lc = max_i L_i",
            "Lmin_reading": self.config.l_min_reading,
            "ok": self.ok,
            "runs": [r.summary() for r in self.results],
        }


def cmd_figure1(config: ExperimentConfig) -> FigureReport:
    jobs = [(p, s) for p in config.p_list for s in config.seeds]
    with ThreadPoolExecutor(max_workers=worker_count(len(jobs))) as pool:
        results = list(pool.map(lambda job: run_single(config, *job), jobs))
    report = FigureReport(config, tuple(results))
    if config.out_dir is not None:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for r in results:
            (out / r.filename).write_text(r.csv_text(config.N), newline="\n")
        (out / "summary.json").write_text(json.dumps(report.summary(), indent=2) + "\n",
                                          newline="\n")
        if config.gnuplot:
            (out / "figure1.gp").write_text(gnuplot_script(results), newline="\n")
    return report


def gnuplot_script(results: list[FigureResult]) -> str:
    lines = ["set datafile separator ','", "set logscale y", "set xlabel 'cycle k'",
             "set ylabel 'f(x_k) - f*'", "set key outside"]
    for r in results:
        f = r.filename
        lines.append(f"set title 'p={r.p}, seed={r.seed}'")
        lines.append(f"plot '{f}' skip 4 using 1:2 with lines title 'BCD', "
                     f"'' skip 4 using 1:4 with lines title 'new bound', "
                     f"'' skip 4 using 1:3 with lines title 'prior bound'")
        lines.append("pause -1")
    return "\n".join(lines) + "\n"
