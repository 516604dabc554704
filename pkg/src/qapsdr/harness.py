"""Sweep engine: noise grids, repeated trials, CSV persistence, SVG plots.

A sweep walks a sigma grid, runs a fixed number of independent trials per
grid point, and records per-trial correlation with the planted solution,
the exactness flag, the deterministic condition check, and solver
telemetry.  Per-trial seeds are derived by hashing (master seed, sigma
index, trial), so execution order can never perturb the data.

The CSV file is the system of record; plots are derived from it and never
parsed back.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, fields
from typing import Callable, List, Optional, Sequence

import numpy as np

from .certificates import (
    check_exactness_condition,
    delta_in_truth_frame,
    lambda2_bound,
)
from .errors import InvalidInput, InvariantViolation
from .formulation import (
    CostVariant,
    SdrVariant,
    build_constraints,
    build_cost,
    correlation,
    is_exact,
)
from .instances import (
    gen_correlated_wigner,
    gen_diag_gaussian,
    gen_diag_plus_wigner,
    derive_seed,
)
from .solver import (
    STATUS_NUMERICAL_FAILURE,
    SdpProblem,
    SolverSettings,
    solve,
)

CSV_HEADER = (
    "sigma,trial,seed,corr,exact,condition_holds,"
    "lambda2_margin,iterations,status,wall_time_s"
)

MODEL_KINDS = ("diag_gaussian", "diag_plus_wigner", "correlated_wigner")


def default_sigma_grid() -> tuple:
    """0.0 to 2.0 in steps of 0.1, exact decimals."""
    return tuple(round(0.1 * i, 10) for i in range(21))


@dataclass
class SweepConfig:
    model: str = "diag_gaussian"
    sigma_grid: tuple = field(default_factory=default_sigma_grid)
    trials_per_sigma: int = 20
    n: int = 10
    sdr_variant: SdrVariant = SdrVariant.SDR_I
    cost_variant: CostVariant = CostVariant.SQUARED_DIFFERENCE
    solver: SolverSettings = field(default_factory=SolverSettings)
    master_seed: int = 0
    output_path: Optional[str] = None
    lambda_profile: Optional[tuple] = None

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise InvalidInput(
                f"unknown model {self.model!r}; expected one of {MODEL_KINDS}"
            )
        grid = tuple(float(s) for s in self.sigma_grid)
        if len(grid) == 0:
            raise InvalidInput("sigma_grid is empty")
        if any(s < 0 for s in grid):
            raise InvalidInput("sigma values must be non-negative")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidInput("sigma_grid must be strictly ascending")
        self.sigma_grid = grid
        if self.trials_per_sigma < 1:
            raise InvalidInput("trials_per_sigma must be at least 1")
        if self.n < 2:
            raise InvalidInput("n must be at least 2")
        self.sdr_variant = SdrVariant(self.sdr_variant) if not isinstance(
            self.sdr_variant, SdrVariant
        ) else self.sdr_variant
        self.cost_variant = CostVariant(self.cost_variant) if not isinstance(
            self.cost_variant, CostVariant
        ) else self.cost_variant
        if self.lambda_profile is not None:
            self.lambda_profile = tuple(float(v) for v in self.lambda_profile)
            if len(self.lambda_profile) != self.n:
                raise InvalidInput("lambda_profile length must equal n")

    def profile(self) -> tuple:
        if self.lambda_profile is not None:
            return self.lambda_profile
        return tuple(float(k) for k in range(1, self.n + 1))

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "sigma_grid": list(self.sigma_grid),
            "trials_per_sigma": self.trials_per_sigma,
            "n": self.n,
            "sdr_variant": self.sdr_variant.value,
            "cost_variant": self.cost_variant.value,
            "solver": {f.name: getattr(self.solver, f.name) for f in fields(self.solver)},
            "master_seed": self.master_seed,
            "output_path": self.output_path,
            "lambda_profile": None
            if self.lambda_profile is None
            else list(self.lambda_profile),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        d = dict(d)
        solver = d.pop("solver", None)
        if isinstance(solver, dict):
            solver = SolverSettings(**solver)
        elif solver is None:
            solver = SolverSettings()
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise InvalidInput(f"unknown config fields: {sorted(extra)}")
        return cls(solver=solver, **d)


@dataclass(frozen=True)
class TrialRecord:
    sigma: float
    trial: int
    seed: int
    corr: float
    exact: bool
    condition_holds: bool
    lambda2_margin: float
    solver_iterations: int
    solver_status: str
    wall_time_s: float


@dataclass(frozen=True)
class SigmaSummary:
    sigma: float
    trials: int
    exact_rate: float
    mean_corr: float
    mean_iterations: float


def make_instance(config: SweepConfig, sigma: float, seed: int):
    if config.model == "diag_gaussian":
        return gen_diag_gaussian(config.n, config.profile(), sigma, seed)
    if config.model == "diag_plus_wigner":
        return gen_diag_plus_wigner(config.n, config.profile(), sigma, seed)
    return gen_correlated_wigner(config.n, sigma, seed)


def run_trial(config: SweepConfig, sigma_index: int, trial: int,
              clock: Callable[[], float] = time.perf_counter) -> TrialRecord:
    sigma = config.sigma_grid[sigma_index]
    seed = derive_seed(config.master_seed, sigma_index, trial)
    inst = make_instance(config, sigma, seed)
    delta = delta_in_truth_frame(inst)
    cond = check_exactness_condition(inst.A, delta)
    margin = lambda2_bound(inst.A, delta)

    cost = build_cost(inst.A, inst.C, config.cost_variant)
    cons = build_constraints(inst.n, config.sdr_variant)
    started = clock()
    result = solve(SdpProblem(cost=cost, constraints=cons), config.solver)
    elapsed = clock() - started

    corr = correlation(result.X_hat, inst.truth)
    # a non-converged iterate can carry an overlap outside the plausible
    # window; that is a failed recovery, not a reason to abort the sweep
    try:
        exact = is_exact(corr)
    except InvalidInput:
        exact = False
    return TrialRecord(
        sigma=float(sigma),
        trial=trial,
        seed=seed,
        corr=float(corr),
        exact=exact,
        condition_holds=cond.holds,
        lambda2_margin=float(margin),
        solver_iterations=result.iterations,
        solver_status=result.status,
        wall_time_s=float(elapsed),
    )


def run_sweep(config: SweepConfig,
              clock: Callable[[], float] = time.perf_counter,
              progress: Optional[Callable[[TrialRecord], None]] = None,
              ) -> List[TrialRecord]:
    """Run every (sigma, trial) cell and return records sorted by cell.

    Trials are independent; seeds come from hashing, so any execution
    order produces the same numbers.  A trial whose recorded condition
    check holds but whose solve ended non-exact is a soundness violation
    and aborts loudly; numerically failed solves are exempt since they
    carry no usable iterate.  ``clock`` exists so tests can pin the
    timing column; it never influences the mathematics.
    """
    records = []
    for si in range(len(config.sigma_grid)):
        for trial in range(config.trials_per_sigma):
            rec = run_trial(config, si, trial, clock=clock)
            if (
                rec.condition_holds
                and rec.solver_status != STATUS_NUMERICAL_FAILURE
                and not rec.exact
            ):
                raise InvariantViolation(
                    "condition_holds implies exact "
                    f"(sigma={rec.sigma}, trial={rec.trial}, corr={rec.corr})",
                    1.0 - rec.corr,
                )
            records.append(rec)
            if progress is not None:
                progress(rec)
    records.sort(key=lambda r: (r.sigma, r.trial))
    return records


def aggregate(records: Sequence[TrialRecord]) -> List[SigmaSummary]:
    """Per-sigma exactness rate, mean correlation, mean iteration count."""
    by_sigma = {}
    for rec in records:
        by_sigma.setdefault(rec.sigma, []).append(rec)
    out = []
    for sigma in sorted(by_sigma):
        group = by_sigma[sigma]
        k = len(group)
        out.append(
            SigmaSummary(
                sigma=sigma,
                trials=k,
                exact_rate=sum(1 for r in group if r.exact) / k,
                mean_corr=sum(r.corr for r in group) / k,
                mean_iterations=sum(r.solver_iterations for r in group) / k,
            )
        )
    return out


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_csv(records: Sequence[TrialRecord], path: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            row = [
                r.sigma, r.trial, r.seed, r.corr, r.exact, r.condition_holds,
                r.lambda2_margin, r.solver_iterations, r.solver_status,
                r.wall_time_s,
            ]
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _parse_bool(text: str) -> bool:
    if text == "true":
        return True
    if text == "false":
        return False
    raise InvalidInput(f"expected true/false, got {text!r}")


def read_csv(path: str) -> List[TrialRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER.split(","):
            raise InvalidInput(f"unexpected CSV header: {header}")
        out = []
        for row in reader:
            if not row:
                continue
            (sigma, trial, seed, corr, exact, cond, margin, iters, status,
             wall) = row
            out.append(
                TrialRecord(
                    sigma=float(sigma),
                    trial=int(trial),
                    seed=int(seed),
                    corr=float(corr),
                    exact=_parse_bool(exact),
                    condition_holds=_parse_bool(cond),
                    lambda2_margin=float(margin),
                    solver_iterations=int(iters),
                    solver_status=status,
                    wall_time_s=float(wall),
                )
            )
    return out


# plot geometry, fixed so output bytes depend only on the summary
_W, _H = 640, 420
_ML, _MR, _MT, _MB = 70, 20, 20, 50


def _xy(sigma, rate, s_lo, s_hi):
    span = s_hi - s_lo
    if span <= 0:
        fx = 0.5
    else:
        fx = (sigma - s_lo) / span
    x = _ML + fx * (_W - _ML - _MR)
    y = _MT + (1.0 - rate) * (_H - _MT - _MB)
    return x, y


def emit_plot(summary: Sequence[SigmaSummary], path: str) -> None:
    """Render exactness rate against sigma as a standalone SVG line chart.

    Output bytes are a pure function of the summary: coordinates are
    formatted to two decimals and nothing time- or environment-dependent
    is embedded.
    """
    if len(summary) == 0:
        raise InvalidInput("nothing to plot: empty summary")
    pts = sorted((s.sigma, s.exact_rate) for s in summary)
    s_lo, s_hi = pts[0][0], pts[-1][0]
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        # axes
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" '
        'stroke="black" stroke-width="1"/>',
        f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" '
        'stroke="black" stroke-width="1"/>',
    ]
    # y ticks at 0, 0.25, ..., 1
    for k in range(5):
        rate = k / 4.0
        _, y = _xy(s_lo, rate, s_lo, s_hi)
        lines.append(
            f'<line x1="{_ML - 4}" y1="{y:.2f}" x2="{_ML}" y2="{y:.2f}" '
            'stroke="black" stroke-width="1"/>'
        )
        lines.append(
            f'<text x="{_ML - 8}" y="{y + 4:.2f}" font-size="12" '
            f'text-anchor="end">{rate:.2f}</text>'
        )
    # x ticks at every summarized sigma (thinned to at most 11)
    step = max(1, (len(pts) + 10) // 11)
    for i in range(0, len(pts), step):
        sigma = pts[i][0]
        x, _ = _xy(sigma, 0.0, s_lo, s_hi)
        yb = _H - _MB
        lines.append(
            f'<line x1="{x:.2f}" y1="{yb}" x2="{x:.2f}" y2="{yb + 4}" '
            'stroke="black" stroke-width="1"/>'
        )
        lines.append(
            f'<text x="{x:.2f}" y="{yb + 18}" font-size="12" '
            f'text-anchor="middle">{sigma:g}</text>'
        )
    coords = [_xy(s, r, s_lo, s_hi) for s, r in pts]
    poly = " ".join(f"{x:.2f},{y:.2f}" for x, y in coords)
    lines.append(
        f'<polyline points="{poly}" fill="none" stroke="#1f6fb2" '
        'stroke-width="2"/>'
    )
    for x, y in coords:
        lines.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="#1f6fb2"/>')
    lines.append(
        f'<text x="{(_ML + _W - _MR) // 2}" y="{_H - 12}" font-size="14" '
        'text-anchor="middle">sigma</text>'
    )
    lines.append(
        f'<text x="18" y="{(_MT + _H - _MB) // 2}" font-size="14" '
        f'text-anchor="middle" transform="rotate(-90 18 {(_MT + _H - _MB) // 2})">'
        "exactness rate</text>"
    )
    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
