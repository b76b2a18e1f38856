"""
sweep.py - Parameter sweeps written to CSV

One row per grid value, in grid order. Axes: beta, p, q, W, e_max.
Solvers: closed_form, rvi, solve (bisection + renewal prediction),
simulate (bisection + Monte Carlo of the mixture), greedy.
"""

import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

import config
from oracles.chain_oracle import greedy_simulate_many, simulate_many
from oracles.mdp_oracle import NotThresholdStructured, TruncatedMdp, extract_threshold, rvi
from scheduler.closed_form import avg_energy
from scheduler.errors import SchedulerError, ValidationError
from scheduler.lagrange import bisect, mixture_report
from scheduler.model import SystemParams, pmf_from_erasures
from scheduler.threshold_search import optimal_threshold

logger = logging.getLogger(__name__)

AXES = ("beta", "p", "q", "W", "e_max")
SOLVERS = ("closed_form", "rvi", "solve", "simulate", "greedy")
COLUMNS = [
    "axis", "axis_value", "solver", "k_star", "k_minus", "k_plus", "mu", "mu_draw", "beta_minus", "beta_plus",
    "lagrangian_cost", "avg_age", "avg_energy", "std_err_age", "std_err_energy", "error",
]


@dataclass
class ExperimentSpec:
    params: SystemParams
    axis: str
    grid: Sequence[float]
    solver: str = "closed_form"
    out: Optional[str] = None
    beta: float = 0.0
    epsilon: float = field(default_factory=lambda: config.EPSILON)
    horizon: int = field(default_factory=lambda: config.HORIZON)
    seeds: int = field(default_factory=lambda: config.SEEDS)
    seed: int = field(default_factory=lambda: config.SEED)
    cap: Optional[int] = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValidationError(f"unknown sweep axis {self.axis!r} (expected one of {', '.join(AXES)})")
        if self.solver not in SOLVERS:
            raise ValidationError(f"unknown solver {self.solver!r} (expected one of {', '.join(SOLVERS)})")
        self.grid = [float(v) for v in self.grid]
        if not self.grid:
            raise ValidationError("sweep grid is empty")
        for v in self.grid:
            _check_axis_value(self.axis, v)


def _check_axis_value(axis: str, v: float):
    ok = {
        "beta": v >= 0.0,
        "p": 0.0 <= v < 1.0,
        "q": 0.0 <= v <= 1.0,
        "W": 0.0 < v <= 1.0,
        "e_max": 0.0 < v <= 1.0,
    }[axis]
    if not ok:
        raise ValidationError(f"grid value {v} is outside the domain of axis {axis!r}")


def parse_grid(text: str) -> List[float]:
    """'0.1,0.2,0.5' or 'start:stop:count' (inclusive linspace)"""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, count = text.split(":")
            return [float(v) for v in np.linspace(float(start), float(stop), int(count))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse grid {text!r}")


def apply_axis(params: SystemParams, axis: str, value: float):
    """(params, beta override or None) for one grid point"""
    if axis == "beta":
        return params, value
    if axis == "p":
        return params.replace(p=value), None
    if axis == "q":
        return params.replace(pmf=pmf_from_erasures([value] * params.M)), None
    if axis == "W":
        # two-point pmf: F(h) = W for every level h in [1, M]
        pmf = np.zeros(params.M + 1)
        pmf[0], pmf[-1] = 1.0 - value, value
        return params.replace(pmf=tuple(pmf)), None
    return params.replace(e_max=value), None


def _run_point(spec: ExperimentSpec, value: float) -> Dict:
    row = {"axis": spec.axis, "axis_value": value, "solver": spec.solver}
    try:
        params, beta = apply_axis(spec.params, spec.axis, value)
        beta = spec.beta if beta is None else beta
        row.update(_solve_point(spec, params, beta))
    except SchedulerError as e:
        logger.warning("⚠️ %s=%g failed: %s: %s", spec.axis, value, e.code, e)
        row["error"] = e.code
    except Exception as e:
        logger.warning("⚠️ %s=%g failed: E_INTERNAL: %s", spec.axis, value, e)
        row["error"] = "E_INTERNAL"
    return row


def _solve_point(spec: ExperimentSpec, params: SystemParams, beta: float) -> Dict:
    if spec.solver == "closed_form":
        res = optimal_threshold(params, beta)
        return {"k_star": res.k_star, "lagrangian_cost": res.cost_star,
                "avg_age": res.avg_age, "avg_energy": res.avg_energy}

    if spec.solver == "rvi":
        sol = rvi(TruncatedMdp.build(params, beta, spec.cap))
        k = extract_threshold(sol.policy, params.distortion)
        if isinstance(k, NotThresholdStructured):
            logger.warning("⚠️ %s", k)
            return {"lagrangian_cost": sol.gain, "error": "NOT_THRESHOLD"}
        # age derived from the gain so that lagrangian_cost = avg_age + beta * avg_energy
        energy = avg_energy(params, k)
        return {"k_star": k, "lagrangian_cost": sol.gain,
                "avg_age": sol.gain - beta * energy, "avg_energy": energy}

    if spec.solver == "greedy":
        sim = greedy_simulate_many(params, spec.horizon, spec.seeds, spec.seed, n_jobs=1)
        return {"avg_age": sim.empirical_avg_age, "avg_energy": sim.empirical_avg_energy,
                "std_err_age": sim.std_err_age, "std_err_energy": sim.std_err_energy}

    policy = bisect(params, spec.epsilon)
    row = {"k_minus": policy.low_policy.threshold, "k_plus": policy.high_policy.threshold,
           "mu": policy.mix_prob, "mu_draw": policy.draw_prob,
           "beta_minus": policy.beta_minus, "beta_plus": policy.beta_plus}
    if spec.solver == "solve":
        rep = mixture_report(params, policy)
        row.update({"avg_age": rep.avg_age, "avg_energy": rep.avg_energy})
    else:
        sim = simulate_many(params, policy, spec.horizon, spec.seeds, spec.seed, n_jobs=1)
        row.update({"avg_age": sim.empirical_avg_age, "avg_energy": sim.empirical_avg_energy,
                    "std_err_age": sim.std_err_age, "std_err_energy": sim.std_err_energy})
    return row


def run_sweep(spec: ExperimentSpec, n_jobs: int = None) -> pd.DataFrame:
    n_jobs = config.THREADS if n_jobs is None else n_jobs
    n_jobs = -1 if n_jobs <= 0 else n_jobs
    grid = tqdm(spec.grid, desc=f"sweep {spec.axis}", disable=not config.SHOW_PROGRESS)
    # Parallel returns results in submission order, so rows follow the grid
    rows = Parallel(n_jobs=n_jobs)(delayed(_run_point)(spec, v) for v in grid)
    df = pd.DataFrame(rows, columns=COLUMNS)
    for col in ("k_star", "k_minus", "k_plus"):
        df[col] = df[col].astype("Int64")
    return df


def write_csv(df: pd.DataFrame, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    df.to_csv(path, index=False, float_format="%.12g", lineterminator="\n", encoding="utf-8")


def cmd_sweep(spec: ExperimentSpec, n_jobs: int = None) -> str:
    out = spec.out or os.path.join(config.DATA_DIR, f"sweep_{spec.axis}_{spec.solver}.csv")
    df = run_sweep(spec, n_jobs)
    write_csv(df, out)
    failed = int(df["error"].notna().sum())
    logger.info("✅ wrote %d rows to %s (%d failed)", len(df), out, failed)
    return out
