"""
chain_oracle.py - Independent evaluation of threshold and mixture policies

Features:
- Steady state of the age chain under pi_k from the raw balance recursions
  (no closed-form normalizer), with the geometric tail summed analytically
- Oracle cost / energy / age built from that steady state
- Slot-by-slot Monte Carlo of threshold, mixture and greedy policies
  (numba kernel over pre-drawn random chunks)
- Multi-seed runs in a joblib worker pool
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Union

import numpy as np
from joblib import Parallel, delayed
from numba import njit

import config
from scheduler.closed_form import CostReport, CostSource, l_index
from scheduler.errors import UnreachableLevel, ValidationError
from scheduler.model import MixturePolicy, SystemParams, ThresholdPolicy, distortion_levels

logger = logging.getLogger(__name__)

RNG_ALGORITHM = "PCG64"
WINDOWS = 100


# ===================== STEADY STATE =====================

@dataclass(frozen=True)
class SteadyState:
    """z[i] = P(age = i + 1) for ages 1..cap; ages beyond cap decay with ratio tail_ratio"""

    z: np.ndarray
    tail_mass: float
    tail_age: float
    tail_ratio: float
    threshold: int

    @property
    def cap(self) -> int:
        return len(self.z)

    @property
    def cycle_length(self) -> float:
        """Mean number of slots between deliveries (the age resets to 1 on each)"""
        return 1.0 / self.z[0]

    def total_mass(self) -> float:
        return float(np.sum(self.z)) + self.tail_mass


def _check_reachable(params: SystemParams, k: int):
    spec = params.distortion
    first = l_index(spec, k) - 1
    for l in range(first, spec.L + 1):
        if params.level_tails[l - 1] <= 0.0:
            raise UnreachableLevel(l, spec.levels[l - 1])


def steady_state(params: SystemParams, k: int, tail_tol: float = None,
                 max_cap: int = None) -> SteadyState:
    tail_tol = config.TAIL_TOL if tail_tol is None else tail_tol
    max_cap = config.MAX_STEADY_CAP if max_cap is None else max_cap
    if tail_tol <= 0:
        raise ValidationError(f"tail_tol must be > 0, got {tail_tol}")
    if k < 1:
        raise ValidationError(f"threshold must be >= 1, got {k}")
    _check_reachable(params, k)

    spec = params.distortion
    F_L = float(params.level_tails[-1])
    B_L = 1.0 - (1.0 - params.p) * F_L
    base = max(k, spec.last_breakpoint)

    # ages past `base` share the ratio B_L; pick the cap that pushes the residual below tail_tol
    extra = 0
    if B_L > 0.0:
        extra = max(0, math.ceil(math.log(tail_tol * (1.0 - B_L)) / math.log(B_L)))
    cap = base + extra
    if cap > max_cap:
        logger.warning("⚠️ steady-state cap %d exceeds the hard limit %d; using the limit", cap, max_cap)
        cap = max(max_cap, base)

    ages = np.arange(1, cap + 1)
    reset = (1.0 - params.p) * params.tail[distortion_levels(spec, ages)]
    # balance recursion: u_{a+1} = u_a below the threshold, u_a * (1 - reset_a) from it on
    ratio = np.where(ages[:-1] < k, 1.0, 1.0 - reset[:-1])
    u = np.concatenate(([1.0], np.cumprod(ratio)))

    u_cap = u[-1]
    if B_L > 0.0:
        tail_u = u_cap * B_L / (1.0 - B_L)
        tail_age_u = u_cap * (cap * B_L / (1.0 - B_L) + B_L / (1.0 - B_L) ** 2)
    else:
        tail_u = tail_age_u = 0.0

    total = float(np.sum(u)) + tail_u
    return SteadyState(
        z=u / total, tail_mass=tail_u / total, tail_age=tail_age_u / total,
        tail_ratio=B_L, threshold=int(k),
    )


def oracle_cost(params: SystemParams, k: int, beta: float, tail_tol: float = None) -> CostReport:
    ss = steady_state(params, k, tail_tol)
    spec = params.distortion
    ages = np.arange(1, ss.cap + 1)
    F_age = params.tail[distortion_levels(spec, ages)]
    F_L = float(params.level_tails[-1])

    avg_age = float(np.dot(ages, ss.z)) + ss.tail_age
    energy = float(np.dot(np.where(ages >= k, F_age, 0.0), ss.z)) + F_L * ss.tail_mass
    return CostReport(
        lagrangian_cost=avg_age + beta * energy, avg_energy=energy, avg_age=avg_age,
        threshold=int(k), beta=float(beta), source=CostSource.CHAIN_ORACLE,
    )


def cycle_lengths(params: SystemParams, policy: MixturePolicy):
    """Mean slots between deliveries under low_policy and under high_policy"""
    t_low = steady_state(params, policy.low_policy.threshold).cycle_length
    if policy.high_policy == policy.low_policy:
        return t_low, t_low
    return t_low, steady_state(params, policy.high_policy.threshold).cycle_length


def draw_probability(params: SystemParams, policy: MixturePolicy) -> float:
    """Per-delivery probability of low_policy that spends mix_prob of all slots under it.

    Cycles are drawn independently, so the slot share of low_policy is
    x * T_low / (x * T_low + (1 - x) * T_high) for draw probability x; this inverts it.
    """
    if policy.draw_prob is not None:
        return policy.draw_prob
    mu = policy.mix_prob
    if mu in (0.0, 1.0) or policy.low_policy == policy.high_policy:
        return mu
    t_low, t_high = cycle_lengths(params, policy)
    return mu * t_high / (mu * t_high + (1.0 - mu) * t_low)


# ===================== SIMULATION =====================

@dataclass
class SimResult:
    horizon: int
    seed: object
    empirical_avg_age: float
    empirical_avg_energy: float
    window_age: np.ndarray
    window_energy: np.ndarray
    std_err_age: float = float("nan")
    std_err_energy: float = float("nan")
    rng: str = RNG_ALGORITHM
    per_seed: List["SimResult"] = field(default_factory=list)


@njit(cache=True, nogil=True)
def _level_of(age, breakpoints, levels):
    i = breakpoints.shape[0] - 1
    while breakpoints[i] > age:
        i -= 1
    return levels[i]


@njit(cache=True, nogil=True)
def _policy_kernel(age, k_cur, k_low, k_high, mu, lam, chan, mix, breakpoints, levels, p,
                   t0, win_len, n_win, win_age, win_energy):
    for i in range(lam.shape[0]):
        w = min((t0 + i) // win_len, n_win - 1)
        win_age[w] += age
        if age >= k_cur and lam[i] >= _level_of(age, breakpoints, levels):
            win_energy[w] += 1.0
            if chan[i] >= p:
                age = 1
                k_cur = k_low if mix[i] < mu else k_high
                continue
        age += 1
    return age, k_cur


@njit(cache=True, nogil=True)
def _greedy_kernel(age, spent, lam, chan, breakpoints, levels, p, e_max,
                   t0, win_len, n_win, win_age, win_energy):
    for i in range(lam.shape[0]):
        t = t0 + i + 1
        w = min((t0 + i) // win_len, n_win - 1)
        win_age[w] += age
        # e_max = 1 never binds: the rate cannot exceed one transmission per slot
        within_budget = t == 1 or e_max >= 1.0 or spent < e_max * (t - 1)
        if within_budget and lam[i] >= _level_of(age, breakpoints, levels):
            spent += 1.0
            win_energy[w] += 1.0
            if chan[i] >= p:
                age = 1
                continue
        age += 1
    return age, spent


def _windows(horizon: int):
    n_win = min(WINDOWS, horizon)
    win_len = horizon // n_win
    counts = np.full(n_win, win_len, dtype=np.float64)
    counts[-1] += horizon - n_win * win_len
    return n_win, win_len, counts


def _finish(horizon, seed, win_age, win_energy, counts) -> SimResult:
    means_age = win_age / counts
    means_energy = win_energy / counts
    n = len(counts)
    # batch means over the windows
    se_age = float(np.std(means_age, ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    se_energy = float(np.std(means_energy, ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    return SimResult(
        horizon=int(horizon), seed=seed,
        empirical_avg_age=float(win_age.sum() / horizon),
        empirical_avg_energy=float(win_energy.sum() / horizon),
        window_age=means_age, window_energy=means_energy,
        std_err_age=se_age, std_err_energy=se_energy,
    )


def _chunks(rng: np.random.Generator, params: SystemParams, horizon: int, chunk: int):
    support = np.arange(params.M + 1)
    pmf = np.asarray(params.pmf)
    t0 = 0
    while t0 < horizon:
        n = min(chunk, horizon - t0)
        lam = rng.choice(support, size=n, p=pmf)
        chan = rng.random(n)
        mix = rng.random(n)
        yield t0, lam, chan, mix
        t0 += n


def _as_mixture(params: SystemParams, policy: Union[ThresholdPolicy, MixturePolicy]):
    """(k_low, k_high, per-delivery probability of k_low)"""
    if isinstance(policy, ThresholdPolicy):
        return policy.threshold, policy.threshold, 1.0
    if isinstance(policy, MixturePolicy):
        return policy.low_policy.threshold, policy.high_policy.threshold, draw_probability(params, policy)
    raise ValidationError(f"unsupported policy type {type(policy).__name__}")


def simulate(params: SystemParams, policy: Union[ThresholdPolicy, MixturePolicy],
             horizon: int = None, seed=None, chunk: int = None) -> SimResult:
    """Simulate `horizon` slots from age 1; a mixture re-draws its threshold after each delivery"""
    horizon = config.HORIZON if horizon is None else int(horizon)
    seed = config.SEED if seed is None else seed
    chunk = config.CHUNK if chunk is None else int(chunk)
    if horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {horizon}")

    k_low, k_high, mu = _as_mixture(params, policy)
    rng = np.random.default_rng(seed)
    k_cur = k_low if rng.random() < mu else k_high

    spec = params.distortion
    breakpoints = np.asarray(spec.breakpoints, dtype=np.int64)
    levels = np.asarray(spec.levels, dtype=np.int64)
    n_win, win_len, counts = _windows(horizon)
    win_age = np.zeros(n_win)
    win_energy = np.zeros(n_win)

    age = 1
    for t0, lam, chan, mix in _chunks(rng, params, horizon, chunk):
        age, k_cur = _policy_kernel(
            age, k_cur, k_low, k_high, mu, lam, chan, mix, breakpoints, levels, params.p,
            t0, win_len, n_win, win_age, win_energy,
        )
    return _finish(horizon, seed, win_age, win_energy, counts)


def greedy_simulate(params: SystemParams, horizon: int = None, seed=None,
                    chunk: int = None) -> SimResult:
    """Transmit whenever admissible and the running energy rate is below e_max"""
    horizon = config.HORIZON if horizon is None else int(horizon)
    seed = config.SEED if seed is None else seed
    chunk = config.CHUNK if chunk is None else int(chunk)
    if horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {horizon}")

    rng = np.random.default_rng(seed)
    spec = params.distortion
    breakpoints = np.asarray(spec.breakpoints, dtype=np.int64)
    levels = np.asarray(spec.levels, dtype=np.int64)
    n_win, win_len, counts = _windows(horizon)
    win_age = np.zeros(n_win)
    win_energy = np.zeros(n_win)

    age, spent = 1, 0.0
    for t0, lam, chan, _ in _chunks(rng, params, horizon, chunk):
        age, spent = _greedy_kernel(
            age, spent, lam, chan, breakpoints, levels, params.p, params.e_max,
            t0, win_len, n_win, win_age, win_energy,
        )
    return _finish(horizon, seed, win_age, win_energy, counts)


# ===================== MULTI-SEED =====================

def _n_jobs(n_jobs):
    n_jobs = config.THREADS if n_jobs is None else n_jobs
    return -1 if n_jobs <= 0 else n_jobs


def _merge(results: List[SimResult], base_seed) -> SimResult:
    if len(results) == 1:
        return results[0]
    horizons = np.array([r.horizon for r in results], dtype=np.float64)
    ages = np.array([r.empirical_avg_age for r in results])
    energies = np.array([r.empirical_avg_energy for r in results])
    n = len(results)
    return SimResult(
        horizon=int(horizons.sum()), seed=base_seed,
        empirical_avg_age=float(np.average(ages, weights=horizons)),
        empirical_avg_energy=float(np.average(energies, weights=horizons)),
        window_age=np.concatenate([r.window_age for r in results]),
        window_energy=np.concatenate([r.window_energy for r in results]),
        std_err_age=float(np.std(ages, ddof=1) / math.sqrt(n)),
        std_err_energy=float(np.std(energies, ddof=1) / math.sqrt(n)),
        per_seed=list(results),
    )


def simulate_many(params: SystemParams, policy, horizon: int = None, seeds: int = None,
                  base_seed: int = None, n_jobs: int = None) -> SimResult:
    seeds = config.SEEDS if seeds is None else int(seeds)
    base_seed = config.SEED if base_seed is None else base_seed
    if seeds < 1:
        raise ValidationError(f"seed count must be >= 1, got {seeds}")
    if isinstance(policy, MixturePolicy) and policy.draw_prob is None:
        policy = replace(policy, draw_prob=draw_probability(params, policy))
    children = np.random.SeedSequence(base_seed).spawn(seeds)
    results = Parallel(n_jobs=_n_jobs(n_jobs), prefer="threads")(
        delayed(simulate)(params, policy, horizon, child) for child in children
    )
    return _merge(results, base_seed)


def greedy_simulate_many(params: SystemParams, horizon: int = None, seeds: int = None,
                         base_seed: int = None, n_jobs: int = None) -> SimResult:
    seeds = config.SEEDS if seeds is None else int(seeds)
    base_seed = config.SEED if base_seed is None else base_seed
    if seeds < 1:
        raise ValidationError(f"seed count must be >= 1, got {seeds}")
    children = np.random.SeedSequence(base_seed).spawn(seeds)
    results = Parallel(n_jobs=_n_jobs(n_jobs), prefer="threads")(
        delayed(greedy_simulate)(params, horizon, child) for child in children
    )
    return _merge(results, base_seed)
