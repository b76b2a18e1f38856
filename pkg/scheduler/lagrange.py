"""
lagrange.py - Energy-constrained scheduling via bisection on the multiplier

Features:
- Bracket search for the energy price beta (doubling from 1)
- Bisection on beta with a recorded trace
- Randomization factor mu between the two bracketing threshold policies, and the
  per-delivery draw probability that realizes it as a long-run slot share
- Long-run age / energy of the mixture by renewal-reward (policy re-drawn per delivery)
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Tuple

import config
from oracles.chain_oracle import cycle_lengths, draw_probability, oracle_cost
from scheduler.closed_form import avg_energy
from scheduler.errors import NoBracket, ValidationError
from scheduler.model import MixturePolicy, SystemParams, ThresholdPolicy
from scheduler.threshold_search import optimal_threshold

logger = logging.getLogger(__name__)

MU_SLACK = 1e-6


@dataclass
class BisectionTrace:
    iterations: List[Tuple[float, int, float]] = field(default_factory=list)
    beta_minus: float = 0.0
    beta_plus: float = 0.0
    epsilon: float = 0.0
    slack: bool = False


@dataclass(frozen=True)
class MixtureReport:
    """mix_prob: long-run slot share under the low policy; draw_prob: per-delivery probability of it"""

    avg_age: float
    avg_energy: float
    mix_prob: float
    draw_prob: float
    low_cycle: float
    high_cycle: float


def _energy_at(params: SystemParams, beta: float) -> Tuple[int, float]:
    k = optimal_threshold(params, beta).k_star
    return k, avg_energy(params, k)


def _slack_at_zero(params: SystemParams) -> Tuple[int, float, bool]:
    k0, e0 = _energy_at(params, 0.0)
    slack = e0 <= params.e_max
    if slack:
        logger.info("✅ energy constraint is slack at beta=0 (k*=%d, E=%.6g <= %.6g)", k0, e0, params.e_max)
    return k0, e0, slack


def _double_until_feasible(params: SystemParams, max_doublings: int) -> Tuple[float, float]:
    if params.e_max <= 0:
        raise NoBracket(f"energy budget must be positive, got {params.e_max}")
    beta_hi = 1.0
    for _ in range(max_doublings):
        _, e = _energy_at(params, beta_hi)
        if e <= params.e_max:
            return 0.0, beta_hi
        beta_hi *= 2.0
    raise NoBracket(f"no beta <= {beta_hi / 2:g} brings the energy below {params.e_max}")


def bracket_beta(params: SystemParams, max_doublings: int = None) -> Tuple[float, float]:
    """(0, beta_hi) with E(pi_{k*(beta_hi)}) <= e_max"""
    max_doublings = config.MAX_DOUBLINGS if max_doublings is None else max_doublings
    if params.e_max <= 0:
        raise NoBracket(f"energy budget must be positive, got {params.e_max}")
    _slack_at_zero(params)
    return _double_until_feasible(params, max_doublings)


def randomization_factor(e_minus: float, e_plus: float, e_max: float) -> Tuple[float, float]:
    """(clamped mu, raw mu) interpolating the two policies' energies onto e_max"""
    if e_minus == e_plus:
        return 1.0, 1.0
    raw = (e_max - e_plus) / (e_minus - e_plus)
    if raw < -MU_SLACK or raw > 1.0 + MU_SLACK:
        logger.warning("⚠️ randomization factor %.9g outside [0, 1]; energy is not monotone across the bracket", raw)
    return min(1.0, max(0.0, raw)), raw


def bisect_with_trace(params: SystemParams, epsilon: float = None,
                      max_doublings: int = None) -> Tuple[MixturePolicy, BisectionTrace]:
    epsilon = config.EPSILON if epsilon is None else float(epsilon)
    max_doublings = config.MAX_DOUBLINGS if max_doublings is None else max_doublings
    if not epsilon > 0:
        raise ValidationError(f"epsilon must be > 0, got {epsilon}")

    k0, e0, slack = _slack_at_zero(params)
    if slack:
        policy = ThresholdPolicy(k0)
        trace = BisectionTrace(epsilon=epsilon, slack=True)
        return MixturePolicy(policy, policy, 1.0, 0.0, 0.0, draw_prob=1.0), trace

    lo, hi = _double_until_feasible(params, max_doublings)
    trace = BisectionTrace(epsilon=epsilon)
    # E(k*(lo)) > e_max >= E(k*(hi)) holds on entry and after every step
    while hi - lo > epsilon:
        mid = 0.5 * (lo + hi)
        k, e = _energy_at(params, mid)
        trace.iterations.append((mid, k, e))
        logger.debug("bisect beta=%.9g k*=%d E=%.9g", mid, k, e)
        if e > params.e_max:
            lo = mid
        else:
            hi = mid

    k_minus, e_minus = (k0, e0) if lo == 0.0 else _energy_at(params, lo)
    k_plus, e_plus = _energy_at(params, hi)
    mu, raw = randomization_factor(e_minus, e_plus, params.e_max)
    trace.beta_minus, trace.beta_plus = lo, hi

    policy = MixturePolicy(
        low_policy=ThresholdPolicy(k_minus), high_policy=ThresholdPolicy(k_plus), mix_prob=mu,
        beta_minus=lo, beta_plus=hi,
        extra={"energy_minus": e_minus, "energy_plus": e_plus, "mu_raw": raw},
    )
    policy = replace(policy, draw_prob=draw_probability(params, policy))
    logger.info("✅ bisection done after %d steps: k-=%d k+=%d mu=%.6g (per delivery %.6g)",
                len(trace.iterations), k_minus, k_plus, mu, policy.draw_prob)
    return policy, trace


def bisect(params: SystemParams, epsilon: float = None) -> MixturePolicy:
    return bisect_with_trace(params, epsilon)[0]


def max_iterations(beta_lo: float, beta_hi: float, epsilon: float) -> int:
    if beta_hi - beta_lo <= epsilon:
        return 0
    return math.ceil(math.log2((beta_hi - beta_lo) / epsilon))


def mixture_report(params: SystemParams, policy: MixturePolicy) -> MixtureReport:
    """Renewal-reward averages of a mixture re-drawn after each delivery"""
    low = oracle_cost(params, policy.low_policy.threshold, 0.0)
    high = oracle_cost(params, policy.high_policy.threshold, 0.0)
    t_low, t_high = cycle_lengths(params, policy)

    x = draw_probability(params, policy)
    share = x * t_low / (x * t_low + (1.0 - x) * t_high)
    age = share * low.avg_age + (1.0 - share) * high.avg_age
    energy = share * low.avg_energy + (1.0 - share) * high.avg_energy
    return MixtureReport(avg_age=age, avg_energy=energy, mix_prob=share, draw_prob=x,
                         low_cycle=t_low, high_cycle=t_high)


def mixture_energy(params: SystemParams, policy: MixturePolicy) -> float:
    return mixture_report(params, policy).avg_energy
