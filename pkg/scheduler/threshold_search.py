"""
threshold_search.py - Optimal threshold at a fixed energy price beta

Scans k = 1..delta_L - 1 with the closed-form cost and covers the whole tail
[delta_L, inf) with the single candidate k_UB; delta_L evaluations in total.
"""

import logging
from dataclasses import dataclass

import numpy as np

import config
from scheduler.closed_form import coefficients, cost_curve, k_ub
from scheduler.errors import ValidationError
from scheduler.model import SystemParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ThresholdResult:
    k_star: int
    cost_star: float
    evaluations: int
    avg_energy: float = float("nan")
    avg_age: float = float("nan")


def _argmin(params: SystemParams, ks: np.ndarray, beta: float) -> ThresholdResult:
    coeffs = coefficients(params, beta)
    lag, energy, age = cost_curve(params, ks, beta, coeffs)
    # np.argmin returns the first minimum; ks is ascending so ties go to the smallest k
    i = int(np.argmin(lag))
    return ThresholdResult(
        k_star=int(ks[i]), cost_star=float(lag[i]), evaluations=int(len(ks)),
        avg_energy=float(energy[i]), avg_age=float(age[i]),
    )


def optimal_threshold(params: SystemParams, beta: float) -> ThresholdResult:
    if beta < 0:
        raise ValidationError(f"beta must be >= 0, got {beta}")
    last = params.distortion.last_breakpoint
    ks = np.append(np.arange(1, last, dtype=np.int64), k_ub(params, beta))
    result = _argmin(params, ks, beta)
    logger.debug("beta=%.6g -> k*=%d (%d evaluations)", beta, result.k_star, result.evaluations)
    return result


def brute_force_threshold(params: SystemParams, beta: float, k_max: int = None) -> ThresholdResult:
    """Exhaustive scan of k = 1..k_max (reference oracle for optimal_threshold)"""
    if k_max is None:
        k_max = params.distortion.last_breakpoint + config.BRUTE_MARGIN
    if k_max < 1:
        raise ValidationError(f"k_max must be >= 1, got {k_max}")
    return _argmin(params, np.arange(1, k_max + 1, dtype=np.int64), beta)
