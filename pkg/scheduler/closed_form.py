"""
closed_form.py - Closed-form cost of threshold policies

Features:
- Coefficient family F, B_l, w(i,j), J_l, I_l, O_l for a (params, beta) pair
- Average Lagrangian cost / energy / age of the threshold policy pi_k
- Vectorized cost curve over many thresholds (shared by every search)
- Tail-optimal threshold k_UB and the constant-distortion threshold
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np

from scheduler.errors import UnreachableLevel, ValidationError
from scheduler.model import SystemParams


class CostSource(Enum):
    CLOSED_FORM = "closed_form"
    CHAIN_ORACLE = "chain_oracle"
    SIMULATION = "simulation"
    RVI = "rvi"


@dataclass(frozen=True)
class CostReport:
    lagrangian_cost: float
    avg_energy: float
    avg_age: float
    threshold: int
    beta: float
    source: CostSource

    def consistent(self, tol: float = 1e-9) -> bool:
        """L = A + beta*E and the domain bounds on A and E"""
        scale = max(1.0, abs(self.lagrangian_cost))
        return (
            abs(self.lagrangian_cost - (self.avg_age + self.beta * self.avg_energy)) <= tol * scale
            and -tol <= self.avg_energy <= 1.0 + tol
            and self.avg_age >= 1.0 - tol * scale
        )


@dataclass(frozen=True)
class CoefficientSet:
    """Coefficients for one (params, beta); arrays are indexed by the 1-based level l.

    B, F_h, d (= 1 - B), P (= B_l^(delta_{l+1} - delta_l)) live at 1..L;
    J, I, G at 2..L; O at 2..L+1. Unused slots hold NaN.
    """

    beta: float
    F: np.ndarray
    F_h: np.ndarray
    B: np.ndarray
    d: np.ndarray
    P: np.ndarray
    J: np.ndarray
    I: np.ndarray
    O: np.ndarray
    G: np.ndarray
    breakpoints: np.ndarray

    @property
    def L(self) -> int:
        return len(self.breakpoints) - 2

    def w(self, i: int, j: int) -> float:
        """Product of per-interval powers P_v for v = i..j-1 (1 when i >= j)"""
        if i >= j:
            return 1.0
        return float(np.prod(self.P[i:j]))


def l_index(spec, k: int) -> int:
    """l_k = min{l <= L+1 : delta_l > k}, with delta_{L+1} = infinity"""
    if k < 1:
        raise ValidationError(f"threshold must be >= 1, got {k}")
    return int(np.searchsorted(np.asarray(spec.breakpoints), k, side="right")) + 1


def coefficients(params: SystemParams, beta: float) -> CoefficientSet:
    spec = params.distortion
    L = spec.L
    F_levels = params.level_tails
    for l, f in enumerate(F_levels, start=1):
        if f <= 0.0:
            raise UnreachableLevel(l, spec.levels[l - 1])

    nan = np.full(L + 2, np.nan)
    F_h, B, d, P = nan.copy(), nan.copy(), nan.copy(), nan.copy()
    F_h[1:L + 1] = F_levels
    d[1:L + 1] = (1.0 - params.p) * F_levels
    B[1:L + 1] = 1.0 - d[1:L + 1]

    # delta_1..delta_L at 1..L; slot L+1 (= infinity) is never read as a number
    delta = np.zeros(L + 2)
    delta[1:L + 1] = spec.breakpoints
    delta[L + 1] = np.inf
    for v in range(1, L):
        P[v] = B[v] ** (delta[v + 1] - delta[v])
    P[L] = 0.0

    J, I, O, G = nan.copy(), nan.copy(), nan.copy(), nan.copy()
    for l in range(2, L + 2):
        O[l] = 1.0 / d[l - 1] ** 2 + (-1.0 + beta * F_h[l - 1]) / d[l - 1]

    for l in range(2, L + 1):
        j_sum = i_sum = g_sum = 0.0
        w = 1.0
        for j in range(l, L + 1):
            last = j == L
            keep = 1.0 if last else 1.0 - P[j]
            i_sum += w * keep / d[j]
            g_sum += w * F_h[j] * keep / d[j]
            c_j = delta[j] - 1.0 + beta * F_h[j]
            if last:
                j_term = 1.0 / d[j] ** 2
            else:
                c_next = delta[j + 1] - 1.0 + beta * F_h[j]
                j_term = (1.0 - P[j] * (1.0 + c_next * d[j])) / d[j] ** 2
            j_sum += w * (j_term + c_j / d[j])
            w *= P[j]
        I[l] = -1.0 / d[l - 1] + i_sum
        J[l] = -1.0 / d[l - 1] ** 2 - (delta[l] - 1.0 + beta * F_h[l - 1]) / d[l - 1] + j_sum
        G[l] = g_sum

    return CoefficientSet(
        beta=float(beta), F=params.tail, F_h=F_h, B=B, d=d, P=P,
        J=J, I=I, O=O, G=G, breakpoints=delta,
    )


def cost_curve(params: SystemParams, ks, beta: float, coeffs: CoefficientSet = None
               ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(L, E, A) arrays for every threshold in ks, in one numpy pass."""
    if coeffs is None:
        coeffs = coefficients(params, beta)
    ks = np.atleast_1d(np.asarray(ks, dtype=np.int64))
    if ks.size and ks.min() < 1:
        raise ValidationError("thresholds must be >= 1")

    L = params.distortion.L
    k = ks.astype(float)
    lk = np.searchsorted(np.asarray(params.distortion.breakpoints), ks, side="right") + 1
    r = lk - 1
    inner = lk <= L

    d_r, B_r, F_r = coeffs.d[r], coeffs.B[r], coeffs.F_h[r]
    # delta_{l_k} is infinite outside `inner`; exponent 0 keeps the masked power finite
    expo = np.where(inner, coeffs.breakpoints[np.minimum(lk, L)] - k, 0.0)
    pw = np.where(inner, np.power(B_r, expo), 0.0)
    J = np.where(inner, coeffs.J[np.minimum(lk, L)], 0.0)
    I = np.where(inner, coeffs.I[np.minimum(lk, L)], 0.0)
    G = np.where(inner, coeffs.G[np.minimum(lk, L)], 0.0)

    den = k - 1.0 + 1.0 / d_r + I * pw
    num = 0.5 * k * k - 0.5 * k + k / d_r + J * pw + coeffs.O[lk]
    lag = num / den
    energy = (F_r / d_r + pw * (G - F_r / d_r)) / den
    age = lag - beta * energy
    return lag, energy, age


def avg_lagrangian_cost(params: SystemParams, k: int, beta: float,
                        coeffs: CoefficientSet = None) -> CostReport:
    lag, energy, age = cost_curve(params, [k], beta, coeffs)
    return CostReport(
        lagrangian_cost=float(lag[0]), avg_energy=float(energy[0]), avg_age=float(age[0]),
        threshold=int(k), beta=float(beta), source=CostSource.CLOSED_FORM,
    )


def avg_energy(params: SystemParams, k: int, coeffs: CoefficientSet = None) -> float:
    # energy does not depend on beta; any coefficient set of these params will do
    _, energy, _ = cost_curve(params, [k], 0.0 if coeffs is None else coeffs.beta, coeffs)
    return float(energy[0])


def tail_sigma(B: float, d: float, F: float, beta: float) -> float:
    """Positive root of (1-B) k^2 + (1+B) k - 2 beta F = 0, cancellation-free form"""
    b = 1.0 + B
    c = 2.0 * beta * F
    return 2.0 * c / (b + math.sqrt(b * b + 4.0 * c * d))


def tail_cost(B: float, F: float, k: int, beta: float) -> float:
    """Cost of pi_k when k >= delta_L (single geometric regime)"""
    d = 1.0 - B
    return d / (B + k * d) * (k * (k - 1) / 2.0 + (beta * F + k) / d + B / d ** 2)


def k_ub(params: SystemParams, beta: float) -> int:
    spec = params.distortion
    F_L = float(params.level_tails[-1])
    if F_L <= 0.0:
        raise UnreachableLevel(spec.L, spec.levels[-1])
    d = (1.0 - params.p) * F_L
    sigma = tail_sigma(1.0 - d, d, F_L, beta)
    y = max(0, math.ceil(sigma))
    return max(spec.last_breakpoint, y)


def constant_threshold(beta: float, W: float, p: float) -> int:
    """Optimal threshold for a constant distortion function with F(h) = W"""
    if not 0.0 < W <= 1.0:
        raise ValidationError(f"W must be in (0, 1], got {W}")
    if not 0.0 <= p < 1.0:
        raise ValidationError(f"p must be in [0, 1), got {p}")
    d = (1.0 - p) * W
    sigma = tail_sigma(1.0 - d, d, W, beta)
    return max(1, math.ceil(sigma))


def monotonicity_probe(beta: float, W: float, p: float, axis: str,
                       grid: Sequence[float]) -> List[int]:
    """constant_threshold along a grid on one of the axes p, W, beta"""
    if axis not in ("p", "W", "beta"):
        raise ValidationError(f"unknown axis {axis!r}")
    out = []
    for value in grid:
        args = {"beta": beta, "W": W, "p": p}
        args[axis] = value
        out.append(constant_threshold(**args))
    return out
