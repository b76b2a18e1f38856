"""
mdp_oracle.py - Value-iteration solvers on a truncated (age, samples) state space

Features:
- Truncated MDP: ages 1..X (age + 1 saturates at X), samples 0..M
- Discounted value iteration from V_0 = 0 with the Q-tables exposed
- Relative value iteration for the average-cost problem, reference state (1, M)
- Threshold extraction / structure verdict for any policy table
"""

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

import config
from scheduler.closed_form import k_ub
from scheduler.errors import NonConvergence, ValidationError
from scheduler.model import DistortionSpec, State, SystemParams, distortion_levels

logger = logging.getLogger(__name__)

# aperiodicity transform: stay put with probability 1 - TAU (same gain, same optimal policies)
TAU = 0.5
PROGRESS_EVERY = 1000


def default_cap(params: SystemParams, beta: float) -> int:
    last = params.distortion.last_breakpoint
    return max(config.CAP_FACTOR * last, 2 * k_ub(params, beta))


@dataclass(frozen=True)
class TruncatedMdp:
    params: SystemParams
    beta: float
    age_cap: int

    def __post_init__(self):
        last = self.params.distortion.last_breakpoint
        if self.age_cap < 4 * last:
            raise ValidationError(f"age cap {self.age_cap} is below 4 * delta_L = {4 * last}")
        if self.beta < 0:
            raise ValidationError(f"beta must be >= 0, got {self.beta}")

    @classmethod
    def build(cls, params: SystemParams, beta: float, age_cap: int = None) -> "TruncatedMdp":
        return cls(params, float(beta), default_cap(params, beta) if age_cap is None else int(age_cap))

    @property
    def ages(self) -> np.ndarray:
        return np.arange(1, self.age_cap + 1)

    @property
    def admissible(self) -> np.ndarray:
        """(X, M+1) mask: transmitting allowed iff samples >= D(age)"""
        need = distortion_levels(self.params.distortion, self.ages)
        return np.arange(self.params.M + 1)[None, :] >= need[:, None]

    @property
    def next_age(self) -> np.ndarray:
        """0-based index of min(age + 1, X)"""
        return np.minimum(np.arange(1, self.age_cap + 1), self.age_cap - 1)

    def q_tables(self, V: np.ndarray, alpha: float = 1.0):
        """(Q_suspend, Q_transmit) for one Bellman sweep; inadmissible transmits are +inf"""
        p = self.params.p
        ev = V @ np.asarray(self.params.pmf)
        ages = self.ages.astype(float)
        stay = ev[self.next_age]
        q0 = ages + alpha * stay
        q1 = ages + self.beta + alpha * ((1.0 - p) * ev[0] + p * stay)
        shape = (self.age_cap, self.params.M + 1)
        q0 = np.broadcast_to(q0[:, None], shape)
        q1 = np.where(self.admissible, q1[:, None], np.inf)
        return q0, q1


@dataclass(frozen=True)
class ValueFunction:
    table: np.ndarray
    alpha: Optional[float]

    @property
    def average_cost(self) -> bool:
        return self.alpha is None

    def nondecreasing_in_age(self, tol: float = 1e-9) -> bool:
        return bool(np.all(np.diff(self.table, axis=0) >= -tol))

    def nonincreasing_in_samples(self, tol: float = 1e-9) -> bool:
        return bool(np.all(np.diff(self.table, axis=1) <= tol))


@dataclass(frozen=True)
class DiscountedSolution:
    values: ValueFunction
    policy: np.ndarray
    q_suspend: np.ndarray
    q_transmit: np.ndarray
    iterations: int


@dataclass(frozen=True)
class RviSolution:
    gain: float
    bias: ValueFunction
    policy: np.ndarray
    iterations: int
    span: float


@dataclass(frozen=True)
class NotThresholdStructured:
    """first: a transmitting state at the smallest transmit age; second: the state breaking the pattern"""

    first: State
    second: State

    def __str__(self):
        return (f"not threshold-structured: transmits at (age={self.first.age}, samples={self.first.samples}) "
                f"but suspends at admissible (age={self.second.age}, samples={self.second.samples})")


@dataclass(frozen=True)
class TruncationCheck:
    cap: int
    gain: float
    doubled_gain: float

    @property
    def difference(self) -> float:
        return abs(self.doubled_gain - self.gain)


def _ulp_floor(table: np.ndarray) -> float:
    """Smallest change still resolvable at the table's magnitude"""
    return 16.0 * np.finfo(float).eps * float(np.max(np.abs(table)))


def _greedy(q0: np.ndarray, q1: np.ndarray) -> np.ndarray:
    # ties go to suspension
    return q1 < q0


def discounted_vi(mdp: TruncatedMdp, alpha: float, tol: float = None,
                  max_iter: int = None) -> DiscountedSolution:
    tol = config.ORACLE_TOL if tol is None else tol
    max_iter = config.RVI_MAX_ITER if max_iter is None else max_iter
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must be in (0, 1), got {alpha}")
    if tol <= 0:
        raise ValidationError(f"tol must be > 0, got {tol}")

    stop = tol * (1.0 - alpha) / (2.0 * alpha)
    V = np.zeros((mdp.age_cap, mdp.params.M + 1))
    diff = np.inf
    for it in range(1, max_iter + 1):
        q0, q1 = mdp.q_tables(V, alpha)
        V_new = np.minimum(q0, q1)
        diff = float(np.max(np.abs(V_new - V)))
        V = V_new
        if diff <= max(stop, _ulp_floor(V)):
            q0, q1 = mdp.q_tables(V, alpha)
            return DiscountedSolution(
                values=ValueFunction(V, alpha), policy=_greedy(q0, q1),
                q_suspend=np.array(q0), q_transmit=q1, iterations=it,
            )
    raise NonConvergence(max_iter, diff)


def rvi(mdp: TruncatedMdp, tol: float = None, max_iter: int = None) -> RviSolution:
    tol = config.ORACLE_TOL if tol is None else tol
    max_iter = config.RVI_MAX_ITER if max_iter is None else max_iter
    if tol <= 0:
        raise ValidationError(f"tol must be > 0, got {tol}")

    ref = (0, mdp.params.M)
    h = np.zeros((mdp.age_cap, mdp.params.M + 1))
    span = np.inf
    for it in range(1, max_iter + 1):
        q0, q1 = mdp.q_tables(h)
        Th = (1.0 - TAU) * h + TAU * np.minimum(q0, q1)
        delta = Th - h
        span = float(np.max(delta) - np.min(delta))
        if it % PROGRESS_EVERY == 0:
            logger.debug("rvi sweep %d: span %.3e", it, span)
        if span <= max(tol, _ulp_floor(h)):
            gain = 0.5 * (np.max(delta) + np.min(delta)) / TAU
            h = Th - Th[ref]
            q0, q1 = mdp.q_tables(h)
            return RviSolution(
                gain=float(gain), bias=ValueFunction(h, None), policy=_greedy(q0, q1),
                iterations=it, span=span,
            )
        h = Th - Th[ref]
    raise NonConvergence(max_iter, span)


def extract_threshold(policy: np.ndarray, spec: DistortionSpec) -> Union[int, NotThresholdStructured]:
    """Common minimal transmit age k if the policy is pi_k on admissible states; X+1 if it never transmits"""
    X = policy.shape[0]
    ages = np.arange(1, X + 1)
    admissible = np.arange(policy.shape[1])[None, :] >= distortion_levels(spec, ages)[:, None]
    transmit = policy & admissible

    hits = np.argwhere(transmit)
    if hits.size == 0:
        return X + 1
    first_row = int(hits[:, 0].min())
    k = first_row + 1
    witness = State(k, int(hits[hits[:, 0] == first_row][0, 1]))

    wrong = admissible & (ages[:, None] >= k) & ~transmit
    for samples in range(policy.shape[1]):
        rows = np.flatnonzero(wrong[:, samples])
        if rows.size:
            return NotThresholdStructured(witness, State(int(rows[0]) + 1, samples))
    return k


def truncation_check(params: SystemParams, beta: float, cap: int = None,
                     tol: float = None) -> TruncationCheck:
    mdp = TruncatedMdp.build(params, beta, cap)
    base = rvi(mdp, tol)
    doubled = rvi(TruncatedMdp(params, mdp.beta, 2 * mdp.age_cap), tol)
    return TruncationCheck(cap=mdp.age_cap, gain=base.gain, doubled_gain=doubled.gain)
