"""
model.py - System model shared by every solver and oracle

Features:
- Distortion function D(.) as breakpoints/levels (last interval unbounded)
- System parameters: erasure p, sample-count pmf, energy budget
- Threshold and mixture policy representations
- JSON configuration loading / policy saving (UTF-8)
"""

import bisect
import json
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from scheduler.errors import ValidationError

PMF_TOL = 1e-12


@dataclass(frozen=True)
class DistortionSpec:
    """Piecewise-constant D(.): D(age) = levels[l] on [breakpoints[l], breakpoints[l+1])"""

    breakpoints: Tuple[int, ...]
    levels: Tuple[int, ...]
    sensor_count: int

    def __post_init__(self):
        bps = tuple(int(b) for b in self.breakpoints)
        lvs = tuple(int(h) for h in self.levels)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "levels", lvs)
        M = int(self.sensor_count)
        object.__setattr__(self, "sensor_count", M)

        if M < 1:
            raise ValidationError(f"sensor count M must be >= 1, got {M}")
        if not bps or len(bps) != len(lvs):
            raise ValidationError("breakpoints and levels must be non-empty and of equal length")
        if bps[0] != 1:
            raise ValidationError(f"first breakpoint must be 1, got {bps[0]}")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ValidationError(f"breakpoints must be strictly increasing: {list(bps)}")
        if any(h2 <= h1 for h1, h2 in zip(lvs, lvs[1:])):
            raise ValidationError(f"levels must be strictly increasing: {list(lvs)}")
        if lvs[0] < 1 or lvs[-1] > M:
            raise ValidationError(f"levels must lie in [1, M={M}]: {list(lvs)}")

    @property
    def L(self) -> int:
        return len(self.breakpoints)

    @property
    def last_breakpoint(self) -> int:
        return self.breakpoints[-1]

    def interval_of(self, age: int) -> int:
        """0-based interval index containing age"""
        return bisect.bisect_right(self.breakpoints, age) - 1


@dataclass(frozen=True)
class SystemParams:
    p: float
    pmf: Tuple[float, ...]
    distortion: DistortionSpec
    e_max: float = 1.0

    def __post_init__(self):
        pmf = tuple(float(x) for x in self.pmf)
        object.__setattr__(self, "pmf", pmf)
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "e_max", float(self.e_max))

        if not 0.0 <= self.p < 1.0:
            raise ValidationError(f"erasure probability p must be in [0, 1), got {self.p}")
        if not 0.0 < self.e_max <= 1.0:
            raise ValidationError(f"energy budget e_max must be in (0, 1], got {self.e_max}")
        if len(pmf) != self.distortion.sensor_count + 1:
            raise ValidationError(
                f"pmf has {len(pmf)} entries, expected M+1 = {self.distortion.sensor_count + 1}"
            )
        if any(x < 0 or not np.isfinite(x) for x in pmf):
            raise ValidationError("pmf entries must be finite and non-negative")
        total = float(np.sum(pmf))
        if abs(total - 1.0) > PMF_TOL:
            raise ValidationError(f"pmf must sum to 1 (got {total!r})")

    @property
    def M(self) -> int:
        return self.distortion.sensor_count

    @cached_property
    def tail(self) -> np.ndarray:
        """F(r) = P(Lambda >= r) for r = 0..M"""
        F = np.cumsum(np.asarray(self.pmf)[::-1])[::-1].copy()
        F[0] = 1.0
        return np.clip(F, 0.0, 1.0)

    @cached_property
    def level_tails(self) -> np.ndarray:
        """F(h_l) for l = 1..L"""
        return self.tail[list(self.distortion.levels)]

    def replace(self, **changes) -> "SystemParams":
        fields = {"p": self.p, "pmf": self.pmf, "distortion": self.distortion, "e_max": self.e_max}
        fields.update(changes)
        return SystemParams(**fields)


@dataclass(frozen=True)
class State:
    age: int
    samples: int

    def __post_init__(self):
        if self.age < 1:
            raise ValidationError(f"age must be >= 1, got {self.age}")


@dataclass(frozen=True)
class ThresholdPolicy:
    """Transmit iff age >= threshold and the distortion requirement holds"""

    threshold: int

    def __post_init__(self):
        if int(self.threshold) < 1:
            raise ValidationError(f"threshold must be >= 1, got {self.threshold}")
        object.__setattr__(self, "threshold", int(self.threshold))


@dataclass(frozen=True)
class MixturePolicy:
    """Randomizes between two threshold policies, re-drawn after each successful delivery.

    mix_prob is the long-run share of slots spent under low_policy. draw_prob is the
    per-delivery probability of picking low_policy that realizes that share; it depends
    on both policies' mean cycle lengths, so None means "derive it from the params".
    """

    low_policy: ThresholdPolicy
    high_policy: ThresholdPolicy
    mix_prob: float
    beta_minus: float
    beta_plus: float
    draw_prob: Optional[float] = None
    extra: Dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.mix_prob <= 1.0:
            raise ValidationError(f"mix_prob must be in [0, 1], got {self.mix_prob}")
        if self.draw_prob is not None and not 0.0 <= self.draw_prob <= 1.0:
            raise ValidationError(f"draw_prob must be in [0, 1], got {self.draw_prob}")
        if self.beta_minus > self.beta_plus:
            raise ValidationError("beta_minus must not exceed beta_plus")

    def to_dict(self) -> Dict:
        return {
            "k_minus": self.low_policy.threshold,
            "k_plus": self.high_policy.threshold,
            "mu": self.mix_prob,
            "mu_draw": self.draw_prob,
            "beta_minus": self.beta_minus,
            "beta_plus": self.beta_plus,
            **self.extra,
        }

    @classmethod
    def from_dict(cls, d: Dict) -> "MixturePolicy":
        draw = d.get("mu_draw")
        return cls(
            low_policy=ThresholdPolicy(int(d["k_minus"])),
            high_policy=ThresholdPolicy(int(d["k_plus"])),
            mix_prob=float(d["mu"]),
            beta_minus=float(d["beta_minus"]),
            beta_plus=float(d["beta_plus"]),
            draw_prob=None if draw is None else float(draw),
        )


# ===================== OPERATIONS =====================

def pmf_from_erasures(q: Sequence[float]) -> Tuple[float, ...]:
    """Poisson-binomial pmf of the number of sensors whose sample reaches the AP.

    Convolves one sensor at a time: sensor m delivers with probability 1 - q_m.
    """
    q = [float(x) for x in q]
    if not q:
        raise ValidationError("at least one sensor erasure probability is required")
    if any(not 0.0 <= x <= 1.0 for x in q):
        raise ValidationError(f"sensor erasure probabilities must be in [0, 1]: {q}")

    pmf = np.array([1.0])
    for qm in q:
        nxt = np.zeros(len(pmf) + 1)
        nxt[:-1] = pmf * qm
        nxt[1:] += pmf * (1.0 - qm)
        pmf = nxt
    return tuple(float(x) for x in pmf)


def distortion_at(spec: DistortionSpec, age: int) -> int:
    """D(age) = h_l for age in [delta_l, delta_{l+1})"""
    if age < 1:
        raise ValidationError(f"age must be >= 1, got {age}")
    return spec.levels[spec.interval_of(age)]


def distortion_levels(spec: DistortionSpec, ages: np.ndarray) -> np.ndarray:
    """Vectorized D(.) over an array of ages"""
    idx = np.searchsorted(np.asarray(spec.breakpoints), ages, side="right") - 1
    return np.asarray(spec.levels)[idx]


def is_admissible(spec: DistortionSpec, state: State, action: int) -> bool:
    """Suspension is always allowed; transmission needs Lambda >= D(age)"""
    if action == 0:
        return True
    return state.samples >= distortion_at(spec, state.age)


# ===================== CONFIG I/O =====================

def _load_json(filepath: Union[str, Path]) -> Dict:
    """Load a JSON config file (UTF-8)"""
    try:
        with open(filepath, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {filepath}")
    except json.JSONDecodeError as e:
        raise ValidationError(f"config file {filepath} is not valid JSON: {e}")


def _save_json(filepath: Union[str, Path], data) -> None:
    """Save data to a JSON file (UTF-8, indented)"""
    os.makedirs(os.path.dirname(os.path.abspath(filepath)), exist_ok=True)
    with open(filepath, "w", encoding="utf-8") as f:
        json.dump(data, f, ensure_ascii=False, indent=2)


def params_from_config(cfg: Dict, overrides: Optional[Dict] = None) -> SystemParams:
    """Build SystemParams from the JSON schema; non-None overrides win"""
    cfg = dict(cfg)
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg[key] = value

    try:
        M = int(cfg["M"])
        dist = cfg["distortion"]
        sensors = cfg["sensors"]
        p = cfg["p"]
    except KeyError as e:
        raise ValidationError(f"config is missing required field {e}")
    except (TypeError, ValueError) as e:
        raise ValidationError(f"bad config field: {e}")

    spec = DistortionSpec(tuple(dist["breakpoints"]), tuple(dist["levels"]), M)
    if "pmf" in sensors:
        pmf = tuple(sensors["pmf"])
    elif "q" in sensors:
        q = sensors["q"]
        if not isinstance(q, list):
            q = [q] * M
        if len(q) != M:
            raise ValidationError(f"sensors.q has {len(q)} entries, expected M = {M}")
        pmf = pmf_from_erasures(q)
    else:
        raise ValidationError('sensors must contain either "q" or "pmf"')

    return SystemParams(p=p, pmf=pmf, distortion=spec, e_max=cfg.get("e_max", 1.0))


def load_config(path: Union[str, Path], overrides: Optional[Dict] = None) -> Tuple[SystemParams, Dict]:
    """Read a config file; returns the params and the raw dict (for extra keys)"""
    raw = _load_json(path)
    return params_from_config(raw, overrides), raw


def save_policy(path: Union[str, Path], policy: MixturePolicy) -> None:
    _save_json(path, policy.to_dict())


def load_policy(path: Union[str, Path]) -> MixturePolicy:
    return MixturePolicy.from_dict(_load_json(path))
