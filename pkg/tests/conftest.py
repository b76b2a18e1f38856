# -*- coding: utf-8 -*-
import json
import sys
from pathlib import Path

import numpy as np
import pytest

# Ensure project root is on sys.path so `scheduler` / `oracles` / `config` import
ROOT = Path(__file__).parent.parent.resolve()
sys.path.insert(0, str(ROOT))

from scheduler.model import DistortionSpec, SystemParams, pmf_from_erasures  # noqa: E402

DATA = ROOT / "data"


def make_params(breakpoints, levels, M, p, q=None, pmf=None, e_max=1.0):
    spec = DistortionSpec(tuple(breakpoints), tuple(levels), M)
    if pmf is None:
        qs = q if isinstance(q, (list, tuple)) else [q] * M
        pmf = pmf_from_erasures(qs)
    return SystemParams(p=p, pmf=tuple(pmf), distortion=spec, e_max=e_max)


def two_point(M, W):
    """pmf with F(h) = W for every h in [1, M]"""
    pmf = np.zeros(M + 1)
    pmf[0], pmf[-1] = 1.0 - W, W
    return tuple(pmf)


def constant_params(W, p, M=1, h=1, e_max=1.0):
    return make_params((1,), (h,), M, p, pmf=two_point(M, W), e_max=e_max)


def three_level_params(p=0.3, q=0.5, e_max=1.0):
    return make_params((1, 25, 50), (2, 5, 7), 8, p, q=q, e_max=e_max)


def random_params(rng, max_levels=4, max_sensors=12, max_gap=30, p_range=(0.0, 0.9),
                  q_range=(0.05, 0.6), min_tail=1e-3, e_max=1.0):
    """Random instance with min_l F(h_l) >= min_tail"""
    while True:
        L = int(rng.integers(1, max_levels + 1))
        M = int(rng.integers(max(L, 1), max_sensors + 1))
        levels = np.sort(rng.choice(np.arange(1, M + 1), size=L, replace=False))
        gaps = rng.integers(1, max_gap + 1, size=L - 1)
        breakpoints = np.concatenate(([1], 1 + np.cumsum(gaps))).astype(int)
        q = list(rng.uniform(*q_range, size=M))
        p = float(rng.uniform(*p_range))
        params = make_params(breakpoints, levels, M, p, q=q, e_max=e_max)
        if params.level_tails.min() >= min_tail:
            return params


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def three_level():
    return three_level_params()


@pytest.fixture
def trivial_config(tmp_path):
    """p = 0, one sensor that always delivers, D = 1 everywhere"""
    path = tmp_path / "trivial.json"
    path.write_text(json.dumps({
        "M": 1, "p": 0.0, "e_max": 1.0,
        "sensors": {"pmf": [0.0, 1.0]},
        "distortion": {"breakpoints": [1], "levels": [1]},
    }), encoding="utf-8")
    return path
