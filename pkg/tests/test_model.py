import numpy as np
import pytest
from scipy.stats import binom

from conftest import DATA, make_params, three_level_params
from scheduler.errors import ValidationError
from scheduler.model import (DistortionSpec, MixturePolicy, State, SystemParams, ThresholdPolicy,
                             distortion_at, is_admissible, load_config, load_policy,
                             params_from_config, pmf_from_erasures, save_policy)

SPEC = DistortionSpec((1, 25, 50), (2, 5, 7), 8)


@pytest.mark.parametrize("q, expected", [
    ([0, 0], [0, 0, 1]),
    ([1, 1, 1], [1, 0, 0, 0]),
    ([0.5, 0.5], [0.25, 0.5, 0.25]),
])
def test_pmf_from_erasures_examples(q, expected):
    assert np.allclose(pmf_from_erasures(q), expected, atol=1e-15)


def test_pmf_sums_to_one(rng):
    for _ in range(50):
        q = rng.uniform(0, 1, size=int(rng.integers(1, 33)))
        assert abs(sum(pmf_from_erasures(q)) - 1.0) <= 1e-12


@pytest.mark.parametrize("M, q", [(1, 0.3), (8, 0.5), (12, 0.1), (20, 0.75)])
def test_homogeneous_pmf_is_binomial(M, q):
    ref = binom.pmf(np.arange(M + 1), M, 1 - q)
    assert np.allclose(pmf_from_erasures([q] * M), ref, rtol=0, atol=1e-12)


def test_pmf_rejects_bad_probability():
    with pytest.raises(ValidationError):
        pmf_from_erasures([0.2, 1.5])
    with pytest.raises(ValidationError):
        pmf_from_erasures([])


@pytest.mark.parametrize("age, level", [(5, 2), (24, 2), (25, 5), (49, 5), (50, 7), (10_000, 7)])
def test_distortion_at(age, level):
    assert distortion_at(SPEC, age) == level


def test_distortion_is_nondecreasing(rng):
    for _ in range(20):
        M = int(rng.integers(3, 12))
        L = int(rng.integers(1, 4))
        levels = np.sort(rng.choice(np.arange(1, M + 1), size=L, replace=False))
        bps = np.concatenate(([1], 1 + np.cumsum(rng.integers(1, 20, size=L - 1))))
        spec = DistortionSpec(tuple(bps), tuple(levels), M)
        values = [distortion_at(spec, a) for a in range(1, int(bps[-1]) + 30)]
        assert all(b >= a for a, b in zip(values, values[1:]))


def test_is_admissible_examples():
    assert is_admissible(SPEC, State(5, 5), 1)
    assert not is_admissible(SPEC, State(51, 5), 1)
    assert is_admissible(SPEC, State(51, 0), 0)
    for age in (1, 30, 60):
        for samples in range(9):
            assert is_admissible(SPEC, State(age, samples), 1) == (samples >= distortion_at(SPEC, age))


@pytest.mark.parametrize("bps, levels, M", [
    ((2, 5), (1, 2), 3),       # delta_1 must be 1
    ((1, 5, 5), (1, 2, 3), 3),  # not strictly increasing
    ((1, 5), (2, 2), 3),
    ((1, 5), (1, 4), 3),        # level above M
    ((1,), (1, 2), 3),
])
def test_distortion_spec_validation(bps, levels, M):
    with pytest.raises(ValidationError):
        DistortionSpec(bps, levels, M)


def test_params_validation():
    spec = DistortionSpec((1,), (1,), 2)
    with pytest.raises(ValidationError):
        SystemParams(p=1.0, pmf=(0.25, 0.5, 0.25), distortion=spec)
    with pytest.raises(ValidationError):
        SystemParams(p=0.5, pmf=(0.25, 0.5, 0.25), distortion=spec, e_max=0.0)
    with pytest.raises(ValidationError):
        SystemParams(p=0.5, pmf=(0.25, 0.5, 0.2), distortion=spec)
    with pytest.raises(ValidationError):
        SystemParams(p=0.5, pmf=(0.5, 0.5), distortion=spec)


def test_tail_probabilities():
    params = make_params((1,), (2,), 4, 0.5, pmf=[0.2] * 5)
    assert params.tail[0] == 1.0
    assert params.tail[2] == pytest.approx(0.6)
    assert np.all(np.diff(params.tail) <= 0)


def test_load_config_from_file():
    params, raw = load_config(DATA / "three_level.json")
    ref = three_level_params(p=0.3, q=0.5, e_max=0.1)
    assert params.distortion == ref.distortion
    assert np.allclose(params.pmf, ref.pmf)
    assert raw["beta"] == 25


def test_config_overrides_and_errors():
    cfg = {"M": 2, "p": 0.1, "sensors": {"q": 0.5}, "distortion": {"breakpoints": [1], "levels": [1]}}
    params = params_from_config(cfg, {"e_max": 0.3, "p": None})
    assert params.e_max == 0.3 and params.p == 0.1
    with pytest.raises(ValidationError):
        params_from_config({"M": 2, "p": 0.1, "distortion": cfg["distortion"]})
    with pytest.raises(ValidationError):
        params_from_config(dict(cfg, sensors={"q": [0.5]}))
    with pytest.raises(ValidationError):
        load_config("does/not/exist.json")


def test_policy_file(tmp_path):
    policy = MixturePolicy(ThresholdPolicy(12), ThresholdPolicy(13), 0.25, 1.5, 1.5000001)
    path = tmp_path / "out" / "policy.json"
    save_policy(path, policy)
    assert load_policy(path) == policy


def test_mixture_validation():
    with pytest.raises(ValidationError):
        MixturePolicy(ThresholdPolicy(1), ThresholdPolicy(2), 1.2, 0.0, 1.0)
    with pytest.raises(ValidationError):
        MixturePolicy(ThresholdPolicy(1), ThresholdPolicy(2), 0.5, 2.0, 1.0)
    with pytest.raises(ValidationError):
        ThresholdPolicy(0)


def test_policy_file_keeps_draw_probability(tmp_path):
    policy = MixturePolicy(ThresholdPolicy(1), ThresholdPolicy(2), 0.5, 0.9, 1.1, draw_prob=2.0 / 3.0)
    path = tmp_path / "policy.json"
    save_policy(path, policy)
    loaded = load_policy(path)
    assert loaded == policy and loaded.draw_prob == 2.0 / 3.0
    with pytest.raises(ValidationError):
        MixturePolicy(ThresholdPolicy(1), ThresholdPolicy(2), 0.5, 0.0, 1.0, draw_prob=1.5)
