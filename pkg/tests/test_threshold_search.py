import numpy as np
import pytest

from conftest import constant_params, make_params, three_level_params, random_params, two_point
from scheduler.closed_form import avg_lagrangian_cost, constant_threshold
from scheduler.errors import ValidationError
from scheduler.threshold_search import brute_force_threshold, optimal_threshold


def _check_against_brute_force(rng, count):
    for _ in range(count):
        params = random_params(rng)
        beta = float(rng.uniform(0, 50))
        fast = optimal_threshold(params, beta)
        slow = brute_force_threshold(params, beta)
        assert fast.k_star == slow.k_star
        assert fast.evaluations <= params.distortion.last_breakpoint


def test_matches_brute_force(rng):
    _check_against_brute_force(rng, 100)


@pytest.mark.slow
def test_matches_brute_force_full(rng):
    _check_against_brute_force(rng, 500)


def test_cost_star_is_closed_form_cost(rng):
    for _ in range(20):
        params = random_params(rng)
        beta = float(rng.uniform(0, 50))
        res = optimal_threshold(params, beta)
        rep = avg_lagrangian_cost(params, res.k_star, beta)
        assert res.cost_star == pytest.approx(rep.lagrangian_cost, rel=1e-12)


def test_beta_zero_gives_one(rng):
    for _ in range(30):
        assert optimal_threshold(random_params(rng), 0.0).k_star == 1


def test_single_level_matches_constant_threshold(rng):
    for _ in range(100):
        W, p, beta = rng.uniform(0.01, 1.0), rng.uniform(0, 0.9), rng.uniform(0, 50)
        params = constant_params(W=W, p=p)
        res = optimal_threshold(params, beta)
        assert res.k_star == constant_threshold(beta, params.level_tails[0], p)
        assert res.evaluations == 1


def test_three_level_spec():
    params = three_level_params(p=0.5, q=0.6)
    fast = optimal_threshold(params, 25.0)
    assert fast.k_star == brute_force_threshold(params, 25.0, 10_000).k_star
    assert fast.evaluations == 50


def test_brute_force_single_candidate():
    res = brute_force_threshold(three_level_params(), 25.0, k_max=1)
    assert res.k_star == 1 and res.evaluations == 1


def test_brute_force_stable_in_k_max(rng):
    for _ in range(10):
        params = random_params(rng)
        beta = float(rng.uniform(0, 50))
        last = params.distortion.last_breakpoint
        a = brute_force_threshold(params, beta, last + 20_000).k_star
        b = brute_force_threshold(params, beta, last + 100_000).k_star
        assert a == b


def test_negative_beta_rejected():
    with pytest.raises(ValidationError):
        optimal_threshold(three_level_params(), -1.0)


def test_threshold_nondecreasing_in_beta(rng):
    betas = np.linspace(0, 50, 26)
    for _ in range(30):
        params = random_params(rng)
        ks = [optimal_threshold(params, b).k_star for b in betas]
        assert all(b >= a for a, b in zip(ks, ks[1:]))


# ---- parameter studies on the constant and three-level distortion functions ----

@pytest.mark.parametrize("beta", [5.0, 10.0, 20.0])
def test_threshold_increases_with_W(beta):
    ks = [optimal_threshold(make_params((1,), (5,), 10, 0.5, pmf=two_point(10, W)), beta).k_star
          for W in (0.03, 0.36, 0.83)]
    assert ks[0] <= ks[1] <= ks[2]


@pytest.mark.parametrize("W", [0.03, 0.36, 0.83])
def test_threshold_along_p(W):
    ps = np.linspace(0.1, 0.9, 9)
    ks = [optimal_threshold(make_params((1,), (5,), 10, float(p), pmf=two_point(10, W)), 10.0).k_star
          for p in ps]
    if 10.0 < 1.0 / W:
        assert ks == [1] * len(ps)
    else:
        assert all(b >= a for a, b in zip(ks, ks[1:]))


def test_three_level_threshold_grid():
    grid = np.round(np.linspace(0.1, 0.6, 6), 2)
    table = {}
    for beta in (5.0, 25.0, 45.0):
        for p in np.round(np.linspace(0.1, 0.9, 9), 2):
            row = [optimal_threshold(three_level_params(p=float(p), q=float(q)), beta).k_star for q in grid]
            assert all(b <= a for a, b in zip(row, row[1:])), (beta, p, row)
            table[beta, p] = row
    for p in np.round(np.linspace(0.1, 0.9, 9), 2):
        for i in range(len(grid)):
            assert table[5.0, p][i] <= table[25.0, p][i] <= table[45.0, p][i]
