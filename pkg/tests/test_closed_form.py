import numpy as np
import pytest

from conftest import constant_params, make_params, three_level_params, random_params
from oracles.chain_oracle import oracle_cost
from scheduler.closed_form import (CostSource, avg_energy, avg_lagrangian_cost, coefficients,
                                   constant_threshold, cost_curve, k_ub, l_index,
                                   monotonicity_probe, tail_cost)
from scheduler.errors import UnreachableLevel, ValidationError
from scheduler.model import DistortionSpec

SPEC = DistortionSpec((1, 25, 50), (2, 5, 7), 8)


@pytest.mark.parametrize("k, l", [(1, 2), (24, 2), (25, 3), (30, 3), (49, 3), (50, 4), (60, 4)])
def test_l_index(k, l):
    assert l_index(SPEC, k) == l


def test_l_index_rejects_zero():
    with pytest.raises(ValidationError):
        l_index(SPEC, 0)


def test_coefficients_uniform_pmf():
    params = make_params((1,), (2,), 4, 0.5, pmf=[0.2] * 5)
    c = coefficients(params, 1.0)
    assert c.F_h[1] == pytest.approx(0.6)
    assert c.B[1] == pytest.approx(0.7)
    assert c.w(1, 1) == 1.0


def test_coefficient_invariants(rng):
    for _ in range(30):
        params = random_params(rng)
        c = coefficients(params, float(rng.uniform(0, 50)))
        L = params.distortion.L
        assert c.F[0] == 1.0 and np.all(np.diff(c.F) <= 0)
        B = c.B[1:L + 1]
        assert np.all((B >= 0) & (B < 1)) and np.all(np.diff(B) >= 0)
        for i in range(1, L + 1):
            for j in range(i, L + 1):
                assert 0.0 < c.w(i, j) <= 1.0 or c.w(i, j) == 0.0


def test_unreachable_level():
    params = make_params((1, 10), (1, 2), 2, 0.2, pmf=[0.5, 0.5, 0.0])
    with pytest.raises(UnreachableLevel) as err:
        coefficients(params, 1.0)
    assert err.value.level == 2
    with pytest.raises(UnreachableLevel):
        k_ub(params, 1.0)


def test_single_level_k1_hand_value():
    rep = avg_lagrangian_cost(constant_params(W=0.5, p=0.5), 1, 4.0)
    assert rep.lagrangian_cost == pytest.approx(6.0, rel=1e-12)
    assert rep.avg_energy == pytest.approx(0.5, rel=1e-12)
    assert rep.source is CostSource.CLOSED_FORM


def test_always_transmit_always_succeed():
    rep = avg_lagrangian_cost(constant_params(W=1.0, p=0.0), 1, 0.0)
    assert rep.lagrangian_cost == pytest.approx(1.0, rel=1e-12)


def test_deterministic_three_cycle_energy():
    params = constant_params(W=1.0, p=0.0)
    assert avg_energy(params, 3) == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert avg_lagrangian_cost(params, 3, 0.0).avg_age == pytest.approx(2.0, rel=1e-12)


def test_energy_decreases_to_zero_single_level():
    params = constant_params(W=0.4, p=0.3)
    _, energy, _ = cost_curve(params, np.arange(1, 10_001), 0.0)
    assert np.all(np.diff(energy) <= 1e-15)
    assert energy[-1] < 1e-3


def test_decomposition_and_bounds(rng):
    for _ in range(50):
        params = random_params(rng)
        beta = float(rng.uniform(0, 50))
        k = int(rng.integers(1, 2 * params.distortion.last_breakpoint + 1))
        rep = avg_lagrangian_cost(params, k, beta)
        assert rep.consistent()


def test_matches_chain_oracle(rng):
    for _ in range(200):
        params = random_params(rng)
        beta = float(rng.uniform(0, 50))
        k = int(rng.integers(1, 2 * params.distortion.last_breakpoint + 1))
        closed = avg_lagrangian_cost(params, k, beta)
        oracle = oracle_cost(params, k, beta)
        assert closed.lagrangian_cost == pytest.approx(oracle.lagrangian_cost, rel=1e-8)
        assert closed.avg_energy == pytest.approx(oracle.avg_energy, rel=1e-8)


def test_three_level_matches_oracle():
    params = three_level_params(p=0.3, q=0.5)
    closed = avg_lagrangian_cost(params, 10, 25.0)
    oracle = oracle_cost(params, 10, 25.0)
    assert closed.lagrangian_cost == pytest.approx(oracle.lagrangian_cost, rel=1e-8)


def test_energy_nonincreasing_in_threshold(rng):
    for _ in range(50):
        params = random_params(rng)
        ks = np.arange(1, 3 * params.distortion.last_breakpoint + 50)
        _, energy, _ = cost_curve(params, ks, 0.0)
        assert np.all(np.diff(energy) <= 1e-10 * energy[:-1])


def test_tail_cost_matches_closed_form(rng):
    for _ in range(30):
        params = random_params(rng)
        beta = float(rng.uniform(0, 50))
        c = coefficients(params, beta)
        L = params.distortion.L
        ks = np.arange(params.distortion.last_breakpoint, params.distortion.last_breakpoint + 200)
        lag, _, _ = cost_curve(params, ks, beta, c)
        tail = [tail_cost(c.B[L], c.F_h[L], int(k), beta) for k in ks]
        assert np.allclose(lag, tail, rtol=1e-9, atol=0)


def test_tail_is_unimodal(rng):
    for _ in range(30):
        params = random_params(rng)
        beta = float(rng.uniform(0, 50))
        last = params.distortion.last_breakpoint
        lag, _, _ = cost_curve(params, np.arange(last, last + 2000), beta)
        signs = np.sign(np.diff(lag))
        signs = signs[signs != 0]
        # at most one switch, from decreasing to increasing
        assert np.sum(np.diff(signs) != 0) <= 1
        if signs.size and np.any(np.diff(signs) != 0):
            assert signs[0] < 0


def test_k_ub_beta_zero():
    params = three_level_params()
    assert k_ub(params, 0.0) == 50


def test_k_ub_is_tail_argmin(rng):
    for _ in range(100):
        params = random_params(rng)
        beta = float(rng.uniform(0, 50))
        last = params.distortion.last_breakpoint
        ks = np.arange(last, last + 100_001)
        lag, _, _ = cost_curve(params, ks, beta)
        assert k_ub(params, beta) == int(ks[np.argmin(lag)])


def test_constant_threshold_examples():
    assert constant_threshold(0.0, 0.7, 0.3) == 1
    assert constant_threshold(4.5, 1.0, 0.0) == 3
    assert constant_threshold(1.9, 0.5, 0.8) == 1


def test_constant_threshold_equals_k_ub_single_level(rng):
    for _ in range(100):
        W, p, beta = rng.uniform(0.01, 1.0), rng.uniform(0, 0.9), rng.uniform(0, 50)
        params = constant_params(W=W, p=p)
        assert constant_threshold(beta, params.level_tails[0], p) == k_ub(params, beta)


def test_constant_threshold_is_brute_force_argmin(rng):
    for _ in range(100):
        W, p, beta = rng.uniform(0.01, 1.0), rng.uniform(0, 0.9), rng.uniform(0, 50)
        params = constant_params(W=W, p=p)
        lag, _, _ = cost_curve(params, np.arange(1, 20_001), beta)
        k = constant_threshold(beta, params.level_tails[0], p)
        assert k == int(np.argmin(lag)) + 1
        if beta < 1.0 / W:
            assert k == 1


def test_constant_threshold_validation():
    with pytest.raises(ValidationError):
        constant_threshold(1.0, 0.0, 0.5)
    with pytest.raises(ValidationError):
        constant_threshold(1.0, 0.5, 1.0)


def test_monotonicity_probe_examples():
    p_grid = np.linspace(0.1, 0.9, 9)
    seq = monotonicity_probe(10.0, 0.83, 0.5, "p", p_grid)
    assert all(b >= a for a, b in zip(seq, seq[1:]))
    assert monotonicity_probe(10.0, 0.03, 0.5, "p", p_grid) == [1] * 9
    seq = monotonicity_probe(20.0, 0.5, 0.5, "W", np.linspace(0.05, 1.0, 20))
    assert all(b >= a for a, b in zip(seq, seq[1:]))
    with pytest.raises(ValidationError):
        monotonicity_probe(1.0, 0.5, 0.5, "q", [0.1])


def test_monotonicity_properties(rng):
    p_grid = np.linspace(0.0, 0.95, 20)
    for _ in range(50):
        W = float(rng.uniform(0.01, 1.0))
        beta_hi = float(rng.uniform(1.0 / W, 1.0 / W + 60))
        beta_lo = float(rng.uniform(0, 1.0 / W))
        seq = monotonicity_probe(beta_hi, W, 0.5, "p", p_grid)
        assert all(b >= a for a, b in zip(seq, seq[1:]))
        assert monotonicity_probe(beta_lo, W, 0.5, "p", p_grid) == [1] * len(p_grid)

        p = float(rng.uniform(0, 0.9))
        seq = monotonicity_probe(float(rng.uniform(0, 60)), W, p, "W", np.linspace(0.01, 1.0, 25))
        assert all(b >= a for a, b in zip(seq, seq[1:]))
        seq = monotonicity_probe(0.0, W, p, "beta", np.linspace(0, 80, 25))
        assert all(b >= a for a, b in zip(seq, seq[1:]))
