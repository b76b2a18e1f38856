# file: app.py
"""Command-line entry point: threshold, solve, sweep, simulate, oracle, validate.

Settings precedence: command-line flag > JSON config > environment (.env) > default.
"""

import argparse
import logging
import os
import sys

import numpy as np

import config
from oracles.chain_oracle import greedy_simulate_many, simulate_many
from oracles.mdp_oracle import (NotThresholdStructured, TruncatedMdp, discounted_vi,
                                extract_threshold, rvi)
from scheduler.closed_form import avg_lagrangian_cost, coefficients
from scheduler.errors import SchedulerError, ValidationError
from scheduler.lagrange import bisect_with_trace, mixture_report
from scheduler.model import ThresholdPolicy, load_config, load_policy, save_policy
from scheduler.sweep import AXES, SOLVERS, ExperimentSpec, cmd_sweep, parse_grid
from scheduler.threshold_search import optimal_threshold

logger = logging.getLogger("app")


def fmt(x) -> str:
    return f"{x:.12g}"


def _pick(flag, raw: dict, key: str, default):
    if flag is not None:
        return flag
    if raw.get(key) is not None:
        return raw[key]
    return default


def _load(args):
    params, raw = load_config(args.config, {"e_max": getattr(args, "e_max", None)})
    return params, raw


def _beta(args, raw) -> float:
    beta = _pick(args.beta, raw, "beta", None)
    if beta is None:
        raise ValidationError("beta is required (--beta or \"beta\" in the config)")
    return float(beta)


# ===================== COMMANDS =====================

def cmd_threshold(args) -> int:
    params, raw = _load(args)
    beta = _beta(args, raw)
    res = optimal_threshold(params, beta)
    rep = avg_lagrangian_cost(params, res.k_star, beta)
    print(f"k_star          = {res.k_star}")
    print(f"lagrangian_cost = {fmt(rep.lagrangian_cost)}")
    print(f"avg_energy      = {fmt(rep.avg_energy)}")
    print(f"avg_age         = {fmt(rep.avg_age)}")
    print(f"evaluations     = {res.evaluations}")
    return 0


def cmd_solve(args) -> int:
    params, raw = _load(args)
    epsilon = float(_pick(args.epsilon, raw, "epsilon", config.EPSILON))
    policy, trace = bisect_with_trace(params, epsilon)
    rep = mixture_report(params, policy)
    print(f"beta_minus = {fmt(policy.beta_minus)}")
    print(f"beta_plus  = {fmt(policy.beta_plus)}")
    print(f"k_minus    = {policy.low_policy.threshold}")
    print(f"k_plus     = {policy.high_policy.threshold}")
    print(f"mu         = {fmt(policy.mix_prob)}")
    print(f"mu_draw    = {fmt(policy.draw_prob)}")
    print(f"steps      = {len(trace.iterations)}")
    print(f"predicted_avg_age    = {fmt(rep.avg_age)}")
    print(f"predicted_avg_energy = {fmt(rep.avg_energy)}")
    out = args.out or os.path.join(config.DATA_DIR, "policy.json")
    save_policy(out, policy)
    print(f"✅ policy written to {out}")
    return 0


def cmd_sweep_cli(args) -> int:
    params, raw = _load(args)
    spec = ExperimentSpec(
        params=params, axis=args.axis, grid=parse_grid(args.grid), solver=args.solver,
        out=args.out,
        beta=float(_pick(args.beta, raw, "beta", 0.0)),
        epsilon=float(_pick(args.epsilon, raw, "epsilon", config.EPSILON)),
        horizon=int(_pick(args.horizon, raw, "horizon", config.HORIZON)),
        seeds=int(_pick(args.seeds, raw, "seeds", config.SEEDS)),
        seed=int(_pick(args.seed, raw, "seed", config.SEED)),
        cap=args.cap,
    )
    out = cmd_sweep(spec)
    print(f"✅ sweep written to {out}")
    return 0


def cmd_simulate(args) -> int:
    params, raw = _load(args)
    horizon = int(_pick(args.horizon, raw, "horizon", config.HORIZON))
    seeds = int(_pick(args.seeds, raw, "seeds", config.SEEDS))
    seed = int(_pick(args.seed, raw, "seed", config.SEED))

    if args.greedy:
        res = greedy_simulate_many(params, horizon, seeds, seed)
    else:
        if args.policy:
            policy = load_policy(args.policy)
        elif args.threshold is not None:
            policy = ThresholdPolicy(args.threshold)
        else:
            raise ValidationError("simulate needs --policy, --threshold or --greedy")
        res = simulate_many(params, policy, horizon, seeds, seed)

    print(f"horizon        = {res.horizon}")
    print(f"avg_age        = {fmt(res.empirical_avg_age)}")
    print(f"avg_energy     = {fmt(res.empirical_avg_energy)}")
    print(f"std_err_age    = {fmt(res.std_err_age)}")
    print(f"std_err_energy = {fmt(res.std_err_energy)}")
    print(f"rng            = {res.rng}")
    return 0


def cmd_oracle(args) -> int:
    params, raw = _load(args)
    beta = _beta(args, raw)
    mdp = TruncatedMdp.build(params, beta, args.cap)
    tol = args.tol if args.tol is not None else config.ORACLE_TOL

    if args.mode == "vi":
        sol = discounted_vi(mdp, args.alpha, tol)
        policy = sol.policy
        print(f"alpha      = {fmt(args.alpha)}")
        print(f"V(1, M)    = {fmt(sol.values.table[0, -1])}")
        print(f"monotone   = {sol.values.nondecreasing_in_age() and sol.values.nonincreasing_in_samples()}")
    else:
        sol = rvi(mdp, tol)
        policy = sol.policy
        print(f"avg_cost   = {fmt(sol.gain)}")

    verdict = extract_threshold(policy, params.distortion)
    print(f"cap        = {mdp.age_cap}")
    print(f"iterations = {sol.iterations}")
    if isinstance(verdict, NotThresholdStructured):
        print(f"structure  = {verdict}")
    else:
        print(f"threshold  = {verdict}")
        print("structure  = threshold")
    return 0


def cmd_validate(args) -> int:
    params, _ = _load(args)
    coeffs = coefficients(params, 0.0)
    spec = params.distortion
    print(f"M = {params.M}, L = {spec.L}, p = {fmt(params.p)}, e_max = {fmt(params.e_max)}")
    for l in range(1, spec.L + 1):
        print(f"  level {l}: ages >= {spec.breakpoints[l - 1]}, needs {spec.levels[l - 1]} samples, "
              f"F = {fmt(coeffs.F_h[l])}, B = {fmt(coeffs.B[l])}")
    print(f"pmf sum = {fmt(float(np.sum(params.pmf)))}")
    print("✅ config OK")
    return 0


# ===================== PARSER =====================

class CliParser(argparse.ArgumentParser):
    """Usage errors surface as E_VALIDATION like every other bad input"""

    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="app.py", description="Age-optimal transmission scheduling under an energy budget")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON problem configuration")
        p.add_argument("--e-max", dest="e_max", type=float, default=None)
        return p

    p = common(sub.add_parser("threshold", help="optimal threshold at a fixed beta"))
    p.add_argument("--beta", type=float, default=None)
    p.set_defaults(func=cmd_threshold)

    p = common(sub.add_parser("solve", help="bisection on beta and the mixture policy"))
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_solve)

    p = common(sub.add_parser("sweep", help="CSV sweep over one parameter axis"))
    p.add_argument("--axis", choices=AXES, required=True)
    p.add_argument("--grid", required=True, help="comma list or start:stop:count")
    p.add_argument("--solver", choices=SOLVERS, default="closed_form")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--cap", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep_cli)

    p = common(sub.add_parser("simulate", help="Monte Carlo of a policy or the greedy baseline"))
    p.add_argument("--policy", default=None, help="mixture policy JSON written by solve")
    p.add_argument("--threshold", type=int, default=None)
    p.add_argument("--greedy", action="store_true")
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = common(sub.add_parser("oracle", help="value-iteration oracle on a truncated state space"))
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--mode", choices=("vi", "rvi"), default="rvi")
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--cap", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_oracle)

    p = common(sub.add_parser("validate", help="check a configuration"))
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=config.LOG_LEVEL, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except SchedulerError as e:
        print(f"error: {e.code}: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        print(f"error: E_INTERNAL: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
