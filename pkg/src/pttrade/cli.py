"""Command-line front end: ``pttrade <command> [scenario flags]``.

Scenario parameters come from an optional ``--config`` file of flat
``key = value`` lines, overridden by command-line flags.

Exit codes: 0 success, 1 invalid input, 2 verification failure,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .checks import (
    oracle_boundary_checks,
    oracle_value_checks,
    run_verification,
    with_corrupted_c,
)
from .entry import RegimeTag, solve_entry, v1_value
from .errors import DomainError, IllPosedError, InvalidParameterError, NumericalError, PTTradeError, RegimeError
from .majorant import GridSpec
from .model import ModelInputs, buy_and_hold_value, classify_wellposedness, utility
from .strategy import choose_horizon, evaluate_strategy_exact, optimal_strategy, simulate_strategy_mc, unfinished_mass
from .sweeps import SWEEP_PARAMETERS, check_monotonicity, find_transitions, run_sweep

EXIT_OK, EXIT_INVALID, EXIT_VERIFY, EXIT_NUMERICAL = 0, 1, 2, 3

# config / flag name -> keyword of ModelInputs.from_values
SCENARIO_KEYS = {
    "alpha": "alpha",
    "k": "k",
    "R": "R",
    "mu": "mu",
    "sigma": "sigma",
    "beta": "beta",
    "lambda": "lam",
    "gamma": "gamma",
    "psi": "psi",
}

BUY_AND_HOLD_LEVELS = (1e2, 1e4, 1e6)

# expected comparative statics per swept parameter
EXPECTED_DIRECTIONS = {
    "gamma": [("p1_star", "nonincreasing"), ("p2_star", "nondecreasing")],
    "psi": [("p1_star", "nondecreasing"), ("p2_star", "nondecreasing")],
    "lambda": [("p2_star", "nonincreasing")],
    "R": [],
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for failed verification
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# scenario input
# ---------------------------------------------------------------------------


def parse_config(text: str) -> dict[str, float]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (s.strip() for s in line.partition("="))
        if not sep or not key:
            raise InvalidParameterError("config", f"line {lineno}: expected 'key = value', got {raw!r}")
        if key not in SCENARIO_KEYS:
            raise InvalidParameterError("config", f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise InvalidParameterError("config", f"line {lineno}: duplicate key {key!r}")
        try:
            out[key] = float(value)
        except ValueError:
            raise InvalidParameterError(key, f"not a number: {value!r}") from None
    return out


def scenario_from_args(args) -> ModelInputs:
    values: dict[str, float] = {}
    if args.config is not None:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise InvalidParameterError("config", f"cannot read {args.config}: {exc.strerror}") from None
        values.update(parse_config(text))
    for key in SCENARIO_KEYS:
        flag = getattr(args, f"scn_{key}")
        if flag is not None:
            values[key] = flag
    if "beta" in values and ("mu" in values or "sigma" in values):
        raise InvalidParameterError("beta", "give either beta or (mu, sigma), not both")
    for key in ("alpha", "k", "R"):
        if key not in values:
            raise InvalidParameterError(key, "missing")
    if "beta" not in values and not ("mu" in values and "sigma" in values):
        raise InvalidParameterError("beta", "give beta or both mu and sigma")
    return ModelInputs.from_values(**{SCENARIO_KEYS[k]: v for k, v in values.items()})


def _scenario_dict(inputs: ModelInputs) -> dict:
    d = inputs.as_dict()
    d["lambda"] = d.pop("lam")
    return d


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(rows[0])
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(row.get(h)) for h in header])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def to_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def emit(args, payload, rows: list[dict] | None = None) -> None:
    """Write ``payload`` as JSON, or ``rows`` (default: ``[payload]``) as CSV."""
    if args.format == "csv":
        text = to_csv(rows if rows is not None else [payload])
    else:
        text = to_json(payload)
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            raise InvalidParameterError("out", f"cannot write {args.out}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def solve_report(inputs: ModelInputs, price: float | None = None) -> dict:
    sol = solve_entry(inputs)
    r = sol.regime
    report = {**_scenario_dict(inputs), "well_posedness": classify_wellposedness(inputs).value, "regime": r.tag.value}
    if r.tag is RegimeTag.ILL_POSED:
        p = 1.0 if price is None else price
        report["buy_and_hold_price"] = p
        for n in BUY_AND_HOLD_LEVELS:
            report[f"buy_and_hold_n{int(n)}"] = buy_and_hold_value(p, n, inputs)
        return report
    costs = inputs.costs

    def threshold(b):
        if b is None:
            return None
        return sol.exit.c * (costs.lam * b + costs.psi + inputs.prefs.R) / costs.gamma

    report.update(
        c=sol.exit.c,
        critical_xi=r.critical_xi,
        xi=inputs.xi,
        C=r.C,
        p1_star=r.p1_star,
        p2_star=r.p2_star,
        x1_star=r.x1_star,
        x2_star=r.x2_star,
        sale_threshold_at_p1=threshold(r.p1_star),
        sale_threshold_at_p2=threshold(r.p2_star),
        no_trade_value=utility(-inputs.prefs.R, inputs.prefs),
    )
    if price is not None:
        report["price"] = price
        report["value"] = sol.value(price)
    return report


def cmd_solve(args) -> int:
    emit(args, solve_report(scenario_from_args(args), args.price))
    return EXIT_OK


def cmd_classify(args) -> int:
    inputs = scenario_from_args(args)
    sol = solve_entry(inputs)
    r = sol.regime
    emit(
        args,
        {
            "well_posedness": classify_wellposedness(inputs).value,
            "regime": r.tag.value,
            "xi": inputs.xi,
            "critical_xi": r.critical_xi,
            "C": r.C,
        },
    )
    return EXIT_OK


def _parse_prices(text: str) -> list[float]:
    try:
        prices = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise InvalidParameterError("prices", f"not a comma-separated list of numbers: {text!r}") from None
    if not prices:
        raise InvalidParameterError("prices", "empty list")
    for p in prices:
        if not (p > 0.0 and math.isfinite(p)):
            raise InvalidParameterError("prices", f"prices must be positive and finite, got {p}")
    return prices


def cmd_value(args) -> int:
    inputs = scenario_from_args(args)
    prices = _parse_prices(args.prices)
    sol = solve_entry(inputs)
    if sol.tag is RegimeTag.ILL_POSED:
        raise IllPosedError("value is unbounded for ill-posed parameters")
    rows = []
    for p in prices:
        rows.append(
            {
                "price": p,
                "v1": v1_value(p, inputs, sol.exit),
                "g2": sol.payoff(p),
                "v2": sol.value(p),
                "region": "buy" if sol.in_purchase_region(p) else "wait",
            }
        )
    emit(args, {"regime": sol.tag.value, "rows": rows}, rows)
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = scenario_from_args(args)
    if args.steps < 2:
        raise InvalidParameterError("steps", f"need at least 2 grid points, got {args.steps}")
    records = run_sweep(base, args.param, args.start, args.stop, args.steps, workers=args.workers)
    transitions = find_transitions(base, records, tol=args.tol)
    verdicts = [check_monotonicity(records, b, d) for b, d in EXPECTED_DIRECTIONS[args.param]]
    rows = [r.as_dict() for r in records]
    if args.format == "csv":
        for t in transitions:
            print(
                f"transition {t.parameter} in [{t.lower:.17g}, {t.upper:.17g}]: {t.regime_below} -> {t.regime_above}",
                file=sys.stderr,
            )
    payload = {
        "parameter": args.param,
        "records": rows,
        "transitions": [t.as_dict() for t in transitions],
        "monotonicity": [v.as_dict() for v in verdicts],
    }
    emit(args, payload, rows)
    return EXIT_OK


def _grid_spec(args) -> GridSpec:
    if args.grid < 10:
        raise InvalidParameterError("grid", f"grid too coarse: {args.grid} points")
    return GridSpec(n_points=args.grid)


def _report_checks(args, results) -> int:
    failed = [r for r in results if not r.passed]
    payload = {"passed": not failed, "n_checks": len(results), "n_failed": len(failed), "checks": [r.as_dict() for r in results]}
    emit(args, payload, [r.as_dict() for r in results])
    if failed:
        worst = max(failed, key=lambda r: r.error)
        print(f"FAILED {len(failed)}/{len(results)}; worst: {worst.check} at p={worst.price!r} (error {worst.error:.3g})", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _solved_well_posed(args):
    sol = solve_entry(scenario_from_args(args))
    if sol.tag is RegimeTag.ILL_POSED:
        raise IllPosedError("scenario is ill-posed: no optimal strategy to check")
    return sol


def cmd_verify(args) -> int:
    sol = _solved_well_posed(args)
    if args.corrupt_c is not None:
        sol = with_corrupted_c(sol, args.corrupt_c)
    results = run_verification(sol, args.samples, spec=_grid_spec(args), oracle=not args.no_oracle)
    return _report_checks(args, results)


def cmd_oracle_check(args) -> int:
    sol = _solved_well_posed(args)
    spec = _grid_spec(args)
    results = oracle_value_checks(sol, args.samples, spec) + oracle_boundary_checks(sol, spec)
    return _report_checks(args, results)


def _default_start_price(sol) -> float:
    r, inputs = sol.regime, sol.inputs
    if r.p1_star:
        return r.p1_star / 2.0
    return (inputs.prefs.R + inputs.costs.psi) / inputs.costs.gamma


def cmd_simulate(args) -> int:
    sol = _solved_well_posed(args)
    if args.paths < 1:
        raise InvalidParameterError("paths", f"must be positive, got {args.paths}")
    if not 0 <= args.seed < 2**64:
        raise InvalidParameterError("seed", f"must be an unsigned 64-bit integer, got {args.seed}")
    p = _default_start_price(sol) if args.price is None else args.price
    if not p > 0.0:
        raise InvalidParameterError("price", f"must be positive, got {p}")
    strat = optimal_strategy(p, sol)
    inputs, exit = sol.inputs, sol.exit
    horizon = choose_horizon(p, strat, inputs, exit) if args.horizon is None else args.horizon
    est = simulate_strategy_mc(p, strat, inputs, exit, horizon=horizon, n_paths=args.paths, seed=args.seed, n_steps=args.steps)
    exact = evaluate_strategy_exact(p, strat, inputs, exit).expected_utility
    emit(
        args,
        {
            "price": p,
            "buy_rule": strat.buy_rule.value,
            "buy_level": strat.level,
            "estimate": est.mean,
            "standard_error": est.stderr,
            "exact_value": exact,
            "z_score": est.z_score(exact),
            "n_paths": est.n_paths,
            "n_steps": est.n_steps,
            "horizon": horizon,
            "unfinished_mass": unfinished_mass(p, strat, inputs, exit, horizon),
            "seed": args.seed,
            "frac_never_buy": est.frac_never_buy,
            "frac_buy_no_sale": est.frac_buy_no_sale,
            "frac_round_trip": est.frac_round_trip,
        },
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _int_arg(text: str) -> int:
    """Integer flag; accepts ``1e5`` style."""
    try:
        value = int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    return value


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    scn = common.add_argument_group("scenario")
    scn.add_argument("--config", help="file of 'key = value' lines")
    scn.add_argument("--alpha", dest="scn_alpha", type=float, help="utility curvature")
    scn.add_argument("--k", dest="scn_k", type=float, help="loss aversion")
    scn.add_argument("--R", dest="scn_R", type=float, help="aspiration level")
    scn.add_argument("--mu", dest="scn_mu", type=float, help="price drift")
    scn.add_argument("--sigma", dest="scn_sigma", type=float, help="price volatility")
    scn.add_argument("--beta", dest="scn_beta", type=float, help="1 - 2 mu / sigma^2 (instead of mu and sigma)")
    scn.add_argument("--lambda", dest="scn_lambda", type=float, help="purchase cost multiplier (>= 1)")
    scn.add_argument("--gamma", dest="scn_gamma", type=float, help="sale proceeds multiplier (<= 1)")
    scn.add_argument("--psi", dest="scn_psi", type=float, help="fixed purchase cost")
    scn.add_argument("--out", help="write output here instead of stdout")

    parser = _Parser(prog="pttrade", description="Optimal purchase and sale thresholds under transaction costs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, default_format, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--format", choices=["csv", "json"], default=default_format)
        p.set_defaults(func=func)
        return p

    p = add("solve", cmd_solve, "json", "exit multiple, regime and purchase boundaries")
    p.add_argument("--price", type=float, help="also report the value at this price")

    add("classify", cmd_classify, "json", "well-posedness and entry regime only")

    p = add("value", cmd_value, "csv", "payoff and value at given prices")
    p.add_argument("--prices", required=True, help="comma-separated positive prices")

    p = add("sweep", cmd_sweep, "csv", "boundaries along one parameter")
    p.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMETERS))
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=_int_arg, default=200)
    p.add_argument("--workers", type=_int_arg, default=1)
    p.add_argument("--tol", type=float, default=1e-6, help="width of bracketed regime transitions")

    p = add("verify", cmd_verify, "json", "exact valuation, dominance and oracle checks")
    p.add_argument("--samples", type=_int_arg, default=20, help="prices per check")
    p.add_argument("--grid", type=_int_arg, default=100_000, help="oracle grid points")
    p.add_argument("--no-oracle", action="store_true", help="skip the grid oracle checks")
    p.add_argument("--corrupt-c", type=float, help=argparse.SUPPRESS)

    p = add("oracle-check", cmd_oracle_check, "json", "grid hull oracle against the closed forms")
    p.add_argument("--samples", type=_int_arg, default=50)
    p.add_argument("--grid", type=_int_arg, default=100_000)

    p = add("simulate", cmd_simulate, "json", "Monte Carlo value of the optimal rule")
    p.add_argument("--paths", type=_int_arg, default=100_000)
    p.add_argument("--horizon", type=float, help="time horizon (default: chosen from the unfinished-mass bound)")
    p.add_argument("--seed", type=_int_arg, default=0)
    p.add_argument("--steps", type=_int_arg, default=4096, help="time steps per path")
    p.add_argument("--price", type=float, help="start price (default: half the lower purchase boundary)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"pttrade: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InvalidParameterError, DomainError, IllPosedError) as exc:
        print(f"pttrade: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, RegimeError) as exc:
        print(f"pttrade: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except PTTradeError as exc:
        print(f"pttrade: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
