"""Command-line entry point.

Subcommands: dare, kf, finite, stationary, curve, simulate, bench,
crosscheck. Everything is driven by a JSON config file (see nrdf.config for
the schema); results land in JSON or CSV files carrying the config hash.

Exit codes: 0 success, 2 config/validation failure, 3 solver failure,
4 cross-check failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import statistics
import sys
import time

import numpy as np

from . import channel as channel_mod
from .config import RunConfig, parse_config
from .errors import (HashMismatch, MissingRows, NrdfError, ParseError,
                     ValidationError)
from .finite import FiniteHorizonProblem, reverse_waterfill_finite
from .kalman import d_min_finite, kf_forward
from .linalg import inf_norm
from .riccati import dare_solve
from .stationary import (StationaryProblem, kh_bound,
                         reverse_waterfill_stationary, scalar_closed_form)

CSV_COLUMNS = ["D", "d_min", "rate_bits", "solver", "wall_time_s", "status"]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_CROSSCHECK = 4

RATE_TOL_BITS = 1e-4
MATRIX_TOL_REL = 1e-5


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _matrix(M) -> list:
    return np.asarray(M, dtype=float).tolist()


def _emit_json(payload: dict, out_path):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _emit_csv(columns, rows, out_path):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _single_distortion(config: RunConfig) -> float:
    if len(config.distortions) != 1:
        raise ValidationError("distortion", "this command needs a single D, not a sweep")
    return float(config.distortions[0])


def cmd_dare(config: RunConfig, args) -> int:
    steady = dare_solve(config.model, tol=min(1e-10, config.eps))
    _emit_json({"config_hash": config.hash,
                "Pi": _matrix(steady.Pi),
                "Sigma": _matrix(steady.Sigma),
                "Sigma_bar": _matrix(steady.Sigma_bar),
                "d_min_infty": steady.d_min_infty}, args.out)
    return EXIT_OK


def cmd_kf(config: RunConfig, args) -> int:
    model = config.finite_model()
    steps = kf_forward(model)
    payload = {"config_hash": config.hash,
               "d_min": d_min_finite(steps),
               "steps": [{"t": t,
                          "prior_cov": _matrix(s.prior_cov),
                          "posterior_cov": _matrix(s.posterior_cov),
                          "gain": _matrix(s.gain),
                          "innov_cov": _matrix(s.innov_cov),
                          "gain_innov_cov": _matrix(s.gain_innov_cov)}
                         for t, s in enumerate(steps)]}
    _emit_json(payload, args.out)
    return EXIT_OK


def cmd_finite(config: RunConfig, args) -> int:
    D = _single_distortion(config)
    problem = FiniteHorizonProblem.from_model(config.finite_model(), D)
    sol = reverse_waterfill_finite(problem, eps=config.eps, log_base=config.log_base)
    _emit_json({"config_hash": config.hash,
                "D": D,
                "d_min": problem.d_min,
                "theta_star": sol.theta_star,
                "total_rate": sol.total_rate,
                "normalized_rate": sol.normalized_rate,
                "rate_units": "bits" if config.log_base == 2 else "nats",
                "post_var": list(map(float, sol.post_var)),
                "prior_var": list(map(float, sol.prior_var)),
                "stage_rates": list(map(float, sol.stage_rates))}, args.out)
    return EXIT_OK


def _stationary_solution(config: RunConfig, D: float):
    steady = dare_solve(config.model, tol=min(1e-10, config.eps))
    problem = StationaryProblem(model=config.model, steady=steady, D=D)
    wf = reverse_waterfill_stationary(problem, eps=config.eps, log_base=config.log_base)
    return steady, problem, wf


def cmd_stationary(config: RunConfig, args) -> int:
    D = _single_distortion(config)
    steady, problem, wf = _stationary_solution(config, D)
    Sigma_xi = wf.sigma_xi()
    Pi_xi = wf.pi_xi()
    chan = channel_mod.stationary_test_channel(Sigma_xi, Pi_xi, config.model.A)
    payload = {"config_hash": config.hash,
               "D": D,
               "d_min_infty": steady.d_min_infty,
               "rate": wf.rate,
               "rate_units": "bits" if config.log_base == 2 else "nats",
               "theta_star": wf.theta_star,
               "mu_post": list(map(float, wf.mu_post)),
               "mu_prior": list(map(float, wf.mu_prior)),
               "Sigma_xi": _matrix(Sigma_xi),
               "Pi_xi": _matrix(Pi_xi),
               "H": _matrix(chan.H[0]),
               "Sigma_v": _matrix(chan.Sigma_v[0])}
    if config.model.p == 1:
        payload["closed_form_rate"] = scalar_closed_form(problem, log_base=config.log_base)
    try:
        payload["kh_rate"] = kh_bound(problem, log_base=config.log_base)
    except NrdfError:
        pass
    _emit_json(payload, args.out)
    return EXIT_OK


def _curve_rows(config: RunConfig):
    """One (D, solver) row per sweep point; solver errors become row status."""
    steady = None
    steady_err = None
    try:
        steady = dare_solve(config.model, tol=min(1e-10, config.eps))
    except NrdfError as exc:
        steady_err = exc
    finite_model = None
    if "finite" in config.solvers:
        finite_model = config.finite_model()

    rows = []
    for D in config.distortions:
        D = float(D)
        for solver in config.solvers:
            t0 = time.perf_counter()
            rate = ""
            d_min = ""
            status = "ok"
            try:
                if solver == "finite":
                    problem = FiniteHorizonProblem.from_model(finite_model, D)
                    d_min = problem.d_min
                    sol = reverse_waterfill_finite(problem, eps=config.eps)
                    rate = sol.normalized_rate
                else:
                    if steady_err is not None:
                        raise steady_err
                    d_min = steady.d_min_infty
                    problem = StationaryProblem(model=config.model, steady=steady, D=D)
                    if solver == "waterfill":
                        rate = reverse_waterfill_stationary(problem, eps=config.eps).rate
                    elif solver == "closed-form":
                        rate = scalar_closed_form(problem)
                    elif solver == "kh":
                        rate = kh_bound(problem)
            except NrdfError as exc:
                status = type(exc).__name__
            wall = time.perf_counter() - t0
            rows.append([D, d_min, rate, solver, wall, status])
    return rows


def cmd_curve(config: RunConfig, args) -> int:
    rows = _curve_rows(config)
    _emit_csv(CSV_COLUMNS, rows, args.out)
    ok = any(row[5] == "ok" for row in rows)
    return EXIT_OK if ok else EXIT_SOLVER


def cmd_simulate(config: RunConfig, args) -> int:
    if not config.sim:
        raise ValidationError("sim", "simulate needs a sim block in the config")
    D = _single_distortion(config)
    steady, problem, wf = _stationary_solution(config, D)
    chan = channel_mod.stationary_test_channel(wf.sigma_xi(), wf.pi_xi(), config.model.A)
    report = channel_mod.simulate(
        config.model, chan,
        horizon=config.sim["horizon"],
        trials=config.sim.get("trials", 1),
        seed=config.seed,
        target_D=D,
        target_rate=wf.rate,
        burn_in=config.sim.get("burn_in", 0),
        log_base=config.log_base)
    _emit_json({"config_hash": config.hash,
                "samples": report.samples,
                "empirical_mse": report.empirical_mse,
                "empirical_rate": report.empirical_rate,
                "target_D": report.target_D,
                "target_rate": report.target_rate,
                "mmse_cov": _matrix(report.mmse_cov),
                "innovation_lag_corr": report.innovation_lag_corr}, args.out)
    return EXIT_OK


def _time_repeated(fn, reps: int):
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return times


def cmd_bench(config: RunConfig, args) -> int:
    bench = config.bench or {}
    reps = bench.get("reps", 1)
    rows = []

    if len(config.distortions) >= 1:
        # sweeps are timed at their first point
        D = float(config.distortions[0])

        def solve_stationary():
            steady = dare_solve(config.model, tol=min(1e-10, config.eps))
            problem = StationaryProblem(model=config.model, steady=steady, D=D)
            reverse_waterfill_stationary(problem, eps=config.eps)

        times = _time_repeated(solve_stationary, reps)
        rows.append(["stationary-waterfill", config.model.p, reps,
                     statistics.mean(times), statistics.median(times)])

        horizons = bench.get("horizons", [])
        if horizons and not config.model.is_scalar:
            raise ValidationError("bench.horizons",
                                  "finite-horizon benchmarking needs a scalar model")
        for n in horizons:
            from .model import TimeVaryingSystemModel
            tvm = TimeVaryingSystemModel.from_time_invariant(config.model, int(n))

            def solve_finite():
                problem = FiniteHorizonProblem.from_model(tvm, D)
                reverse_waterfill_finite(problem, eps=config.eps)

            times = _time_repeated(solve_finite, reps)
            rows.append(["finite-waterfill", int(n), reps,
                         statistics.mean(times), statistics.median(times)])

    if args.oracle:
        with open(args.oracle, "r", encoding="utf-8") as fh:
            oracle = json.load(fh)
        times = [row["wall_time_s"] for row in oracle.get("rows", [])]
        if times:
            rows.append([f"sdp-oracle[{oracle.get('variant', '?')}]", config.model.p,
                         len(times), statistics.mean(times), statistics.median(times)])

    _emit_csv(["solver", "param", "reps", "mean_s", "median_s"], rows, args.out)
    return EXIT_OK


def _match_oracle_row(oracle_rows, D: float):
    for row in oracle_rows:
        if abs(row["D"] - D) <= 1e-9 * max(1.0, abs(D)):
            return row
    return None


def cmd_crosscheck(config: RunConfig, args) -> int:
    try:
        with open(args.oracle, "r", encoding="utf-8") as fh:
            oracle = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read oracle result: {exc}")
    except json.JSONDecodeError as exc:
        raise ParseError(f"oracle result is not valid JSON: {exc}")
    if oracle.get("config_hash") != config.hash:
        raise HashMismatch(
            f"oracle hash {oracle.get('config_hash')!r} != config hash {config.hash!r}")
    variant = oracle.get("variant", "")
    oracle_rows = oracle.get("rows", [])

    missing = [float(D) for D in config.distortions
               if _match_oracle_row(oracle_rows, float(D)) is None]
    if missing:
        raise MissingRows(missing)

    finite_variant = variant.startswith("finite")
    if finite_variant:
        finite_model = config.finite_model()
    else:
        steady = dare_solve(config.model, tol=min(1e-10, config.eps))

    report_rows = []
    max_rate_diff = 0.0
    max_matrix_diff = 0.0
    for D in map(float, config.distortions):
        row = _match_oracle_row(oracle_rows, D)
        if finite_variant:
            problem = FiniteHorizonProblem.from_model(finite_model, D)
            sol = reverse_waterfill_finite(problem, eps=config.eps)
            rate_primary = sol.total_rate
            ours = np.asarray(sol.post_var, dtype=float)
            theirs = np.asarray([np.asarray(M, dtype=float)[0, 0]
                                 for M in row["Sigma_xi"]])
            matrix_diff = float(np.max(np.abs(ours - theirs)) / max(1.0, np.max(np.abs(theirs))))
        else:
            problem = StationaryProblem(model=config.model, steady=steady, D=D)
            wf = reverse_waterfill_stationary(problem, eps=config.eps)
            rate_primary = wf.rate
            theirs = np.asarray(row["Sigma_xi"], dtype=float)
            matrix_diff = inf_norm(wf.sigma_xi() - theirs) / max(1.0, inf_norm(theirs))
        rate_diff = abs(rate_primary - float(row["rate_bits"]))
        max_rate_diff = max(max_rate_diff, rate_diff)
        max_matrix_diff = max(max_matrix_diff, matrix_diff)
        report_rows.append({"D": D, "rate_primary_bits": rate_primary,
                            "rate_oracle_bits": float(row["rate_bits"]),
                            "rate_diff_bits": rate_diff,
                            "matrix_diff_rel": matrix_diff})

    passed = max_rate_diff <= RATE_TOL_BITS and max_matrix_diff <= MATRIX_TOL_REL
    _emit_json({"config_hash": config.hash,
                "variant": variant,
                "pass": bool(passed),
                "max_rate_diff_bits": max_rate_diff,
                "max_matrix_diff_rel": max_matrix_diff,
                "rate_tol_bits": RATE_TOL_BITS,
                "matrix_tol_rel": MATRIX_TOL_REL,
                "rows": report_rows}, args.out)
    return EXIT_OK if passed else EXIT_CROSSCHECK


def _apply_overrides(config: RunConfig, args) -> RunConfig:
    raw = dict(config.raw)
    changed = False
    if getattr(args, "solver", None):
        raw["solvers"] = [s.strip() for s in args.solver.split(",") if s.strip()]
        changed = True
    if getattr(args, "eps", None) is not None:
        raw["eps"] = args.eps
        changed = True
    if getattr(args, "seed", None) is not None:
        raw["seed"] = args.seed
        changed = True
    if getattr(args, "log_base", None):
        raw["log_base"] = 2 if args.log_base == "2" else "e"
        changed = True
    if not changed:
        return config
    from .config import parse_config_dict
    return parse_config_dict(raw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nrdf",
        description="Rate-distortion solvers for hidden Gauss-Markov sources "
                    "observed through noise.")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "dare": "steady-state filter covariances",
        "kf": "forward filter covariance trajectory",
        "finite": "finite-horizon reverse waterfilling at one D",
        "stationary": "stationary solver and test channel at one D",
        "curve": "rate-distortion sweep to CSV",
        "simulate": "Monte-Carlo check of the test channel",
        "bench": "wall-time benchmark of the solvers",
        "crosscheck": "compare against an SDP oracle result file",
    }
    for name, help_text in commands.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, help="JSON config path")
        sp.add_argument("--out", default=None, help="output path (default: stdout)")
        sp.add_argument("--solver", default=None,
                        help="comma-separated solver list override")
        sp.add_argument("--eps", type=float, default=None, help="tolerance override")
        sp.add_argument("--seed", type=int, default=None, help="seed override")
        sp.add_argument("--log-base", choices=["2", "e"], default=None,
                        dest="log_base", help="rate units override")
        if name in ("crosscheck", "bench"):
            sp.add_argument("--oracle", required=(name == "crosscheck"),
                            default=None, help="oracle result JSON path")
    return parser


_DISPATCH = {
    "dare": cmd_dare,
    "kf": cmd_kf,
    "finite": cmd_finite,
    "stationary": cmd_stationary,
    "curve": cmd_curve,
    "simulate": cmd_simulate,
    "bench": cmd_bench,
    "crosscheck": cmd_crosscheck,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(args.config)
        config = _apply_overrides(config, args)
        return _DISPATCH[args.command](config, args)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (HashMismatch, MissingRows) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CROSSCHECK
    except NrdfError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
