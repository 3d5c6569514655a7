"""``tbm`` command line: fit, select, simulate, evaluate, benchmark.

Every invocation writes ``manifest.json`` into its output directory, also
when it fails. Exit codes: 0 success, 2 unreadable input file, 3 bad
configuration, 4 internal invariant violated.
"""
import argparse
import json
import os
import platform
import sys
import time
from datetime import datetime, timezone

import numpy as np
import scipy

from . import __version__, harness
from .errors import ConfigError, InvariantError, SimulationError, TensorFormatError
from .estimation import FitConfig, Penalty, fit
from .metrics import confusion, evaluate, write_metric_rows
from .model import read_tbm, write_tbm
from .selection import (SelectionGrid, cartesian_ranks, default_lambda_grid, select_lambda,
                        select_ranks, select_ranks_coordinate, write_selection_csv)
from .simulate import SimConfig, gen_data
from .tensor import read_tsr, write_tsr

EXIT_OK, EXIT_PARSE, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# -- flag parsing -------------------------------------------------------------

def _int_list(flag, text):
    try:
        out = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"{flag}: expected comma-separated integers, got {text!r}") from None
    if any(x < 1 for x in out):
        raise ConfigError(f"{flag}: values must be positive, got {text!r}")
    return out


def _mode_range(flag, item):
    try:
        if "-" in item:
            lo, hi = (int(x) for x in item.split("-"))
            vals = list(range(lo, hi + 1))
        else:
            vals = [int(x) for x in item.split("/")]
    except ValueError:
        raise ConfigError(f"{flag}: cannot read {item!r}") from None
    if not vals or min(vals) < 1:
        raise ConfigError(f"{flag}: empty or non-positive range {item!r}")
    return vals


def parse_ranks_grid(text, flag="--ranks-grid"):
    """``"2-6,2-6,3/5"`` -> per-mode candidate lists."""
    return [_mode_range(flag, item) for item in text.split(",")]


def parse_lambda_grid(text, flag="--lambda-grid"):
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(f"{flag}: expected comma-separated numbers, got {text!r}") from None
    if any(not np.isfinite(v) or v < 0 for v in vals):
        raise ConfigError(f"{flag}: values must be finite and >= 0")
    return vals


def _read_tensor(flag, path):
    try:
        return read_tsr(path)
    except OSError as exc:
        raise TensorFormatError(f"{flag}: cannot read {path}: {exc.strerror}") from None
    except TensorFormatError as exc:
        raise TensorFormatError(f"{flag}: {path}: {exc}") from None


def _read_model(flag, path):
    try:
        return read_tbm(path)
    except OSError as exc:
        raise TensorFormatError(f"{flag}: cannot read {path}: {exc.strerror}") from None
    except TensorFormatError as exc:
        raise TensorFormatError(f"{flag}: {path}: {exc}") from None


def _fit_config(args, ranks):
    if args.penalty == "none" and args.lam:
        raise ConfigError("--lambda needs --penalty l0 or l1")
    try:
        penalty = Penalty(args.penalty, args.lam or 0.0)
        return FitConfig(ranks, restarts=args.restarts, max_iters=args.max_iters,
                         rel_tol=args.rel_tol, penalty=penalty, seed=args.seed)
    except ConfigError as exc:
        raise ConfigError(f"fit flags: {exc}") from None


def _check_ranks(ranks, dims):
    if len(ranks) != len(dims):
        raise ConfigError(f"--ranks: {len(ranks)} values for an order-{len(dims)} tensor")
    for k, (r, d) in enumerate(zip(ranks, dims)):
        if r > d:
            raise ConfigError(f"--ranks: {r} clusters on mode {k} of size {d}")


def _dump_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(type(x))


# -- commands -----------------------------------------------------------------

def cmd_fit(args, run):
    y = _read_tensor("--input", args.input)
    ranks = _int_list("--ranks", args.ranks)
    _check_ranks(ranks, y.dims)
    config = _fit_config(args, ranks)
    run.echo(config.echo())
    result = fit(y, config)
    write_tbm(run.path("model.tbm"), result.model)
    _dump_json(run.path("report.json"), result.report())
    print(f"objective {result.objective!r} converged={str(result.converged).lower()} "
          f"iterations={result.iterations_used}")


def cmd_select(args, run):
    y = _read_tensor("--input", args.input)
    template = _fit_config(args, (1,) * y.order)
    if args.mode == "ranks":
        if not args.ranks_grid:
            raise ConfigError("--ranks-grid is required with --mode ranks")
        ranges = parse_ranks_grid(args.ranks_grid)
        if len(ranges) != y.order:
            raise ConfigError(f"--ranks-grid: {len(ranges)} modes for an order-{y.order} tensor")
        run.echo({"mode": "ranks", "ranges": ranges, "search": args.search,
                  "fit": template.echo()})
        if args.search == "coordinate":
            best, rows = select_ranks_coordinate(y, ranges, template)
        else:
            grid = SelectionGrid(rank_candidates=cartesian_ranks(ranges),
                                 fit_config_template=template)
            best, rows = select_ranks(y, grid)
        choice = {"ranks": list(best)}
    else:
        if not args.ranks:
            raise ConfigError("--ranks is required with --mode lambda")
        ranks = _int_list("--ranks", args.ranks)
        _check_ranks(ranks, y.dims)
        kind = args.penalty if args.penalty != "none" else "l0"
        if args.lambda_grid:
            lams = parse_lambda_grid(args.lambda_grid)
        else:
            lams = default_lambda_grid(y, ranks, template)
        run.echo({"mode": "lambda", "ranks": list(ranks), "penalty": kind, "lambdas": lams,
                  "fit": template.echo()})
        grid = SelectionGrid(lambda_candidates=lams, fit_config_template=template)
        lam, rows = select_lambda(y, ranks, grid, kind=kind)
        best = ranks
        choice = {"ranks": list(ranks), "lambda": lam, "penalty": kind}
    chosen = next(r for r in rows if tuple(r.ranks) == tuple(best)
                  and r.lam == choice.get("lambda", r.lam))
    choice["bic"] = chosen.bic
    write_selection_csv(run.path("selection.csv"), rows)
    _dump_json(run.path("best.json"), choice)
    print(json.dumps(choice, default=_json_default))


def cmd_simulate(args, run):
    try:
        config = SimConfig(
            dims=_int_list("--dims", args.dims), ranks=_int_list("--ranks", args.ranks),
            noise=args.noise, sigma=args.sigma, sparsity_p=args.sparsity,
            membership_scheme=args.scheme, min_size=args.min_size, seed=args.seed)
    except ConfigError as exc:
        raise ConfigError(f"simulate flags: {exc}") from None
    run.echo(config.echo())
    sim = gen_data(config)
    write_tsr(run.path("y.tsr"), sim.y)
    write_tbm(run.path("truth.tbm"), sim.truth)
    write_tsr(run.path("theta.tsr"), sim.theta_true)
    with open(run.path("config.json"), "w") as fh:
        fh.write(config.to_json() + "\n")


def cmd_evaluate(args, run):
    truth = _read_model("--truth-model", args.truth_model) if args.truth_model else None
    est = _read_model("--est-model", args.est_model) if args.est_model else None
    theta_true = _read_tensor("--truth-theta", args.truth_theta) if args.truth_theta else None
    theta_hat = _read_tensor("--est-theta", args.est_theta) if args.est_theta else None
    y = _read_tensor("--input", args.input) if args.input else None
    if truth is None and theta_true is None:
        raise ConfigError("need --truth-model or --truth-theta")
    if est is None and theta_hat is None:
        raise ConfigError("need --est-model or --est-theta")
    run.echo({k: getattr(args, k) for k in
              ("truth_model", "est_model", "truth_theta", "est_theta", "input")})
    dims = [t.dims for t in (theta_true, theta_hat, y) if t is not None]
    dims += [m.dims for m in (truth, est) if m is not None]
    if len(set(dims)) > 1:
        raise ConfigError(f"inconsistent dims across inputs: {sorted(set(dims))}")
    row = evaluate(truth, est, theta_true, theta_hat, y)
    if truth is not None and est is not None:
        for k, (t, e) in enumerate(zip(truth.memberships, est.memberships), start=1):
            if t.num_clusters != e.num_clusters:
                print(f"mode {k}: {t.num_clusters} true vs {e.num_clusters} estimated "
                      f"clusters; confusion matrix:")
                print(np.array2string(confusion(t, e), precision=4))
    write_metric_rows(run.path("metrics.csv"), [row])
    write_metric_rows(sys.stdout, [row])


def cmd_benchmark(args, run):
    kwargs = {"restarts": args.restarts}
    if args.d1:
        if args.suite not in ("scaling3", "scaling4"):
            raise ConfigError("--d1 only applies to the scaling suites")
        kwargs["d1_values"] = _int_list("--d1", args.d1)
    if args.search:
        if args.suite != "bic-table":
            raise ConfigError("--search only applies to bic-table")
        kwargs["search"] = args.search
    echo = {"suite": args.suite, "sims": args.sims, "seed": args.seed, **kwargs}
    if args.suite in ("scaling3", "scaling4"):
        order = 3 if args.suite == "scaling3" else 4
        d1s = kwargs.get("d1_values") or (harness.SCALING3_D1 if order == 3
                                          else harness.SCALING4_D1)
        ranks = harness.SCALING_RANKS3 if order == 3 else harness.SCALING_RANKS4
        echo["points"] = [{"ranks": r, "dims": harness.balanced_dims(d, r)}
                          for r in ranks for d in d1s]
    run.echo(echo)
    rows = harness.run_suite(args.suite, sims=args.sims, seed=args.seed, **kwargs)
    harness.write_rows(run.path("benchmark.csv"), rows)
    for r in rows:
        if r["kind"] != "sim":
            print(", ".join(f"{k}={harness._cell(v)}" for k, v in r.items() if v != ""))


# -- wiring -------------------------------------------------------------------

def _add_fit_flags(p):
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--penalty", choices=("none", "l0", "l1"), default="none")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--rel-tol", type=float, default=1e-10)


def build_parser():
    parser = _Parser(prog="tbm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tbm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit a block model at fixed ranks")
    p.add_argument("--input", required=True)
    p.add_argument("--ranks", required=True, help="comma-separated, e.g. 4,4,4")
    _add_fit_flags(p)
    p.add_argument("--out", default="tbm-fit")

    p = sub.add_parser("select", help="choose ranks or lambda by BIC")
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=("ranks", "lambda"), default="ranks")
    p.add_argument("--ranks-grid", help="per-mode candidates, e.g. 2-6,2-6,3/5")
    p.add_argument("--ranks", help="fixed ranks for --mode lambda")
    p.add_argument("--lambda-grid", help="comma-separated lambdas (default: scaled log grid)")
    p.add_argument("--search", choices=("cartesian", "coordinate"), default="cartesian")
    _add_fit_flags(p)
    p.add_argument("--out", default="tbm-select")

    p = sub.add_parser("simulate", help="draw a synthetic tensor")
    p.add_argument("--dims", required=True)
    p.add_argument("--ranks", required=True)
    p.add_argument("--noise", choices=("gaussian", "bernoulli"), default="gaussian")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--sparsity", type=float, default=0.0)
    p.add_argument("--scheme", choices=("balanced", "multinomial"), default="balanced")
    p.add_argument("--min-size", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="tbm-sim")

    p = sub.add_parser("evaluate", help="compare an estimate with the truth")
    p.add_argument("--truth-model")
    p.add_argument("--est-model")
    p.add_argument("--truth-theta")
    p.add_argument("--est-theta")
    p.add_argument("--input")
    p.add_argument("--out", default="tbm-eval")

    p = sub.add_parser("benchmark", help="run a simulation study")
    p.add_argument("--suite", choices=harness.SUITES, required=True)
    p.add_argument("--sims", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--d1", help="override the first-mode sizes of a scaling suite")
    p.add_argument("--search", choices=("cartesian", "coordinate"))
    p.add_argument("--out", default="tbm-bench")
    return parser


COMMANDS = {"fit": cmd_fit, "select": cmd_select, "simulate": cmd_simulate,
            "evaluate": cmd_evaluate, "benchmark": cmd_benchmark}


class _Run:
    """Collects what goes into the manifest of one invocation."""

    def __init__(self, argv, out):
        self.argv = list(argv)
        self.out = out
        self.config = None
        self.outputs = []
        self.started = datetime.now(timezone.utc).isoformat(timespec="seconds")
        self.t0 = time.perf_counter()

    def echo(self, config):
        self.config = config

    def path(self, name):
        p = os.path.join(self.out, name)
        self.outputs.append(p)
        return p

    def manifest(self, command, args, status, message=""):
        inputs = {k: v for k, v in vars(args).items()
                  if k in ("input", "truth_model", "est_model", "truth_theta", "est_theta")
                  and v is not None}
        return {
            "command": command,
            "argv": self.argv,
            "config": self.config,
            "seed": getattr(args, "seed", None),
            "versions": {"tbm": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "scipy": scipy.__version__},
            "inputs": inputs,
            "outputs": self.outputs,
            "threads": os.environ.get("TBM_THREADS", "0"),
            "started_at": self.started,
            "wall_seconds": time.perf_counter() - self.t0,
            "exit_code": status,
            "error": message,
        }


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"tbm: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        print(f"tbm: error: --out: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    run = _Run(argv, args.out)
    status, message = EXIT_OK, ""
    try:
        COMMANDS[args.command](args, run)
    except TensorFormatError as exc:
        status, message = EXIT_PARSE, str(exc)
    except (ConfigError, SimulationError, ValueError) as exc:
        status, message = EXIT_CONFIG, str(exc)
    except InvariantError as exc:
        status, message = EXIT_INVARIANT, str(exc)
    if message:
        print(f"tbm: error: {message}", file=sys.stderr)
    _dump_json(os.path.join(args.out, "manifest.json"),
               run.manifest(args.command, args, status, message))
    return status


if __name__ == "__main__":
    sys.exit(main())
