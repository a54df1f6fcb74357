"""``pql`` command line: simulate, sweep, bounds, transversality, dp-demo.

Exit codes: 0 success, 2 invalid configuration, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from pql import bounds, harness
from pql.dpdemo import run_dp_demo
from pql.harness import ExperimentConfig, ExperimentError
from pql.learners import LearnerSpec
from pql.model import ConfigurationError, Hyperplane
from pql.observation import ChannelKind, ChannelSpec
from pql.sweepfile import load_sweep, parse_int, parse_number

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _number(text: str) -> float:
    try:
        return parse_number(text)
    except ConfigurationError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _integer(text: str) -> int:
    try:
        return parse_int(text)
    except ConfigurationError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _default_seed() -> int:
    env = os.environ.get("PQL_SEED")
    if env is None:
        return 0
    try:
        return int(env, 0)
    except ValueError:
        raise SystemExit(f"pql: PQL_SEED must be an integer, got {env!r}") from None


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "n/a"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _table(pairs) -> str:
    w = max(len(k) for k, _ in pairs)
    return "\n".join(f"{k:<{w}}  {_fmt(v)}" for k, v in pairs)


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _channel(args) -> ChannelSpec:
    kind = ChannelKind(args.channel)
    if kind is ChannelKind.GAUSSIAN:
        return ChannelSpec(kind, sigma=args.sigma)
    if kind is ChannelKind.ERASURE:
        return ChannelSpec(kind, p_obs=args.p_obs)
    return ChannelSpec()


def cmd_simulate(args) -> int:
    config = ExperimentConfig(
        LearnerSpec(args.learner, args.epsilon, args.L, args.d),
        _channel(args),
        args.adversary,
        args.delta,
        args.trials,
        args.seed,
    )
    for w in config.warnings:
        print(f"warning: {w}", file=sys.stderr)
    stats = harness.run_experiment(config, workers=args.threads)
    row = harness.result_row(config, stats)
    if args.format == "csv":
        _emit(harness.csv_header() + harness.csv_line(row), args.output)
    elif args.format == "json":
        _emit(harness.rows_to_json([row]) + "\n", args.output)
    else:
        alo, ahi = stats.accuracy_ci
        pairs = [(c, row[c]) for c in harness.CONFIG_COLUMNS]
        pairs += [
            ("accuracy_rate", row["accuracy_rate"]),
            ("accuracy_ci95", f"[{alo:.6g}, {ahi:.6g}]"),
            ("privacy_hit_rate", row["privacy_hit_rate"]),
            ("privacy_ci95", f"[{row['ci_lo']:.6g}, {row['ci_hi']:.6g}]"),
            ("privacy_stderr", stats.privacy_stderr),
            ("mean_query_count", row["mean_query_count"]),
            ("upper_bound", row["upper_bound"]),
            ("lower_bound", row["lower_bound"]),
            ("fallback_trials", stats.fallbacks),
        ]
        _emit(_table(pairs) + "\n", args.output)
    return EXIT_OK


def cmd_sweep(args) -> int:
    configs = load_sweep(args.config).configs()
    done: set = set()
    append = False
    if args.skip_completed:
        if not args.output:
            raise ConfigurationError("--skip-completed needs --output")
        if os.path.exists(args.output) and os.path.getsize(args.output) > 0:
            with open(args.output, encoding="utf-8", newline="") as fh:
                first = fh.readline()
                if first != harness.csv_header():
                    raise ConfigurationError(f"{args.output} does not have the expected CSV header")
                fh.seek(0)
                done = harness.completed_keys(fh)
            append = True
    out = open(args.output, "a" if append else "w", encoding="utf-8", newline="") if args.output else sys.stdout
    try:
        if not append:
            out.write(harness.csv_header())
            out.flush()
        for c in configs:
            if harness.config_key(c.config_row()) in done:
                continue
            row = harness.result_row(c, harness.run_experiment(c, workers=args.threads))
            out.write(harness.csv_line(row))
            out.flush()
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_bounds(args) -> int:
    for name in ("epsilon", "delta"):
        v = getattr(args, name)
        if not 0 < v < 1:
            raise ConfigurationError(f"--{name} must be in (0, 1)")
    if args.L < 1 or args.d < 1:
        raise ConfigurationError("--L and --d must be >= 1")
    r = bounds.bound_report(args.epsilon, args.delta, args.L, args.d, args.nu, args.beta, args.zeta)
    fields = [
        ("upper", r.upper),
        ("lower", r.lower),
        ("discrete", r.discrete),
        ("reduction", r.reduction),
        ("partial", r.partial),
    ]
    if args.format == "json":
        payload = {
            "epsilon": r.epsilon, "delta": r.delta, "L": r.L, "d": r.d,
            "nu": r.nu, "beta": r.beta, "zeta": r.zeta,
            **{k: v for k, v in fields}, "consistent": r.consistent, "warnings": list(r.warnings),
        }
        print(json.dumps(payload, indent=2))
    else:
        print(_table([("epsilon", r.epsilon), ("delta", r.delta), ("L", r.L), ("d", r.d)]))
        for k, v in fields:
            if v is None:
                continue
            label = k
            if k == "reduction":
                label = f"reduction (beta={r.beta:g})"
            elif k == "partial":
                label = f"partial (zeta={r.zeta:g})"
            print(f"{label:<24}  {v:.6g}  (ceil {math.ceil(v - 1e-9)})")
        print(f"{'consistent':<24}  {r.consistent}")
    for w in r.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_transversality(args) -> int:
    d, delta = args.d, args.delta
    if d not in (2, 3):
        raise ConfigurationError("--d must be 2 or 3")
    m = round(1 / delta)
    if not 0 < delta < 1 or abs(1 / delta - m) > 1e-9 * m or m > 64:
        raise ConfigurationError("--delta must have 1/delta an integer in 2..64")
    bound = bounds.transversality_bound(d, delta)
    if (args.line is None) == (args.random is None):
        raise ConfigurationError("give exactly one of --line or --random")
    if args.line is not None:
        try:
            vals = [parse_number(s) for s in args.line.split(",")]
        except ConfigurationError as e:
            raise ConfigurationError(f"--line: {e}") from None
        if len(vals) != d + 1:
            raise ConfigurationError(f"--line needs {d + 1} comma-separated numbers")
        try:
            h = Hyperplane(tuple(vals[:d]), vals[d])
        except ValueError as e:
            raise ConfigurationError(str(e)) from None
        counts = np.array([bounds.count_intersections(h, delta, d)])
        print(_table([("N_H", int(counts[0])), ("bound", bound)]))
    else:
        if args.random < 1:
            raise ConfigurationError("--random must be >= 1")
        A, b = bounds.random_hyperplanes(args.random, d, np.random.default_rng(args.seed))
        counts = bounds.count_intersections_batch(A, b, delta)
        print(_table([
            ("hyperplanes", args.random),
            ("max N_H", int(counts.max())),
            ("mean N_H", float(counts.mean())),
            ("bound", bound),
            ("axis-parallel N_H", bounds.count_intersections(Hyperplane.axis(0, d, delta / 2), delta, d)),
            ("violations", int((counts > bound).sum())),
        ]))
    if (counts > bound).any():
        print("error: an exact count exceeds the transversality bound", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_dp_demo(args) -> int:
    if args.trials < 1:
        raise ConfigurationError("--trials must be >= 1")
    r = run_dp_demo(args.L, args.epsilon, args.trials, args.seed)
    print(_table([
        ("L", r.L),
        ("epsilon", r.epsilon),
        ("trials", r.trials),
        (f"bits {r.first_bit}..{r.last_bit} exact", r.full_rate),
        (f"bits {r.first_bit}..{r.last_bit - 1} exact", r.determinable_rate),
        (f"flip bit {r.first_bit}: sequences differ", r.disjoint_pair_differs),
        ("flip bit 1: sequences identical", "n/a" if r.concealed_pair_identical is None else r.concealed_pair_identical),
    ]))
    print(
        f"note: bit {r.last_bit} is settled only by the final response, which the adversary never sees",
        file=sys.stderr,
    )
    ok = r.determinable_rate == 1.0 and r.disjoint_pair_differs and r.concealed_pair_identical is not False
    return EXIT_OK if ok else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pql", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    seed = _default_seed()

    def common(sp, threads=True):
        sp.add_argument("--seed", type=_integer, default=seed, help="master seed (default: $PQL_SEED or 0)")
        if threads:
            sp.add_argument("--threads", type=_integer, default=1, help="worker threads; output does not depend on it")

    s = sub.add_parser("simulate", help="run one Monte Carlo experiment")
    s.add_argument("--learner", choices=harness.LEARNER_CHOICES, default="rb")
    s.add_argument("--adversary", choices=harness.ADVERSARIES, default="rb-candidate")
    s.add_argument("--channel", choices=[k.value for k in ChannelKind], default="full")
    s.add_argument("--sigma", type=_number, help="noise std-dev for --channel gaussian")
    s.add_argument("--p-obs", type=_number, dest="p_obs", help="observation probability for --channel erasure")
    s.add_argument("--epsilon", type=_number, required=True, help="learner accuracy, e.g. 2^-12")
    s.add_argument("--delta", type=_number, required=True, help="adversary accuracy, e.g. 2^-4")
    s.add_argument("--L", type=_integer, default=1, help="privacy level (replicas)")
    s.add_argument("--d", type=_integer, default=1, help="dimension")
    s.add_argument("--trials", type=_integer, default=10_000)
    s.add_argument("--format", choices=("table", "csv", "json"), default="table")
    s.add_argument("--output", help="write to this file instead of stdout")
    common(s)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="run a grid of experiments from a config file, streaming CSV")
    s.add_argument("config", help="sweep file (see docs/sweep-format.md)")
    s.add_argument("--output", help="CSV path (default: stdout)")
    s.add_argument("--skip-completed", action="store_true", help="append only cells missing from --output")
    s.add_argument("--threads", type=_integer, default=1)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("bounds", help="evaluate the query-complexity bounds")
    s.add_argument("--epsilon", type=_number, required=True)
    s.add_argument("--delta", type=_number, required=True)
    s.add_argument("--L", type=_integer, default=1)
    s.add_argument("--d", type=_integer, default=1)
    s.add_argument("--nu", type=_number, help="discrete-game error for the discrete bound")
    s.add_argument("--beta", type=_number, help="reduction parameter (default: log(delta/epsilon))")
    s.add_argument("--zeta", type=_number, help="channel bias for the partial-observation bound")
    s.add_argument("--format", choices=("table", "json"), default="table")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("transversality", help="exact hyperplane/sub-cube intersection counts vs the bound")
    s.add_argument("--d", type=_integer, required=True)
    s.add_argument("--delta", type=_number, required=True)
    s.add_argument("--line", help='hyperplane "a1,...,ad,b" meaning <a, x> = b')
    s.add_argument("--random", type=_integer, help="check this many random hyperplanes")
    common(s, threads=False)
    s.set_defaults(func=cmd_transversality)

    s = sub.add_parser("dp-demo", help="reconstruct target bits from replicated-bisection queries")
    s.add_argument("--L", type=_integer, required=True)
    s.add_argument("--epsilon", type=_number, required=True)
    s.add_argument("--trials", type=_integer, default=10_000)
    common(s, threads=False)
    s.set_defaults(func=cmd_dp_demo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except ConfigurationError as e:
        print(f"pql: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ExperimentError, RuntimeError) as e:
        print(f"pql: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as e:
        print(f"pql: {e}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(e, FileNotFoundError) else EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
