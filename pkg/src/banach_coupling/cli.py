"""Command line driver.

``bc run`` executes a configured experiment and writes results.csv,
summary.json and law.csv (data only); ``bc validate`` checks a config
and previews what it expands to; ``bc report`` renders figures from a
finished run's artifacts.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from . import experiments

_EPILOG = """\
config schema (JSON, unknown fields are errors):
  {
    "schema": 1,
    "kind": "coupling-time" | "maximality" | "infinity" | "ruin"
            | "density" | "isometry",
    "model": {"kind": "ClassicalWiener", "J": ..., "m": ...}
          or {"kind": "DiagonalSequence", "sigmas": [...], "ambient": "L2"|"SUP"},
    "displacement": {"coeffs": [...]}
                 or {"family": "h-divergent-geometric(RHO)", "count": K},
    "grid": {"horizon": T, "step": DT}         (coupling-time, maximality, ruin)
         or {"checkpoints": [t1, t2, ...]}     (infinity),
    "replicates": N, "seed": S,
    "params": {...}, "tolerances": {...}       (optional, kind-specific)
  }
A displacement family fixes the model (diagonal scales rho**k, L2 ambient
norm), so "model" must then be omitted.  "density" and "isometry" take
neither displacement nor grid; their "replicates" is the sample count.

results.csv columns per kind (frozen):
  coupling-time  replicate, t_exact, t_grid, grid_censored
  maximality     replicate, coupled
  infinity       replicate, t, d_W, n_uncoupled   (+ coupling_times.json)
  ruin           replicate, sup, absorbed
  density        sample, hnorm, logdens
  isometry       sample, x_index, linear

law.csv holds the analytic reference curve sampled on the grid; its
columns are (t, cdf), (t, max_coupling_prob), (t, all_coupled_prob),
(lambda, exceed_prob), (hnorm, join_mass) and
(x_index, hnorm_sq, band_lo, band_hi) respectively.

exit codes: 0 all checks passed; 1 at least one check failed;
2 usage or config error; 3 I/O error.
"""


def _threads_from(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("BC_THREADS", "").strip()
    if env:
        try:
            value = int(env)
            if value >= 1:
                return value
        except ValueError:
            pass
        print(f"bc: ignoring invalid BC_THREADS={env!r}", file=sys.stderr)
    return 1


def _cmd_run(args) -> int:
    if args.threads is not None and args.threads < 1:
        print("bc run: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        cfg = experiments.load_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
    except experiments.ConfigError as exc:
        print(f"bc run: {exc}", file=sys.stderr)
        return 2
    threads = _threads_from(args)
    try:
        summary = experiments.run_experiment(cfg, args.out, threads=threads)
    except experiments.ConfigError as exc:
        print(f"bc run: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"bc run: I/O error: {exc}", file=sys.stderr)
        return 3
    for check in summary["checks"]:
        status = "pass" if check["pass"] else "FAIL"
        print(f"[{status}] {check['law']}: statistic {check['statistic']:.6g} "
              f"vs critical {check['critical_value']:.6g}")
    print(f"wrote {os.path.join(args.out, 'results.csv')} "
          f"(pass={summary['pass']}, runtime {summary['runtime_s']:.2f}s)")
    return 0 if summary["pass"] else 1


def _cmd_validate(args) -> int:
    try:
        cfg = experiments.load_config(args.config)
        preview = experiments.describe_config(cfg)
    except experiments.ConfigError as exc:
        print(f"bc validate: {exc}", file=sys.stderr)
        return 2
    print("OK")
    print(preview)
    return 0


def _cmd_report(args) -> int:
    from . import report  # defer: pulls in matplotlib

    out_dir = args.out if args.out is not None else args.results
    try:
        written = report.render(args.results, out_dir)
    except FileNotFoundError as exc:
        print(f"bc report: missing artifact: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"bc report: I/O error: {exc}", file=sys.stderr)
        return 3
    for path in written:
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bc",
        description="Simulate and check reflection couplings of Banach-valued "
                    "Brownian motions on truncated model spaces.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured experiment",
                           epilog=_EPILOG,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
    p_run.add_argument("--config", required=True, help="experiment config JSON")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config's master seed")
    p_run.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: BC_THREADS or 1); "
                            "results are identical for any thread count")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="check a config and preview it")
    p_val.add_argument("--config", required=True, help="experiment config JSON")
    p_val.set_defaults(func=_cmd_validate)

    p_rep = sub.add_parser("report", help="render figures from a finished run")
    p_rep.add_argument("--results", required=True, help="directory written by bc run")
    p_rep.add_argument("--out", default=None,
                       help="directory for figures (default: the results directory)")
    p_rep.set_defaults(func=_cmd_report)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
