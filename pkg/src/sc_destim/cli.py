"""Command-line interface.

Subcommands: run (one experiment), sweep (trade-off over nu), consensus
(the scalar SC protocol), predict (closed-form report), validate
(pre-run checks; nonzero exit on failure).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from . import __version__
from .config import load_config
from .consensus import ConsensusConfig, run_consensus
from .estimator import ValidationError, validate_config
from .graph import build_topology
from .harness import run_experiment, sweep_experiment, theory_report


def _parse_nu_list(text: str) -> list[float]:
    out = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        out.append(float(Fraction(token)) if "/" in token else float(token))
    if not out:
        raise argparse.ArgumentTypeError("empty nu list")
    return out


def _apply_overrides(cfg, args):
    fields = {}
    if args.seed is not None:
        fields["seed"] = args.seed
    if getattr(args, "runs", None) is not None:
        fields["n_runs"] = args.runs
    if getattr(args, "horizon", None) is not None:
        fields["horizon"] = args.horizon
    return replace(cfg, **fields) if fields else cfg


def _consensus_topology(kind: str, n: int):
    if kind == "ring":
        return build_topology(n, [(i, i % n + 1, 1.0) for i in range(1, n + 1)])
    if kind == "path":
        return build_topology(n, [(i, i + 1, 1.0) for i in range(1, n)])
    if kind == "complete":
        return build_topology(
            n, [(i, j, 1.0) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
        )
    raise ValueError(f"unknown topology preset {kind!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sc-destim",
        description="Distributed estimation over binary event-triggered channels",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment")
    p_run.add_argument("-c", "--config", required=True, help="config file or preset name")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--runs", type=int, default=None)
    p_run.add_argument("--horizon", type=int, default=None)
    p_run.add_argument("-o", "--out", required=True)
    p_run.add_argument("--workers", type=int, default=None)
    p_run.add_argument(
        "--force", action="store_true", help="run despite validator failures"
    )

    p_sweep = sub.add_parser("sweep", help="trade-off sweep over nu (gamma = 1 - nu)")
    p_sweep.add_argument("-c", "--config", required=True)
    p_sweep.add_argument(
        "--nu", type=_parse_nu_list, default=[0.0, 1 / 9, 2 / 9, 3 / 9, 4 / 9],
        help="comma-separated list; fractions like 1/9 allowed",
    )
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--runs", type=int, default=None)
    p_sweep.add_argument("--horizon", type=int, default=None)
    p_sweep.add_argument("-o", "--out", required=True)
    p_sweep.add_argument("--workers", type=int, default=None)

    p_cons = sub.add_parser("consensus", help="run the scalar SC consensus protocol")
    p_cons.add_argument("--n", type=int, default=5)
    p_cons.add_argument("--topology", choices=("ring", "path", "complete"), default="ring")
    p_cons.add_argument("--threshold", type=float, default=2.0, help="fixed threshold C")
    p_cons.add_argument("--alpha1", type=float, default=1.0)
    p_cons.add_argument("--gamma", type=float, default=1.0)
    p_cons.add_argument("--horizon", type=int, default=100_000)
    p_cons.add_argument("--seed", type=int, default=0)
    p_cons.add_argument(
        "--initial", default=None, help="comma-separated states; default 0,1,...,n-1"
    )
    p_cons.add_argument("-o", "--out", default="consensus.csv")

    p_pred = sub.add_parser("predict", help="print validator results and predictions")
    p_pred.add_argument("-c", "--config", required=True)

    p_val = sub.add_parser("validate", help="pre-run validators; nonzero exit on failure")
    p_val.add_argument("-c", "--config", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "run":
        cfg = _apply_overrides(load_config(args.config), args)
        try:
            result = run_experiment(
                cfg, out_dir=args.out, workers=args.workers, validate=not args.force
            )
        except ValidationError as err:
            print(f"validation failed: {err}", file=sys.stderr)
            return 2
        print(f"wrote {cfg.n_runs} runs to {args.out}")
        print(f"final aggregate MSE: {result.mse_mean[-1]:.6g}")
        return 0

    if args.command == "sweep":
        cfg = _apply_overrides(load_config(args.config), args)
        try:
            results = sweep_experiment(cfg, args.nu, out_dir=args.out, workers=args.workers)
        except ValidationError as err:
            print(f"validation failed: {err}", file=sys.stderr)
            return 2
        for nu in sorted(results):
            r = results[nu]
            print(
                f"nu = {nu:.4f}: final MSE = {r.mse_mean[-1]:.6g}, "
                f"final B = {r.global_rate_mean[-1]:.6g}"
            )
        return 0

    if args.command == "consensus":
        topo = _consensus_topology(args.topology, args.n)
        initial = (
            tuple(float(v) for v in args.initial.split(","))
            if args.initial
            else tuple(float(v) for v in range(args.n))
        )
        cfg = ConsensusConfig(
            topology=topo,
            threshold_c=args.threshold,
            alpha1=args.alpha1,
            gamma=args.gamma,
            initial_states=initial,
        )
        traj = run_consensus(cfg, args.horizon, args.seed)
        out = Path(args.out)
        if out.parent != Path(""):
            out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# seed = {args.seed}\n# version = {__version__}\n")
            fh.write("k,max_deviation,mean_state\n")
            for k, d, m in zip(traj.checkpoints, traj.max_deviation, traj.mean_state):
                fh.write(f"{int(k)},{format(d, '.17g')},{format(m, '.17g')}\n")
        print(f"wrote {out}; final max deviation = {traj.max_deviation[-1]:.6g}")
        return 0

    if args.command == "predict":
        cfg = load_config(args.config)
        print(theory_report(cfg), end="")
        return 0

    if args.command == "validate":
        cfg = load_config(args.config)
        failures = validate_config(cfg.estimator_config())
        if failures:
            print("validation FAILED:")
            for f in failures:
                print(f"  - {f}")
            return 1
        print("validation passed")
        return 0

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
