"""Command-line entry point: ``splitmc {run,convergence,speedup,toy}``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import load_config
from .engine import RunConfig, run
from .errors import SplitMCError
from .io import atomic_write, write_outputs
from .problems import ToyDigitSquare
from .stats import mean_of, std_of
from .studies import convergence_study, speedup_csv, speedup_study

log = logging.getLogger("splitmc")


def _overrides(config, args):
    changes = {}
    if getattr(args, "workers", None) is not None:
        changes["n_workers"] = args.workers
    if getattr(args, "seed", None) is not None:
        changes["base_seed"] = args.seed
    if getattr(args, "out", None) is not None:
        changes["output_dir"] = args.out
    return replace(config, **changes) if changes else config


def _out_dir(config):
    return Path(config.output_dir or "splitmc-out")


def _summary(merged, config):
    acc = merged.channel_moments
    mean = mean_of(acc)
    tip = mean[-1] if getattr(mean, "ndim", 0) else mean
    std = std_of(acc)[-1] if acc.count >= 2 else float("nan")
    return (f"seed={config.base_seed} problem={config.problem.name} n_mc={config.n_mc} "
            f"tasks={config.n_tasks} workers={config.n_workers} "
            f"mean[-1]={tip:.6g} std[-1]={std:.6g} total_ms={merged.timing.total_ms:.1f}")


def cmd_run(args):
    config, prices = load_config(args.config)
    config = _overrides(config, args)
    merged = run(config)
    out = _out_dir(config)
    write_outputs(merged, config, out, prices)
    print(_summary(merged, config) + f" out={out}")
    return 0


def cmd_toy(args):
    n_serial = args.n_serial or _default_serial(args.n_mc)
    config = RunConfig(n_mc=args.n_mc, n_serial=n_serial, n_workers=args.workers or 1,
                       base_seed=args.seed or 0, problem=ToyDigitSquare(),
                       output_dir=args.out)
    merged = run(config)
    out = _out_dir(config)
    write_outputs(merged, config, out)
    print(_summary(merged, config) + f" out={out}")
    return 0


def _default_serial(n_mc, cap=1024):
    return max(d for d in range(1, min(n_mc, cap) + 1) if n_mc % d == 0)


def cmd_convergence(args):
    config, _ = load_config(args.config)
    config = _overrides(config, args)
    study = convergence_study(config, args.n_list, args.tolerance)
    out = _out_dir(config)
    study.write(out)
    print(f"seed={config.base_seed} n_list={study.n_list} out={out}")
    for p, m, s in zip(study.pdf_residues, study.mean_residues, study.std_residues):
        print(f"n={p.n_small}->{p.n_large} pdf_residue={p.residue:.4g} "
              f"mean_residue={m.residue:.4g} std_residue={s.residue:.4g} "
              f"converged={p.converged}")
    return 0


def cmd_speedup(args):
    config, _ = load_config(args.config)
    config = _overrides(config, args)
    rows = speedup_study(config, args.worker_list)
    out = _out_dir(config)
    atomic_write(out / "speedup_study.csv", speedup_csv(rows))
    print(f"seed={config.base_seed} out={out}")
    for r in rows:
        print(f"workers={r.workers} total_ms={r.total_ms:.1f} speedup={r.speedup:.3f}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="splitmc", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", type=Path)

    sp = sub.add_parser("run", help="run one campaign")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("convergence", help="n / 4n residue study")
    common(sp)
    sp.add_argument("--n-list", type=int, nargs="+", required=True)
    sp.add_argument("--tolerance", type=float, default=0.05)
    sp.set_defaults(func=cmd_convergence)

    sp = sub.add_parser("speedup", help="repeat a campaign per worker count")
    common(sp)
    sp.add_argument("--worker-list", type=int, nargs="+", required=True)
    sp.set_defaults(func=cmd_speedup)

    sp = sub.add_parser("toy", help="digit-square toy campaign")
    common(sp, config=False)
    sp.add_argument("--n-mc", type=int, required=True)
    sp.add_argument("--n-serial", type=int)
    sp.set_defaults(func=cmd_toy)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SplitMCError as exc:
        print(f"splitmc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
