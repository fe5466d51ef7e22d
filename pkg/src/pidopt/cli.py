"""Command line interface.

Subcommands:
    train    one training run, metrics to CSV + JSON summary
    ablate   the four-way AdaPID ablation with shared init/batching
    synth    optimizer trajectory on an analytic surface
    verify   the release-gate check battery (nonzero exit on failure)
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .core import HyperParams
from .harness import RunConfig, SynthSpec, run_ablation, run_synth, run_training
from .optimizers import ALGORITHMS
from .verification import verify


def _parse_hidden(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad hidden spec '{text}'; use e.g. 1000,1000")
    if not dims or any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError(f"hidden dims must be positive, got '{text}'")
    return dims


def _add_hyper_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--optimizer", default="iadapid-adg", choices=sorted(ALGORITHMS))
    p.add_argument("--lr", type=float, default=0.001, help="learning rate eta")
    p.add_argument("--gamma", type=float, default=0.9,
                   help="first-moment / integral-derivative decay")
    p.add_argument("--beta", type=float, default=0.99, help="squared-quantity decay")
    p.add_argument("--ki", type=float, default=0.5, help="integral gain")
    p.add_argument("--kd", type=float, default=1.0, help="derivative gain")
    p.add_argument("--sigma", type=float, default=1e-8, help="denominator stability constant")
    p.add_argument("--use-max", action=argparse.BooleanOptionalAction, default=True,
                   help="running-max denominators in iadapid-adg")
    p.add_argument("--use-modulation", action=argparse.BooleanOptionalAction, default=True,
                   help="gradient-difference modulation in iadapid-adg")
    p.add_argument("--seed", type=int, default=0)


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    _add_hyper_flags(p)
    data = p.add_mutually_exclusive_group(required=True)
    data.add_argument("--data-dir", type=Path, help="directory with the MNIST IDX files")
    data.add_argument("--synth", action="store_true", help="use a synthetic blob dataset")
    p.add_argument("--synth-classes", type=int, default=3)
    p.add_argument("--synth-per-class", type=int, default=200)
    p.add_argument("--synth-per-class-test", type=int, default=50)
    p.add_argument("--synth-dim", type=int, default=16)
    p.add_argument("--subset-train", type=int, default=None)
    p.add_argument("--subset-test", type=int, default=None)
    p.add_argument("--hidden", type=_parse_hidden, default=(1000, 1000),
                   help="comma-separated hidden layer widths")
    p.add_argument("--dropout", type=float, default=0.3)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--deterministic", action="store_true",
                   help="single-threaded BLAS for bit-reproducible metrics")
    p.add_argument("--out", type=Path, default=None,
                   help="metrics CSV path (train) or output directory (ablate)")


def _hyperparams(args: argparse.Namespace) -> HyperParams:
    return HyperParams(eta=args.lr, gamma=args.gamma, beta=args.beta, ki=args.ki,
                       kd=args.kd, sigma=args.sigma, use_max=args.use_max,
                       use_modulation=args.use_modulation)


def _run_config(args: argparse.Namespace) -> RunConfig:
    synth = None
    if args.synth:
        synth = SynthSpec(num_classes=args.synth_classes,
                          per_class_train=args.synth_per_class,
                          per_class_test=args.synth_per_class_test,
                          dim=args.synth_dim)
    return RunConfig(optimizer=args.optimizer, hp=_hyperparams(args),
                     data_dir=args.data_dir, synth=synth,
                     subset_train=args.subset_train, subset_test=args.subset_test,
                     hidden=args.hidden, dropout=args.dropout,
                     batch_size=args.batch_size, epochs=args.epochs,
                     seed=args.seed, deterministic=args.deterministic, out=args.out)


def _cmd_train(args: argparse.Namespace) -> int:
    metrics = run_training(_run_config(args))
    for row in metrics.rows:
        print(f"epoch {row.epoch:3d}  train_loss {row.train_loss:.6f}  "
              f"train_acc {row.train_acc:6.2f}%  test_acc {row.test_acc:6.2f}%  "
              f"({row.wall_ms:.0f} ms)")
    return 0


def _cmd_ablate(args: argparse.Namespace) -> int:
    results = run_ablation(_run_config(args))
    print(f"{'optimizer':<14} {'train_loss':>12} {'train_acc':>10} {'test_acc':>10}")
    for tag, metrics in results.items():
        final = metrics.final
        print(f"{tag:<14} {final.train_loss:>12.6f} {final.train_acc:>9.2f}% "
              f"{final.test_acc:>9.2f}%")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    rows = run_synth(args.objective, args.optimizer, args.steps, args.dim,
                     _hyperparams(args), args.seed, args.out)
    first, last = rows[0], rows[-1]
    print(f"{args.objective} d={args.dim}: loss {first[1]:.6g} -> {last[1]:.6g} "
          f"in {args.steps} steps of {args.optimizer}")
    return 0


def _cmd_verify(_args: argparse.Namespace) -> int:
    results = verify()
    for result in results:
        print(result.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pidopt",
                                     description="PID-family adaptive optimizer benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train the MLP with one optimizer")
    _add_train_flags(p_train)
    p_train.set_defaults(func=_cmd_train)

    p_ablate = sub.add_parser("ablate", help="four-way AdaPID ablation")
    _add_train_flags(p_ablate)
    p_ablate.set_defaults(func=_cmd_ablate)

    p_synth = sub.add_parser("synth", help="optimizer trajectory on a test surface")
    _add_hyper_flags(p_synth)
    p_synth.add_argument("--objective", default="quadratic",
                         choices=("quadratic", "rosenbrock"))
    p_synth.add_argument("--steps", type=int, default=2000)
    p_synth.add_argument("--dim", type=int, default=10)
    p_synth.add_argument("--out", type=Path, default=None)
    p_synth.set_defaults(func=_cmd_synth)

    p_verify = sub.add_parser("verify", help="run the check battery")
    p_verify.set_defaults(func=_cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
