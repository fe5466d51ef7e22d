"""Experiment runner behind the CLI: configures dataset/model/optimizer,
runs epochs, and emits the CSV/JSON artifacts.

Metrics CSV contract: header ``epoch,train_loss,train_acc,test_acc,wall_ms``,
one row per epoch, floats at 8 significant digits, UTF-8 with LF endings.
Accuracies are percentages.  With a fixed config and seed in deterministic
mode, re-running reproduces the file byte-for-byte except the wall_ms column.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .core import HyperParams
from .data import Dataset, load_mnist_dir, shuffled_indices, synth_blobs
from .estimator import MlpClassifier
from .objectives import quadratic_eval, rosenbrock_eval
from .optimizers import ALGORITHMS, Optimizer
from .rng import Rng, STREAM_START_POINT, derive_seed

# Fixed seed for picking desk-scale subsets, independent of the run seed so
# every run trains on the same subset.
SUBSET_SEED = 727

# The four-way ablation over the AdaPID additions.
ABLATION_TAGS = ("adapid", "adapid-ams", "adapid-diff", "iadapid-adg")


@dataclass(frozen=True)
class SynthSpec:
    """Gaussian-blob dataset request (train and test draws share centers)."""

    num_classes: int = 3
    per_class_train: int = 200
    per_class_test: int = 50
    dim: int = 16
    noise: float = 0.08


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines one training run."""

    optimizer: str = "iadapid-adg"
    hp: HyperParams = field(default_factory=HyperParams)
    data_dir: Path | None = None
    synth: SynthSpec | None = None
    subset_train: int | None = None
    subset_test: int | None = None
    hidden: tuple[int, ...] = (1000, 1000)
    dropout: float = 0.3
    batch_size: int = 128
    epochs: int = 20
    seed: int = 0
    deterministic: bool = False
    out: Path | None = None

    def __post_init__(self):
        if self.optimizer not in ALGORITHMS:
            raise ValueError(f"unknown optimizer '{self.optimizer}'")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.hidden:
            raise ValueError("hidden layer dims must be non-empty")
        if (self.data_dir is None) == (self.synth is None):
            raise ValueError("select exactly one data source: data_dir or synth")


@dataclass(frozen=True)
class EpochRow:
    epoch: int
    train_loss: float
    train_acc: float   # percent
    test_acc: float    # percent
    wall_ms: float


@dataclass(frozen=True)
class RunMetrics:
    optimizer: str
    rows: tuple[EpochRow, ...]

    @property
    def final(self) -> EpochRow:
        return self.rows[-1]


def load_run_datasets(config: RunConfig) -> tuple[Dataset, Dataset]:
    """Materialize the (train, test) pair a config asks for.

    MNIST subsets take the first k indices of a permutation drawn with the
    fixed SUBSET_SEED, so subset membership does not vary with the run seed.
    """
    if config.data_dir is not None:
        train = load_mnist_dir(config.data_dir, "train")
        test = load_mnist_dir(config.data_dir, "test")
    else:
        s = config.synth
        train = synth_blobs(s.num_classes, s.per_class_train, s.dim,
                            seed=derive_seed(config.seed, 21), noise=s.noise)
        test = synth_blobs(s.num_classes, s.per_class_test, s.dim,
                           seed=derive_seed(config.seed, 22), noise=s.noise,
                           split="test")
    if config.subset_train is not None and config.subset_train < len(train):
        train = train.subset(shuffled_indices(len(train), SUBSET_SEED)[:config.subset_train])
    if config.subset_test is not None and config.subset_test < len(test):
        test = test.subset(shuffled_indices(len(test), SUBSET_SEED)[:config.subset_test])
    return train, test


def _estimator(config: RunConfig) -> MlpClassifier:
    hp = config.hp
    return MlpClassifier(
        hidden_layer_sizes=config.hidden, optimizer=config.optimizer,
        learning_rate=hp.eta, gamma=hp.gamma, beta=hp.beta, ki=hp.ki, kd=hp.kd,
        sigma=hp.sigma, use_max=hp.use_max, use_modulation=hp.use_modulation,
        dropout=config.dropout, batch_size=config.batch_size,
        epochs=config.epochs, seed=config.seed)


def run_training(config: RunConfig) -> RunMetrics:
    """One full training run; writes CSV/JSON when config.out is set.

    Deterministic mode pins the BLAS thread pools to one thread so repeated
    runs reproduce every metric except wall time.
    """
    train, test = load_run_datasets(config)
    clf = _estimator(config)
    limits = 1 if config.deterministic else None
    with threadpool_limits(limits=limits):
        clf.fit(train.images, train.labels, eval_set=(test.images, test.labels))
    rows = tuple(
        EpochRow(epoch=h["epoch"], train_loss=h["train_loss"],
                 train_acc=100.0 * h["train_acc"], test_acc=100.0 * h["test_acc"],
                 wall_ms=h["wall_ms"])
        for h in clf.history_)
    metrics = RunMetrics(config.optimizer, rows)
    if config.out is not None:
        write_metrics_csv(metrics, config.out)
        write_summary_json(metrics, config, Path(config.out).with_suffix(".json"))
    return metrics


def run_ablation(config: RunConfig) -> dict[str, RunMetrics]:
    """Train the four AdaPID variants from identical init/batching.

    config.out, when given, names a directory that receives one metrics CSV
    per variant plus a combined ablation_summary.csv.
    """
    out_dir = Path(config.out) if config.out is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    results: dict[str, RunMetrics] = {}
    for tag in ABLATION_TAGS:
        run_out = out_dir / f"metrics_{tag}.csv" if out_dir is not None else None
        cfg = dataclasses.replace(config, optimizer=tag, out=run_out)
        results[tag] = run_training(cfg)
    if out_dir is not None:
        with open(out_dir / "ablation_summary.csv", "w", encoding="utf-8", newline="\n") as f:
            f.write("optimizer,train_loss,train_acc,test_acc\n")
            for tag in ABLATION_TAGS:
                final = results[tag].final
                f.write(f"{tag},{_fmt(final.train_loss)},{_fmt(final.train_acc)},"
                        f"{_fmt(final.test_acc)}\n")
    return results


def run_synth(objective: str, optimizer: str, steps: int, dim: int,
              hp: HyperParams, seed: int, out: Path | None = None) -> list[tuple]:
    """Drive an optimizer over an analytic surface from a seeded start.

    The start point is a seeded normal draw at half-unit scale (0.5 * N(0,1)
    per coordinate), which keeps the running-max variants' frozen
    denominators commensurate with eta.  Returns (step, loss, *w) rows, one
    for the start point and one per step, and writes them as CSV when out is
    set.  Aborts naming the step index if the loss turns non-finite.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if objective == "quadratic":
        target = np.zeros(dim)

        def eval_fn(w):
            return quadratic_eval(w, target)
    elif objective == "rosenbrock":
        eval_fn = rosenbrock_eval
    else:
        raise ValueError(f"unknown objective '{objective}'")

    w = 0.5 * Rng(derive_seed(seed, STREAM_START_POINT)).normals(dim)
    opt = Optimizer(optimizer, dim, hp)
    rows = []
    loss, grad = eval_fn(w)
    rows.append((0, loss, *w))
    for k in range(1, steps + 1):
        w = opt.apply(w, grad)
        loss, grad = eval_fn(w)
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite loss ({loss}) at step {k}")
        rows.append((k, loss, *w))

    if out is not None:
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            f.write("step,loss," + ",".join(f"w{i}" for i in range(dim)) + "\n")
            for row in rows:
                f.write(f"{row[0]}," + ",".join(_fmt(v) for v in row[1:]) + "\n")
    return rows


def _fmt(value: float) -> str:
    return format(value, ".8g")


def write_metrics_csv(metrics: RunMetrics, path: str | Path) -> None:
    """Write per-epoch metrics; see the module docstring for the contract."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("epoch,train_loss,train_acc,test_acc,wall_ms\n")
            for r in metrics.rows:
                f.write(f"{r.epoch},{_fmt(r.train_loss)},{_fmt(r.train_acc)},"
                        f"{_fmt(r.test_acc)},{_fmt(r.wall_ms)}\n")
    except OSError as exc:
        raise OSError(f"cannot write metrics to {path}: {exc}") from exc


def write_summary_json(metrics: RunMetrics, config: RunConfig, path: str | Path) -> None:
    """Final-epoch metrics plus an echo of the run configuration."""
    final = metrics.final
    payload = {
        "optimizer": metrics.optimizer,
        "epochs_run": len(metrics.rows),
        "final": {
            "epoch": final.epoch,
            "train_loss": final.train_loss,
            "train_acc": final.train_acc,
            "test_acc": final.test_acc,
        },
        "config": {
            "optimizer": config.optimizer,
            "hyperparams": dataclasses.asdict(config.hp),
            "data_dir": str(config.data_dir) if config.data_dir else None,
            "synth": dataclasses.asdict(config.synth) if config.synth else None,
            "subset_train": config.subset_train,
            "subset_test": config.subset_test,
            "hidden": list(config.hidden),
            "dropout": config.dropout,
            "batch_size": config.batch_size,
            "epochs": config.epochs,
            "seed": config.seed,
            "deterministic": config.deterministic,
        },
    }
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
