"""Experiment driver: seeded runs, metric export, and run comparison.

Configs are flat key-value text (`key = value`, `#` comments). Unknown
keys are rejected so typos cannot silently fall back to defaults. The
documented keys, all optional except where noted:

    arch            size chain, e.g. 784-300-100-10
    activation      hidden activation (rectifier | logistic | tanh)
    optimizer       sgd | rprop | mod-rprop
    learning_rate   sgd step size
    eta_plus        rprop growth factor
    eta_minus       rprop shrink factor
    delta_max       rprop step ceiling
    delta_min       rprop step floor
    delta_init      rprop initial step
    epochs          epoch cap (>= 1)
    batch_size      minibatch size (>= 1)
    seeds           comma-separated run seeds, non-empty
    dropout_input   input-layer dropout rate in [0, 1)
    dropout_hidden  hidden-layer dropout rate in [0, 1)
    data_dir        directory holding the IDX files (required to load data)
    train_size      training split size
    val_size        validation split size
    test_size       test split size (empty = the whole test file)
    out_dir         output directory for run artifacts
    init_scale      uniform-fan-in | fixed-range:R
    clock           wall | counter (counter gives reproducible timing columns)

Per run the harness writes `metrics-seed<N>.csv` (header
`epoch,train_loss,val_err,elapsed_ms`), the selected model as
`model-seed<N>.ckpt`, and the final parameters plus optimizer state as
`final-seed<N>.ckpt` (a resume point). Per experiment it writes
`runs.csv` (one summary row per seed) and `summary.txt` (a fixed-width
table of per-seed medians).

CSV formatting is deterministic: epochs as integers, error fractions
with 4 decimals, elapsed milliseconds with 3, training loss with 17
significant digits so parsing the file back reproduces the float
exactly.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .data import DataSplits, load_splits_from_dir
from .dropout import DropoutSpec
from .ensemble import (
    AGGREGATION_MODES,
    ENSEMBLE_KINDS,
    EnsembleSpec,
    EnsembleTraining,
    StackerSpec,
    save_ensemble,
    train_ensemble,
)
from .network import chain_specs, init_params
from .optimizers import RpropConfig, SgdConfig
from .serialization import save_checkpoint
from .stats import WilcoxonResult, wilcoxon_signed_rank
from .tensor import RngStream
from .training import (
    OPTIMIZER_NAMES,
    STREAM_INIT,
    EpochRow,
    TrainResult,
    classification_error,
    counter_clock,
    train_model,
    wall_clock,
)

METRICS_HEADER = "epoch,train_loss,val_err,elapsed_ms"
RUNS_HEADER = ("seed,best_epoch,best_val_err,test_err,"
               "first_epoch_val_err,time_to_best_ms,total_ms")

CLOCK_NAMES = ("wall", "counter")


def parse_size_chain(text: str) -> tuple[int, ...]:
    """'784-300-100-10' -> (784, 300, 100, 10)."""
    try:
        sizes = tuple(int(p) for p in text.strip().split("-"))
    except ValueError:
        raise ValueError(f"bad size chain {text!r}; expected like 784-300-10")
    if len(sizes) < 2:
        raise ValueError(f"size chain needs >= 2 sizes, got {text!r}")
    return sizes


def format_size_chain(sizes) -> str:
    return "-".join(str(s) for s in sizes)


@dataclass(frozen=True)
class ExperimentConfig:
    sizes: tuple[int, ...] = (784, 300, 100, 10)
    activation: str = "rectifier"
    optimizer: str = "mod-rprop"
    learning_rate: float = 0.01
    eta_plus: float = 1.2
    eta_minus: float = 0.5
    delta_max: float = 50.0
    delta_min: float = 1e-6
    delta_init: float = 0.1
    epochs: int = 30
    batch_size: int = 128
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    dropout_input: float = 0.0
    dropout_hidden: float = 0.5
    data_dir: str = ""
    train_size: int = 5000
    val_size: int = 1000
    test_size: Optional[int] = None
    out_dir: str = "runs/out"
    init_scale: str = "uniform-fan-in"
    clock: str = "wall"

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if len(self.sizes) < 2:
            raise ValueError("architecture needs at least input and output sizes")
        if self.optimizer not in OPTIMIZER_NAMES:
            raise ValueError(
                f"optimizer must be one of {OPTIMIZER_NAMES}, got {self.optimizer!r}"
            )
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if self.clock not in CLOCK_NAMES:
            raise ValueError(f"clock must be one of {CLOCK_NAMES}, got {self.clock!r}")
        for name in ("dropout_input", "dropout_hidden"):
            r = getattr(self, name)
            if not 0.0 <= r < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {r}")
        if self.train_size < 1 or self.val_size < 1:
            raise ValueError("train_size and val_size must be >= 1")
        if self.test_size is not None and self.test_size < 1:
            raise ValueError("test_size must be >= 1 when given")

    def layer_specs(self):
        return chain_specs(self.sizes, self.activation)

    def optimizer_config(self):
        if self.optimizer == "sgd":
            return SgdConfig(self.learning_rate, self.batch_size)
        return RpropConfig(self.eta_plus, self.eta_minus, self.delta_max,
                           self.delta_min, self.delta_init)

    def dropout_spec(self) -> Optional[DropoutSpec]:
        spec = DropoutSpec.for_sizes(self.sizes, self.dropout_hidden,
                                     self.dropout_input)
        return None if spec.is_off else spec

    def clock_fn(self):
        return wall_clock if self.clock == "wall" else counter_clock()

    def load_data(self) -> DataSplits:
        if not self.data_dir:
            raise ValueError("config has no data_dir; cannot load data")
        return load_splits_from_dir(self.data_dir, self.train_size,
                                    self.val_size, self.test_size)


_CONFIG_KEYS = {
    "arch": ("sizes", parse_size_chain),
    "activation": ("activation", str),
    "optimizer": ("optimizer", str),
    "learning_rate": ("learning_rate", float),
    "eta_plus": ("eta_plus", float),
    "eta_minus": ("eta_minus", float),
    "delta_max": ("delta_max", float),
    "delta_min": ("delta_min", float),
    "delta_init": ("delta_init", float),
    "epochs": ("epochs", int),
    "batch_size": ("batch_size", int),
    "seeds": ("seeds", lambda s: tuple(int(p) for p in s.split(",") if p.strip())),
    "dropout_input": ("dropout_input", float),
    "dropout_hidden": ("dropout_hidden", float),
    "data_dir": ("data_dir", str),
    "train_size": ("train_size", int),
    "val_size": ("val_size", int),
    "test_size": ("test_size", lambda s: int(s) if s.strip() else None),
    "out_dir": ("out_dir", str),
    "init_scale": ("init_scale", str),
    "clock": ("clock", str),
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse flat key-value config text; unknown keys are errors."""
    return ExperimentConfig(**_parse_flat(text, _CONFIG_KEYS, "config"))


def read_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def config_to_text(cfg: ExperimentConfig) -> str:
    """Render a config as parseable key-value text (inverse of parse)."""
    lines = []
    for key, (field_name, _) in _CONFIG_KEYS.items():
        value = getattr(cfg, field_name)
        if field_name == "sizes":
            value = format_size_chain(value)
        elif field_name == "seeds":
            value = ",".join(str(s) for s in value)
        elif value is None:
            value = ""
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RunSummary:
    """One row of runs.csv: the per-run numbers the comparisons use."""

    seed: int
    best_epoch: int
    best_val_err: float
    test_err_at_best: float
    first_epoch_val_err: float
    time_to_best_ms: float
    total_ms: float


@dataclass
class RunRecord:
    """Full history of one training run plus its selected-model scores."""

    seed: int
    rows: list[EpochRow]
    best_epoch: int
    best_val_err: float
    test_err_at_best: float
    first_epoch_val_err: float

    def __post_init__(self):
        if not self.rows:
            raise ValueError("a run record needs at least one epoch row")
        errs = [r.val_err for r in self.rows]
        lowest = min(errs)
        if self.best_val_err != lowest:
            raise ValueError(
                f"best_val_err {self.best_val_err} is not the row minimum {lowest}"
            )
        earliest = self.rows[errs.index(lowest)].epoch
        if self.best_epoch != earliest:
            raise ValueError(
                f"best_epoch {self.best_epoch} is not the earliest minimum "
                f"epoch {earliest}"
            )
        if self.first_epoch_val_err != self.rows[0].val_err:
            raise ValueError("first_epoch_val_err does not match row 1")

    @classmethod
    def from_result(cls, result: TrainResult, test_err: float,
                    seed: int) -> "RunRecord":
        return cls(seed, list(result.rows), result.best_epoch,
                   result.best_val_err, test_err, result.first_epoch_val_err)

    @property
    def time_to_best_ms(self) -> float:
        return next(r.elapsed_ms for r in self.rows if r.epoch == self.best_epoch)

    @property
    def total_ms(self) -> float:
        return self.rows[-1].elapsed_ms

    def summary(self) -> RunSummary:
        return RunSummary(self.seed, self.best_epoch, self.best_val_err,
                          self.test_err_at_best, self.first_epoch_val_err,
                          self.time_to_best_ms, self.total_ms)


def train_run(cfg: ExperimentConfig, seed: int,
              splits: Optional[DataSplits] = None,
              clock=None) -> tuple[RunRecord, TrainResult]:
    """One seeded run: init, train, select, score on the test set."""
    if splits is None:
        splits = cfg.load_data()
    if clock is None:
        clock = cfg.clock_fn()
    init_rng = RngStream(seed, STREAM_INIT)
    params = init_params(cfg.layer_specs(), init_rng, cfg.init_scale)
    result = train_model(
        params, splits.train, splits.validation, cfg.optimizer,
        cfg.optimizer_config(), epoch_cap=cfg.epochs,
        batch_size=cfg.batch_size, seed=seed, dropout=cfg.dropout_spec(),
        clock=clock,
    )
    test_err = classification_error(result.best_params, splits.test)
    return RunRecord.from_result(result, test_err, seed), result


def export_metrics(record: RunRecord) -> str:
    """Per-epoch CSV; see module docstring for the formatting contract."""
    lines = [METRICS_HEADER]
    for row in record.rows:
        lines.append("%d,%.17g,%.4f,%.3f" % (
            row.epoch, row.train_loss, row.val_err, row.elapsed_ms))
    return "\n".join(lines) + "\n"


def parse_metrics(text: str) -> list[EpochRow]:
    """Inverse of export_metrics (modulo the stated decimal quantization)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != METRICS_HEADER:
        raise ValueError(f"metrics CSV must start with {METRICS_HEADER!r}")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 4:
            raise ValueError(f"bad metrics row {ln!r}")
        rows.append(EpochRow(int(parts[0]), float(parts[1]),
                             float(parts[2]), float(parts[3])))
    return rows


def export_runs_csv(summaries: Sequence[RunSummary]) -> str:
    lines = [RUNS_HEADER]
    for s in summaries:
        lines.append("%d,%d,%.4f,%.4f,%.4f,%.3f,%.3f" % (
            s.seed, s.best_epoch, s.best_val_err, s.test_err_at_best,
            s.first_epoch_val_err, s.time_to_best_ms, s.total_ms))
    return "\n".join(lines) + "\n"


def parse_runs_csv(text: str) -> list[RunSummary]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != RUNS_HEADER:
        raise ValueError(f"runs CSV must start with {RUNS_HEADER!r}")
    out = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 7:
            raise ValueError(f"bad runs row {ln!r}")
        out.append(RunSummary(int(parts[0]), int(parts[1]), float(parts[2]),
                              float(parts[3]), float(parts[4]),
                              float(parts[5]), float(parts[6])))
    return out


_SUMMARY_COLUMNS = (
    ("min val err %", lambda s: 100.0 * s.best_val_err),
    ("epochs", lambda s: float(s.best_epoch)),
    ("time-to-best min", lambda s: s.time_to_best_ms / 60000.0),
    ("test err %", lambda s: 100.0 * s.test_err_at_best),
    ("1st epoch %", lambda s: 100.0 * s.first_epoch_val_err),
)


def format_summary_table(rows: Sequence[tuple[str, Sequence[RunSummary]]]) -> str:
    """Fixed-width table of per-seed medians, one line per labeled group."""
    headers = ["model"] + [name for name, _ in _SUMMARY_COLUMNS]
    table = [headers]
    for label, summaries in rows:
        if not summaries:
            raise ValueError(f"group {label!r} has no runs")
        cells = [label]
        for _, metric in _SUMMARY_COLUMNS:
            cells.append("%.2f" % statistics.median(metric(s) for s in summaries))
        table.append(cells)
    widths = [max(len(r[c]) for r in table) for c in range(len(headers))]
    lines = []
    for r in table:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


@dataclass
class ExperimentResult:
    cfg: ExperimentConfig
    records: list[RunRecord]

    def summaries(self) -> list[RunSummary]:
        return [r.summary() for r in self.records]

    def test_errors(self) -> list[float]:
        return [r.test_err_at_best for r in self.records]


def run_experiment(cfg: ExperimentConfig, splits: Optional[DataSplits] = None,
                   save: bool = True, label: str = "model") -> ExperimentResult:
    """Run every seed in the config; optionally write the artifact set."""
    if splits is None:
        splits = cfg.load_data()
    out = Path(cfg.out_dir)
    if save:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.txt").write_text(config_to_text(cfg))
    records = []
    for seed in cfg.seeds:
        record, result = train_run(cfg, seed, splits)
        records.append(record)
        if save:
            (out / f"metrics-seed{seed}.csv").write_text(export_metrics(record))
            save_checkpoint(out / f"model-seed{seed}.ckpt", result.best_params)
            opt_cfg = cfg.optimizer_config()
            save_checkpoint(out / f"final-seed{seed}.ckpt", result.final_params,
                            state=result.final_state,
                            cfg=opt_cfg if isinstance(opt_cfg, RpropConfig) else None)
    exp = ExperimentResult(cfg, records)
    if save:
        (out / "runs.csv").write_text(export_runs_csv(exp.summaries()))
        (out / "summary.txt").write_text(
            format_summary_table([(label, exp.summaries())]))
    return exp


@dataclass
class GroupStats:
    """mean/min/max over runs for each reported metric."""

    label: str
    n: int
    metrics: dict

    @classmethod
    def over(cls, label: str, summaries: Sequence[RunSummary]) -> "GroupStats":
        metrics = {}
        for name, values in (
            ("test_err", [s.test_err_at_best for s in summaries]),
            ("best_val_err", [s.best_val_err for s in summaries]),
            ("best_epoch", [float(s.best_epoch) for s in summaries]),
            ("first_epoch_val_err", [s.first_epoch_val_err for s in summaries]),
            ("time_to_best_ms", [s.time_to_best_ms for s in summaries]),
        ):
            metrics[name] = {
                "mean": statistics.fmean(values),
                "min": min(values),
                "max": max(values),
            }
        return cls(label, len(summaries), metrics)


@dataclass
class ComparisonResult:
    stats_a: GroupStats
    stats_b: GroupStats
    wilcoxon: WilcoxonResult
    confidence: float

    @property
    def significant(self) -> bool:
        return self.wilcoxon.significant(self.confidence)

    @property
    def better_label(self) -> Optional[str]:
        """Which group has lower mean paired test error, if significant."""
        if not self.significant:
            return None
        a = self.stats_a.metrics["test_err"]["mean"]
        b = self.stats_b.metrics["test_err"]["mean"]
        return self.stats_a.label if a <= b else self.stats_b.label


def compare_runs(summaries_a: Sequence[RunSummary],
                 summaries_b: Sequence[RunSummary],
                 confidence: float = 0.98,
                 label_a: str = "A", label_b: str = "B") -> ComparisonResult:
    """Paired comparison on test errors; pairing is by position."""
    if len(summaries_a) != len(summaries_b):
        raise ValueError(
            f"paired comparison needs equal run counts, got "
            f"{len(summaries_a)} and {len(summaries_b)}"
        )
    if len(summaries_a) < 2:
        raise ValueError("paired comparison needs at least 2 runs per side")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    err_a = np.array([s.test_err_at_best for s in summaries_a])
    err_b = np.array([s.test_err_at_best for s in summaries_b])
    wres = wilcoxon_signed_rank(err_a, err_b, alternative="two-sided")
    return ComparisonResult(GroupStats.over(label_a, summaries_a),
                            GroupStats.over(label_b, summaries_b),
                            wres, confidence)


@dataclass(frozen=True)
class EnsembleRunConfig:
    """Flat-file configuration for one ensemble build (see parse keys)."""

    kind: str = "bagging"
    size: int = 3
    member_sizes: tuple[int, ...] = (784, 300, 100, 10)
    activation: str = "rectifier"
    member_epochs: int = 10
    aggregation: str = "probability-average"
    stacker_epochs: int = 200
    stacker_hidden: Optional[tuple[int, ...]] = None
    eta_plus: float = 1.2
    eta_minus: float = 0.5
    delta_max: float = 50.0
    delta_min: float = 1e-6
    delta_init: float = 0.1
    batch_size: int = 128
    seed: int = 1
    dropout_input: float = 0.0
    dropout_hidden: float = 0.5
    stacker_dropout_hidden: float = 0.0
    data_dir: str = ""
    train_size: int = 5000
    val_size: int = 1000
    test_size: Optional[int] = None
    out_dir: str = "runs/ensemble"
    init_scale: str = "uniform-fan-in"
    clock: str = "wall"

    def __post_init__(self):
        object.__setattr__(self, "member_sizes",
                           tuple(int(s) for s in self.member_sizes))
        if self.stacker_hidden is not None:
            object.__setattr__(self, "stacker_hidden",
                               tuple(int(s) for s in self.stacker_hidden))
        if self.kind not in ENSEMBLE_KINDS:
            raise ValueError(f"kind must be one of {ENSEMBLE_KINDS}, "
                             f"got {self.kind!r}")
        if self.aggregation not in AGGREGATION_MODES:
            raise ValueError(f"aggregation must be one of {AGGREGATION_MODES}, "
                             f"got {self.aggregation!r}")
        if self.clock not in CLOCK_NAMES:
            raise ValueError(f"clock must be one of {CLOCK_NAMES}, "
                             f"got {self.clock!r}")

    def ensemble_spec(self) -> EnsembleSpec:
        return EnsembleSpec(self.kind, self.size, self.member_sizes,
                            self.member_epochs, self.aggregation)

    def stacker_spec(self) -> Optional[StackerSpec]:
        if self.kind != "stacking":
            return None
        if self.stacker_hidden is not None:
            return StackerSpec(self.stacker_hidden, self.stacker_epochs)
        return StackerSpec.for_members(self.size, self.stacker_epochs)

    def optimizer_config(self) -> RpropConfig:
        return RpropConfig(self.eta_plus, self.eta_minus, self.delta_max,
                           self.delta_min, self.delta_init)

    def member_dropout(self) -> Optional[DropoutSpec]:
        spec = DropoutSpec.for_sizes(self.member_sizes, self.dropout_hidden,
                                     self.dropout_input)
        return None if spec.is_off else spec

    def stacker_dropout(self) -> Optional[DropoutSpec]:
        if self.kind != "stacking" or self.stacker_dropout_hidden == 0.0:
            return None
        chain = self.stacker_spec().size_chain(
            self.size, self.member_sizes[-1])
        return DropoutSpec.for_sizes(chain, self.stacker_dropout_hidden, 0.0)

    def clock_fn(self):
        return wall_clock if self.clock == "wall" else counter_clock()

    def load_data(self) -> DataSplits:
        if not self.data_dir:
            raise ValueError("config has no data_dir; cannot load data")
        return load_splits_from_dir(self.data_dir, self.train_size,
                                    self.val_size, self.test_size)


def _parse_opt_sizes(s: str):
    return parse_size_chain(s) if s.strip() else None


_ENSEMBLE_KEYS = {
    "kind": ("kind", str),
    "size": ("size", int),
    "arch": ("member_sizes", parse_size_chain),
    "activation": ("activation", str),
    "member_epochs": ("member_epochs", int),
    "aggregation": ("aggregation", str),
    "stacker_epochs": ("stacker_epochs", int),
    "stacker_hidden": ("stacker_hidden", _parse_opt_sizes),
    "eta_plus": ("eta_plus", float),
    "eta_minus": ("eta_minus", float),
    "delta_max": ("delta_max", float),
    "delta_min": ("delta_min", float),
    "delta_init": ("delta_init", float),
    "batch_size": ("batch_size", int),
    "seed": ("seed", int),
    "dropout_input": ("dropout_input", float),
    "dropout_hidden": ("dropout_hidden", float),
    "stacker_dropout_hidden": ("stacker_dropout_hidden", float),
    "data_dir": ("data_dir", str),
    "train_size": ("train_size", int),
    "val_size": ("val_size", int),
    "test_size": ("test_size", lambda s: int(s) if s.strip() else None),
    "out_dir": ("out_dir", str),
    "init_scale": ("init_scale", str),
    "clock": ("clock", str),
}


def _parse_flat(text: str, keys: dict, what: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{what} line {lineno}: expected 'key = value', "
                             f"got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in keys:
            raise ValueError(f"{what} line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValueError(f"{what} line {lineno}: duplicate key {key!r}")
        field_name, convert = keys[key]
        try:
            values[field_name] = convert(value)
        except ValueError as exc:
            raise ValueError(
                f"{what} line {lineno}: bad value for {key!r}: {exc}"
            ) from None
    return values


def parse_ensemble_config(text: str) -> EnsembleRunConfig:
    return EnsembleRunConfig(**_parse_flat(text, _ENSEMBLE_KEYS,
                                           "ensemble spec"))


def read_ensemble_config(path) -> EnsembleRunConfig:
    return parse_ensemble_config(Path(path).read_text())


@dataclass
class EnsembleRunOutput:
    cfg: EnsembleRunConfig
    training: EnsembleTraining
    member_test_errs: list[float]
    ensemble_test_err: float


def run_ensemble(cfg: EnsembleRunConfig, splits: Optional[DataSplits] = None,
                 save: bool = True) -> EnsembleRunOutput:
    """Train an ensemble per config, score it, optionally save artifacts."""
    if splits is None:
        splits = cfg.load_data()
    training = train_ensemble(
        cfg.ensemble_spec(), splits, cfg.optimizer_config(), seed=cfg.seed,
        batch_size=cfg.batch_size, member_dropout=cfg.member_dropout(),
        stacker_spec=cfg.stacker_spec(), stacker_dropout=cfg.stacker_dropout(),
        init_scale=cfg.init_scale, clock=cfg.clock_fn(),
    )
    member_errs = [classification_error(m, splits.test)
                   for m in training.model.members]
    ens_err = training.model.classification_error(splits.test)
    out = EnsembleRunOutput(cfg, training, member_errs, ens_err)
    if save:
        out_dir = Path(cfg.out_dir)
        save_ensemble(out_dir, training, seed=cfg.seed)
        lines = [f"kind {cfg.kind}  size {cfg.size}  "
                 f"aggregation {cfg.aggregation}"]
        for i, err in enumerate(member_errs):
            lines.append("member %02d  test err %.4f" % (i, err))
        lines.append("ensemble   test err %.4f" % ens_err)
        (out_dir / "ensemble-summary.txt").write_text("\n".join(lines) + "\n")
    return out


def format_comparison(result: ComparisonResult) -> str:
    lines = []
    for stats in (result.stats_a, result.stats_b):
        lines.append(f"{stats.label} (n={stats.n}):")
        for name, agg in stats.metrics.items():
            lines.append("  %-20s mean %.4f  min %.4f  max %.4f"
                         % (name, agg["mean"], agg["min"], agg["max"]))
    w = result.wilcoxon
    lines.append(
        f"wilcoxon signed-rank on paired test errors: W+ = {w.statistic:g}, "
        f"p = {w.p_value:.6g} ({w.method}, n = {w.n_used})"
    )
    pct = 100.0 * result.confidence
    if result.significant:
        lines.append(f"significant at the {pct:g}% confidence level; "
                     f"better: {result.better_label}")
    else:
        lines.append(f"not significant at the {pct:g}% confidence level")
    return "\n".join(lines) + "\n"
