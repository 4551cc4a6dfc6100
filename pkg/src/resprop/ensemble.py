"""Bagging and stacking over independently trained network members.

Bagging trains each member on a bootstrap resample of the training set
and aggregates by majority vote or probability average. Stacking trains
members on the training set itself, then fits a second network on the
members' concatenated output probabilities. The stacker is fitted on
member outputs over the validation set (fitting it on member training
outputs invites leakage; the fitting set is a documented knob of this
implementation) and its hidden sizes default to (200 * N, 100 * N).

Members are independent: member i draws from RNG stream base
MEMBER_STREAM_STRIDE * (i + 1), the stacker from the base after the
last member, so trajectories never share a stream. Vote ties go to the
lowest class index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .data import Dataset, DataSplits
from .dropout import DropoutSpec
from .network import NetworkParams, chain_specs, forward, init_params
from .optimizers import RpropConfig
from .tensor import RngStream
from .training import (
    MEMBER_STREAM_STRIDE,
    STREAM_INIT,
    STREAM_RESAMPLE,
    TrainResult,
    predict_probabilities,
    train_model,
)
from . import serialization

ENSEMBLE_KINDS = ("bagging", "stacking")
AGGREGATION_MODES = ("majority-vote", "probability-average")

MANIFEST_NAME = "ensemble.json"


@dataclass(frozen=True)
class EnsembleSpec:
    """What to build: member count, member shape, and aggregation."""

    kind: str
    size: int
    member_sizes: tuple[int, ...]
    member_epoch_cap: int
    aggregation: str = "probability-average"

    def __post_init__(self):
        if self.kind not in ENSEMBLE_KINDS:
            raise ValueError(
                f"kind must be one of {ENSEMBLE_KINDS}, got {self.kind!r}"
            )
        if self.size < 1:
            raise ValueError(f"ensemble size must be >= 1, got {self.size}")
        if self.member_epoch_cap < 1:
            raise ValueError(
                f"member epoch cap must be >= 1, got {self.member_epoch_cap}"
            )
        if self.aggregation not in AGGREGATION_MODES:
            raise ValueError(
                f"aggregation must be one of {AGGREGATION_MODES}, "
                f"got {self.aggregation!r}"
            )
        object.__setattr__(self, "member_sizes",
                           tuple(int(s) for s in self.member_sizes))

    @property
    def num_classes(self) -> int:
        return self.member_sizes[-1]


@dataclass(frozen=True)
class StackerSpec:
    """Second-space network: hidden sizes, epoch cap, trained mod-rprop."""

    hidden_sizes: tuple[int, ...]
    epoch_cap: int = 200

    def __post_init__(self):
        if self.epoch_cap < 1:
            raise ValueError(f"stacker epoch cap must be >= 1, got {self.epoch_cap}")
        object.__setattr__(self, "hidden_sizes",
                           tuple(int(s) for s in self.hidden_sizes))

    @classmethod
    def for_members(cls, n_members: int, epoch_cap: int = 200) -> "StackerSpec":
        return cls((200 * n_members, 100 * n_members), epoch_cap)

    def size_chain(self, n_members: int, n_classes: int) -> tuple[int, ...]:
        return (n_members * n_classes,) + self.hidden_sizes + (n_classes,)


def bootstrap_resample(data: Dataset, rng: RngStream) -> Dataset:
    """Sample len(data) examples with replacement, preserving pairing."""
    n = len(data)
    if n == 0:
        raise ValueError("cannot resample an empty dataset")
    idx = rng.integers(n, size=n)
    return data.subset(idx)


def _check_member_outputs(member_outputs) -> list[np.ndarray]:
    outs = [np.asarray(m, dtype=np.float64) for m in member_outputs]
    if not outs:
        raise ValueError("need at least one member output")
    shape = outs[0].shape
    if len(shape) != 2:
        raise ValueError(f"member outputs must be 2-D, got shape {shape}")
    for i, m in enumerate(outs):
        if m.shape != shape:
            raise ValueError(
                f"member {i} output shape {m.shape} differs from {shape}"
            )
    return outs


def aggregate(member_outputs, mode: str = "probability-average") -> np.ndarray:
    """Combine member probability matrices into predicted labels.

    majority-vote counts each member's argmax; probability-average
    takes the argmax of the mean matrix. Ties resolve to the lowest
    class index in both modes.
    """
    outs = _check_member_outputs(member_outputs)
    if mode == "probability-average":
        return np.argmax(np.mean(outs, axis=0), axis=1)
    if mode == "majority-vote":
        n, k = outs[0].shape
        counts = np.zeros((n, k), dtype=np.int64)
        rows = np.arange(n)
        for m in outs:
            counts[rows, np.argmax(m, axis=1)] += 1
        return np.argmax(counts, axis=1)
    raise ValueError(
        f"aggregation mode must be one of {AGGREGATION_MODES}, got {mode!r}"
    )


def stack_features(member_outputs) -> np.ndarray:
    """Concatenate member outputs horizontally, member order preserved."""
    outs = _check_member_outputs(member_outputs)
    return np.concatenate(outs, axis=1)


@dataclass
class EnsembleModel:
    """Trained members (selected checkpoints) plus optional stacker."""

    spec: EnsembleSpec
    members: list[NetworkParams]
    stacker: Optional[NetworkParams] = None

    def __post_init__(self):
        if len(self.members) != self.spec.size:
            raise ValueError(
                f"spec promises {self.spec.size} members, got {len(self.members)}"
            )
        if self.spec.kind == "stacking" and self.stacker is None:
            raise ValueError("stacking ensemble needs a stacker network")

    def member_probabilities(self, images: np.ndarray) -> list[np.ndarray]:
        return [predict_probabilities(m, images) for m in self.members]

    def predict(self, images: np.ndarray) -> np.ndarray:
        probs = self.member_probabilities(images)
        if self.spec.kind == "bagging":
            return aggregate(probs, self.spec.aggregation)
        features = stack_features(probs)
        out = forward(self.stacker, features).probabilities
        return np.argmax(out, axis=1)

    def classification_error(self, data: Dataset) -> float:
        return float(np.mean(self.predict(data.images) != data.labels))


@dataclass
class EnsembleTraining:
    """Training-time record: the model plus every member's history."""

    model: EnsembleModel
    member_results: list[TrainResult]
    stacker_result: Optional[TrainResult] = None


def member_stream_base(index: int) -> int:
    return MEMBER_STREAM_STRIDE * (index + 1)


def train_ensemble(spec: EnsembleSpec, splits: DataSplits, opt_cfg: RpropConfig,
                   *, seed: int, batch_size: int = 128,
                   member_dropout: Optional[DropoutSpec] = None,
                   stacker_spec: Optional[StackerSpec] = None,
                   stacker_dropout: Optional[DropoutSpec] = None,
                   init_scale: str = "uniform-fan-in",
                   clock=None) -> EnsembleTraining:
    """Train all members (and the stacker, for stacking ensembles).

    Members train with mod-rprop under `opt_cfg`; bagging members each
    see their own bootstrap resample, stacking members the training set
    itself. Every member is model-selected on the validation set. The
    stacker fits member outputs on the validation set against the
    validation labels.
    """
    member_results: list[TrainResult] = []
    for i in range(spec.size):
        base = member_stream_base(i)
        init_rng = RngStream(seed, base + STREAM_INIT)
        params = init_params(chain_specs(spec.member_sizes), init_rng, init_scale)
        if spec.kind == "bagging":
            resample_rng = RngStream(seed, base + STREAM_RESAMPLE)
            member_train = bootstrap_resample(splits.train, resample_rng)
        else:
            member_train = splits.train
        result = train_model(
            params, member_train, splits.validation, "mod-rprop", opt_cfg,
            epoch_cap=spec.member_epoch_cap, batch_size=batch_size,
            seed=seed, stream_base=base, dropout=member_dropout, clock=clock,
        )
        member_results.append(result)

    members = [r.best_params for r in member_results]
    stacker_result = None
    stacker = None
    if spec.kind == "stacking":
        if stacker_spec is None:
            stacker_spec = StackerSpec.for_members(spec.size)
        base = member_stream_base(spec.size)
        chain = stacker_spec.size_chain(spec.size, spec.num_classes)
        init_rng = RngStream(seed, base + STREAM_INIT)
        stacker_params = init_params(chain_specs(chain), init_rng, init_scale)
        probs = [predict_probabilities(m, splits.validation.images)
                 for m in members]
        stack_data = Dataset(stack_features(probs), splits.validation.labels)
        stacker_result = train_model(
            stacker_params, stack_data, stack_data, "mod-rprop", opt_cfg,
            epoch_cap=stacker_spec.epoch_cap, batch_size=batch_size,
            seed=seed, stream_base=base, dropout=stacker_dropout, clock=clock,
        )
        stacker = stacker_result.best_params

    model = EnsembleModel(spec, members, stacker)
    return EnsembleTraining(model, member_results, stacker_result)


def save_ensemble(out_dir, training: EnsembleTraining, *, seed: int) -> Path:
    """Write member/stacker checkpoints plus a JSON manifest; returns
    the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = training.model.spec
    member_files = []
    for i, params in enumerate(training.model.members):
        name = f"member-{i:02d}.ckpt"
        serialization.save_checkpoint(out_dir / name, params)
        member_files.append(name)
    stacker_file = None
    if training.model.stacker is not None:
        stacker_file = "stacker.ckpt"
        serialization.save_checkpoint(out_dir / stacker_file,
                                      training.model.stacker)
    manifest = {
        "kind": spec.kind,
        "size": spec.size,
        "member_sizes": list(spec.member_sizes),
        "member_epoch_cap": spec.member_epoch_cap,
        "aggregation": spec.aggregation,
        "seed": seed,
        "member_checkpoints": member_files,
        "member_stream_bases": [member_stream_base(i) for i in range(spec.size)],
        "resample_stream_offset": STREAM_RESAMPLE,
        "stacker_checkpoint": stacker_file,
    }
    path = out_dir / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def load_ensemble(ens_dir) -> EnsembleModel:
    """Rebuild an EnsembleModel from a directory written by save_ensemble."""
    ens_dir = Path(ens_dir)
    manifest = json.loads((ens_dir / MANIFEST_NAME).read_text())
    spec = EnsembleSpec(
        kind=manifest["kind"],
        size=manifest["size"],
        member_sizes=tuple(manifest["member_sizes"]),
        member_epoch_cap=manifest["member_epoch_cap"],
        aggregation=manifest["aggregation"],
    )
    members = []
    for name in manifest["member_checkpoints"]:
        params, _, _ = serialization.load_checkpoint(ens_dir / name)
        members.append(params)
    stacker = None
    if manifest.get("stacker_checkpoint"):
        stacker, _, _ = serialization.load_checkpoint(
            ens_dir / manifest["stacker_checkpoint"])
    return EnsembleModel(spec, members, stacker)
