"""Versioned binary checkpoint container for models and optimizer state.

Byte layout (all integers little-endian, all floats IEEE-754 float64
little-endian; stable across releases, bump the version on any change):

    magic      4 bytes   b"RPN1"
    version    uint16    currently 1
    n_layers   uint32
    per layer: fan_in uint32, fan_out uint32, activation uint8
               (0 identity, 1 rectifier, 2 logistic, 3 tanh)
    n_sections uint32
    per section:
               tag      8 bytes ASCII, space-padded
               length   uint64 payload byte count
               payload

Section payloads holding per-weight arrays use one fixed layout: for
each layer in order, the weight matrix row-major (fan_in*fan_out
float64) followed by the bias vector (fan_out float64).

    "params  "  model weights and biases (always present)
    "delta   "  Rprop per-weight step sizes (optional)
    "prevgrad"  Rprop stored previous gradients (optional)
    "rprophp "  5 float64: eta_plus, eta_minus, delta_max, delta_min,
                delta_init (optional, present with the state sections)

Unknown section tags are skipped on read, so newer files with extra
sections stay loadable.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .network import LayerSpec, NetworkParams
from .optimizers import RpropConfig, RpropState

MAGIC = b"RPN1"
VERSION = 1

_ACT_CODES = {"identity": 0, "rectifier": 1, "logistic": 2, "tanh": 3}
_ACT_NAMES = {v: k for k, v in _ACT_CODES.items()}


def _pack_arrays(weights, biases) -> bytes:
    parts = []
    for w, b in zip(weights, biases):
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return b"".join(parts)


def _unpack_arrays(payload: bytes, specs):
    weights, biases = [], []
    offset = 0
    for spec in specs:
        wn = spec.fan_in * spec.fan_out * 8
        weights.append(
            np.frombuffer(payload, dtype="<f8", count=spec.fan_in * spec.fan_out,
                          offset=offset).reshape(spec.fan_in, spec.fan_out).copy()
        )
        offset += wn
        biases.append(
            np.frombuffer(payload, dtype="<f8", count=spec.fan_out,
                          offset=offset).copy()
        )
        offset += spec.fan_out * 8
    if offset != len(payload):
        raise ValueError(
            f"array section length {len(payload)} does not match the "
            f"declared layer shapes (expected {offset})"
        )
    return weights, biases


def _section(tag: str, payload: bytes) -> bytes:
    return tag.encode("ascii").ljust(8) + struct.pack("<Q", len(payload)) + payload


def save_checkpoint(path, params: NetworkParams,
                    state: RpropState | None = None,
                    cfg: RpropConfig | None = None) -> None:
    """Write a checkpoint; include optimizer state/config when given."""
    head = [MAGIC, struct.pack("<HI", VERSION, params.num_layers)]
    for spec in params.specs:
        head.append(struct.pack("<IIB", spec.fan_in, spec.fan_out,
                                _ACT_CODES[spec.activation]))
    sections = [_section("params", _pack_arrays(params.weights, params.biases))]
    if state is not None:
        sections.append(_section("delta", _pack_arrays(state.delta_w, state.delta_b)))
        sections.append(_section("prevgrad", _pack_arrays(state.prev_w, state.prev_b)))
    if cfg is not None:
        hp = struct.pack("<5d", cfg.eta_plus, cfg.eta_minus, cfg.delta_max,
                         cfg.delta_min, cfg.delta_init)
        sections.append(_section("rprophp", hp))
    head.append(struct.pack("<I", len(sections)))
    Path(path).write_bytes(b"".join(head) + b"".join(sections))


def load_checkpoint(path):
    """Read a checkpoint: (params, state or None, rprop config or None)."""
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError(f"not a checkpoint file: bad magic {data[:4]!r}")
    version, n_layers = struct.unpack_from("<HI", data, 4)
    if version != VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    offset = 10
    specs = []
    for _ in range(n_layers):
        fan_in, fan_out, act = struct.unpack_from("<IIB", data, offset)
        offset += 9
        if act not in _ACT_NAMES:
            raise ValueError(f"unknown activation code {act} in checkpoint")
        specs.append(LayerSpec(fan_in, fan_out, _ACT_NAMES[act]))
    (n_sections,) = struct.unpack_from("<I", data, offset)
    offset += 4
    sections = {}
    for _ in range(n_sections):
        tag = data[offset:offset + 8].decode("ascii").strip()
        (length,) = struct.unpack_from("<Q", data, offset + 8)
        start = offset + 16
        if start + length > len(data):
            raise ValueError(
                f"truncated checkpoint: section {tag!r} declares {length} "
                f"bytes but the file ends after {len(data) - start}"
            )
        sections[tag] = data[start:start + length]
        offset = start + length

    if "params" not in sections:
        raise ValueError("checkpoint is missing its params section")
    weights, biases = _unpack_arrays(sections["params"], specs)
    params = NetworkParams(tuple(specs), weights, biases)

    state = None
    if "delta" in sections and "prevgrad" in sections:
        dw, db = _unpack_arrays(sections["delta"], specs)
        pw, pb = _unpack_arrays(sections["prevgrad"], specs)
        state = RpropState(dw, db, pw, pb)

    cfg = None
    if "rprophp" in sections:
        vals = struct.unpack("<5d", sections["rprophp"])
        cfg = RpropConfig(*vals)
    return params, state, cfg
