"""Per-weight update kernels: SGD, classic Rprop, and mask-aware Rprop.

Rprop keeps a per-weight step size and a stored previous gradient. Each
step branches on the sign of prev_grad * grad:

* positive: grow the step size (capped at delta_max), move the weight
  against the gradient sign, store the gradient;
* negative: shrink the step size (floored at delta_min), leave the
  weight alone, and zero the stored gradient so the *next* step skips
  the adaptation ("no double punishment");
* zero: move by the current step size without adapting it, store the
  gradient.

Under dropout this zero branch fires for two extra reasons that have
nothing to do with backtracking: the weight's source node was muted (its
mask entry is 0) or its target node was muted (the gradient arriving
from above is exactly 0). Both stall step-size adaptation. The
mask-aware kernel `dropout_rprop_step` distinguishes the three causes:

* mask entry 0: freeze the weight entirely, with no move, no step-size
  change, stored gradient untouched;
* live weight, zero product, stored gradient zero: a deliberate
  post-backtracking skip or a fresh start, so move without adapting (and
  store the gradient, see note below);
* live weight, zero product, stored gradient nonzero: the current
  gradient is genuinely zero, so hold everything.

Note on bookkeeping: the zero-product move stores the current gradient
as prev_grad. Without that store the kernel could never reach the
adaptive branches; it mirrors what the classic kernel does in the same
branch.

sgn(0) is 0 exactly (both signed zeros), so a zero gradient never moves
a weight. Gradients are expected to be batch means, which keeps step
semantics independent of batch size. All kernels are pure: they return
fresh params/state and never mutate their inputs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .dropout import DropoutMask
from .network import Gradients, NetworkParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SgdConfig:
    learning_rate: float = 0.01
    minibatch_size: int = 128

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.minibatch_size < 1:
            raise ValueError(f"minibatch_size must be >= 1, got {self.minibatch_size}")


@dataclass(frozen=True)
class RpropConfig:
    """Rprop multipliers and step-size bounds.

    Defaults are the classic eta+ = 1.2, eta- = 0.5, delta_max = 50,
    delta_min = 1e-6. Values with eta+ <= 1 or eta- >= 1 invert the
    usual grow/shrink roles; they are accepted (some published
    configurations use them) but logged as a warning.
    """

    eta_plus: float = 1.2
    eta_minus: float = 0.5
    delta_max: float = 50.0
    delta_min: float = 1e-6
    delta_init: float = 0.1

    def __post_init__(self):
        for name in ("eta_plus", "eta_minus", "delta_max", "delta_min", "delta_init"):
            v = getattr(self, name)
            if not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")
        if not self.delta_min <= self.delta_init <= self.delta_max:
            raise ValueError(
                f"need delta_min <= delta_init <= delta_max, got "
                f"{self.delta_min}, {self.delta_init}, {self.delta_max}"
            )
        if self.eta_plus <= 1.0 or self.eta_minus >= 1.0:
            logger.warning(
                "unconventional Rprop multipliers eta_plus=%g, eta_minus=%g "
                "(classic semantics expect eta_minus < 1 < eta_plus)",
                self.eta_plus, self.eta_minus,
            )


@dataclass
class RpropState:
    """Per-weight step sizes and stored previous gradients."""

    delta_w: list[np.ndarray]
    delta_b: list[np.ndarray]
    prev_w: list[np.ndarray]
    prev_b: list[np.ndarray]

    def copy(self) -> "RpropState":
        return RpropState(
            [a.copy() for a in self.delta_w],
            [a.copy() for a in self.delta_b],
            [a.copy() for a in self.prev_w],
            [a.copy() for a in self.prev_b],
        )


def init_rprop_state(params: NetworkParams, cfg: RpropConfig) -> RpropState:
    """All step sizes at delta_init, stored gradients zero.

    With zero stored gradients the first step lands in the zero-product
    branch and moves every weight by -sgn(g) * delta_init.
    """
    return RpropState(
        [np.full_like(w, cfg.delta_init) for w in params.weights],
        [np.full_like(b, cfg.delta_init) for b in params.biases],
        [np.zeros_like(w) for w in params.weights],
        [np.zeros_like(b) for b in params.biases],
    )


def _sgn(g: np.ndarray) -> np.ndarray:
    """Sign with sgn(+-0.0) = +0.0 exactly."""
    return np.where(g == 0.0, 0.0, np.sign(g))


def _check_finite(grads: Gradients) -> None:
    for l, (gw, gb) in enumerate(zip(grads.weights, grads.biases)):
        for name, g in (("weights", gw), ("biases", gb)):
            if not np.isfinite(g).all():
                idx = np.argwhere(~np.isfinite(g))[0]
                raise ValueError(
                    f"non-finite gradient at layer {l} {name}, index "
                    f"{tuple(int(i) for i in idx)}"
                )


def _check_congruent(params: NetworkParams, grads: Gradients) -> None:
    for l, (w, gw, b, gb) in enumerate(
        zip(params.weights, grads.weights, params.biases, grads.biases)
    ):
        if w.shape != gw.shape or b.shape != gb.shape:
            raise ValueError(
                f"gradient shapes {gw.shape}/{gb.shape} do not match parameter "
                f"shapes {w.shape}/{b.shape} at layer {l}"
            )


def sgd_step(params: NetworkParams, grads: Gradients, cfg: SgdConfig) -> NetworkParams:
    """w <- w - learning_rate * g, elementwise."""
    _check_congruent(params, grads)
    _check_finite(grads)
    lr = cfg.learning_rate
    return NetworkParams(
        params.specs,
        [w - lr * g for w, g in zip(params.weights, grads.weights)],
        [b - lr * g for b, g in zip(params.biases, grads.biases)],
    )


def _rprop_arrays(w, g, delta, prev, cfg):
    """Classic kernel on one array; returns (w', delta', prev')."""
    prod = prev * g
    grow = prod > 0.0
    shrink = prod < 0.0
    delta_new = np.where(
        grow, np.minimum(delta * cfg.eta_plus, cfg.delta_max),
        np.where(shrink, np.maximum(delta * cfg.eta_minus, cfg.delta_min), delta),
    )
    w_new = np.where(shrink, w, w - _sgn(g) * delta_new)
    prev_new = np.where(shrink, 0.0, g)
    return w_new, delta_new, prev_new


def rprop_step(params: NetworkParams, grads: Gradients, state: RpropState,
               cfg: RpropConfig):
    """One classic Rprop transition. Returns (params', state')."""
    _check_congruent(params, grads)
    _check_state(params, state)
    _check_finite(grads)
    new_w, new_b = [], []
    ndw, ndb, npw, npb = [], [], [], []
    for l in range(params.num_layers):
        w, dw, pw = _rprop_arrays(
            params.weights[l], grads.weights[l], state.delta_w[l],
            state.prev_w[l], cfg,
        )
        b, db, pb = _rprop_arrays(
            params.biases[l], grads.biases[l], state.delta_b[l],
            state.prev_b[l], cfg,
        )
        new_w.append(w); ndw.append(dw); npw.append(pw)
        new_b.append(b); ndb.append(db); npb.append(pb)
    return (NetworkParams(params.specs, new_w, new_b),
            RpropState(ndw, ndb, npw, npb))


def _dropout_rprop_arrays(w, g, delta, prev, live, cfg):
    """Mask-aware kernel on one array; `live` is a 0/1 mask."""
    live = live != 0.0
    prod = prev * g
    grow = live & (prod > 0.0)
    shrink = live & (prod < 0.0)
    zero_fresh = live & (prod == 0.0) & (prev == 0.0)
    delta_new = np.where(
        grow, np.minimum(delta * cfg.eta_plus, cfg.delta_max),
        np.where(shrink, np.maximum(delta * cfg.eta_minus, cfg.delta_min), delta),
    )
    move = grow | zero_fresh
    w_new = np.where(move, w - _sgn(g) * delta_new, w)
    prev_new = np.where(move, g, np.where(shrink, 0.0, prev))
    return w_new, delta_new, prev_new


def dropout_rprop_step(params: NetworkParams, grads: Gradients, state: RpropState,
                       cfg: RpropConfig, mask: DropoutMask):
    """One mask-aware Rprop transition. Returns (params', state').

    The mask is mandatory: masked weights (and the biases of muted
    nodes) are frozen in place: weight, step size and stored gradient
    all unchanged. Use `rprop_step` when training without dropout.
    """
    if mask is None:
        raise ValueError("dropout_rprop_step requires a mask; "
                         "use rprop_step when training without one")
    _check_congruent(params, grads)
    _check_state(params, state)
    _check_finite(grads)
    wmasks = mask.weight_masks(params)
    bmasks = mask.bias_masks(params)
    new_w, new_b = [], []
    ndw, ndb, npw, npb = [], [], [], []
    for l in range(params.num_layers):
        w, dw, pw = _dropout_rprop_arrays(
            params.weights[l], grads.weights[l], state.delta_w[l],
            state.prev_w[l], wmasks[l], cfg,
        )
        b, db, pb = _dropout_rprop_arrays(
            params.biases[l], grads.biases[l], state.delta_b[l],
            state.prev_b[l], bmasks[l], cfg,
        )
        new_w.append(w); ndw.append(dw); npw.append(pw)
        new_b.append(b); ndb.append(db); npb.append(pb)
    return (NetworkParams(params.specs, new_w, new_b),
            RpropState(ndw, ndb, npw, npb))


def _check_state(params: NetworkParams, state: RpropState) -> None:
    for l, (w, d, p) in enumerate(zip(params.weights, state.delta_w, state.prev_w)):
        if d.shape != w.shape or p.shape != w.shape:
            raise ValueError(
                f"optimizer state shapes {d.shape}/{p.shape} do not match "
                f"weights {w.shape} at layer {l}"
            )
    for l, (b, d, p) in enumerate(zip(params.biases, state.delta_b, state.prev_b)):
        if d.shape != b.shape or p.shape != b.shape:
            raise ValueError(
                f"optimizer state shapes {d.shape}/{p.shape} do not match "
                f"biases {b.shape} at layer {l}"
            )
