"""Multilayer perceptron: parameters, forward pass, loss, exact gradients.

Conventions fixed here and relied on by the optimizers and the trainer:

* weights are float64 matrices of shape (fan_in, fan_out), row-major;
  biases are float64 vectors of shape (fan_out,);
* a batch is a (n, fan_in) matrix, one example per row;
* the final layer's activation is applied and the result fed through a
  row-wise softmax, so class probabilities always sum to 1 per row;
* the loss is mean negative log likelihood over the batch, with the
  probability at the label floored at 1e-300 inside the log so the loss
  stays finite on pathological inputs;
* gradients are means over the batch (dividing by n once, in the
  softmax delta), so their scale does not depend on batch size.

Dropout enters through an optional node mask (see `resprop.dropout`):
masked node activations are zeroed and surviving ones multiplied by the
mask's per-layer scale (1/(1-rate) when sampled), so evaluation of the
full network uses the weights as-is. Gradients of weights incident to a
masked node are exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("rectifier", "logistic", "tanh", "identity")

LOSS_PROB_FLOOR = 1e-300


def _rectifier(z):
    return np.maximum(z, 0.0)


def _rectifier_deriv(z):
    return (z > 0.0).astype(np.float64)


def _logistic(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _logistic_deriv(z):
    s = _logistic(z)
    return s * (1.0 - s)


_ACT = {
    "rectifier": (_rectifier, _rectifier_deriv),
    "logistic": (_logistic, _logistic_deriv),
    "tanh": (np.tanh, lambda z: 1.0 - np.tanh(z) ** 2),
    "identity": (lambda z: z, lambda z: np.ones_like(z)),
}


@dataclass(frozen=True)
class LayerSpec:
    fan_in: int
    fan_out: int
    activation: str = "rectifier"

    def __post_init__(self):
        if self.fan_in < 1 or self.fan_out < 1:
            raise ValueError(
                f"layer dims must be >= 1, got {self.fan_in}x{self.fan_out}"
            )
        if self.activation not in _ACT:
            raise ValueError(
                f"unknown activation {self.activation!r}; "
                f"expected one of {ACTIVATIONS}"
            )


def chain_specs(sizes, hidden_activation: str = "rectifier") -> list[LayerSpec]:
    """Layer specs for a size chain like (784, 300, 100, 10).

    Hidden layers use `hidden_activation`; the output layer is identity
    (the softmax head in `forward` produces the class probabilities).
    """
    sizes = list(sizes)
    if len(sizes) < 2:
        raise ValueError("need at least input and output sizes")
    specs = []
    for i in range(len(sizes) - 1):
        act = hidden_activation if i < len(sizes) - 2 else "identity"
        specs.append(LayerSpec(sizes[i], sizes[i + 1], act))
    return specs


def _check_chain(specs):
    if not specs:
        raise ValueError("network needs at least one layer")
    for a, b in zip(specs, specs[1:]):
        if a.fan_out != b.fan_in:
            raise ValueError(
                f"layer chain broken: fan_out {a.fan_out} feeds fan_in {b.fan_in}"
            )


@dataclass
class NetworkParams:
    """Per-layer weight matrices and bias vectors."""

    specs: tuple[LayerSpec, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        self.specs = tuple(self.specs)
        _check_chain(self.specs)
        if not (len(self.specs) == len(self.weights) == len(self.biases)):
            raise ValueError("specs, weights and biases must align")
        for spec, w, b in zip(self.specs, self.weights, self.biases):
            if w.shape != (spec.fan_in, spec.fan_out):
                raise ValueError(
                    f"weight shape {w.shape} does not match spec "
                    f"{spec.fan_in}x{spec.fan_out}"
                )
            if b.shape != (spec.fan_out,):
                raise ValueError(
                    f"bias shape {b.shape} does not match fan_out {spec.fan_out}"
                )

    @property
    def num_layers(self) -> int:
        return len(self.specs)

    @property
    def num_classes(self) -> int:
        return self.specs[-1].fan_out

    @property
    def input_width(self) -> int:
        return self.specs[0].fan_in

    def num_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            self.specs,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )


@dataclass
class Gradients:
    """Loss gradients, shaped like the NetworkParams they came from."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]


def init_params(specs, rng, scale_rule: str = "uniform-fan-in") -> NetworkParams:
    """Fresh parameters: weights per `scale_rule`, biases zero.

    scale_rule is "uniform-fan-in" (entries uniform in +-1/sqrt(fan_in))
    or "fixed-range:R" (entries uniform in +-R). Weight entries are
    drawn in row-major order, layer by layer, so a given (seed, rule)
    always produces the same parameters.
    """
    specs = list(specs)
    _check_chain(specs)
    weights, biases = [], []
    for spec in specs:
        if scale_rule == "uniform-fan-in":
            r = 1.0 / np.sqrt(spec.fan_in)
        elif scale_rule.startswith("fixed-range:"):
            r = float(scale_rule.split(":", 1)[1])
            if r < 0:
                raise ValueError(f"fixed-range needs a non-negative range, got {r}")
        else:
            raise ValueError(
                f"unknown scale_rule {scale_rule!r}; "
                "expected 'uniform-fan-in' or 'fixed-range:R'"
            )
        weights.append(rng.uniform(-r, r, size=(spec.fan_in, spec.fan_out)))
        biases.append(np.zeros(spec.fan_out))
    return NetworkParams(tuple(specs), weights, biases)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with per-row max subtraction for overflow safety."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class ForwardPass:
    """Cached activations from one `forward` call, consumed by `backward`."""

    params: NetworkParams = field(repr=False)
    mask: object = field(repr=False)
    layer_inputs: list[np.ndarray] = field(repr=False)
    pre_activations: list[np.ndarray] = field(repr=False)
    probabilities: np.ndarray = field(repr=False)

    @property
    def batch_size(self) -> int:
        return self.probabilities.shape[0]


def _check_mask(params: NetworkParams, mask) -> None:
    node_sizes = [params.specs[0].fan_in] + [s.fan_out for s in params.specs]
    got = [len(m) for m in mask.node_masks]
    if got != node_sizes:
        raise ValueError(
            f"mask node layers {got} do not match network node layers {node_sizes}"
        )


def forward(params: NetworkParams, x: np.ndarray, mask=None) -> ForwardPass:
    """Run the network on a batch, optionally through a dropout mask.

    Returns the per-layer caches plus row-normalized class
    probabilities. With a mask, masked nodes contribute exactly zero
    downstream and surviving activations carry the mask's scale.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.input_width:
        raise ValueError(
            f"input shape {x.shape} does not match network input width "
            f"{params.input_width}"
        )
    if mask is not None:
        _check_mask(params, mask)
        a = x * (mask.node_masks[0] * mask.scales[0])
    else:
        a = x

    layer_inputs = [a]
    pre_activations = []
    n_layers = params.num_layers
    for l in range(n_layers):
        z = a @ params.weights[l] + params.biases[l]
        pre_activations.append(z)
        act, _ = _ACT[params.specs[l].activation]
        h = act(z)
        if l < n_layers - 1:
            if mask is not None:
                h = h * (mask.node_masks[l + 1] * mask.scales[l + 1])
            a = h
            layer_inputs.append(a)
        else:
            probs = softmax(h)
    return ForwardPass(params, mask, layer_inputs, pre_activations, probs)


def nll_loss(probabilities: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log likelihood of the labels under row probabilities."""
    probabilities = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels)
    if probabilities.ndim != 2:
        raise ValueError(f"probabilities must be 2-D, got shape {probabilities.shape}")
    n, k = probabilities.shape
    if labels.shape != (n,):
        raise ValueError(
            f"labels shape {labels.shape} does not match batch size {n}"
        )
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"labels must lie in [0, {k}), got range "
                         f"[{labels.min()}, {labels.max()}]")
    row_sums = probabilities.sum(axis=1)
    if np.abs(row_sums - 1.0).max() > 1e-6:
        raise ValueError("probability rows are not normalized")
    p = probabilities[np.arange(n), labels]
    return float(-np.mean(np.log(np.maximum(p, LOSS_PROB_FLOOR))))


def backward(params: NetworkParams, cache: ForwardPass, labels: np.ndarray,
             mask=None) -> Gradients:
    """Exact gradient of nll_loss(forward(params, x, mask), labels).

    `cache` must come from a `forward` call on these same `params` (and
    the same mask, when one is passed explicitly); anything else is a
    stale cache and is rejected.
    """
    if cache.params is not params:
        raise ValueError("activation cache was computed from different parameters")
    if mask is not None and cache.mask is not mask:
        raise ValueError("activation cache was computed under a different mask")
    mask = cache.mask

    labels = np.asarray(labels)
    n = cache.batch_size
    if labels.shape != (n,):
        raise ValueError(f"labels shape {labels.shape} does not match batch {n}")

    probs = cache.probabilities
    k = probs.shape[1]
    d_out = probs.copy()
    d_out[np.arange(n), labels] -= 1.0
    d_out /= n

    n_layers = params.num_layers
    grads_w: list[np.ndarray] = [None] * n_layers
    grads_b: list[np.ndarray] = [None] * n_layers

    _, dact = _ACT[params.specs[-1].activation]
    dz = d_out * dact(cache.pre_activations[-1])
    for l in range(n_layers - 1, -1, -1):
        a_prev = cache.layer_inputs[l]
        grads_w[l] = a_prev.T @ dz
        grads_b[l] = dz.sum(axis=0)
        if l > 0:
            da = dz @ params.weights[l].T
            if mask is not None:
                da = da * (mask.node_masks[l] * mask.scales[l])
            _, dact = _ACT[params.specs[l - 1].activation]
            dz = da * dact(cache.pre_activations[l - 1])
    return Gradients(grads_w, grads_b)
