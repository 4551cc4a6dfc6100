"""Central finite-difference verification of the analytic gradients.

Each coordinate is perturbed by +-h and the loss difference quotient is
compared against `backward`'s output. The relative error denominator is
floored (REL_FLOOR) because the difference quotient carries roundoff
noise of about eps * |loss| / h in absolute terms; without the floor,
coordinates whose true gradient is far below that noise would report
meaningless ratios. With loss of order 1 and h = 1e-5 the noise is
around 5e-11, so the 1e-5 floor keeps noise-induced relative error near
5e-6 while real defects (wrong term, wrong sign) still show up as
order-1 ratios.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Gradients, NetworkParams, backward, forward, nll_loss

DEFAULT_H = 1e-5
REL_FLOOR = 1e-5


def _loss_at(params: NetworkParams, x, labels, mask) -> float:
    return nll_loss(forward(params, x, mask).probabilities, labels)


def finite_difference_gradients(params: NetworkParams, x, labels,
                                h: float = DEFAULT_H,
                                mask=None) -> Gradients:
    """Central differences (f(w+h) - f(w-h)) / 2h for every coordinate."""
    if h <= 0:
        raise ValueError(f"step h must be positive, got {h}")
    work = params.copy()
    grads_w, grads_b = [], []
    for arrays, grads in ((work.weights, grads_w), (work.biases, grads_b)):
        for arr in arrays:
            g = np.zeros_like(arr)
            flat = arr.reshape(-1)
            gflat = g.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up = _loss_at(work, x, labels, mask)
                flat[i] = orig - h
                down = _loss_at(work, x, labels, mask)
                flat[i] = orig
                gflat[i] = (up - down) / (2.0 * h)
            grads.append(g)
    return Gradients(grads_w, grads_b)


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_err: float         # worst coordinate
    frac_within_tol: float     # fraction of coordinates at rel err <= tol
    n_coordinates: int
    tol: float
    worst_location: str        # "layer L weights[i,j]" style

    def passed(self, worst_tol: float = 1e-4) -> bool:
        return self.max_rel_err <= worst_tol


def gradient_check(params: NetworkParams, x, labels, h: float = DEFAULT_H,
                   tol: float = 1e-5, mask=None,
                   rel_floor: float = REL_FLOOR) -> GradCheckReport:
    """Compare analytic and finite-difference gradients coordinatewise.

    Relative error per coordinate is |a - f| / max(|a|, |f|, rel_floor).
    """
    cache = forward(params, x, mask)
    analytic = backward(params, cache, labels, mask)
    numeric = finite_difference_gradients(params, x, labels, h, mask)

    worst = -1.0
    worst_loc = ""
    within = 0
    total = 0
    pairs = [
        ("weights", analytic.weights, numeric.weights),
        ("biases", analytic.biases, numeric.biases),
    ]
    for name, a_list, f_list in pairs:
        for layer, (a, f) in enumerate(zip(a_list, f_list)):
            denom = np.maximum(np.maximum(np.abs(a), np.abs(f)), rel_floor)
            rel = np.abs(a - f) / denom
            total += rel.size
            within += int((rel <= tol).sum())
            local_worst = float(rel.max())
            if local_worst > worst:
                worst = local_worst
                idx = np.unravel_index(int(np.argmax(rel)), rel.shape)
                worst_loc = f"layer {layer} {name}{[int(i) for i in idx]}"
    return GradCheckReport(worst, within / total, total, tol, worst_loc)
