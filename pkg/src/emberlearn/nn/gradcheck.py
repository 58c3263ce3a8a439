"""Finite-difference verification of analytic gradients.

Checks run in float64 with central differences (h = 1e-5) against the exact
backward pass, using a fixed random projection of the network output as the
scalar loss so every output element contributes.  The per-tensor statistic is
the maximum relative error max |a - n| / max(|a|, |n|, floor).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import (ConcatChannels, Conv2D, FullyConnected, MaxPool2D, ReLU,
                     Reshape, TransposeConv2D)
from .network import INPUT, Network, Node

DEFAULT_H = 1e-5
DEFAULT_TOL = 1e-6
_FLOOR = 1e-8


@dataclass
class GradReport:
    name: str  # "input" or "node{i}/{kind}/p{j}"
    max_rel_err: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err < self.tolerance


def _loss_and_grads(net: Network, x: np.ndarray, projection: np.ndarray):
    y, state = net.forward(x, keep=True)
    loss = float((y * projection).sum())
    param_grads, dx = net.backward(projection, state)
    return loss, param_grads, dx


def _loss_only(net: Network, x: np.ndarray, projection: np.ndarray) -> float:
    return float((net.forward(x) * projection).sum())


def _max_rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), _FLOOR)
    return float((np.abs(analytic - numeric) / denom).max())


def check_network(net: Network, x: np.ndarray, seed: int = 0,
                  h: float = DEFAULT_H, tolerance: float = DEFAULT_TOL) -> list[GradReport]:
    """Compare analytic and central-difference gradients for every parameter
    tensor and the input; returns one report per tensor."""
    net64 = net.astype(np.float64)
    x = np.asarray(x, dtype=np.float64)
    proj_rng = np.random.default_rng(seed)
    projection = proj_rng.standard_normal((x.shape[0],) + net64.output_shape)
    _, analytic_params, analytic_dx = _loss_and_grads(net64, x, projection)

    reports: list[GradReport] = []
    flat_idx = 0
    for i, node in enumerate(net64.nodes):
        for j in range(len(net64.params[i])):
            tensor = net64.params[i][j]
            numeric = np.zeros_like(tensor)
            flat = tensor.reshape(-1)
            num_flat = numeric.reshape(-1)
            for k in range(flat.size):
                orig = flat[k]
                flat[k] = orig + h
                up = _loss_only(net64, x, projection)
                flat[k] = orig - h
                down = _loss_only(net64, x, projection)
                flat[k] = orig
                num_flat[k] = (up - down) / (2 * h)
            reports.append(GradReport(
                name=f"node{i}/{node.layer.kind}/p{j}",
                max_rel_err=_max_rel_err(analytic_params[flat_idx], numeric),
                tolerance=tolerance,
            ))
            flat_idx += 1

    numeric_dx = np.zeros_like(x)
    xflat = x.reshape(-1)
    nflat = numeric_dx.reshape(-1)
    for k in range(xflat.size):
        orig = xflat[k]
        xflat[k] = orig + h
        up = _loss_only(net64, x, projection)
        xflat[k] = orig - h
        down = _loss_only(net64, x, projection)
        xflat[k] = orig
        nflat[k] = (up - down) / (2 * h)
    reports.append(GradReport("input", _max_rel_err(analytic_dx, numeric_dx), tolerance))
    return reports


def _random_input(shape, rng, relu_safe=False):
    x = rng.standard_normal((2,) + shape)
    if relu_safe:
        x = x + 0.3 * np.sign(x)  # keep entries away from the ReLU kink
        x[x == 0] = 0.3
    return x


def layer_suite(seeds: int = 10, tolerance: float = DEFAULT_TOL) -> list[GradReport]:
    """Gradcheck every layer kind on small random tensors across seeds."""
    cases = {
        "conv2d_same": (Network([Node(Conv2D(3, 4, 3, padding="same"))], (4, 4, 3)), False),
        "conv2d_valid": (Network([Node(Conv2D(3, 4, 3, padding="valid"))], (6, 6, 3)), False),
        "conv2d_strided": (Network([Node(Conv2D(2, 3, 3, stride=2, padding="valid"))],
                                   (7, 7, 2)), False),
        "maxpool2d": (Network([Node(MaxPool2D())], (4, 4, 3)), False),
        "transpose_conv2d": (Network([Node(TransposeConv2D(3, 2, 2, 2))], (4, 4, 3)), False),
        "transpose_conv2d_x4": (Network([Node(TransposeConv2D(2, 1, 4, 4))], (3, 3, 2)), False),
        "fully_connected": (Network([Node(FullyConnected(6, 5))], (6,)), False),
        "relu": (Network([Node(ReLU())], (4, 4, 2)), True),
        "concat_channels": (Network([Node(ReLU()), Node(Conv2D(2, 3, 3), (INPUT,)),
                                     Node(ConcatChannels(), (0, 1))], (4, 4, 2)), True),
        "reshape": (Network([Node(Reshape((32,))), Node(FullyConnected(32, 4), (0,))],
                            (4, 4, 2)), False),
        "composite": (Network([
            Node(Conv2D(2, 4, 3)), Node(ReLU(), (0,)), Node(MaxPool2D(), (1,)),
            Node(TransposeConv2D(4, 2, 2, 2), (2,)), Node(ConcatChannels(), (3, INPUT)),
            Node(Conv2D(4, 1, 1), (4,)),
        ], (4, 4, 2)), True),
    }
    reports: list[GradReport] = []
    for name, (net, relu_safe) in cases.items():
        for seed in range(seeds):
            rng = np.random.default_rng(1000 + seed)
            net.initialize(_NumpyInitRng(rng), std=0.3)
            x = _random_input(net.input_shape, rng, relu_safe)
            for rep in check_network(net, x, seed=seed):
                reports.append(GradReport(f"{name}[s{seed}]/{rep.name}",
                                          rep.max_rel_err, rep.tolerance))
    return reports


class _NumpyInitRng:
    """Adapter so tests can initialize from a numpy Generator (uniforms only)."""

    def __init__(self, gen):
        self.gen = gen

    def uniforms(self, n):
        return self.gen.random(n).tolist()


def adjoint_gap(seed: int = 0, kernel: int = 2, stride: int = 2) -> float:
    """| <conv(x), y> - <x, tconv(y)> | for a shared kernel, random tensors.

    conv2d(valid, stride s) and transpose_conv2d(stride s) are exact adjoints,
    so this gap is zero up to rounding.
    """
    rng = np.random.default_rng(seed)
    cin, cout = 3, 2
    h = 6
    w = rng.standard_normal((kernel, kernel, cin, cout))
    conv = Conv2D(cin, cout, kernel, stride=stride, padding="valid")
    tconv = TransposeConv2D(cin=cout, cout=cin, kernel=kernel, stride=stride)
    # transpose_conv's kernel (cout->cin here) must share values with conv's
    wt = np.ascontiguousarray(np.swapaxes(w, 2, 3))
    x = rng.standard_normal((2, h, h, cin))
    ho = (h - kernel) // stride + 1
    y = rng.standard_normal((2, ho, ho, cout))
    cx, _ = conv.forward([x], [w, np.zeros(cout)])
    ty, _ = tconv.forward([y], [wt, np.zeros(cin)])
    return abs(float((cx * y).sum()) - float((x * ty).sum()))
