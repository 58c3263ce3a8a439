"""Layer graphs: shape inference, forward evaluation, reverse accumulation.

A network is an ordered list of nodes.  Node ``i`` consumes the outputs of
earlier nodes (or the network input, index -1), which makes the graph acyclic
by construction while still allowing the skip connections the U-Nets need.
The last node is the network output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .initializers import truncated_normal
from .layers import Layer, ShapeError

INPUT = -1


@dataclass
class Node:
    layer: Layer
    inputs: tuple[int, ...] = (INPUT,)


class Network:
    def __init__(self, nodes: list[Node], input_shape: tuple[int, ...],
                 dtype=np.float32):
        self.nodes = nodes
        self.input_shape = tuple(input_shape)
        self.dtype = np.dtype(dtype)
        self.shapes: list[tuple] = []
        for i, node in enumerate(nodes):
            for j in node.inputs:
                if not (j == INPUT or 0 <= j < i):
                    raise ShapeError(f"node {i} reads from invalid node {j}")
            in_shapes = [self.input_shape if j == INPUT else self.shapes[j]
                         for j in node.inputs]
            self.shapes.append(node.layer.output_shape(in_shapes))
        self.output_shape = self.shapes[-1] if nodes else self.input_shape
        self.params: list[list[np.ndarray]] = [
            [np.zeros(s, dtype=self.dtype) for s in self._param_shapes(i)]
            for i in range(len(nodes))
        ]

    def _param_shapes(self, i: int) -> list[tuple]:
        node = self.nodes[i]
        in_shapes = [self.input_shape if j == INPUT else self.shapes[j]
                     for j in node.inputs]
        return node.layer.param_shapes(in_shapes)

    def initialize(self, rng, std: float = 0.05) -> "Network":
        """Truncated-normal weights, zero biases, in graph order."""
        for plist in self.params:
            if plist:
                plist[0][...] = truncated_normal(plist[0].shape, std, rng)
                for extra in plist[1:]:
                    extra[...] = 0.0
        return self

    def num_weights(self) -> int:
        return sum(p.size for plist in self.params for p in plist)

    def flat_params(self) -> list[np.ndarray]:
        return [p for plist in self.params for p in plist]

    def set_flat_params(self, flat: list[np.ndarray]) -> None:
        it = iter(flat)
        for plist in self.params:
            for k in range(len(plist)):
                new = next(it)
                if new.shape != plist[k].shape:
                    raise ShapeError(
                        f"parameter shape {new.shape} != expected {plist[k].shape}")
                plist[k] = np.asarray(new, dtype=self.dtype)

    def astype(self, dtype) -> "Network":
        clone = Network(self.nodes, self.input_shape, dtype=dtype)
        clone.set_flat_params([p.astype(dtype) for p in self.flat_params()])
        return clone

    def forward(self, x: np.ndarray, keep: bool = False):
        """Evaluate the graph; with keep=True also return activations/caches
        for a subsequent backward call."""
        x = np.asarray(x, dtype=self.dtype)
        if x.shape[1:] != self.input_shape:
            raise ShapeError(f"input shape {x.shape[1:]} != {self.input_shape}")
        acts: list[np.ndarray] = []
        caches: list = []
        for i, node in enumerate(self.nodes):
            xs = [x if j == INPUT else acts[j] for j in node.inputs]
            y, cache = node.layer.forward(xs, self.params[i])
            if y.shape[1:] != self.shapes[i]:
                raise ShapeError(
                    f"node {i} ({node.layer.kind}) produced {y.shape[1:]}, "
                    f"inferred {self.shapes[i]}")
            acts.append(y)
            caches.append(cache if keep else None)
        out = acts[-1] if self.nodes else x
        if keep:
            return out, (x, acts, caches)
        return out

    def backward(self, dy: np.ndarray, state) -> tuple[list[np.ndarray], np.ndarray]:
        """Reverse pass from d(loss)/d(output); returns (flat param grads, dx)."""
        x, acts, caches = state
        grads_out: list = [None] * len(self.nodes)
        dx_input = None
        grads_out[-1] = np.asarray(dy, dtype=acts[-1].dtype)
        param_grads: list[list[np.ndarray]] = [None] * len(self.nodes)
        for i in range(len(self.nodes) - 1, -1, -1):
            node = self.nodes[i]
            g = grads_out[i]
            if g is None:
                g = np.zeros_like(acts[i])  # unused branch
            xs = [x if j == INPUT else acts[j] for j in node.inputs]
            dxs, dps = node.layer.backward(g, xs, self.params[i], caches[i])
            param_grads[i] = dps
            for j, dxj in zip(node.inputs, dxs):
                if j == INPUT:
                    dx_input = dxj if dx_input is None else dx_input + dxj
                elif grads_out[j] is None:
                    grads_out[j] = dxj
                else:
                    grads_out[j] = grads_out[j] + dxj
        if dx_input is None:
            dx_input = np.zeros_like(x)
        flat = [g for glist in param_grads for g in glist]
        return flat, dx_input
