"""Dense-tensor layers with hand-derived backward passes.

Arrays carry an explicit batch dimension: images are (N, H, W, C), vectors
(N, D); the shapes the layer API reports are per-sample.  Convolutions are
cross-correlations backed by an im2col matmul; the column matrix is rebuilt
in backward rather than cached, trading one extra copy for a flat memory
profile.  Every layer returns exact analytic gradients (verified against
central finite differences by the gradcheck module).

Parameter convention: params[0] is the weight tensor (drawn from a truncated
normal by the initializer), params[1] the bias (zeros).  Parameter-free
layers have an empty list.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class ShapeError(ValueError):
    """Raised when a layer graph cannot be shape-checked at build time."""


class Layer:
    kind = "base"

    def output_shape(self, in_shapes: list[tuple]) -> tuple:
        raise NotImplementedError

    def param_shapes(self, in_shapes: list[tuple]) -> list[tuple]:
        return []

    def forward(self, xs: list[np.ndarray], params: list[np.ndarray]):
        raise NotImplementedError

    def backward(self, dy: np.ndarray, xs, params, cache):
        raise NotImplementedError

    def hyper(self) -> dict:
        return {}

    def _one(self, in_shapes):
        if len(in_shapes) != 1:
            raise ShapeError(f"{self.kind} takes one input, got {len(in_shapes)}")
        return in_shapes[0]


def _im2col(xp: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    """(N, Hp, Wp, C) -> contiguous (N, Ho, Wo, kh, kw, C) patch tensor."""
    v = sliding_window_view(xp, (kh, kw), axis=(1, 2))  # (N, H', W', C, kh, kw)
    v = v[:, ::stride, ::stride]
    return np.ascontiguousarray(v.transpose(0, 1, 2, 4, 5, 3))


class Conv2D(Layer):
    kind = "conv2d"

    def __init__(self, cin: int, cout: int, kernel: int, stride: int = 1,
                 padding: str = "same"):
        if padding not in ("same", "valid"):
            raise ShapeError(f"unknown padding {padding!r}")
        if padding == "same" and stride != 1:
            raise ShapeError("same padding is only defined for stride 1")
        if kernel < 1 or stride < 1 or cin < 1 or cout < 1:
            raise ShapeError("conv2d hyperparameters must be positive")
        if padding == "same" and kernel % 2 == 0:
            raise ShapeError("same padding requires an odd kernel")
        self.cin, self.cout, self.kernel, self.stride, self.padding = (
            cin, cout, kernel, stride, padding)

    def hyper(self):
        return {"cin": self.cin, "cout": self.cout, "kernel": self.kernel,
                "stride": self.stride, "padding": self.padding}

    def output_shape(self, in_shapes):
        h, w, c = self._image(in_shapes)
        if self.padding == "same":
            return (h, w, self.cout)
        if h < self.kernel or w < self.kernel:
            raise ShapeError(f"input {h}x{w} smaller than kernel {self.kernel}")
        return ((h - self.kernel) // self.stride + 1,
                (w - self.kernel) // self.stride + 1, self.cout)

    def _image(self, in_shapes):
        shape = self._one(in_shapes)
        if len(shape) != 3:
            raise ShapeError(f"conv2d expects an image input, got shape {shape}")
        if shape[2] != self.cin:
            raise ShapeError(f"conv2d expects {self.cin} channels, got {shape[2]}")
        return shape

    def param_shapes(self, in_shapes):
        self._image(in_shapes)
        return [(self.kernel, self.kernel, self.cin, self.cout), (self.cout,)]

    def _pad(self, x):
        if self.padding == "same":
            p = self.kernel // 2
            return np.pad(x, ((0, 0), (p, p), (p, p), (0, 0)))
        return x

    def forward(self, xs, params):
        w, b = params
        xp = self._pad(xs[0])
        cols = _im2col(xp, self.kernel, self.kernel, self.stride)
        n, ho, wo = cols.shape[:3]
        k = self.kernel * self.kernel * self.cin
        y = cols.reshape(-1, k) @ w.reshape(k, self.cout) + b
        return y.reshape(n, ho, wo, self.cout), None

    def backward(self, dy, xs, params, cache):
        w, _ = params
        x = xs[0]
        xp = self._pad(x)
        kh = kw = self.kernel
        s = self.stride
        cols = _im2col(xp, kh, kw, s)
        n, ho, wo = cols.shape[:3]
        k = kh * kw * self.cin
        dy_mat = dy.reshape(-1, self.cout)
        dw = (cols.reshape(-1, k).T @ dy_mat).reshape(kh, kw, self.cin, self.cout)
        db = dy_mat.sum(axis=0)
        dcols = (dy_mat @ w.reshape(k, self.cout).T).reshape(n, ho, wo, kh, kw, self.cin)
        dxp = np.zeros_like(xp)
        for a in range(kh):
            for b_ in range(kw):
                dxp[:, a : a + s * (ho - 1) + 1 : s,
                    b_ : b_ + s * (wo - 1) + 1 : s, :] += dcols[:, :, :, a, b_, :]
        if self.padding == "same":
            p = kh // 2
            dx = dxp[:, p : p + x.shape[1], p : p + x.shape[2], :]
        else:
            dx = dxp
        return [dx], [dw, db]


class MaxPool2D(Layer):
    """2x2 max pooling with stride 2; gradient routes to the first maximum
    of each window in row-major order."""

    kind = "maxpool2d"

    def output_shape(self, in_shapes):
        shape = self._one(in_shapes)
        if len(shape) != 3:
            raise ShapeError(f"maxpool2d expects an image input, got shape {shape}")
        h, w, c = shape
        if h % 2 or w % 2:
            raise ShapeError(f"maxpool2d needs even spatial dims, got {h}x{w}")
        return (h // 2, w // 2, c)

    def _windows(self, x):
        n, h, w, c = x.shape
        xr = x.reshape(n, h // 2, 2, w // 2, 2, c)
        return xr.transpose(0, 1, 3, 2, 4, 5).reshape(n, h // 2, w // 2, 4, c)

    def forward(self, xs, params):
        win = self._windows(xs[0])
        am = win.argmax(axis=3)  # first index wins ties
        y = np.take_along_axis(win, am[:, :, :, None, :], axis=3)[:, :, :, 0, :]
        return y, am

    def backward(self, dy, xs, params, cache):
        am = cache
        n, ho, wo, c = dy.shape
        dwin = np.zeros((n, ho, wo, 4, c), dtype=dy.dtype)
        np.put_along_axis(dwin, am[:, :, :, None, :], dy[:, :, :, None, :], axis=3)
        dx = (dwin.reshape(n, ho, wo, 2, 2, c)
                  .transpose(0, 1, 3, 2, 4, 5)
                  .reshape(n, ho * 2, wo * 2, c))
        return [dx], []


class TransposeConv2D(Layer):
    """Transposed convolution (adjoint of a valid strided conv2d)."""

    kind = "transpose_conv2d"

    def __init__(self, cin: int, cout: int, kernel: int, stride: int):
        if kernel < 1 or stride < 1 or cin < 1 or cout < 1:
            raise ShapeError("transpose_conv2d hyperparameters must be positive")
        self.cin, self.cout, self.kernel, self.stride = cin, cout, kernel, stride

    def hyper(self):
        return {"cin": self.cin, "cout": self.cout, "kernel": self.kernel,
                "stride": self.stride}

    def output_shape(self, in_shapes):
        shape = self._one(in_shapes)
        if len(shape) != 3 or shape[2] != self.cin:
            raise ShapeError(
                f"transpose_conv2d expects a {self.cin}-channel image, got {shape}")
        h, w, _ = shape
        s, k = self.stride, self.kernel
        return ((h - 1) * s + k, (w - 1) * s + k, self.cout)

    def param_shapes(self, in_shapes):
        self.output_shape(in_shapes)
        return [(self.kernel, self.kernel, self.cin, self.cout), (self.cout,)]

    def forward(self, xs, params):
        w, b = params
        x = xs[0]
        n, h, wid, _ = x.shape
        s, k = self.stride, self.kernel
        y = np.zeros((n, (h - 1) * s + k, (wid - 1) * s + k, self.cout), dtype=x.dtype)
        for a in range(k):
            for b_ in range(k):
                y[:, a : a + s * (h - 1) + 1 : s,
                  b_ : b_ + s * (wid - 1) + 1 : s, :] += x @ w[a, b_]
        y += b
        return y, None

    def backward(self, dy, xs, params, cache):
        w, _ = params
        x = xs[0]
        n, h, wid, _ = x.shape
        s, k = self.stride, self.kernel
        dx = np.zeros_like(x)
        dw = np.zeros_like(w)
        x_mat = x.reshape(-1, self.cin)
        for a in range(k):
            for b_ in range(k):
                sl = dy[:, a : a + s * (h - 1) + 1 : s,
                        b_ : b_ + s * (wid - 1) + 1 : s, :]
                dx += sl @ w[a, b_].T
                dw[a, b_] = x_mat.T @ sl.reshape(-1, self.cout)
        db = dy.sum(axis=(0, 1, 2))
        return [dx], [dw, db]


class FullyConnected(Layer):
    kind = "fully_connected"

    def __init__(self, din: int, dout: int):
        if din < 1 or dout < 1:
            raise ShapeError("fully_connected dimensions must be positive")
        self.din, self.dout = din, dout

    def hyper(self):
        return {"din": self.din, "dout": self.dout}

    def output_shape(self, in_shapes):
        shape = self._one(in_shapes)
        if shape != (self.din,):
            raise ShapeError(f"fully_connected expects ({self.din},), got {shape}")
        return (self.dout,)

    def param_shapes(self, in_shapes):
        self.output_shape(in_shapes)
        return [(self.din, self.dout), (self.dout,)]

    def forward(self, xs, params):
        w, b = params
        return xs[0] @ w + b, None

    def backward(self, dy, xs, params, cache):
        w, _ = params
        return [dy @ w.T], [xs[0].T @ dy, dy.sum(axis=0)]


class ReLU(Layer):
    kind = "relu"

    def output_shape(self, in_shapes):
        return self._one(in_shapes)

    def forward(self, xs, params):
        return np.maximum(xs[0], 0), None

    def backward(self, dy, xs, params, cache):
        return [dy * (xs[0] > 0)], []  # derivative at 0 defined as 0


class ConcatChannels(Layer):
    kind = "concat_channels"

    def output_shape(self, in_shapes):
        if not in_shapes:
            raise ShapeError("concat_channels needs at least one input")
        spatial = in_shapes[0][:2]
        for shape in in_shapes:
            if len(shape) != 3 or shape[:2] != spatial:
                raise ShapeError(f"concat_channels spatial mismatch: {in_shapes}")
        return (*spatial, sum(shape[2] for shape in in_shapes))

    def forward(self, xs, params):
        return np.concatenate(xs, axis=-1), None

    def backward(self, dy, xs, params, cache):
        splits = np.cumsum([x.shape[-1] for x in xs])[:-1]
        return list(np.split(dy, splits, axis=-1)), []


class Reshape(Layer):
    """Per-sample reshape (covers flatten and unflatten)."""

    kind = "reshape"

    def __init__(self, target: tuple[int, ...]):
        self.target = tuple(int(t) for t in target)

    def hyper(self):
        return {"target": list(self.target)}

    def output_shape(self, in_shapes):
        shape = self._one(in_shapes)
        if int(np.prod(shape)) != int(np.prod(self.target)):
            raise ShapeError(f"cannot reshape {shape} to {self.target}")
        return self.target

    def forward(self, xs, params):
        x = xs[0]
        return x.reshape((x.shape[0],) + self.target), None

    def backward(self, dy, xs, params, cache):
        return [dy.reshape(xs[0].shape)], []


LAYER_KINDS = {cls.kind: cls for cls in
               (Conv2D, MaxPool2D, TransposeConv2D, FullyConnected, ReLU,
                ConcatChannels, Reshape)}


def layer_from_hyper(kind: str, hyper: dict) -> Layer:
    """Rebuild a layer from its serialized kind and hyperparameters."""
    if kind not in LAYER_KINDS:
        raise ShapeError(f"unknown layer kind {kind!r}")
    cls = LAYER_KINDS[kind]
    if kind == "reshape":
        return cls(tuple(hyper["target"]))
    return cls(**hyper) if hyper else cls()
