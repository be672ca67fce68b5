"""Point head: a small ReLU MLP that labels points from their coarse and fine
feature vectors, plus its loss, analytic gradients, SGD trainer and file I/O.

The first ``coarse_dim`` input entries are the coarse prediction.  With
``coarse_skip`` enabled the coarse entries are appended again to the input of
every later layer, including the output layer.

Parameter file layout (all integers little-endian uint32, floats little-endian
float64)::

    magic        b"PTHD"
    version      1
    coarse_dim
    coarse_skip  0 or 1
    n_sizes
    layer_sizes  n_sizes integers (input, hidden..., 1)
    then for each layer: weight (out x in, row-major) followed by bias (out)
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, ParseError, TrainingDivergedError

__all__ = [
    "PointHeadParams",
    "TrainConfig",
    "init_params",
    "forward",
    "forward_batch",
    "loss_and_grad",
    "bce_with_logits",
    "train",
    "save_params",
    "load_params",
    "DEFAULT_HIDDEN",
]

DEFAULT_HIDDEN = (64, 64, 64)

_MAGIC = b"PTHD"
_VERSION = 1


@dataclass
class PointHeadParams:
    layer_sizes: tuple
    weights: list
    biases: list
    coarse_dim: int = 1
    coarse_skip: bool = True

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2 or self.layer_sizes[-1] != 1:
            raise InvalidInputError("layer_sizes must run from input to a single output")
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise InvalidInputError("one weight matrix and bias per layer expected")
        if not 0 <= self.coarse_dim <= self.layer_sizes[0]:
            raise InvalidInputError("coarse_dim exceeds input size")
        for layer, (w, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.layer_sizes[layer + 1], self.layer_input_size(layer))
            if w.shape != shape or b.shape != (shape[0],):
                raise InvalidInputError(
                    f"layer {layer}: expected weight {shape}, got {w.shape} / bias {b.shape}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise InvalidInputError(f"layer {layer}: non-finite parameters")

    @property
    def input_size(self):
        return self.layer_sizes[0]

    def layer_input_size(self, layer):
        extra = self.coarse_dim if (layer > 0 and self.coarse_skip) else 0
        return self.layer_sizes[layer] + extra

    def arrays(self):
        for w, b in zip(self.weights, self.biases):
            yield w
            yield b

    def flat(self):
        return np.concatenate([a.ravel() for a in self.arrays()])

    def with_flat(self, vector):
        vector = np.asarray(vector, dtype=np.float64)
        out, pos = [], 0
        for a in self.arrays():
            out.append(vector[pos:pos + a.size].reshape(a.shape).copy())
            pos += a.size
        if pos != vector.size:
            raise InvalidInputError("flat parameter vector has the wrong length")
        return PointHeadParams(self.layer_sizes, out[0::2], out[1::2],
                               self.coarse_dim, self.coarse_skip)

    def copy(self):
        return self.with_flat(self.flat())

    @classmethod
    def unchecked(cls, template, weights, biases):
        # Gradients share the layout but may legitimately hold non-finite values.
        obj = cls.__new__(cls)
        obj.layer_sizes = template.layer_sizes
        obj.weights = weights
        obj.biases = biases
        obj.coarse_dim = template.coarse_dim
        obj.coarse_skip = template.coarse_skip
        return obj


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.00025
    batch_size: int = 2
    steps: int = 5000
    rng_seed: int = 0

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise InvalidInputError("learning_rate must be non-negative")
        if self.batch_size < 1 or self.steps < 0:
            raise InvalidInputError("batch_size must be positive and steps non-negative")


def init_params(input_size, hidden=DEFAULT_HIDDEN, seed=0, coarse_dim=1, coarse_skip=True):
    """Glorot-uniform weights and zero biases, reproducible from ``seed``."""
    sizes = (int(input_size), *[int(h) for h in hidden], 1)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for layer in range(len(sizes) - 1):
        fan_in = sizes[layer] + (coarse_dim if layer > 0 and coarse_skip else 0)
        fan_out = sizes[layer + 1]
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return PointHeadParams(sizes, weights, biases, coarse_dim, coarse_skip)


def _check_features(params, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.input_size:
        raise InvalidInputError(
            f"point features have size {x.shape[-1]}, head expects {params.input_size}"
        )
    return x


def _forward_cache(params, x):
    coarse = x[:, :params.coarse_dim]
    inputs, pre = [], []
    a = x
    last = len(params.weights) - 1
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        inp = a if layer == 0 or not params.coarse_skip else np.concatenate([a, coarse], axis=1)
        z = inp @ w.T + b
        inputs.append(inp)
        pre.append(z)
        a = z if layer == last else np.maximum(z, 0.0)
    return a[:, 0], inputs, pre


def forward_batch(params, features):
    """Logits for an ``(M, D)`` batch of point features."""
    x = _check_features(params, features)
    return _forward_cache(params, x)[0]


def forward(params, feature):
    """Logit for one point feature (the coarse entries first, then fine)."""
    feature = np.asarray(feature, dtype=np.float64)
    if feature.ndim != 1:
        raise InvalidInputError("forward takes a single feature vector")
    return float(forward_batch(params, feature)[0])


def bce_with_logits(z, y):
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))


def _sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def loss_and_grad(params, features, labels):
    """Mean binary cross-entropy over the batch and its exact gradient.

    The gradient comes back as a :class:`PointHeadParams` of the same shape.
    """
    x = _check_features(params, features)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if len(x) == 0:
        raise InvalidInputError("empty batch")
    if len(y) != len(x):
        raise InvalidInputError(f"{len(x)} features but {len(y)} labels")
    z, inputs, pre = _forward_cache(params, x)
    loss = float(np.mean(bce_with_logits(z, y)))

    m = len(x)
    delta = ((_sigmoid(z) - y) / m)[:, None]
    gw = [None] * len(params.weights)
    gb = [None] * len(params.weights)
    for layer in range(len(params.weights) - 1, -1, -1):
        gw[layer] = delta.T @ inputs[layer]
        gb[layer] = delta.sum(axis=0)
        if layer == 0:
            break
        d_in = delta @ params.weights[layer]
        d_act = d_in[:, :params.layer_sizes[layer]]
        delta = d_act * (pre[layer - 1] > 0)
    return loss, PointHeadParams.unchecked(params, gw, gb)


def train(params, features, labels, cfg, on_step=None):
    """Plain SGD on seeded mini-batches drawn with replacement.

    Returns updated parameters; the input is left untouched.  ``on_step`` is
    called as ``on_step(step, params, batch_loss)`` after every update.
    """
    x = _check_features(params, features)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if len(x) == 0:
        raise InvalidInputError("training set is empty")
    if len(y) != len(x):
        raise InvalidInputError(f"{len(x)} features but {len(y)} labels")
    rng = np.random.default_rng(cfg.rng_seed)
    current = params.copy()
    for step in range(cfg.steps):
        idx = rng.integers(0, len(x), size=cfg.batch_size)
        # Overflow surfaces as a non-finite loss or weight, reported as divergence.
        with np.errstate(over="ignore", invalid="ignore"):
            loss, grads = loss_and_grad(current, x[idx], y[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(step, loss)
            for a, g in zip(current.arrays(), grads.arrays()):
                a -= cfg.learning_rate * g
        if not all(np.all(np.isfinite(a)) for a in current.arrays()):
            raise TrainingDivergedError(step, loss)
        if on_step is not None:
            on_step(step, current, loss)
    return current


def save_params(params, path):
    header = struct.pack(
        f"<4sIIII{len(params.layer_sizes)}I",
        _MAGIC, _VERSION, params.coarse_dim, int(params.coarse_skip),
        len(params.layer_sizes), *params.layer_sizes,
    )
    body = b"".join(a.astype("<f8").tobytes(order="C") for a in params.arrays())
    with open(path, "wb") as fh:
        fh.write(header + body)


def load_params(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 20 or data[:4] != _MAGIC:
        raise ParseError("not a point-head parameter file", path)
    version, coarse_dim, skip, n = struct.unpack_from("<IIII", data, 4)
    if version != _VERSION:
        raise ParseError(f"unsupported parameter file version {version}", path)
    sizes = struct.unpack_from(f"<{n}I", data, 20)
    pos = 20 + 4 * n
    arrays = []
    for layer in range(n - 1):
        fan_in = sizes[layer] + (coarse_dim if layer > 0 and skip else 0)
        for shape in ((sizes[layer + 1], fan_in), (sizes[layer + 1],)):
            count = int(np.prod(shape))
            if pos + 8 * count > len(data):
                raise ParseError("truncated parameter file", path)
            arrays.append(np.frombuffer(data, dtype="<f8", count=count, offset=pos)
                          .reshape(shape).astype(np.float64))
            pos += 8 * count
    if pos != len(data):
        raise ParseError("trailing bytes in parameter file", path)
    return PointHeadParams(sizes, arrays[0::2], arrays[1::2], coarse_dim, bool(skip))
