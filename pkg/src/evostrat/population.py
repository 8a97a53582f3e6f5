"""Gaussian search populations, flat-parameter networks and distribution measures.

A population member is a flat parameter vector. A population of ``n`` members
is an ``n x d`` matrix whose rows are ``mean + std * eps_i``. Networks are
described by a :class:`NetworkSpec` and evaluated directly from a flat vector,
so any row of a population matrix can be run as a policy.

Flat layout: layers in order, each layer stores its ``(out, in)`` weight
matrix in row-major order followed by its ``out`` biases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

ENCODERS = ("identity", "concat")
HEADS = ("linear", "tanh", "argmax")
ACTIVATIONS = ("tanh", "relu")

_LOG_SQRT_2PI_E = 0.5 * (1.0 + math.log(2.0 * math.pi))


def as_parameter_vector(values, dim: int | None = None) -> np.ndarray:
    """Coerce ``values`` to a finite 1-D float64 vector."""
    vec = np.asarray(values, dtype=np.float64)
    if vec.ndim != 1:
        raise ValueError(f"parameter vector must be 1-D, got shape {vec.shape}")
    if dim is not None and vec.shape[0] != dim:
        raise ValueError(f"expected {dim} parameters, got {vec.shape[0]}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("parameter vector contains non-finite entries")
    return vec


@dataclass(frozen=True)
class PopulationDistribution:
    """Isotropic-or-diagonal Gaussian over parameter vectors.

    ``std`` may be given as a scalar; it is broadcast to the mean's length.
    """

    mean: np.ndarray
    std: np.ndarray
    size: int

    def __post_init__(self):
        mean = as_parameter_vector(self.mean)
        std = np.broadcast_to(np.asarray(self.std, dtype=np.float64), mean.shape).copy()
        if not np.all(std > 0) or not np.all(np.isfinite(std)):
            raise ValueError("std entries must be finite and strictly positive")
        if int(self.size) < 1:
            raise ValueError(f"population size must be >= 1, got {self.size}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)
        object.__setattr__(self, "size", int(self.size))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def mean_std(self) -> float:
        return float(np.mean(self.std))

    def with_mean(self, mean) -> "PopulationDistribution":
        return PopulationDistribution(mean=mean, std=self.std, size=self.size)


def sample_noise(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """Draw an ``n x d`` matrix of standard-normal perturbations."""
    if n < 1 or d < 1:
        raise ValueError(f"noise shape must be positive, got ({n}, {d})")
    return rng.standard_normal((n, d))


def expand_population(dist: PopulationDistribution, eps: np.ndarray) -> np.ndarray:
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != (dist.size, dist.dim):
        raise ValueError(f"noise shape {eps.shape} does not match population ({dist.size}, {dist.dim})")
    return dist.mean + dist.std * eps


def global_parameters(dist: PopulationDistribution) -> np.ndarray:
    """Parameters of the global network: the expectation of the population."""
    return dist.mean.copy()


def population_entropy(dist: PopulationDistribution) -> float:
    """Differential entropy of the diagonal Gaussian, in nats."""
    return float(np.sum(np.log(dist.std)) + dist.dim * _LOG_SQRT_2PI_E)


def population_kl(p: PopulationDistribution, q: PopulationDistribution) -> float:
    """KL(p || q) between two diagonal Gaussians, in nats."""
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    var_p = p.std**2
    var_q = q.std**2
    diff = p.mean - q.mean
    terms = np.log(q.std / p.std) + (var_p + diff**2) / (2.0 * var_q) - 0.5
    # each term is >= 0 analytically; clamp rounding residue
    return float(max(np.sum(terms), 0.0))


def gaussian_log_prob(dist: PopulationDistribution, x: np.ndarray) -> np.ndarray:
    """Log density of rows of ``x`` under ``dist``."""
    z = (np.asarray(x, dtype=np.float64) - dist.mean) / dist.std
    return -0.5 * np.sum(z**2, axis=-1) - np.sum(np.log(dist.std)) - 0.5 * dist.dim * math.log(2.0 * math.pi)


# ---------------------------------------------------------------------------
# networks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NetworkSpec:
    """Encoder -> MLP torso -> head, evaluated from a flat parameter vector."""

    input_dim: int
    output_dim: int
    hidden: tuple[int, ...] = ()
    activation: str = "tanh"
    head: str = "linear"
    encoder: str = "identity"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.input_dim < 1 or self.output_dim < 1 or any(h < 1 for h in self.hidden):
            raise ValueError("all layer widths must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.head not in HEADS:
            raise ValueError(f"unknown head {self.head!r}")
        if self.encoder not in ENCODERS:
            raise ValueError(f"unknown encoder {self.encoder!r}")

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        widths = [self.input_dim, *self.hidden, self.output_dim]
        return [(widths[i + 1], widths[i]) for i in range(len(widths) - 1)]


@dataclass(frozen=True)
class DummyModel:
    """No network at all: the parameters are the solution.

    Used for static black-box objectives, where a population member is
    evaluated directly rather than run as a policy.
    """

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dummy model dimension must be >= 1, got {self.dim}")


Model = Union[NetworkSpec, DummyModel]


def param_count(spec: Model) -> int:
    if isinstance(spec, DummyModel):
        return spec.dim
    return sum(out * inp + out for out, inp in spec.layer_shapes)


def unflatten(spec: NetworkSpec, params) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split a flat vector into ``(weight, bias)`` pairs, weight shaped ``(out, in)``."""
    params = as_parameter_vector(params, param_count(spec))
    layers = []
    offset = 0
    for out, inp in spec.layer_shapes:
        w = params[offset : offset + out * inp].reshape(out, inp)
        offset += out * inp
        b = params[offset : offset + out]
        offset += out
        layers.append((w, b))
    return layers


def flatten(layers: Sequence[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    chunks = []
    for w, b in layers:
        chunks.append(np.asarray(w, dtype=np.float64).ravel())
        chunks.append(np.asarray(b, dtype=np.float64).ravel())
    return np.concatenate(chunks) if chunks else np.zeros(0)


def _encode(spec: NetworkSpec, inputs) -> np.ndarray:
    if spec.encoder == "concat":
        parts = [np.atleast_1d(np.asarray(p, dtype=np.float64)) for p in inputs]
        x = np.concatenate(parts, axis=-1)
    else:
        x = np.asarray(inputs, dtype=np.float64)
    if x.shape[-1] != spec.input_dim:
        raise ValueError(f"expected input of length {spec.input_dim}, got {x.shape[-1]}")
    return x


def _activate(spec: NetworkSpec, x: np.ndarray) -> np.ndarray:
    return np.tanh(x) if spec.activation == "tanh" else np.maximum(x, 0.0)


def _head(spec: NetworkSpec, x: np.ndarray) -> np.ndarray:
    if spec.head == "tanh":
        return np.tanh(x)
    if spec.head == "argmax":
        # one-hot over the discrete choices
        return np.eye(spec.output_dim)[np.argmax(x, axis=-1)]
    return x


def forward_population(spec: Model, rows, inputs) -> np.ndarray:
    """Run every population member on its own input.

    ``rows`` is ``(n, d)``; ``inputs`` is ``(n, input_dim)`` (or, for the concat
    encoder, a sequence of arrays each with leading axis ``n``).
    Returns ``(n, output_dim)``.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != param_count(spec):
        raise ValueError(f"population rows must be (n, {param_count(spec)}), got {rows.shape}")
    if isinstance(spec, DummyModel):
        return rows.copy()
    x = _encode(spec, inputs)
    if x.ndim != 2 or x.shape[0] != rows.shape[0]:
        raise ValueError(f"inputs must be ({rows.shape[0]}, {spec.input_dim}), got {x.shape}")
    n = rows.shape[0]
    offset = 0
    shapes = spec.layer_shapes
    for i, (out, inp) in enumerate(shapes):
        w = rows[:, offset : offset + out * inp].reshape(n, out, inp)
        offset += out * inp
        b = rows[:, offset : offset + out]
        offset += out
        x = np.einsum("noi,ni->no", w, x) + b
        if i < len(shapes) - 1:
            x = _activate(spec, x)
    return _head(spec, x)


def forward(spec: Model, params, inputs=None) -> np.ndarray:
    """Evaluate one parameter vector on one input.

    The dummy model ignores ``inputs`` and returns the parameters.
    """
    params = as_parameter_vector(params, param_count(spec))
    if isinstance(spec, DummyModel):
        return params.copy()
    if spec.encoder == "concat":
        batched = [np.atleast_1d(np.asarray(p, dtype=np.float64))[None] for p in inputs]
    else:
        x = np.asarray(inputs, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError(f"input must be 1-D, got shape {x.shape}")
        batched = x[None]
    return forward_population(spec, params[None], batched)[0]


def init_parameters(spec: Model, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return scale * rng.standard_normal(param_count(spec))
