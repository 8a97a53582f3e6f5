"""ES gradient approximation and the Adam-style ES update."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from evostrat.population import PopulationDistribution, population_entropy, population_kl
from evostrat.signal_processing import scale


@dataclass(frozen=True)
class ESConfig:
    learning_rate: float = 0.1
    noise_std: float = 1.0
    population_size: int = 10
    scale_fitness: bool = True

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")
        if not self.noise_std > 0:
            raise ValueError(f"noise std must be positive, got {self.noise_std}")
        if int(self.population_size) < 2:
            raise ValueError(f"population size must be >= 2, got {self.population_size}")


@dataclass(frozen=True)
class AdamESConfig(ESConfig):
    beta1: float = 0.9
    beta2: float = 0.999
    fuzz: float = 1e-8

    def __post_init__(self):
        super().__post_init__()
        if not 0.0 <= self.beta1 < 1.0:
            raise ValueError(f"beta1 must lie in [0, 1), got {self.beta1}")
        if not 0.0 <= self.beta2 < 1.0:
            raise ValueError(f"beta2 must lie in [0, 1), got {self.beta2}")
        if not self.fuzz > 0:
            raise ValueError(f"fuzz must be positive, got {self.fuzz}")


@dataclass(frozen=True)
class AdamState:
    """Momentum ``m``, dampening ``v`` and the 1-based step counter."""

    m: np.ndarray
    v: np.ndarray
    step: int = 1

    @classmethod
    def zeros(cls, dim: int) -> "AdamState":
        return cls(m=np.zeros(dim), v=np.zeros(dim), step=1)


@dataclass(frozen=True)
class UpdateLog:
    divergence: float
    entropy: float


def estimate_gradient(eps, fitness, mean_std: float, scale_fitness: bool = True) -> np.ndarray:
    """Search-gradient estimate ``eps.T @ f / (mean_std * n)``.

    ``f`` is the z-scored fitness unless ``scale_fitness`` is off, in which
    case raw fitness is used.
    """
    eps = np.asarray(eps, dtype=np.float64)
    fitness = np.asarray(fitness, dtype=np.float64)
    n = eps.shape[0]
    if fitness.shape != (n,):
        raise ValueError(f"fitness must have shape ({n},), got {fitness.shape}")
    if n < 2:
        raise ValueError("need at least two population members")
    if not np.all(np.isfinite(fitness)):
        raise ValueError("fitness contains non-finite values")
    if not mean_std > 0:
        raise ValueError(f"mean_std must be positive, got {mean_std}")
    weights = scale(fitness) if scale_fitness else fitness
    return eps.T @ weights / (mean_std * n)


def adam_direction(state: AdamState, grad, cfg: AdamESConfig) -> tuple[np.ndarray, AdamState]:
    grad = np.asarray(grad, dtype=np.float64)
    if not np.all(np.isfinite(grad)):
        raise ValueError("gradient contains non-finite values")
    m = (1.0 - cfg.beta1) * grad + cfg.beta1 * state.m
    v = (1.0 - cfg.beta2) * (grad * grad) + cfg.beta2 * state.v
    m_hat = m / (1.0 - cfg.beta1**state.step)
    v_hat = v / (1.0 - cfg.beta2**state.step)
    direction = m_hat / (np.sqrt(v_hat) + cfg.fuzz)
    return direction, AdamState(m=m, v=v, step=state.step + 1)


def es_step(dist: PopulationDistribution, grad, learning_rate: float) -> tuple[PopulationDistribution, UpdateLog]:
    """Move the search center along ``grad``; the spread is left alone."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != dist.mean.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match mean {dist.mean.shape}")
    new = dist.with_mean(dist.mean + learning_rate * grad)
    return new, UpdateLog(divergence=population_kl(dist, new), entropy=population_entropy(new))


def apply_direction(
    dist: PopulationDistribution, direction, learning_rate: float, epochs: int = 1
) -> tuple[PopulationDistribution, UpdateLog]:
    """Apply the same direction ``epochs`` times.

    Divergences are summed and entropies averaged over the epochs.
    """
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    divergences = np.zeros(epochs)
    entropies = np.zeros(epochs)
    for i in range(epochs):
        dist, log = es_step(dist, direction, learning_rate)
        divergences[i] = log.divergence
        entropies[i] = log.entropy
    return dist, UpdateLog(divergence=float(divergences.sum()), entropy=float(entropies.mean()))


def adames_step(
    dist: PopulationDistribution,
    eps,
    fitness,
    state: AdamState,
    cfg: AdamESConfig,
    epochs: int = 1,
) -> tuple[PopulationDistribution, AdamState, UpdateLog]:
    grad = estimate_gradient(eps, fitness, dist.mean_std, cfg.scale_fitness)
    direction, state = adam_direction(state, grad, cfg)
    new, log = apply_direction(dist, direction, cfg.learning_rate, epochs)
    return new, state, log


class EvolutionStrategy:
    """Plain ES: the update direction is the gradient estimate itself."""

    name = "es"

    def __init__(self, cfg: ESConfig):
        self.cfg = cfg

    def direction(self, grad: np.ndarray) -> np.ndarray:
        return grad

    def step(self, dist: PopulationDistribution, eps, fitness, epochs: int = 1):
        grad = estimate_gradient(eps, fitness, dist.mean_std, self.cfg.scale_fitness)
        return apply_direction(dist, self.direction(grad), self.cfg.learning_rate, epochs)


class AdamES(EvolutionStrategy):
    """ES whose gradient estimate is fed through Adam's moment estimates."""

    name = "adames"

    def __init__(self, cfg: AdamESConfig, dim: int):
        super().__init__(cfg)
        self.state = AdamState.zeros(dim)

    def direction(self, grad: np.ndarray) -> np.ndarray:
        direction, self.state = adam_direction(self.state, grad, self.cfg)
        return direction


def make_optimizer(algorithm: str, cfg: ESConfig, dim: int) -> EvolutionStrategy:
    if algorithm == "es":
        return EvolutionStrategy(cfg)
    if algorithm == "adames":
        if not isinstance(cfg, AdamESConfig):
            cfg = AdamESConfig(**{**cfg.__dict__})
        return AdamES(cfg, dim)
    raise ValueError(f"unknown algorithm {algorithm!r}")


__all__ = [
    "AdamES",
    "AdamESConfig",
    "AdamState",
    "ESConfig",
    "EvolutionStrategy",
    "UpdateLog",
    "adam_direction",
    "adames_step",
    "apply_direction",
    "es_step",
    "estimate_gradient",
    "make_optimizer",
]
