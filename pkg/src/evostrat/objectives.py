"""Fitness tasks: static benchmark functions and a point-mass regulation task.

Benchmarks are minimization problems; :func:`fitness` negates them so that
every objective is maximized.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from evostrat.population import Model, NetworkSpec, as_parameter_vector, forward, param_count
from evostrat.signal_processing import filter_rewards


def sphere(x):
    x = np.asarray(x, dtype=np.float64)
    return np.sum(x**2, axis=-1)


def rastrigin(x):
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[-1]
    return 10.0 * d + np.sum(x**2 - 10.0 * np.cos(2.0 * np.pi * x), axis=-1)


def ackley(x, a=20.0, b=0.2, c=2.0 * np.pi):
    x = np.asarray(x, dtype=np.float64)
    out = (
        -a * np.exp(-b * np.sqrt(np.mean(x**2, axis=-1)))
        - np.exp(np.mean(np.cos(c * x), axis=-1))
        + a
        + np.e
    )
    return out


def rosenbrock(x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] < 2:
        raise ValueError("rosenbrock needs dimension >= 2")
    head, tail = x[..., :-1], x[..., 1:]
    return np.sum(100.0 * (tail - head**2) ** 2 + (1.0 - head) ** 2, axis=-1)


BENCHMARKS: dict[str, Callable] = {
    "sphere": sphere,
    "rastrigin": rastrigin,
    "ackley": ackley,
    "rosenbrock": rosenbrock,
}

EPISODIC = ("point_mass",)
OBJECTIVE_NAMES = (*BENCHMARKS, *EPISODIC)


def evaluate_benchmark(name: str, x):
    """Value of the named benchmark at ``x`` (a vector or a stack of rows)."""
    try:
        fn = BENCHMARKS[name]
    except KeyError:
        raise ValueError(f"unknown benchmark {name!r}") from None
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] < 1:
        raise ValueError("benchmark input must have dimension >= 1")
    out = fn(x)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ObjectiveSpec:
    name: str
    dimension: int
    mode: str = "static"
    max_steps: Optional[int] = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        if self.mode not in ("static", "episodic"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "episodic" and (self.max_steps is None or self.max_steps < 1):
            raise ValueError("episodic objectives need max_steps >= 1")
        if self.mode == "static" and self.name == "rosenbrock" and self.dimension < 2:
            raise ValueError("rosenbrock needs dimension >= 2")


def make_objective(name: str, dim: int = 10, max_steps: int = 100, network: Optional[Model] = None) -> ObjectiveSpec:
    """Build an objective by name; episodic objectives take their size from ``network``."""
    if name in BENCHMARKS:
        return ObjectiveSpec(name=name, dimension=dim, mode="static")
    if name in EPISODIC:
        network = network or default_policy()
        return ObjectiveSpec(name=name, dimension=param_count(network), mode="episodic", max_steps=max_steps)
    raise ValueError(f"unknown objective {name!r}; choose from {', '.join(OBJECTIVE_NAMES)}")


# ---------------------------------------------------------------------------
# episodic task
# ---------------------------------------------------------------------------


class PointMassEnv:
    """``num_envs`` point masses on a line, stepped in lockstep.

    Observation is ``(position, velocity)``; the action is an acceleration
    clipped to ``[-1, 1]``. Reward per step is
    ``-(position_weight * position**2 + action_weight * action**2)``. An
    instance is done when ``|position| < tolerance`` or its step budget runs
    out, and is then reset automatically from the environment's generator.
    """

    obs_dim = 2
    action_dim = 1

    def __init__(
        self,
        num_envs: int = 1,
        max_steps: int = 100,
        seed: int = 0,
        dt: float = 0.1,
        tolerance: float = 0.01,
        position_weight: float = 1.0,
        action_weight: float = 0.1,
    ):
        if num_envs < 1 or max_steps < 1:
            raise ValueError("num_envs and max_steps must be >= 1")
        self.num_envs = num_envs
        self.max_steps = max_steps
        self.dt = dt
        self.tolerance = tolerance
        self.position_weight = position_weight
        self.action_weight = action_weight
        self.rng = np.random.default_rng(seed)
        self.state = np.zeros((num_envs, 2))
        self.steps = np.zeros(num_envs, dtype=np.int64)

    def _draw_start(self, k: int) -> np.ndarray:
        start = np.zeros((k, 2))
        start[:, 0] = self.rng.uniform(-1.0, 1.0, size=k)
        return start

    def reset(self, start=None) -> np.ndarray:
        """Reset every instance to one common start state."""
        if start is None:
            start = self._draw_start(1)[0]
        self.state = np.tile(np.asarray(start, dtype=np.float64), (self.num_envs, 1))
        self.steps[:] = 0
        return self.state.copy()

    def step(self, actions):
        """Advance every instance one step.

        Returns ``(obs, rewards, dones, info)``. Done instances are reset, so
        ``obs`` holds their new start state; ``info["final_observation"]``
        holds the states actually reached by this step.
        """
        actions = np.clip(np.asarray(actions, dtype=np.float64).reshape(self.num_envs), -1.0, 1.0)
        vel = self.state[:, 1] + actions * self.dt
        pos = self.state[:, 0] + vel * self.dt
        self.state = np.stack([pos, vel], axis=1)
        final = self.state.copy()
        self.steps += 1
        rewards = -(self.position_weight * pos**2 + self.action_weight * actions**2)
        dones = (np.abs(pos) < self.tolerance) | (self.steps >= self.max_steps)
        if np.any(dones):
            self.state[dones] = self._draw_start(int(dones.sum()))
            self.steps[dones] = 0
        return self.state.copy(), rewards, dones, {"final_observation": final}


@dataclass
class EpisodeResult:
    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    episode_return: float


def default_policy(hidden=()) -> NetworkSpec:
    return NetworkSpec(input_dim=PointMassEnv.obs_dim, output_dim=PointMassEnv.action_dim, hidden=tuple(hidden), head="tanh")


def rollout_episode(network: Model, params, env: PointMassEnv, start=None) -> EpisodeResult:
    """Run one episode of a single-instance environment under ``params``."""
    if env.num_envs != 1:
        raise ValueError("rollout_episode needs a single-instance environment")
    obs = env.reset(start)[0]
    observations, actions, rewards, dones = [obs], [], [], []
    for _ in range(env.max_steps):
        action = forward(network, params, obs)
        obs, reward, done, info = env.step(action)
        obs = obs[0]
        actions.append(action)
        rewards.append(reward[0])
        dones.append(bool(done[0]))
        observations.append(info["final_observation"][0])
        if done[0]:
            break
    rewards = np.asarray(rewards)
    dones = np.asarray(dones)
    return EpisodeResult(
        observations=np.asarray(observations),
        actions=np.asarray(actions),
        rewards=rewards,
        dones=dones,
        episode_return=float(np.sum(filter_rewards(rewards, dones))),
    )


def fitness(spec: ObjectiveSpec, params, network: Optional[Model] = None, seed: int = 0, start=None) -> float:
    """Fitness to maximize for one parameter vector."""
    params = as_parameter_vector(params, spec.dimension)
    if spec.mode == "static":
        return -evaluate_benchmark(spec.name, params)
    network = network or default_policy()
    if param_count(network) != spec.dimension:
        raise ValueError(f"network has {param_count(network)} parameters, objective expects {spec.dimension}")
    env = PointMassEnv(num_envs=1, max_steps=spec.max_steps, seed=seed)
    return rollout_episode(network, params, env, start).episode_return
