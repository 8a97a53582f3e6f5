"""The training loop.

Each iteration samples a population around the current search center,
evaluates it (directly for static objectives, through rollouts collected in
a buffer for episodic ones), turns the fitness into an update direction,
moves the center, logs and runs callbacks.

Randomness is keyed by ``(seed, stream, iteration)``, so runs of different
algorithms with one seed see the same initial point and the same noise.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from evostrat.buffers import RolloutBuffer
from evostrat.callbacks import CallbackDecision, save_checkpoint
from evostrat.metrics import METRICS_FILE, MetricLogger, MetricRecord
from evostrat.objectives import (
    ObjectiveSpec,
    PointMassEnv,
    default_policy,
    evaluate_benchmark,
    fitness,
)
from evostrat.optimizers import AdamESConfig, ESConfig, make_optimizer
from evostrat.population import (
    DummyModel,
    Model,
    NetworkSpec,
    PopulationDistribution,
    expand_population,
    forward_population,
    global_parameters,
    param_count,
    sample_noise,
)
from evostrat.signal_processing import filter_rewards

logger = logging.getLogger(__name__)

ALGORITHMS = ("es", "adames")
CONFIG_FILE = "config.json"

_INIT_STREAM = 0
_NOISE_STREAM = 1
_ENV_STREAM = 2


@dataclass(frozen=True)
class AgentConfig:
    objective: ObjectiveSpec
    algorithm: str = "adames"
    optimizer: ESConfig = field(default_factory=AdamESConfig)
    network: Optional[Model] = None
    iterations: int = 200
    seed: int = 0
    log_dir: str = "runs"
    actor_epochs: int = 1
    init_std: float = 1.0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.algorithm == "adames" and not isinstance(self.optimizer, AdamESConfig):
            raise ValueError("adames needs an AdamESConfig")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.actor_epochs < 1:
            raise ValueError(f"actor_epochs must be >= 1, got {self.actor_epochs}")
        if self.init_std < 0:
            raise ValueError(f"init_std must be >= 0, got {self.init_std}")
        network = self.network
        if network is None:
            if self.objective.mode == "static":
                network = DummyModel(self.objective.dimension)
            else:
                network = default_policy()
            object.__setattr__(self, "network", network)
        if self.objective.mode == "static" and not isinstance(network, DummyModel):
            raise ValueError("static objectives are optimized with the dummy model")
        if param_count(network) != self.objective.dimension:
            raise ValueError(
                f"network has {param_count(network)} parameters but objective "
                f"{self.objective.name!r} has dimension {self.objective.dimension}"
            )

    def to_dict(self) -> dict:
        if isinstance(self.network, DummyModel):
            network = {"kind": "dummy", "dim": self.network.dim}
        else:
            network = {"kind": "mlp", **asdict(self.network)}
            network["hidden"] = list(self.network.hidden)
        return {
            "objective": asdict(self.objective),
            "algorithm": self.algorithm,
            "optimizer": {
                "kind": "adames" if isinstance(self.optimizer, AdamESConfig) else "es",
                **asdict(self.optimizer),
            },
            "network": network,
            "iterations": self.iterations,
            "seed": self.seed,
            "log_dir": str(self.log_dir),
            "actor_epochs": self.actor_epochs,
            "init_std": self.init_std,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AgentConfig":
        data = dict(data)
        opt = dict(data.pop("optimizer"))
        opt_cls = AdamESConfig if opt.pop("kind") == "adames" else ESConfig
        net = dict(data.pop("network"))
        kind = net.pop("kind")
        network = DummyModel(**net) if kind == "dummy" else NetworkSpec(**net)
        return cls(
            objective=ObjectiveSpec(**data.pop("objective")),
            optimizer=opt_cls(**opt),
            network=network,
            **data,
        )


@dataclass
class RunArtifacts:
    params: np.ndarray
    run_dir: Path
    log_path: Path
    iterations: int
    distribution: PopulationDistribution


def noise_rng(seed: int, iteration: int) -> np.random.Generator:
    return np.random.default_rng([seed, _NOISE_STREAM, iteration])


def env_seed(seed: int, iteration: int) -> list[int]:
    return [seed, _ENV_STREAM, iteration]


def initial_mean(config: AgentConfig) -> np.ndarray:
    rng = np.random.default_rng([config.seed, _INIT_STREAM])
    return config.init_std * rng.standard_normal(config.objective.dimension)


def iteration_noise(config: AgentConfig, iteration: int) -> np.ndarray:
    return sample_noise(noise_rng(config.seed, iteration), config.optimizer.population_size, config.objective.dimension)


class Trainer:
    def __init__(self, config: AgentConfig):
        self.config = config
        self.objective = config.objective
        self.network = config.network
        opt = config.optimizer
        self.distribution = PopulationDistribution(
            mean=initial_mean(config), std=opt.noise_std, size=opt.population_size
        )
        self.optimizer = make_optimizer(config.algorithm, opt, self.objective.dimension)
        self.buffer = None
        if self.objective.mode == "episodic":
            self.buffer = RolloutBuffer(
                capacity=self.objective.max_steps,
                num_envs=opt.population_size,
                obs_shape=PointMassEnv.obs_dim,
                action_shape=PointMassEnv.action_dim,
            )

    def global_parameters(self) -> np.ndarray:
        return global_parameters(self.distribution)

    def evaluate_population(self, rows: np.ndarray, iteration: int) -> np.ndarray:
        if self.objective.mode == "static":
            return -np.asarray(evaluate_benchmark(self.objective.name, rows), dtype=np.float64)
        return self._rollout(rows, iteration)

    def _rollout(self, rows: np.ndarray, iteration: int) -> np.ndarray:
        n = rows.shape[0]
        env = PointMassEnv(num_envs=n, max_steps=self.objective.max_steps, seed=env_seed(self.config.seed, iteration))
        obs = env.reset()
        finished = np.zeros(n, dtype=bool)
        for _ in range(self.objective.max_steps):
            actions = forward_population(self.network, rows, obs)
            next_obs, rewards, dones, _ = env.step(actions)
            self.buffer.add(obs, actions, rewards, dones, next_obs)
            obs = next_obs
            finished |= dones
            if finished.all():
                break
        batch = self.buffer.all(flatten_env=False)
        # (T, n) -> (n, T): one trajectory per member
        rewards = filter_rewards(batch.rewards.T, batch.dones.T)
        self.buffer.reset()
        return rewards.sum(axis=-1)

    def evaluate_global(self, iteration: int) -> float:
        params = self.global_parameters()
        return fitness(self.objective, params, self.network, seed=env_seed(self.config.seed, iteration))

    def step(self, iteration: int) -> list[MetricRecord]:
        eps = iteration_noise(self.config, iteration)
        rows = expand_population(self.distribution, eps)
        fit = self.evaluate_population(rows, iteration)
        self.distribution, log = self.optimizer.step(self.distribution, eps, fit, self.config.actor_epochs)
        return [
            MetricRecord(iteration, "reward", "reward", float(np.mean(fit))),
            MetricRecord(iteration, "reward", "reward_max", float(np.max(fit))),
            MetricRecord(iteration, "reward", "global_reward", self.evaluate_global(iteration)),
            MetricRecord(iteration, "metrics", "divergence", log.divergence),
            MetricRecord(iteration, "metrics", "entropy", log.entropy),
        ]

    def run(self, run_dir, callbacks: Sequence = ()) -> RunArtifacts:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        with open(run_dir / CONFIG_FILE, "w", encoding="utf-8") as fh:
            json.dump(self.config.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        log_path = run_dir / METRICS_FILE
        done = 0
        with MetricLogger(log_path) as metric_log:
            for iteration in range(self.config.iterations):
                records = self.step(iteration)
                metric_log.log_many(records)
                done = iteration + 1
                stop = False
                for callback in callbacks:
                    decision = callback(iteration, records, self) or CallbackDecision()
                    if decision.save:
                        ckpt_dir = run_dir / "checkpoints"
                        ckpt_dir.mkdir(exist_ok=True)
                        save_checkpoint(ckpt_dir, iteration, self.global_parameters())
                    stop = stop or decision.stop
                if stop:
                    logger.info("callback requested stop after iteration %d", iteration)
                    break
        params = self.global_parameters()
        np.save(run_dir / "final_params.npy", params)
        return RunArtifacts(
            params=params, run_dir=run_dir, log_path=log_path, iterations=done, distribution=self.distribution
        )


def default_run_name(config: AgentConfig) -> str:
    return f"{config.algorithm}-{config.objective.name}-seed{config.seed}"


def unique_dir(path: Path) -> Path:
    """``path`` itself if unused, otherwise ``path-1``, ``path-2``, ..."""
    if not path.exists():
        return path
    k = 1
    while Path(f"{path}-{k}").exists():
        k += 1
    return Path(f"{path}-{k}")


def resolve_run_dir(config: AgentConfig, run_name: str | None = None) -> Path:
    return unique_dir(Path(config.log_dir) / (run_name or default_run_name(config)))


def train(config: AgentConfig, callbacks: Sequence = (), run_name: str | None = None) -> RunArtifacts:
    return Trainer(config).run(resolve_run_dir(config, run_name), callbacks)
