"""Rollout storage for vectorized trajectories.

Observations live in a single ``(capacity + 1, num_envs, *obs_shape)`` array:
the next observation of step ``t`` is the observation of step ``t + 1``, so
next observations are a shifted view rather than a second copy. After a done
step, the slot at ``t + 1`` holds the reset observation of the following
episode; consumers must mask bootstraps with ``dones``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class BufferFullError(RuntimeError):
    pass


class EmptyBufferError(RuntimeError):
    pass


@dataclass(frozen=True)
class Batch:
    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    next_observations: np.ndarray

    def __len__(self) -> int:
        return self.rewards.shape[0]


class RolloutBuffer:
    def __init__(self, capacity: int, num_envs: int, obs_shape, action_shape=(1,)):
        if capacity < 1 or num_envs < 1:
            raise ValueError("capacity and num_envs must be >= 1")
        self.capacity = capacity
        self.num_envs = num_envs
        self.obs_shape = tuple(np.atleast_1d(obs_shape))
        self.action_shape = tuple(np.atleast_1d(action_shape))
        self.observations = np.zeros((capacity + 1, num_envs, *self.obs_shape))
        self.actions = np.zeros((capacity, num_envs, *self.action_shape))
        self.rewards = np.zeros((capacity, num_envs))
        self.dones = np.zeros((capacity, num_envs), dtype=bool)
        self.position = 0
        self.full = False

    def __len__(self) -> int:
        return self.position

    def add(self, obs, action, reward, done, next_obs) -> None:
        if self.position >= self.capacity:
            raise BufferFullError(f"buffer holds at most {self.capacity} steps")
        t = self.position
        self.observations[t] = np.reshape(obs, (self.num_envs, *self.obs_shape))
        self.observations[t + 1] = np.reshape(next_obs, (self.num_envs, *self.obs_shape))
        self.actions[t] = np.reshape(action, (self.num_envs, *self.action_shape))
        self.rewards[t] = np.reshape(reward, self.num_envs)
        self.dones[t] = np.reshape(done, self.num_envs)
        self.position += 1
        self.full = self.position == self.capacity

    def reset(self) -> None:
        self.position = 0
        self.full = False

    def _slice(self, start: int, stop: int, flatten_env: bool) -> Batch:
        fields = (
            self.observations[start:stop],
            self.actions[start:stop],
            self.rewards[start:stop],
            self.dones[start:stop],
            self.observations[start + 1 : stop + 1],
        )
        if flatten_env:
            fields = tuple(f.reshape(-1, *f.shape[2:]) for f in fields)
        # read-only views, so callers cannot corrupt storage
        for f in fields:
            f.flags.writeable = False
        return Batch(*fields)

    def _require_data(self) -> None:
        if self.position == 0:
            raise EmptyBufferError("buffer is empty")

    def all(self, flatten_env: bool = True) -> Batch:
        """Every stored step; ``flatten_env`` merges the step and env axes step-major."""
        self._require_data()
        return self._slice(0, self.position, flatten_env)

    def last(self, k: int, flatten_env: bool = True) -> Batch:
        """The most recent ``k`` steps, oldest first."""
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        if k > self.position:
            raise IndexError(f"asked for {k} steps but only {self.position} are stored")
        return self._slice(self.position - k, self.position, flatten_env)

    def sample(self, batch_size: int, rng: np.random.Generator, flatten_env: bool = True) -> Batch:
        """Uniform draws of whole steps, with replacement."""
        self._require_data()
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        idx = rng.integers(0, self.position, size=batch_size)
        fields = (
            self.observations[idx],
            self.actions[idx],
            self.rewards[idx],
            self.dones[idx],
            self.observations[idx + 1],
        )
        if flatten_env:
            fields = tuple(f.reshape(-1, *f.shape[2:]) for f in fields)
        return Batch(*fields)
