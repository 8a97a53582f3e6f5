"""Hooks run at the end of every training iteration.

A callback is any callable ``(step, records, trainer) -> CallbackDecision | None``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class CallbackDecision:
    stop: bool = False
    save: bool = False


class BaseCallback:
    def __call__(self, step: int, records, trainer) -> CallbackDecision | None:
        return None


def checkpoint_name(step: int) -> str:
    return f"params-v1-step{step:06d}.npy"


def save_checkpoint(directory, step: int, params) -> Path:
    path = Path(directory) / checkpoint_name(step)
    np.save(path, np.asarray(params, dtype=np.float64))
    return path


def load_checkpoint(path) -> np.ndarray:
    return np.load(path)


class CheckpointCallback(BaseCallback):
    """Save the global parameter vector every ``every_k`` iterations."""

    def __init__(self, every_k: int, directory):
        if every_k < 1:
            raise ValueError(f"every_k must be >= 1, got {every_k}")
        self.every_k = every_k
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        if not os.access(self.directory, os.W_OK):
            raise PermissionError(f"checkpoint directory {self.directory} is not writable")
        self.saved: list[Path] = []

    def __call__(self, step, records, trainer):
        if (step + 1) % self.every_k == 0:
            self.saved.append(save_checkpoint(self.directory, step, trainer.global_parameters()))
        return None


class EarlyStopping(BaseCallback):
    """Stop once ``metric`` has gone ``patience`` iterations without improving by ``threshold``.

    Improving means strictly beating the best value so far by at least
    ``threshold``. The first observed value only sets the baseline.
    """

    def __init__(self, metric: str, threshold: float = 0.0, patience: int = 1, mode: str = "max"):
        if patience < 1:
            raise ValueError(f"patience must be >= 1, got {patience}")
        if mode not in ("max", "min"):
            raise ValueError(f"mode must be 'max' or 'min', got {mode!r}")
        self.metric = metric
        self.threshold = threshold
        self.patience = patience
        self.sign = 1.0 if mode == "max" else -1.0
        self.best: float | None = None
        self.stale = 0

    def observe(self, value: float) -> bool:
        value = self.sign * value
        if self.best is None:
            self.best = value
            return False
        if value > self.best and value - self.best >= self.threshold:
            self.best = value
            self.stale = 0
        else:
            self.stale += 1
        return self.stale >= self.patience

    def __call__(self, step, records, trainer):
        values = [r.value for r in records if r.name == self.metric]
        if not values:
            raise ValueError(f"unknown metric {self.metric!r}")
        return CallbackDecision(stop=self.observe(values[-1]))


def checkpoint_callback(every_k: int, directory) -> CheckpointCallback:
    return CheckpointCallback(every_k, directory)


def early_stop_callback(metric: str, threshold: float, patience: int, mode: str = "max") -> EarlyStopping:
    return EarlyStopping(metric, threshold, patience, mode)
