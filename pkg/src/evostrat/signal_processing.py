"""Stateless transforms on reward and trajectory signals."""
from __future__ import annotations

import numpy as np

SCALE_EPS = 1e-8


def scale(x) -> np.ndarray:
    """Z-score with the population (biased) standard deviation.

    Constant input maps to zeros.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size < 1:
        raise ValueError("scale needs at least one element")
    centered = x - np.mean(x)
    return centered / (np.std(centered) + SCALE_EPS)


def filter_rewards(rewards, dones) -> np.ndarray:
    """Zero every reward strictly after the first ``done`` of each row.

    The reward on the terminating step is kept. Works on a single trajectory
    (1-D) or on ``n x T`` batches.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    if rewards.shape != dones.shape:
        raise ValueError(f"rewards shape {rewards.shape} != dones shape {dones.shape}")
    # number of dones seen strictly before each step
    before = np.cumsum(dones, axis=-1) - dones
    return np.where(before > 0, 0.0, rewards)


def discounted_returns(rewards, discount: float) -> np.ndarray:
    if not 0.0 <= discount <= 1.0:
        raise ValueError(f"discount must lie in [0, 1], got {discount}")
    rewards = np.asarray(rewards, dtype=np.float64)
    out = np.zeros_like(rewards)
    running = 0.0
    for t in range(rewards.shape[0] - 1, -1, -1):
        running = rewards[t] + discount * running
        out[t] = running
    return out


def gae(rewards, values, dones, discount: float, lam: float) -> np.ndarray:
    """Generalized advantage estimates for one trajectory.

    ``values`` has one more entry than ``rewards``: the last is the bootstrap
    value of the state following the final step. Both the bootstrap and the
    trace are cut at terminal steps.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    T = rewards.shape[0]
    if values.shape[0] != T + 1:
        raise ValueError(f"values must have length {T + 1}, got {values.shape[0]}")
    if dones.shape[0] != T:
        raise ValueError(f"dones must have length {T}, got {dones.shape[0]}")
    if not (0.0 <= discount <= 1.0 and 0.0 <= lam <= 1.0):
        raise ValueError("discount and lam must lie in [0, 1]")
    not_done = 1.0 - dones.astype(np.float64)
    advantages = np.zeros(T)
    last = 0.0
    for t in range(T - 1, -1, -1):
        delta = rewards[t] + discount * not_done[t] * values[t + 1] - values[t]
        last = delta + discount * lam * not_done[t] * last
        advantages[t] = last
    return advantages


def kl_sample_estimators(logp, logq) -> tuple[float, float, float]:
    """Three sample estimators of KL(p || q) from log-densities of draws from p.

    Returns ``(k1, k2, k3)``: the naive unbiased estimate, the squared
    log-ratio estimate and the unbiased nonnegative control-variate estimate.
    """
    logp = np.asarray(logp, dtype=np.float64)
    logq = np.asarray(logq, dtype=np.float64)
    if logp.shape != logq.shape:
        raise ValueError(f"length mismatch: {logp.shape} vs {logq.shape}")
    log_ratio = logq - logp
    k1 = np.mean(-log_ratio)
    k2 = np.mean(0.5 * log_ratio**2)
    k3 = np.mean(np.expm1(log_ratio) - log_ratio)
    return float(k1), float(k2), float(k3)
