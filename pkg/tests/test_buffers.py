import numpy as np
import pytest

from evostrat.buffers import BufferFullError, EmptyBufferError, RolloutBuffer


def fill(buf, steps, rng=None):
    """Add ``steps`` transitions; returns the recorded inputs."""
    rng = rng or np.random.default_rng(0)
    n, d = buf.num_envs, buf.obs_shape[0]
    obs = rng.standard_normal((n, d))
    log = []
    for t in range(steps):
        action = rng.standard_normal((n, 1))
        reward = np.full(n, float(t + 1))
        done = rng.random(n) < 0.2
        nxt = rng.standard_normal((n, d))
        buf.add(obs, action, reward, done, nxt)
        log.append((obs, action, reward, done, nxt))
        obs = nxt
    return log


def test_single_add_round_trip():
    buf = RolloutBuffer(capacity=5, num_envs=1, obs_shape=2)
    buf.add([1.0, 2.0], [0.5], 3.0, False, [4.0, 5.0])
    batch = buf.all()
    assert len(batch) == 1
    assert np.array_equal(batch.observations, [[1.0, 2.0]])
    assert np.array_equal(batch.next_observations, [[4.0, 5.0]])
    assert np.array_equal(batch.rewards, [3.0])


def test_all_replays_inputs_in_order():
    buf = RolloutBuffer(capacity=3, num_envs=2, obs_shape=2)
    log = fill(buf, 3)
    batch = buf.all(flatten_env=False)
    assert batch.observations.shape == (3, 2, 2)
    for t, (obs, action, reward, done, nxt) in enumerate(log):
        assert np.array_equal(batch.observations[t], obs)
        assert np.array_equal(batch.actions[t], action)
        assert np.array_equal(batch.rewards[t], reward)
        assert np.array_equal(batch.dones[t], done)
        assert np.array_equal(batch.next_observations[t], nxt)
    flat = buf.all(flatten_env=True)
    assert len(flat) == 6
    # step-major: step 0 all envs, then step 1 all envs, ...
    assert np.array_equal(flat.rewards, [1, 1, 2, 2, 3, 3])
    assert np.array_equal(flat.observations[3], log[1][0][1])


def test_next_observation_aliases_following_observation():
    buf = RolloutBuffer(capacity=10, num_envs=3, obs_shape=4)
    fill(buf, 7)
    batch = buf.all(flatten_env=False)
    for t in range(6):
        assert np.array_equal(batch.next_observations[t], batch.observations[t + 1])
    assert np.shares_memory(batch.next_observations, buf.observations)


def test_memory_halving_storage_size():
    buf = RolloutBuffer(capacity=50, num_envs=4, obs_shape=3)
    assert buf.observations.size == (50 + 1) * 4 * 3
    assert not hasattr(buf, "next_observations")


def test_capacity_exceeded_leaves_buffer_unchanged():
    buf = RolloutBuffer(capacity=2, num_envs=1, obs_shape=1)
    fill(buf, 2)
    before = buf.all()
    snapshot = {k: getattr(before, k).copy() for k in ("observations", "rewards", "next_observations")}
    assert buf.full
    with pytest.raises(BufferFullError):
        buf.add([9.0], [9.0], 9.0, True, [9.0])
    after = buf.all()
    assert buf.position == 2
    for k, v in snapshot.items():
        assert np.array_equal(getattr(after, k), v)


def test_last():
    buf = RolloutBuffer(capacity=5, num_envs=1, obs_shape=1)
    fill(buf, 3)
    assert np.array_equal(buf.last(2).rewards, [2.0, 3.0])
    assert np.array_equal(buf.last(1).rewards, [3.0])
    full = buf.all()
    window = buf.last(3)
    for field in ("observations", "actions", "rewards", "dones", "next_observations"):
        assert np.array_equal(getattr(window, field), getattr(full, field))
    with pytest.raises(IndexError):
        buf.last(4)
    with pytest.raises(ValueError):
        buf.last(0)


def test_last_plus_prefix_is_all():
    buf = RolloutBuffer(capacity=8, num_envs=2, obs_shape=2)
    fill(buf, 8)
    full = buf.all(flatten_env=False)
    for k in range(1, 9):
        tail = buf.last(k, flatten_env=False)
        joined = np.concatenate([full.rewards[: 8 - k], tail.rewards])
        assert np.array_equal(joined, full.rewards)


def test_sample_singleton_and_determinism():
    buf = RolloutBuffer(capacity=4, num_envs=1, obs_shape=1)
    buf.add([1.0], [0.0], 7.0, False, [2.0])
    batch = buf.sample(5, np.random.default_rng(0))
    assert np.array_equal(batch.rewards, [7.0] * 5)
    fill(buf, 3)
    a = buf.sample(64, np.random.default_rng(42))
    b = buf.sample(64, np.random.default_rng(42))
    assert np.array_equal(a.observations, b.observations)
    assert np.array_equal(a.rewards, b.rewards)
    assert np.array_equal(a.next_observations, b.next_observations)


def test_sample_is_uniform():
    buf = RolloutBuffer(capacity=4, num_envs=1, obs_shape=1)
    fill(buf, 4)
    draws = 100_000
    rewards = buf.sample(draws, np.random.default_rng(1)).rewards
    counts = np.array([(rewards == r).sum() for r in (1.0, 2.0, 3.0, 4.0)])
    expected = draws / 4
    sd = np.sqrt(draws * 0.25 * 0.75)
    assert np.all(np.abs(counts - expected) < 5 * sd)


def test_empty_buffer_errors_and_reset():
    buf = RolloutBuffer(capacity=3, num_envs=2, obs_shape=1)
    with pytest.raises(EmptyBufferError):
        buf.all()
    with pytest.raises(EmptyBufferError):
        buf.sample(1, np.random.default_rng(0))
    fill(buf, 3)
    buf.reset()
    buf.reset()
    assert buf.position == 0 and not buf.full
    with pytest.raises(EmptyBufferError):
        buf.all()
    fill(buf, 2)
    assert len(buf.all(flatten_env=False)) == 2


def test_accessors_are_read_only():
    buf = RolloutBuffer(capacity=3, num_envs=1, obs_shape=1)
    fill(buf, 3)
    a = buf.all()
    b = buf.all()
    assert np.array_equal(a.observations, b.observations)
    with pytest.raises(ValueError):
        a.rewards[0] = 100.0
