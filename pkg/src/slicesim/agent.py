"""Recurrent deep-Q slicing controller: action codec, epsilon-greedy
policy, sequence replay, and Bellman-target training with a target net.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import neuralnet as nn
from .baseline import SlicingDecision
from .config import AgentConfig, SlicingConfig
from .scheduler import SchedulerKind, SlicePartition

N_SCHEDULERS = 3


@dataclass(frozen=True)
class ActionSpace:
    total_rbs: int = 50
    granularity: int = 5

    @classmethod
    def from_config(cls, slicing: SlicingConfig) -> "ActionSpace":
        return cls(slicing.total_rbs, slicing.rb_granularity)

    @property
    def n_partitions(self) -> int:
        return self.total_rbs // self.granularity - 1

    @property
    def n_actions(self) -> int:
        return self.n_partitions * N_SCHEDULERS * N_SCHEDULERS

    def encode_action(self, index: int) -> SlicingDecision:
        """index = (k-1)*9 + s1*3 + s2, safety slice holding k*granularity RBs."""
        if not (0 <= index < self.n_actions):
            raise ValueError(f"action index {index} out of range [0, {self.n_actions})")
        k, rest = divmod(index, N_SCHEDULERS * N_SCHEDULERS)
        s1, s2 = divmod(rest, N_SCHEDULERS)
        safety = (k + 1) * self.granularity
        partition = SlicePartition(rbs_safety=safety,
                                   rbs_autonomous=self.total_rbs - safety)
        return SlicingDecision(partition, SchedulerKind(s1), SchedulerKind(s2))

    def decode_action(self, action: SlicingDecision) -> int:
        k = action.partition.rbs_safety // self.granularity - 1
        if not (0 <= k < self.n_partitions):
            raise ValueError("partition is not on the action grid")
        return (k * N_SCHEDULERS * N_SCHEDULERS
                + int(action.sched_safety) * N_SCHEDULERS
                + int(action.sched_autonomous))


def select_action(q_values: np.ndarray, eps: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy over the Q-vector; ties resolve to the lowest index."""
    if not (0.0 <= eps <= 1.0):
        raise ValueError("eps must be in [0, 1]")
    n = len(q_values)
    if eps > 0.0 and rng.random() < eps:
        return int(rng.integers(n))
    return int(np.argmax(q_values))


def epsilon_at(cycle: int, hyper: AgentConfig) -> float:
    """Linear decay from eps_start to eps_end over eps_decay_cycles."""
    if cycle >= hyper.eps_decay_cycles:
        return hyper.eps_end
    frac = cycle / hyper.eps_decay_cycles
    return hyper.eps_start + frac * (hyper.eps_end - hyper.eps_start)


def sync_target(online_params: np.ndarray) -> np.ndarray:
    return np.array(online_params, copy=True)


class ReplayBuffer:
    """Ring buffer of transitions preserving episode order.

    Sampled windows are runs of consecutive transitions that never span an
    episode boundary (an episode-start flag may only sit at window head).
    """

    def __init__(self, capacity: int, obs_dim: int):
        self.capacity = capacity
        self.obs_dim = obs_dim
        self.snapshots = np.zeros((capacity, obs_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.revenues = np.zeros(capacity)
        self.next_snapshots = np.zeros((capacity, obs_dim))
        self.starts = np.zeros(capacity, dtype=bool)
        self.size = 0
        self._next = 0

    def push(self, snapshot: np.ndarray, action: int, revenue: float,
             next_snapshot: np.ndarray, episode_start: bool):
        if not np.isfinite(revenue):
            raise ValueError("revenue must be finite")
        i = self._next
        self.snapshots[i] = snapshot
        self.actions[i] = action
        self.revenues[i] = revenue
        self.next_snapshots[i] = next_snapshot
        self.starts[i] = episode_start
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _logical(self, idx: np.ndarray) -> np.ndarray:
        if self.size < self.capacity:
            return idx
        return (self._next + idx) % self.capacity

    def valid_window_starts(self, window_len: int) -> np.ndarray:
        """Logical start offsets whose window stays inside one episode."""
        if self.size < window_len:
            return np.empty(0, dtype=np.int64)
        order = self._logical(np.arange(self.size))
        starts = self.starts[order]
        ok = np.ones(self.size - window_len + 1, dtype=bool)
        for j in range(1, window_len):
            ok &= ~starts[j:j + len(ok)]
        return np.flatnonzero(ok)

    def sample_windows(self, batch: int, window_len: int,
                       rng: np.random.Generator) -> np.ndarray | None:
        valid = self.valid_window_starts(window_len)
        if len(valid) == 0:
            return None
        picks = valid[rng.integers(len(valid), size=batch)]
        offsets = picks[:, None] + np.arange(window_len)[None, :]
        return self._logical(offsets.reshape(-1)).reshape(batch, window_len)


def train_step(buffer: ReplayBuffer, spec: nn.NetSpec,
               online_params: np.ndarray, target_params: np.ndarray,
               opt_state: nn.AdamState, hyper: AgentConfig,
               rng: np.random.Generator
               ) -> tuple[np.ndarray, nn.AdamState, float | None]:
    """One Bellman-target update over a batch of sampled sequence windows.

    Returns (params', opt_state', loss); loss is None when the buffer is
    still below the warmup threshold.
    """
    if buffer.size < hyper.warmup_transitions:
        return online_params, opt_state, None
    windows = buffer.sample_windows(hyper.batch_windows, hyper.window_len, rng)
    if windows is None:
        return online_params, opt_state, None
    B, L = windows.shape

    # online inputs: snapshots s_1..s_L, shaped (L, B, obs)
    obs = buffer.snapshots[windows]              # (B, L, obs)
    inputs = np.transpose(obs, (1, 0, 2))
    q, _, tape = nn.forward_batch(spec, online_params, inputs)

    # target inputs: window shifted by one (s_2..s_L, s'_L)
    last = windows[:, -1]
    next_obs = np.concatenate(
        [obs[:, 1:, :], buffer.next_snapshots[last][:, None, :]], axis=1)
    q_next, _, _ = nn.forward_batch(spec, target_params,
                                    np.transpose(next_obs, (1, 0, 2)))
    y = buffer.revenues[last] + hyper.discount * q_next.max(axis=1)

    actions = buffer.actions[last]
    picked = q[np.arange(B), actions]
    err = picked - y
    loss = float(np.mean(err ** 2))

    d_q = np.zeros_like(q)
    d_q[np.arange(B), actions] = 2.0 * err / B
    grads = nn.backward_batch(tape, d_q)
    new_params, new_opt = nn.optimizer_step(online_params, grads, opt_state,
                                            hyper.lr)
    return new_params, new_opt, loss


class Agent:
    """Acting-side wrapper holding the online/target nets and LSTM state."""

    def __init__(self, spec: nn.NetSpec, hyper: AgentConfig,
                 space: ActionSpace, rng: np.random.Generator,
                 params: np.ndarray | None = None):
        self.spec = spec
        self.hyper = hyper
        self.space = space
        self.online = params if params is not None else nn.init_params(spec, rng)
        self.target = sync_target(self.online)
        self.opt = nn.AdamState.zeros(len(self.online))
        self.buffer = ReplayBuffer(hyper.replay_capacity, spec.input_dim)
        self.lstm_state: tuple | None = None
        self.updates = 0

    def reset_episode(self):
        self.lstm_state = None

    def act(self, snapshot: np.ndarray, eps: float, rng: np.random.Generator) -> int:
        q, self.lstm_state, _ = nn.forward(
            self.spec, self.online, snapshot[None, :], self.lstm_state)
        return select_action(q, eps, rng)

    def learn(self, rng: np.random.Generator) -> float | None:
        self.online, self.opt, loss = train_step(
            self.buffer, self.spec, self.online, self.target, self.opt,
            self.hyper, rng)
        if loss is not None:
            self.updates += 1
            if self.updates % self.hyper.target_sync_every == 0:
                self.target = sync_target(self.online)
        return loss
