"""Built-in correctness checks: finite-difference gradient check and a
toy-MDP training check against a value-iteration oracle.
"""
from __future__ import annotations

import numpy as np

from . import neuralnet as nn
from .agent import ReplayBuffer, sync_target, train_step
from .config import AgentConfig

# deterministic 3-state / 2-action MDP used by the training check
TOY_NEXT = np.array([[0, 1], [0, 2], [1, 2]])
TOY_REWARD = np.array([[0.0, 0.1], [0.5, 0.2], [1.0, 0.0]])
TOY_DISCOUNT = 0.9


def value_iteration(next_state=TOY_NEXT, reward=TOY_REWARD,
                    discount=TOY_DISCOUNT, iters: int = 2000) -> np.ndarray:
    """Exact Q* for the toy MDP by fixed-point iteration."""
    q = np.zeros_like(reward, dtype=np.float64)
    for _ in range(iters):
        v = q.max(axis=1)
        q = reward + discount * v[next_state]
    return q


def gradient_check(seed: int = 0) -> float:
    """Max relative error between BPTT and central finite differences."""
    rng = np.random.default_rng(seed)
    spec = nn.NetSpec(input_dim=3, lstm_units=4, hidden_units=3, output_dim=2)
    params = nn.init_params(spec, rng)
    seq = rng.normal(size=(3, spec.input_dim))
    d_q = rng.normal(size=spec.output_dim)

    _, _, tape = nn.forward(spec, params, seq)
    analytic = nn.backward(tape, d_q)

    def loss(p):
        q, _, _ = nn.forward(spec, p, seq)
        return float(q @ d_q)

    eps = 1e-5
    worst = 0.0
    for k in range(len(params)):
        p_hi = params.copy()
        p_hi[k] += eps
        p_lo = params.copy()
        p_lo[k] -= eps
        fd = (loss(p_hi) - loss(p_lo)) / (2 * eps)
        rel = abs(analytic[k] - fd) / max(abs(analytic[k]), abs(fd), 1e-6)
        worst = max(worst, rel)
    return worst


def _one_hot(s: int) -> np.ndarray:
    v = np.zeros(3)
    v[s] = 1.0
    return v


def toy_mdp_check(max_steps: int = 20000, seed: int = 1
                  ) -> tuple[bool, float, np.ndarray]:
    """Train on replayed toy-MDP transitions; compare against Q*.

    Returns (policy_matches, max Q error, learned Q table).
    """
    rng = np.random.default_rng(seed)
    q_star = value_iteration()
    optimal_policy = q_star.argmax(axis=1)

    hyper = AgentConfig(discount=TOY_DISCOUNT, lr=2e-3, batch_windows=32,
                        window_len=1, warmup_transitions=500,
                        target_sync_every=100, replay_capacity=8000,
                        lstm_units=16, hidden_units=16)
    spec = nn.NetSpec(input_dim=3, lstm_units=hyper.lstm_units,
                      hidden_units=hyper.hidden_units, output_dim=2)
    buffer = ReplayBuffer(hyper.replay_capacity, 3)
    s = 0
    for t in range(4000):
        a = int(rng.integers(2))
        s2 = int(TOY_NEXT[s, a])
        buffer.push(_one_hot(s), a, float(TOY_REWARD[s, a]), _one_hot(s2), t == 0)
        s = s2

    params = nn.init_params(spec, rng)
    target = sync_target(params)
    opt = nn.AdamState.zeros(len(params))
    updates = 0
    q_table = np.zeros((3, 2))
    for step in range(max_steps):
        params, opt, loss = train_step(buffer, spec, params, target, opt,
                                       hyper, rng)
        if loss is not None:
            updates += 1
            if updates % hyper.target_sync_every == 0:
                target = sync_target(params)
        if step % 1000 == 999:
            for st in range(3):
                q, _, _ = nn.forward(spec, params, _one_hot(st)[None, :])
                q_table[st] = q
            if (np.abs(q_table - q_star).max() < 0.04
                    and (q_table.argmax(axis=1) == optimal_policy).all()):
                break
    for st in range(3):
        q, _, _ = nn.forward(spec, params, _one_hot(st)[None, :])
        q_table[st] = q
    err = float(np.abs(q_table - q_star).max())
    matches = bool((q_table.argmax(axis=1) == optimal_policy).all())
    return matches, err, q_table


def run() -> int:
    ok = True
    worst = gradient_check()
    grad_ok = worst < 1e-4
    ok &= grad_ok
    print(f"gradient check: max relative error {worst:.3e} "
          f"{'PASS' if grad_ok else 'FAIL'}")
    matches, err, _ = toy_mdp_check()
    mdp_ok = matches and err < 0.05
    ok &= mdp_ok
    print(f"toy MDP check: policy match {matches}, max |Q - Q*| {err:.4f} "
          f"{'PASS' if mdp_ok else 'FAIL'}")
    return 0 if ok else 1
