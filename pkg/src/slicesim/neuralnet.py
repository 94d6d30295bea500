"""Minimal differentiable LSTM Q-network in plain numpy (float64).

Architecture: input -> LSTM(H) -> ReLU on the final LSTM output ->
dense(hidden, linear) -> dense(output, linear). Parameters live in one
flat vector with a deterministic layout table, which keeps serialization
and finite-difference checks simple.

Gate layout within the stacked LSTM matrices: input, forget, candidate,
output (i, f, g, o).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class NetSpec:
    input_dim: int
    lstm_units: int = 128
    hidden_units: int = 24
    output_dim: int = 81

    def __post_init__(self):
        for name in ("input_dim", "lstm_units", "hidden_units", "output_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


def layout(spec: NetSpec) -> list[tuple[str, tuple[int, ...], int]]:
    """(name, shape, offset) for every parameter block."""
    shapes = [
        ("lstm_wx", (4 * spec.lstm_units, spec.input_dim)),
        ("lstm_wh", (4 * spec.lstm_units, spec.lstm_units)),
        ("lstm_b", (4 * spec.lstm_units,)),
        ("dense1_w", (spec.hidden_units, spec.lstm_units)),
        ("dense1_b", (spec.hidden_units,)),
        ("dense2_w", (spec.output_dim, spec.hidden_units)),
        ("dense2_b", (spec.output_dim,)),
    ]
    table = []
    offset = 0
    for name, shape in shapes:
        table.append((name, shape, offset))
        offset += int(np.prod(shape))
    return table


def param_count(spec: NetSpec) -> int:
    name, shape, offset = layout(spec)[-1]
    return offset + int(np.prod(shape))


def unpack(spec: NetSpec, params: np.ndarray) -> dict[str, np.ndarray]:
    params = np.asarray(params)
    if params.shape != (param_count(spec),):
        raise ValueError("parameter vector length does not match the spec")
    views = {}
    for name, shape, offset in layout(spec):
        size = int(np.prod(shape))
        views[name] = params[offset:offset + size].reshape(shape)
    return views


def init_params(spec: NetSpec, rng: np.random.Generator) -> np.ndarray:
    """Glorot-uniform weights, zero biases, LSTM forget-gate bias 1."""
    params = np.zeros(param_count(spec))
    views = unpack(spec, params)
    for name in ("lstm_wx", "lstm_wh", "dense1_w", "dense2_w"):
        w = views[name]
        fan_out, fan_in = w.shape
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        w[...] = rng.uniform(-bound, bound, size=w.shape)
    h = spec.lstm_units
    views["lstm_b"][h:2 * h] = 1.0
    return params


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500.0, 500.0)))


@dataclass
class Tape:
    spec: NetSpec
    xs: list[np.ndarray]
    gates: list[tuple]  # per step: (i, f, g, o, c_prev, h_prev, tanh_c)
    h_final: np.ndarray
    hr: np.ndarray
    a1: np.ndarray
    params: np.ndarray


def forward_batch(spec: NetSpec, params: np.ndarray, inputs: np.ndarray,
                  state: tuple[np.ndarray, np.ndarray] | None = None
                  ) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray], Tape]:
    """Unroll the network over inputs of shape (T, B, input_dim).

    Returns (q_values (B, output_dim), (h, c) final state, tape).
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 3 or inputs.shape[2] != spec.input_dim:
        raise ValueError("inputs must have shape (T, B, input_dim)")
    T, B, _ = inputs.shape
    v = unpack(spec, params)
    H = spec.lstm_units
    if state is None:
        h = np.zeros((B, H))
        c = np.zeros((B, H))
    else:
        h, c = (np.array(state[0], dtype=np.float64).reshape(B, H),
                np.array(state[1], dtype=np.float64).reshape(B, H))
    wx_t, wh_t = v["lstm_wx"].T, v["lstm_wh"].T
    xs, gates = [], []
    for t in range(T):
        x = inputs[t]
        z = x @ wx_t + h @ wh_t + v["lstm_b"]
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H:2 * H])
        g = np.tanh(z[:, 2 * H:3 * H])
        o = _sigmoid(z[:, 3 * H:])
        c_prev, h_prev = c, h
        c = f * c_prev + i * g
        tanh_c = np.tanh(c)
        h = o * tanh_c
        xs.append(x)
        gates.append((i, f, g, o, c_prev, h_prev, tanh_c))
    hr = np.maximum(h, 0.0)
    a1 = hr @ v["dense1_w"].T + v["dense1_b"]
    q = a1 @ v["dense2_w"].T + v["dense2_b"]
    tape = Tape(spec, xs, gates, h, hr, a1, np.asarray(params))
    return q, (h, c), tape


def forward(spec: NetSpec, params: np.ndarray, input_seq,
            initial_state: tuple[np.ndarray, np.ndarray] | None = None):
    """Single-sequence forward: input_seq is (T, input_dim) or a list of vectors."""
    seq = np.asarray(input_seq, dtype=np.float64)
    if seq.ndim != 2:
        raise ValueError("input_seq must be a sequence of feature vectors")
    state = None
    if initial_state is not None:
        state = (np.asarray(initial_state[0]).reshape(1, -1),
                 np.asarray(initial_state[1]).reshape(1, -1))
    q, (h, c), tape = forward_batch(spec, params, seq[:, None, :], state)
    return q[0], (h[0], c[0]), tape


def backward_batch(tape: Tape, d_q: np.ndarray) -> np.ndarray:
    """Backpropagation through time; d_q has shape (B, output_dim).

    Gradients w.r.t. any provided initial state are discarded.
    """
    spec = tape.spec
    v = unpack(spec, tape.params)
    H = spec.lstm_units
    d_q = np.asarray(d_q, dtype=np.float64)

    grads = np.zeros_like(tape.params)
    gv = unpack(spec, grads)

    gv["dense2_w"] += d_q.T @ tape.a1
    gv["dense2_b"] += d_q.sum(axis=0)
    da1 = d_q @ v["dense2_w"]
    gv["dense1_w"] += da1.T @ tape.hr
    gv["dense1_b"] += da1.sum(axis=0)
    dhr = da1 @ v["dense1_w"]
    dh = dhr * (tape.h_final > 0)
    dc = np.zeros_like(dh)

    for t in range(len(tape.xs) - 1, -1, -1):
        i, f, g, o, c_prev, h_prev, tanh_c = tape.gates[t]
        do = dh * tanh_c
        dc = dc + dh * o * (1.0 - tanh_c ** 2)
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dz = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            dg * (1.0 - g ** 2),
            do * o * (1.0 - o),
        ], axis=1)
        gv["lstm_wx"] += dz.T @ tape.xs[t]
        gv["lstm_wh"] += dz.T @ h_prev
        gv["lstm_b"] += dz.sum(axis=0)
        dh = dz @ v["lstm_wh"]
        dc = dc * f
    return grads


def backward(tape: Tape, d_q_values: np.ndarray) -> np.ndarray:
    """Single-sequence backward matching forward()."""
    d_q = np.asarray(d_q_values, dtype=np.float64).reshape(1, -1)
    return backward_batch(tape, d_q)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n), t=0)


def optimizer_step(params: np.ndarray, grads: np.ndarray, opt: AdamState,
                   lr: float, beta1: float = 0.9, beta2: float = 0.999,
                   eps: float = 1e-8) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected adaptive-moment update; pure (returns new arrays)."""
    params = np.asarray(params)
    grads = np.asarray(grads)
    if params.shape != grads.shape:
        raise ValueError("params and grads must have the same shape")
    t = opt.t + 1
    m = beta1 * opt.m + (1.0 - beta1) * grads
    v = beta2 * opt.v + (1.0 - beta2) * grads ** 2
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    new_params = params - lr * m_hat / (np.sqrt(v_hat) + eps)
    return new_params, AdamState(m=m, v=v, t=t)


def checkpoint_dict(spec: NetSpec, params: np.ndarray, meta: dict | None = None) -> dict:
    return {
        "spec": asdict(spec),
        "layout": [[name, list(shape), offset] for name, shape, offset in layout(spec)],
        "params": [float(f"{x:.17g}") for x in np.asarray(params)],
        "meta": meta or {},
    }


def save_checkpoint(path: str | Path, spec: NetSpec, params: np.ndarray,
                    meta: dict | None = None):
    Path(path).write_text(json.dumps(checkpoint_dict(spec, params, meta)) + "\n")


def load_checkpoint(path: str | Path) -> tuple[NetSpec, np.ndarray, dict]:
    data = json.loads(Path(path).read_text())
    spec = NetSpec(**data["spec"])
    params = np.asarray(data["params"], dtype=np.float64)
    if params.shape != (param_count(spec),):
        raise ValueError(f"{path}: parameter count does not match the stored spec")
    return spec, params, data.get("meta", {})
