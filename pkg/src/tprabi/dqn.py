"""Deep-Q building blocks, implemented directly on numpy arrays.

The action-value network is a fully connected 6 -> 64 -> 64 -> 3 ReLU
stack with a mirror target network.  Gradients are hand-written backprop,
checked against finite differences in the test suite; updates use AdamW
(decoupled weight decay) and the temporal-difference error goes through a
Huber loss.  Everything is driven by an explicit numpy Generator so a run
is reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GradientOverflow

OBS_DIM = 6
N_ACTIONS = 3
HIDDEN = 64


def huber_loss(error, delta: float = 1.0):
    """e^2/2 inside |e| <= delta, linear delta*(|e| - delta/2) outside."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    e = np.asarray(error, dtype=float)
    out = np.where(np.abs(e) <= delta, 0.5 * e**2, delta * (np.abs(e) - 0.5 * delta))
    return float(out) if out.ndim == 0 else out


def huber_gradient(error, delta: float = 1.0):
    """d huber / d e: clipped linear ramp."""
    e = np.asarray(error, dtype=float)
    return np.where(np.abs(e) <= delta, e, delta * np.sign(e))


def init_params(rng: np.random.Generator) -> dict:
    """He-initialized parameter set for the 6-64-64-3 network."""
    def layer(n_in, n_out):
        return rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_in, n_out))

    return {
        "w1": layer(OBS_DIM, HIDDEN), "b1": np.zeros(HIDDEN),
        "w2": layer(HIDDEN, HIDDEN), "b2": np.zeros(HIDDEN),
        "w3": layer(HIDDEN, N_ACTIONS), "b3": np.zeros(N_ACTIONS),
    }


def forward(params: dict, x: np.ndarray):
    """Batch forward pass; returns (q_values, cache for backprop)."""
    z1 = x @ params["w1"] + params["b1"]
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ params["w2"] + params["b2"]
    h2 = np.maximum(z2, 0.0)
    q = h2 @ params["w3"] + params["b3"]
    return q, (x, z1, h1, z2, h2)


def backward(params: dict, cache, dq: np.ndarray) -> dict:
    """Gradients of a scalar loss given d loss / d q."""
    x, z1, h1, z2, h2 = cache
    grads = {"w3": h2.T @ dq, "b3": dq.sum(axis=0)}
    dh2 = dq @ params["w3"].T
    dz2 = dh2 * (z2 > 0)
    grads["w2"] = h1.T @ dz2
    grads["b2"] = dz2.sum(axis=0)
    dh1 = dz2 @ params["w2"].T
    dz1 = dh1 * (z1 > 0)
    grads["w1"] = x.T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    return grads


@dataclass
class OptimizerState:
    """AdamW accumulators: first/second moments per parameter plus step count."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 1e-4
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: dict, **kwargs) -> "OptimizerState":
        state = cls(**kwargs)
        state.m = {k: np.zeros_like(p) for k, p in params.items()}
        state.v = {k: np.zeros_like(p) for k, p in params.items()}
        return state


def adamw_update(params: dict, grads: dict, state: OptimizerState) -> dict:
    """One decoupled-weight-decay Adam step; returns the updated parameters.

    The decay term -lr * wd * w is applied independently of the
    gradient-moment term.  state is advanced in place.
    """
    for key, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise GradientOverflow(f"non-finite gradient for {key}")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    lr = state.learning_rate
    out = {}
    for key, p in params.items():
        g = grads[key]
        state.m[key] = b1 * state.m[key] + (1.0 - b1) * g
        state.v[key] = b2 * state.v[key] + (1.0 - b2) * g * g
        m_hat = state.m[key] / (1.0 - b1**t)
        v_hat = state.v[key] / (1.0 - b2**t)
        out[key] = p - lr * m_hat / (np.sqrt(v_hat) + state.epsilon) - lr * state.weight_decay * p
    return out


class QNetwork:
    """Online parameters plus a mirror target-network parameter set."""

    def __init__(self, rng: np.random.Generator):
        self.params = init_params(rng)
        self.target_params = {k: p.copy() for k, p in self.params.items()}

    def q_values(self, obs: np.ndarray) -> np.ndarray:
        q, _ = forward(self.params, np.atleast_2d(obs))
        return q[0] if obs.ndim == 1 else q

    def target_q_values(self, obs: np.ndarray) -> np.ndarray:
        q, _ = forward(self.target_params, np.atleast_2d(obs))
        return q[0] if obs.ndim == 1 else q

    def sync_target(self) -> None:
        self.target_params = {k: p.copy() for k, p in self.params.items()}


def select_action(net: QNetwork, obs: np.ndarray, epsilon: float,
                  rng: np.random.Generator) -> int:
    """Epsilon-greedy action; greedy ties break to the lowest index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must be in [0, 1]")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(N_ACTIONS))
    return int(np.argmax(net.q_values(obs)))


class ReplayBuffer:
    """Ring buffer of transitions with seeded uniform sampling."""

    def __init__(self, capacity: int = 10_000, rng: np.random.Generator | None = None):
        self.capacity = capacity
        self.rng = rng if rng is not None else np.random.default_rng()
        self._storage: list = []
        self._cursor = 0

    def push(self, obs, action: int, reward: float, next_obs, done: bool) -> None:
        item = (np.asarray(obs, dtype=float), int(action), float(reward),
                np.asarray(next_obs, dtype=float), bool(done))
        if len(self._storage) < self.capacity:
            self._storage.append(item)
        else:
            self._storage[self._cursor] = item
        self._cursor = (self._cursor + 1) % self.capacity

    def __len__(self) -> int:
        return len(self._storage)

    def __contains__(self, item) -> bool:
        obs, action, reward, next_obs, done = item
        for s in self._storage:
            if (s[1] == action and s[2] == reward and s[4] == done
                    and np.array_equal(s[0], obs) and np.array_equal(s[3], next_obs)):
                return True
        return False

    def sample(self, batch_size: int = 64):
        """Uniform sample with replacement; requires size >= batch_size."""
        if len(self._storage) < batch_size:
            raise ValueError(
                f"buffer holds {len(self._storage)} transitions, need {batch_size}"
            )
        idx = self.rng.integers(len(self._storage), size=batch_size)
        obs = np.stack([self._storage[i][0] for i in idx])
        actions = np.array([self._storage[i][1] for i in idx], dtype=int)
        rewards = np.array([self._storage[i][2] for i in idx], dtype=float)
        next_obs = np.stack([self._storage[i][3] for i in idx])
        done = np.array([self._storage[i][4] for i in idx], dtype=float)
        return obs, actions, rewards, next_obs, done


def td_step(net: QNetwork, buffer: ReplayBuffer, optimizer: OptimizerState,
            batch_size: int = 64, discount: float = 0.99,
            huber_delta: float = 1.0) -> float:
    """One gradient step on a replayed batch; returns the batch loss."""
    obs, actions, rewards, next_obs, done = buffer.sample(batch_size)
    q_next, _ = forward(net.target_params, next_obs)
    targets = rewards + discount * (1.0 - done) * q_next.max(axis=1)
    q, cache = forward(net.params, obs)
    rows = np.arange(batch_size)
    errors = q[rows, actions] - targets
    dq = np.zeros_like(q)
    dq[rows, actions] = huber_gradient(errors, huber_delta) / batch_size
    grads = backward(net.params, cache, dq)
    net.params = adamw_update(net.params, grads, optimizer)
    return float(np.mean(huber_loss(errors, huber_delta)))
