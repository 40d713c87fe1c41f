"""Deep Q-learning pieces for the cyber player.

The cyber player picks one of nine constant accelerations every control
step.  Experience goes into a FIFO replay buffer; minibatches sampled from it
regress the online network onto bootstrap targets from a periodically synced
copy (the target network).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .dynamics import OscillatorState
from .neural_net import QNetwork, TrainStep, apply_update, backward, clone_into, forward

ACCELERATIONS = (-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0)

# Network input is the observation divided by these scales.
INPUT_SCALE = np.array([1.0, 2.0, 1.0, 2.0])


@dataclass(frozen=True)
class ActionSpace:
    accelerations: tuple[float, ...] = ACCELERATIONS

    def __post_init__(self):
        a = tuple(float(x) for x in self.accelerations)
        object.__setattr__(self, "accelerations", a)
        if len(a) != 9:
            raise ValueError("the action space has exactly 9 accelerations")
        if list(a) != sorted(a) or any(abs(x + y) > 1e-12 for x, y in zip(a, reversed(a))):
            raise ValueError("accelerations must be sorted and symmetric about 0")

    @classmethod
    def uniform(cls, bound: float = 4.0) -> "ActionSpace":
        return cls(tuple(np.linspace(-bound, bound, 9).tolist()))

    def __len__(self):
        return len(self.accelerations)

    def __getitem__(self, i: int) -> float:
        return self.accelerations[i]


@dataclass(frozen=True)
class AgentObservation:
    x: float
    v: float
    xbar: float
    vbar: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.x, self.v, self.xbar, self.vbar)):
            raise ValueError(f"observation must be finite: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.v, self.xbar, self.vbar])


def encode(obs) -> np.ndarray:
    """Network input for an observation (or an array of raw observation rows)."""
    if isinstance(obs, AgentObservation):
        obs = obs.as_array()
    return np.asarray(obs, dtype=float) / INPUT_SCALE


@dataclass(frozen=True)
class Transition:
    state: AgentObservation
    action: int
    next_state: AgentObservation
    reward: float

    def __post_init__(self):
        if not 0 <= self.action < len(ACCELERATIONS):
            raise ValueError(f"action index {self.action} out of range")
        if not self.reward <= 0:
            raise ValueError(f"rewards are non-positive, got {self.reward}")


class ReplayBuffer:
    """Fixed-capacity FIFO store of transitions, held in flat arrays."""

    def __init__(self, capacity: int, state_dim: int = 4):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.states = np.zeros((self.capacity, state_dim))
        self.next_states = np.zeros((self.capacity, state_dim))
        self.actions = np.zeros(self.capacity, dtype=np.int64)
        self.rewards = np.zeros(self.capacity)
        self._head = 0   # next write slot
        self._size = 0

    def __len__(self):
        return self._size

    def add(self, state, action: int, next_state, reward: float) -> None:
        i = self._head
        self.states[i] = state
        self.actions[i] = action
        self.next_states[i] = next_state
        self.rewards[i] = reward
        self._head = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def push(self, tr: Transition) -> None:
        self.add(tr.state.as_array(), tr.action, tr.next_state.as_array(), tr.reward)

    def _order(self) -> np.ndarray:
        start = (self._head - self._size) % self.capacity
        return (start + np.arange(self._size)) % self.capacity

    def __iter__(self) -> Iterator[Transition]:
        """Stored transitions, oldest first."""
        for i in self._order():
            yield Transition(AgentObservation(*self.states[i]), int(self.actions[i]),
                             AgentObservation(*self.next_states[i]), float(self.rewards[i]))

    def sample(self, batch_size: int, rng: np.random.Generator):
        """Uniform sample with replacement: ``(states, actions, next_states, rewards)``."""
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        # Until the first wrap the occupied slots are exactly 0 .. size-1.
        idx = rng.integers(self._size, size=batch_size)
        return self.states[idx], self.actions[idx], self.next_states[idx], self.rewards[idx]


@dataclass(frozen=True)
class DqnHyperParams:
    discount: float = 0.95
    eps_max: float = 1.0
    eps_min: float = 0.05
    eps_decay_tau: float = 50_000.0
    target_update_period: int = 150
    batch_size: int = 32
    buffer_capacity: int = 200_000
    eta_effort: float = 1e-3

    def __post_init__(self):
        if not 0 < self.discount < 1:
            raise ValueError("discount must lie in (0, 1)")
        if not 0 <= self.eps_min <= self.eps_max <= 1:
            raise ValueError("need 0 <= eps_min <= eps_max <= 1")
        if not self.eps_decay_tau > 0:
            raise ValueError("eps_decay_tau must be positive")
        for name in ("target_update_period", "batch_size", "buffer_capacity"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.eta_effort < 0:
            raise ValueError("eta_effort must be non-negative")


def tracking_reward(x, v, x_target, v_target, u, eta_effort: float = 1e-3):
    """Negative squared position and velocity errors minus control effort.

    Broadcasts over array arguments.
    """
    dx = x - x_target
    dv = v - v_target
    return -(dx * dx) - 0.1 * (dv * dv) - eta_effort * u * u


def reward(cp: OscillatorState, target: OscillatorState, u: float, eta_effort: float = 1e-3) -> float:
    """Tracking reward of the cyber player against the target player."""
    return float(tracking_reward(cp.x, cp.v, target.x, target.v, u, eta_effort))


def epsilon_at(step: int, hp: DqnHyperParams) -> float:
    """Exploration rate, decaying exponentially from eps_max to eps_min."""
    if step < 0:
        raise ValueError("step must be non-negative")
    return hp.eps_min + (hp.eps_max - hp.eps_min) * math.exp(-step / hp.eps_decay_tau)


def greedy_action(net: QNetwork, obs) -> int:
    # np.argmax returns the first maximum, i.e. ties go to the lowest index.
    return int(np.argmax(forward(net, encode(obs))))


def select_action(net: QNetwork, obs, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy choice over the network's outputs.

    Exactly one uniform draw is consumed per call, plus one integer draw
    when exploring.
    """
    if not 0 <= epsilon <= 1:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if rng.random() < epsilon:
        return int(rng.integers(net.n_outputs))
    return greedy_action(net, obs)


def td_targets(rewards, next_states, target_net: QNetwork, discount: float) -> np.ndarray:
    """Batched bootstrap targets ``r + discount * max_a Q_target(s', a)``."""
    q_next = forward(target_net, encode(next_states))
    return np.asarray(rewards, dtype=float) + discount * q_next.max(axis=-1)


def td_target(tr: Transition, target_net: QNetwork, discount: float) -> float:
    if discount == 0:
        return tr.reward
    return float(td_targets(tr.reward, tr.next_state.as_array(), target_net, discount))


def train_on_batch(net: QNetwork, target_net: QNetwork, states, actions, next_states,
                   rewards, discount: float, ts: TrainStep) -> float:
    """One momentum step of the masked TD regression on a given batch.

    Targets for actions not taken are set to the current outputs, so only
    the taken action's error reaches the gradient.
    """
    inputs = encode(states)
    y = td_targets(rewards, next_states, target_net, discount)
    rows = np.arange(len(actions))
    mask = np.zeros((len(actions), net.n_outputs))
    mask[rows, actions] = 1.0
    target = np.zeros_like(mask)
    target[rows, actions] = y
    grads, loss = backward(net, inputs, target, mask)
    apply_update(net, grads, ts)
    return loss


def train_batch(net: QNetwork, target_net: QNetwork, buffer: ReplayBuffer,
                hp: DqnHyperParams, ts: TrainStep, rng: np.random.Generator) -> float | None:
    """Sample a minibatch and train on it; returns the batch loss.

    Returns ``None`` (warm-up) while the buffer holds fewer than
    ``hp.batch_size`` transitions.
    """
    if len(buffer) < hp.batch_size:
        return None
    s, a, s2, r = buffer.sample(hp.batch_size, rng)
    return train_on_batch(net, target_net, s, a, s2, r, hp.discount, ts)


def maybe_sync_target(step: int, hp: DqnHyperParams, net: QNetwork, target_net: QNetwork) -> bool:
    if step % hp.target_update_period == 0:
        clone_into(net, target_net)
        return True
    return False


def check_termination(rms_tp: float, rms_cp: float, eps_term: float = 0.01) -> bool:
    """True when the player and the target sit equally far from the neighbour mean."""
    if rms_tp < 0 or rms_cp < 0:
        raise ValueError("RMS values are non-negative")
    return abs(rms_tp - rms_cp) <= eps_term
