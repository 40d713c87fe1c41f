"""Two-state deterministic MDP used to sanity-check the DQN machinery.

Action 0 stays, action 1 switches state.  Staying in state 0 looks cheaper
(-0.5 against -1) but only switching reaches the free state 1, so the
greedy policy is right only if bootstrapping works.
"""
import numpy as np

from mirrorgroup.dqn import DqnHyperParams, ReplayBuffer, greedy_action, maybe_sync_target, train_batch
from mirrorgroup.neural_net import QNetwork, TrainStep

REWARD = np.array([[-0.5, -1.0], [0.0, -1.0]])  # [state, action]
NEXT = np.array([[0, 1], [1, 0]])
DISCOUNT = 0.95
# raw observations; after input scaling both become unit vectors
FEATURES = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 2.0, 0.0, 0.0]])


def value_iteration(tol: float = 1e-12) -> np.ndarray:
    """Tabular oracle: the optimal action values Q*[state, action]."""
    q = np.zeros_like(REWARD)
    while True:
        new = REWARD + DISCOUNT * q.max(axis=1)[NEXT]
        if np.max(np.abs(new - q)) < tol:
            return new
        q = new


def train_toy(seed: int, steps: int = 4000) -> QNetwork:
    rng = np.random.default_rng(seed)
    net = QNetwork((4, 16, 2), rng)
    target = net.copy()
    ts = TrainStep(learning_rate=1e-2, momentum=0.9).reset(net)
    hp = DqnHyperParams(discount=DISCOUNT, target_update_period=50, buffer_capacity=10_000)
    buf = ReplayBuffer(hp.buffer_capacity)
    s = 0
    for step in range(1, steps + 1):
        a = int(rng.integers(2))
        s2 = NEXT[s, a]
        buf.add(FEATURES[s], a, FEATURES[s2], REWARD[s, a])
        s = s2
        train_batch(net, target, buf, hp, ts, rng)
        maybe_sync_target(step, hp, net, target)
    return net


def greedy_policy(net: QNetwork) -> list[int]:
    return [greedy_action(net, FEATURES[s]) for s in range(2)]
