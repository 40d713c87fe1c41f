"""
Deep Q-learning on a two-state problem
======================================

The learner used for the cyber player, run on a problem small enough to
solve by hand.  Staying in state 0 costs less than switching, but only
switching reaches the free state, so the right answer needs bootstrapped
values rather than immediate rewards.
"""
import numpy as np

from mirrorgroup.dqn import DqnHyperParams, ReplayBuffer, epsilon_at, greedy_action, maybe_sync_target, train_batch
from mirrorgroup.neural_net import QNetwork, TrainStep

reward = np.array([[-0.5, -1.0], [0.0, -1.0]])
nxt = np.array([[0, 1], [1, 0]])
features = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 2.0, 0.0, 0.0]])
discount = 0.95

# Tabular value iteration gives the reference answer.
q = np.zeros((2, 2))
for _ in range(2000):
    q = reward + discount * q.max(axis=1)[nxt]
print("Q* =\n", np.round(q, 3), "\noptimal policy:", q.argmax(axis=1).tolist())

# The same answer from a network, a replay buffer and a target network.
rng = np.random.default_rng(0)
net = QNetwork((4, 16, 2), rng)
target = net.copy()
opt = TrainStep(learning_rate=1e-2, momentum=0.9).reset(net)
hp = DqnHyperParams(discount=discount, target_update_period=50, buffer_capacity=10_000)
buf = ReplayBuffer(hp.buffer_capacity)
s = 0
for step in range(1, 4001):
    a = int(rng.integers(2))
    buf.add(features[s], a, features[nxt[s, a]], reward[s, a])
    s = nxt[s, a]
    loss = train_batch(net, target, buf, hp, opt, rng)
    maybe_sync_target(step, hp, net, target)
    if step % 1000 == 0:
        print(f"step {step}: loss {loss:.2e}")
print("learned policy:", [greedy_action(net, features[i]) for i in range(2)])

# The exploration schedule used in the real training run.
sched = DqnHyperParams(eps_decay_tau=50_000)
print("epsilon at 0, 50k, 150k steps:", [round(epsilon_at(k, sched), 3) for k in (0, 50_000, 150_000)])
