"""Experiments: VP-only groups, shadow training of the cyber player, and
closed-loop validation with the cyber player substituted for its target.

Every random stream is derived from ``(seed, purpose, trial, player)`` so
trials can be replayed independently and the group never shares a stream
with the learner.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from . import analysis
from .config import ExperimentConfig
from .dqn import (ACCELERATIONS, ReplayBuffer, check_termination, encode, epsilon_at, greedy_action,
                  maybe_sync_target, select_action, tracking_reward, train_on_batch)
from .dynamics import (DivergenceError, OscillatorState, check_state, double_integrator_arrays,
                       hkb_step_arrays, step_oscillator)
from .ensemble import TOPOLOGY_KINDS, GroupState, Topology, neighbor_mean, neighbor_means
from .neural_net import QNetwork, TrainStep
from .virtual_player import SignatureReference, vp_control, vp_control_arrays

log = logging.getLogger(__name__)

# Stream purposes.
TRAIN, VALIDATE, LEARNER, INIT = 0, 1, 2, 3


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


class GroupSimulator:
    """Synchronous simulation of a group of virtual players.

    At each step every player reads its neighbours' mean state and its own
    signature reference at the current time, computes its control and is
    integrated one step.  One slot may be overridden by an external player
    whose next state is supplied to :meth:`step`.
    """

    def __init__(self, cfg: ExperimentConfig, topology: Topology, trial: int = 0,
                 purpose: int = TRAIN):
        if topology.n != cfg.n_players:
            raise ValueError("topology size does not match n_players")
        self.cfg = cfg
        self.topology = topology
        self.trial = trial
        init = stream(cfg.seed, purpose, trial, cfg.n_players)
        self.x = init.uniform(-cfg.init_spread, cfg.init_spread, cfg.n_players)
        self.v = np.zeros(cfg.n_players)
        self.refs = [SignatureReference(chain, stream(cfg.seed, purpose, trial, k))
                     for k, chain in enumerate(cfg.player_chains())]
        self.steps = 0

    @property
    def t(self) -> float:
        return self.steps * self.cfg.dt

    def neighbor_view(self) -> tuple[np.ndarray, np.ndarray]:
        return neighbor_means(self.x, self.v, self.topology)

    def step(self, override: int | None = None, override_state: tuple[float, float] | None = None):
        cfg = self.cfg
        t = self.t
        r_p, rdot_p = self.neighbor_view()
        r_sigma = np.array([ref(t) for ref in self.refs])
        u = vp_control_arrays(self.x, self.v, r_p, rdot_p, r_sigma, cfg.vp, cfg.hkb, cfg.vp_bounds)
        with np.errstate(over="ignore", invalid="ignore"):
            x, v = hkb_step_arrays(self.x, self.v, u, cfg.hkb, cfg.dt, cfg.method)
        if override is not None:
            x[override], v[override] = override_state
        try:
            check_state(x, v)
        except DivergenceError as exc:
            raise DivergenceError(f"trial {self.trial}, step {self.steps}: {exc}") from None
        self.x, self.v = x, v
        self.steps += 1


@dataclass
class GroupRun:
    """Recorded group trajectory: rows are samples, columns players."""
    dt: float
    x: np.ndarray
    v: np.ndarray
    topology: Topology

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.x.shape[0]) * self.dt

    def neighbor_means(self) -> tuple[np.ndarray, np.ndarray]:
        op = self.topology.mean_operator
        return self.x @ op.T, self.v @ op.T


def simulate_vp_group(cfg: ExperimentConfig, duration: float, trial: int = 0,
                      topology: Topology | None = None, purpose: int = TRAIN) -> GroupRun:
    """Simulate the VP-only group for ``duration`` seconds (samples at 0, dt, ...)."""
    topo = topology if topology is not None else cfg.build_topology()
    sim = GroupSimulator(cfg, topo, trial, purpose)
    n_steps = int(round(duration / cfg.dt))
    xs = np.empty((n_steps, cfg.n_players))
    vs = np.empty_like(xs)
    for i in range(n_steps):
        xs[i], vs[i] = sim.x, sim.v
        sim.step()
    return GroupRun(cfg.dt, xs, vs, topo)


# --------------------------------------------------------------------------
# training


@dataclass
class TrialLog:
    trial: int
    loss: float
    epsilon: float
    rms_cp: float
    rms_tp: float
    steps: int
    reseats: int = 0

    def row(self) -> list:
        return [self.trial, self.loss, self.epsilon, self.rms_cp, self.rms_tp]


@dataclass
class TrainingResult:
    net: QNetwork
    log: list[TrialLog]
    terminated_at: int | None = None
    group_runs: list[GroupRun] | None = field(default=None, repr=False)

    def gaps(self) -> np.ndarray:
        return np.array([abs(r.rms_tp - r.rms_cp) for r in self.log])


def _rms(a, b) -> float:
    d = np.asarray(a) - np.asarray(b)
    return float(np.sqrt(np.mean(d * d)))


def moving_termination(log: list[TrialLog], window: int, eps_term: float) -> bool:
    """Termination test on the trailing-window averages of the RMS pair."""
    if len(log) < window:
        return False
    tail = log[-window:]
    rms_tp = float(np.mean([r.rms_tp for r in tail]))
    rms_cp = float(np.mean([r.rms_cp for r in tail]))
    return check_termination(rms_tp, rms_cp, eps_term)


def train_cp(cfg: ExperimentConfig, trials: int | None = None,
             epsilon: float | Callable[[int], float] | None = None,
             keep_runs: bool = False, progress: Callable[[TrialLog], None] | None = None,
             early_stop: bool = True) -> TrainingResult:
    """Shadow-train the cyber player against the target virtual player.

    The group runs exactly as in :func:`simulate_vp_group`; the cyber player
    sees its own state and the mean state of the target's neighbours, and is
    rewarded for matching the target.  Its motion never feeds back into the
    group.

    Parameters
    ----------
    trials : int, optional
        Overrides ``cfg.trial_count``.
    epsilon : float or callable, optional
        Fixed exploration rate, or a function of the global step.  Defaults
        to the exponential schedule.
    keep_runs : bool
        Keep every trial's group trajectory (memory heavy).
    """
    n_trials = cfg.trial_count if trials is None else trials
    hp = cfg.dqn_params()
    learner = stream(cfg.seed, LEARNER)
    net = QNetwork(rng=stream(cfg.seed, INIT))
    target_net = net.copy()
    ts = TrainStep(cfg.learner.learning_rate, cfg.learner.momentum).reset(net)
    buffer = ReplayBuffer(hp.buffer_capacity)
    topo = cfg.build_topology()
    k = cfg.target_player
    actions = np.array(ACCELERATIONS)
    skip = int(round(cfg.transient / cfg.dt))
    dt = cfg.dt
    op_row = topo.mean_operator[k]

    if epsilon is None:
        eps_fn = lambda step: epsilon_at(step, hp)  # noqa: E731
    elif callable(epsilon):
        eps_fn = epsilon
    else:
        eps_fn = lambda step: float(epsilon)  # noqa: E731

    step = 0
    log_rows: list[TrialLog] = []
    runs: list[GroupRun] = []
    terminated_at = None
    for trial in range(n_trials):
        sim = GroupSimulator(cfg, topo, trial, TRAIN)
        L = cfg.trial_length
        xs = np.empty((L, cfg.n_players))
        vs = np.empty_like(xs)
        cp_x = np.empty(L)
        cp_pos, cp_vel = float(sim.x[k]), float(sim.v[k])
        obs = np.array([cp_pos, cp_vel, op_row @ sim.x, op_row @ sim.v])
        losses = []
        reseats = 0
        eps = eps_fn(step)
        for i in range(L):
            xs[i], vs[i] = sim.x, sim.v
            cp_x[i] = cp_pos
            eps = eps_fn(step)
            a = select_action(net, obs, eps, learner)
            u = actions[a]
            cp_pos, cp_vel = double_integrator_arrays(cp_pos, cp_vel, u, dt)
            sim.step()
            xt, vt = sim.x[k], sim.v[k]
            r = tracking_reward(cp_pos, cp_vel, xt, vt, u, hp.eta_effort)
            next_obs = np.array([cp_pos, cp_vel, op_row @ sim.x, op_row @ sim.v])
            buffer.add(obs, a, next_obs, r)
            step += 1
            if len(buffer) >= hp.batch_size:
                s, act, s2, rew = buffer.sample(hp.batch_size, learner)
                loss = train_on_batch(net, target_net, s, act, s2, rew, hp.discount, ts)
                if not math.isfinite(loss):
                    raise FloatingPointError(f"non-finite loss at trial {trial}, step {i}")
                losses.append(loss)
            maybe_sync_target(step, hp, net, target_net)
            obs = next_obs
            if abs(cp_pos - xt) > cfg.learner.play_radius:
                # Strayed too far to learn anything useful: put it back on the target.
                cp_pos, cp_vel = float(xt), float(vt)
                reseats += 1
                obs = np.array([cp_pos, cp_vel, next_obs[2], next_obs[3]])
        xbar = xs @ op_row
        lo = min(skip, L - 1)
        entry = TrialLog(trial, float(np.mean(losses)) if losses else math.nan, eps,
                         _rms(cp_x[lo:], xbar[lo:]), _rms(xs[lo:, k], xbar[lo:]), L, reseats)
        log_rows.append(entry)
        if keep_runs:
            runs.append(GroupRun(dt, xs, vs, topo))
        if progress is not None:
            progress(entry)
        if early_stop and moving_termination(log_rows, cfg.learner.term_window, cfg.learner.eps_term):
            terminated_at = trial
            break
    return TrainingResult(net, log_rows, terminated_at, runs if keep_runs else None)


# --------------------------------------------------------------------------
# validation


class Substitute(Protocol):
    """A player that takes over one slot of the group."""

    def reset(self, x: float, v: float) -> None: ...

    def next_state(self, sim: GroupSimulator, slot: int) -> tuple[float, float]: ...


class CyberPlayer:
    """Greedy policy of a trained network driving a double integrator."""

    def __init__(self, net: QNetwork):
        if net.n_inputs != 4 or net.n_outputs != len(ACCELERATIONS):
            raise ValueError(f"checkpoint architecture {net.sizes} cannot drive the cyber player")
        self.net = net
        self.x = self.v = 0.0

    def reset(self, x, v):
        self.x, self.v = float(x), float(v)

    def next_state(self, sim, slot):
        xbar, vbar = sim.neighbor_view()
        a = greedy_action(self.net, np.array([self.x, self.v, xbar[slot], vbar[slot]]))
        self.x, self.v = double_integrator_arrays(self.x, self.v, ACCELERATIONS[a], sim.cfg.dt)
        return self.x, self.v


class ScriptedClone:
    """Plays the slot's own virtual player through the substitution path.

    Substituting it must leave the group bit-for-bit unchanged; used as a
    control for the override plumbing and stream sharing.
    """

    def reset(self, x, v):
        pass

    def next_state(self, sim, slot):
        cfg = sim.cfg
        xbar, vbar = sim.neighbor_view()
        x, v = sim.x[slot], sim.v[slot]
        # Same time as GroupSimulator.step will use for every other player.
        r_sigma = sim.refs[slot](sim.t)
        u = vp_control_arrays(x, v, xbar[slot], vbar[slot], r_sigma, cfg.vp, cfg.hkb, cfg.vp_bounds)
        with np.errstate(over="ignore", invalid="ignore"):
            x1, v1 = hkb_step_arrays(x, v, u, cfg.hkb, cfg.dt, cfg.method)
        return float(x1), float(v1)


@dataclass
class ValidationResult:
    topology: str
    cp: list[analysis.TrialMetrics]
    vp: list[analysis.TrialMetrics]
    cp_runs: list[GroupRun] = field(default_factory=list, repr=False)
    vp_runs: list[GroupRun] = field(default_factory=list, repr=False)

    @staticmethod
    def _agg(rows: list[analysis.TrialMetrics]) -> dict:
        out = {}
        for key in ("rho_g", "delta_phi", "rms", "time_lag", "rpe_mean"):
            vals = np.array([r.summary()[key] for r in rows])
            out[key] = {"mean": float(vals.mean()), "sd": float(vals.std(ddof=1)) if len(vals) > 1 else 0.0}
        return out

    def table(self) -> dict:
        return {"topology": self.topology, "trials": len(self.cp),
                "cp": self._agg(self.cp), "vp": self._agg(self.vp)}


def run_trial(cfg: ExperimentConfig, topology: Topology, trial: int,
              substitute: Substitute | None = None, n_steps: int | None = None) -> GroupRun:
    """One closed-loop validation trial; the target slot may be substituted."""
    sim = GroupSimulator(cfg, topology, trial, VALIDATE)
    k = cfg.target_player
    n_steps = cfg.eval_length if n_steps is None else n_steps
    if substitute is not None:
        substitute.reset(sim.x[k], sim.v[k])
    xs = np.empty((n_steps, cfg.n_players))
    vs = np.empty_like(xs)
    for i in range(n_steps):
        xs[i], vs[i] = sim.x, sim.v
        if substitute is None:
            sim.step()
        else:
            sim.step(k, substitute.next_state(sim, k))
    return GroupRun(cfg.dt, xs, vs, topology)


def run_metrics(cfg: ExperimentConfig, run: GroupRun) -> analysis.TrialMetrics:
    skip = int(round(cfg.transient / cfg.dt))
    xbar, xbar_dot = run.neighbor_means()
    k = cfg.target_player
    return analysis.trial_metrics(run.x[skip:], run.v[skip:], k, xbar[skip:, k],
                                  xbar_dot[skip:, k], cfg.dt, cfg.max_lag)


def validate_cp(net: QNetwork, cfg: ExperimentConfig, topology: str | None = None,
                trials: int = 20, substitute_factory: Callable[[], Substitute] | None = None,
                keep_runs: bool = False) -> ValidationResult:
    """Compare the substituted group against the VP-only group, trial by trial.

    Both conditions of a trial share every random stream, so the only
    difference is who occupies the target slot.
    """
    kind = topology or cfg.topology.kind
    if kind not in TOPOLOGY_KINDS:
        raise ValueError(f"unknown topology {kind!r}")
    topo = cfg.build_topology(kind)
    make_sub = substitute_factory or (lambda: CyberPlayer(net))
    res = ValidationResult(kind, [], [])
    for trial in range(trials):
        cp_run = run_trial(cfg, topo, trial, make_sub())
        vp_run = run_trial(cfg, topo, trial, None)
        res.cp.append(run_metrics(cfg, cp_run))
        res.vp.append(run_metrics(cfg, vp_run))
        if keep_runs:
            res.cp_runs.append(cp_run)
            res.vp_runs.append(vp_run)
    return res


def run_topology_sweep(net: QNetwork, cfg: ExperimentConfig, trials: int = 20,
                       kinds=("complete", "path", "ring", "star"),
                       substitute_factory: Callable[[], Substitute] | None = None) -> list[dict]:
    """Group synchrony with the target VP and with the cyber player, per topology."""
    rows = []
    for kind in kinds:
        res = validate_cp(net, cfg, kind, trials, substitute_factory)
        rho_cp = np.array([m.rho_g for m in res.cp])
        rho_vp = np.array([m.rho_g for m in res.vp])
        rows.append({"topology": kind, "trials": trials,
                     "rho_vp": float(rho_vp.mean()), "rho_vp_sd": float(rho_vp.std()),
                     "rho_cp": float(rho_cp.mean()), "rho_cp_sd": float(rho_cp.std())})
    return rows
