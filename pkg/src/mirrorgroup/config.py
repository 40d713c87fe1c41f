"""Experiment configuration.

Config files are TOML (or JSON with the same layout).  Player labels in
files are 1-based, as players are numbered in the game (``target_player =
4``, ``center = 3``); :class:`ExperimentConfig` stores them 0-based.  Unknown
keys are rejected at every level.

Example::

    seed = 7
    n_players = 4
    target_player = 4
    trial_count = 300

    [topology]
    kind = "complete"

    [dqn]
    learning_rate = 1e-3
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from ._compat import tomllib
from .dqn import DqnHyperParams
from .dynamics import HkbParams, StepConfig
from .ensemble import Topology, make_topology
from .virtual_player import (ControlBounds, SignatureChain, VpControlParams, default_chains,
                             leader_follower_mix)


@dataclass(frozen=True)
class TopologySpec:
    kind: str = "complete"
    center: int = 2                       # 0-based, star only
    edges: tuple[tuple[int, int], ...] = ()  # 0-based, custom only

    def build(self, n: int) -> Topology:
        if self.kind == "custom":
            return Topology.from_edges(n, self.edges, "custom")
        return make_topology(self.kind, n, self.center)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"kind": self.kind}
        if self.kind == "star":
            d["center"] = self.center + 1
        if self.kind == "custom":
            d["edges"] = [[i + 1, j + 1] for i, j in self.edges]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TopologySpec":
        _reject_unknown(d, {"kind", "center", "edges"}, "topology")
        kind = d.get("kind", "complete")
        center = int(d.get("center", 3)) - 1
        edges = tuple((int(i) - 1, int(j) - 1) for i, j in d.get("edges", ()))
        return cls(kind, center, edges)


@dataclass(frozen=True)
class LearnerParams:
    """Optimiser and stopping settings of the cyber player."""
    learning_rate: float = 1e-3
    momentum: float = 0.9
    eps_term: float = 0.01
    term_window: int = 50
    # None: eps_decay_tau = (trial_count * trial_length) / 3
    eps_decay_tau: float | None = None
    # During training a cyber player that strays this far from the target is
    # put back onto the target's state.
    play_radius: float = 1.5


@dataclass(frozen=True)
class ExperimentConfig:
    topology: TopologySpec = TopologySpec()
    n_players: int = 4
    target_player: int = 3
    hkb: HkbParams = HkbParams()
    vp: VpControlParams = VpControlParams()
    vp_bounds: ControlBounds = ControlBounds()
    chains: tuple[SignatureChain, ...] | None = None
    dqn: DqnHyperParams = DqnHyperParams()
    learner: LearnerParams = LearnerParams()
    trial_count: int = 300
    trial_length: int = 500
    dt: float = 0.03
    method: str = "rk4"
    eval_length: int = 2000
    transient: float = 2.0
    max_lag: float = 1.0
    init_spread: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_players < 2:
            raise ValueError("a group needs at least 2 players")
        if not 0 <= self.target_player < self.n_players:
            raise ValueError(f"target_player {self.target_player} out of range")
        if self.trial_length < 100:
            raise ValueError("trial_length must be at least 100 observations")
        if self.trial_count < 1:
            raise ValueError("trial_count must be positive")
        StepConfig(self.dt, self.method)
        if self.chains is not None and len(self.chains) != self.n_players:
            raise ValueError(f"need one signature chain per player ({self.n_players}), "
                             f"got {len(self.chains)}")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.topology.build(self.n_players)
        for n_steps in (self.trial_length, self.eval_length):
            if self.transient >= 0.5 * n_steps * self.dt:
                raise ValueError("transient must be shorter than half a trial")

    @property
    def step_config(self) -> StepConfig:
        return StepConfig(self.dt, self.method)

    def build_topology(self, kind: str | None = None) -> Topology:
        spec = self.topology if kind is None else replace(self.topology, kind=kind)
        return spec.build(self.n_players)

    def player_chains(self) -> list[SignatureChain]:
        return list(self.chains) if self.chains is not None else default_chains(self.n_players)

    def decay_tau(self) -> float:
        if self.learner.eps_decay_tau is not None:
            return self.learner.eps_decay_tau
        return self.trial_count * self.trial_length / 3.0

    def dqn_params(self) -> DqnHyperParams:
        return replace(self.dqn, eps_decay_tau=self.decay_tau())

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "seed": self.seed,
            "n_players": self.n_players,
            "target_player": self.target_player + 1,
            "trial_count": self.trial_count,
            "trial_length": self.trial_length,
            "dt": self.dt,
            "method": self.method,
            "eval_length": self.eval_length,
            "transient": self.transient,
            "max_lag": self.max_lag,
            "init_spread": self.init_spread,
            "topology": self.topology.to_dict(),
            "hkb": asdict(self.hkb),
            "vp": {**asdict(self.vp), "u_min": self.vp_bounds.u_min, "u_max": self.vp_bounds.u_max},
            "dqn": {**{k: v for k, v in asdict(self.dqn).items() if k != "eps_decay_tau"},
                    **{k: v for k, v in asdict(self.learner).items() if v is not None}},
        }
        if self.chains is not None:
            d["chains"] = [c.to_dict() for c in self.chains]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        top = {f.name for f in fields(cls)} - {"hkb", "vp", "vp_bounds", "dqn", "learner",
                                                "topology", "chains"}
        _reject_unknown(d, top | {"hkb", "vp", "dqn", "topology", "chains"}, "config")
        kw: dict[str, Any] = {k: d[k] for k in top if k in d}
        if "target_player" in kw:
            kw["target_player"] = int(kw["target_player"]) - 1
        if "topology" in d:
            kw["topology"] = TopologySpec.from_dict(d["topology"])
        if "hkb" in d:
            _reject_unknown(d["hkb"], {f.name for f in fields(HkbParams)}, "hkb")
            kw["hkb"] = HkbParams(**d["hkb"])
        if "vp" in d:
            vp = dict(d["vp"])
            _reject_unknown(vp, {f.name for f in fields(VpControlParams)}
                            | {"u_min", "u_max", "mode"}, "vp")
            bounds = {k: vp.pop(k) for k in ("u_min", "u_max") if k in vp}
            mode = vp.pop("mode", None)
            params = VpControlParams(**vp)
            kw["vp"] = leader_follower_mix(params, mode) if mode else params
            kw["vp_bounds"] = ControlBounds(**bounds)
        if "dqn" in d:
            dq = dict(d["dqn"])
            learner_keys = {f.name for f in fields(LearnerParams)}
            dqn_keys = {f.name for f in fields(DqnHyperParams)} - {"eps_decay_tau"}
            _reject_unknown(dq, learner_keys | dqn_keys, "dqn")
            kw["learner"] = LearnerParams(**{k: dq[k] for k in learner_keys if k in dq})
            kw["dqn"] = DqnHyperParams(**{k: dq[k] for k in dqn_keys if k in dq})
        if "chains" in d:
            kw["chains"] = tuple(SignatureChain.from_dict(c) for c in d["chains"])
        return cls(**kw)


def _reject_unknown(d: dict, allowed: set, where: str):
    unknown = set(d) - set(allowed)
    if unknown:
        raise ValueError(f"unknown {where} keys: {sorted(unknown)}")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    text = path.read_text()
    data = json.loads(text) if path.suffix == ".json" else tomllib.loads(text)
    return ExperimentConfig.from_dict(data)


def config_json(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"
