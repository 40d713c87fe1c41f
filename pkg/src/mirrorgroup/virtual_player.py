"""Virtual players: receding-horizon tracking control plus a Markov-chain
velocity reference that gives each player its own way of moving.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .dynamics import HkbParams, OscillatorState, hkb_drift

_WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class VpControlParams:
    theta_p: float = 0.8
    theta_sigma: float = 0.15
    theta_v: float = 0.05
    eta: float = 1e-4
    horizon: float = 0.03

    def __post_init__(self):
        w = (self.theta_p, self.theta_sigma, self.theta_v)
        if any(not math.isfinite(c) or c < 0 for c in w):
            raise ValueError(f"tracking weights must be non-negative, got {w}")
        if abs(sum(w) - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"tracking weights must sum to 1, got {sum(w)!r}")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")


@dataclass(frozen=True)
class ControlBounds:
    u_min: float = -20.0
    u_max: float = 20.0

    def __post_init__(self):
        if not self.u_min < self.u_max:
            raise ValueError(f"u_min must be below u_max, got [{self.u_min}, {self.u_max}]")


# Preset weight triples (theta_p, theta_sigma, theta_v).  Only the
# joint-improviser values come from the published parameter set.
MODE_WEIGHTS = {
    "leader": (0.1, 0.85, 0.05),
    "follower": (0.85, 0.1, 0.05),
    "joint-improviser": (0.8, 0.15, 0.05),
}


def leader_follower_mix(p: VpControlParams, mode: str) -> VpControlParams:
    """Return ``p`` with its tracking weights replaced by the preset for ``mode``."""
    try:
        tp, ts, tv = MODE_WEIGHTS[mode]
    except KeyError:
        raise ValueError(f"unknown mode {mode!r}; expected one of {sorted(MODE_WEIGHTS)}") from None
    return replace(p, theta_p=tp, theta_sigma=ts, theta_v=tv)


def surrogate_cost(u, x, v, r_p, rdot_p, rdot_sigma, p: VpControlParams, hkb: HkbParams):
    """One-step quadratic surrogate of the tracking cost, evaluated at ``u``.

    The state is predicted one horizon ahead under constant ``u`` with a
    semi-implicit Euler step; each integral is replaced by ``h`` times its
    integrand at the predicted endpoint.  Broadcasts over ``u``.
    """
    h = p.horizon
    v_next = v + h * (hkb_drift(x, v, hkb) + u)
    x_next = x + h * v_next
    return (0.5 * p.theta_p * (x_next - r_p) ** 2
            + 0.5 * p.theta_sigma * h * (v_next - rdot_sigma) ** 2
            + 0.5 * p.theta_v * h * (v_next - rdot_p) ** 2
            + 0.5 * p.eta * h * u * u)


def vp_control_arrays(x, v, r_p, rdot_p, rdot_sigma, p: VpControlParams,
                      hkb: HkbParams, bounds: ControlBounds):
    """Closed-form minimiser of :func:`surrogate_cost`, clipped to ``bounds``."""
    h = p.horizon
    h2 = h * h
    v0 = v + h * hkb_drift(x, v, hkb)
    x0 = x + h * v0
    grad0 = h2 * (p.theta_p * (x0 - r_p) + p.theta_sigma * (v0 - rdot_sigma)
                  + p.theta_v * (v0 - rdot_p))
    curvature = p.theta_p * h2 * h2 + (p.theta_sigma + p.theta_v) * h2 * h + p.eta * h
    return np.minimum(np.maximum(-grad0 / curvature, bounds.u_min), bounds.u_max)


def vp_control(state: OscillatorState, nb: tuple[float, float], rdot_sigma: float,
               p: VpControlParams = VpControlParams(), hkb: HkbParams = HkbParams(),
               bounds: ControlBounds = ControlBounds()) -> float:
    """Control acceleration of a virtual player.

    Parameters
    ----------
    state : OscillatorState
        The player's own position and velocity.
    nb : (float, float)
        Mean position and velocity of the player's neighbours.
    rdot_sigma : float
        Current value of the player's signature velocity reference.
    """
    r_p, rdot_p = nb
    inputs = (state.x, state.v, r_p, rdot_p, rdot_sigma)
    if not all(math.isfinite(a) for a in inputs):
        raise ValueError(f"vp_control inputs must be finite, got {inputs}")
    return float(vp_control_arrays(*inputs, p, hkb, bounds))


@dataclass(frozen=True, eq=False)
class SignatureChain:
    """Markov chain over representative velocities.

    The chain makes one transition every ``dwell`` seconds; staying put is
    just another transition, so a state's expected holding time is
    ``dwell / (1 - P[i, i])``.
    """
    bin_velocities: tuple[float, ...]
    transition: np.ndarray
    dwell: float

    def __post_init__(self):
        vel = tuple(float(b) for b in self.bin_velocities)
        object.__setattr__(self, "bin_velocities", vel)
        m = len(vel)
        if m == 0:
            raise ValueError("a chain needs at least one state")
        if any(b >= c for b, c in zip(vel, vel[1:])):
            raise ValueError("bin velocities must be strictly increasing")
        P = np.array(self.transition, dtype=float)
        if P.shape != (m, m):
            raise ValueError(f"transition matrix must be {m}x{m}, got {P.shape}")
        if np.any(P < 0) or not np.all(np.isfinite(P)):
            raise ValueError("transition probabilities must be finite and non-negative")
        if np.any(np.abs(P.sum(axis=1) - 1.0) > _WEIGHT_TOL):
            raise ValueError("transition rows must sum to 1")
        P.setflags(write=False)
        object.__setattr__(self, "transition", P)
        if not self.dwell > 0:
            raise ValueError("dwell must be positive")

    @property
    def n_states(self) -> int:
        return len(self.bin_velocities)

    def to_dict(self) -> dict:
        return {"bin_velocities": list(self.bin_velocities),
                "transition": self.transition.ravel().tolist(),
                "dwell": self.dwell}

    @classmethod
    def from_dict(cls, d: dict) -> "SignatureChain":
        unknown = set(d) - {"bin_velocities", "transition", "dwell"}
        if unknown:
            raise ValueError(f"unknown signature chain keys: {sorted(unknown)}")
        vel = [float(b) for b in d["bin_velocities"]]
        m = len(vel)
        P = np.asarray(d["transition"], dtype=float)
        if P.ndim == 1:
            if P.size != m * m:
                raise ValueError(f"row-major transition needs {m * m} entries, got {P.size}")
            P = P.reshape(m, m)
        return cls(tuple(vel), P, float(d.get("dwell", 0.8)))


BIN_VELOCITIES = (-1.2, -0.8, -0.4, 0.0, 0.4, 0.8, 1.2)

# Visiting order of the cyclic chain: 0.4, 1.2, 0.8, 0, -0.4, -1.2, -0.8.
# Each half-cycle covers the same distance, so positions stay bounded.
CYCLE_ORDER = (4, 6, 5, 3, 2, 0, 1)

# Per-player dwell times (s) of the default group; distinct values give the
# players distinct preferred tempos.
DEFAULT_DWELLS = (0.32, 0.34, 0.36, 0.38)


def random_walk_chain(bin_velocities: Sequence[float] = BIN_VELOCITIES,
                      stay: float = 0.5, dwell: float = 0.8) -> SignatureChain:
    """Lazy nearest-neighbour walk over velocity bins, reflecting at the edges.

    Its velocity has no sign alternation, so positions wander like a random
    walk; see :func:`cyclic_chain` for oscillatory motion.
    """
    m = len(bin_velocities)
    P = np.zeros((m, m))
    move = (1.0 - stay) / 2.0
    for i in range(m):
        if m == 1:
            P[i, i] = 1.0
            continue
        P[i, i] = stay
        # A move off either end bounces back inward.
        up = i + 1 if i + 1 < m else i - 1
        down = i - 1 if i > 0 else i + 1
        P[i, up] += move
        P[i, down] += move
    return SignatureChain(tuple(bin_velocities), P, dwell)


def cyclic_chain(dwell: float = 0.35, advance: float = 0.8, stay: float = 0.15,
                 skip: float = 0.05, bin_velocities: Sequence[float] = BIN_VELOCITIES,
                 order: Sequence[int] = CYCLE_ORDER) -> SignatureChain:
    """Chain that mostly steps around a fixed cycle of velocity bins.

    From each state it moves to the next state of ``order`` with probability
    ``advance``, stays with ``stay`` and jumps two ahead with ``skip``.  The
    default cycle sweeps right, pauses, sweeps left: side-to-side motion
    with one period every ``7 * dwell / (advance + 2 * skip)`` seconds on
    average.
    """
    if abs(advance + stay + skip - 1.0) > _WEIGHT_TOL:
        raise ValueError("advance + stay + skip must equal 1")
    m = len(bin_velocities)
    if sorted(order) != list(range(m)):
        raise ValueError("order must be a permutation of the bin indices")
    P = np.zeros((m, m))
    L = len(order)
    for i, s in enumerate(order):
        P[s, order[(i + 1) % L]] += advance
        P[s, s] += stay
        P[s, order[(i + 2) % L]] += skip
    return SignatureChain(tuple(bin_velocities), P, dwell)


def default_chains(n: int) -> list[SignatureChain]:
    """One cyclic chain per player, cycling through :data:`DEFAULT_DWELLS`."""
    return [cyclic_chain(DEFAULT_DWELLS[k % len(DEFAULT_DWELLS)]) for k in range(n)]


def load_chain(path) -> SignatureChain:
    """Read a chain from a TOML or JSON file.

    Expected keys: ``bin_velocities`` (list), ``transition`` (row-major list
    or nested rows) and ``dwell`` (seconds).
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        data = json.loads(text)
    else:
        from ._compat import tomllib
        data = tomllib.loads(text)
    return SignatureChain.from_dict(data)


class SignatureReference:
    """Velocity reference produced by running a :class:`SignatureChain`.

    Time must be queried in non-decreasing order.  The chain steps at every
    multiple of ``dwell``; after each step the output fades linearly from the
    old bin velocity to the new one over ``min(0.2 * dwell, 0.1)`` seconds.
    """

    def __init__(self, chain: SignatureChain, rng: np.random.Generator,
                 initial_state: int | None = None):
        self.chain = chain
        self.rng = rng
        if initial_state is None:
            initial_state = int(rng.integers(chain.n_states))
        if not 0 <= initial_state < chain.n_states:
            raise ValueError(f"initial state {initial_state} out of range")
        self._cdf = np.cumsum(chain.transition, axis=1)
        self.fade = min(0.2 * chain.dwell, 0.1)
        self.period = 0
        self.state = initial_state
        self.previous = initial_state
        self.visits = [initial_state]
        self._last_t = 0.0

    def _advance(self):
        row = self._cdf[self.state]
        nxt = int(np.searchsorted(row, self.rng.random(), side="right"))
        self.previous = self.state
        self.state = min(nxt, self.chain.n_states - 1)
        self.period += 1
        self.visits.append(self.state)

    def __call__(self, t: float) -> float:
        if t < self._last_t:
            raise ValueError("signature reference must be queried with non-decreasing time")
        self._last_t = t
        dwell = self.chain.dwell
        while t >= (self.period + 1) * dwell:
            self._advance()
        vel = self.chain.bin_velocities
        since = t - self.period * dwell
        if self.period > 0 and since < self.fade:
            w = since / self.fade
            return vel[self.previous] + w * (vel[self.state] - vel[self.previous])
        return vel[self.state]


def signature_reference(chain: SignatureChain, rng: np.random.Generator, t: float,
                        initial_state: int | None = None) -> float:
    """Sample a fresh reference at a single time ``t``.

    Convenience wrapper; simulations keep a :class:`SignatureReference` per
    player so the chain state carries over between calls.
    """
    return SignatureReference(chain, rng, initial_state)(t)
