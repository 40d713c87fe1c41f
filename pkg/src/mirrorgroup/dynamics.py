"""End-effector dynamics: the controlled HKB oscillator and the double integrator.

All integrators hold the control input constant over one step (zero-order
hold).  Functions are pure; the array helpers broadcast over agents so the
group simulator can advance every player with one call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Divergence guard.  Game positions live roughly in [-1, 1].
X_LIMIT = 10.0
V_LIMIT = 50.0


class DivergenceError(FloatingPointError):
    """Raised when a state leaves the guarded region or turns non-finite."""


@dataclass(frozen=True)
class OscillatorState:
    x: float
    v: float

    def __post_init__(self):
        check_state(self.x, self.v)


@dataclass(frozen=True)
class HkbParams:
    """Parameters of the HKB oscillator.

    ``gamma_damp`` may take either sign: a negative value gives a stable
    origin, a positive one a limit cycle.
    """
    alpha: float = 1.0
    beta: float = 2.0
    gamma_damp: float = -1.0
    omega: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma_damp", "omega"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")


@dataclass(frozen=True)
class StepConfig:
    dt: float = 0.03
    method: str = "rk4"

    def __post_init__(self):
        if not 0 < self.dt <= 0.1:
            raise ValueError(f"dt must lie in (0, 0.1], got {self.dt}")
        if self.method not in ("euler", "rk4"):
            raise ValueError(f"unknown integration method {self.method!r}")


def check_state(x, v):
    """Raise :class:`DivergenceError` unless every (x, v) lies in the guard box."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    # NaN fails both comparisons and falls through to the diagnosis below.
    if np.abs(x).max() <= X_LIMIT and np.abs(v).max() <= V_LIMIT:
        return
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
        raise DivergenceError(f"non-finite state x={x}, v={v}")
    if np.any(np.abs(x) > X_LIMIT):
        raise DivergenceError(f"position {x} outside |x| <= {X_LIMIT}")
    if np.any(np.abs(v) > V_LIMIT):
        raise DivergenceError(f"velocity {v} outside |v| <= {V_LIMIT}")


def hkb_drift(x, v, p: HkbParams):
    """Uncontrolled HKB acceleration; broadcasts over arrays."""
    return -(p.alpha * x * x + p.beta * v * v - p.gamma_damp) * v - p.omega**2 * x


def hkb_acceleration(state: OscillatorState, u: float, p: HkbParams) -> float:
    """Acceleration of the controlled HKB oscillator at ``state`` under input ``u``."""
    if not math.isfinite(u):
        raise DivergenceError(f"control input is not finite: {u}")
    x, v = state.x, state.v
    damping = (p.alpha * x * x + p.beta * v * v - p.gamma_damp) * v
    stiffness = p.omega**2 * x
    if not math.isfinite(damping):
        raise DivergenceError(f"nonlinear damping term overflowed at x={x}, v={v}")
    if not math.isfinite(stiffness):
        raise DivergenceError(f"stiffness term overflowed at x={x}")
    acc = u - damping - stiffness
    if not math.isfinite(acc):
        raise DivergenceError(f"acceleration is not finite at x={x}, v={v}, u={u}")
    return acc


def hkb_step_arrays(x, v, u, p: HkbParams, dt: float, method: str = "rk4"):
    """Advance HKB oscillators by one step.  Inputs may be scalars or arrays."""
    if method == "euler":
        a = u + hkb_drift(x, v, p)
        return x + dt * v, v + dt * a
    if method != "rk4":
        raise ValueError(f"unknown integration method {method!r}")
    k1x = v
    k1v = u + hkb_drift(x, v, p)
    x2 = x + 0.5 * dt * k1x
    v2 = v + 0.5 * dt * k1v
    k2x = v2
    k2v = u + hkb_drift(x2, v2, p)
    x3 = x + 0.5 * dt * k2x
    v3 = v + 0.5 * dt * k2v
    k3x = v3
    k3v = u + hkb_drift(x3, v3, p)
    x4 = x + dt * k3x
    v4 = v + dt * k3v
    k4x = v4
    k4v = u + hkb_drift(x4, v4, p)
    x_new = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    v_new = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return x_new, v_new


def step_oscillator(state: OscillatorState, u: float, p: HkbParams,
                    cfg: StepConfig = StepConfig()) -> OscillatorState:
    """One integration step of the controlled HKB oscillator."""
    if not math.isfinite(u):
        raise DivergenceError(f"control input is not finite: {u}")
    with np.errstate(over="ignore", invalid="ignore"):
        x, v = hkb_step_arrays(state.x, state.v, u, p, cfg.dt, cfg.method)
    return OscillatorState(float(x), float(v))


def double_integrator_arrays(x, v, u, dt):
    return x + v * dt + 0.5 * u * dt * dt, v + u * dt


def step_double_integrator(state: OscillatorState, u: float, dt: float) -> OscillatorState:
    """Exact constant-acceleration step of the cyber player's plant."""
    x, v = double_integrator_arrays(state.x, state.v, u, dt)
    return OscillatorState(float(x), float(v))
