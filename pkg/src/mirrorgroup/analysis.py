"""Coordination metrics for mirror-game recordings.

Phases come from the discrete analytic signal.  Group synchrony uses the
cluster-phase method: each agent's phase is taken relative to the group's
mean phase, its own average offset is removed, and the coherence of what
remains is averaged over time.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

MIN_SPECTRAL_SAMPLES = 16
EDGE_TRIM = 0.05
DEGENERATE_CLUSTER = 1e-9


class UndefinedPhaseError(ValueError):
    """A signal without variance has no phase."""


@dataclass(frozen=True, eq=False)
class TimeSeries:
    values: np.ndarray
    dt: float

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError("time series must be one-dimensional")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not np.all(np.isfinite(vals)):
            raise ValueError("time series contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.values.size) * self.dt

    def sliced(self, start: int, stop: int | None = None) -> "TimeSeries":
        return TimeSeries(self.values[start:stop], self.dt)


@dataclass(frozen=True, eq=False)
class PhaseSeries:
    """Unwrapped phase with the index window considered reliable."""
    theta: np.ndarray
    valid_range: tuple[int, int]

    def __post_init__(self):
        lo, hi = self.valid_range
        if not 0 <= lo < hi <= len(self.theta):
            raise ValueError(f"invalid valid_range {self.valid_range}")

    @property
    def valid(self) -> np.ndarray:
        lo, hi = self.valid_range
        return self.theta[lo:hi]


def analytic_signal(x: np.ndarray) -> np.ndarray:
    """FFT analytic signal: keep DC (and Nyquist), double positive bins, drop negative ones."""
    n = x.size
    spec = np.fft.fft(x)
    gain = np.zeros(n)
    gain[0] = 1.0
    if n % 2 == 0:
        gain[n // 2] = 1.0
        gain[1:n // 2] = 2.0
    else:
        gain[1:(n + 1) // 2] = 2.0
    return np.fft.ifft(spec * gain)


def hilbert_phase(x: TimeSeries, trim: float = EDGE_TRIM) -> PhaseSeries:
    """Instantaneous phase of a real signal.

    The mean is removed first, the phase is unwrapped, and ``trim`` of the
    samples at each end are excluded from ``valid_range`` because the
    circular FFT distorts the edges.
    """
    vals = x.values
    n = vals.size
    if n < MIN_SPECTRAL_SAMPLES:
        raise ValueError(f"need at least {MIN_SPECTRAL_SAMPLES} samples, got {n}")
    centred = vals - vals.mean()
    if not np.any(np.abs(centred) > 1e-12 * max(1.0, float(np.abs(vals).max()))):
        raise UndefinedPhaseError("constant signal has no phase")
    theta = np.unwrap(np.angle(analytic_signal(centred)))
    cut = int(math.floor(trim * n))
    return PhaseSeries(theta, (cut, n - cut))


def _common_range(phases: Sequence[PhaseSeries]) -> tuple[int, int]:
    lo = max(p.valid_range[0] for p in phases)
    hi = min(p.valid_range[1] for p in phases)
    return lo, hi


class ClusterPhase(NamedTuple):
    magnitude: float
    argument: float
    degenerate: bool


def cluster_phase(phases: Sequence[PhaseSeries], i: int) -> ClusterPhase:
    """Mean unit phasor of the group at sample ``i``.

    When the phasors cancel (magnitude below 1e-9) the argument is NaN and
    ``degenerate`` is set.
    """
    if len(phases) == 0:
        raise ValueError("cluster phase of an empty group")
    for p in phases:
        lo, hi = p.valid_range
        if not lo <= i < hi:
            raise IndexError(f"sample {i} outside valid range {p.valid_range}")
    q = np.mean(np.exp(1j * np.array([p.theta[i] for p in phases])))
    mag = float(abs(q))
    if mag < DEGENERATE_CLUSTER:
        return ClusterPhase(mag, math.nan, True)
    return ClusterPhase(mag, float(np.angle(q)), False)


def circular_mean(angles) -> float:
    return float(np.angle(np.mean(np.exp(1j * np.asarray(angles)))))


def group_sync_index(phases: Sequence[PhaseSeries]) -> float:
    """Time-averaged group synchronisation index, in [0, 1]."""
    if len(phases) == 0:
        raise ValueError("group synchronisation of an empty group")
    lo, hi = _common_range(phases)
    if hi - lo < 2:
        raise ValueError("phases share fewer than 2 valid samples")
    theta = np.stack([p.theta[lo:hi] for p in phases])  # (N, T)
    z = np.exp(1j * theta)
    q = z.mean(axis=0)
    ok = np.abs(q) >= DEGENERATE_CLUSTER
    if not np.all(ok):
        warnings.warn(f"{int((~ok).sum())} samples with degenerate cluster phase excluded",
                      RuntimeWarning, stacklevel=2)
        if not np.any(ok):
            raise ValueError("cluster phase degenerate at every sample")
        z, q = z[:, ok], q[ok]
    # e^{j phi_k(t)}: agent phasor relative to the cluster phasor
    rel = z * np.conj(q / np.abs(q))
    mean_rel = rel.mean(axis=1, keepdims=True)
    mean_dir = mean_rel / np.abs(mean_rel)
    rho_t = np.abs((rel * np.conj(mean_dir)).mean(axis=0))
    return float(np.clip(rho_t.mean(), 0.0, 1.0))


def _check_aligned(*series: TimeSeries):
    n, dt = len(series[0]), series[0].dt
    for s in series[1:]:
        if len(s) != n:
            raise ValueError("series must have equal length")
        if not math.isclose(s.dt, dt, rel_tol=1e-12):
            raise ValueError("series must share the same dt")


def time_lag(a: TimeSeries, b: TimeSeries, max_lag: float) -> float:
    """Shift (s) maximising the cross-covariance between ``a`` and ``b``.

    The lag ``l`` maximises ``sum_t a(t + l) * b(t)`` over mean-removed
    signals, so a positive value means ``b`` runs ahead of ``a``: a copy of
    ``a`` delayed by ``d`` returns ``-d``.  Ties go to the smallest ``|l|``.
    """
    _check_aligned(a, b)
    n = len(a)
    dt = a.dt
    if max_lag > 0.25 * n * dt + 1e-12:
        raise ValueError(f"max_lag {max_lag} exceeds 25% of the {n * dt:.3f} s record")
    xa = a.values - a.values.mean()
    xb = b.values - b.values.mean()
    if not (np.any(xa) and np.any(xb)):
        raise UndefinedPhaseError("time lag needs signals with non-zero variance")
    m = int(math.floor(max_lag / dt + 1e-9))
    lags = np.arange(-m, m + 1)
    cov = np.empty(lags.size)
    for idx, l in enumerate(lags):
        if l >= 0:
            cov[idx] = np.dot(xa[l:], xb[:n - l])
        else:
            cov[idx] = np.dot(xa[:n + l], xb[-l:])
    cov /= n
    best = cov.max()
    tol = 1e-12 * max(abs(best), 1e-300)
    candidates = lags[cov >= best - tol]
    l_star = candidates[np.argmin(np.abs(candidates))]
    return float(l_star * dt)


def relative_position_error(xbar: TimeSeries, xbar_dot: TimeSeries, xp: TimeSeries) -> TimeSeries:
    """Sign-aware position error of a player relative to the neighbour mean."""
    _check_aligned(xbar, xbar_dot, xp)
    diff = xbar.values - xp.values
    s_vel = np.sign(xbar_dot.values)
    s_pos = np.sign(xp.values)
    same = (s_vel == s_pos) & (s_vel != 0)
    rpe = np.where(same, diff * s_vel, np.abs(diff))
    return TimeSeries(rpe, xbar.dt)


def rms_to_mean(xp: TimeSeries, xbar: TimeSeries) -> float:
    _check_aligned(xp, xbar)
    d = xp.values - xbar.values
    return float(np.sqrt(np.mean(d * d)))


def relative_phase_error(xbar: TimeSeries, xp: TimeSeries) -> float:
    """Circular mean of the neighbour-mean phase minus the player's phase (rad)."""
    _check_aligned(xbar, xp)
    pb, pp = hilbert_phase(xbar), hilbert_phase(xp)
    lo, hi = _common_range([pb, pp])
    return circular_mean(pb.theta[lo:hi] - pp.theta[lo:hi])


@dataclass(frozen=True)
class TrialMetrics:
    rho_g: float
    delta_phi: float
    rms: float
    time_lag: float
    rpe_series: TimeSeries = field(repr=False)

    def __post_init__(self):
        if not 0.0 <= self.rho_g <= 1.0:
            raise ValueError(f"rho_g out of [0, 1]: {self.rho_g}")

    def summary(self) -> dict:
        rpe = self.rpe_series.values
        return {"rho_g": self.rho_g, "delta_phi": self.delta_phi, "rms": self.rms,
                "time_lag": self.time_lag, "rpe_mean": float(rpe.mean())}


def trial_metrics(positions: np.ndarray, velocities: np.ndarray, player: int,
                  xbar: np.ndarray, xbar_dot: np.ndarray, dt: float,
                  max_lag: float = 1.0) -> TrialMetrics:
    """All per-trial metrics for ``player`` in a recorded group.

    ``positions``/``velocities`` are (T, N) arrays of the whole group;
    ``xbar``/``xbar_dot`` hold the neighbour means seen by ``player``.
    """
    xp = TimeSeries(positions[:, player], dt)
    xb = TimeSeries(xbar, dt)
    phases = [hilbert_phase(TimeSeries(positions[:, k], dt)) for k in range(positions.shape[1])]
    return TrialMetrics(
        rho_g=group_sync_index(phases),
        delta_phi=relative_phase_error(xb, xp),
        rms=rms_to_mean(xp, xb),
        time_lag=time_lag(xb, xp, max_lag),
        rpe_series=relative_position_error(xb, TimeSeries(xbar_dot, dt), xp),
    )
