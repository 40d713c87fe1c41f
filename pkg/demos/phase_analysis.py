"""
Measuring coordination
======================

The analysis tools work on plain position series: Hilbert phases, the
group synchronisation index, the lag that maximises cross-covariance, and
position errors relative to the group.
"""
import numpy as np

from mirrorgroup.analysis import (PhaseSeries, TimeSeries, group_sync_index, hilbert_phase,
                                  relative_phase_error, rms_to_mean, time_lag)

dt = 0.03
t = np.arange(2000) * dt
w = 2 * np.pi * 0.5

# Instantaneous phase of a 0.5 Hz cosine advances at pi rad/s.
p = hilbert_phase(TimeSeries(np.cos(w * t), dt))
print("trimmed range:", p.valid_range, " mean rate:", np.mean(np.diff(p.valid)) / dt)

# Copies with constant offsets are perfectly coordinated...
copies = [hilbert_phase(TimeSeries(np.cos(w * t + off), dt)) for off in (0.0, 0.5, 1.0, 2.0)]
print("offset copies rho_g:", round(group_sync_index(copies), 9))

# ...independent wanderers are not.
rng = np.random.default_rng(0)
walks = np.cumsum(rng.uniform(-0.3, 0.3, size=(4, 2000)), axis=1) + w * t
print("random walks rho_g:", round(group_sync_index([PhaseSeries(th, (0, 2000)) for th in walks]), 3))

# A follower that trails by 0.12 s: the lag comes out negative.
leader = TimeSeries(np.sin(w * t), dt)
follower = TimeSeries(np.sin(w * (t - 0.12)), dt)
print("lag(leader, follower):", time_lag(leader, follower, max_lag=1.0), "s")
print("relative phase:", round(relative_phase_error(leader, follower), 3), "rad")
print("RMS distance:", round(rms_to_mean(follower, leader), 4))
