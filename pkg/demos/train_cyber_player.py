"""
Training and validating a cyber player
======================================

The cyber player learns in shadow: it watches the target virtual player's
neighbours and is rewarded for matching the target, while the group itself
runs untouched.  Afterwards it takes the target's seat and the group is
measured with and without it.

The default desk-scale run (300 trials of 500 steps) takes a couple of
minutes.  Much shorter runs usually have not learned anything yet, and an
untrained cyber player can drive the group out of its safe range.  Pass a
trial count to change it: ``python demos/train_cyber_player.py 600``.
"""
import sys

from mirrorgroup.config import ExperimentConfig
from mirrorgroup.harness import run_topology_sweep, train_cp, validate_cp

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 300
cfg = ExperimentConfig(seed=0, trial_count=trials)


def progress(row):
    if row.trial % 50 == 0:
        print(f"trial {row.trial:4d}  eps {row.epsilon:.3f}  rms cp {row.rms_cp:.3f}  "
              f"rms target {row.rms_tp:.3f}  reseats {row.reseats}")


res = train_cp(cfg, progress=progress, early_stop=False)
gaps = res.gaps()
w = min(50, len(gaps) // 2)
print(f"|RMS_TP - RMS_CP|: first {w} trials {gaps[:w].mean():.3f}, last {w} trials {gaps[-w:].mean():.3f}")

# Closed loop on the complete graph: the cyber player's motion now feeds the group.
table = validate_cp(res.net, cfg, "complete", trials=5).table()
for cond in ("cp", "vp"):
    m = table[cond]
    print(f"{cond}: rho_g {m['rho_g']['mean']:.3f}  rms {m['rms']['mean']:.4f}  "
          f"delta_phi {m['delta_phi']['mean']:+.3f}  lag {m['time_lag']['mean']:+.3f} s")

# The same network, unchanged, on the other topologies.
rows = run_topology_sweep(res.net, cfg, trials=3)
for row in rows:
    print(f"{row['topology']:8s} rho_g VP {row['rho_vp']:.3f}  CP {row['rho_cp']:.3f}")
print(f"largest |delta rho|: {max(abs(r['rho_cp'] - r['rho_vp']) for r in rows):.3f}")
