"""
How exact is the direct frames-to-voxel shortcut?
=================================================

The direct path floors the accumulated change once per frame; the
oracle walks a continuous piecewise-linear signal and bins individual
events. Randomized trials compare the two, per regime:

* equal thresholds: agreement is a theorem -- deviation must be 0;
* per-pixel monotonic change with unequal thresholds: also exact;
* free (unequal thresholds, arbitrary change): measured, not asserted.
"""

import time

from vid2voxel import run_oracle_trials
from vid2voxel.verify import REGIMES

print(f"{'regime':<18} {'trials':>7} {'events':>9} {'max dev':>8} "
      f"{'mismatched':>11} {'time':>7}")
for regime in REGIMES:
    t0 = time.monotonic()
    report = run_oracle_trials(regime, trials=1000, grid=(8, 8), n_frames=6,
                               seed=2026)
    elapsed = time.monotonic() - t0
    print(f"{report.regime:<18} {report.trials:>7} {report.events_total:>9} "
          f"{report.max_abs_deviation:>8} {report.mismatched_trials:>11} "
          f"{elapsed:>6.2f}s")

print()
print("With frames as the finest available timing, interpolation makes every")
print("per-interval segment monotonic, so the free regime lands at zero too;")
print("the approximation only loosens for real sub-frame dynamics no")
print("frame-based pipeline can see.")
