"""How fast does sampling error shrink with sample size?

The worst-case interval-frequency error of a stratified sample follows a
1/sqrt(M) law: quadrupling the sample size should roughly halve the median
error. This demo measures that shape on a synthetic phantom.
"""

import tempfile
from pathlib import Path

from voxsample import (
    BoundExperimentConfig,
    error_scaling_experiment,
    exponential_boundaries,
    generate_phantom,
    scaling_table,
)

workdir = Path(tempfile.mkdtemp(prefix="voxdemo_"))

phantom = generate_phantom(
    (48, 48, 48),
    [(0.1, 0.05, 0.7), (0.5, 0.05, 0.2), (0.9, 0.05, 0.1)],
    seed=2,
    out_path=workdir / "volume.raw",
)

cfg = BoundExperimentConfig(
    sizes=(128, 512, 2048),
    seeds_per_size=40,
    grid_size=16,
    base_seed=2,
)
rows = error_scaling_experiment(phantom.handle, exponential_boundaries(4), cfg)

print("median sup-interval error by sample size (40 seeds each):\n")
print(scaling_table(rows))

print("\nshrink factor per 4x sample size (1/sqrt law predicts 2):")
for prev, nxt in zip(rows, rows[1:]):
    print(f"  M={prev.size:4d} -> M={nxt.size:4d}: {prev.median_error / nxt.median_error:.2f}x")
