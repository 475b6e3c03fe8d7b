"""Reservoir sampling with geometric skips.

A fixed-size uniform sample from a stream of unknown length, in one pass.
After the reservoir fills, the sampler jumps ahead by geometrically
distributed gaps instead of inspecting every element, so the work scales
with M log(N/M) rather than N.
"""

import math

import numpy as np

from voxsample import ReservoirSampler, reservoir_sample
from voxsample.sampler import skip_gap, update_weight

# The two pieces of per-step arithmetic, on concrete numbers.
print("gap lengths for W=0.5:")
for u in (0.9, 0.5, 0.26, 0.05):
    print(f"  u={u:4.2f} -> skip {skip_gap(0.5, u)} elements")
print(f"weight decay from 1.0 (M=100): {update_weight(1.0, 0.37, 100):.6f}")

# How much of a large stream does one sample actually touch?
class InspectionCounter:
    def __init__(self, values):
        self.values = values
        self.count = 0

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        self.count += 1
        return self.values[i]


rng = np.random.default_rng(7)
n, m = 1_000_000, 256
stream = InspectionCounter(rng.random(n))
sampler = ReservoirSampler(m, seed=7)
sampler.extend(stream)
expected = m + m * math.log(n / m)
print(f"\nstream of {n:,} values, reservoir of {m}:")
print(f"  elements inspected: {stream.count:,} (expected about {expected:,.0f})")
print(f"  fraction of stream touched: {stream.count / n:.2%}")

# Chunk boundaries are invisible: feeding the same stream in any chunking
# produces the bit-identical sample.
values = rng.random(10_000)
whole = reservoir_sample(values, m=64, seed=3)
piecewise = ReservoirSampler(64, seed=3)
for start in range(0, len(values), 997):
    piecewise.extend(values[start:start + 997])
print(f"\nchunking invariance: {np.array_equal(whole.values, piecewise.result().values)}")

# Uniformity: every index should appear with frequency M/N.
n, m, trials = 2_000, 100, 4_000
counts = np.zeros(n)
grid = np.arange(n) / n
for seed in range(trials):
    counts[np.rint(reservoir_sample(grid, m=m, seed=seed).values * n).astype(int)] += 1
freq = counts / trials
print(f"\ninclusion frequency over {trials} seeds (target {m / n}):")
print(f"  mean {freq.mean():.4f}  min {freq.min():.4f}  max {freq.max():.4f}")
