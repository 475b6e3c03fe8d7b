"""Streaming raw volumes: sidecar metadata, chunked reads, label output.

A volume is a headerless binary file plus a ``<name>.meta`` sidecar. Nothing
is ever loaded whole: readers hand out fixed-size chunks of float64 values
normalized into [0, 1].
"""

import tempfile
from pathlib import Path

import numpy as np

from voxsample import open_volume, write_label_volume, write_sidecar
from voxsample.volume_io import stream_chunks, stream_raw_chunks

workdir = Path(tempfile.mkdtemp(prefix="voxdemo_"))
print(f"working in {workdir}\n")

# Write a tiny 8x8x4 u16 volume by hand: a linear ramp of intensities.
dims = (8, 8, 4)
n = dims[0] * dims[1] * dims[2]
ramp = np.linspace(0, 65535, n).astype("<u2")
data_path = workdir / "ramp.raw"
data_path.write_bytes(ramp.tobytes())
write_sidecar(workdir / "ramp.raw.meta", dims, "u16")
print("sidecar contents:")
print((workdir / "ramp.raw.meta").read_text())

# Opening validates dims, element type, and the file size.
handle = open_volume(data_path)
print(f"opened {handle.dims} {handle.element_type}, {handle.voxel_count} voxels")

# Chunks arrive in linear order (x fastest) with their absolute origin.
print("\nstreaming in chunks of 100:")
for chunk in stream_chunks(handle, chunk_len=100):
    print(f"  origin {chunk.origin_index:3d}  len {len(chunk):3d}  "
          f"first {chunk.values[0]:.4f}  last {chunk.values[-1]:.4f}")

# Integer volumes normalize by the dtype maximum, so the ramp maps onto [0, 1].
values = np.concatenate([c.values for c in stream_chunks(handle)])
print(f"\nnormalized range: [{values.min():.4f}, {values.max():.4f}]")

# Label volumes go the other way: u8 cluster indices, written chunk by chunk.
labels = (values > 0.5).astype(np.uint8)
label_handle = write_label_volume(dims, labels, workdir / "labels.raw")
back = np.concatenate(list(stream_raw_chunks(label_handle)))
print(f"label volume round trip ok: {np.array_equal(back, labels)}")
print(f"label counts: {np.bincount(back).tolist()}")
