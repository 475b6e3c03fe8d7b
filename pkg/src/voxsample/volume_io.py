"""Raw-volume I/O: sidecar-described binary grids streamed in bounded chunks.

A volume is a headerless binary file of voxels in linear index order
(x fastest: ``index = x + dims_x * (y + dims_y * z)``) described by a plain
text sidecar ``<data>.meta`` with one ``key: value`` pair per line.

Recognized sidecar keys::

    dims: 128 128 128        # voxel counts, x y z
    element_type: u8         # u8 | u16 | f32
    byte_order: little       # little | big, optional (default little)
    value_min: 0.0           # required for f32
    value_max: 1.0

Streams always yield float64 values normalized into [0, 1]: integer types
divide by the type maximum, floats are min-max scaled by the recorded range
and clamped.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Union

import numpy as np

from .errors import (
    LabelOverflow,
    MalformedSidecar,
    MissingFile,
    ReadFailure,
    SizeMismatch,
    WriteFailure,
)

DEFAULT_CHUNK_LEN = 1 << 20

_ELEMENT_TYPES = {
    "u8": ("u1", 255.0),
    "u16": ("u2", 65535.0),
    "f32": ("f4", None),
}
_BYTE_ORDERS = {"little": "<", "big": ">"}
_KNOWN_KEYS = {"dims", "element_type", "byte_order", "value_min", "value_max"}


@dataclass(frozen=True)
class VolumeHandle:
    """Immutable descriptor of a raw grayscale volume on disk."""

    data_path: Path
    meta_path: Path
    dims: tuple[int, int, int]
    element_type: str
    byte_order: str
    value_min: float | None = None
    value_max: float | None = None

    @property
    def voxel_count(self) -> int:
        x, y, z = self.dims
        return x * y * z

    @property
    def element_width(self) -> int:
        return np.dtype(_ELEMENT_TYPES[self.element_type][0]).itemsize

    def numpy_dtype(self) -> np.dtype:
        return np.dtype(_BYTE_ORDERS[self.byte_order] + _ELEMENT_TYPES[self.element_type][0])

    def chunks(self, chunk_len: int = DEFAULT_CHUNK_LEN) -> Iterator["ValueChunk"]:
        """Fresh single-consumer cursor over the normalized value stream."""
        return stream_chunks(self, chunk_len)


@dataclass(frozen=True)
class ValueChunk:
    """Contiguous run of normalized values starting at a linear voxel index."""

    values: np.ndarray
    origin_index: int

    def __len__(self) -> int:
        return len(self.values)


def _paths_from(path: Union[str, Path]) -> tuple[Path, Path]:
    # `X.meta` describes data file `X`; a bare path means the data file.
    p = Path(path)
    if p.suffix == ".meta":
        return p.with_suffix(""), p
    return p, Path(str(p) + ".meta")


def parse_sidecar(meta_path: Union[str, Path], known_keys: set[str] | None = None) -> dict[str, str]:
    meta_path = Path(meta_path)
    known = _KNOWN_KEYS if known_keys is None else known_keys
    if not meta_path.is_file():
        raise MissingFile(f"sidecar not found: {meta_path}")
    entries: dict[str, str] = {}
    for lineno, line in enumerate(meta_path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise MalformedSidecar(f"{meta_path}:{lineno}: expected 'key: value', got {line!r}")
        key = key.strip()
        if key not in known:
            raise MalformedSidecar(f"{meta_path}:{lineno}: unknown key {key!r}")
        if key in entries:
            raise MalformedSidecar(f"{meta_path}:{lineno}: duplicate key {key!r}")
        entries[key] = value.strip()
    return entries


def write_sidecar(meta_path: Union[str, Path], dims: tuple[int, int, int],
                  element_type: str, byte_order: str = "little",
                  value_min: float | None = None, value_max: float | None = None) -> None:
    lines = [
        f"dims: {dims[0]} {dims[1]} {dims[2]}",
        f"element_type: {element_type}",
        f"byte_order: {byte_order}",
    ]
    if value_min is not None:
        lines.append(f"value_min: {value_min!r}")
    if value_max is not None:
        lines.append(f"value_max: {value_max!r}")
    Path(meta_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def open_volume(meta_path: Union[str, Path], scan_range: bool = False) -> VolumeHandle:
    """Open a sidecar-described raw volume, validating dims against file size.

    ``meta_path`` may be the sidecar (``X.meta``) or the data file (``X``).
    For f32 volumes without a recorded range, ``scan_range=True`` runs a
    one-time pre-pass over the data, records min/max into the sidecar, and
    proceeds; otherwise the missing keys are an error.
    """
    data_path, meta = _paths_from(meta_path)
    entries = parse_sidecar(meta)

    for required in ("dims", "element_type"):
        if required not in entries:
            raise MalformedSidecar(f"{meta}: missing required key {required!r}")

    parts = entries["dims"].split()
    if len(parts) != 3:
        raise MalformedSidecar(f"{meta}: dims must have three components, got {entries['dims']!r}")
    try:
        dims = tuple(int(p) for p in parts)
    except ValueError:
        raise MalformedSidecar(f"{meta}: non-integer dims {entries['dims']!r}") from None
    if any(d < 1 for d in dims):
        raise MalformedSidecar(f"{meta}: dims must all be >= 1, got {dims}")

    element_type = entries["element_type"]
    if element_type not in _ELEMENT_TYPES:
        raise MalformedSidecar(f"{meta}: unsupported element_type {element_type!r}")

    byte_order = entries.get("byte_order", "little")
    if byte_order not in _BYTE_ORDERS:
        raise MalformedSidecar(f"{meta}: byte_order must be little|big, got {byte_order!r}")

    value_min = value_max = None
    if element_type == "f32":
        if "value_min" in entries and "value_max" in entries:
            try:
                value_min = float(entries["value_min"])
                value_max = float(entries["value_max"])
            except ValueError:
                raise MalformedSidecar(f"{meta}: non-numeric value_min/value_max") from None
            if value_max < value_min:
                raise MalformedSidecar(f"{meta}: value_max < value_min")
        elif scan_range:
            pass  # filled in below, after size validation
        else:
            raise MalformedSidecar(f"{meta}: f32 volumes require value_min and value_max")
    else:
        # Recorded ranges are meaningless for integer data; parse and ignore.
        pass

    if not data_path.is_file():
        raise MissingFile(f"data file not found: {data_path}")

    handle = VolumeHandle(data_path, meta, dims, element_type, byte_order, value_min, value_max)
    expected = handle.voxel_count * handle.element_width
    actual = os.path.getsize(data_path)
    if actual != expected:
        raise SizeMismatch(
            f"{data_path}: {actual} bytes on disk, dims {dims} x {element_type} needs {expected}"
        )

    if element_type == "f32" and value_min is None:
        value_min, value_max = _scan_float_range(handle)
        write_sidecar(meta, dims, element_type, byte_order, value_min, value_max)
        handle = VolumeHandle(data_path, meta, dims, element_type, byte_order, value_min, value_max)
    return handle


def _scan_float_range(handle: VolumeHandle) -> tuple[float, float]:
    lo, hi = np.inf, -np.inf
    for chunk in _raw_chunks(handle, DEFAULT_CHUNK_LEN):
        lo = min(lo, float(chunk.min()))
        hi = max(hi, float(chunk.max()))
    return lo, hi


def _raw_chunks(handle: VolumeHandle, chunk_len: int) -> Iterator[np.ndarray]:
    if chunk_len < 1:
        raise ValueError(f"chunk_len must be >= 1, got {chunk_len}")
    dtype = handle.numpy_dtype()
    remaining = handle.voxel_count
    with open(handle.data_path, "rb") as f:
        while remaining > 0:
            want = min(chunk_len, remaining)
            chunk = np.fromfile(f, dtype=dtype, count=want)
            if len(chunk) < want:
                raise ReadFailure(
                    f"{handle.data_path}: stream truncated, wanted {want} values, got {len(chunk)}"
                )
            remaining -= want
            yield chunk


def _normalize(chunk: np.ndarray, handle: VolumeHandle) -> np.ndarray:
    _, int_max = _ELEMENT_TYPES[handle.element_type]
    if int_max is not None:
        return chunk.astype(np.float64) / int_max
    lo, hi = handle.value_min, handle.value_max
    values = chunk.astype(np.float64)
    if hi == lo:
        return np.zeros_like(values)
    return np.clip((values - lo) / (hi - lo), 0.0, 1.0)


def stream_chunks(handle: VolumeHandle, chunk_len: int = DEFAULT_CHUNK_LEN) -> Iterator[ValueChunk]:
    """Stream the whole volume once as normalized float64 chunks.

    Chunks cover linear indices 0..N-1 exactly once, in order. Restartable:
    every call opens a fresh cursor.
    """
    origin = 0
    for chunk in _raw_chunks(handle, chunk_len):
        yield ValueChunk(_normalize(chunk, handle), origin)
        origin += len(chunk)


def stream_raw_chunks(handle: VolumeHandle, chunk_len: int = DEFAULT_CHUNK_LEN) -> Iterator[np.ndarray]:
    """Stream stored values without normalization (e.g. label volumes)."""
    return _raw_chunks(handle, chunk_len)


def write_label_volume(dims: tuple[int, int, int], labels: Iterable, out_path: Union[str, Path]) -> VolumeHandle:
    """Write a u8 raw label volume plus sidecar for a grid of ``dims``.

    ``labels`` is a flat array or an iterable of integer array chunks whose
    concatenation must have exactly ``prod(dims)`` entries, each in [0, 256).
    """
    out_path = Path(out_path)
    n = dims[0] * dims[1] * dims[2]
    written = 0
    chunks = [labels] if isinstance(labels, np.ndarray) else labels
    try:
        with open(out_path, "wb") as f:
            for chunk in chunks:
                arr = np.asarray(chunk)
                if arr.size == 0:
                    continue
                if arr.min() < 0 or arr.max() > 255:
                    raise LabelOverflow(
                        f"cluster index {int(arr.max() if arr.max() > 255 else arr.min())} "
                        "does not fit into u8"
                    )
                arr.astype(np.uint8).tofile(f)
                written += arr.size
                if written > n:
                    raise WriteFailure(f"label stream longer than {n} voxels")
    except OSError as exc:
        raise WriteFailure(f"cannot write {out_path}: {exc}") from exc
    if written != n:
        raise WriteFailure(f"label stream had {written} entries, volume has {n} voxels")
    write_sidecar(Path(str(out_path) + ".meta"), dims, "u8", "little")
    return open_volume(out_path)


def write_labels(handle: VolumeHandle, labels: Iterable, out_path: Union[str, Path]) -> VolumeHandle:
    """Write per-voxel cluster indices for ``handle`` as a u8 label volume."""
    return write_label_volume(handle.dims, labels, out_path)


class ArraySource:
    """In-memory stand-in for a volume: values already normalized to [0, 1].

    Implements the same duck interface as VolumeHandle (``voxel_count``,
    ``chunks``, ``dims``), so samplers and pipelines accept either.
    """

    def __init__(self, values, dims: tuple[int, int, int] | None = None):
        self.values = np.asarray(values, dtype=np.float64).ravel()
        if self.values.size and (self.values.min() < 0.0 or self.values.max() > 1.0):
            raise ValueError("ArraySource values must lie in [0, 1]")
        self.dims = dims if dims is not None else (self.values.size, 1, 1)

    @property
    def voxel_count(self) -> int:
        return self.values.size

    def chunks(self, chunk_len: int = DEFAULT_CHUNK_LEN) -> Iterator[ValueChunk]:
        if chunk_len < 1:
            raise ValueError(f"chunk_len must be >= 1, got {chunk_len}")
        for start in range(0, self.values.size, chunk_len):
            yield ValueChunk(self.values[start:start + chunk_len], start)
