"""Exception hierarchy shared by all voxsample modules."""


class VoxsampleError(Exception):
    """Base class for all voxsample errors."""


# --- volume I/O ---

class MissingFile(VoxsampleError):
    """Sidecar or data file does not exist."""


class MalformedSidecar(VoxsampleError):
    """Sidecar text is unparseable, has unknown keys, or misses required keys."""


class SizeMismatch(VoxsampleError):
    """Data file byte size does not match dims x element width."""


class ReadFailure(VoxsampleError):
    """Volume stream was truncated mid-read."""


class WriteFailure(VoxsampleError):
    """Label volume could not be written, or the label stream was malformed."""


class LabelOverflow(VoxsampleError):
    """A cluster index does not fit into an unsigned 8-bit label."""


# --- sampling ---

class EmptyStream(VoxsampleError):
    """Sampling or counting was attempted on a stream with zero elements."""


# --- stratification ---

class InvalidK(VoxsampleError):
    """Stratum count must be a positive integer."""


class InvalidThreshold(VoxsampleError):
    """Mixed-strategy threshold must lie strictly inside (0, 1)."""


class OutOfRange(VoxsampleError):
    """A value lies outside the normalized range [0, 1]."""


class InvalidM(VoxsampleError):
    """Total sample size must be a positive integer."""


class InvalidStrategy(VoxsampleError):
    """Strategy spec string could not be parsed."""


# --- clustering ---

class TooFewPoints(VoxsampleError):
    """Fewer sample points than clusters."""


class MalformedModel(VoxsampleError):
    """A serialized model file cannot be parsed."""


class DegenerateSampleWarning(UserWarning):
    """All sample values identical; the fit collapses to copies of one value."""


# --- segmentation ---

class InsufficientSample(VoxsampleError):
    """Resolved sample size is smaller than the number of clusters."""


# --- metrics ---

class LengthMismatch(VoxsampleError):
    """Two label streams have different lengths."""


class TooFewItems(VoxsampleError):
    """Pair-counting metrics need at least two items."""


# --- phantoms / bound lab ---

class InvalidFractions(VoxsampleError):
    """Material volume fractions must be nonnegative and sum to one."""


class EmptyInput(VoxsampleError):
    """An experiment input (population or sample) is empty."""
