"""Exception hierarchy shared across the engine.

Everything raised on bad user input derives from TliError so the CLI can
map it to exit code 2 uniformly.
"""


class TliError(Exception):
    """Base class for all engine errors."""


# --- graph documents ---

class SchemaError(TliError):
    """Interchange JSON is structurally invalid (missing field, wrong type,
    unknown kind/role string)."""


class CycleError(TliError):
    """Computation graph contains a cycle."""


class DanglingRefError(TliError):
    """An edge or parameter reference points at a nonexistent target."""


# --- tensor containers ---

class HeaderError(TliError):
    """Container header or index is malformed."""


class BoundsError(TliError):
    """A tensor region does not fit the container's data section."""


class NonFiniteError(TliError):
    """Tensor data contains NaN or Inf."""


# --- injection kernels ---

class RankMismatchError(TliError):
    """Source tensor rank differs from the target shape's rank."""


class ShapeMismatchError(TliError):
    """Mix candidates do not share a common shape."""


# --- matching / transfer ---

class EmptyModelError(TliError):
    """A model has no parameter tensors to match."""


class ShapeError(TliError):
    """Graph and tensor store disagree (missing tensor, bad rank)."""
