"""
Exceptions raised by koopholo. Input problems are also ValueErrors.
"""

from typing import Optional, Tuple


class KoopholoError(Exception):
    """Base class for every error raised by the package."""


class DimensionMismatchError(KoopholoError, ValueError):
    def __init__(self, left: int, right: int):
        super().__init__(f"incompatible torus dimensions: {left} vs {right}")
        self.left = left
        self.right = right


class NullVectorError(KoopholoError, ValueError):
    def __init__(self, message: str = "cannot normalize null observable"):
        super().__init__(message)


class NotUnimodularError(KoopholoError, ValueError):
    def __init__(self, determinant: int):
        super().__init__(f"determinant ±1 required (det={determinant})")
        self.determinant = determinant


class ModeOverflowError(KoopholoError, OverflowError):
    pass


class OrthogonalNeighborsError(KoopholoError, ValueError):
    def __init__(self, message: str = "loop too coarse: orthogonal neighbors", index: Optional[int] = None):
        if index is not None:
            message = f"{message} (segment {index})"
        super().__init__(message)
        self.index = index


class FamilyDiscontinuityError(OrthogonalNeighborsError):
    def __init__(self, index: Optional[int] = None):
        super().__init__("family discontinuous at loop resolution; refine ParamLoop", index)


class ConvergenceError(KoopholoError, RuntimeError):
    def __init__(self, phases: Tuple[float, float], levels: int):
        prev, last = phases
        super().__init__(
            f"holonomy did not converge after {levels} doublings "
            f"(last phases {prev:.15g}, {last:.15g})"
        )
        self.phases = phases
        self.levels = levels


class TrivialHolonomyError(KoopholoError, ValueError):
    def __init__(self):
        super().__init__("holonomy trivial: one-dimensional ray space is a point")


class BasepointMismatchError(KoopholoError, ValueError):
    pass


class InconsistentObservationError(KoopholoError, ValueError):
    def __init__(self):
        super().__init__("observed state inconsistent with dynamics")


class NotCyclicError(KoopholoError, ValueError):
    pass


class SectionImpurityError(KoopholoError, ValueError):
    pass


class CutoffTooSmallError(KoopholoError, ValueError):
    def __init__(self, k_cut: int, required_cut: int):
        super().__init__(f"k_cut={k_cut} leaves a tail above 1e-16; use k_cut >= {required_cut}")
        self.k_cut = k_cut
        self.required_cut = required_cut


class ScenarioError(KoopholoError, ValueError):
    def __init__(self, message: str, key: Optional[str] = None):
        if key:
            message = f"{key}: {message}"
        super().__init__(message)
        self.key = key


_NUMERICAL = (
    NullVectorError,
    ModeOverflowError,
    OrthogonalNeighborsError,
    ConvergenceError,
    InconsistentObservationError,
    NotCyclicError,
    SectionImpurityError,
)


def error_category(exc: BaseException) -> str:
    """'numerical', 'io' or 'config'; decides the CLI exit status."""
    if isinstance(exc, _NUMERICAL):
        return "numerical"
    if isinstance(exc, OSError):
        return "io"
    return "config"
