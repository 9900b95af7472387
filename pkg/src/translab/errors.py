"""Exception types raised across the package."""


class TranslabError(Exception):
    """Base class for all package errors."""


class InputError(TranslabError, ValueError):
    """Invalid user input (bad parameters, malformed files)."""


class DegenerateChart(InputError):
    """Coordinate tangents of a chart are (numerically) linearly dependent."""


class NonFiniteField(TranslabError, ArithmeticError):
    """A finite-difference derivative evaluated to inf or nan."""


class DomainError(InputError):
    """Parameter interval touches a singular boundary."""


class IntegrationFailure(TranslabError, RuntimeError):
    """Adaptive ODE step control failed."""


class SingularityError(TranslabError, RuntimeError):
    """Profile curve reached the rotation axis where it must not."""


class NoConvergence(TranslabError, RuntimeError):
    """Newton iteration did not reach the requested tolerance.

    The last iterate and its residual are attached as ``iterate`` and
    ``residual``.
    """

    def __init__(self, message, iterate=None, residual=None):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual


class WindowError(InputError):
    """Too few samples inside a fitting window."""


class EmptyRegion(TranslabError, ValueError):
    """No node satisfies the validity condition of a derived quantity."""


class ZeroResidual(TranslabError):
    """Residual is at roundoff level; a convergence order is undefined."""


class NonManifoldEdge(InputError):
    """An edge is shared by more than two faces."""


class NonOrientable(InputError):
    """Faces cannot be oriented consistently."""


class NoLevelSet(InputError):
    """Requested level lies outside the range of the height function."""


class SelfIntersection(TranslabError, RuntimeError):
    """A polyline crossed itself."""


class Collapsed(TranslabError, RuntimeError):
    """A curve shrank to (numerically) zero area."""


class PropertyViolation(TranslabError, AssertionError):
    """A constructed object fails one of its contract properties."""

    def __init__(self, name, detail=""):
        super().__init__(f"property {name!r} violated" + (f": {detail}" if detail else ""))
        self.name = name


class NonPlanarBoundary(InputError):
    """A boundary loop does not lie in a plane perpendicular to v."""


class CapOverlap(TranslabError, RuntimeError):
    """Caps glued to nested boundary loops intersect."""


class OpenMesh(InputError):
    """Operation requires a closed mesh."""


class EmptySweep(InputError):
    """Mesh does not meet any plane of the sweep."""
