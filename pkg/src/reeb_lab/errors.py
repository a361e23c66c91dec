"""Exception hierarchy shared by all reeb_lab modules.

Every error raised on invalid input derives from ReebLabError so the CLI
can map it to exit code 2; audit failures get their own branch (exit 3).
"""

from __future__ import annotations


class ReebLabError(Exception):
    """Base class for all validation and computation errors."""


# -- symplectic linear algebra ------------------------------------------------

class OddDimension(ReebLabError):
    pass


class NotSymplectic(ReebLabError):
    def __init__(self, residual: float, tol: float):
        self.residual = residual
        self.tol = tol
        super().__init__(f"form residual {residual:.3e} exceeds tol {tol:.1e}")


class BorderlineSpectrum(ReebLabError):
    """An eigenvalue sits in the ambiguous band around the unit circle."""


class NotUnipotent(ReebLabError):
    pass


class UnresolvedNormalForm(ReebLabError):
    """Normal-form counts could not be extracted unambiguously at tol."""


# -- index computations -------------------------------------------------------

class DegenerateEndpoint(ReebLabError):
    pass


class SamplingTooCoarse(ReebLabError):
    pass


class PathNotSplittable(ReebLabError):
    """Sampled path does not decompose into invariant symplectic 2-planes."""


class DimensionMismatch(ReebLabError):
    pass


# -- Hamiltonian profiles and action functions --------------------------------

class ConvexityViolation(ReebLabError):
    def __init__(self, r: float, value: float):
        self.r = r
        self.value = value
        super().__init__(f"h''({r:.6g}) = {value:.3e} < 0")


class SlopeMismatch(ReebLabError):
    pass


class JoinDiscontinuity(ReebLabError):
    pass


class PeriodOutOfRange(ReebLabError):
    pass


class ActionOutOfRange(ReebLabError):
    pass


class NotDominated(ReebLabError):
    pass


class UncertifiedRegion(ReebLabError):
    pass


class EnergyAboveThreshold(ReebLabError):
    pass


class BadGeometry(ReebLabError):
    pass


class MalformedTrace(ReebLabError):
    pass


# -- recurrence search --------------------------------------------------------

class IterateUnderflow(ReebLabError):
    pass


class HypothesisFailed(ReebLabError):
    pass


# -- model flows --------------------------------------------------------------

class DegenerateEllipsoid(ReebLabError):
    pass


# -- graphs and barcodes ------------------------------------------------------

class MalformedGraph(ReebLabError):
    pass


class NotADifferential(ReebLabError):
    pass


class FiltrationViolation(ReebLabError):
    pass


# -- orbit-system audit -------------------------------------------------------

class ShellMarginNotFound(ReebLabError):
    """No positive shell margin fits all orbit levels inside (1, r_max)."""


class JOutOfRange(ReebLabError):
    pass


class AuditError(ReebLabError):
    """Branch for failures of the audit itself, not of input validation."""


class NotExcluded(AuditError):
    def __init__(self, message: str, context: dict):
        self.context = context
        super().__init__(message)


class AuditFailed(AuditError):
    def __init__(self, message: str, first_failure: "NotExcluded | None" = None):
        self.first_failure = first_failure
        super().__init__(message)


# -- planar fixed points ------------------------------------------------------

class FixedPointOnCircle(ReebLabError):
    pass
