"""Exception hierarchy. Each class carries the short failure tag used in reports."""


class LensJetError(Exception):
    tag = "error"


class DomainError(LensJetError, ValueError):
    tag = "out-of-domain"


class DerivativeOrderError(LensJetError, ValueError):
    tag = "unsupported-order"


class GrazingError(LensJetError):
    tag = "grazing"


class TrappedError(LensJetError):
    tag = "trapped"


class ToleranceFailure(LensJetError):
    tag = "tolerance-failure"


class NoTurningPointError(LensJetError):
    tag = "no-turning-point"


class DegenerateTurningError(LensJetError):
    tag = "degenerate-turning"


class NoChordError(LensJetError):
    tag = "no-chord"


class ShootingError(LensJetError):
    tag = "shooting-failed"


class GridMismatchError(LensJetError, ValueError):
    tag = "grid-mismatch"


class ConstraintViolation(LensJetError):
    """Raised when a constructed profile breaks one clause of its constraint list."""

    tag = "constraint-violation"

    def __init__(self, clause, detail=""):
        self.clause = clause
        super().__init__(f"{clause}: {detail}" if detail else clause)


class RootFindingError(LensJetError):
    tag = "root-finding-failure"


class ConcaveWindowError(LensJetError):
    tag = "concave-window"


class FDUnstableError(LensJetError):
    tag = "fd-unstable"


class NonTransversalError(LensJetError):
    tag = "non-transversal"


class DegenerateDirectionsError(LensJetError):
    tag = "degenerate-directions"
