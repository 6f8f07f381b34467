"""Exception types shared across the package."""


class JCTriangleError(Exception):
    """Base class for all package errors."""


class PreconditionError(JCTriangleError, ValueError):
    """Parameters violate a structural assumption of the effective model."""


class DefectiveAtEP(JCTriangleError):
    """Eigenvectors are (numerically) self-orthogonal; biorthogonal normalization is impossible."""

    def __init__(self, defectiveness, tol):
        self.defectiveness = defectiveness
        self.tol = tol
        super().__init__(
            f"eigenbasis is defective: min |<l|r>| = {defectiveness:.3e} <= tol = {tol:.1e}"
        )


class ConvergenceError(JCTriangleError, ArithmeticError):
    """The dense eigensolver failed to converge."""


class OutOfReach(JCTriangleError, ValueError):
    """No third-order exceptional line exists for the requested couplings."""


class NoRealCriticalPoint(JCTriangleError, ValueError):
    """A critical gain/loss formula has no real solution."""


class DegenerateExpansion(JCTriangleError, ArithmeticError):
    """The leading Puiseux coefficient vanishes and the expansion does not apply."""


class BranchPairingAmbiguous(JCTriangleError):
    """Two eigenvalue matchings are equally good; branch continuity is undefined."""
