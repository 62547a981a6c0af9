"""Exception types raised by the library.

Every domain error derives from :class:`LevydecError` so callers (and the
CLI) can catch library failures in one place while programming mistakes
(bad argument types, malformed grids) still surface as ValueError/TypeError.
"""


class LevydecError(Exception):
    """Base class for all domain errors raised by levydec."""


class LevyConditionViolated(LevydecError):
    """The numerical Levy-condition integral diverges (tail-growth heuristic)."""


class QuadratureNotConverged(LevydecError):
    """Successive quadrature refinements disagree beyond the requested tolerance."""


class NegativeTime(LevydecError):
    """An evolution time t < 0 was requested."""


class AuditFailed(LevydecError):
    """A characteristic-function axiom failed; carries the axiom and witnesses."""

    def __init__(self, axiom, witnesses=(), detail=""):
        self.axiom = axiom
        self.witnesses = tuple(witnesses)
        msg = f"CF axiom violated: {axiom}"
        if detail:
            msg += f" ({detail})"
        if len(self.witnesses):
            msg += f"; witness points: {list(self.witnesses)[:4]}"
        super().__init__(msg)


class ZeroKernel(LevydecError):
    """The gas kernel integrates to zero; no scattering rate can be defined."""


class NonIntegrableKernel(LevydecError):
    """The gas kernel has non-finite values or a non-convergent integral."""


class AlphaOutOfRange(LevydecError):
    """Stable exponent alpha outside (0, 2]."""


class InfiniteMoment(LevydecError):
    """A requested moment of the momentum density does not exist."""


class GridTooCoarse(LevydecError):
    """Density reconstruction changed the mass beyond the allowed budget."""


class TruncationTooSmall(LevydecError):
    """Poisson series truncation leaves a tail above tail_tol."""

    def __init__(self, tail, tail_tol, suggested):
        self.tail = tail
        self.suggested = suggested
        super().__init__(
            f"truncated Poisson tail {tail:.3e} exceeds tail_tol {tail_tol:.3e}; "
            f"suggest truncation >= {suggested}"
        )


class UnnormalizedWeights(LevydecError):
    """Path-separation weights are not a normalized discrete distribution."""


class SupportClipped(LevydecError):
    """More than the allowed probability mass lies outside the transform window."""


class NonHermitianInput(LevydecError):
    """CF samples passed to the inverse transform are not Hermitian-symmetric."""


class WindowTooNarrow(LevydecError):
    """The momentum window cannot hold the convolved support without aliasing."""
