"""Exception types shared across the package."""


class BallmaxError(Exception):
    """Base class for all package errors."""


class InvalidInstance(BallmaxError, ValueError):
    """Malformed instance data (bad shapes, non-finite values, bad lambda)."""


class DimensionMismatch(InvalidInstance):
    pass


class EmptySet(BallmaxError):
    """A ball of a generated intersection has non-positive squared radius.

    Not a failure as such: callers scanning over R treat it as "R too large".
    """

    def __init__(self, indices, radii_sq=None):
        self.indices = list(indices)
        self.radii_sq = radii_sq
        super().__init__(f"empty ball(s) at index {self.indices}")


class SolverError(BallmaxError):
    pass


class NoFeasibleStart(SolverError):
    def __init__(self, min_h):
        self.min_h = min_h
        super().__init__(f"min h = {min_h:.6g} > 1; the intersection is empty")


class MaxIterExceeded(SolverError):
    def __init__(self, best, message="iteration budget exhausted"):
        self.best = best
        super().__init__(message)


class SequenceOverflow(BallmaxError, ValueError):
    pass


class SamplingError(BallmaxError):
    pass


class EmptyElement(SamplingError):
    pass


class DegenerateDenominator(SamplingError):
    def __init__(self, hits, needed):
        self.hits = hits
        super().__init__(f"only {hits} denominator hits (need >= {needed})")


class NoInitialHit(SamplingError):
    def __init__(self, r):
        self.r = r
        super().__init__(f"no sphere sample hits the set at r = {r:.6g}; lower r_init or raise n_samples")


class ZeroDenominator(SamplingError):
    pass


class InconsistentBracket(SamplingError):
    pass


class FacetMissesSphere(BallmaxError, ValueError):
    def __init__(self, facet, delta, rho):
        self.facet = facet
        self.delta = delta
        super().__init__(f"facet {facet!r} at offset {delta:.6g} misses sphere of radius {rho:.6g}")


class TooLarge(BallmaxError, ValueError):
    pass


class EmptyIntersection(BallmaxError):
    pass


class DimensionUnsupported(BallmaxError, ValueError):
    pass
