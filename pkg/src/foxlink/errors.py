"""Exception hierarchy shared by the analytic modules."""


class FoxlinkError(Exception):
    pass


class SpecError(FoxlinkError, ValueError):
    """Invalid parameter block."""


class ContourError(SpecError):
    """No vertical contour separates the left and right pole sets."""


class PoleError(FoxlinkError, ValueError):
    """Gamma function evaluated at a pole."""


class CoincidingPoleError(FoxlinkError):
    """Two Gamma factors share a pole; the residue series needs simple poles."""


class DegeneracyError(FoxlinkError):
    """Tied exponents: an asymptotic term hits a double pole."""


class DivergenceError(FoxlinkError):
    """A residue series does not converge for the requested argument."""


class ConvergenceError(FoxlinkError):
    """A quadrature failed to meet its tolerance or produced an out-of-range value."""


class ConsistencyError(FoxlinkError):
    """Two independent evaluation routes disagree beyond tolerance."""
