"""Exception hierarchy shared by all kerrwigner modules."""


class KerrWignerError(Exception):
    """Base class for every error raised by this package."""


class BandwidthViolationError(KerrWignerError, ValueError):
    def __init__(self, row, col, m1, m2):
        self.row, self.col = row, col
        super().__init__(
            f"entry ({row}, {col}) lies outside the band "
            f"(offset {col - row} not in [-{m1}, {m2}])"
        )


class SingularMatrixError(KerrWignerError, ArithmeticError):
    pass


class DimensionMismatchError(KerrWignerError, ValueError):
    pass


class WindowExceedsGridError(KerrWignerError, ValueError):
    pass


class NormalizationDriftError(KerrWignerError, ArithmeticError):
    def __init__(self, tau, integral, tolerance, fields=None):
        self.tau = tau
        self.integral = integral
        self.tolerance = tolerance
        # snapshots recorded before the abort, kept for partial output
        self.fields = fields or []
        super().__init__(
            f"|integral W - 1| = {abs(integral - 1):.3e} exceeds {tolerance:g} at tau={tau:.6g}; "
            "mesh too coarse or time step too large"
        )


class InsufficientTermsError(KerrWignerError, ArithmeticError):
    pass


class PrecisionTooLowError(KerrWignerError, ValueError):
    pass


class GridMismatchError(KerrWignerError, ValueError):
    pass


class WindowTooLargeError(KerrWignerError, ValueError):
    pass


class InvalidManifestError(KerrWignerError, ValueError):
    pass


class HeaderMismatchError(KerrWignerError, ValueError):
    pass
