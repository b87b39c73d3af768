"""Exception and warning types raised across the package."""


class ShutterCertError(Exception):
    """Base class for all package errors."""


class InfeasibleStats(ShutterCertError, ValueError):
    """Observed statistics lie outside the set reachable by the detector."""


class EmptySupport(ShutterCertError, ValueError):
    """A mixture was built with every weight equal to zero."""


class GuardExceeded(ShutterCertError, RuntimeError):
    """The photon-number search left its guard without a certified optimum.

    ``upper_bound`` carries a valid (weak-duality) upper bound on the
    guessing probability, so callers can still proceed conservatively.
    """

    def __init__(self, message, upper_bound=1.0):
        super().__init__(message)
        self.upper_bound = upper_bound


class ScaleExceeded(ShutterCertError, ValueError):
    """An oracle instance is larger than the brute-force solvers accept."""


class InsufficientEntropy(ShutterCertError, ValueError):
    """Leftover-hash sizing leaves no output bits."""


class LengthMismatch(ShutterCertError, ValueError):
    """Bit-vector lengths are inconsistent with the hash dimensions."""


class SeedReuseExceeded(ShutterCertError, RuntimeError):
    """A Toeplitz seed was used more often than its security budget allows."""


class FormatError(ShutterCertError, ValueError):
    """A rounds, certificate or bits file does not parse."""


class DegenerateSource(UserWarning):
    """Issued when a simple source has p in {0, 1}; certification returns g* = 1."""


# lp-oracle spelling
Infeasible = InfeasibleStats
