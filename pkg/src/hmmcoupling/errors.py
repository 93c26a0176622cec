"""Exception hierarchy.

The CLI maps each branch to an exit code: configuration problems exit 2,
numerical failures exit 3, file-system problems exit 4.
"""


class HMMCouplingError(Exception):
    """Base class for all package errors."""


class ConfigError(HMMCouplingError):
    """Invalid job configuration.

    Holds every violation found, not only the first one.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NumericalError(HMMCouplingError, ArithmeticError):
    """A computation could not produce a finite, well-defined result."""


class WavelengthRangeError(NumericalError, ValueError):
    """Requested wavelength lies outside a tabulated model."""


class SingularInputError(NumericalError):
    """Input sits exactly on a singularity of a closed-form expression."""


class DegenerateInterfaceError(NumericalError):
    """Fresnel denominator vanishes (exact surface-mode pole)."""


class BandEdgeNotFoundError(NumericalError):
    def __init__(self, missing, window):
        self.missing = list(missing)
        self.window = window
        lo, hi = window
        super().__init__(
            f"no sign change for {', '.join(self.missing)} in "
            f"[{lo * 1e9:.3f}, {hi * 1e9:.3f}] nm"
        )


class RootCountMismatchError(NumericalError):
    def __init__(self, expected, found, rectangle):
        self.expected = expected
        self.found = found
        self.rectangle = rectangle
        super().__init__(
            f"argument principle counted {expected} roots but polishing "
            f"converged to {found}; search rectangle {rectangle}"
        )


class FitFailureError(NumericalError):
    def __init__(self, message, residual=float("nan")):
        self.residual = residual
        super().__init__(f"{message} (residual={residual:.3g})")


class DipCountError(NumericalError, ValueError):
    """Operation needs a specific number of reflectivity dips."""


class EstimationError(NumericalError, ValueError):
    """Calibration curve cannot be inverted for the requested observable."""
