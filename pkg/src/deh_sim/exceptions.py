class DehError(Exception):
    """Raised when a simulation or protocol step cannot be carried out"""

    exit_code = 3


class DimensionError(DehError):
    """Matrix is not of a supported size"""
    pass


class HermiticityError(DehError):
    """Matrix expected to be Hermitian is not, within tolerance"""
    pass


class UnitarityError(DehError):
    """Matrix expected to be unitary is not, within tolerance"""
    pass


class BranchCutError(DehError):
    """An eigenphase sits on the branch cut of the principal logarithm"""
    pass


class InvalidStateError(DehError):
    """State vector or density matrix is not normalised, Hermitian or positive"""
    pass


class ResonanceError(DehError):
    """A closed form was requested outside the regime it was derived for"""
    pass


class IntegrationError(DehError):
    """Numerical propagation drifted beyond its conservation tolerance"""
    pass


class NoSolutionError(DehError):
    """A stopping time cannot be found for the given envelope"""
    pass


class EnergyDirectionError(DehError):
    """Target level does not lie above the source level"""
    pass


class UnsupportedConfigurationError(DehError):
    """Combination of parameters the toolkit refuses to certify"""

    exit_code = 2


class ConfigError(DehError):
    """Invalid or conflicting run configuration"""

    exit_code = 2

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class OutputError(DehError):
    """Result file could not be written"""

    exit_code = 4
