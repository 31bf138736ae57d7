"""Exception and warning types shared across the package."""


class SqueezeSimError(Exception):
    """Base class for all errors raised by squeeze_sim."""


class ConfigError(SqueezeSimError, ValueError):
    """Malformed or physically invalid configuration."""


class DimensionMismatch(SqueezeSimError, ValueError):
    pass


class TruncationError(SqueezeSimError):
    """Too much probability sits near the Fock cutoff."""


class StabilityViolation(SqueezeSimError):
    """Integrator step too large for the Hamiltonian norm."""


class RegimeError(SqueezeSimError, ValueError):
    """Off-resonant formula evaluated outside the strong-coupling regime."""


class BranchError(SqueezeSimError, ValueError):
    """Inverse-cosine argument left [-1, 1] beyond rounding tolerance."""


class ProfileMissing(SqueezeSimError, ValueError):
    """A Gaussian-profile quantity was requested without waist/speed."""


class DispersiveWarning(UserWarning):
    """The detuning does not dominate the couplings by the required margin."""


class TruncationWarning(UserWarning):
    pass


class PopulationWarning(UserWarning):
    """The atom left the intermediate level with significant probability."""


class RegimeWarning(UserWarning):
    pass
