"""Exception and warning types shared across the package."""


class RegimeError(ValueError):
    """The scenario's scattering regime does not support the requested operation."""


class NoCollisionError(RegimeError):
    """The incident wave is not faster than the step and never reaches it."""


class NodeSingularity(ArithmeticError):
    """Group velocity requested where the density vanishes (0/0)."""


class InsufficientNorm(ValueError):
    """A masked region or fit window carries too little probability."""


class BoundaryContamination(RuntimeError):
    """The wave packet reached the edge of the simulation grid."""


class SemiClassicalWarning(UserWarning):
    """The incident wavenumber is too close to the drift wavenumber."""
