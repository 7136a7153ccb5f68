from __future__ import annotations


class LocsimError(RuntimeError):
    """Base class for every failure raised by locsim."""


class InputError(LocsimError):
    """The caller handed over something malformed; maps to exit code 2."""


class NumericalError(LocsimError):
    """The numerics hit a genuinely undefined quantity; maps to exit code 3."""


class DimensionMismatch(InputError):
    pass


class NotNormalized(InputError):
    pass


class NonFiniteAmplitude(InputError):
    pass


class InvalidBipartition(InputError):
    pass


class UnsortedInput(InputError):
    pass


class NotBipartite(InputError):
    pass


class NotTripartite(InputError):
    pass


class NotUnitary(InputError):
    pass


class NotSimulable(InputError):
    pass


class NonOrthonormalBasis(InputError):
    pass


class RankMismatch(InputError):
    pass


class IncompleteSource(InputError):
    pass


class InfeasibleSpectrum(InputError):
    pass


class ConfigError(InputError):
    pass


class SchemaError(InputError):
    pass


class ZeroProbabilityBranch(NumericalError):
    pass


class SingularSupport(NumericalError):
    pass
