# Exceptions raised by eqlab. Parse problems are reported as diagnostics, not raised.


class EqlabError(Exception):
    pass


# op-expr
class DegreeError(EqlabError):
    pass


class FrameSpanError(EqlabError):
    pass


class FrameError(EqlabError):
    pass


class NotNormalOrderedError(EqlabError):
    pass


class HermiticityError(EqlabError):
    pass


# model-dsl
class ModelError(EqlabError):
    def __init__(self, message, diagnostics=(), source=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics)
        self.source = source


class GramNotPositiveDefinite(FrameError):
    pass


class NonHermitianHamiltonian(HermiticityError):
    pass


class DependentFiducialConditions(FrameError):
    pass


# fock
class UnknownGeneratorError(EqlabError):
    pass


class UnboundSymbolError(EqlabError):
    pass


class DimensionMismatch(EqlabError):
    pass


class DegenerateGroundSpace(EqlabError):
    pass


class TruncationLeakage(EqlabError):
    def __init__(self, message, leakage=None):
        super().__init__(message)
        self.leakage = leakage


# correspondence / dynamics
class StepTooLarge(EqlabError):
    pass


class StepRejected(EqlabError):
    pass


class GridMismatch(EqlabError):
    pass


# rotsym / cli
class ZetaOutOfRange(EqlabError):
    pass


class ConfigError(EqlabError):
    pass
