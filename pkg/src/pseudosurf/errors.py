"""Exception hierarchy shared by all modules."""


class PseudosurfError(Exception):
    """Base class for every error raised by the package."""


class ParseError(PseudosurfError):
    def __init__(self, message, pos=None, src=None):
        self.pos = pos
        self.src = src
        if pos is not None and src is not None:
            message = f"{message} at position {pos}\n  {src}\n  {' ' * pos}^"
        super().__init__(message)


class UnknownFunction(ParseError):
    pass


class EvaluationError(PseudosurfError):
    pass


class UnboundVariable(EvaluationError):
    pass


class SingularPoint(EvaluationError):
    pass


class DomainError(EvaluationError):
    pass


class UninstantiatedFunction(EvaluationError):
    pass


class OrderOverflow(PseudosurfError):
    pass


class KindMismatch(PseudosurfError):
    pass


class SamplingError(PseudosurfError):
    """No admissible point could be found within the attempt budget."""


class DegenerateF11(PseudosurfError):
    pass


class DeltaVanishes(PseudosurfError):
    pass


class Delta0Vanishes(DeltaVanishes):
    pass


class HConstant(PseudosurfError):
    pass


class PsiVanishes(PseudosurfError):
    pass


class SignAssumptionViolated(PseudosurfError):
    pass


class SpecInvariantViolated(PseudosurfError):
    pass


class ShapeMismatch(PseudosurfError):
    pass


class DomainViolation(PseudosurfError):
    pass


class SingularCoefficient(PseudosurfError):
    pass


class BlowUp(PseudosurfError):
    def __init__(self, message, grid=None):
        super().__init__(message)
        self.grid = grid


class EmptyMask(PseudosurfError):
    pass
