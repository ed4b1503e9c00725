"""Exception types raised by the toolkit."""


class PurcellError(Exception):
    pass


class InjectivityRadius(PurcellError, ValueError):
    """Rotation angle left the region where the SE(2) exponential is a diffeomorphism."""


class Singular(PurcellError, ArithmeticError):
    pass


class ShapeOutOfDomain(PurcellError, ValueError):
    """Joint angles outside (-pi, pi): the outer links would overlap the base link."""


class FixedPointDiverged(PurcellError, RuntimeError):
    pass


class SingularJacobian(PurcellError, ArithmeticError):
    pass


class Diverged(PurcellError, RuntimeError):
    pass
