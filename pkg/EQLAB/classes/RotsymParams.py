from dataclasses import dataclass, field

import sympy

from EQLAB.classes.OperatorExpr import canonical, scalar, render_scalar, symbol
from EQLAB.errors import ZetaOutOfRange


def check_zeta(zeta):
    """
    0 < zeta < 1 where decidable; symbolic zeta passes
    """
    zeta = scalar(zeta)
    if zeta.is_positive is False or (zeta - 1).is_negative is False:
        raise ZetaOutOfRange('zeta must lie in (0, 1), got %s' % zeta)
    return zeta


# Rotationally symmetric model with reducible operators: N, mass m, mixing zeta and quartic coupling v
@dataclass(frozen=True)
class RotsymParams:
    N: int = 1
    m: object = 1
    zeta: object = field(default_factory=lambda: sympy.Rational(1, 2))
    v: object = 1

    def __post_init__(self):
        if not isinstance(self.N, int) or self.N < 1:
            raise ValueError('N must be a positive integer, got %r' % (self.N,))
        for name in ('m', 'zeta', 'v'):
            value = getattr(self, name)
            if isinstance(value, str) and value.isidentifier():
                value = symbol(value)
            object.__setattr__(self, name, scalar(value))
        if self.m.is_positive is False:
            raise ValueError('mass must be positive, got %s' % self.m)
        if self.v.is_negative:
            raise ValueError('quartic coupling must be non-negative, got %s' % self.v)

    @property
    def m0_squared(self):
        return canonical(self.m ** 2 * (1 + self.zeta ** 2))

    @property
    def lambda0(self):
        return canonical(self.v * self.zeta ** 4 * self.m ** 4)

    @property
    def is_symbolic(self):
        return any(getattr(self, name).free_symbols for name in ('m', 'zeta', 'v'))

    def check(self):
        check_zeta(self.zeta)
        return self

    def as_dict(self):
        return dict(N=self.N, m=render_scalar(self.m), zeta=render_scalar(self.zeta), v=render_scalar(self.v))
