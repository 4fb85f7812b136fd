import logging

import sympy

from EQLAB.classes.OperatorExpr import (OperatorExpr, Generator, HBAR, I, canonical, commutator, scalar,
                                        render_expr)
from EQLAB.errors import FrameError, FrameSpanError, GramNotPositiveDefinite, DependentFiducialConditions

logger = logging.getLogger(__name__)


class FiducialFrame:
    """
    Set of annihilation operators b_i = sum_g c_ig g that annihilate a fiducial vector.
    The definitions are kept raw (unnormalized); `gram` reports the unit-diagonal Gram matrix.
    """

    def __init__(self, name, annihilators):
        """
        :param name: (str), frame name used by :[ ... ]: @name regions
        :param annihilators: (list of OperatorExpr), linear combinations of generators
        """
        self.name = name
        self.annihilators = tuple(OperatorExpr.coerce(b) for b in annihilators)
        if not self.annihilators:
            raise FrameError('frame %r has no annihilators' % name)
        for b in self.annihilators:
            if any(len(w) != 1 for w in b.terms):
                raise FrameError('frame %r: %s is not a linear combination of generators' % (name, b))
        self.span = tuple(sorted(set(g for b in self.annihilators for g in b.generators())))
        self._index = dict((g, k) for k, g in enumerate(self.span))
        self.coefficients = sympy.Matrix([[b.terms.get((g,), 0) for g in self.span] for b in self.annihilators])
        self.raw_gram = self._commutator_matrix(dagger=True)
        self._check_commuting()
        self._inverse = None

    @property
    def size(self):
        return len(self.annihilators)

    @classmethod
    def vacuum(cls, modes, omega, name='vacuum'):
        """
        Irreducible frame (omega Q_n + i P_n) for every (set_id, mode) pair
        :param modes: list of (set_id, mode)
        :param omega: frequency (exact)
        """
        omega = scalar(omega)
        defs = [OperatorExpr.from_generator(Generator.position(s, n)).scale(omega)
                + OperatorExpr.from_generator(Generator.momentum(s, n)).scale(I) for s, n in modes]
        return cls(name, defs)

    def _commutator_matrix(self, dagger):
        k = self.size
        out = sympy.zeros(k, k)
        for i in range(k):
            for j in range(k):
                s = 0
                for gi, ci in enumerate(self.span):
                    a = self.coefficients[i, gi]
                    if a == 0:
                        continue
                    for gj, cj in enumerate(self.span):
                        b = self.coefficients[j, gj]
                        if b != 0:
                            s += a * (sympy.conjugate(b) if dagger else b) * commutator(ci, cj)
                out[i, j] = canonical(s / HBAR) if dagger else canonical(s)
        return out

    def _check_commuting(self):
        if any(x != 0 for x in self._commutator_matrix(dagger=False)):
            raise FrameError('frame %r: annihilators do not commute' % self.name)

    def _invert(self):
        k = self.size
        if 2 * k != len(self.span):
            raise DependentFiducialConditions(
                'frame %r: %d annihilators cannot span %d generators' % (self.name, k, len(self.span)))
        t = self.coefficients.col_join(self.coefficients.applyfunc(sympy.conjugate))
        det = sympy.simplify(t.det())
        if det == 0:
            raise DependentFiducialConditions('frame %r: conditions are linearly dependent' % self.name)
        inv = t.inv().applyfunc(canonical)
        # generator -> list of (ladder index, dagger, coefficient)
        out = dict()
        for g, row in self._index.items():
            comb = []
            for i in range(k):
                if inv[row, i] != 0:
                    comb.append((i, False, inv[row, i]))
                if inv[row, k + i] != 0:
                    comb.append((i, True, inv[row, k + i]))
            out[g] = tuple(comb)
        return out

    @property
    def gram(self):
        """
        Gram matrix with unit diagonal, M_ij / sqrt(M_ii M_jj)
        """
        k = self.size
        out = sympy.zeros(k, k)
        for i in range(k):
            for j in range(k):
                out[i, j] = sympy.simplify(self.raw_gram[i, j] / sympy.sqrt(self.raw_gram[i, i] * self.raw_gram[j, j]))
        return out

    def check_positive(self):
        """
        Sylvester criterion on the Gram matrix
        :return: True when positive definite, None when undecidable with symbolic parameters
        """
        g = self.raw_gram
        if g != g.H.applyfunc(canonical):
            raise GramNotPositiveDefinite('frame %r: Gram matrix is not Hermitian' % self.name)
        decided = True
        for n in range(1, self.size + 1):
            minor = sympy.simplify(g[:n, :n].det())
            sign = minor.is_positive
            if sign is False:
                raise GramNotPositiveDefinite(
                    'frame %r: Gram matrix is not positive definite (leading minor %d is %s)'
                    % (self.name, n, minor))
            if sign is None:
                decided = False
        if not decided:
            logger.warning('frame %r: positivity undecidable with symbolic parameters', self.name)
            return None
        return True

    def contraction(self, i, j):
        """
        [b_i, b_j^dagger] including hbar
        """
        return self.raw_gram[i, j] * HBAR

    def check_independent(self):
        """
        Solve the conditions and their adjoints for the generators (cached)
        :raise DependentFiducialConditions: when they cannot be solved
        """
        if self._inverse is None:
            self._inverse = self._invert()
        return True

    def expansion(self, g):
        self.check_independent()
        if g not in self._inverse:
            raise FrameSpanError('generator %s is outside the span of frame %r' % (g, self.name))
        return self._inverse[g]

    def ladder_generators(self, i, dagger):
        """
        b_i (or b_i^dagger) as a list of (generator, coefficient)
        """
        row = self.coefficients.row(i)
        return [(g, sympy.conjugate(c) if dagger else c) for g, c in zip(self.span, row) if c != 0]

    def covers(self, generators):
        return all(g in self._index for g in generators)

    def subs(self, mapping):
        return FiducialFrame(self.name, [b.subs(mapping) for b in self.annihilators])

    def __eq__(self, other):
        return isinstance(other, FiducialFrame) and self.name == other.name and self.annihilators == other.annihilators

    def __hash__(self):
        return hash((self.name, self.annihilators))

    def __repr__(self):
        return 'FiducialFrame(%s: %s)' % (self.name, ', '.join(render_expr(b) for b in self.annihilators))
