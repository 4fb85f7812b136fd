from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from types import MappingProxyType

import sympy

from EQLAB.errors import DegreeError

MAX_DEGREE = 12
POSITION, MOMENTUM = 0, 1
POSITIVE_NAMES = frozenset(['hbar', 'm', 'm0', 'omega'])


# Symbols are cached by name so that assumptions never differ between two copies of the same atom
@lru_cache(maxsize=None)
def symbol(name):
    if name in POSITIVE_NAMES:
        return sympy.Symbol(name, positive=True)
    return sympy.Symbol(name, real=True)


HBAR = symbol('hbar')
I = sympy.I


def scalar(value):
    """
    Exact scalar from a python/sympy value (floats are refused)
    :param value: int, Fraction, str ('3/4') or sympy expression
    :return: sympy expression
    """
    if isinstance(value, float):
        raise TypeError('floating point values are not allowed in exact expressions')
    if isinstance(value, Fraction):
        return sympy.Rational(value.numerator, value.denominator)
    if isinstance(value, str):
        return sympy.Rational(value)
    return sympy.sympify(value)


def canonical(value):
    """
    Expanded form; rational functions of symbolic parameters are cancelled first so that equal values compare equal
    """
    value = sympy.expand(value)
    if any(p.exp.is_negative and p.base.free_symbols for p in value.atoms(sympy.Pow)):
        value = sympy.expand(sympy.cancel(value))
    return value


# Generator of a canonical set: set_id 'pq' gives P (momentum) and Q (position)
@dataclass(frozen=True, order=True)
class Generator:
    set_id: str
    mode: int
    kind: int

    def __post_init__(self):
        if len(self.set_id) != 2 or not self.set_id.isalpha() or not self.set_id.islower():
            raise ValueError('set id must be two lower-case letters, got %r' % self.set_id)
        if self.mode < 0 or self.kind not in (POSITION, MOMENTUM):
            raise ValueError('invalid generator %r' % (self,))

    @property
    def letter(self):
        return self.set_id[1].upper() if self.kind == POSITION else self.set_id[0].upper()

    @property
    def is_position(self):
        return self.kind == POSITION

    def shift_symbol(self):
        return symbol(self.letter.lower() + str(self.mode))

    def __str__(self):
        return '%s[%d]' % (self.letter, self.mode)

    @staticmethod
    def position(set_id, mode):
        return Generator(set_id, mode, POSITION)

    @staticmethod
    def momentum(set_id, mode):
        return Generator(set_id, mode, MOMENTUM)


# [g, h] as a scalar: [Q_k, P_l] = i hbar delta_kl within one set, zero across sets
def commutator(g, h):
    if g.set_id != h.set_id or g.mode != h.mode or g.kind == h.kind:
        return sympy.S.Zero
    return I * HBAR if g.kind == POSITION else -I * HBAR


class OperatorExpr:
    """
    Polynomial in canonical generators with exact scalar coefficients.
    Terms map a word (tuple of Generators, possibly empty) to its coefficient.
    """

    def __init__(self, terms=None, canonical_order=False, expand=True):
        clean = dict()
        for word, coef in (terms or {}).items():
            word = tuple(word)
            if len(word) > MAX_DEGREE:
                raise DegreeError('degree %d exceeds the cap of %d' % (len(word), MAX_DEGREE))
            coef = canonical(coef) if expand else coef
            if coef != 0:
                clean[word] = coef
        self._terms = clean
        self.canonical_order = canonical_order

    # constructors
    @classmethod
    def from_scalar(cls, value):
        return cls({(): scalar(value)}, canonical_order=True)

    @classmethod
    def from_generator(cls, g):
        return cls({(g,): sympy.S.One}, canonical_order=True)

    @classmethod
    def zero(cls):
        return cls(canonical_order=True)

    @classmethod
    def coerce(cls, value):
        if isinstance(value, OperatorExpr):
            return value
        if isinstance(value, Generator):
            return cls.from_generator(value)
        return cls.from_scalar(value)

    # views
    @property
    def terms(self):
        return MappingProxyType(self._terms)

    def sorted_terms(self):
        return sorted(self._terms.items(), key=lambda item: (len(item[0]), item[0]))

    @property
    def degree(self):
        return max((len(w) for w in self._terms), default=0)

    def generators(self):
        return sorted(set(g for word in self._terms for g in word))

    def is_zero(self):
        return not self._terms

    def is_scalar(self):
        return all(len(w) == 0 for w in self._terms)

    def scalar_part(self):
        return self._terms.get((), sympy.S.Zero)

    def free_symbols(self):
        out = set()
        for coef in self._terms.values():
            out |= coef.free_symbols
        return out

    # algebra
    def __add__(self, other):
        other = OperatorExpr.coerce(other)
        terms = dict(self._terms)
        for word, coef in other._terms.items():
            terms[word] = terms.get(word, 0) + coef
        return OperatorExpr(terms, self.canonical_order and other.canonical_order)

    __radd__ = __add__

    def __neg__(self):
        return OperatorExpr({w: -c for w, c in self._terms.items()}, self.canonical_order, expand=False)

    def __sub__(self, other):
        return self + (-OperatorExpr.coerce(other))

    def __rsub__(self, other):
        return OperatorExpr.coerce(other) - self

    def __mul__(self, other):
        other = OperatorExpr.coerce(other)
        terms = dict()
        for w1, c1 in self._terms.items():
            for w2, c2 in other._terms.items():
                word = w1 + w2
                terms[word] = terms.get(word, 0) + c1 * c2
        flag = (self.is_scalar() and other.canonical_order) or (other.is_scalar() and self.canonical_order)
        return OperatorExpr(terms, flag)

    def __rmul__(self, other):
        return OperatorExpr.coerce(other) * self

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError('operator powers must be non-negative integers')
        if n * self.degree > MAX_DEGREE:
            raise DegreeError('degree %d exceeds the cap of %d' % (n * self.degree, MAX_DEGREE))
        result = OperatorExpr.from_scalar(1)
        for _ in range(n):
            result = result * self
        return result

    def scale(self, value):
        value = scalar(value)
        return OperatorExpr({w: c * value for w, c in self._terms.items()}, self.canonical_order)

    def adjoint(self):
        return OperatorExpr({tuple(reversed(w)): sympy.conjugate(c) for w, c in self._terms.items()})

    def subs(self, mapping):
        """
        Substitute scalar symbols in every coefficient
        :param mapping: (dict) sympy Symbol -> value
        :return: OperatorExpr
        """
        if not mapping:
            return self
        return OperatorExpr({w: c.subs(mapping) for w, c in self._terms.items()}, self.canonical_order)

    def __eq__(self, other):
        if not isinstance(other, OperatorExpr):
            try:
                other = OperatorExpr.coerce(other)
            except (TypeError, sympy.SympifyError):
                return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        return 'OperatorExpr(%s)' % render_expr(self)

    def __str__(self):
        return render_expr(self)


# Canonical text (the .eqm expression syntax)
def render_scalar(value):
    value = canonical(value)
    if value == 0:
        return '0'
    pieces = []
    for term in sympy.Add.make_args(value):
        coef, rest = term.as_coeff_Mul()
        coef = sympy.Rational(coef) if coef.is_Rational else coef
        if not coef.is_Rational:
            return str(value)  # outside the polynomial fragment, not re-parseable
        factors = []
        for factor in sorted(sympy.Mul.make_args(rest), key=_factor_key):
            if factor == 1:
                continue
            if factor == I:
                factors.append('i')
            elif factor.is_Symbol:
                factors.append(factor.name)
            elif factor.is_Pow and factor.base.is_Symbol and factor.exp.is_Integer and factor.exp > 0:
                factors.append('%s^%d' % (factor.base.name, factor.exp))
            else:
                return str(value)
        sign = '-' if coef < 0 else '+'
        magnitude = abs(coef)
        if not factors:
            body = _rational(magnitude)
        elif magnitude == 1:
            body = '*'.join(factors)
        else:
            body = _rational(magnitude) + '*' + '*'.join(factors)
        pieces.append((sign, body))
    text = ('-' if pieces[0][0] == '-' else '') + pieces[0][1]
    for sign, body in pieces[1:]:
        text += ' %s %s' % (sign, body)
    return text


def _factor_key(factor):
    if factor == I:
        return (0, '')
    base = factor.base if factor.is_Pow else factor
    return (1, str(base))


def _rational(value):
    return str(value.p) if value.q == 1 else '%d/%d' % (value.p, value.q)


def render_word(word):
    parts = []
    i = 0
    while i < len(word):
        j = i
        while j < len(word) and word[j] == word[i]:
            j += 1
        parts.append(str(word[i]) if j - i == 1 else '%s^%d' % (word[i], j - i))
        i = j
    return '*'.join(parts)


def render_term(word, coef):
    if not word:
        return render_scalar(coef)
    text = render_word(word)
    if coef == 1:
        return text
    if coef == -1:
        return '-' + text
    c = render_scalar(coef)
    if len(sympy.Add.make_args(canonical(coef))) > 1:
        return '(%s)*%s' % (c, text)
    return '%s*%s' % (c, text)


def render_expr(e):
    if e.is_zero():
        return '0'
    text = ''
    for word, coef in e.sorted_terms():
        piece = render_term(word, coef)
        if not text:
            text = piece
        elif piece.startswith('-'):
            text += ' - ' + piece[1:]
        else:
            text += ' + ' + piece
    return text


class NormalOrderedExpr(OperatorExpr):
    """
    OperatorExpr normal-ordered in a frame. The ladder form maps (daggers, annihilators), two sorted
    tuples of frame indices, to coefficients; generator words are produced on demand.
    """

    def __init__(self, frame, ladder):
        self.frame = frame
        self.ladder = MappingProxyType(dict((k, c) for k, c in ladder.items() if c != 0))
        self.canonical_order = False
        self._words = None

    @property
    def _terms(self):
        if self._words is None:
            words = dict()
            for (daggers, annihilators), coef in self.ladder.items():
                factors = [self.frame.ladder_generators(d, True) for d in daggers]
                factors += [self.frame.ladder_generators(a, False) for a in annihilators]
                partial = {(): coef}
                for comb in factors:
                    step = dict()
                    for word, c in partial.items():
                        for g, cg in comb:
                            key = word + (g,)
                            step[key] = step.get(key, 0) + c * cg
                    partial = step
                for word, c in partial.items():
                    words[word] = words.get(word, 0) + c
            self._words = OperatorExpr(words)._terms
        return self._words

    def scalar_part(self):
        return self.ladder.get(((), ()), sympy.S.Zero)

    def __add__(self, other):
        if not isinstance(other, NormalOrderedExpr) or other.frame != self.frame:
            return OperatorExpr.__add__(self, other)
        ladder = dict(self.ladder)
        for key, coef in other.ladder.items():
            ladder[key] = canonical(ladder.get(key, 0) + coef)
        return NormalOrderedExpr(self.frame, ladder)

    def scale(self, value):
        value = scalar(value)
        return NormalOrderedExpr(self.frame, dict((k, canonical(c * value)) for k, c in self.ladder.items()))

    def adjoint(self):
        # (b^+_D b_A)^+ = b^+_A b_D
        return NormalOrderedExpr(self.frame, dict(((a, d), canonical(sympy.conjugate(c)))
                                                  for (d, a), c in self.ladder.items()))

    def is_hermitian(self):
        return all(canonical(c - sympy.conjugate(self.ladder.get((a, d), 0))) == 0
                   for (d, a), c in self.ladder.items())

    def subs(self, mapping):
        if not mapping:
            return self
        frame = self.frame
        if frame.coefficients.free_symbols & set(mapping):
            frame = frame.subs(mapping)
        return NormalOrderedExpr(frame, dict((k, canonical(c.subs(mapping))) for k, c in self.ladder.items()))

    def render_ladder(self):
        pieces = []
        for (daggers, annihilators), coef in sorted(self.ladder.items()):
            word = ['b%d^+' % d for d in daggers] + ['b%d' % a for a in annihilators]
            pieces.append('(%s)%s' % (render_scalar(coef), ('*' + '*'.join(word)) if word else ''))
        return ' + '.join(pieces) if pieces else '0'

    def __str__(self):
        return ':[ %s ]: @%s' % (render_expr(self), self.frame.name)

    def __repr__(self):
        return 'NormalOrderedExpr(%s)' % self
