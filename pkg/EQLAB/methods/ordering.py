import logging
from functools import lru_cache

import sympy

from EQLAB.classes.OperatorExpr import OperatorExpr, NormalOrderedExpr, commutator, canonical
from EQLAB.errors import FrameSpanError, NotNormalOrderedError, HermiticityError

logger = logging.getLogger(__name__)


# Sorted form of a single word, using [Q_k, P_l] = i hbar delta_kl
@lru_cache(maxsize=None)
def _canonical_word(word):
    for k in range(len(word) - 1):
        a, b = word[k], word[k + 1]
        if a > b:
            out = dict()
            swapped = word[:k] + (b, a) + word[k + 2:]
            for w, c in _canonical_word(swapped):
                out[w] = out.get(w, 0) + c
            comm = commutator(a, b)
            if comm != 0:
                for w, c in _canonical_word(word[:k] + word[k + 2:]):
                    out[w] = out.get(w, 0) + comm * c
            return tuple((w, canonical(c)) for w, c in out.items() if canonical(c) != 0)
    return ((word, sympy.S.One),)


def canonicalize(e):
    """
    Sort every word in generator order (set, mode, position before momentum)
    :param e: OperatorExpr
    :return: equal operator with sorted words
    """
    e = OperatorExpr.coerce(e)
    if e.canonical_order and not isinstance(e, NormalOrderedExpr):
        return e
    terms = dict()
    for word, coef in e.terms.items():
        for w, c in _canonical_word(word):
            terms[w] = terms.get(w, 0) + coef * c
    return OperatorExpr(terms, canonical_order=True)


def hermitian_check(e):
    if isinstance(e, NormalOrderedExpr):
        return e.is_hermitian()
    e = OperatorExpr.coerce(e)
    return canonicalize(e - e.adjoint()).is_zero()


def _check_span(e, frame):
    outside = [g for g in e.generators() if not frame.covers([g])]
    if outside:
        raise FrameSpanError('%s outside the span of frame %r' % (', '.join(map(str, outside)), frame.name))


def _ladder_words(e, frame, contract):
    cache = {(): {((), ()): sympy.S.One}}

    def expand(word):
        if word in cache:
            return cache[word]
        prev = expand(word[:-1])
        out = dict()
        for index, dagger, c in frame.expansion(word[-1]):
            for (daggers, annihilators), coef in prev.items():
                if not dagger:
                    key = (daggers, tuple(sorted(annihilators + (index,))))
                    out[key] = out.get(key, 0) + coef * c
                    continue
                key = (tuple(sorted(daggers + (index,))), annihilators)
                out[key] = out.get(key, 0) + coef * c
                if contract:  # A b^+ = b^+ A + sum_k [a_k, b^+] A without a_k
                    for k, a in enumerate(annihilators):
                        contraction = frame.contraction(a, index)
                        if contraction != 0:
                            key = (daggers, annihilators[:k] + annihilators[k + 1:])
                            out[key] = out.get(key, 0) + coef * c * contraction
        out = dict((k, canonical(v)) for k, v in out.items())
        cache[word] = dict((k, v) for k, v in out.items() if v != 0)
        return cache[word]

    ladder = dict()
    for word, coef in e.terms.items():
        for key, c in expand(word).items():
            ladder[key] = ladder.get(key, 0) + coef * c
    logger.debug('frame %r: %d words -> %d ladder monomials', frame.name, len(e.terms), len(ladder))
    return dict((k, canonical(v)) for k, v in ladder.items())


def normal_order(e, frame):
    """
    Rewrite e with all b^dagger factors left of all b factors (contractions included)
    :param e: OperatorExpr
    :param frame: FiducialFrame
    :return: NormalOrderedExpr, equal to e as an operator
    """
    e = OperatorExpr.coerce(e)
    if isinstance(e, NormalOrderedExpr) and e.frame == frame:
        return e
    _check_span(e, frame)
    return NormalOrderedExpr(frame, _ladder_words(e, frame, contract=True))


def normal_symbol(e, frame):
    """
    Normal-ordering symbol :e: in a frame (ladder factors reordered freely, no contractions)
    """
    e = OperatorExpr.coerce(e)
    _check_span(e, frame)
    return NormalOrderedExpr(frame, _ladder_words(e, frame, contract=False))


def shift_map(generators, shifted_sets):
    """
    Generator -> shift symbol for shifted sets, 0 for the others
    """
    return dict((g, g.shift_symbol() if g.set_id in shifted_sets else sympy.S.Zero) for g in generators)


def displace(e, shifts):
    """
    Replace every generator g by g + shift(g)
    :param e: OperatorExpr (or NormalOrderedExpr, which stays normal-ordered)
    :param shifts: (dict) Generator -> scalar; missing generators are not shifted
    :return: expression of the same type
    """
    if isinstance(e, NormalOrderedExpr):
        return _displace_ladder(e, shifts)
    e = OperatorExpr.coerce(e)
    terms = dict()
    for word, coef in e.terms.items():
        partial = {(): coef}
        for g in word:
            s = shifts.get(g, 0)
            step = dict()
            for w, c in partial.items():
                step[w + (g,)] = step.get(w + (g,), 0) + c
                if s != 0:
                    step[w] = step.get(w, 0) + c * s
            partial = step
        for w, c in partial.items():
            terms[w] = terms.get(w, 0) + c
    return OperatorExpr(terms)


def _displace_ladder(e, shifts):
    frame = e.frame
    beta = [canonical(sum((c * shifts.get(g, 0) for g, c in frame.ladder_generators(i, False)), sympy.S.Zero))
            for i in range(frame.size)]
    beta_bar = [canonical(sympy.conjugate(b)) for b in beta]
    ladder = dict()
    for (daggers, annihilators), coef in e.ladder.items():
        partial = {((), ()): coef}
        for d in daggers:
            step = dict()
            for (ds, an), c in partial.items():
                key = (ds + (d,), an)
                step[key] = step.get(key, 0) + c
                if beta_bar[d] != 0:
                    step[(ds, an)] = step.get((ds, an), 0) + c * beta_bar[d]
            partial = step
        for a in annihilators:
            step = dict()
            for (ds, an), c in partial.items():
                key = (ds, an + (a,))
                step[key] = step.get(key, 0) + c
                if beta[a] != 0:
                    step[(ds, an)] = step.get((ds, an), 0) + c * beta[a]
            partial = step
        for key, c in partial.items():
            ladder[key] = ladder.get(key, 0) + c
    return NormalOrderedExpr(frame, dict((k, canonical(v)) for k, v in ladder.items()))


def fiducial_expectation(e, frame):
    """
    Vacuum expectation of an expression normal-ordered in `frame`: its scalar part
    """
    if not isinstance(e, NormalOrderedExpr) or e.frame != frame:
        raise NotNormalOrderedError('expression is not normal-ordered in frame %r' % frame.name)
    return canonical(e.scalar_part())


def wcp_symbolic(H, frame, shifted_sets):
    """
    Classical Hamiltonian H(p,q) = <p,q|H|p,q> as an exact polynomial
    :param H: Hermitian OperatorExpr
    :param frame: FiducialFrame annihilating the fiducial vector
    :param shifted_sets: set ids displaced by the coherent states
    :return: sympy polynomial in shift symbols, hbar and parameters
    """
    H = OperatorExpr.coerce(H)
    if not hermitian_check(H):
        raise HermiticityError('Hamiltonian is not Hermitian: %s' % H)
    ordered = normal_order(H, frame)
    shifted = displace(ordered, shift_map(frame.span, set(shifted_sets)))
    return fiducial_expectation(shifted, frame)


def classical_substitution(e, shifted_sets):
    """
    Commutative image of e with generators replaced by their shift symbols (0 for unshifted sets)
    """
    shifts = shift_map(OperatorExpr.coerce(e).generators(), set(shifted_sets))
    total = 0
    for word, coef in OperatorExpr.coerce(e).terms.items():
        value = coef
        for g in word:
            value = value * shifts[g]
        total += value
    return canonical(total)
