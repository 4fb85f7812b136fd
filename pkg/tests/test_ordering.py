import numpy as np
import pytest
import sympy

from EQLAB.classes.FiducialFrame import FiducialFrame
from EQLAB.classes.FockSpace import FockSpace
from EQLAB.classes.OperatorExpr import (OperatorExpr, NormalOrderedExpr, Generator, HBAR, I, canonical, symbol,
                                        render_expr)
from EQLAB.errors import (DegreeError, DependentFiducialConditions, FrameError, FrameSpanError,
                          GramNotPositiveDefinite, HermiticityError, NotNormalOrderedError)
from EQLAB.methods.fock import build_operator
from EQLAB.methods.ordering import (canonicalize, normal_order, normal_symbol, displace, fiducial_expectation,
                                    wcp_symbolic, hermitian_check, classical_substitution, shift_map)

q0, p0, q1, p1 = (Generator.position('pq', 0), Generator.momentum('pq', 0),
                  Generator.position('pq', 1), Generator.momentum('pq', 1))
GENS = [q0, p0, q1, p1]


def op(g):
    return OperatorExpr.from_generator(g)


def random_expr(rng, degree=4, terms=4, generators=GENS):
    e = OperatorExpr.zero()
    for _ in range(terms):
        n = int(rng.integers(0, degree + 1))
        word = tuple(generators[k] for k in rng.integers(0, len(generators), n))
        coef = int(rng.integers(-3, 4)) + int(rng.integers(-2, 3)) * I
        e = e + OperatorExpr({word: coef})
    return e


def low_block(matrix, space, margin):
    keep = [k for k in range(space.dimension) if max(space.occupations(k)) < space.dims[0] - margin]
    return matrix.toarray()[np.ix_(keep, keep)]


def test_same_mode_reorder(Q, P, hbar):
    assert canonicalize(P * Q) == Q * P - OperatorExpr.from_scalar(I * hbar)


def test_cross_mode_commute():
    assert canonicalize(op(p1) * op(q0)) == op(q0) * op(p1)


def test_three_factor_rewrite(Q, P, hbar):
    assert canonicalize(Q * P * Q) == canonicalize(Q ** 2 * P) - Q.scale(I * hbar)
    assert render_expr(canonicalize(Q * P * Q)) == '-i*hbar*Q[0] + Q[0]^2*P[0]'


def test_canonicalize_idempotent():
    rng = np.random.default_rng(7)
    for _ in range(25):
        e = canonicalize(random_expr(rng, degree=6))
        assert canonicalize(e) == e


def test_canonicalize_is_an_operator_identity():
    rng = np.random.default_rng(11)
    space = FockSpace.uniform([('pq', 0), ('pq', 1)], 12)
    for _ in range(5):
        e = random_expr(rng)
        lhs = build_operator(e.subs({HBAR: 1}), space).matrix
        rhs = build_operator(canonicalize(e).subs({HBAR: 1}), space).matrix
        np.testing.assert_allclose(low_block(lhs, space, 4), low_block(rhs, space, 4), atol=1e-9)


def test_degree_cap(Q):
    with pytest.raises(DegreeError):
        Q ** 13


def test_adjoint_reverses_and_conjugates(Q, P):
    e = (Q * P).scale(I)
    assert e.adjoint() == (P * Q).scale(-I)


@pytest.mark.parametrize('build, expected', [
    (lambda Q, P: P ** 2 + Q ** 2, True),
    (lambda Q, P: Q * P, False),
    (lambda Q, P: (Q * P + P * Q).scale(sympy.Rational(1, 2)), True),
])
def test_hermitian_check(Q, P, build, expected):
    assert hermitian_check(build(Q, P)) is expected


class TestFrames:
    def test_vacuum_frame_gram(self):
        f = FiducialFrame.vacuum([('pq', 0)], 3)
        assert f.raw_gram[0, 0] == 6
        assert f.gram[0, 0] == 1

    def test_zeta_frame_gram(self):
        zeta = symbol('zeta')
        b1 = op(q0) + op(Generator.position('rs', 0)).scale(zeta) + op(p0).scale(I)
        b2 = op(Generator.position('rs', 0)) + op(q0).scale(zeta) + op(Generator.momentum('rs', 0)).scale(I)
        f = FiducialFrame('zeta', [b1, b2])
        assert f.gram == sympy.Matrix([[1, zeta], [zeta, 1]])

    @pytest.mark.parametrize('zeta', [sympy.Integer(1), sympy.Rational(11, 10)])
    def test_gram_boundary(self, zeta):
        b1 = op(q0) + op(Generator.position('rs', 0)).scale(zeta) + op(p0).scale(I)
        b2 = op(Generator.position('rs', 0)) + op(q0).scale(zeta) + op(Generator.momentum('rs', 0)).scale(I)
        with pytest.raises(GramNotPositiveDefinite):
            FiducialFrame('zeta', [b1, b2]).check_positive()

    def test_non_commuting_annihilators(self):
        with pytest.raises(FrameError):
            FiducialFrame('bad', [op(q0) + op(p0).scale(I), op(q0) - op(p0).scale(I)])

    def test_nonlinear_definition(self, Q):
        with pytest.raises(FrameError):
            FiducialFrame('bad', [Q * Q])

    def test_span_mismatch(self):
        frame = FiducialFrame('short', [op(q0) + op(p0).scale(I) + op(q1)])
        assert frame.check_positive() is True
        with pytest.raises(DependentFiducialConditions):
            frame.check_independent()


class TestNormalOrder:
    def test_harmonic_constant(self, Q, P, hbar):
        m0 = symbol('m0')
        frame = FiducialFrame.vacuum([('pq', 0)], m0)
        ordered = normal_order(P ** 2 + Q.scale(m0 ** 2) * Q, frame)
        assert fiducial_expectation(ordered, frame) == hbar * m0
        assert ordered.ladder[((0,), (0,))] == 1

    def test_symbol_drops_contractions(self, Q, P, hbar):
        m0 = symbol('m0')
        frame = FiducialFrame.vacuum([('pq', 0)], m0)
        e = P ** 2 + (Q ** 2).scale(m0 ** 2)
        assert canonicalize(normal_symbol(e, frame)) == canonicalize(e - OperatorExpr.from_scalar(hbar * m0))

    def test_scalar_unchanged(self):
        frame = FiducialFrame.vacuum([('pq', 0)], 1)
        assert normal_order(OperatorExpr.from_scalar(5), frame).scalar_part() == 5

    def test_reorder_rule(self, Q, P, hbar):
        frame = FiducialFrame.vacuum([('pq', 0)], 1)
        b = Q + P.scale(I)
        ordered = normal_order(b * b.adjoint(), frame)
        assert dict(ordered.ladder) == {((0,), (0,)): 1, ((), ()): 2 * hbar}

    def test_round_trip(self):
        rng = np.random.default_rng(3)
        frame = FiducialFrame.vacuum([('pq', 0), ('pq', 1)], 2)
        for _ in range(10):
            e = random_expr(rng)
            assert canonicalize(normal_order(e, frame)) == canonicalize(e)

    def test_adjoint_covariance(self):
        rng = np.random.default_rng(5)
        frame = FiducialFrame.vacuum([('pq', 0), ('pq', 1)], 1)
        for _ in range(10):
            e = random_expr(rng)
            lhs = canonicalize(normal_order(e, frame).adjoint())
            assert lhs == canonicalize(normal_order(e.adjoint(), frame))

    def test_outside_span(self):
        frame = FiducialFrame.vacuum([('pq', 0)], 1)
        with pytest.raises(FrameSpanError):
            normal_order(op(q1), frame)

    def test_expectation_needs_frame(self, Q):
        frame = FiducialFrame.vacuum([('pq', 0)], 1)
        with pytest.raises(NotNormalOrderedError):
            fiducial_expectation(Q, frame)


class TestDisplace:
    def test_binomial(self, Q):
        q = symbol('q0')
        assert displace(Q ** 2, {q0: q}) == Q ** 2 + Q.scale(2 * q) + OperatorExpr.from_scalar(q ** 2)

    def test_momentum(self, P):
        p = symbol('p0')
        assert displace(P, {p0: p}) == P + OperatorExpr.from_scalar(p)

    def test_unshifted_set(self, Q):
        zeta, q = symbol('zeta'), symbol('q0')
        S = op(Generator.position('rs', 0))
        x = Q + S.scale(zeta)
        expected = x * x + x.scale(2 * q) + OperatorExpr.from_scalar(q ** 2)
        assert displace(x * x, shift_map([q0, Generator.position('rs', 0)], {'pq'})) == expected


class TestWcpSymbolic:
    def test_harmonic(self, Q, P, hbar):
        omega, p, q = symbol('omega'), symbol('p0'), symbol('q0')
        H = (P ** 2 + (Q ** 2).scale(omega ** 2)).scale(sympy.Rational(1, 2))
        h = wcp_symbolic(H, FiducialFrame.vacuum([('pq', 0)], omega), {'pq'})
        assert h == canonical((p ** 2 + omega ** 2 * q ** 2) / 2 + hbar * omega / 2)

    def test_quartic(self, Q, hbar):
        omega, q = symbol('omega'), symbol('q0')
        h = wcp_symbolic(Q ** 4, FiducialFrame.vacuum([('pq', 0)], omega), {'pq'})
        assert h == canonical(q ** 4 + 3 * q ** 2 * hbar / omega + 3 * hbar ** 2 / (4 * omega ** 2))

    def test_not_hermitian(self, Q, P):
        with pytest.raises(HermiticityError):
            wcp_symbolic(Q * P, FiducialFrame.vacuum([('pq', 0)], 1), {'pq'})

    def test_classical_substitution(self):
        rng = np.random.default_rng(13)
        frame = FiducialFrame.vacuum([('pq', 0), ('pq', 1)], symbol('omega'))
        for _ in range(5):
            e = random_expr(rng, degree=3)
            F = normal_symbol(e + e.adjoint(), frame)
            assert isinstance(F, NormalOrderedExpr)
            assert wcp_symbolic(F, frame, {'pq'}) == classical_substitution(e + e.adjoint(), {'pq'})
