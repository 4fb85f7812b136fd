import numpy as np
import pytest
import sympy

from EQLAB.classes.FiducialFrame import FiducialFrame
from EQLAB.classes.FockSpace import FockSpace
from EQLAB.classes.OperatorExpr import Generator, HBAR, symbol
from EQLAB.errors import DimensionMismatch, StepTooLarge
from EQLAB.methods.correspondence import (numeric_model, classical_function, wcp_numeric, hbar_split, grid,
                                          displaced_vacuum_expectation, fubini_study_metric)
from EQLAB.methods.dsl import load_model
from EQLAB.methods.fock import build_operator, coherent_state, expectation
from EQLAB.methods.ordering import wcp_symbolic
from tests.conftest import HARMONIC
from tests.test_ordering import GENS, random_expr

p0, q0 = Generator.momentum('pq', 0).shift_symbol(), Generator.position('pq', 0).shift_symbol()
TWO_MODES = [('pq', 0), ('pq', 1)]


def random_hermitian(rng, generators=GENS):
    e = random_expr(rng, degree=4, generators=generators)
    return e + e.adjoint()


@pytest.fixture(scope='module')
def harmonic2():
    return load_model(HARMONIC.replace('param omega = 1', 'param omega = 2'))


class TestWcpNumeric:
    def test_harmonic_values(self, harmonic):
        report = wcp_numeric(harmonic, [((0,), (0,)), ((1,), (1,))])
        assert [pt.symbolic for pt in report.points] == pytest.approx([0.5, 1.5])
        for pt in report.points:
            assert pt.abs_dev < 1e-9
            assert abs(pt.imaginary) < 1e-12
        assert report.truncation == 64

    def test_rotsym_n1(self, rotsym_n1):
        report = wcp_numeric(rotsym_n1, [((0,), (1,))])
        assert report.points[0].symbolic == pytest.approx(0.6875, abs=1e-12)
        assert report.points[0].numeric == pytest.approx(0.6875, abs=1e-4)

    def test_quartic_grid(self, quartic):
        report = wcp_numeric(quartic, grid(1.0, 3))
        assert len(report.points) == 9
        assert not report.flagged
        assert report.max_abs_dev < 1e-6

    def test_leaky_point_flagged(self, harmonic):
        report = wcp_numeric(harmonic, [((3,), (3,))], truncation=8)
        point = report.points[0]
        assert point.flagged and point.numeric is None
        assert point.leakage > 1e-6
        assert report.flagged == [point]

    def test_point_arity(self, harmonic):
        with pytest.raises(DimensionMismatch):
            wcp_numeric(harmonic, [((0, 0), (0, 0))])

    def test_classical_function(self, harmonic):
        assert sympy.expand(classical_function(harmonic) - (p0 ** 2 + q0 ** 2 + 1) / 2) == 0


class TestHbarSplit:
    def test_split(self):
        m = symbol('m')
        classical, corrections = hbar_split(p0 ** 2 / 2 + HBAR * m / 2 + HBAR ** 2 * q0)
        assert sympy.expand(classical - p0 ** 2 / 2) == 0
        assert sympy.expand(corrections - HBAR * m / 2 - HBAR ** 2 * q0) == 0

    def test_without_hbar(self):
        assert hbar_split(q0 ** 4) == (q0 ** 4, 0)

    def test_linear(self):
        a = p0 ** 2 + HBAR * q0
        b = q0 ** 2 - 3 * HBAR
        split_a, split_b, split_sum = hbar_split(a), hbar_split(b), hbar_split(a + b)
        for k in range(2):
            assert sympy.expand(split_sum[k] - split_a[k] - split_b[k]) == 0


class TestGrid:
    def test_single_mode(self):
        points = grid(1.0, 3)
        assert len(points) == 9
        assert points[0] == ((-1.0,), (-1.0,))
        assert ((0.0,), (0.0,)) in points

    def test_two_modes(self):
        points = grid(0.5, 3, modes=2)
        assert len(points) == 81
        assert all(len(p) == 2 and len(q) == 2 for p, q in points)


class TestMetric:
    def test_unit_frequency(self, harmonic):
        nm = numeric_model(harmonic)
        metric = fubini_study_metric(nm.space, nm.fiducial, 0.3, -0.2, shifted_sets=nm.shifted_sets)
        np.testing.assert_allclose(metric.matrix, np.eye(2), atol=1e-6)
        assert metric.is_positive_definite()
        assert metric.symmetry_defect < 1e-12
        assert metric.point == pytest.approx((0.3, -0.2))

    def test_frequency_two(self, harmonic2):
        nm = numeric_model(harmonic2)
        metric = fubini_study_metric(nm.space, nm.fiducial, 0.0, 0.0, shifted_sets=nm.shifted_sets)
        np.testing.assert_allclose(metric.matrix, np.diag([0.5, 2.0]), atol=1e-6)

    def test_flat(self, harmonic2):
        nm = numeric_model(harmonic2)
        for p, q in grid(1.0, 3):
            metric = fubini_study_metric(nm.space, nm.fiducial, p, q, shifted_sets=nm.shifted_sets)
            np.testing.assert_allclose(metric.matrix, np.diag([0.5, 2.0]), atol=1e-6)

    def test_phase_invariant(self, harmonic):
        nm = numeric_model(harmonic)
        plain = fubini_study_metric(nm.space, nm.fiducial, 0.5, 0.5, shifted_sets=nm.shifted_sets)
        rotated = fubini_study_metric(nm.space, nm.fiducial.with_phase(0.7), 0.5, 0.5,
                                      shifted_sets=nm.shifted_sets)
        np.testing.assert_allclose(rotated.matrix, plain.matrix, atol=1e-10)

    def test_richardson_consistency(self, harmonic):
        nm = numeric_model(harmonic)
        coarse = fubini_study_metric(nm.space, nm.fiducial, 0.3, -0.2, step=2e-3, shifted_sets=nm.shifted_sets)
        fine = fubini_study_metric(nm.space, nm.fiducial, 0.3, -0.2, step=1e-3, shifted_sets=nm.shifted_sets)
        # halving estimate scales with step^2
        assert fine.error == pytest.approx(coarse.error / 4, rel=0.1)
        assert np.max(np.abs(fine.matrix - coarse.matrix)) <= 4 * coarse.error

    def test_step_too_large(self, harmonic):
        nm = numeric_model(harmonic)
        with pytest.raises(StepTooLarge):
            fubini_study_metric(nm.space, nm.fiducial, 0.0, 0.0, step=0.5, shifted_sets=nm.shifted_sets)

    def test_step_positive(self, harmonic):
        nm = numeric_model(harmonic)
        with pytest.raises(ValueError):
            fubini_study_metric(nm.space, nm.fiducial, 0.0, 0.0, step=0)


@pytest.mark.parametrize('p, q', [(0.0, 0.0), (0.5, -0.7), (-1.0, 1.0)])
def test_displaced_operator(quartic, p, q):
    nm = numeric_model(quartic)
    H = quartic.bound_hamiltonian(1)
    direct = displaced_vacuum_expectation(H, nm.space, nm.fiducial, p, q, nm.shifted_sets)
    state = coherent_state(nm.space, nm.fiducial, p, q, nm.shifted_sets)
    assert direct == pytest.approx(expectation(nm.hamiltonian, state), abs=1e-8)


def test_displaced_operator_random():
    rng = np.random.default_rng(23)
    space = FockSpace.uniform([('pq', 0)], 64)
    vacuum = space.basis_state()
    for _ in range(10):
        H = random_hermitian(rng, GENS[:2])
        p, q = rng.uniform(-1, 1, 2)
        direct = displaced_vacuum_expectation(H, space, vacuum, p, q, {'pq'})
        state = coherent_state(space, vacuum, [p], [q], {'pq'})
        assert direct == pytest.approx(expectation(build_operator(H, space), state), abs=1e-8)


def test_symbolic_agrees_with_numeric():
    rng = np.random.default_rng(17)
    space = FockSpace.uniform(TWO_MODES, 32)
    frame = FiducialFrame.vacuum(TWO_MODES, 1)
    vacuum = space.basis_state()
    shifts = ([Generator.momentum(s, n).shift_symbol() for s, n in TWO_MODES]
              + [Generator.position(s, n).shift_symbol() for s, n in TWO_MODES])
    points = [(rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)) for _ in range(3)]
    states = [coherent_state(space, vacuum, p, q, {'pq'}) for p, q in points]
    for _ in range(20):
        H = random_hermitian(rng)
        h = sympy.sympify(wcp_symbolic(H, frame, {'pq'})).subs(HBAR, 1)
        matrix = build_operator(H, space)
        for (p, q), state in zip(points, states):
            value = complex(h.subs(dict(zip(shifts, [*p, *q]))))
            assert expectation(matrix, state) == pytest.approx(value, abs=1e-8)
