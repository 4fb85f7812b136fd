import logging
from collections import namedtuple

import numpy as np
import sympy

from EQLAB.classes.FockSpace import FockSpace
from EQLAB.classes.OperatorExpr import Generator, HBAR, canonical, render_scalar
from EQLAB.classes.Reports import WcpPoint, WcpReport, MetricTensor
from EQLAB.config import DEFAULTS
from EQLAB.errors import StepTooLarge, TruncationLeakage, DimensionMismatch
from EQLAB.methods.fock import build_operator, fiducial_solve, coherent_state, expectation, shifted_modes
from EQLAB.methods.ordering import wcp_symbolic

logger = logging.getLogger(__name__)

NumericModel = namedtuple('NumericModel', ['space', 'hamiltonian', 'fiducial', 'residual', 'gap', 'shifted_sets'])


def numeric_model(model, settings=DEFAULTS, truncation=None, hbar=None, omega_rep=None):
    """
    Truncated-Fock realization of a checked model
    :param model: CheckedModel
    :param truncation: (int, optional), per-mode D. By default the model's truncation
    :param hbar: (float, optional), numeric hbar when the model leaves it symbolic. By default settings.hbar
    :param omega_rep: (float, optional), representation frequency. By default m, m0 or omega of the model
    :return: NumericModel(space, hamiltonian MatrixOp, fiducial StateVector, residual, gap, shifted_sets)
    """
    hbar = settings.hbar if hbar is None else hbar
    h_value = model.hbar_value(hbar)
    space = FockSpace.uniform(model.spec.mode_keys, truncation or model.truncation,
                              omega_rep or model.representation_frequency(), h_value)
    H = build_operator(model.bound_hamiltonian(hbar), space)
    conditions = [build_operator(b, space) for b in model.bound_frame(hbar).annihilators]
    solution = fiducial_solve(conditions, space, settings.gap, settings.dense_limit)
    return NumericModel(space, H, solution.state, solution.residual, solution.gap, model.shifted_sets)


def shifted_mode_keys(model):
    return [(s, n) for s, n in model.spec.mode_keys if s in model.shifted_sets]


def phase_symbols(space, shifted_sets):
    """
    Shift symbols in coordinate order (p_1..p_N, q_1..q_N)
    """
    modes = shifted_modes(space, shifted_sets)
    ps = [Generator.momentum(m.set_id, m.mode).shift_symbol() for m in modes]
    qs = [Generator.position(m.set_id, m.mode).shift_symbol() for m in modes]
    return ps + qs


def classical_function(model, hbar=None, settings=DEFAULTS):
    """
    H(p,q) of a model with parameters and hbar bound
    :return: sympy polynomial in the shift symbols
    """
    hbar = settings.hbar if hbar is None else hbar
    return wcp_symbolic(model.bound_hamiltonian(hbar), model.bound_frame(hbar), model.shifted_sets)


def wcp_numeric(model, points, settings=DEFAULTS, truncation=None, hbar=None, omega_rep=None, name='model'):
    """
    Weak correspondence check: <p,q|H|p,q> computed in a truncated Fock space against the symbolic H(p,q)
    :param model: CheckedModel
    :param points: list of (p, q), each a sequence over the modes of the shifted sets
    :param name: (str, optional), model id recorded in the report
    :return: WcpReport
    """
    nm = numeric_model(model, settings, truncation, hbar, omega_rep)
    symbolic = classical_function(model, hbar, settings)
    coords = phase_symbols(nm.space, nm.shifted_sets)
    h_cl = sympy.lambdify(coords, symbolic, 'numpy')
    report = []
    for p, q in points:
        p, q = tuple(float(x) for x in np.atleast_1d(p)), tuple(float(x) for x in np.atleast_1d(q))
        if 2 * len(p) != len(coords) or len(q) != len(p):
            raise DimensionMismatch('phase point (%s, %s) does not match %d shifted mode(s)'
                                    % (p, q, len(coords) // 2))
        h_sym = float(np.real(h_cl(*(p + q))))
        try:
            state, leak = coherent_state(nm.space, nm.fiducial, p, q, nm.shifted_sets,
                                         settings.leakage, data=True)
        except TruncationLeakage as exc:
            logger.warning('wcp point p=%s q=%s flagged: %s', p, q, exc)
            report.append(WcpPoint(p, q, None, h_sym, exc.leakage, True))
            continue
        value = expectation(nm.hamiltonian, state)
        logger.debug('wcp p=%s q=%s numeric %.12g symbolic %.12g', p, q, value.real, h_sym)
        report.append(WcpPoint(p, q, value.real, h_sym, leak, False, value.imag))
    result = WcpReport(name, nm.space.modes[0].dimension, nm.space.hbar, render_scalar(symbolic), tuple(report))
    logger.info('wcp over %d point(s): max deviation %s, %d flagged', len(report), result.max_abs_dev,
                len(result.flagged))
    return result


def hbar_split(h):
    """
    Split a lower symbol into its hbar-free part and the hbar corrections
    :param h: sympy expression, polynomial in hbar
    :return: (classical, corrections) with classical + corrections == h
    """
    h = canonical(h)
    classical = sympy.Add(*[t for t in sympy.Add.make_args(h) if not t.has(HBAR)])
    return classical, canonical(h - classical)


def grid(extent=1.0, count=3, modes=1):
    """
    Square phase-space grid, every coordinate on linspace(-extent, extent, count)
    :return: list of (p, q)
    """
    axis = np.linspace(-extent, extent, count)
    mesh = np.array(np.meshgrid(*([axis] * (2 * modes)), indexing='ij')).reshape(2 * modes, -1).T
    return [(tuple(row[:modes]), tuple(row[modes:])) for row in mesh]


def displaced_vacuum_expectation(H, space, fiducial, p, q, shifted_sets):
    """
    <0|H(P+p, Q+q)|0> with the displaced operator built directly
    :param H: OperatorExpr with numeric coefficients
    """
    modes = shifted_modes(space, shifted_sets)
    p, q = np.atleast_1d(p), np.atleast_1d(q)
    shifts = dict()
    for m, pn, qn in zip(modes, p, q):
        shifts[Generator.momentum(m.set_id, m.mode)] = float(pn)
        shifts[Generator.position(m.set_id, m.mode)] = float(qn)
    return expectation(build_operator(H, space, shifts), fiducial)


def _derivatives(space, fiducial, x, n, h, shifted_sets, leakage):
    out = []
    for k in range(2 * n):
        e = np.zeros(2 * n)
        e[k] = h
        plus = coherent_state(space, fiducial, (x + e)[:n], (x + e)[n:], shifted_sets, leakage)
        minus = coherent_state(space, fiducial, (x - e)[:n], (x - e)[n:], shifted_sets, leakage)
        out.append((plus.amplitudes - minus.amplitudes) / (2 * h))
    return out


def _quadratic_form(psi, ds, hbar):
    k = len(ds)
    g = np.zeros((k, k))
    proj = [np.vdot(psi, d) for d in ds]
    for a in range(k):
        for b in range(k):
            g[a, b] = 2 * hbar * np.real(np.vdot(ds[a], ds[b]) - np.conj(proj[a]) * proj[b])
    return g


def fubini_study_metric(space, fiducial, p, q, step=DEFAULTS.fd_step, shifted_sets=None, leakage=DEFAULTS.leakage,
                        max_halving=1e-4):
    """
    Coherent-state metric 2 hbar [ |d psi|^2 - |<psi|d psi>|^2 ] by central differences.
    Entries are the real part of a Hermitian form, so the result is symmetric by construction and the
    reported symmetry defect is rounding only; the step is guarded by the halving estimate.
    :param space: FockSpace
    :param fiducial: normalized StateVector
    :param p, q: phase point
    :param step: (float), finite-difference step h; h and h/2 are Richardson-combined
    :param shifted_sets: (optional), by default every set of the space
    :param max_halving: bound on the change of any entry between steps h and h/2
    :return: MetricTensor
    """
    if step <= 0:
        raise ValueError('finite-difference step must be positive')
    if shifted_sets is None:
        shifted_sets = set(m.set_id for m in space.modes)
    p, q = np.atleast_1d(np.asarray(p, dtype=float)), np.atleast_1d(np.asarray(q, dtype=float))
    n = len(p)
    x = np.concatenate([p, q])
    psi = coherent_state(space, fiducial, p, q, shifted_sets, leakage).amplitudes
    coarse = _derivatives(space, fiducial, x, n, step, shifted_sets, leakage)
    fine = _derivatives(space, fiducial, x, n, step / 2, shifted_sets, leakage)
    combined = [(4 * f - c) / 3 for f, c in zip(fine, coarse)]
    g = _quadratic_form(psi, combined, space.hbar)
    halving = float(np.max(np.abs(_quadratic_form(psi, coarse, space.hbar) - _quadratic_form(psi, fine, space.hbar))))
    defect = float(np.max(np.abs(g - g.T)))
    if halving > max_halving:
        raise StepTooLarge('metric at p=%s q=%s: halving change %.3g (step %g)'
                           % (p.tolist(), q.tolist(), halving, step))
    logger.debug('metric at p=%s q=%s: halving change %.3g', p.tolist(), q.tolist(), halving)
    return MetricTensor(0.5 * (g + g.T), step, tuple(x.tolist()), halving, defect)
