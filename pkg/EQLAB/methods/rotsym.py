import logging
from collections import namedtuple

import sympy

from EQLAB.classes.OperatorExpr import Generator, canonical, scalar, render_scalar, symbol
from EQLAB.classes.Reports import MatchReport
from EQLAB.classes.RotsymParams import check_zeta
from EQLAB.config import DEFAULTS
from EQLAB.errors import ZetaOutOfRange
from EQLAB.methods.correspondence import wcp_numeric, grid
from EQLAB.methods.dsl import load_model
from EQLAB.methods.ordering import wcp_symbolic

logger = logging.getLogger(__name__)

FRAME = 'zeta_frame'
IrreducibleContrast = namedtuple('IrreducibleContrast', ['classical', 'quartic', 'p_dependent'])


def _coordinates(N):
    ps = [Generator.momentum('pq', n).shift_symbol() for n in range(N)]
    qs = [Generator.position('pq', n).shift_symbol() for n in range(N)]
    return ps, qs


def build_classical(N, m0=None, lambda0=0, m0_squared=None):
    """
    Classical Hamiltonian 1/2 sum (p_n^2 + m0^2 q_n^2) + lambda0 (sum q_n^2)^2
    :param N: (int), number of degrees of freedom
    :param m0: mass; ignored when m0_squared is given
    :param lambda0: quartic coupling
    :param m0_squared: (optional), m0^2 directly
    :return: sympy polynomial in p0.., q0..
    """
    if N < 1:
        raise ValueError('N must be at least 1')
    if m0_squared is None:
        if m0 is None:
            raise ValueError('either m0 or m0_squared is required')
        m0_squared = scalar(m0) ** 2
    m0_squared, lambda0 = scalar(m0_squared), scalar(lambda0)
    ps, qs = _coordinates(N)
    radius = sum((q ** 2 for q in qs), sympy.S.Zero)
    return canonical(sympy.Rational(1, 2) * sum((p ** 2 + m0_squared * q ** 2 for p, q in zip(ps, qs)), sympy.S.Zero)
                     + lambda0 * radius ** 2)


def _param_line(name, value):
    if value.free_symbols:
        if value != symbol(name):
            raise ValueError('symbolic %s must be the plain symbol %r, got %s' % (name, name, value))
        return 'param %s' % name
    if not value.is_Rational:
        raise ValueError('%s must be rational to build a model, got %s' % (name, value))
    return 'param %s = %s' % (name, render_scalar(value))


def reducible_source(params, truncation=None):
    """
    .eqm text of the reducible model; the normal-ordering frame is the zeta frame
    """
    N = params.N
    rng = range(N)
    frame = (['m*Q[%d] + m*zeta*S[%d] + i*P[%d]' % (n, n, n) for n in rng]
             + ['m*S[%d] + m*zeta*Q[%d] + i*R[%d]' % (n, n, n) for n in rng])
    first = ' + '.join('P[%d]^2 + m^2*(Q[%d] + zeta*S[%d])^2' % (n, n, n) for n in rng)
    second = ' + '.join('R[%d]^2 + m^2*(S[%d] + zeta*Q[%d])^2' % (n, n, n) for n in rng)
    lines = ['# rotationally symmetric model with reducible operators, N=%d' % N,
             _param_line('m', params.m), _param_line('zeta', params.zeta), _param_line('v', params.v),
             'set pq %d' % N,
             'set rs %d' % N,
             'frame %s = %s' % (FRAME, ', '.join(frame)),
             'fiducial %s' % FRAME,
             'shifted pq']
    if truncation is not None:
        lines.append('truncation %d' % truncation)
    lines.append('H = 1/2*:[ %s ]: @%s + 1/2*:[ %s ]: @%s + v*:[ (%s)^2 ]: @%s'
                 % (first, FRAME, second, FRAME, second, FRAME))
    return '\n'.join(lines) + '\n'


def build_reducible_model(params, truncation=None, settings=DEFAULTS):
    """
    Reducible-operator model: sets {P,Q} and {R,S}, fiducial annihilated by m(Q+zeta S)+iP and m(S+zeta Q)+iR,
    Hamiltonian normal-ordered in that frame, only the pq set shifted
    :param params: RotsymParams
    :return: CheckedModel
    :raise GramNotPositiveDefinite: for |zeta| >= 1
    :raise ZetaOutOfRange: for zeta <= 0
    """
    model = load_model(reducible_source(params, truncation), settings)
    if params.zeta.is_positive is False:
        raise ZetaOutOfRange('zeta must lie in (0, 1), got %s' % params.zeta)
    return model


def effective_parameters(m, zeta, v):
    """
    Classical parameters realized by the reducible model
    :return: (m0^2, lambda0) = (m^2 (1 + zeta^2), v zeta^4 m^4), exact
    :raise ZetaOutOfRange: unless 0 < zeta < 1
    """
    zeta = check_zeta(zeta)
    m, v = scalar(m), scalar(v)
    return canonical(m ** 2 * (1 + zeta ** 2)), canonical(v * zeta ** 4 * m ** 4)


def invert_parameters(m0_squared, lambda0, zeta):
    """
    Reducible-model parameters realizing a classical target
    :return: (m, v) with m = sqrt(m0^2 / (1 + zeta^2)), v = lambda0 / (zeta^4 m^4)
    :raise ZetaOutOfRange: unless 0 < zeta < 1
    """
    zeta = check_zeta(zeta)
    m0_squared, lambda0 = scalar(m0_squared), scalar(lambda0)
    if m0_squared.is_positive is False:
        raise ValueError('m0^2 must be positive, got %s' % m0_squared)
    if lambda0.is_negative:
        raise ValueError('lambda0 must be non-negative, got %s' % lambda0)
    m_squared = canonical(m0_squared / (1 + zeta ** 2))
    m = sympy.sqrt(m_squared)
    return m, canonical(lambda0 / (zeta ** 4 * m_squared ** 2))


def verify_match(params, numeric=None, points=None, truncation=None, settings=DEFAULTS, hbar=None):
    """
    Compare the lower symbol of the reducible model with the classical target at the effective parameters
    :param params: RotsymParams
    :param numeric: (bool, optional), run the Fock-space check too. By default only for N = 1
    :param points: (optional), phase points of the numeric check. By default a 3x3 grid over [-1, 1]
    :return: MatchReport
    """
    params.check()
    model = build_reducible_model(params, truncation, settings)
    h = canonical(wcp_symbolic(model.hamiltonian, model.fiducial_frame, model.shifted_sets))
    m0_squared, lambda0 = effective_parameters(params.m, params.zeta, params.v)
    target = build_classical(params.N, m0_squared=m0_squared, lambda0=lambda0)
    exact = h == target
    if not exact:
        logger.warning('reducible model does not reproduce the classical target: difference %s',
                       canonical(h - target))
    numeric = params.N == 1 and not params.is_symbolic if numeric is None else numeric
    pts, used = (), None
    if numeric:
        wcp = wcp_numeric(model, points or grid(1.0, 3, params.N), settings, truncation, hbar, name='rotsym')
        pts, used = wcp.points, wcp.truncation
    report = MatchReport(exact, render_scalar(target), render_scalar(h), render_scalar(m0_squared),
                         render_scalar(lambda0), params.as_dict(), pts, used)
    logger.info('rotsym match N=%d: exact=%s, max numeric deviation %s', params.N, exact, report.max_abs_dev)
    return report


def irreducible_source(N, m0, w):
    rng = range(N)
    frame = ', '.join('m0*Q[%d] + i*P[%d]' % (n, n) for n in rng)
    quadratic = ' + '.join('P[%d]^2 + m0^2*Q[%d]^2' % (n, n) for n in rng)
    lines = ['# irreducible comparison model, N=%d' % N,
             _param_line('m0', scalar(m0)), _param_line('w', scalar(w)),
             'set pq %d' % N,
             'frame vacuum = %s' % frame,
             'fiducial vacuum',
             'shifted pq',
             'H = 1/2*:[ %s ]: @vacuum + w*:[ (%s)^2 ]: @vacuum' % (quadratic, quadratic)]
    return '\n'.join(lines) + '\n'


def build_irreducible_model(N, m0, w, settings=DEFAULTS):
    """
    Same quartic interaction built from one irreducible set, normal-ordered in the vacuum of m0 Q + i P
    :return: CheckedModel
    """
    return load_model(irreducible_source(N, m0, w), settings)


def irreducible_contrast(N, m0, w, settings=DEFAULTS):
    """
    Lower symbol of the irreducible model and whether its quartic part depends on the momenta
    :return: IrreducibleContrast(classical, quartic, p_dependent)
    """
    model = build_irreducible_model(N, m0, w, settings)
    h = canonical(wcp_symbolic(model.hamiltonian, model.fiducial_frame, model.shifted_sets))
    ps, qs = _coordinates(N)
    poly = sympy.Poly(h, *(ps + qs))
    quartic = canonical(sum((coef * sympy.Mul(*[x ** k for x, k in zip(ps + qs, monom)])
                             for monom, coef in poly.terms() if sum(monom) == 4), sympy.S.Zero))
    return IrreducibleContrast(h, quartic, any(quartic.has(p) for p in ps))
