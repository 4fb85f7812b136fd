import logging
from collections import namedtuple
from functools import lru_cache, reduce

import numpy as np
import scipy.sparse as sparse
from scipy.sparse.linalg import eigsh, expm_multiply

from EQLAB.classes.FockSpace import MatrixOp, StateVector
from EQLAB.classes.OperatorExpr import OperatorExpr, Generator
from EQLAB.config import DEFAULTS
from EQLAB.errors import (DimensionMismatch, DegenerateGroundSpace, TruncationLeakage, UnboundSymbolError,
                          UnknownGeneratorError)
from EQLAB.methods.ordering import hermitian_check

logger = logging.getLogger(__name__)

FiducialSolution = namedtuple('FiducialSolution', ['state', 'residual', 'gap'])


def annihilation(dimension):
    """
    Truncated ladder a|n> = sqrt(n)|n-1> in csr format
    """
    return sparse.diags(np.sqrt(np.arange(1, dimension, dtype=float)), 1,
                        shape=(dimension, dimension), format='csr', dtype=complex)


# Embed a single-mode operator at position `axis` of the kron product
def embed(space, axis, op):
    factors = [sparse.identity(d, dtype=complex, format='csr') for d in space.dims]
    factors[axis] = op
    return reduce(lambda x, y: sparse.kron(x, y, format='csr'), factors).tocsr()


@lru_cache(maxsize=64)
def _generator_pair(space, set_id, mode):
    axis = space.index_of(set_id, mode)
    fm = space.modes[axis]
    a = annihilation(fm.dimension)
    ad = a.conj().T.tocsr()
    q = np.sqrt(space.hbar / (2.0 * fm.omega_rep)) * (a + ad)
    p = 1j * np.sqrt(space.hbar * fm.omega_rep / 2.0) * (ad - a)
    return embed(space, axis, q.tocsr()), embed(space, axis, p.tocsr())


def build_generators(space, set_id, mode):
    """
    Position and momentum of one mode: Q = sqrt(hbar/2w)(a+a^+), P = i sqrt(hbar w/2)(a^+ - a)
    :param space: FockSpace
    :param set_id: (str), canonical set
    :param mode: (int), mode index
    :return: (Q, P) as MatrixOp
    """
    q, p = _generator_pair(space, set_id, mode)
    return (MatrixOp(space, q, True, Generator.position(set_id, mode)),
            MatrixOp(space, p, True, Generator.momentum(set_id, mode)))


def generator_matrix(space, g):
    q, p = _generator_pair(space, g.set_id, g.mode)
    return q if g.is_position else p


def numeric(coef):
    if coef.free_symbols:
        raise UnboundSymbolError('unbound symbol(s) %s in coefficient %s'
                                 % (', '.join(sorted(map(str, coef.free_symbols))), coef))
    return complex(coef)


def build_operator(e, space, shifts=None):
    """
    Matrix of an operator polynomial, words multiplied in word order
    :param e: OperatorExpr with numeric coefficients
    :param space: FockSpace containing every generator of e
    :param shifts: (dict, optional) Generator -> float, builds e(g + shift) instead of e(g)
    :return: MatrixOp
    """
    e = OperatorExpr.coerce(e)
    shifts = shifts or dict()
    for g in e.generators():
        if not space.has_mode(g.set_id, g.mode):
            raise UnknownGeneratorError('generator %s is not part of %r' % (g, space))
    n = space.dimension
    eye = sparse.identity(n, dtype=complex, format='csr')
    prefixes = {(): eye}

    def product(word):
        if word not in prefixes:
            g = word[-1]
            m = generator_matrix(space, g)
            if shifts.get(g, 0):
                m = m + shifts[g] * eye
            prefixes[word] = (product(word[:-1]) @ m).tocsr()
        return prefixes[word]

    total = sparse.csr_matrix((n, n), dtype=complex)
    for word, coef in e.sorted_terms():
        total = total + numeric(coef) * product(word)
    hermitian = hermitian_check(e)
    if hermitian:
        total = 0.5 * (total + total.conj().T)
    total = total.tocsr()
    total.sum_duplicates()
    total.sort_indices()
    return MatrixOp(space, total, hermitian, e)


def fiducial_solve(conditions, space, gap_threshold=DEFAULTS.gap, dense_limit=DEFAULTS.dense_limit):
    """
    Joint null vector of annihilation conditions: ground state of K = sum b_i^+ b_i
    :param conditions: list of MatrixOp
    :param space: FockSpace
    :return: FiducialSolution(state, residual, gap)
    """
    if not conditions:
        raise ValueError('at least one fiducial condition is required')
    for b in conditions:
        if b.space != space:
            raise DimensionMismatch('fiducial condition built on a different space')
    k = sum((b.matrix.conj().T @ b.matrix for b in conditions), sparse.csr_matrix(
        (space.dimension, space.dimension), dtype=complex)).tocsr()
    if space.dimension <= dense_limit:
        values, vectors = np.linalg.eigh(k.toarray())
    else:
        v0 = np.ones(space.dimension, dtype=complex) / np.sqrt(space.dimension)
        values, vectors = eigsh(k, k=2, sigma=-1.0, which='LM', v0=v0)
        order = np.argsort(values)
        values, vectors = values[order], vectors[:, order]
    gap = float(values[1] - values[0]) if len(values) > 1 else float('inf')
    if gap < gap_threshold:
        raise DegenerateGroundSpace('fiducial conditions leave a degenerate ground space (gap %.3g)' % gap)
    v = vectors[:, 0]
    pivot = np.argmax(np.abs(v))
    v = v * (abs(v[pivot]) / v[pivot])  # largest amplitude real positive
    v = v / np.linalg.norm(v)
    residual = float(np.sqrt(sum(np.linalg.norm(b.matrix @ v) ** 2 for b in conditions)))
    logger.info('fiducial solved on dim %d: residual %.3g, gap %.3g', space.dimension, residual, gap)
    return FiducialSolution(StateVector(space, v, normalized=True), residual, gap)


def shifted_modes(space, shifted_sets):
    return [m for m in space.modes if m.set_id in shifted_sets]


def coherent_state(space, fiducial, p, q, shifted_sets, leakage=DEFAULTS.leakage, data=False):
    """
    |p,q> = exp(-i sum q_n P_n / hbar) exp(i sum p_n Q_n / hbar) |fiducial>
    :param p, q: sequences indexed by the modes of the shifted sets, in space order
    :param shifted_sets: set ids the displacement acts on
    :param leakage: bound on the truncation leakage indicator
    :param data: if True return (state, leakage indicator)
    :return: StateVector
    """
    if not fiducial.normalized:
        raise ValueError('fiducial vector must be normalized')
    modes = shifted_modes(space, shifted_sets)
    p, q = np.atleast_1d(np.asarray(p, dtype=float)), np.atleast_1d(np.asarray(q, dtype=float))
    if p.shape != (len(modes),) or q.shape != (len(modes),):
        raise DimensionMismatch('expected %d phase-space coordinates per axis' % len(modes))
    v = np.array(fiducial.amplitudes)
    if np.any(p):
        gen = sum(pn * _generator_pair(space, m.set_id, m.mode)[0] for pn, m in zip(p, modes) if pn)
        v = expm_multiply(1j * gen / space.hbar, v)
    if np.any(q):
        gen = sum(qn * _generator_pair(space, m.set_id, m.mode)[1] for qn, m in zip(q, modes) if qn)
        v = expm_multiply(-1j * gen / space.hbar, v)
    norm = np.linalg.norm(v)
    indicator = max(abs(norm - 1.0), space.edge_population(v))
    if indicator > leakage:
        raise TruncationLeakage('truncation leakage %.3g exceeds %.3g at p=%s q=%s'
                                % (indicator, leakage, p.tolist(), q.tolist()), indicator)
    state = StateVector(space, v / norm, normalized=True)
    if data:
        return state, indicator
    return state


def expectation(op, state):
    """
    <v|A|v>
    :return: complex
    """
    return complex(np.vdot(state.amplitudes, op.apply(state)))


def exp_action(op, state, t):
    """
    exp(-i t A / hbar) v by exponential action, never a dense exponential
    """
    v = expm_multiply(-1j * t * op.matrix / op.space.hbar, state.amplitudes)
    return StateVector(op.space, v, normalized=False)


# Debug dumps: one 'index real imag' (or 'row col real imag') line per entry
def dump_state(state):
    return '\n'.join('%d %.17g %.17g' % (i, a.real, a.imag) for i, a in enumerate(state.amplitudes))


def dump_matrix(op):
    m = op.matrix.tocoo()
    rows = sorted(zip(m.row, m.col, m.data))
    return '\n'.join('%d %d %.17g %.17g' % (r, c, v.real, v.imag) for r, c, v in rows)
