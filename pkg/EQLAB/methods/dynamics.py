import logging

import numpy as np
import sympy
from scipy.optimize import root
from scipy.sparse.linalg import expm_multiply

from EQLAB.classes.OperatorExpr import Generator
from EQLAB.classes.Trajectory import Trajectory, DeviationReport
from EQLAB.config import DEFAULTS
from EQLAB.errors import DimensionMismatch, StepRejected, GridMismatch, UnboundSymbolError
from EQLAB.methods.fock import generator_matrix, coherent_state, shifted_modes

logger = logging.getLogger(__name__)


def schrodinger_evolve(H, psi0, grid, modes=None, step_tolerance=1e-10):
    """
    Full quantum evolution i hbar d/dt psi = H psi by exponential action per time step
    :param H: Hermitian MatrixOp
    :param psi0: normalized StateVector
    :param grid: TimeGrid
    :param modes: (list of (set_id, mode), optional), modes whose <Q>, <P> are logged. By default all modes
    :param step_tolerance: bound on the norm change of a single step
    :return: Trajectory with q_exp, p_exp, norm, energy
    """
    space = H.space
    if psi0.space.dimension != space.dimension:
        raise DimensionMismatch('state dimension %d, Hamiltonian dimension %d'
                                % (psi0.space.dimension, space.dimension))
    if not H.hermitian:
        raise ValueError('Hamiltonian matrix is not Hermitian')
    if not psi0.normalized:
        raise ValueError('initial state must be normalized')
    modes = modes or [(m.set_id, m.mode) for m in space.modes]
    qs = [generator_matrix(space, Generator.position(s, n)) for s, n in modes]
    ps = [generator_matrix(space, Generator.momentum(s, n)) for s, n in modes]
    a = -1j * grid.dt * H.matrix / space.hbar
    v = np.array(psi0.amplitudes)
    q_exp, p_exp, norm, energy = [], [], [], []

    def log(v):
        q_exp.append([np.vdot(v, m @ v).real for m in qs])
        p_exp.append([np.vdot(v, m @ v).real for m in ps])
        norm.append(np.linalg.norm(v))
        energy.append(np.vdot(v, H.matrix @ v).real)

    log(v)
    for k in range(grid.steps):
        w = expm_multiply(a, v)
        jump = abs(np.linalg.norm(w) - np.linalg.norm(v))
        if jump > step_tolerance:
            raise StepRejected('step %d: norm changed by %.3g (tolerance %.3g)' % (k, jump, step_tolerance))
        v = w
        log(v)
    traj = Trajectory(grid.times, q_exp=np.array(q_exp), p_exp=np.array(p_exp), norm=np.array(norm),
                      energy=np.array(energy))
    logger.info('schrodinger evolution: %d steps, norm drift %.3g, energy drift %.3g',
                grid.steps, traj.norm_drift(), traj.energy_drift())
    return traj


def phase_coordinates(n, set_id='pq'):
    """
    Shift symbols ([p_0..p_{n-1}], [q_0..q_{n-1}]) of a canonical set
    """
    return ([Generator.momentum(set_id, k).shift_symbol() for k in range(n)],
            [Generator.position(set_id, k).shift_symbol() for k in range(n)])


# Hamiltonian vector field of a classical polynomial, gradients by exact differentiation
class HamiltonFlow:
    def __init__(self, h_cl, ps, qs):
        self.h_cl = sympy.expand(h_cl)
        self.ps, self.qs = list(ps), list(qs)
        extra = self.h_cl.free_symbols - set(self.ps) - set(self.qs)
        if extra:
            raise UnboundSymbolError('unbound symbol(s) in classical Hamiltonian: %s'
                                     % ', '.join(sorted(map(str, extra))))
        coords = self.ps + self.qs
        dh_dp = [sympy.diff(self.h_cl, x) for x in self.ps]
        dh_dq = [sympy.diff(self.h_cl, x) for x in self.qs]
        self.separable = all(sympy.diff(d, x) == 0 for d in dh_dp for x in self.qs)
        self.energy = sympy.lambdify(coords, self.h_cl, 'numpy')
        self._dh_dp = sympy.lambdify(coords, dh_dp, 'numpy')
        self._dh_dq = sympy.lambdify(coords, dh_dq, 'numpy')

    def dh_dp(self, p, q):
        return np.array(self._dh_dp(*p, *q), dtype=float)

    def dh_dq(self, p, q):
        return np.array(self._dh_dq(*p, *q), dtype=float)

    def value(self, p, q):
        return float(np.real(self.energy(*p, *q)))

    # symmetric kick-drift-kick; exact split for H = T(p) + V(q)
    def strang(self, p, q, dt):
        p = p - 0.5 * dt * self.dh_dq(p, q)
        q = q + dt * self.dh_dp(p, q)
        p = p - 0.5 * dt * self.dh_dq(p, q)
        return p, q

    def midpoint(self, p, q, dt):
        n = len(p)

        def residual(z):
            pm, qm = 0.5 * (p + z[:n]), 0.5 * (q + z[n:])
            return np.concatenate([z[:n] - p + dt * self.dh_dq(pm, qm), z[n:] - q - dt * self.dh_dp(pm, qm)])

        guess = np.concatenate([p - dt * self.dh_dq(p, q), q + dt * self.dh_dp(p, q)])
        sol = root(residual, guess, method='hybr', tol=1e-14)
        if not sol.success:
            raise StepRejected('implicit midpoint stage did not converge: %s' % sol.message)
        return sol.x[:n], sol.x[n:]

    def integrator(self, order=DEFAULTS.integrator_order):
        """
        One-step map of even order, a symmetric triple-jump composition of the second-order base step
        """
        if order < 2 or order % 2:
            raise ValueError('integrator order must be even and at least 2')
        step = self.strang if self.separable else self.midpoint
        for k in range(1, order // 2):
            step = _triple_jump(step, k)
        return step


def _triple_jump(step, k):
    w1 = 1.0 / (2.0 - 2.0 ** (1.0 / (2 * k + 1)))
    w0 = 1.0 - 2.0 * w1

    def composed(p, q, dt):
        p, q = step(p, q, w1 * dt)
        p, q = step(p, q, w0 * dt)
        return step(p, q, w1 * dt)
    return composed


def reduced_evolve(h_cl, start, grid, coords=None, order=DEFAULTS.integrator_order):
    """
    Classical evolution q' = dH/dp, p' = -dH/dq of the lower symbol
    :param h_cl: sympy polynomial in the phase coordinates with every other symbol bound
    :param start: (p0, q0), sequences over the modes
    :param grid: TimeGrid
    :param coords: (optional), (ps, qs) symbol lists. By default p0.., q0.. of the pq set
    :param order: even integrator order
    :return: Trajectory with p, q, energy
    """
    p, q = (np.atleast_1d(np.asarray(x, dtype=float)) for x in start)
    if p.shape != q.shape:
        raise DimensionMismatch('start point has %d momenta and %d positions' % (len(p), len(q)))
    ps, qs = coords or phase_coordinates(len(p))
    flow = HamiltonFlow(h_cl, ps, qs)
    step = flow.integrator(order)
    out_p, out_q, energy = [p], [q], [flow.value(p, q)]
    for _ in range(grid.steps):
        p, q = step(p, q, grid.dt)
        out_p.append(p)
        out_q.append(q)
        energy.append(flow.value(p, q))
    traj = Trajectory(grid.times, p=np.array(out_p), q=np.array(out_q), energy=np.array(energy))
    logger.info('reduced evolution (%s, order %d): %d steps, energy drift %.3g',
                'splitting' if flow.separable else 'implicit midpoint', order, grid.steps, traj.energy_drift())
    return traj


def compare_trajectories(full, reduced):
    """
    Deviation |<Q>(t) - q(t)|, |<P>(t) - p(t)| between two trajectories on the same grid
    :return: DeviationReport
    """
    if len(full.times) != len(reduced.times) or not np.allclose(full.times, reduced.times, rtol=0, atol=1e-12):
        raise GridMismatch('trajectories are sampled on different time grids')
    if full.modes != reduced.modes:
        raise GridMismatch('trajectories have %d and %d modes' % (full.modes, reduced.modes))
    dq = np.abs(full.positions() - reduced.positions())
    dp = np.abs(full.momenta() - reduced.momenta())
    report = DeviationReport(np.asarray(full.times), dq, dp, full.to_dict(), reduced.to_dict())
    logger.info('trajectory deviation: max |dq| %.3g, max |dp| %.3g', report.max_dq, report.max_dp)
    return report


def evolve_model(nm, h_cl, start, grid, order=DEFAULTS.integrator_order, leakage=DEFAULTS.leakage):
    """
    Full and reduced evolution from the coherent state at a classical start point
    :param nm: NumericModel of the model
    :param h_cl: classical function with parameters and hbar bound
    :return: (full Trajectory, reduced Trajectory, DeviationReport)
    """
    p0, q0 = start
    psi0 = coherent_state(nm.space, nm.fiducial, p0, q0, nm.shifted_sets, leakage)
    modes = [(m.set_id, m.mode) for m in shifted_modes(nm.space, nm.shifted_sets)]
    full = schrodinger_evolve(nm.hamiltonian, psi0, grid, modes)
    coords = ([Generator.momentum(s, n).shift_symbol() for s, n in modes],
              [Generator.position(s, n).shift_symbol() for s, n in modes])
    reduced = reduced_evolve(h_cl, start, grid, coords, order)
    return full, reduced, compare_trajectories(full, reduced)
