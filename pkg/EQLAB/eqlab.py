import os

from EQLAB.classes.ModelSpec import CheckedModel
from EQLAB.classes.RotsymParams import RotsymParams
from EQLAB.classes.Trajectory import TimeGrid
from EQLAB.config import DEFAULTS
import EQLAB.methods.correspondence as cr
import EQLAB.methods.dynamics as dy
import EQLAB.methods.dsl as dsl
import EQLAB.methods.rotsym as rs


def model(source, settings=DEFAULTS):
    """
    Checked model from a CheckedModel, a path to an .eqm file or .eqm text
    """
    if isinstance(source, CheckedModel):
        return source
    if isinstance(source, str) and '\n' not in source and os.path.isfile(source):
        with open(source, 'rb') as f:
            source = f.read()
    return dsl.load_model(source, settings)


def wcp(source, points=None, truncation=None, hbar=None, settings=DEFAULTS, data=False):
    """
    Weak correspondence: classical function H(p,q) and its numeric check
    :param source: (CheckedModel/str), model or .eqm path/text
    :param points: (list, optional), phase points (p, q). By default a 3-point grid per coordinate over [-1, 1]
    :param truncation: (int, optional), per-mode Fock truncation. By default the model's
    :param hbar: (float, optional), numeric hbar when the model leaves it symbolic
    :param data: (bool): if False only the symbolic H(p,q) is returned, otherwise (H(p,q), WcpReport).
                         By default data = false.
    :return:
            h (sympy expression): lower symbol with parameters bound
            report (WcpReport) - per-point numeric comparison
    """
    m = model(source, settings)
    h = cr.classical_function(m, hbar, settings)
    if not data:
        return h
    if points is None:
        points = cr.grid(1.0, 3, len(cr.shifted_mode_keys(m)))
    return h, cr.wcp_numeric(m, points, settings, truncation, hbar)


def metric(source, p=0.0, q=0.0, step=None, truncation=None, hbar=None, settings=DEFAULTS, data=False):
    """
    Coherent-state metric of a model at a phase point
    :param data: (bool): if False the matrix is returned, otherwise (matrix, MetricTensor). By default data = false.
    :return:
            matrix (ndarray): 2N x 2N metric in order (p_1..p_N, q_1..q_N)
            tensor (MetricTensor) - matrix with step and error estimate
    """
    m = model(source, settings)
    nm = cr.numeric_model(m, settings, truncation, hbar)
    tensor = cr.fubini_study_metric(nm.space, nm.fiducial, p, q, step or settings.fd_step, nm.shifted_sets,
                                    settings.leakage)
    if data:
        return tensor.matrix, tensor
    return tensor.matrix


def evolve(source, start, dt=None, horizon=None, truncation=None, hbar=None, settings=DEFAULTS, data=False):
    """
    Full quantum against reduced classical evolution from the coherent state at `start`
    :param start: (p0, q0)
    :param data: (bool): if False the deviation report is returned, otherwise (report, (full, reduced)).
                         By default data = false.
    :return:
            report (DeviationReport): per-time deviation and summary
            trajectories (tuple of Trajectory) - full and reduced runs
    """
    m = model(source, settings)
    nm = cr.numeric_model(m, settings, truncation, hbar)
    h_cl = cr.classical_function(m, hbar, settings)
    grid = TimeGrid(dt or settings.dt, horizon or settings.horizon)
    full, reduced, report = dy.evolve_model(nm, h_cl, start, grid, settings.integrator_order, settings.leakage)
    if data:
        return report, (full, reduced)
    return report


def match(N=1, m=1, zeta='1/2', v=1, numeric=None, truncation=None, settings=DEFAULTS, data=False):
    """
    Reducible rotationally symmetric model against its classical target
    :param data: (bool): if False only the exact-match flag is returned, otherwise (flag, MatchReport).
                         By default data = false.
    :return:
            exact (bool): lower symbol equals the classical Hamiltonian at the effective parameters
            report (MatchReport) - rendered polynomials, effective parameters and numeric residuals
    """
    report = rs.verify_match(RotsymParams(N, m, zeta, v), numeric, None, truncation, settings)
    if data:
        return report.exact_match, report
    return report.exact_match
