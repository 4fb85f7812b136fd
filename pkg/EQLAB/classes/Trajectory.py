from dataclasses import dataclass, field

import numpy as np

from EQLAB.classes.Reports import Report, SCHEMA_VERSION


@dataclass(frozen=True)
class TimeGrid:
    """
    Uniform grid t_k = k dt, k = 0..round(horizon/dt)
    """
    dt: float
    horizon: float

    def __post_init__(self):
        if self.dt <= 0 or self.horizon <= 0:
            raise ValueError('time step and horizon must be positive')

    @property
    def steps(self):
        return int(round(self.horizon / self.dt))

    @property
    def times(self):
        return self.dt * np.arange(self.steps + 1)


@dataclass(frozen=True, eq=False)
class Trajectory(Report):
    """
    Sampled trajectory. Classical runs fill p/q, quantum runs fill q_exp/p_exp and norm; both log energy.
    Arrays are (samples, modes).
    """
    times: np.ndarray = field(repr=False)
    p: np.ndarray = field(default=None, repr=False)
    q: np.ndarray = field(default=None, repr=False)
    q_exp: np.ndarray = field(default=None, repr=False)
    p_exp: np.ndarray = field(default=None, repr=False)
    norm: np.ndarray = field(default=None, repr=False)
    energy: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        t = np.asarray(self.times)
        if t.ndim != 1 or np.any(np.diff(t) <= 0):
            raise ValueError('time samples must be strictly increasing')
        for name in ('p', 'q', 'q_exp', 'p_exp', 'norm', 'energy'):
            value = getattr(self, name)
            if value is not None and len(value) != len(t):
                raise ValueError('%s has %d samples, time grid has %d' % (name, len(value), len(t)))

    @property
    def is_quantum(self):
        return self.q_exp is not None

    @property
    def modes(self):
        ref = self.q_exp if self.is_quantum else self.q
        return ref.shape[1]

    def positions(self):
        return self.q_exp if self.is_quantum else self.q

    def momenta(self):
        return self.p_exp if self.is_quantum else self.p

    def energy_drift(self):
        """
        max |E(t) - E(0)| / max(|E(0)|, 1)
        """
        e = np.asarray(self.energy)
        return float(np.max(np.abs(e - e[0])) / max(abs(e[0]), 1.0))

    def norm_drift(self):
        if self.norm is None:
            return 0.0
        return float(np.max(np.abs(np.asarray(self.norm) - 1.0)))

    def headers(self):
        n = self.modes
        return (['t'] + ['p%d' % k for k in range(n)] + ['q%d' % k for k in range(n)]
                + ['Qexp%d' % k for k in range(n)] + ['Pexp%d' % k for k in range(n)] + ['norm', 'energy'])

    def rows(self):
        n = self.modes
        blank = [''] * n
        for k, t in enumerate(self.times):
            row = [float(t)]
            for arr in (self.p, self.q, self.q_exp, self.p_exp):
                row += blank if arr is None else [float(x) for x in arr[k]]
            row.append('' if self.norm is None else float(self.norm[k]))
            row.append('' if self.energy is None else float(self.energy[k]))
            yield row

    def to_dict(self):
        return dict(schema='trajectory', version=SCHEMA_VERSION, samples=len(self.times),
                    dt=float(self.times[1] - self.times[0]) if len(self.times) > 1 else None,
                    horizon=float(self.times[-1]), quantum=self.is_quantum,
                    energy_drift=self.energy_drift(), norm_drift=self.norm_drift())


@dataclass(frozen=True, eq=False)
class DeviationReport(Report):
    """
    Per-time deviation between a full (quantum) and a reduced (classical) trajectory
    """
    times: np.ndarray = field(repr=False)
    dq: np.ndarray = field(repr=False)
    dp: np.ndarray = field(repr=False)
    full_summary: dict = field(default_factory=dict)
    reduced_summary: dict = field(default_factory=dict)

    @property
    def max_dq(self):
        return float(np.max(self.dq)) if self.dq.size else 0.0

    @property
    def max_dp(self):
        return float(np.max(self.dp)) if self.dp.size else 0.0

    @property
    def rms_dq(self):
        return float(np.sqrt(np.mean(self.dq ** 2))) if self.dq.size else 0.0

    @property
    def rms_dp(self):
        return float(np.sqrt(np.mean(self.dp ** 2))) if self.dp.size else 0.0

    def to_dict(self):
        return dict(schema='deviation', version=SCHEMA_VERSION, max_dq=self.max_dq, max_dp=self.max_dp,
                    rms_dq=self.rms_dq, rms_dp=self.rms_dp, full=dict(self.full_summary),
                    reduced=dict(self.reduced_summary))

    def headers(self):
        n = self.dq.shape[1]
        return ['t'] + ['dq%d' % k for k in range(n)] + ['dp%d' % k for k in range(n)]

    def rows(self):
        for k, t in enumerate(self.times):
            yield [float(t)] + [float(x) for x in self.dq[k]] + [float(x) for x in self.dp[k]]