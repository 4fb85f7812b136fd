from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from EQLAB.errors import DimensionMismatch, UnknownGeneratorError


@dataclass(frozen=True)
class FockMode:
    set_id: str
    mode: int
    dimension: int
    omega_rep: float = 1.0

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError('truncation dimension must be positive')
        if self.omega_rep <= 0:
            raise ValueError('representation frequency must be positive')


class FockSpace:
    """
    Truncated multimode Fock space. Basis states are enumerated row-major over the mode occupations
    in the order the modes are given (the first mode varies slowest, matching kron(first, second, ...)).
    """

    def __init__(self, modes, hbar=1.0):
        self.modes = tuple(modes)
        if not self.modes:
            raise ValueError('a Fock space needs at least one mode')
        keys = [(m.set_id, m.mode) for m in self.modes]
        if len(set(keys)) != len(keys):
            raise ValueError('duplicate mode in Fock space')
        self.hbar = float(hbar)
        self._index = dict((k, i) for i, k in enumerate(keys))

    @classmethod
    def uniform(cls, keys, dimension, omega_rep=1.0, hbar=1.0):
        """
        :param keys: list of (set_id, mode)
        :param dimension: per-mode D
        """
        return cls([FockMode(s, n, dimension, omega_rep) for s, n in keys], hbar)

    @property
    def dims(self):
        return tuple(m.dimension for m in self.modes)

    @property
    def dimension(self):
        return reduce(lambda a, b: a * b, self.dims, 1)

    def index_of(self, set_id, mode):
        try:
            return self._index[(set_id, mode)]
        except KeyError:
            raise UnknownGeneratorError('mode %s[%d] is not part of the Fock space' % (set_id, mode)) from None

    def has_mode(self, set_id, mode):
        return (set_id, mode) in self._index

    def occupations(self, index):
        return tuple(int(n) for n in np.unravel_index(index, self.dims))

    def basis_index(self, occupations):
        return int(np.ravel_multi_index(tuple(occupations), self.dims))

    def basis_state(self, occupations=None):
        v = np.zeros(self.dimension, dtype=complex)
        v[self.basis_index(occupations or (0,) * len(self.modes))] = 1.0
        return StateVector(self, v, normalized=True)

    def edge_population(self, amplitudes, layers=2):
        """
        Probability carried by the top `layers` occupation levels of any mode (truncation leakage)
        """
        probs = np.abs(np.asarray(amplitudes).reshape(self.dims)) ** 2
        worst = 0.0
        for axis, d in enumerate(self.dims):
            top = np.take(probs, range(max(0, d - layers), d), axis=axis).sum()
            worst = max(worst, float(top))
        return worst

    def __eq__(self, other):
        return isinstance(other, FockSpace) and self.modes == other.modes and self.hbar == other.hbar

    def __hash__(self):
        return hash((self.modes, self.hbar))

    def __repr__(self):
        return 'FockSpace(%s, hbar=%g)' % (', '.join('%s[%d]:D=%d' % (m.set_id, m.mode, m.dimension)
                                                     for m in self.modes), self.hbar)


@dataclass(frozen=True)
class MatrixOp:
    space: FockSpace
    matrix: object  # scipy.sparse csr matrix
    hermitian: bool = False
    provenance: object = None

    def __post_init__(self):
        n = self.space.dimension
        if self.matrix.shape != (n, n):
            raise DimensionMismatch('matrix shape %s does not fit dimension %d' % (self.matrix.shape, n))

    def apply(self, state):
        if state.space.dimension != self.space.dimension:
            raise DimensionMismatch('state dimension %d, operator dimension %d'
                                    % (state.space.dimension, self.space.dimension))
        return self.matrix @ state.amplitudes

    def hermiticity_defect(self):
        diff = self.matrix - self.matrix.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0


@dataclass(frozen=True)
class StateVector:
    space: FockSpace
    amplitudes: np.ndarray = field(repr=False)
    normalized: bool = False

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != (self.space.dimension,):
            raise DimensionMismatch('state has %d amplitudes, space dimension is %d'
                                    % (a.size, self.space.dimension))
        a.setflags(write=False)
        object.__setattr__(self, 'amplitudes', a)
        if self.normalized and abs(self.norm() - 1.0) > 1e-12:
            raise ValueError('state tagged normalized has norm %.16g' % self.norm())

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self):
        return StateVector(self.space, self.amplitudes / self.norm(), normalized=True)

    def inner(self, other):
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def with_phase(self, phase):
        return StateVector(self.space, self.amplitudes * np.exp(1j * phase), self.normalized)
