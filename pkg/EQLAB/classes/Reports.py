import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

SCHEMA_VERSION = 1


def atomic_write(filename, text):
    """
    Write text to filename through a temporary file in the same directory and a rename
    """
    directory = os.path.dirname(os.path.abspath(filename))
    fd, tmp = tempfile.mkstemp(prefix='.eqlab-', dir=directory)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(tmp, filename)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def to_json(payload):
    return json.dumps(payload, indent=2, sort_keys=True) + '\n'


def write_rows(rows, headers, separator=','):
    """
    CSV text with one header line
    :param rows: iterable of sequences
    :return: str
    """
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=separator, lineterminator='\n')
    writer.writerow(list(headers))
    for row in rows:
        writer.writerow([_cell(x) for x in row])
    return buf.getvalue()


def _cell(x):
    if isinstance(x, float):
        return repr(x)
    return x


class Report:
    """
    Common serialization: subclasses provide to_dict(), headers() and rows()
    """

    def to_json(self):
        return to_json(self.to_dict())

    def to_csv(self, separator=','):
        return write_rows(self.rows(), self.headers(), separator)

    def write(self, filename, fmt='json'):
        if fmt not in ('json', 'csv'):
            raise ValueError('unknown format %r' % fmt)
        atomic_write(filename, self.to_json() if fmt == 'json' else self.to_csv())

    def render(self, fmt='json'):
        return self.to_json() if fmt == 'json' else self.to_csv()


@dataclass(frozen=True)
class WcpPoint:
    p: tuple
    q: tuple
    numeric: float = None  # None when the point was flagged
    symbolic: float = None
    leakage: float = 0.0
    flagged: bool = False
    imaginary: float = 0.0  # imaginary part of the numeric expectation

    @property
    def abs_dev(self):
        if self.numeric is None:
            return None
        return abs(self.numeric - self.symbolic)

    @property
    def rel_dev(self):
        if self.numeric is None:
            return None
        return self.abs_dev / max(abs(self.symbolic), 1.0)

    def to_dict(self):
        return dict(p=list(self.p), q=list(self.q), H_num=self.numeric, H_sym=self.symbolic,
                    abs_dev=self.abs_dev, rel_dev=self.rel_dev, leakage=self.leakage, flagged=self.flagged,
                    imag=self.imaginary)


@dataclass(frozen=True)
class WcpReport(Report):
    model: str
    truncation: int
    hbar: float
    symbolic: str  # rendered classical function H(p,q)
    points: tuple = ()

    @property
    def max_abs_dev(self):
        devs = [pt.abs_dev for pt in self.points if pt.abs_dev is not None]
        return max(devs) if devs else None

    @property
    def flagged(self):
        return [pt for pt in self.points if pt.flagged]

    def to_dict(self):
        return dict(schema='wcp', version=SCHEMA_VERSION, model=self.model, truncation=self.truncation,
                    hbar=self.hbar, symbolic=self.symbolic, max_abs_dev=self.max_abs_dev,
                    points=[pt.to_dict() for pt in self.points])

    def headers(self):
        return _point_headers(self.points)

    def rows(self):
        return _point_rows(self.points)


@dataclass(frozen=True, eq=False)
class MetricTensor(Report):
    """
    Coherent-state metric in coordinate order (p_1..p_N, q_1..q_N)
    """
    matrix: np.ndarray = field(repr=False)
    step: float
    point: tuple = ()
    error: float = 0.0  # Richardson halving estimate
    symmetry_defect: float = 0.0

    def is_positive_definite(self):
        return bool(np.all(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.T)) > 0))

    def to_dict(self):
        return dict(schema='metric', version=SCHEMA_VERSION, step=self.step, point=list(self.point),
                    matrix=[[float(x) for x in row] for row in self.matrix], error=self.error,
                    symmetry_defect=self.symmetry_defect)

    def headers(self):
        n = self.matrix.shape[0] // 2
        return ['p%d' % k for k in range(n)] + ['q%d' % k for k in range(n)]

    def rows(self):
        for row in self.matrix:
            yield [float(x) for x in row]


@dataclass(frozen=True)
class MatchReport(Report):
    """
    Result of comparing the lower symbol of the reducible model with the classical target
    """
    exact_match: bool
    classical_rendered: str
    wcp_rendered: str
    m0sq: str
    lambda0: str
    params: dict = field(default_factory=dict)
    numeric_points: tuple = ()  # WcpPoint
    truncation: int = None

    @property
    def max_abs_dev(self):
        devs = [pt.abs_dev for pt in self.numeric_points if pt.abs_dev is not None]
        return max(devs) if devs else None

    def to_dict(self):
        return dict(schema='rotsym-match', version=SCHEMA_VERSION, exact_match=self.exact_match,
                    classical_rendered=self.classical_rendered, wcp_rendered=self.wcp_rendered,
                    m0sq=self.m0sq, lambda0=self.lambda0, params=dict(self.params),
                    numeric_points=[pt.to_dict() for pt in self.numeric_points],
                    max_abs_dev=self.max_abs_dev, truncation=self.truncation)

    def headers(self):
        return _point_headers(self.numeric_points)

    def rows(self):
        return _point_rows(self.numeric_points)


def _point_headers(points):
    n = len(points[0].p) if points else 0
    return ['p%d' % k for k in range(n)] + ['q%d' % k for k in range(n)] + ['H_num', 'H_sym', 'abs_dev']


def _point_rows(points):
    for pt in points:
        yield list(pt.p) + list(pt.q) + [pt.numeric, pt.symbolic, pt.abs_dev]
