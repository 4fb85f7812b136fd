import os

import pytest

from EQLAB.classes.OperatorExpr import OperatorExpr, Generator, symbol
from EQLAB.methods.dsl import load_model

MODELS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'models')

HARMONIC = '''\
param hbar = 1
param omega = 1
set pq 1
frame vac = omega*Q[0] + i*P[0]
fiducial vac
shifted pq
H = 1/2*(P[0]^2 + omega^2*Q[0]^2)
'''


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long convergence and acceptance runs (deselect with -m "not slow")')


def model_path(name):
    return os.path.join(MODELS, name)


def read_model(name):
    with open(model_path(name), encoding='utf-8') as f:
        return f.read()


@pytest.fixture(scope='session')
def fuzz_iterations(request):
    value = os.environ.get('EQLAB_FUZZ_ITERATIONS')
    if value:
        return int(value)
    marker = request.config.getoption('-m', default='') or ''
    return 100000 if 'slow' in marker and 'not slow' not in marker else 2000


@pytest.fixture
def Q():
    return OperatorExpr.from_generator(Generator.position('pq', 0))


@pytest.fixture
def P():
    return OperatorExpr.from_generator(Generator.momentum('pq', 0))


@pytest.fixture(scope='session')
def hbar():
    return symbol('hbar')


@pytest.fixture(scope='session')
def harmonic():
    return load_model(HARMONIC)


@pytest.fixture(scope='session')
def quartic():
    return load_model(read_model('quartic.eqm'))


@pytest.fixture(scope='session')
def rotsym_n1():
    return load_model(read_model('rotsym_n1.eqm'))
