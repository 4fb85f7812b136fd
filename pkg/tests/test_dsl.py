import glob
import os
from fractions import Fraction

import numpy as np
import pytest
import sympy

from EQLAB.classes.ModelSpec import ModelSpec, CheckedModel
from EQLAB.classes.OperatorExpr import OperatorExpr, Generator, NormalOrderedExpr, symbol
from EQLAB.classes.RotsymParams import RotsymParams
from EQLAB.errors import GramNotPositiveDefinite, ModelError, NonHermitianHamiltonian
from EQLAB.methods.dsl import (BinOp, Gen, Name, Neg, Num, Pow, Imag, parse_expression, parse_model, render_model,
                               validate, load_model, parse_operator)
from EQLAB.methods.rotsym import reducible_source
from tests.conftest import HARMONIC, MODELS, read_model


def diagnostics(text):
    result = parse_model(text)
    assert isinstance(result, list), 'expected diagnostics, got a model'
    assert result
    for d in result:
        assert d.in_bounds(text), d
    return result


def replace_line(text, prefix, line):
    return '\n'.join(line if row.startswith(prefix) else row for row in text.split('\n'))


class TestExpressions:
    @pytest.mark.parametrize('source, tree', [
        ('-Q[0]^2', Neg(Pow(Gen('Q', 0), Num(Fraction(2))))),
        ('1 + 2*Q[0]', BinOp('+', Num(Fraction(1)), BinOp('*', Num(Fraction(2)), Gen('Q', 0)))),
        ('Q[0]^2^3', Pow(Gen('Q', 0), Pow(Num(Fraction(2)), Num(Fraction(3))))),
        ('-2*P[1]', BinOp('*', Neg(Num(Fraction(2))), Gen('P', 1))),
        ('1 - x - i', BinOp('-', BinOp('-', Num(Fraction(1)), Name('x')), Imag())),
        ('(Q[0] + 3/4)*P[0]', BinOp('*', BinOp('+', Gen('Q', 0), Num(Fraction(3, 4))), Gen('P', 0))),
    ])
    def test_precedence(self, source, tree):
        assert parse_expression(source) == tree

    def test_deterministic(self):
        source = 'omega^2*Q[0]^2 - i*(Q[0]*P[0] - P[0]*Q[0])/1'
        assert parse_expression(source) == parse_expression(source)


class TestParseModel:
    def test_harmonic(self):
        spec = parse_model(HARMONIC)
        assert isinstance(spec, ModelSpec)
        assert spec.total_modes == 1
        assert spec.parameter_values == {'hbar': 1, 'omega': 1}
        assert spec.shifted_sets == ('pq',)

    def test_bytes_input(self):
        assert parse_model(HARMONIC.encode('utf-8')) == parse_model(HARMONIC)

    @pytest.mark.parametrize('path', sorted(glob.glob(os.path.join(MODELS, '*.eqm'))))
    def test_round_trip(self, path):
        with open(path, encoding='utf-8') as f:
            spec = parse_model(f.read())
        assert isinstance(spec, ModelSpec), spec
        assert parse_model(render_model(spec)) == spec

    def test_rotsym_file_matches_generated_source(self):
        generated = parse_model(reducible_source(RotsymParams(1, 1, '1/2', 1), truncation=24))
        assert parse_model(read_model('rotsym_n1.eqm')) == generated

    def test_regions_merge_per_frame(self):
        spec = parse_model(read_model('rotsym_n1.eqm'))
        assert spec.hamiltonian.frame_names() == ['zeta_frame']
        assert spec.hamiltonian.plain.is_zero()

    def test_unclosed_bracket(self):
        d = diagnostics(replace_line(HARMONIC, 'H =', 'H = Q[0'))
        assert len(d) == 1
        assert d[0].message == "expected ']'"
        assert (d[0].line, d[0].column) == (7, 8)

    def test_unknown_identifier(self):
        d = diagnostics(replace_line(HARMONIC, 'H =', 'H = x*Q[0]^2'))
        assert d[0].message == "unknown identifier 'x'"
        assert (d[0].line, d[0].column, d[0].length) == (7, 5, 1)

    def test_unknown_generator_letter(self):
        d = diagnostics(replace_line(HARMONIC, 'H =', 'H = S[0]^2'))
        assert "unknown identifier 'S'" in d[0].message

    def test_arity_mismatch(self):
        d = diagnostics(replace_line(HARMONIC, 'H =', 'H = Q[1]^2'))
        assert d[0].message.startswith('arity mismatch')

    def test_duplicate_declaration(self):
        d = diagnostics(HARMONIC.replace('param omega = 1', 'param omega = 1\nparam omega = 2'))
        assert d[0].message == "duplicate declaration of parameter 'omega'"
        assert d[0].line == 3

    def test_duplicate_points_at_name(self):
        d = diagnostics(HARMONIC.replace('param omega = 1', 'param omega = 1\nparam m = 1\nparam m = 2'))
        assert d[0].message == "duplicate declaration of parameter 'm'"
        assert (d[0].line, d[0].column, d[0].length) == (4, 7, 1)

    def test_duplicate_keyword_statement(self):
        d = diagnostics(HARMONIC.replace('shifted pq', 'shifted pq\n  shifted pq'))
        assert (d[0].line, d[0].column) == (7, 3)

    def test_reserved_name(self):
        d = diagnostics('param i = 1\n' + HARMONIC)
        assert "'i' is reserved" in d[0].message

    @pytest.mark.parametrize('value', ['-\t3', '- 3', '-\t3/4'])
    def test_whitespace_after_sign(self, value):
        spec = parse_model(HARMONIC.replace('param omega = 1', 'param omega = ' + value))
        assert isinstance(spec, ModelSpec)
        assert spec.parameter_values['omega'] == -sympy.Rational(value.strip('-\t '))

    def test_non_positive_hbar(self):
        with pytest.raises(ModelError):
            load_model(HARMONIC.replace('param hbar = 1', 'param hbar = 0'))
        with pytest.raises(ModelError):
            load_model(HARMONIC.replace('param hbar = 1', 'param hbar = -1'))

    def test_zero_denominator(self):
        d = diagnostics(HARMONIC.replace('param omega = 1', 'param omega = 1/0'))
        assert 'zero denominator' in d[0].message

    def test_missing_statements(self):
        messages = [d.message for d in diagnostics('param a = 1\n')]
        assert "missing Hamiltonian 'H = ...'" in messages
        assert "missing 'fiducial <frame>' statement" in messages

    def test_fiducial_arity(self):
        text = HARMONIC.replace('set pq 1', 'set pq 2')
        assert diagnostics(text)[0].message.startswith('arity mismatch')

    def test_frame_must_be_linear(self):
        d = diagnostics(replace_line(HARMONIC, 'frame', 'frame vac = Q[0]*P[0]'))
        assert d[0].message == 'frame definition must be a linear combination of generators'

    def test_region_product_rejected(self):
        d = diagnostics(replace_line(HARMONIC, 'H =', 'H = :[ Q[0] ]: @vac * :[ Q[0] ]: @vac'))
        assert d[0].message == 'a normal-ordered region can only be scaled or added'

    def test_unknown_frame(self):
        d = diagnostics(replace_line(HARMONIC, 'H =', 'H = :[ Q[0]^2 ]: @nowhere'))
        assert d[0].message == "unknown frame 'nowhere'"

    def test_exponent_cap(self):
        d = diagnostics(replace_line(HARMONIC, 'H =', 'H = Q[0]^99999999'))
        assert 'degree cap' in d[0].message

    def test_invalid_utf8(self):
        d = parse_model(HARMONIC.encode('utf-8') + b'\xff\n')
        assert d[0].message == 'input is not valid UTF-8'
        assert d[0].line == 8

    def test_parse_operator(self):
        spec = parse_model(HARMONIC)
        e = parse_operator('omega*Q[0]^2', spec)
        q = OperatorExpr.from_generator(Generator.position('pq', 0))
        assert e == (q * q).scale(symbol('omega'))
        assert isinstance(parse_operator('Q[0', spec), list)
        assert isinstance(parse_operator(':[ Q[0] ]: @vac', spec), list)


class TestValidate:
    def test_harmonic(self, harmonic):
        assert isinstance(harmonic, CheckedModel)
        assert harmonic.truncation == 64

    def test_rotsym_valid(self, rotsym_n1):
        assert isinstance(rotsym_n1.hamiltonian, NormalOrderedExpr)
        assert rotsym_n1.truncation == 24

    @pytest.mark.parametrize('zeta', ['1', '11/10'])
    def test_rotsym_gram_boundary(self, zeta):
        text = read_model('rotsym_n1.eqm').replace('param zeta = 1/2', 'param zeta = %s' % zeta)
        with pytest.raises(GramNotPositiveDefinite):
            load_model(text)

    def test_non_hermitian(self):
        with pytest.raises(NonHermitianHamiltonian):
            load_model(replace_line(HARMONIC, 'H =', 'H = Q[0]*P[0]'))

    def test_small_truncation(self):
        with pytest.raises(ModelError):
            load_model(HARMONIC + 'truncation 3\n')

    def test_load_model_carries_diagnostics(self):
        with pytest.raises(ModelError) as info:
            load_model('H = Q[0\n')
        assert info.value.diagnostics

    def test_symbolic_parameter_stays(self):
        spec = parse_model(HARMONIC.replace('param omega = 1', 'param omega'))
        model = validate(spec)
        assert symbol('omega') in model.hamiltonian.free_symbols()


def test_fuzz_mutations(fuzz_iterations):
    corpus = [HARMONIC.encode('utf-8'), read_model('quartic.eqm').encode('utf-8')]
    rng = np.random.default_rng(2024)
    alphabet = np.frombuffer(b'()[]:@*^+-/=#, \t\nQPRSipqrs0123456789\xc3\xff', dtype=np.uint8)
    for _ in range(fuzz_iterations):
        data = bytearray(corpus[int(rng.integers(len(corpus)))])
        for _ in range(int(rng.integers(1, 4))):
            k = int(rng.integers(len(data)))
            action = int(rng.integers(3))
            if action == 0:
                data[k] = int(rng.choice(alphabet))
            elif action == 1:
                del data[k]
            else:
                data.insert(k, int(rng.choice(alphabet)))
        result = parse_model(bytes(data))
        if isinstance(result, list):
            text = bytes(data).decode('utf-8', errors='replace')
            assert result
            for d in result:
                assert d.in_bounds(text), (bytes(data), d)
        else:
            assert isinstance(result, ModelSpec)
