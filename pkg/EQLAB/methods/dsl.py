"""
The .eqm model language

One statement per line, '#' starts a comment:

    param hbar                 # symbolic
    param omega = 1            # exact rational value
    set pq 1                   # canonical set {P[n], Q[n]}, n < 1
    frame vac = omega*Q[0] + i*P[0]
    fiducial vac
    shifted pq
    truncation 64
    H = 1/2*(P[0]^2 + omega^2*Q[0]^2)

The grammar (EBNF) is published in docs/grammar.md.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction

import pyparsing as pp
import sympy

from EQLAB.classes.FiducialFrame import FiducialFrame
from EQLAB.classes.ModelSpec import ParseDiagnostic, HamiltonianExpr, ModelSpec, CheckedModel
from EQLAB.classes.OperatorExpr import (OperatorExpr, Generator, HBAR, I, MAX_DEGREE, POSITION, MOMENTUM, symbol,
                                        render_expr, render_scalar)
from EQLAB.config import DEFAULTS
from EQLAB.errors import (DegreeError, ModelError, NonHermitianHamiltonian, FrameSpanError,
                          DependentFiducialConditions)
from EQLAB.methods.ordering import hermitian_check, normal_symbol

logger = logging.getLogger(__name__)
pp.ParserElement.enable_packrat()

KEYWORDS = frozenset(['param', 'set', 'frame', 'fiducial', 'shifted', 'truncation', 'H', 'i', 'hbar'])


# AST; spans are (start, end) character offsets within the statement line
@dataclass(frozen=True)
class Num:
    value: Fraction
    start: int = field(default=0, compare=False)
    end: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Imag:
    start: int = field(default=0, compare=False)
    end: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Name:
    name: str
    start: int = field(default=0, compare=False)
    end: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Gen:
    letter: str
    mode: int
    start: int = field(default=0, compare=False)
    end: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: object
    start: int = field(default=0, compare=False)
    end: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    start: int = field(default=0, compare=False)
    end: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: object
    start: int = field(default=0, compare=False)
    end: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Ordered:
    body: object
    frame: str
    start: int = field(default=0, compare=False)
    end: int = field(default=0, compare=False)
    frame_start: int = field(default=0, compare=False)


# grammar
LBRACK, RBRACK, EQ, AT = map(pp.Suppress, '[]=@')
OPEN_ORDERED, CLOSE_ORDERED = pp.Suppress(':['), pp.Suppress(']:')
PARAM, SET, FRAME, FIDUCIAL, SHIFTED, TRUNCATION = pp.Keyword.using_each(
    'param set frame fiducial shifted truncation'.split())
HSTMT = pp.Keyword('H')

identifier = pp.Word(pp.alphas + '_', pp.alphanums + '_').set_name('identifier')
integer = pp.Word(pp.nums).set_name('integer')
rational = pp.Regex(r'\d+(?:/\d+)?').set_name('rational')
signed_rational = pp.Regex(r'-?\s*\d+(?:/\d+)?').set_name('rational')


def _nonzero_denominator(s, loc, toks):
    if '/' in toks[0] and int(toks[0].split('/')[1]) == 0:
        raise pp.ParseFatalException(s, loc, "zero denominator in '%s'" % toks[0])


signed_rational.add_parse_action(_nonzero_denominator)


def _num(s, loc, toks):
    try:
        return Num(Fraction(toks[0]), loc, loc + len(toks[0]))
    except ZeroDivisionError:
        raise pp.ParseFatalException(s, loc, "zero denominator in '%s'" % toks[0]) from None


def _imag(s, loc, toks):
    return Imag(loc, loc + 1)


def _name(s, loc, toks):
    return Name(toks[0], loc, loc + len(toks[0]))


def _gen(s, loc, toks):
    end = s.index(']', loc) + 1
    return Gen(toks[0], int(toks[1]), loc, end)


def _ordered(s, loc, toks):
    body, frame = toks[0], toks[1]
    frame_start = s.index('@', body.end) + 1
    frame_start = frame_start + len(s[frame_start:]) - len(s[frame_start:].lstrip())
    return Ordered(body, frame, loc, frame_start + len(frame), frame_start)


def _unary(s, loc, toks):
    ops = toks[0]
    operand = ops[-1]
    node = operand
    for _ in ops[:-1]:
        node = Neg(node, loc, operand.end)
    return node


def _left(s, loc, toks):
    items = toks[0]
    node = items[0]
    for k in range(1, len(items), 2):
        right = items[k + 1]
        node = BinOp(items[k], node, right, node.start, right.end)
    return node


def _right_pow(s, loc, toks):
    items = toks[0]
    node = items[-1]
    for k in range(len(items) - 3, -1, -2):
        base = items[k]
        node = Pow(base, node, base.start, node.end)
    return node


expression = pp.Forward().set_name('expression')
generator = (pp.Regex(r'[A-Z](?=\s*\[)') + LBRACK - (integer + RBRACK)).set_name('generator')
generator.set_parse_action(_gen)
imaginary = pp.Keyword('i').set_parse_action(_imag)
number = rational.copy().set_parse_action(_num)
ordered = (OPEN_ORDERED - expression + CLOSE_ORDERED + AT + identifier).set_name('normal-ordered region')
ordered.set_parse_action(_ordered)
name = identifier.copy().set_parse_action(_name)
operand = (ordered | generator | number | imaginary | name).set_name('operand')

expression <<= pp.infix_notation(operand, [
    (pp.Literal('^'), 2, pp.OpAssoc.RIGHT, _right_pow),
    (pp.Literal('-'), 1, pp.OpAssoc.RIGHT, _unary),
    (pp.Literal('*'), 2, pp.OpAssoc.LEFT, _left),
    (pp.one_of('+ -'), 2, pp.OpAssoc.LEFT, _left),
])

param_stmt = PARAM - identifier + pp.Opt(EQ - signed_rational)
set_stmt = SET - identifier + integer
frame_stmt = FRAME - identifier + EQ + pp.Group(pp.DelimitedList(expression))
fiducial_stmt = FIDUCIAL - identifier
shifted_stmt = SHIFTED - pp.Group(pp.DelimitedList(identifier))
truncation_stmt = TRUNCATION - integer
hamiltonian_stmt = HSTMT + EQ - expression
statement = (param_stmt | set_stmt | frame_stmt | fiducial_stmt | shifted_stmt | truncation_stmt
             | hamiltonian_stmt) + pp.StringEnd()
statement.ignore(pp.python_style_comment)
statement.parse_with_tabs()
expression_only = (expression + pp.StringEnd()).parse_with_tabs()


class _Diagnostics(list):
    def error(self, line, start, end, message, expected=None):
        self.append(ParseDiagnostic('error', line, start + 1, max(0, end - start), message, expected))


def _syntax_diagnostic(exc, line_no, text):
    msg = exc.msg[:1].lower() + exc.msg[1:] if exc.msg else 'syntax error'
    col = min(max(1, exc.col), len(text) + 1)
    length = 1 if col <= len(text) else 0
    expected = msg[len('expected '):] if msg.startswith('expected ') else None
    return ParseDiagnostic('error', line_no, col, length, msg, expected)


def parse_expression(text):
    """
    Parse a single expression into its AST (used for golden-AST checks and the cli)
    :raise pp.ParseBaseException: on syntax errors
    """
    return expression_only.parse_string(text, parse_all=True)[0]


# A partially evaluated expression: plain polynomial plus normal-ordered regions per frame
@dataclass
class _Piece:
    plain: OperatorExpr
    regions: dict

    def is_scalar(self):
        return not self.regions and self.plain.is_scalar()

    def __add__(self, other):
        regions = dict(self.regions)
        for k, v in other.regions.items():
            regions[k] = regions[k] + v if k in regions else v
        return _Piece(self.plain + other.plain, regions)

    def scale(self, value):
        return _Piece(self.plain.scale(value), dict((k, v.scale(value)) for k, v in self.regions.items()))


class _Evaluator:
    def __init__(self, line_no, diagnostics, params, letters, frames):
        self.line_no = line_no
        self.diagnostics = diagnostics
        self.params = params
        self.letters = letters  # letter -> (set_id, kind, count)
        self.frames = frames

    def fail(self, node, message):
        self.diagnostics.error(self.line_no, node.start, node.end, message)
        return None

    def eval(self, node):
        method = getattr(self, '_' + type(node).__name__.lower())
        return method(node)

    def _num(self, node):
        return _Piece(OperatorExpr.from_scalar(node.value), {})

    def _imag(self, node):
        return _Piece(OperatorExpr.from_scalar(I), {})

    def _name(self, node):
        if node.name == 'hbar':
            return _Piece(OperatorExpr.from_scalar(HBAR), {})
        if node.name not in self.params:
            return self.fail(node, "unknown identifier '%s'" % node.name)
        return _Piece(OperatorExpr.from_scalar(symbol(node.name)), {})

    def _gen(self, node):
        if node.letter not in self.letters:
            return self.fail(node, "unknown identifier '%s'" % node.letter)
        set_id, kind, count = self.letters[node.letter]
        if node.mode >= count:
            return self.fail(node, "arity mismatch: set '%s' has %d mode(s), %s[%d] is out of range"
                             % (set_id, count, node.letter, node.mode))
        return _Piece(OperatorExpr.from_generator(Generator(set_id, node.mode, kind)), {})

    def _neg(self, node):
        inner = self.eval(node.operand)
        return None if inner is None else inner.scale(-1)

    def _binop(self, node):
        left, right = self.eval(node.left), self.eval(node.right)
        if left is None or right is None:
            return None
        if node.op == '+':
            return left + right
        if node.op == '-':
            return left + right.scale(-1)
        try:
            if left.is_scalar():
                return right.scale(left.plain.scalar_part())
            if right.is_scalar():
                return left.scale(right.plain.scalar_part())
            if left.regions or right.regions:
                return self.fail(node, 'a normal-ordered region can only be scaled or added')
            return _Piece(left.plain * right.plain, {})
        except DegreeError as exc:
            return self.fail(node, str(exc))

    def _pow(self, node):
        base = self.eval(node.base)
        exp = node.exponent
        if not isinstance(exp, Num) or exp.value.denominator != 1:
            return self.fail(exp, 'exponent must be a non-negative integer')
        if exp.value > MAX_DEGREE:
            return self.fail(exp, 'exponent %s exceeds the degree cap of %d' % (exp.value, MAX_DEGREE))
        if base is None:
            return None
        if base.regions:
            return self.fail(node, 'a normal-ordered region can only be scaled or added')
        try:
            return _Piece(base.plain ** int(exp.value), {})
        except DegreeError as exc:
            return self.fail(node, str(exc))

    def _ordered(self, node):
        if node.frame not in self.frames:
            self.diagnostics.error(self.line_no, node.frame_start, node.end, "unknown frame '%s'" % node.frame)
            return None
        body = self.eval(node.body)
        if body is None:
            return None
        if body.regions:
            return self.fail(node, 'normal-ordered regions cannot be nested')
        return _Piece(OperatorExpr.zero(), {node.frame: body.plain})


def _letters(sets, diagnostics=None):
    """
    Generator letter -> (set_id, kind, mode count); the second letter of a set id is the position
    """
    letters = dict()
    for set_id, count in sets:
        for letter, kind in ((set_id[1].upper(), POSITION), (set_id[0].upper(), MOMENTUM)):
            if letter in letters and diagnostics is not None:
                diagnostics.error(1, 0, 0, "generator letter '%s' used by two sets" % letter)
            letters[letter] = (set_id, kind, count)
    return letters


def _lines(text):
    for k, line in enumerate(text.split('\n')):
        stripped = line.split('#', 1)[0].strip()
        if stripped:
            yield k + 1, line


def parse_model(text):
    """
    Parse .eqm source into a ModelSpec
    :param text: (str or bytes) UTF-8 source
    :return: ModelSpec on success, otherwise a non-empty list of ParseDiagnostic
    """
    diagnostics = _Diagnostics()
    if isinstance(text, bytes):
        try:
            text = text.decode('utf-8')
        except UnicodeDecodeError as exc:
            before = text[:exc.start].decode('utf-8', errors='replace').split('\n')
            diagnostics.append(ParseDiagnostic('error', len(before), len(before[-1]) + 1, 0,
                                               'input is not valid UTF-8'))
            return diagnostics
    statements = []
    for line_no, line in _lines(text):
        try:
            statements.append((line_no, line, statement.parse_string(line, parse_all=True)))
        except pp.ParseBaseException as exc:
            diagnostics.append(_syntax_diagnostic(exc, line_no, line))
        except RecursionError:
            diagnostics.error(line_no, 0, len(line), 'expression nested too deeply')
    if diagnostics:
        return diagnostics

    params, sets, frame_src = dict(), dict(), dict()
    fiducial = shifted = truncation = hamiltonian = None

    def duplicate(line_no, line, what, key):
        # the declared name follows the keyword; keyword-only statements point at the keyword
        head_start = len(line) - len(line.lstrip())
        head_end = head_start + len(line.split(None, 1)[0])
        if line[head_start:head_end] == key:
            start = head_start
        else:
            start = line.find(key, head_end)
            start = head_start if start < 0 else start
        diagnostics.error(line_no, start, start + len(key), "duplicate declaration of %s '%s'" % (what, key))

    for line_no, line, toks in statements:
        head = toks[0]
        if head == 'param':
            name = toks[1]
            if name in KEYWORDS and name != 'hbar':
                diagnostics.error(line_no, line.index(name, 5), line.index(name, 5) + len(name),
                                  "'%s' is reserved" % name)
            elif name in params:
                duplicate(line_no, line, 'parameter', name)
            else:
                params[name] = sympy.Rational(''.join(toks[2].split())) if len(toks) > 2 else None
        elif head == 'set':
            set_id, count = toks[1], int(toks[2])
            start = line.index(set_id, 3)
            if len(set_id) != 2 or not set_id.isalpha() or not set_id.islower() or set_id[0] == set_id[1]:
                diagnostics.error(line_no, start, start + len(set_id),
                                  "set id must be two distinct lower-case letters, got '%s'" % set_id)
            elif set_id in sets:
                duplicate(line_no, line, 'set', set_id)
            elif count < 1:
                diagnostics.error(line_no, start, len(line), 'a set needs at least one mode')
            else:
                sets[set_id] = count
        elif head == 'frame':
            if toks[1] in frame_src:
                duplicate(line_no, line, 'frame', toks[1])
            else:
                frame_src[toks[1]] = (line_no, list(toks[2]))
        elif head == 'fiducial':
            if fiducial is not None:
                duplicate(line_no, line, 'fiducial', toks[1])
            else:
                fiducial = (line_no, line, toks[1])
        elif head == 'shifted':
            if shifted is not None:
                duplicate(line_no, line, 'shifted', 'shifted')
            else:
                shifted = (line_no, line, list(toks[1]))
        elif head == 'truncation':
            if truncation is not None:
                duplicate(line_no, line, 'truncation', 'truncation')
            else:
                truncation = int(toks[1])
        else:
            if hamiltonian is not None:
                duplicate(line_no, line, 'Hamiltonian', 'H')
            else:
                hamiltonian = (line_no, toks[1])

    letters = _letters(sets.items(), diagnostics)

    frames = dict()
    for fname, (line_no, nodes) in frame_src.items():
        ev = _Evaluator(line_no, diagnostics, params, letters, {})
        defs = []
        for node in nodes:
            piece = ev.eval(node)
            if piece is None:
                continue
            if piece.regions or any(len(w) != 1 for w in piece.plain.terms) or piece.plain.is_zero():
                diagnostics.error(line_no, node.start, node.end,
                                  'frame definition must be a linear combination of generators')
                continue
            defs.append(piece.plain)
        frames[fname] = tuple(defs)

    if fiducial is not None:
        line_no, line, fname = fiducial
        start = line.index(fname, line.index('fiducial') + 8)
        if fname not in frames:
            diagnostics.error(line_no, start, start + len(fname), "unknown frame '%s'" % fname)
        elif sets and len(frame_src[fname][1]) != sum(sets.values()):
            diagnostics.error(line_no, start, start + len(fname),
                              "arity mismatch: frame '%s' has %d condition(s) for %d mode(s)"
                              % (fname, len(frame_src[fname][1]), sum(sets.values())))
    if shifted is not None:
        line_no, line, ids = shifted
        for set_id in ids:
            if set_id not in sets:
                start = line.index(set_id, line.index('shifted') + 7)
                diagnostics.error(line_no, start, start + len(set_id), "unknown identifier '%s'" % set_id)

    h = None
    if hamiltonian is None:
        last = text.rstrip('\n').split('\n')
        diagnostics.append(ParseDiagnostic('error', len(last), 1, 0, "missing Hamiltonian 'H = ...'"))
    else:
        line_no, node = hamiltonian
        piece = _Evaluator(line_no, diagnostics, params, letters, frames).eval(node)
        if piece is not None:
            regions = tuple(sorted((k, v) for k, v in piece.regions.items() if not v.is_zero()))
            h = HamiltonianExpr(piece.plain, regions)
    if not sets:
        diagnostics.append(ParseDiagnostic('error', 1, 1, 0, "no operator set declared ('set pq 1')"))
    if fiducial is None:
        diagnostics.append(ParseDiagnostic('error', 1, 1, 0, "missing 'fiducial <frame>' statement"))
    if diagnostics:
        return diagnostics

    return ModelSpec(parameters=tuple(params.items()),
                     operator_sets=tuple(sets.items()),
                     frames=tuple(frames.items()),
                     fiducial=fiducial[2],
                     shifted_sets=tuple(shifted[2]) if shifted else (),
                     truncation=truncation,
                     hamiltonian=h)


def render_model(spec):
    """
    Canonical .eqm text of a ModelSpec; parse_model(render_model(s)) == s
    """
    lines = []
    for name, value in spec.parameters:
        lines.append('param %s' % name if value is None else 'param %s = %s' % (name, render_scalar(value)))
    for set_id, count in spec.operator_sets:
        lines.append('set %s %d' % (set_id, count))
    for name, defs in spec.frames:
        lines.append('frame %s = %s' % (name, ', '.join(render_expr(b) for b in defs)))
    lines.append('fiducial %s' % spec.fiducial)
    if spec.shifted_sets:
        lines.append('shifted %s' % ', '.join(spec.shifted_sets))
    if spec.truncation is not None:
        lines.append('truncation %d' % spec.truncation)
    lines.append('H = %s' % spec.hamiltonian.render())
    return '\n'.join(lines) + '\n'


def hamiltonian_operator(spec, frames, bindings=None):
    """
    Operator value of the Hamiltonian: plain part plus :inner: of every region.
    A Hamiltonian made of a single region stays in its ladder form.
    :param bindings: (dict, optional), parameter values substituted before ordering
    """
    bindings = bindings or dict()
    parts = []
    for name, inner in spec.hamiltonian.regions:
        frame = frames[name]
        inner = inner.subs(bindings)
        outside = [g for g in inner.generators() if not frame.covers([g])]
        if outside:
            raise FrameSpanError("region @%s uses %s outside the frame span"
                                 % (name, ', '.join(map(str, outside))))
        parts.append(normal_symbol(inner, frame))
    if spec.hamiltonian.plain.is_zero() and len(parts) == 1:
        return parts[0]
    total = spec.hamiltonian.plain.subs(bindings)
    for part in parts:
        total = total + part
    return total


def validate(spec, settings=DEFAULTS):
    """
    Build and check frames, Hermiticity and truncation. Parameters with values are bound in the frames
    and the Hamiltonian of the result; hbar and valueless parameters stay symbolic.
    :param spec: ModelSpec from parse_model
    :return: CheckedModel
    :raise GramNotPositiveDefinite, NonHermitianHamiltonian, DependentFiducialConditions, ModelError
    """
    hbar = spec.parameter_values.get('hbar')
    if hbar is not None and hbar <= 0:
        raise ModelError('hbar must be positive, got %s' % hbar)
    frames = dict()
    bindings = spec.bindings
    for name, defs in spec.frames:
        frame = FiducialFrame(name, [b.subs(bindings) for b in defs])
        frame.check_positive()
        frame.check_independent()
        frames[name] = frame
    fid = frames[spec.fiducial]
    if fid.size != spec.total_modes:
        raise DependentFiducialConditions('fiducial frame %r has %d conditions for %d modes'
                                          % (spec.fiducial, fid.size, spec.total_modes))
    all_generators = [Generator(s, n, k) for s, n in spec.mode_keys for k in (0, 1)]
    if not fid.covers(all_generators):
        raise FrameSpanError('fiducial frame %r does not span every generator' % spec.fiducial)
    H = hamiltonian_operator(spec, frames, bindings)
    if not hermitian_check(H):
        raise NonHermitianHamiltonian('Hamiltonian is not Hermitian')
    truncation = spec.truncation or settings.truncation_for(spec.total_modes)
    if truncation < 4:
        raise ModelError('truncation %d is below the minimum of 4' % truncation)
    logger.info('model validated: %d mode(s), frames %s, D=%d', spec.total_modes, sorted(frames), truncation)
    return CheckedModel(spec, frames, H, truncation)


def load_model(text, settings=DEFAULTS):
    """
    parse_model + validate; raises ModelError carrying the diagnostics on parse failure
    """
    result = parse_model(text)
    if isinstance(result, list):
        raise ModelError('model has %d error(s)' % len(result), result)
    return validate(result, settings)


def parse_operator(text, spec):
    """
    A single expression evaluated against the sets and parameters of a model (no regions)
    :param text: (str), expression source
    :param spec: ModelSpec
    :return: OperatorExpr, or a list of ParseDiagnostic
    """
    try:
        node = parse_expression(text)
    except pp.ParseBaseException as exc:
        return [_syntax_diagnostic(exc, 1, text)]
    except RecursionError:
        return [ParseDiagnostic('error', 1, 1, len(text), 'expression nested too deeply')]
    diagnostics = _Diagnostics()
    evaluator = _Evaluator(1, diagnostics, spec.parameter_values, _letters(spec.operator_sets),
                           spec.frame_definitions)
    piece = evaluator.eval(node)
    if piece is not None and piece.regions:
        diagnostics.error(1, node.start, node.end, 'normal-ordered regions are not allowed here')
    if diagnostics:
        return list(diagnostics)
    return piece.plain
