"""
Command-line runner: python -m EQLAB <subcommand> ...

    parse FILE                              validate a model, print diagnostics
    normal-order --model FILE --frame F E   normal-ordered form of an expression
    wcp --model FILE                        weak-correspondence report over a grid
    metric --model FILE [--omega W]         coherent-state metric
    evolve --model FILE --start p,q         full against reduced dynamics
    rotsym --N 1 --m 1 --zeta 1/2 --v 1     reducible-model match report

Exit codes: 0 success, 1 validation or computation failure, 2 usage error.
"""
import argparse
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from EQLAB import __version__
from EQLAB.classes.OperatorExpr import scalar
from EQLAB.classes.Reports import atomic_write
from EQLAB.classes.RotsymParams import RotsymParams
from EQLAB.classes.Trajectory import TimeGrid
from EQLAB.config import Settings
from EQLAB.errors import EqlabError, ConfigError, ModelError
import EQLAB.methods.correspondence as cr
import EQLAB.methods.dsl as dsl
import EQLAB.methods.dynamics as dy
import EQLAB.methods.rotsym as rs
from EQLAB.methods.ordering import normal_order

logger = logging.getLogger(__name__)

RUN_KEYS = ('hbar', 'truncation', 'grid', 'dt', 'horizon', 'leakage', 'step', 'omega_rep')
POSITIVE_KEYS = ('hbar', 'dt', 'horizon', 'leakage', 'step', 'omega_rep')


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError('%s: %s' % (self.prog, message))


@dataclass
class RunConfig:
    """
    Validated run: subcommand, model path, overrides, output target and format
    """
    command: str
    model: str = None
    overrides: dict = field(default_factory=dict)
    output: str = None
    fmt: str = 'json'

    @classmethod
    def from_pairs(cls, command, pairs, model=None, output=None, fmt='json'):
        """
        :param pairs: list of 'key=value' strings
        """
        overrides = dict()
        for pair in pairs or ():
            key, sep, value = pair.partition('=')
            key = key.strip()
            if not sep or not key:
                raise ConfigError('override %r is not of the form key=value' % pair)
            if key in overrides:
                raise ConfigError('override %r given twice' % key)
            overrides[key] = value.strip()
        return cls(command, model, overrides, output, fmt)

    def run_value(self, key, kind, default=None):
        if key not in self.overrides:
            return default
        text = self.overrides[key]
        try:
            value = int(text) if kind is int else float(Fraction(text))
        except (ValueError, ZeroDivisionError):
            raise ConfigError('%s: cannot read %r as %s' % (key, text, kind.__name__)) from None
        if key in POSITIVE_KEYS and value <= 0:
            raise ConfigError('%s must be positive' % key)
        return value

    def settings(self, base):
        values = dict()
        for key, target in (('leakage', 'leakage'), ('step', 'fd_step'), ('dt', 'dt'), ('horizon', 'horizon')):
            value = self.run_value(key, float)
            if value is not None:
                values[target] = value
        return base.with_overrides(**values)

    def truncation(self):
        d = self.run_value('truncation', int)
        if d is not None and d < 4:
            raise ConfigError('truncation must be at least 4')
        return d

    def grid(self, modes):
        """
        'extent:count' (default 1:3)
        """
        text = self.overrides.get('grid', '1:3')
        extent, _, count = text.partition(':')
        try:
            extent, count = float(Fraction(extent)), int(count or 3)
        except (ValueError, ZeroDivisionError):
            raise ConfigError('grid: expected extent:count, got %r' % text) from None
        if extent < 0 or count < 1:
            raise ConfigError('grid: extent must be non-negative and count positive')
        return cr.grid(extent, count, modes)

    def check_run_keys(self):
        unknown = sorted(set(self.overrides) - set(RUN_KEYS))
        if unknown:
            raise ConfigError('unknown override(s) %s (run keys: %s)' % (', '.join(unknown), ', '.join(RUN_KEYS)))

    def parameters(self, spec):
        """
        Model parameter overrides as exact values; unknown keys are rejected
        """
        known = set(spec.parameter_values)
        out = dict()
        for key, text in self.overrides.items():
            if key in RUN_KEYS:
                continue
            if key not in known:
                raise ConfigError('unknown override %r (run keys: %s; model parameters: %s)'
                                  % (key, ', '.join(RUN_KEYS), ', '.join(sorted(known)) or 'none'))
            try:
                out[key] = scalar(Fraction(text))
            except (ValueError, ZeroDivisionError):
                raise ConfigError('%s: cannot read %r as a rational' % (key, text)) from None
        return out


def _read(path):
    try:
        with open(path, 'rb') as f:
            return f.read()
    except OSError as exc:
        raise ConfigError('cannot read %s: %s' % (path, exc.strerror)) from None


def _checked_model(config, settings):
    result = dsl.parse_model(_read(config.model))
    if isinstance(result, list):
        raise ModelError('%s has %d error(s)' % (config.model, len(result)), result, config.model)
    spec = result.with_parameters(config.parameters(result))
    d = config.truncation()
    if d is not None:
        spec = spec.with_truncation(d)
    return dsl.validate(spec, settings)


def _emit(text, config, stdout):
    if config.output:
        atomic_write(config.output, text)
    else:
        stdout.write(text)


def _cmd_parse(args, config, settings, stdout):
    model = _checked_model(config, settings)
    modes = model.spec.total_modes
    stdout.write('ok: %d mode%s, hermitian\n' % (modes, '' if modes == 1 else 's'))


def _cmd_normal_order(args, config, settings, stdout):
    model = _checked_model(config, settings)
    if args.frame not in model.frames:
        raise ConfigError('unknown frame %r (model frames: %s)' % (args.frame, ', '.join(sorted(model.frames))))
    expr = dsl.parse_operator(args.expression, model.spec)
    if isinstance(expr, list):
        raise ModelError('expression has %d error(s)' % len(expr), expr, '<expression>')
    ordered = normal_order(expr.subs(model.spec.bindings), model.frames[args.frame])
    stdout.write('%s\n' % ordered)
    if args.ladder:
        stdout.write('%s\n' % ordered.render_ladder())


def _cmd_wcp(args, config, settings, stdout):
    model = _checked_model(config, settings)
    hbar = config.run_value('hbar', float)
    points = config.grid(len(cr.shifted_mode_keys(model)))
    report = cr.wcp_numeric(model, points, settings, config.truncation(), hbar,
                            config.run_value('omega_rep', float), name=config.model)
    _emit(report.render(config.fmt), config, stdout)


def _cmd_metric(args, config, settings, stdout):
    model = _checked_model(config, settings)
    nm = cr.numeric_model(model, settings, config.truncation(), config.run_value('hbar', float),
                          config.run_value('omega_rep', float))
    p, q = _point(args.point, len(cr.shifted_mode_keys(model)))
    tensor = cr.fubini_study_metric(nm.space, nm.fiducial, p, q, settings.fd_step, nm.shifted_sets,
                                    settings.leakage)
    _emit(tensor.render(config.fmt), config, stdout)


def _cmd_evolve(args, config, settings, stdout):
    model = _checked_model(config, settings)
    hbar = config.run_value('hbar', float)
    nm = cr.numeric_model(model, settings, config.truncation(), hbar, config.run_value('omega_rep', float))
    h_cl = cr.classical_function(model, hbar, settings)
    start = _point(args.start, len(cr.shifted_mode_keys(model)))
    grid = TimeGrid(settings.dt, settings.horizon)
    full, reduced, report = dy.evolve_model(nm, h_cl, start, grid, settings.integrator_order, settings.leakage)
    if args.trajectories:
        atomic_write(args.trajectories + '.full.csv', full.to_csv())
        atomic_write(args.trajectories + '.reduced.csv', reduced.to_csv())
    _emit(report.render(config.fmt), config, stdout)


def _cmd_rotsym(args, config, settings, stdout):
    try:
        params = RotsymParams(args.N, args.m, args.zeta, args.v)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    config.check_run_keys()
    report = rs.verify_match(params, args.numeric, None, config.truncation(), settings,
                             config.run_value('hbar', float))
    _emit(report.render(config.fmt), config, stdout)
    if not report.exact_match:
        raise EqlabError('reducible model does not reproduce the classical Hamiltonian')


def _point(text, modes):
    """
    'p1,..,pN,q1,..,qN' -> ((p..), (q..))
    """
    if text is None:
        return tuple([0.0] * modes), tuple([0.0] * modes)
    try:
        values = [float(Fraction(x)) for x in text.split(',')]
    except (ValueError, ZeroDivisionError):
        raise ConfigError('cannot read phase point %r' % text) from None
    if len(values) != 2 * modes:
        raise ConfigError('phase point needs %d coordinates, got %d' % (2 * modes, len(values)))
    return tuple(values[:modes]), tuple(values[modes:])


def build_parser():
    parser = _Parser(prog='eqlab', description='Enhanced quantization laboratory', allow_abbrev=False)
    parser.add_argument('--version', action='version', version='eqlab ' + __version__)
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging on stderr')
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    def common(p, model_positional=False):
        if model_positional:
            p.add_argument('model', help='.eqm model file')
        else:
            p.add_argument('--model', required=True, help='.eqm model file')
        p.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                       help='run setting (%s) or model parameter override' % ', '.join(RUN_KEYS))
        p.add_argument('--output', '-o', help='write the result atomically to this file')
        p.add_argument('--format', dest='fmt', choices=('json', 'csv'), default='json')

    common(sub.add_parser('parse', help='validate a model file'), model_positional=True)
    p = sub.add_parser('normal-order', help='normal-ordered form of an expression')
    common(p)
    p.add_argument('--frame', required=True)
    p.add_argument('--ladder', action='store_true', help='also print the ladder form')
    p.add_argument('expression')
    common(sub.add_parser('wcp', help='weak-correspondence report'))
    p = sub.add_parser('metric', help='coherent-state metric')
    common(p)
    p.add_argument('--omega', help='shorthand for --set omega=W')
    p.add_argument('--point', help='p1,..,pN,q1,..,qN (default origin)')
    p = sub.add_parser('evolve', help='full against reduced dynamics')
    common(p)
    p.add_argument('--start', required=True, help='p1,..,pN,q1,..,qN')
    p.add_argument('--trajectories', metavar='PREFIX', help='write PREFIX.full.csv and PREFIX.reduced.csv')
    p = sub.add_parser('rotsym', help='reducible rotationally symmetric model')
    p.add_argument('--N', type=int, default=1)
    p.add_argument('--m', default='1')
    p.add_argument('--zeta', default='1/2')
    p.add_argument('--v', default='1')
    p.add_argument('--numeric', dest='numeric', action='store_true', default=None)
    p.add_argument('--no-numeric', dest='numeric', action='store_false')
    p.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE')
    p.add_argument('--output', '-o')
    p.add_argument('--format', dest='fmt', choices=('json', 'csv'), default='json')
    return parser


COMMANDS = {'parse': _cmd_parse, 'normal-order': _cmd_normal_order, 'wcp': _cmd_wcp, 'metric': _cmd_metric,
            'evolve': _cmd_evolve, 'rotsym': _cmd_rotsym}


def run(argv=None, stdout=None, stderr=None, environ=None):
    """
    Parse argv, dispatch, report failures on stderr
    :return: exit code
    """
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        stderr.write('usage error: %s\n' % exc)
        return 2
    except SystemExit as exc:  # --help, --version
        return int(exc.code or 0)
    logging.basicConfig(stream=stderr, level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s', force=True)
    logger.debug('eqlab %s: %s', __version__, args.command)
    pairs = list(args.overrides)
    if getattr(args, 'omega', None) is not None:
        pairs.append('omega=%s' % args.omega)
    try:
        config = RunConfig.from_pairs(args.command, pairs, getattr(args, 'model', None), args.output, args.fmt)
        settings = config.settings(Settings.from_env(environ))
        COMMANDS[args.command](args, config, settings, stdout)
    except ModelError as exc:
        for d in exc.diagnostics:
            stderr.write(d.render(exc.source or '<input>') + '\n')
        stderr.write('error: %s\n' % exc)
        return 1
    except ConfigError as exc:
        stderr.write('usage error: %s\n' % exc)
        return 2
    except (EqlabError, OSError) as exc:
        stderr.write('error: %s\n' % exc)
        return 1
    return 0


def main():
    sys.exit(run())
