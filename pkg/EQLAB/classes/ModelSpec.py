from dataclasses import dataclass, field, replace

import sympy

from EQLAB.classes.OperatorExpr import OperatorExpr, HBAR, symbol, render_expr


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str
    line: int
    column: int
    length: int
    message: str
    expected: str = None

    def render(self, filename='<input>'):
        return '%s:%d:%d: %s: %s' % (filename, self.line, self.column, self.severity, self.message)

    def in_bounds(self, text):
        lines = text.split('\n')
        if not 1 <= self.line <= max(1, len(lines)):
            return False
        width = len(lines[self.line - 1]) if lines else 0
        return 1 <= self.column and self.column - 1 + self.length <= width + 1 and self.length >= 0


@dataclass(frozen=True)
class HamiltonianExpr:
    """
    Hamiltonian as written: a plain polynomial plus normal-ordered regions :[ inner ]: @frame
    """
    plain: OperatorExpr = field(default_factory=OperatorExpr.zero)
    regions: tuple = ()  # sorted ((frame name, inner OperatorExpr), ...)

    def frame_names(self):
        return [name for name, _ in self.regions]

    def render(self):
        parts = [] if self.plain.is_zero() and self.regions else [render_expr(self.plain)]
        parts += [':[ %s ]: @%s' % (render_expr(inner), name) for name, inner in self.regions]
        return ' + '.join(parts)


@dataclass(frozen=True)
class ModelSpec:
    parameters: tuple = ()  # ((name, sympy Rational or None), ...)
    operator_sets: tuple = ()  # ((set_id, mode count), ...)
    frames: tuple = ()  # ((name, (OperatorExpr, ...)), ...)
    fiducial: str = None
    shifted_sets: tuple = ()
    truncation: int = None
    hamiltonian: HamiltonianExpr = field(default_factory=HamiltonianExpr)

    @property
    def parameter_values(self):
        return dict(self.parameters)

    @property
    def bindings(self):
        """
        Symbol -> exact value for every parameter that has one
        """
        return dict((HBAR if name == 'hbar' else symbol(name), value)
                    for name, value in self.parameters if value is not None)

    @property
    def mode_keys(self):
        return [(s, n) for s, count in self.operator_sets for n in range(count)]

    @property
    def total_modes(self):
        return sum(count for _, count in self.operator_sets)

    @property
    def frame_definitions(self):
        return dict(self.frames)

    def with_parameters(self, overrides):
        """
        Copy with parameter values replaced (and undeclared ones appended)
        :param overrides: dict name -> exact value
        """
        params = [(name, overrides.get(name, value)) for name, value in self.parameters]
        known = set(name for name, _ in self.parameters)
        params += [(name, value) for name, value in sorted(overrides.items()) if name not in known]
        return replace(self, parameters=tuple(params))

    def with_truncation(self, truncation):
        return replace(self, truncation=truncation)


@dataclass(frozen=True)
class CheckedModel:
    """
    Validated model: frames built and checked, Hamiltonian expanded to its operator value
    """
    spec: ModelSpec
    frames: dict
    hamiltonian: OperatorExpr
    truncation: int

    @property
    def fiducial_frame(self):
        return self.frames[self.spec.fiducial]

    @property
    def shifted_sets(self):
        return set(self.spec.shifted_sets)

    def numeric_bindings(self, hbar=1):
        bindings = self.spec.bindings
        if HBAR not in bindings:
            bindings[HBAR] = sympy.nsimplify(hbar)
        return bindings

    def hbar_value(self, default=1):
        return float(self.numeric_bindings(default)[HBAR])

    def bound_hamiltonian(self, hbar=1):
        return self.hamiltonian.subs(self.numeric_bindings(hbar))

    def bound_frame(self, hbar=1):
        return self.fiducial_frame.subs(self.numeric_bindings(hbar))

    def representation_frequency(self):
        values = self.spec.parameter_values
        for name in ('m', 'm0', 'omega'):
            if values.get(name) is not None:
                return float(values[name])
        return 1.0
