import os
from dataclasses import dataclass, replace

from EQLAB.errors import ConfigError


# Numerical defaults shared by the engines; the cli layers RunConfig overrides on top
@dataclass(frozen=True)
class Settings:
    truncation: int = 64  # per-mode D, single-mode models
    multimode_truncation: int = 24  # per-mode D when the model has more than one mode
    leakage: float = 1e-6
    fd_step: float = 1e-3
    dt: float = 1e-2
    horizon: float = 10.0
    gap: float = 1e-10
    hbar: float = 1.0  # used when a model leaves hbar symbolic
    integrator_order: int = 6
    dense_limit: int = 256

    def truncation_for(self, modes):
        """
        Per-mode truncation for a model
        :param modes: (int), total number of modes
        :return: D
        """
        return self.truncation if modes <= 1 else self.multimode_truncation

    def with_overrides(self, **kwargs):
        unknown = set(kwargs) - set(self.__dataclass_fields__)
        if unknown:
            raise ConfigError('unknown setting(s): ' + ', '.join(sorted(unknown)))
        return replace(self, **kwargs)

    @classmethod
    def from_env(cls, environ=None):
        environ = os.environ if environ is None else environ
        values = dict()
        if environ.get('EQLAB_TRUNCATION'):
            d = _parse(environ['EQLAB_TRUNCATION'], int, 'EQLAB_TRUNCATION')
            if d < 4:
                raise ConfigError('EQLAB_TRUNCATION must be at least 4')
            values['truncation'] = d
            values['multimode_truncation'] = d
        if environ.get('EQLAB_LEAKAGE'):
            values['leakage'] = _parse(environ['EQLAB_LEAKAGE'], float, 'EQLAB_LEAKAGE')
        return cls(**values)


def _parse(text, kind, name):
    try:
        return kind(text)
    except ValueError:
        raise ConfigError('%s: cannot read %r as %s' % (name, text, kind.__name__)) from None


DEFAULTS = Settings()
