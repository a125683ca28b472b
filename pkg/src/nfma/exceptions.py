"""Exception and warning types raised across the package."""


class NFMAError(Exception):
    """Base class for all errors raised by this package."""


class ZeroDistance(NFMAError, ValueError):
    """An antenna element coincides with a path anchor."""


class DimensionMismatch(NFMAError, ValueError):
    pass


class IllConditionedChannel(NFMAError, ArithmeticError):
    """User channels are (nearly) linearly dependent, so ZF is invalid."""


class ZeroChannel(NFMAError, ValueError):
    """A user has an all-zero path response vector."""


class ZeroGain(NFMAError, ArithmeticError):
    """A user receives zero beamforming gain, so power allocation is undefined."""


class InfeasibleSpacing(NFMAError, ValueError):
    pass


class BadShape(NFMAError, ValueError):
    pass


class Infeasible(NFMAError):
    """No placement satisfying the closed-form optimality set was found."""


class Unsupported(NFMAError, NotImplementedError):
    pass


class BadDistributionParams(NFMAError, ValueError):
    pass


class ConfigError(NFMAError, ValueError):
    """Invalid experiment configuration.

    Parameters
    ----------
    message : str
        What went wrong.
    section, key : str, optional
        Location of the offending field.
    line : int, optional
        1-based line number in the config file, when known.
    """

    def __init__(self, message, section=None, key=None, line=None):
        self.section = section
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if section is not None:
            where.append(f"[{section}]" + (f" {key}" if key else ""))
        prefix = (", ".join(where) + ": ") if where else ""
        super().__init__(prefix + message)


class ZeroSumWarning(UserWarning):
    """An entry of the phase initializer sum vanished; its phase was set to 0."""
