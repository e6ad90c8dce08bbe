"""Exception hierarchy shared by all modules."""


class NCIError(Exception):
    """Base class for all errors raised by :mod:`nci`."""


class PackingInfeasible(NCIError):
    pass


class NotHoneycomb(NCIError):
    pass


class GeometryMismatch(NCIError):
    pass


class SpecViolation(NCIError):
    """A coefficient specification failed one of its sampled constraints."""

    def __init__(self, constraint, detail=""):
        self.constraint = constraint
        msg = f"SpecViolation({constraint})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class ConvergenceFailure(NCIError):
    pass


class GaplessError(NCIError):
    pass


class NotChiral(NCIError):
    pass


class ModeUnavailable(NCIError):
    pass


class EmptyWindow(NCIError):
    pass


class DomainError(NCIError):
    pass


class SingularDraw(NCIError):
    pass


class TooFewLevels(NCIError):
    pass


class UnsupportedDimension(NCIError):
    pass


class ShiftHitsSite(NCIError):
    pass


class IllConditioned(NCIError):
    pass


class BoxTooSmall(NCIError):
    pass


class SectorTooLarge(NCIError):
    pass


class ConfigError(NCIError):
    """Base class for sweep configuration problems."""


class ParseError(ConfigError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}, column {column or 1})"
        super().__init__(message + where)


class SemanticError(ConfigError):
    """Carries every semantic problem found in a config, not just the first."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
