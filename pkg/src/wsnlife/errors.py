"""Exception types raised across the package."""


class WsnError(Exception):
    """Base class for every error raised by wsnlife."""


class SingularFlow(WsnError):
    """Routing mass is trapped: the flow system is singular or yields negative inflow."""


class NoRoute(WsnError):
    """The source has no usable out-neighbor, or the base is unreachable."""


class DegenerateSource(WsnError):
    """Source workload is zero, so the multiplier condition is undefined."""


class NuDiverged(WsnError):
    """The damped multiplier iteration did not reach its fixed point."""

    def __init__(self, msg, nu=None, history=None):
        super().__init__(msg)
        self.nu = nu
        self.history = history or []


class TooLarge(WsnError):
    """Vertex enumeration would exceed the configured bound."""


class ShootingDiverged(WsnError):
    """Shooting did not bring the boundary residual under tolerance."""

    def __init__(self, msg, best=None, residual_norm=None):
        super().__init__(msg)
        self.best = best
        self.residual_norm = residual_norm


class ConfigError(WsnError):
    """A scenario is valid but unsuitable for the requested command."""


class ParseError(WsnError):
    """A scenario document could not be parsed."""

    def __init__(self, msg, line=None, field=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field is not None:
            loc.append(f"field {field!r}")
        super().__init__(f"{msg} ({', '.join(loc)})" if loc else msg)
        self.line = line
        self.field = field


class ValidationError(WsnError):
    """A parsed scenario violates one or more constraints; all are listed."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
