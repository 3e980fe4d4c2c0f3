"""Exceptions raised by irssop."""

from __future__ import annotations


class ConfigError(ValueError):
    """A configuration document could not be parsed or failed validation."""

    def __init__(
        self,
        message: str,
        *,
        key: str | None = None,
        line: int | None = None,
    ) -> None:
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(f"{prefix}{message}")


class DegenerateChannelError(ValueError):
    """The projected channel used to build the beamformer is exactly zero."""


class NumericalError(ArithmeticError):
    """A numerical routine failed to reach its accuracy target."""


class SeriesConvergenceError(NumericalError):
    """A series did not converge, or was evaluated outside its validity region."""


class MeijerGError(NumericalError):
    """The Mellin-Barnes contour integral of a Meijer G-function failed."""
