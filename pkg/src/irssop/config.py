"""Configuration of the physical system, the Monte-Carlo engine and experiments.

A configuration file is a flat list of `namespace.key = value` lines. Blank lines
and `#` comments are ignored. Keys ending in `_dB`/`_dBm` are converted to linear
units once, when the file is loaded; everything downstream is linear.

    # worst case of the reference setup
    system.rho = 0.9
    system.P_dBm = 5
    experiment.kind = sweep-k
    experiment.scenarios = 3
    sweep.k_grid = 5:100:5
"""

from __future__ import annotations

import dataclasses
import logging
import math
from copy import deepcopy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, get_args

from irssop.channel import path_loss, rho_from_doppler
from irssop.constants import (
    ExperimentKind,
    ExperimentKindValues,
    OutputFormat,
    SopMethod,
)
from irssop.errors import ConfigError
from irssop.specfun import phase_error_char
from irssop.utils import db_to_linear, dbm_to_watt

logger = logging.getLogger(__name__)

DEFAULT_K_GRID: tuple[int, ...] = tuple(range(5, 101, 5))
DEFAULT_N_GRID: tuple[int, ...] = (16, 36, 64, 100, 144, 196)
DEFAULT_RHO_GRID: tuple[float, ...] = (0.8, 0.9)


@dataclass(frozen=True)
class SystemParams:
    """Every physical constant of the IRS-assisted downlink.

    Defaults reproduce the reference setup: a 4-antenna BS 10 m from a 10x10 IRS,
    Bob and Eve 80 m from the IRS, 5 dBm transmit power and -120 dBm noise.
    All powers are linear watts, all angles radians.
    """

    M: int = 4
    """Number of BS antennas."""
    N_H: int = 10
    """Horizontal number of IRS elements."""
    N_V: int = 10
    """Vertical number of IRS elements."""
    L: int = 4
    """Phase quantization levels. The phase error is uniform on [-pi/L, pi/L]."""
    P: float = dbm_to_watt(5.0)
    """Transmit power."""
    sigma2_B: float = dbm_to_watt(-120.0)
    """Noise power at Bob."""
    sigma2_E: float = dbm_to_watt(-120.0)
    """Noise power at Eve."""
    rho: float = 0.9
    """Correlation between the outdated and the current IRS-user channels."""
    Rs: float = 3.0
    """Target secrecy rate in bits/s/Hz."""
    phi1: float = math.pi / 4
    """Azimuth angle of departure at the BS."""
    theta1: float = math.pi / 3
    """Elevation angle of departure at the BS."""
    phi2: float = math.pi / 4
    """Azimuth angle of arrival at the IRS."""
    theta2: float = math.pi / 3
    """Elevation angle of arrival at the IRS."""
    spacing_bs: float = 0.5
    """BS antenna spacing in wavelengths."""
    spacing_h: float = 0.5
    """Horizontal IRS element spacing in wavelengths."""
    spacing_v: float = 0.5
    """Vertical IRS element spacing in wavelengths."""
    C1: float = db_to_linear(-26.0)
    """Path-loss intercept of the BS-IRS link."""
    alpha1: float = 2.2
    """Path-loss exponent of the BS-IRS link."""
    d1: float = 10.0
    """BS-IRS distance in meters."""
    C2: float = db_to_linear(-28.0)
    """Path-loss intercept of the IRS-user links."""
    alpha2: float = 3.67
    """Path-loss exponent of the IRS-user links."""
    d2: float = 80.0
    """IRS-user distance in meters."""
    eve_scale: float = 1.0
    """Ratio beta_E / beta_B. 1 places Eve at Bob's distance; tiny values give an
    eavesdropper-free limit."""

    def __post_init__(self) -> None:
        for name in ("M", "N_H", "N_V", "L"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(
                    f"must be an integer >= 1, got {value!r}",
                    key=f"system.{name}",
                )
        for name in ("P", "sigma2_B", "sigma2_E", "C1", "d1", "C2", "d2", "eve_scale"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"must be > 0, got {value!r}", key=f"system.{name}")
        for name in ("spacing_bs", "spacing_h", "spacing_v"):
            if not getattr(self, name) > 0:
                raise ConfigError(
                    f"must be > 0, got {getattr(self, name)!r}",
                    key=f"system.{name}",
                )
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError(
                f"must lie in [0, 1], got {self.rho!r}",
                key="system.rho",
            )
        if not (math.isfinite(self.Rs) and self.Rs >= 0):
            raise ConfigError(f"must be >= 0, got {self.Rs!r}", key="system.Rs")

    @property
    def N(self) -> int:
        """Total number of IRS elements."""
        return self.N_H * self.N_V

    @property
    def beta_H(self) -> float:
        """Path loss of the BS-IRS link."""
        return path_loss(self.C1, self.d1, self.alpha1)

    @property
    def beta_B(self) -> float:
        """Path loss of the IRS-Bob link."""
        return path_loss(self.C2, self.d2, self.alpha2)

    @property
    def beta_E(self) -> float:
        """Path loss of the IRS-Eve link."""
        return self.eve_scale * self.beta_B

    @property
    def mu1(self) -> float:
        return phase_error_char(1, self.L)

    @property
    def mu2(self) -> float:
        return phase_error_char(2, self.L)

    def replace(self, **changes: Any) -> SystemParams:
        """Copy with some fields changed, validating the result."""
        return dataclasses.replace(self, **changes)

    def with_elements(self, N: int) -> SystemParams:
        """Copy with an N-element IRS: square when N is a perfect square, else Nx1.

        The grid shape only enters through the steering vector, which drops out of
        every SNR, so any factorization of N gives the same statistics.
        """
        if N < 1:
            raise ConfigError(f"must be >= 1, got {N}", key="system.N")
        side = math.isqrt(N)
        if side * side == N:
            return self.replace(N_H=side, N_V=side)
        return self.replace(N_H=N, N_V=1)


@dataclass(frozen=True)
class McConfig:
    """Monte-Carlo settings."""

    trials: int = 100_000
    """Number of independent channel realizations per estimate."""
    seed: int = 0
    """Root seed. Block `b` draws from `SeedSequence([seed, b])`."""
    workers: int = 0
    """Worker processes. 0 uses every core, 1 runs in-process."""

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ConfigError(f"must be >= 1, got {self.trials}", key="mc.trials")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(
                f"must be an unsigned 64-bit integer, got {self.seed}",
                key="mc.seed",
            )
        if self.workers < 0:
            raise ConfigError(f"must be >= 0, got {self.workers}", key="mc.workers")

    @property
    def n_jobs(self) -> int:
        """The `n_jobs` value handed to joblib."""
        return -1 if self.workers == 0 else self.workers

    @staticmethod
    def from_user_input(mc: dict | McConfig | None) -> McConfig:
        """Converts `None`, a dict of field values or an `McConfig` to an `McConfig`."""
        if mc is None:
            return McConfig()
        if isinstance(mc, McConfig):
            return deepcopy(mc)
        if isinstance(mc, dict):
            known = {f.name for f in dataclasses.fields(McConfig)}
            for key in mc:
                if key not in known:
                    raise ValueError(f"Unknown kwarg passed to McConfig: {key}")
            return McConfig(**mc)
        raise ValueError(f"Unknown {mc=} passed as Monte-Carlo configuration.")


@dataclass(frozen=True)
class OutputConfig:
    """Where and how result tables are written."""

    path: Path | None = None
    """Result file. `None` writes CSV to stdout and skips the metadata sidecar."""
    format: OutputFormat = "csv"

    def __post_init__(self) -> None:
        if self.format not in get_args(OutputFormat):
            raise ConfigError(
                f"must be one of {get_args(OutputFormat)}, got {self.format!r}",
                key="output.format",
            )


@dataclass(frozen=True)
class ExperimentSpec:
    """A fully resolved experiment: what to run, on which system, and where to write."""

    kind: ExperimentKind = "sweep-k"
    system: SystemParams = field(default_factory=SystemParams)
    scenarios: tuple[int, ...] = (3,)
    """Scenario ids: 1 both outdated, 2 both perfect, 3 Bob outdated and Eve perfect."""
    K: int | None = None
    """Selected elements for `sop-point`. `None` switches every element on."""
    k_grid: tuple[int, ...] = DEFAULT_K_GRID
    n_grid: tuple[int, ...] = DEFAULT_N_GRID
    rho_grid: tuple[float, ...] = DEFAULT_RHO_GRID
    optimal_method: SopMethod = "exact"
    """SOP functional minimized when searching for the best K."""
    run_mc: bool = True
    """Whether to attach Monte-Carlo estimates to the analytic columns."""
    random_ess: bool = True
    """Whether `sweep-k` also simulates a uniformly random K-subset."""
    validate_K: int = 20
    """Subset size used by the selection checks of `validate-dist`."""
    corrupt_kappa: float = 1.0
    """Factor applied to every predicted Gamma shape in `validate-dist`. Anything
    but 1 is a self-test that the checks can fail."""
    mc: McConfig = field(default_factory=McConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self) -> None:
        if self.kind not in ExperimentKindValues:
            raise ConfigError(
                f"must be one of {ExperimentKindValues}, got {self.kind!r}",
                key="experiment.kind",
            )
        if not self.scenarios or any(s not in (1, 2, 3) for s in self.scenarios):
            raise ConfigError(
                f"must be a non-empty list drawn from 1, 2, 3, got {self.scenarios}",
                key="experiment.scenarios",
            )
        N = self.system.N
        if self.K is not None and not 1 <= self.K <= N:
            raise ConfigError(f"must lie in [1, {N}], got {self.K}", key="experiment.K")
        k_max = N if self.kind == "sweep-k" else math.inf
        if not self.k_grid or any(not 1 <= k <= k_max for k in self.k_grid):
            raise ConfigError(
                f"values must lie in [1, {k_max}], got {self.k_grid}",
                key="sweep.k_grid",
            )
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ConfigError(
                f"values must be >= 1, got {self.n_grid}",
                key="sweep.n_grid",
            )
        if not self.rho_grid or any(not 0 <= r <= 1 for r in self.rho_grid):
            raise ConfigError(
                f"values must lie in [0, 1], got {self.rho_grid}",
                key="sweep.rho_grid",
            )
        if self.optimal_method not in get_args(SopMethod):
            raise ConfigError(
                f"must be one of {get_args(SopMethod)}, got {self.optimal_method!r}",
                key="optimal.method",
            )
        if self.validate_K < 1 or (
            self.kind == "validate-dist" and self.validate_K > N
        ):
            raise ConfigError(
                f"must lie in [1, {N}], got {self.validate_K}",
                key="validate.K",
            )
        if not self.corrupt_kappa > 0:
            raise ConfigError(
                f"must be > 0, got {self.corrupt_kappa}",
                key="validate.corrupt_kappa",
            )

    def replace(self, **changes: Any) -> ExperimentSpec:
        """Copy with some fields changed, validating the result."""
        return dataclasses.replace(self, **changes)


# --------------------------------------------------------------------- parsing


def _parse_int(text: str) -> int:
    return int(text)


def _parse_float(text: str) -> float:
    return float(text)


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_int_grid(text: str) -> tuple[int, ...]:
    """Comma separated integers or an inclusive `start:stop:step` range."""
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) == 2:
            parts.append(1)
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError(f"expected start:stop[:step] with step > 0, got {text!r}")
        start, stop, step = parts
        return tuple(range(start, stop + 1, step))
    return tuple(int(p) for p in text.split(",") if p.strip())


def _parse_float_grid(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p.strip())


def _parse_path(text: str) -> Path:
    return Path(text)


def _parse_str(text: str) -> str:
    return text


# config key -> (section, field, parser). Sections are "system", "experiment",
# "mc" and "output"; "system" values that need unit conversion use the
# dedicated parsers below.
_KEYS: dict[str, tuple[str, str, Callable[[str], Any]]] = {
    "system.M": ("system", "M", _parse_int),
    "system.N_H": ("system", "N_H", _parse_int),
    "system.N_V": ("system", "N_V", _parse_int),
    "system.L": ("system", "L", _parse_int),
    "system.P": ("system", "P", _parse_float),
    "system.P_dBm": ("system", "P", lambda t: dbm_to_watt(float(t))),
    "system.sigma2_B": ("system", "sigma2_B", _parse_float),
    "system.sigma2_B_dBm": ("system", "sigma2_B", lambda t: dbm_to_watt(float(t))),
    "system.sigma2_E": ("system", "sigma2_E", _parse_float),
    "system.sigma2_E_dBm": ("system", "sigma2_E", lambda t: dbm_to_watt(float(t))),
    "system.rho": ("system", "rho", _parse_float),
    "system.Rs": ("system", "Rs", _parse_float),
    "system.phi1": ("system", "phi1", _parse_float),
    "system.theta1": ("system", "theta1", _parse_float),
    "system.phi2": ("system", "phi2", _parse_float),
    "system.theta2": ("system", "theta2", _parse_float),
    "system.spacing_bs": ("system", "spacing_bs", _parse_float),
    "system.spacing_h": ("system", "spacing_h", _parse_float),
    "system.spacing_v": ("system", "spacing_v", _parse_float),
    "system.C1": ("system", "C1", _parse_float),
    "system.C1_dB": ("system", "C1", lambda t: db_to_linear(float(t))),
    "system.alpha1": ("system", "alpha1", _parse_float),
    "system.d1": ("system", "d1", _parse_float),
    "system.C2": ("system", "C2", _parse_float),
    "system.C2_dB": ("system", "C2", lambda t: db_to_linear(float(t))),
    "system.alpha2": ("system", "alpha2", _parse_float),
    "system.d2": ("system", "d2", _parse_float),
    "system.eve_scale": ("system", "eve_scale", _parse_float),
    "system.eve_scale_dB": ("system", "eve_scale", lambda t: db_to_linear(float(t))),
    "experiment.kind": ("experiment", "kind", _parse_str),
    "experiment.scenarios": ("experiment", "scenarios", _parse_int_grid),
    "experiment.K": ("experiment", "K", _parse_int),
    "experiment.run_mc": ("experiment", "run_mc", _parse_bool),
    "experiment.random_ess": ("experiment", "random_ess", _parse_bool),
    "sweep.k_grid": ("experiment", "k_grid", _parse_int_grid),
    "sweep.n_grid": ("experiment", "n_grid", _parse_int_grid),
    "sweep.rho_grid": ("experiment", "rho_grid", _parse_float_grid),
    "optimal.method": ("experiment", "optimal_method", _parse_str),
    "validate.K": ("experiment", "validate_K", _parse_int),
    "validate.corrupt_kappa": ("experiment", "corrupt_kappa", _parse_float),
    "mc.trials": ("mc", "trials", _parse_int),
    "mc.seed": ("mc", "seed", _parse_int),
    "mc.workers": ("mc", "workers", _parse_int),
    "output.path": ("output", "path", _parse_path),
    "output.format": ("output", "format", _parse_str),
}

# Keys that set several fields or need the Bessel model; resolved after the table.
_COMPOUND_KEYS = (
    "system.N",
    "system.sigma2",
    "system.sigma2_dBm",
    "system.fd_Td",
)


def _read_entries(text: str) -> dict[str, tuple[str, int]]:
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected `key = value`", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("missing key before `=`", line=lineno)
        if key not in _KEYS and key not in _COMPOUND_KEYS:
            raise ConfigError("unknown key", key=key, line=lineno)
        if key in entries:
            raise ConfigError(
                f"duplicate key, first set on line {entries[key][1]}",
                key=key,
                line=lineno,
            )
        entries[key] = (value, lineno)
    return entries


def _set_once(
    sections: dict[str, dict[str, Any]],
    owners: dict[tuple[str, str], str],
    section: str,
    name: str,
    value: Any,
    *,
    key: str,
    line: int,
) -> None:
    if (section, name) in owners:
        raise ConfigError(
            f"conflicts with `{owners[(section, name)]}`",
            key=key,
            line=line,
        )
    owners[(section, name)] = key
    sections[section][name] = value


def parse_config(text: str) -> ExperimentSpec:
    """Parse the text of a configuration document.

    Omitted keys keep the defaults of `ExperimentSpec`, i.e. the reference setup.

    Raises:
        ConfigError: On syntax errors, unknown or conflicting keys, unparsable
            values, and values violating a parameter bound. The message names the
            line and key.
    """
    entries = _read_entries(text)
    sections: dict[str, dict[str, Any]] = {
        "system": {},
        "experiment": {},
        "mc": {},
        "output": {},
    }
    owners: dict[tuple[str, str], str] = {}

    def convert(key: str, parser: Callable[[str], Any]) -> Any:
        value, lineno = entries[key]
        try:
            return parser(value)
        except ValueError as e:
            raise ConfigError(f"invalid value {value!r}: {e}", key=key, line=lineno) from e

    for key, (_, lineno) in entries.items():
        if key in _KEYS:
            section, name, parser = _KEYS[key]
            _set_once(
                sections, owners, section, name, convert(key, parser),
                key=key, line=lineno,
            )

    if "system.N" in entries:
        lineno = entries["system.N"][1]
        N = convert("system.N", _parse_int)
        if N < 1:
            raise ConfigError(f"must be >= 1, got {N}", key="system.N", line=lineno)
        grid = SystemParams().with_elements(N)
        for name in ("N_H", "N_V"):
            _set_once(
                sections, owners, "system", name, getattr(grid, name),
                key="system.N", line=lineno,
            )
    for key, parser in (
        ("system.sigma2", _parse_float),
        ("system.sigma2_dBm", lambda t: dbm_to_watt(float(t))),
    ):
        if key in entries:
            value = convert(key, parser)
            for name in ("sigma2_B", "sigma2_E"):
                _set_once(
                    sections, owners, "system", name, value,
                    key=key, line=entries[key][1],
                )
    if "system.fd_Td" in entries:
        lineno = entries["system.fd_Td"][1]
        fd_Td = convert("system.fd_Td", _parse_float)
        if fd_Td < 0:
            raise ConfigError(f"must be >= 0, got {fd_Td}", key="system.fd_Td", line=lineno)
        _set_once(
            sections, owners, "system", "rho", rho_from_doppler(fd_Td),
            key="system.fd_Td", line=lineno,
        )

    try:
        system = SystemParams(**sections["system"])
        mc = McConfig(**sections["mc"])
        output = OutputConfig(**sections["output"])
        spec = ExperimentSpec(
            system=system, mc=mc, output=output, **sections["experiment"]
        )
    except ConfigError as e:
        if e.line is None and e.key is not None:
            source = owners.get(_owner_field(e.key), e.key)
            line = entries[source][1] if source in entries else None
            raise ConfigError(_bare_message(e), key=source, line=line) from e
        raise

    logger.debug(f"Resolved configuration: {spec}")
    return spec


def _owner_field(key: str) -> tuple[str, str]:
    for section, name, _ in _KEYS.values():
        if key == f"{section}.{name}":
            return section, name
    for cfg_key, (section, name, _) in _KEYS.items():
        if cfg_key == key:
            return section, name
    return ("", key)


def _bare_message(error: ConfigError) -> str:
    message = str(error)
    return message.split("] ", 1)[1] if message.startswith("[") else message


def load_config(path: str | Path) -> ExperimentSpec:
    """Load an `ExperimentSpec` from a configuration file.

    Raises:
        ConfigError: If the document is malformed or invalid.
        OSError: If the file cannot be read.
    """
    path = Path(path)
    logger.info(f"Loading configuration from {path}")
    return parse_config(path.read_text())


def emit_config(spec: ExperimentSpec) -> str:
    """Render `spec` as a configuration document.

    Values are written in linear units with full precision, so that
    `parse_config(emit_config(spec)) == spec`.
    """
    lines = ["# irssop experiment configuration, linear units"]
    for f in dataclasses.fields(SystemParams):
        lines.append(f"system.{f.name} = {_format(getattr(spec.system, f.name))}")
    lines.append(f"experiment.kind = {spec.kind}")
    lines.append(f"experiment.scenarios = {_format(spec.scenarios)}")
    if spec.K is not None:
        lines.append(f"experiment.K = {spec.K}")
    lines.append(f"experiment.run_mc = {_format(spec.run_mc)}")
    lines.append(f"experiment.random_ess = {_format(spec.random_ess)}")
    lines.append(f"sweep.k_grid = {_format(spec.k_grid)}")
    lines.append(f"sweep.n_grid = {_format(spec.n_grid)}")
    lines.append(f"sweep.rho_grid = {_format(spec.rho_grid)}")
    lines.append(f"optimal.method = {spec.optimal_method}")
    lines.append(f"validate.K = {spec.validate_K}")
    lines.append(f"validate.corrupt_kappa = {_format(spec.corrupt_kappa)}")
    lines.append(f"mc.trials = {spec.mc.trials}")
    lines.append(f"mc.seed = {spec.mc.seed}")
    lines.append(f"mc.workers = {spec.mc.workers}")
    if spec.output.path is not None:
        lines.append(f"output.path = {spec.output.path}")
    lines.append(f"output.format = {spec.output.format}")
    return "\n".join(lines) + "\n"


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    return str(value)
