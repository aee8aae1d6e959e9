"""Experiment configuration: flat key=value text with dotted sections.

The format is deliberately minimal and diff-friendly: one `section.key =
value` per line, '#' comments, unknown keys rejected.  Floats are echoed via
repr (shortest round-trip), so an echoed config reproduces a run
byte-for-byte.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from .flux import FLUX_KINDS
from .initial import INIT_KINDS


class ConfigError(Exception):
    """Malformed or invalid configuration."""


@dataclass
class MeshConfig:
    n_bands: int = 16
    n_lon_equator: int = 32
    merge_threshold: float = 0.5


@dataclass
class FluxConfig:
    kind: str = "linear"
    axis: tuple = (0.0, 0.0, 1.0)


@dataclass
class InitConfig:
    kind: str = "gaussian_bump"
    value: float = 1.0
    amplitude: float = 1.0
    amplitude2: float = 0.5
    center_lambda: float = 0.0
    center_phi: float = 0.0
    kappa: float = 8.0
    phi_min: float = -0.4
    phi_max: float = 0.4
    inside: float = 1.0
    outside: float = 0.0


@dataclass
class SchemeSection:
    numerical_flux: str = "godunov"
    order: int = 1
    cfl: float = 0.45
    limiter: str = "minmod"


@dataclass
class TimeConfig:
    t_end: float = 1.0
    n_outputs: int = 4


@dataclass
class OutputConfig:
    directory: str = "out"
    prefix: str = "run"
    dump_mesh: bool = False


@dataclass
class ConvergeConfig:
    resolutions: str = "8x16,16x32,32x64,64x128"


@dataclass
class TorusConfig:
    flux: str = "burgers"
    init: str = "sin"
    value: float = 1.0
    t_end: float = 0.5
    resolutions: str = "64,128,256,512"
    cfl: float = 0.45


@dataclass
class RunConfig:
    mesh: MeshConfig = field(default_factory=MeshConfig)
    flux: FluxConfig = field(default_factory=FluxConfig)
    init: InitConfig = field(default_factory=InitConfig)
    scheme: SchemeSection = field(default_factory=SchemeSection)
    time: TimeConfig = field(default_factory=TimeConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    converge: ConvergeConfig = field(default_factory=ConvergeConfig)
    torus: TorusConfig = field(default_factory=TorusConfig)


_SECTIONS = {
    "mesh": MeshConfig,
    "flux": FluxConfig,
    "init": InitConfig,
    "scheme": SchemeSection,
    "time": TimeConfig,
    "output": OutputConfig,
    "converge": ConvergeConfig,
    "torus": TorusConfig,
}

# keys each command accepts; output.* is always allowed
COMMAND_SECTIONS = {
    "run": ("mesh", "flux", "init", "scheme", "time", "output"),
    "converge": ("mesh", "flux", "init", "scheme", "time", "output", "converge"),
    "check-compat": ("mesh", "flux", "output"),
    "torus": ("torus", "output"),
}


def _parse_value(section_cls, name, raw: str):
    ftypes = {f.name: f for f in fields(section_cls)}
    if name not in ftypes:
        raise ConfigError(f"unknown key {section_cls.__name__}.{name}")
    default = getattr(section_cls(), name)
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            if raw.lower() not in ("true", "false"):
                raise ValueError(raw)
            return raw.lower() == "true"
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            parts = raw.replace(",", " ").split()
            if len(parts) != len(default):
                raise ValueError(raw)
            return tuple(float(p) for p in parts)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


def parse_config(text: str, command: str = "run") -> RunConfig:
    """Parse and validate; raises ConfigError on any problem."""
    if command not in COMMAND_SECTIONS:
        raise ConfigError(f"unknown command {command!r}")
    allowed = COMMAND_SECTIONS[command]
    cfg = RunConfig()
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if "." not in key:
            raise ConfigError(f"line {lineno}: key {key!r} has no section")
        section, _, name = key.partition(".")
        if section not in _SECTIONS:
            raise ConfigError(f"line {lineno}: unknown section {section!r}")
        if section not in allowed:
            raise ConfigError(
                f"line {lineno}: section {section!r} not valid for {command}")
        target = getattr(cfg, section)
        setattr(target, name, _parse_value(type(target), name, raw))
    validate_config(cfg, command)
    return cfg


def validate_config(cfg: RunConfig, command: str):
    m = cfg.mesh
    if command in ("run", "converge", "check-compat"):
        if m.n_bands < 4 or m.n_bands % 2:
            raise ConfigError("mesh.n_bands must be even and >= 4")
        if m.n_lon_equator < 4:
            raise ConfigError("mesh.n_lon_equator must be >= 4")
        if not 0.0 <= m.merge_threshold <= 1.0:
            raise ConfigError("mesh.merge_threshold must lie in [0, 1]")
        allowed_kinds = FLUX_KINDS + ("noncompat-fixture",)
        if cfg.flux.kind not in allowed_kinds:
            raise ConfigError(f"flux.kind must be one of {allowed_kinds}")
        if not any(cfg.flux.axis):
            raise ConfigError("flux.axis must be nonzero")
    if command in ("run", "converge"):
        if cfg.flux.kind == "noncompat-fixture":
            raise ConfigError("the non-compatible fixture cannot be time-stepped")
        if cfg.init.kind not in INIT_KINDS:
            raise ConfigError(f"init.kind must be one of {INIT_KINDS}")
        s = cfg.scheme
        if s.numerical_flux not in ("godunov", "lax_friedrichs"):
            raise ConfigError("scheme.numerical_flux must be godunov|lax_friedrichs")
        if s.order not in (1, 2):
            raise ConfigError("scheme.order must be 1 or 2")
        if not 0.0 < s.cfl <= 1.0:
            raise ConfigError("scheme.cfl must lie in (0, 1]")
        if s.order == 2 and s.cfl > 0.5:
            raise ConfigError("order 2 requires scheme.cfl <= 0.5")
        if s.limiter != "minmod":
            raise ConfigError("scheme.limiter must be minmod")
        if cfg.time.t_end < 0 or not math.isfinite(cfg.time.t_end):
            raise ConfigError("time.t_end must be >= 0")
        if cfg.time.n_outputs < 1:
            raise ConfigError("time.n_outputs must be >= 1")
    if command == "converge":
        if cfg.flux.kind != "linear":
            raise ConfigError("convergence studies need flux.kind = linear "
                              "(exact rotated solution)")
        parse_resolutions(cfg.converge.resolutions)
    if command == "torus":
        if cfg.torus.flux not in ("burgers", "cosine"):
            raise ConfigError("torus.flux must be burgers|cosine")
        if cfg.torus.init not in ("sin", "constant"):
            raise ConfigError("torus.init must be sin|constant")
        if cfg.torus.t_end <= 0:
            raise ConfigError("torus.t_end must be > 0")
        if not 0.0 < cfg.torus.cfl <= 1.0:
            raise ConfigError("torus.cfl must lie in (0, 1]")
        try:
            ns = [int(p) for p in cfg.torus.resolutions.split(",") if p.strip()]
        except ValueError as exc:
            raise ConfigError("torus.resolutions must be comma-separated ints") \
                from exc
        if not ns or any(n < 4 for n in ns):
            raise ConfigError("torus.resolutions must all be >= 4")


def parse_resolutions(spec: str):
    """\"8x16,16x32\" -> [(8, 16), (16, 32)]."""
    out = []
    try:
        for part in spec.split(","):
            part = part.strip()
            if not part:
                continue
            a, _, b = part.partition("x")
            out.append((int(a), int(b)))
    except ValueError as exc:
        raise ConfigError(f"bad resolution list {spec!r}") from exc
    if not out:
        raise ConfigError("empty resolution list")
    return out


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return " ".join(repr(float(p)) for p in v)
    return str(v)


def echo_config(cfg: RunConfig, command: str) -> str:
    """Canonical text of the effective config (defaults applied); parsing it
    back reproduces the run exactly."""
    lines = [f"# effective configuration ({command})"]
    for section in COMMAND_SECTIONS[command]:
        target = getattr(cfg, section)
        for f in fields(type(target)):
            lines.append(f"{section}.{f.name} = "
                         f"{_format_value(getattr(target, f.name))}")
    return "\n".join(lines) + "\n"
