"""Run configuration: an INI file with four optional sections.

::

    [physical]
    preset = cs133          ; or give m, rho0, omega0, beam_radius explicitly
    g2d = 1.0e-43           ; J m^2, required for c_s
    alphaR = ...            ; with alpha, required for mu_sq = physical
    alpha = ...

    [geometry]
    x1 = 0.0, 0.0           ; or: delta = 1.0
    x2 = 1.0, 0.0
    c_s = 1.0               ; overrides the condensate sound speed

    [detection]
    mu_sq = sql             ; sql | squeezed | physical | <float>
    delta_lo = 1.0
    band_min = -2.0
    band_max = 1.0
    grid_size = 60
    single_trajectory = false

    [simulate]
    seed = 42
    n_samples = 1048576
    sample_rate = 2.0
    segments = 256
    branch = both           ; sum | difference | both

Unknown sections or keys are rejected. Floats are written with 17
significant digits so parse -> serialize -> parse is the identity.
"""
from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field, fields, replace

from .analog_params import PRESETS, CondensateLaserParams, coupling_mu_sq, sound_speed
from .detection_model import MU_SQ_SQL
from .response_core import DetectorGeometry


class ConfigError(ValueError):
    pass


def _float(section, key, raw):
    try:
        v = float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"[{section}] {key}: must be finite, got {raw!r}")
    return v


def _int(section, key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected an integer, got {raw!r}") from None


def _bool(section, key, raw):
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"[{section}] {key}: expected true/false, got {raw!r}")


def _vec2(section, key, raw):
    parts = [p for p in raw.replace(",", " ").split()]
    if len(parts) != 2:
        raise ConfigError(f"[{section}] {key}: expected two comma-separated numbers, got {raw!r}")
    return tuple(_float(section, key, p) for p in parts)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


@dataclass(frozen=True)
class PhysicalSection:
    preset: str | None = None
    m: float | None = None
    rho0: float | None = None
    g2d: float | None = None
    omega0: float | None = None
    alphaR: float | None = None
    alpha: float | None = None
    beam_radius: float | None = None

    def params(self) -> CondensateLaserParams:
        given = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "preset"}
        given = {k: v for k, v in given.items() if v is not None}
        if self.preset is not None:
            return PRESETS[self.preset](**given)
        for name in ("m", "rho0", "omega0", "beam_radius"):
            if name not in given:
                raise ConfigError(f"[physical] {name}: required physical constant is missing")
        return CondensateLaserParams(**given)


@dataclass(frozen=True)
class GeometrySection:
    x1: tuple[float, float] | None = None
    x2: tuple[float, float] | None = None
    delta: float | None = None
    c_s: float | None = None


@dataclass(frozen=True)
class DetectionSection:
    mu_sq: str | float = "sql"
    delta_lo: float = 1.0
    band_min: float = -2.0
    band_max: float = 1.0
    grid_size: int = 60
    single_trajectory: bool = False


@dataclass(frozen=True)
class SimulateSection:
    seed: int = 42
    n_samples: int = 1 << 20
    sample_rate: float = 2.0
    segments: int = 256
    branch: str = "both"


_MU_KEYWORDS = ("sql", "squeezed", "physical")
_BRANCHES = ("sum", "difference", "both")


@dataclass(frozen=True)
class RunConfig:
    physical: PhysicalSection | None = None
    geometry: GeometrySection = field(default_factory=GeometrySection)
    detection: DetectionSection = field(default_factory=DetectionSection)
    simulate: SimulateSection = field(default_factory=SimulateSection)

    def __post_init__(self):
        _validate(self)

    # -- derived quantities -------------------------------------------------
    def condensate(self) -> CondensateLaserParams | None:
        return None if self.physical is None else self.physical.params()

    def build_geometry(self) -> DetectorGeometry:
        g = self.geometry
        if g.c_s is not None:
            c_s = g.c_s
        elif self.physical is not None:
            c_s = sound_speed(self.condensate())
        else:
            c_s = 1.0
        if g.x1 is not None:
            return DetectorGeometry(g.x1, g.x2, c_s, g.delta)
        return DetectorGeometry.from_separation(1.0 if g.delta is None else g.delta, c_s)

    @property
    def squeezed(self) -> bool:
        return self.detection.mu_sq == "squeezed"

    def mu_sq_value(self) -> float:
        mu = self.detection.mu_sq
        if mu in ("sql", "squeezed"):
            return MU_SQ_SQL
        if mu == "physical":
            if self.physical is None:
                raise ConfigError("[detection] mu_sq = physical needs a [physical] section")
            return coupling_mu_sq(self.condensate())
        return float(mu)

    # -- serialisation ------------------------------------------------------
    def to_ini(self) -> str:
        lines = []
        sections = [("physical", self.physical), ("geometry", self.geometry),
                    ("detection", self.detection), ("simulate", self.simulate)]
        for name, sec in sections:
            if sec is None:
                continue
            lines.append(f"[{name}]")
            for f in fields(sec):
                v = getattr(sec, f.name)
                if v is not None:
                    lines.append(f"{f.name} = {_fmt(v)}")
            lines.append("")
        return "\n".join(lines)

    def digest(self) -> str:
        return hashlib.sha256(self.to_ini().encode("utf-8")).hexdigest()

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, simulate=replace(self.simulate, seed=seed))


def _validate(cfg: RunConfig):
    g = cfg.geometry
    if (g.x1 is None) != (g.x2 is None):
        raise ConfigError("[geometry] x1 and x2 must be given together")
    if g.delta is not None and g.delta < 0:
        raise ConfigError("[geometry] delta: must be >= 0")
    if g.c_s is not None and not g.c_s > 0:
        raise ConfigError("[geometry] c_s: must be > 0")
    if g.x1 is not None and g.delta is not None:
        d = math.hypot(g.x1[0] - g.x2[0], g.x1[1] - g.x2[1])
        if not math.isclose(d, g.delta, rel_tol=1e-12, abs_tol=1e-300):
            raise ConfigError(f"[geometry] delta: {g.delta!r} disagrees with |x1 - x2| = {d!r}")
    p = cfg.physical
    if p is not None and p.preset is not None and p.preset not in PRESETS:
        raise ConfigError(f"[physical] preset: unknown preset {p.preset!r}; known: {sorted(PRESETS)}")
    d = cfg.detection
    if isinstance(d.mu_sq, str):
        if d.mu_sq not in _MU_KEYWORDS:
            raise ConfigError(f"[detection] mu_sq: expected a number or one of {_MU_KEYWORDS}, got {d.mu_sq!r}")
    elif not d.mu_sq > 0:
        raise ConfigError("[detection] mu_sq: must be > 0")
    if not d.delta_lo > 0:
        raise ConfigError("[detection] delta_lo: must be > 0")
    if not d.band_min < d.band_max:
        raise ConfigError("[detection] band_min must be < band_max")
    if d.grid_size < 2:
        raise ConfigError("[detection] grid_size: must be >= 2")
    s = cfg.simulate
    n = s.n_samples
    if n < 16 or n & (n - 1):
        raise ConfigError(f"[simulate] n_samples: must be a power of two >= 16, got {n}")
    if not s.sample_rate > 0:
        raise ConfigError("[simulate] sample_rate: must be > 0")
    if s.segments < 1:
        raise ConfigError("[simulate] segments: must be >= 1")
    if s.seed < 0:
        raise ConfigError("[simulate] seed: must be >= 0")
    if s.branch not in _BRANCHES:
        raise ConfigError(f"[simulate] branch: expected one of {_BRANCHES}, got {s.branch!r}")


_SCHEMA = {
    "physical": (PhysicalSection, {
        "preset": str, "m": _float, "rho0": _float, "g2d": _float, "omega0": _float,
        "alphaR": _float, "alpha": _float, "beam_radius": _float,
    }),
    "geometry": (GeometrySection, {"x1": _vec2, "x2": _vec2, "delta": _float, "c_s": _float}),
    "detection": (DetectionSection, {
        "mu_sq": "mu", "delta_lo": _float, "band_min": _float, "band_max": _float,
        "grid_size": _int, "single_trajectory": _bool,
    }),
    "simulate": (SimulateSection, {
        "seed": _int, "n_samples": _int, "sample_rate": _float, "segments": _int, "branch": str,
    }),
}


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # keys are case-sensitive (alphaR)
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from None
    unknown = [s for s in cp.sections() if s not in _SCHEMA]
    if unknown:
        raise ConfigError(f"unknown section(s): {unknown}")
    kwargs = {}
    for name in cp.sections():
        cls, keys = _SCHEMA[name]
        values = {}
        for key, raw in cp.items(name):
            if key not in keys:
                raise ConfigError(f"[{name}] {key}: unknown key")
            conv = keys[key]
            if conv is str:
                values[key] = raw.strip()
            elif conv == "mu":
                low = raw.strip().lower()
                values[key] = low if low in _MU_KEYWORDS else _float(name, key, raw)
            else:
                values[key] = conv(name, key, raw)
        kwargs[name] = cls(**values)
    return RunConfig(**kwargs)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
