"""Condensate and probe-laser parameters mapped onto the analogue field theory.

All quantities are SI. The sound speed ``c_s = sqrt(g2d * rho0 / m)`` holds as
written in SI (``g2d`` in J m^2). The coupling ``mu`` is evaluated exactly as
``-|alpha_R| * omega0 * sqrt(2 m rho0) * alpha`` in units with hbar = 1; the
caller supplies ``alphaR`` in those units so that ``mu`` is dimensionless.
No hbar factor is inserted because none is fixed by the model.

``E0(omega) = sqrt(omega / (4 pi eps0 A_perp))`` is exposed for reference
only. Nothing downstream consumes it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .response_core import DetectorGeometry

ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg
CS133_MASS = 132.905451933 * ATOMIC_MASS_UNIT
VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m


class DegenerateMediumError(ValueError):
    """Zero scattering strength: no sound speed, so nu * delta / c_s is undefined."""


class MissingParameterError(ValueError):
    def __init__(self, name: str):
        super().__init__(f"required physical parameter {name!r} is not set")
        self.name = name


@dataclass(frozen=True)
class CondensateLaserParams:
    """BEC species and probe-laser constants.

    ``g2d``, ``alphaR`` and ``alpha`` may be left as ``None``; the functions
    that need them raise :class:`MissingParameterError` naming the field.
    """

    m: float
    rho0: float
    omega0: float
    beam_radius: float
    g2d: float | None = None
    alphaR: float | None = None
    alpha: float | None = None

    def __post_init__(self):
        for name in ("m", "rho0", "omega0", "beam_radius"):
            v = getattr(self, name)
            if v is None:
                raise MissingParameterError(name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")
        if self.g2d is not None and not (math.isfinite(self.g2d) and self.g2d >= 0):
            raise ValueError(f"g2d must be finite and >= 0, got {self.g2d!r}")
        for name in ("alphaR", "alpha"):
            v = getattr(self, name)
            if v is not None and not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")

    def require(self, name: str) -> float:
        v = getattr(self, name)
        if v is None:
            raise MissingParameterError(name)
        return v

    @property
    def beam_area(self) -> float:
        return math.pi * self.beam_radius**2

    def with_(self, **changes) -> "CondensateLaserParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def cs133_preset(**overrides) -> CondensateLaserParams:
    """Cs-133 pancake BEC, rho0 = 1e3 um^-2, omega0 / 2pi = 1e14 Hz, r0 = 3 um.

    ``g2d``, ``alphaR`` and ``alpha`` stay unset unless given here.
    """
    base = dict(
        m=CS133_MASS,
        rho0=1e3 * 1e12,
        omega0=2.0 * math.pi * 1e14,
        beam_radius=3e-6,
    )
    base.update(overrides)
    return CondensateLaserParams(**base)


PRESETS = {"cs133": cs133_preset}


def sound_speed(p: CondensateLaserParams) -> float:
    g2d = p.require("g2d")
    if g2d == 0:
        raise DegenerateMediumError("g2d = 0 gives zero sound speed (degenerate medium)")
    return math.sqrt(g2d * p.rho0 / p.m)


def coupling_mu(p: CondensateLaserParams) -> float:
    alphaR = p.require("alphaR")
    alpha = p.require("alpha")
    return -abs(alphaR) * p.omega0 * math.sqrt(2.0 * p.m * p.rho0) * alpha


def coupling_mu_sq(p: CondensateLaserParams) -> float:
    return coupling_mu(p) ** 2


def field_amplitude(p: CondensateLaserParams, omega: float | None = None) -> float:
    """``E0(omega) = sqrt(omega / (4 pi eps0 A_perp))``; reference value only."""
    omega = p.omega0 if omega is None else omega
    return math.sqrt(omega / (4.0 * math.pi * VACUUM_PERMITTIVITY * p.beam_area))


def density_to_field(p: CondensateLaserParams, delta_rho):
    """Analogue field ``phi = delta_rho / (2 sqrt(m rho0))``."""
    return np.asarray(delta_rho) / (2.0 * math.sqrt(p.m * p.rho0))


def dimensionless_frequency(nu, geom: DetectorGeometry):
    """``x = nu * delta / c_s``."""
    return np.asarray(nu, dtype=float) * (geom.delta / geom.c_s)


def frequency_from_dimensionless(x, geom: DetectorGeometry):
    """Inverse of :func:`dimensionless_frequency`; needs ``delta > 0``."""
    if geom.delta == 0:
        raise ValueError("x = 0 for every nu when delta = 0; inverse undefined")
    return np.asarray(x, dtype=float) * (geom.c_s / geom.delta)
