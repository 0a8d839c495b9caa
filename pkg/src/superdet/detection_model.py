"""Heterodyne readout model: added noise, standard quantum limit, PSDs, SNR
and the sum-minus-difference superposition witness.

Spectra are in units of the shot-noise-normalised heterodyne PSD, i.e.
``S = (mu^2 / 2) * (F + N)`` with ``F`` a response function and ``N`` the
added noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .response_core import DetectorGeometry, diff_response, sign, total_response

MU_SQ_SQL = 2.0 * math.sqrt(2.0 / 3.0)
SQL_FLOOR = math.sqrt(1.5) - 1.0
SQUEEZED_FLOOR = (math.sqrt(10.0) - 2.0) / 6.0


class Branch(str, Enum):
    SUM = "sum"
    DIFFERENCE = "difference"


class NoSignalError(ValueError):
    """Raised for nu >= 0, where the vacuum gives no de-excitation signal."""


def _check_mu_sq(mu_sq):
    if not np.all(np.asarray(mu_sq) > 0):
        raise ValueError(f"mu_sq must be > 0, got {mu_sq!r}")


@dataclass(frozen=True)
class NoiseBudget:
    """Added-noise terms at coupling ``mu_sq``.

    ``squeezed_floor`` replaces the whole nu < 0 total when set; nu > 0 keeps
    the unsqueezed value.
    """

    mu_sq: float
    squeezed_floor: float | None = None

    def __post_init__(self):
        _check_mu_sq(self.mu_sq)

    @property
    def imprecision(self) -> float:
        return 1.0 / self.mu_sq

    @property
    def backaction(self) -> float:
        return 3.0 * self.mu_sq / 8.0

    def cross(self, nu):
        return sign(nu)

    def total(self, nu):
        nu = np.asarray(nu, dtype=float)
        out = self.imprecision + self.backaction + np.asarray(self.cross(nu), dtype=float)
        if self.squeezed_floor is not None:
            out = np.where(nu < 0, self.squeezed_floor, out)
        return out[()] if out.ndim == 0 else out


def added_noise(nu, mu_sq):
    """``1/mu^2 + 3 mu^2 / 8 + sgn(nu)``: shot noise, backaction-backaction and
    backaction-imprecision correlations."""
    _check_mu_sq(mu_sq)
    mu_sq = np.asarray(mu_sq, dtype=float)
    out = 1.0 / mu_sq + 3.0 * mu_sq / 8.0 + np.asarray(sign(nu))
    return out[()] if np.ndim(out) == 0 else out


def _exact_added_noise(u: float) -> Fraction:
    # exact rational evaluation; in floats the minimum is flat below ~5e-8
    q = Fraction(u)
    return 1 / q + Fraction(3, 8) * q


def golden_section_min(f, lo: float, hi: float, tol: float = 1e-15) -> float:
    """Golden-section search for the minimiser of a unimodal ``f`` on ``[lo, hi]``."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol * max(1.0, abs(a) + abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
        if not a < c < d < b:
            break
    return 0.5 * (a + b)


@dataclass(frozen=True)
class SqlResult:
    mu_sq_opt: float
    noise_at_opt_neg: float
    noise_at_opt_pos: float
    mu_sq_numeric: float
    curvature: float


def sql_optimize(bracket: tuple[float, float] = (1e-3, 1e3)) -> SqlResult:
    """Minimise ``1/mu^2 + 3 mu^2 / 8`` in closed form and by golden section.

    Raises if the two disagree by more than 1e-8.
    """
    closed = MU_SQ_SQL
    numeric = golden_section_min(_exact_added_noise, *bracket)
    if abs(numeric - closed) > 1e-8:
        raise ArithmeticError(f"golden section {numeric!r} disagrees with closed form {closed!r}")
    floor = 1.0 / closed + 3.0 * closed / 8.0
    return SqlResult(
        mu_sq_opt=closed,
        noise_at_opt_neg=floor - 1.0,
        noise_at_opt_pos=floor + 1.0,
        mu_sq_numeric=numeric,
        curvature=2.0 / closed**3,
    )


@dataclass(frozen=True)
class SqueezedFloor:
    floor: float
    sql_floor: float
    improvement: float


def squeezed_noise_floor() -> SqueezedFloor:
    """nu < 0 noise floor ``(sqrt(10) - 2) / 6`` for ~3 dB squeezed probe light,
    and its fractional improvement over the SQL floor ``sqrt(3/2) - 1``."""
    return SqueezedFloor(SQUEEZED_FLOOR, SQL_FLOOR, 1.0 - SQUEEZED_FLOOR / SQL_FLOOR)


def noise_budget(mu_sq: float, squeezed: bool = False) -> NoiseBudget:
    return NoiseBudget(mu_sq, SQUEEZED_FLOOR if squeezed else None)


@dataclass(frozen=True)
class PsdModel:
    branch: Branch
    mu_sq: float
    geometry: DetectorGeometry
    delta_lo: float = 1.0
    squeezed: bool = False
    single_trajectory: bool = False

    def __post_init__(self):
        object.__setattr__(self, "branch", Branch(self.branch))
        _check_mu_sq(self.mu_sq)
        if not (self.delta_lo > 0):
            raise ValueError(f"delta_lo must be > 0, got {self.delta_lo!r}")

    @property
    def budget(self) -> NoiseBudget:
        return noise_budget(self.mu_sq, self.squeezed)

    def response(self, nu):
        fn = total_response if self.branch is Branch.SUM else diff_response
        return fn(nu, self.geometry.delta_over_cs, self.single_trajectory)

    def __call__(self, nu):
        return 0.5 * self.mu_sq * (np.asarray(self.response(nu)) + np.asarray(self.budget.total(nu)))

    def with_branch(self, branch) -> "PsdModel":
        return PsdModel(
            Branch(branch), self.mu_sq, self.geometry, self.delta_lo, self.squeezed, self.single_trajectory
        )


def psd(
    branch,
    nu,
    mu_sq: float,
    geom: DetectorGeometry,
    squeezed: bool = False,
    single_trajectory: bool = False,
):
    """Heterodyne PSD at analysis frequency ``Delta_LO - nu``:
    ``(mu^2 / 2) * (F_branch(nu) + N(nu; mu^2))``."""
    out = PsdModel(branch, mu_sq, geom, squeezed=squeezed, single_trajectory=single_trajectory)(nu)
    return out[()] if np.ndim(out) == 0 else out


def snr(nu, geom: DetectorGeometry, squeezed: bool = True):
    """``F(nu) / N_floor`` on the de-excitation side.

    The floor is ``(sqrt(10) - 2) / 6`` with squeezing and ``sqrt(3/2) - 1``
    (SQL) without.
    """
    nu_arr = np.asarray(nu, dtype=float)
    if np.any(nu_arr >= 0):
        raise NoSignalError("no de-excitation signal for nu >= 0")
    floor = SQUEEZED_FLOOR if squeezed else SQL_FLOOR
    out = np.asarray(total_response(nu_arr, geom.delta_over_cs)) / floor
    return out[()] if out.ndim == 0 else out


def witness(nu, mu_sq: float, geom: DetectorGeometry, single_trajectory: bool = False):
    """Sum-branch minus difference-branch PSD.

    The added noise enters both branches identically and cancels, leaving
    ``mu^2 * Theta(-nu) * J0(nu delta / c_s)``.
    """
    s = psd(Branch.SUM, nu, mu_sq, geom, single_trajectory=single_trajectory)
    d = psd(Branch.DIFFERENCE, nu, mu_sq, geom, single_trajectory=single_trajectory)
    out = np.asarray(s) - np.asarray(d)
    return out[()] if out.ndim == 0 else out


def heterodyne_frequency_map(nu, delta_lo: float):
    """Detector gap -> heterodyne analysis frequency ``Delta_LO - nu``.

    The map is an involution, so the same call inverts it.
    """
    if not (delta_lo > 0):
        raise ValueError(f"delta_lo must be > 0, got {delta_lo!r}")
    out = delta_lo - np.asarray(nu, dtype=float)
    return out[()] if out.ndim == 0 else out


def band_min_snr(nu_min: float, geom: DetectorGeometry, squeezed: bool = True, n: int = 2001):
    """Minimum SNR over ``[nu_min, 0)`` and the gap where it occurs."""
    if not nu_min < 0:
        raise NoSignalError("band does not intersect nu < 0")
    grid = nu_min * (1.0 - np.arange(n) / n)
    vals = snr(grid, geom, squeezed)
    i = int(np.argmin(vals))
    return float(vals[i]), float(grid[i])
