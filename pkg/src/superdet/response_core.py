"""Wightman functions and response functions for a static detector superposed
across two locations, coupled to a massless scalar field in 2+1 dimensions.

Internal units put the propagation speed at 1, so separations are times
(``delta_over_cs``) and gaps ``nu`` are angular frequencies in the inverse of
the same unit. Conversion from laboratory units lives in
:mod:`superdet.analog_params`.

Three independent routes to the off-diagonal response are provided:

* :func:`response_offdiag` -- closed form, ``0.5 * Theta(-nu) * J0(nu * delta)``
* :func:`response_offdiag_numeric_contour` -- trapezoid rule on the
  branch-cut integral after ``z = delta * sin(theta)``
* :func:`response_numeric_epsilon` / :func:`response_epsilon_extrapolated` --
  direct Fourier integral of the i-epsilon regularised Wightman function
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import integrate, special

__all__ = [
    "RegularizedTime",
    "DetectorGeometry",
    "ComponentKind",
    "SwitchingWindow",
    "EPSILON_LADDER",
    "heaviside",
    "sign",
    "bessel_j0",
    "wightman_diagonal",
    "wightman_offdiag",
    "response_diag",
    "response_offdiag",
    "response_component",
    "response_offdiag_numeric_contour",
    "response_numeric_epsilon",
    "response_epsilon_extrapolated",
    "richardson_zero",
    "total_response",
    "diff_response",
    "transition_probability",
    "transition_probability_complex",
    "transition_probability_total",
]

FOUR_PI = 4.0 * math.pi
EPSILON_LADDER: tuple[float, ...] = (1e-2, 1e-3, 1e-4)


class ComponentKind(str, Enum):
    DIAGONAL = "diagonal"
    OFFDIAGONAL = "offdiagonal"


@dataclass(frozen=True)
class RegularizedTime:
    """Proper-time difference ``s`` carrying the ``s -> s - i*epsilon`` shift."""

    s: float | np.ndarray
    epsilon: float

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise ValueError(f"epsilon must be > 0, got {self.epsilon!r}")

    @property
    def shifted(self) -> complex | np.ndarray:
        return np.asarray(self.s, dtype=float) - 1j * self.epsilon


@dataclass(frozen=True)
class DetectorGeometry:
    """Two planar detector positions and the propagation speed.

    ``delta`` is always recomputed from the positions; passing a value that
    disagrees with ``|x1 - x2|`` raises.
    """

    x1: tuple[float, float]
    x2: tuple[float, float]
    c_s: float = 1.0
    delta: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        x1 = tuple(float(v) for v in self.x1)
        x2 = tuple(float(v) for v in self.x2)
        if len(x1) != 2 or len(x2) != 2:
            raise ValueError("detector positions must be 2-d")
        if not all(math.isfinite(v) for v in x1 + x2):
            raise ValueError("detector positions must be finite")
        if not (self.c_s > 0) or not math.isfinite(self.c_s):
            raise ValueError(f"c_s must be finite and > 0, got {self.c_s!r}")
        d = math.hypot(x1[0] - x2[0], x1[1] - x2[1])
        if self.delta is not None and not math.isclose(
            self.delta, d, rel_tol=1e-12, abs_tol=1e-300
        ):
            raise ValueError(f"delta={self.delta!r} disagrees with |x1 - x2| = {d!r}")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)
        object.__setattr__(self, "c_s", float(self.c_s))
        object.__setattr__(self, "delta", d)

    @classmethod
    def from_separation(cls, delta: float, c_s: float = 1.0) -> "DetectorGeometry":
        if delta < 0:
            raise ValueError(f"delta must be >= 0, got {delta!r}")
        return cls((0.0, 0.0), (float(delta), 0.0), c_s)

    @property
    def delta_over_cs(self) -> float:
        return self.delta / self.c_s

    def spectral_argument(self, nu):
        """``x = nu * delta / c_s``, the argument of J0."""
        return np.asarray(nu, dtype=float) * self.delta_over_cs


@dataclass(frozen=True)
class SwitchingWindow:
    """Detector switching function.

    ``constant`` is the infinite-time limit; ``gaussian`` is
    ``exp(-tau**2 / (2 T**2))`` with unit peak.
    """

    shape: str = "constant"
    T: float | None = None

    def __post_init__(self):
        if self.shape == "gaussian":
            if self.T is None or not (self.T > 0):
                raise ValueError(f"gaussian switching needs T > 0, got {self.T!r}")
        elif self.shape == "constant":
            if self.T is not None:
                raise ValueError("constant switching takes no width")
        else:
            raise ValueError(f"unknown switching shape {self.shape!r}")

    def autocorrelation(self, s):
        """``int eta(tau) eta(tau - s) dtau`` for the gaussian window."""
        if self.shape != "gaussian":
            raise ValueError("constant switching has no finite autocorrelation")
        T = self.T
        return T * math.sqrt(math.pi) * np.exp(-np.square(s) / (4.0 * T * T))


def _out(a):
    a = np.asarray(a)
    return a[()] if a.ndim == 0 else a


def heaviside(x):
    """Step function with ``Theta(0) = 1/2``."""
    return _out(np.heaviside(np.asarray(x, dtype=float), 0.5))


def sign(nu):
    """Sign function with ``sgn(0) = 0``."""
    return _out(np.sign(np.asarray(nu, dtype=float)))


def bessel_j0(x):
    """Bessel function of the first kind, order zero.

    Backed by the Cephes rational approximations in :mod:`scipy.special`
    (absolute error below 1e-15 on ``|x| <= 50``). Non-finite input raises.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("bessel_j0 requires finite input")
    return _out(special.j0(x))


def wightman_diagonal(t: RegularizedTime):
    """``(1/4pi) * (-(s - i eps)**2) ** -1/2`` on the principal branch."""
    z = t.shifted
    return _out(1.0 / (FOUR_PI * np.sqrt(-(z * z))))


def wightman_offdiag(t: RegularizedTime, delta_over_cs: float):
    """``(1/4pi) * (delta**2 - (s - i eps)**2) ** -1/2`` on the principal branch.

    ``delta_over_cs`` is the separation expressed as a propagation time.
    """
    if delta_over_cs < 0:
        raise ValueError("delta_over_cs must be >= 0")
    z = t.shifted
    return _out(1.0 / (FOUR_PI * np.sqrt(delta_over_cs * delta_over_cs - z * z)))


def response_diag(nu):
    """Single-location response ``0.5 * Theta(-nu)``."""
    return _out(0.5 * np.asarray(heaviside(-np.asarray(nu, dtype=float))))


def response_offdiag(nu, delta_over_cs: float):
    """Interference response ``0.5 * Theta(-nu) * J0(nu * delta / c_s)``."""
    if delta_over_cs < 0:
        raise ValueError("delta_over_cs must be >= 0")
    nu = np.asarray(nu, dtype=float)
    return _out(0.5 * np.asarray(heaviside(-nu)) * special.j0(nu * delta_over_cs))


def response_component(nu, delta_over_cs: float, kind: ComponentKind | str):
    kind = ComponentKind(kind)
    if kind is ComponentKind.DIAGONAL:
        return response_diag(nu)
    return response_offdiag(nu, delta_over_cs)


def total_response(nu, delta_over_cs: float, single_trajectory: bool = False):
    """``F11 + F12 + F21 + F22 = Theta(-nu) * (1 + J0(nu delta / c_s))``.

    With ``single_trajectory`` the interference terms F12 and F21 are zeroed.
    """
    diag = np.asarray(response_diag(nu))
    off = 0.0 if single_trajectory else np.asarray(response_offdiag(nu, delta_over_cs))
    return _out(diag + off + off + diag)


def diff_response(nu, delta_over_cs: float, single_trajectory: bool = False):
    """``F11 - F12 - F21 + F22 = Theta(-nu) * (1 - J0(nu delta / c_s))``."""
    diag = np.asarray(response_diag(nu))
    off = 0.0 if single_trajectory else np.asarray(response_offdiag(nu, delta_over_cs))
    return _out(diag - off - off + diag)


def response_offdiag_numeric_contour(nu: float, delta_over_cs: float, n_nodes: int = 256) -> float:
    """Branch-cut form of the off-diagonal response by the trapezoid rule.

    After ``z = delta sin(theta)`` the integrand ``exp(-i nu delta sin(theta))``
    is smooth and its even part is symmetric about both endpoints, so the
    trapezoid rule on ``[-pi/2, pi/2]`` converges spectrally.
    """
    if n_nodes < 8:
        raise ValueError(f"n_nodes must be >= 8, got {n_nodes}")
    if delta_over_cs < 0:
        raise ValueError("delta_over_cs must be >= 0")
    gate = float(heaviside(-nu))
    if gate == 0.0:
        return 0.0
    theta = np.linspace(-0.5 * math.pi, 0.5 * math.pi, n_nodes + 1)
    f = np.exp(-1j * nu * delta_over_cs * np.sin(theta))
    h = math.pi / n_nodes
    val = h * (f[1:-1].sum() + 0.5 * (f[0] + f[-1]))
    if abs(val.imag) > 1e-10:
        raise ArithmeticError(f"contour integral has imaginary residue {val.imag:.3e}")
    return gate * val.real / (2.0 * math.pi)


def _breakpoints(center: float, eps: float, lo: float, hi: float) -> list[float]:
    # geometric refinement around the near-singular point, scale eps
    pts = {lo, hi}
    if lo <= center <= hi:
        pts.add(center)
    for k in range(12):
        for d in (-1.0, 1.0):
            p = center + d * eps * 10.0**k
            if lo < p < hi:
                pts.add(p)
    return sorted(pts)


def _fourier_half_line(nu, delta, eps, upper, weight=None):
    """``2 * Re int_0^upper exp(-i nu s) K(s) W(s - i eps) ds``.

    ``W(-s) = conj(W(s))`` for the regularised Wightman function, so the
    two-sided transform is twice the real part of the half-line integral.
    """
    if weight is None:
        weight = lambda s: 1.0  # noqa: E731

    def wfun(s):
        return weight(s) / (FOUR_PI * np.sqrt(delta * delta - (s - 1j * eps) ** 2))

    edge = min(delta + 1.0, upper)
    total = 0.0
    pts = _breakpoints(delta, eps, 0.0, edge)
    re_part = lambda s: (np.exp(-1j * nu * s) * wfun(s)).real  # noqa: E731
    for a, b in zip(pts[:-1], pts[1:]):
        v, _ = integrate.quad(re_part, a, b, limit=200, epsabs=1e-13, epsrel=1e-11)
        total += v
    if upper > edge:
        if nu == 0.0:
            v, _ = integrate.quad(lambda s: wfun(s).real, edge, upper, limit=2000, epsabs=1e-13)
            total += v
        else:
            v1, _ = integrate.quad(
                lambda s: wfun(s).real, edge, upper, weight="cos", wvar=nu, limit=2000, epsabs=1e-13
            )
            v2, _ = integrate.quad(
                lambda s: wfun(s).imag, edge, upper, weight="sin", wvar=nu, limit=2000, epsabs=1e-13
            )
            total += v1 + v2
    return 2.0 * total


def response_numeric_epsilon(
    nu: float, delta_over_cs: float, epsilon: float, t_cutoff: float
) -> float:
    """Regularised Fourier integral of the off-diagonal Wightman function.

    Adaptive Gauss-Kronrod panels resolve the ``epsilon``-wide structure at
    the branch points ``s = +-delta``; the oscillatory bulk up to ``t_cutoff``
    uses QUADPACK's Fourier-weighted rule. Beyond the cutoff the integrand is
    replaced by its leading ``1/s`` asymptote, whose sine integral is exact,
    which removes the ``O(1/(nu t_cutoff))`` truncation ripple.

    For infinite cutoff the result is ``exp(nu * epsilon) * F(nu)``, so the
    bias is linear in ``epsilon`` and is removed by
    :func:`response_epsilon_extrapolated`.
    """
    if not (epsilon > 0):
        raise ValueError(f"epsilon must be > 0, got {epsilon!r}")
    if delta_over_cs < 0:
        raise ValueError("delta_over_cs must be >= 0")
    if t_cutoff < 50.0 * max(delta_over_cs, 1.0):
        raise ValueError(
            f"t_cutoff={t_cutoff!r} too small; need >= 50 * max(delta, 1) = "
            f"{50.0 * max(delta_over_cs, 1.0)!r}"
        )
    bulk = _fourier_half_line(nu, delta_over_cs, epsilon, t_cutoff)
    # tail: W ~ -i sgn(s) / (4 pi |s|)  =>  2 Re part = -(1/2pi) int_T^inf sin(nu s)/s ds
    if nu == 0.0:
        tail = 0.0
    else:
        si, _ = special.sici(abs(nu) * t_cutoff)
        tail = -math.copysign(1.0, nu) * (0.5 * math.pi - si) / (2.0 * math.pi)
    return bulk + tail


def richardson_zero(hs: Sequence[float], values: Sequence[float]) -> float:
    """Neville extrapolation of ``values(h)`` to ``h = 0``."""
    hs = [float(h) for h in hs]
    p = [float(v) for v in values]
    if len(hs) != len(p) or not hs:
        raise ValueError("need matching, non-empty step and value sequences")
    n = len(hs)
    for m in range(1, n):
        for i in range(n - m):
            p[i] = (hs[i] * p[i + 1] - hs[i + m] * p[i]) / (hs[i] - hs[i + m])
    return p[0]


def response_epsilon_extrapolated(
    nu: float,
    delta_over_cs: float,
    t_cutoff: float | None = None,
    ladder: Sequence[float] = EPSILON_LADDER,
) -> float:
    """:func:`response_numeric_epsilon` extrapolated to ``epsilon -> 0+``."""
    if t_cutoff is None:
        t_cutoff = 50.0 * max(delta_over_cs, 1.0)
    vals = [response_numeric_epsilon(nu, delta_over_cs, e, t_cutoff) for e in ladder]
    return richardson_zero(ladder, vals)


def _transition_probability_eps(nu, window, delta, eps):
    T = window.T
    reach = 14.0 * T  # autocorrelation below 1e-21 of its peak
    upper = max(reach, delta + 1.0)

    def wfun(s):
        return window.autocorrelation(s) / (FOUR_PI * np.sqrt(delta * delta - (s - 1j * eps) ** 2))

    def integrand(s):
        return np.exp(-1j * nu * s) * wfun(s)

    re = im = 0.0
    # two-sided, so the imaginary residue is an honest quadrature check
    pos = _breakpoints(delta, eps, 0.0, min(delta + 1.0, upper))
    if pos[-1] < upper:
        step = max(2.0 * math.pi / max(abs(nu), 1e-12), T) if nu else T
        n_extra = max(1, int(math.ceil((upper - pos[-1]) / step)))
        pos += list(np.linspace(pos[-1], upper, n_extra + 1)[1:])
    neg = [-p for p in reversed(pos)]
    for pts in (neg, pos):
        for a, b in zip(pts[:-1], pts[1:]):
            v, _ = integrate.quad(lambda s: integrand(s).real, a, b, limit=400, epsabs=1e-13, epsrel=1e-11)
            w, _ = integrate.quad(lambda s: integrand(s).imag, a, b, limit=400, epsabs=1e-13, epsrel=1e-11)
            re += v
            im += w
    return complex(re, im)


def transition_probability_complex(
    nu: float,
    window: SwitchingWindow,
    geom: DetectorGeometry,
    component: ComponentKind | str = ComponentKind.OFFDIAGONAL,
    ladder: Sequence[float] = EPSILON_LADDER,
) -> complex:
    """Raw epsilon-extrapolated ``P_ij`` including its imaginary residue."""
    if window.shape != "gaussian":
        raise ValueError("transition probability needs a gaussian switching window")
    kind = ComponentKind(component)
    delta = geom.delta_over_cs if kind is ComponentKind.OFFDIAGONAL else 0.0
    vals = [_transition_probability_eps(nu, window, delta, e) for e in ladder]
    re = richardson_zero(ladder, [v.real for v in vals])
    im = richardson_zero(ladder, [v.imag for v in vals])
    return complex(re, im)


def transition_probability(
    nu: float,
    window: SwitchingWindow,
    geom: DetectorGeometry,
    component: ComponentKind | str = ComponentKind.OFFDIAGONAL,
    ladder: Sequence[float] = EPSILON_LADDER,
) -> float:
    """Finite-window component ``P_ij(nu)`` with the coupling stripped.

    The stationary double integral collapses to
    ``int ds K(s) exp(-i nu s) W(s)`` with the gaussian autocorrelation
    ``K(s) = T sqrt(pi) exp(-s**2 / 4T**2)``. ``P / (T sqrt(pi))`` tends to the
    constant-switching response as ``T`` grows.

    The diagonal component is a probability density and is non-negative;
    values within quadrature noise of zero are returned as 0.0. The
    off-diagonal component is an interference term and keeps its sign.
    """
    val = transition_probability_complex(nu, window, geom, component, ladder)
    peak = window.T * math.sqrt(math.pi)
    if abs(val.imag) > 1e-8 * max(abs(val.real), 1e-6 * peak):
        raise ArithmeticError(f"imaginary residue {val.imag:.3e} exceeds tolerance")
    if ComponentKind(component) is ComponentKind.DIAGONAL:
        return _nonnegative(val.real, peak)
    return val.real


def _nonnegative(value: float, peak: float) -> float:
    if value < -1e-9 * peak:
        raise ArithmeticError(f"negative transition probability {value:.3e}")
    return max(value, 0.0)


def transition_probability_total(
    nu: float,
    window: SwitchingWindow,
    geom: DetectorGeometry,
    coupling: float = 1.0,
    ladder: Sequence[float] = EPSILON_LADDER,
) -> float:
    """Detector excitation probability ``(lambda**2 / 4) * sum_ij P_ij``.

    ``coupling`` (lambda) is an overall scale with no physical value fixed
    here. The sum is ``2 P_11 + 2 P_12`` for the symmetric static pair.
    """
    p_d = transition_probability(nu, window, geom, ComponentKind.DIAGONAL, ladder)
    p_od = transition_probability(nu, window, geom, ComponentKind.OFFDIAGONAL, ladder)
    peak = window.T * math.sqrt(math.pi)
    return 0.25 * coupling * coupling * _nonnegative(2.0 * p_d + 2.0 * p_od, peak)
