"""Time-domain Monte-Carlo check of the analytic spectra.

Records are complex baseband series synthesised in the frequency domain:
every FFT bin gets an independent complex Gaussian amplitude shaped by the
target spectrum, so the record is a stationary Gaussian process whose
two-point function is the target. Complex baseband lets the spectrum differ
between positive and negative frequencies, as the ``sgn(nu)`` noise term
requires. The heterodyne shift ``Delta_LO`` is a relabelling and is never
simulated.

Conventions
-----------
* FFT bin ``k`` at ordinary frequency ``f_k`` carries the detector gap
  ``nu = 2 pi f_k`` (time unit of ``1 / sample_rate``).
* Densities are two-sided, per unit ordinary frequency: white noise of unit
  variance reads ``1 / sample_rate`` and the band integral of any estimate
  equals the record variance.
* Random draws come from Philox streams spawned per block of bins from one
  master :class:`numpy.random.SeedSequence`, so output depends only on the
  seed, never on the number of workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .detection_model import Branch, PsdModel
from .response_core import response_diag, response_offdiag

BLOCK = 1 << 14  # bins per independent RNG stream
PSD_TOL = 1e-12


class SpectralModelError(ValueError):
    """Target spectrum is not positive semidefinite."""


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def frequency_grid(n_samples: int, sample_rate: float) -> np.ndarray:
    """Angular gap of every FFT bin, in FFT order."""
    return 2.0 * math.pi * np.fft.fftfreq(n_samples, d=1.0 / sample_rate)


@dataclass(frozen=True)
class SpectralMatrix:
    """Per-bin 2x2 cross-spectral matrix ``[[F_d, F_od], [F_od, F_d]]``."""

    nu: np.ndarray
    diag: np.ndarray
    offdiag: np.ndarray

    @classmethod
    def from_response(cls, nu, delta_over_cs: float, single_trajectory: bool = False):
        nu = np.asarray(nu, dtype=float)
        d = np.asarray(response_diag(nu), dtype=float) * np.ones_like(nu)
        if single_trajectory:
            od = np.zeros_like(nu)
        else:
            od = np.asarray(response_offdiag(nu, delta_over_cs), dtype=float) * np.ones_like(nu)
        return cls(nu, d, od)

    @classmethod
    def on_grid(cls, n_samples, sample_rate, delta_over_cs, single_trajectory=False):
        return cls.from_response(frequency_grid(n_samples, sample_rate), delta_over_cs, single_trajectory)

    def eigenvalues(self) -> tuple[np.ndarray, np.ndarray]:
        return self.diag - np.abs(self.offdiag), self.diag + np.abs(self.offdiag)

    def cholesky(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Lower factor ``[[l11, 0], [l21, l22]]`` per bin.

        Semidefinite bins are handled by clamping round-off to zero; a zero
        leading entry forces a zero column (the only PSD completion).
        """
        lo, _ = self.eigenvalues()
        bad = lo < -PSD_TOL
        if np.any(bad):
            i = int(np.argmax(bad))
            raise SpectralModelError(
                f"negative eigenvalue {lo[i]:.3e} at nu={self.nu[i]:.6g}: invalid response model"
            )
        a = np.clip(self.diag, 0.0, None)
        b = self.offdiag
        l11 = np.sqrt(a)
        with np.errstate(divide="ignore", invalid="ignore"):
            l21 = np.where(l11 > 0, b / np.where(l11 > 0, l11, 1.0), 0.0)
        l22 = np.sqrt(np.clip(a - l21 * l21, 0.0, None))
        return l11, l21, l22


@dataclass(frozen=True)
class TimeSeries:
    data: np.ndarray
    sample_rate: float
    seed: int | None = None

    def __post_init__(self):
        if not _is_pow2(self.data.size):
            raise ValueError(f"n_samples must be a power of two, got {self.data.size}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("record contains non-finite samples")

    @property
    def n_samples(self) -> int:
        return self.data.size


@dataclass(frozen=True)
class TimeSeriesPair:
    first: np.ndarray
    second: np.ndarray
    sample_rate: float
    seed: int | None = None

    def __post_init__(self):
        for rec in (self.first, self.second):
            TimeSeries(rec, self.sample_rate)
        if self.first.size != self.second.size:
            raise ValueError("records differ in length")

    @property
    def n_samples(self) -> int:
        return self.first.size

    def records(self) -> tuple[TimeSeries, TimeSeries]:
        return TimeSeries(self.first, self.sample_rate, self.seed), TimeSeries(
            self.second, self.sample_rate, self.seed
        )


def complex_normals(seed: int, n_bins: int, n_streams: int = 1, workers: int = 1) -> np.ndarray:
    """``(n_streams, n_bins)`` circular complex normals with ``E|z|^2 = 1``."""
    n_blocks = -(-n_bins // BLOCK)
    children = np.random.SeedSequence(seed).spawn(n_blocks)

    def draw(i):
        size = min(BLOCK, n_bins - i * BLOCK)
        g = np.random.Generator(np.random.Philox(children[i]))
        re_im = g.standard_normal((n_streams, size, 2))
        return (re_im[..., 0] + 1j * re_im[..., 1]) / math.sqrt(2.0)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            blocks = list(ex.map(draw, range(n_blocks)))
    else:
        blocks = [draw(i) for i in range(n_blocks)]
    return np.concatenate(blocks, axis=1)


def _check_record_shape(n_samples, sample_rate):
    if not _is_pow2(n_samples):
        raise ValueError(f"n_samples must be a power of two, got {n_samples}")
    if not (sample_rate > 0):
        raise ValueError(f"sample_rate must be > 0, got {sample_rate!r}")


def synthesize_field_pair(
    spec: SpectralMatrix, n_samples: int, sample_rate: float, seed: int, workers: int = 1
) -> TimeSeriesPair:
    """Two field records whose auto- and cross-spectra follow ``spec``."""
    _check_record_shape(n_samples, sample_rate)
    if spec.nu.shape != (n_samples,) or not np.allclose(spec.nu, frequency_grid(n_samples, sample_rate)):
        raise ValueError("spectral matrix is not sampled on this record's FFT grid")
    l11, l21, l22 = spec.cholesky()
    z = complex_normals(seed, n_samples, 2, workers)
    scale = math.sqrt(n_samples * sample_rate)
    x1 = np.fft.ifft(scale * l11 * z[0])
    x2 = np.fft.ifft(scale * (l21 * z[0] + l22 * z[1]))
    return TimeSeriesPair(x1, x2, sample_rate, seed)


def synthesize_from_psd(
    target: np.ndarray, n_samples: int, sample_rate: float, seed: int, workers: int = 1
) -> TimeSeries:
    """Single record with two-sided density ``target`` (FFT order)."""
    _check_record_shape(n_samples, sample_rate)
    target = np.asarray(target, dtype=float)
    if target.shape != (n_samples,):
        raise ValueError("target spectrum does not match record length")
    if np.any(target < -PSD_TOL):
        raise SpectralModelError(f"negative target density {target.min():.3e}")
    z = complex_normals(seed, n_samples, 1, workers)[0]
    amp = np.sqrt(np.clip(target, 0.0, None) * n_samples * sample_rate)
    return TimeSeries(np.fft.ifft(amp * z), sample_rate, seed)


def synthesize_photocurrent(
    branch, model: PsdModel, n_samples: int, sample_rate: float, seed: int, workers: int = 1
) -> TimeSeries:
    """Baseband heterodyne record for the ``sum`` or ``difference`` output."""
    model = model.with_branch(Branch(branch))
    target = np.asarray(model(frequency_grid(n_samples, sample_rate)))
    return synthesize_from_psd(target, n_samples, sample_rate, seed, workers)


@dataclass(frozen=True)
class PsdEstimate:
    """Welch estimate on an ascending two-sided frequency grid.

    ``stderr`` uses the Welch variance for 50 %-overlapped Hann segments,
    ``(1 + 2 (1 - 1/K) rho) / K`` with ``rho = 1/36``, i.e. slightly above
    ``estimate / sqrt(K)``.
    """

    freq: np.ndarray
    estimate: np.ndarray
    n_segments: int
    segment_len: int
    sample_rate: float
    variance_factor: float

    @property
    def nu(self) -> np.ndarray:
        return 2.0 * math.pi * self.freq

    @property
    def df(self) -> float:
        return self.sample_rate / self.segment_len

    @property
    def stderr(self) -> np.ndarray:
        return np.abs(self.estimate) * math.sqrt(self.variance_factor)

    def band_power(self) -> float:
        return float(np.sum(self.estimate.real) * self.df)


def segment_count(n_samples: int, segment_len: int) -> int:
    return (n_samples - segment_len) // (segment_len // 2) + 1


def segment_length_for(n_samples: int, min_segments: int) -> int:
    """Longest power-of-two segment giving at least ``min_segments`` at 50 % overlap."""
    L = n_samples
    while L >= 8 and segment_count(n_samples, L) < min_segments:
        L //= 2
    if L < 8:
        raise ValueError(f"cannot fit {min_segments} segments into {n_samples} samples")
    return L


def _overlap_variance_factor(segment_len: int, n_segments: int) -> float:
    w = signal.get_window("hann", segment_len)
    step = segment_len // 2
    c = np.dot(w[step:], w[: segment_len - step]) / np.dot(w, w)
    rho = c * c
    return (1.0 + 2.0 * (1.0 - 1.0 / n_segments) * rho) / n_segments if n_segments > 1 else 1.0


def _check_segment(record: TimeSeries, segment_len: int):
    if segment_len > record.n_samples:
        raise ValueError(f"segment_len {segment_len} exceeds record length {record.n_samples}")
    if not _is_pow2(segment_len):
        raise ValueError(f"segment_len must be a power of two, got {segment_len}")


def welch_psd(record: TimeSeries, segment_len: int) -> PsdEstimate:
    """Hann-windowed, 50 %-overlapped, averaged periodogram (density scaling)."""
    _check_segment(record, segment_len)
    f, p = signal.welch(
        record.data,
        fs=record.sample_rate,
        window="hann",
        nperseg=segment_len,
        noverlap=segment_len // 2,
        detrend=False,
        return_onesided=False,
        scaling="density",
    )
    k = segment_count(record.n_samples, segment_len)
    order = np.argsort(f, kind="stable")
    est = PsdEstimate(
        f[order], p[order], k, segment_len, record.sample_rate, _overlap_variance_factor(segment_len, k)
    )
    assert np.all(est.estimate >= 0), "Welch estimate went negative"
    return est


def welch_csd(first: TimeSeries, second: TimeSeries, segment_len: int) -> PsdEstimate:
    """Cross-spectral density ``E[conj(X1) X2]`` with the same segmentation."""
    _check_segment(first, segment_len)
    f, p = signal.csd(
        first.data,
        second.data,
        fs=first.sample_rate,
        window="hann",
        nperseg=segment_len,
        noverlap=segment_len // 2,
        detrend=False,
        return_onesided=False,
        scaling="density",
    )
    k = segment_count(first.n_samples, segment_len)
    order = np.argsort(f, kind="stable")
    return PsdEstimate(
        f[order], p[order], k, segment_len, first.sample_rate, _overlap_variance_factor(segment_len, k)
    )


def discontinuity_guard(est: PsdEstimate, guard_bins: int = 4) -> np.ndarray:
    """Mask that drops bins within ``guard_bins`` of ``nu = 0`` and of the
    Nyquist wrap, where the step in the target spectrum leaks through the
    Hann main lobe."""
    nyq = 0.5 * est.sample_rate
    width = guard_bins * est.df
    return (np.abs(est.freq) > width) & (np.abs(est.freq) < nyq - width)


@dataclass(frozen=True)
class SpectrumComparison:
    nu: np.ndarray
    estimate: np.ndarray
    target: np.ndarray
    z: np.ndarray
    mask: np.ndarray

    def rms_relative(self, band: np.ndarray | None = None) -> float:
        m = self.mask if band is None else self.mask & band
        r = (self.estimate[m] - self.target[m]) / self.target[m]
        return float(np.sqrt(np.mean(r * r)))

    def outlier_fraction(self, threshold: float = 3.0, band: np.ndarray | None = None) -> float:
        m = self.mask if band is None else self.mask & band
        return float(np.mean(np.abs(self.z[m]) > threshold))


def compare_psd(est: PsdEstimate, target_fn, guard_bins: int = 4) -> SpectrumComparison:
    """z-scores of an estimate against ``target_fn(nu)``, using the model
    variance so the scores are unbiased under the null."""
    target = np.asarray(target_fn(est.nu), dtype=float)
    sigma = np.abs(target) * math.sqrt(est.variance_factor)
    z = (est.estimate.real - target) / sigma
    return SpectrumComparison(est.nu, est.estimate.real, target, z, discontinuity_guard(est, guard_bins))


@dataclass(frozen=True)
class WitnessEstimate:
    nu: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    analytic: np.ndarray
    mask: np.ndarray
    sum_est: PsdEstimate
    diff_est: PsdEstimate

    @property
    def z(self) -> np.ndarray:
        return (self.estimate - self.analytic) / self.stderr

    def outlier_fraction(self, threshold: float = 3.0, band: np.ndarray | None = None) -> float:
        m = self.mask if band is None else self.mask & band
        return float(np.mean(np.abs(self.z[m]) > threshold))

    def fit_amplitude(self, shape: np.ndarray, band: np.ndarray | None = None) -> float:
        """Weighted least-squares amplitude ``A`` in ``estimate ~ A * shape``."""
        m = self.mask if band is None else self.mask & band
        w = 1.0 / self.stderr[m] ** 2
        return float(np.sum(w * shape[m] * self.estimate[m]) / np.sum(w * shape[m] ** 2))


def monte_carlo_witness(
    model: PsdModel,
    n_samples: int,
    sample_rate: float,
    segment_len: int,
    seed: int,
    guard_bins: int = 4,
    workers: int = 1,
) -> WitnessEstimate:
    """Estimate ``S_sum - S_diff`` from two independently seeded records.

    The two branch seeds are spawned from ``seed`` so the noise realisations
    are independent while the model constants are shared.
    """
    s_seed, d_seed = (int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(2))
    rec_s = synthesize_photocurrent(Branch.SUM, model, n_samples, sample_rate, s_seed, workers)
    rec_d = synthesize_photocurrent(Branch.DIFFERENCE, model, n_samples, sample_rate, d_seed, workers)
    est_s = welch_psd(rec_s, segment_len)
    est_d = welch_psd(rec_d, segment_len)
    nu = est_s.nu
    tgt_s = np.asarray(model.with_branch(Branch.SUM)(nu))
    tgt_d = np.asarray(model.with_branch(Branch.DIFFERENCE)(nu))
    stderr = np.sqrt(tgt_s**2 + tgt_d**2) * math.sqrt(est_s.variance_factor)
    analytic = tgt_s - tgt_d
    return WitnessEstimate(
        nu,
        est_s.estimate - est_d.estimate,
        stderr,
        analytic,
        discontinuity_guard(est_s, guard_bins),
        est_s,
        est_d,
    )
