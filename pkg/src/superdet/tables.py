"""Frequency grids, spectrum records and their CSV / JSON serialisation."""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .detection_model import Branch, heterodyne_frequency_map, noise_budget, psd
from .response_core import DetectorGeometry, diff_response, total_response

SPECTRUM_COLUMNS = (
    "nu", "analysis_freq", "x", "F_total", "F_diff", "N", "S_sum", "S_diff", "witness", "SNR",
)


def band_grid(band_min: float, band_max: float, grid_size: int) -> np.ndarray:
    """Grid over ``[band_min, band_max]`` that never contains ``nu = 0``.

    The negative side is closed-open ``[band_min, 0)``, the positive side
    open-closed ``(0, band_max]``; points are split in proportion to length.
    Points are formed as ``band_min * (n - k) / n`` so round fractions of the
    band edge (e.g. -1 on ``[-2, 0)``) are hit exactly.
    """
    if not band_min < band_max:
        raise ValueError("band_min must be < band_max")
    if grid_size < 1:
        raise ValueError("grid_size must be >= 1")
    neg_len = max(0.0, min(band_max, 0.0) - band_min)
    pos_len = max(0.0, band_max - max(band_min, 0.0))
    if band_max <= 0:
        # entirely negative, closed-open at band_max
        k = np.arange(grid_size)
        return band_min + (band_max - band_min) * k / grid_size
    if band_min >= 0:
        k = np.arange(1, grid_size + 1)
        return band_min + (band_max - band_min) * k / grid_size
    n_neg = int(round(grid_size * neg_len / (neg_len + pos_len)))
    n_neg = min(max(n_neg, 1), grid_size - 1) if grid_size > 1 else 1
    n_pos = grid_size - n_neg
    neg = band_min * (n_neg - np.arange(n_neg)) / n_neg
    pos = band_max * np.arange(1, n_pos + 1) / n_pos if n_pos else np.empty(0)
    return np.concatenate([neg, pos])


@dataclass(frozen=True)
class SpectrumTable:
    """One row per grid frequency; ``SNR`` is NaN (null) exactly for nu >= 0."""

    columns: dict

    def __len__(self):
        return len(self.columns["nu"])

    def __getitem__(self, key):
        return self.columns[key]


def spectrum_table(
    nu,
    geom: DetectorGeometry,
    mu_sq: float,
    delta_lo: float,
    squeezed: bool = False,
    single_trajectory: bool = False,
) -> SpectrumTable:
    nu = np.asarray(nu, dtype=float)
    d = geom.delta_over_cs
    f_tot = np.asarray(total_response(nu, d, single_trajectory), dtype=float)
    f_diff = np.asarray(diff_response(nu, d, single_trajectory), dtype=float)
    noise = np.asarray(noise_budget(mu_sq, squeezed).total(nu), dtype=float)
    s_sum = np.asarray(psd(Branch.SUM, nu, mu_sq, geom, squeezed, single_trajectory), dtype=float)
    s_diff = np.asarray(psd(Branch.DIFFERENCE, nu, mu_sq, geom, squeezed, single_trajectory), dtype=float)
    snr = np.where(nu < 0, f_tot / noise, np.nan)
    cols = {
        "nu": nu,
        "analysis_freq": np.asarray(heterodyne_frequency_map(nu, delta_lo)),
        "x": np.asarray(geom.spectral_argument(nu)),
        "F_total": f_tot,
        "F_diff": f_diff,
        "N": noise,
        "S_sum": s_sum,
        "S_diff": s_diff,
        "witness": s_sum - s_diff,
        "SNR": snr,
    }
    return SpectrumTable(cols)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return ""
    return format(v, ".17g")


def _json_value(v):
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if math.isnan(v) else v
    return v


def render(metadata: dict, columns: dict, fmt: str = "csv") -> str:
    """Serialise a column table with a metadata header.

    CSV carries ``# key: value`` header lines; JSON mirrors the same content
    as ``{"metadata": ..., "columns": [...], "rows": [[...], ...]}``.
    Output is byte-stable for identical inputs.
    """
    names = list(columns)
    n = len(next(iter(columns.values()))) if columns else 0
    rows = [[columns[c][i] for c in names] for i in range(n)]
    if fmt == "json":
        doc = {
            "metadata": {k: _json_value(v) for k, v in metadata.items()},
            "columns": names,
            "rows": [[_json_value(v) for v in r] for r in rows],
        }
        return json.dumps(doc, indent=1, allow_nan=False) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    for k, v in metadata.items():
        buf.write(f"# {k}: {_cell(v)}\n")
    buf.write(",".join(names) + "\n")
    for r in rows:
        buf.write(",".join(_cell(v) for v in r) + "\n")
    return buf.getvalue()


def parse_csv(text: str) -> tuple[dict, dict]:
    """Inverse of :func:`render` for CSV: ``(metadata, columns)``; empty cells
    become NaN."""
    meta, lines = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition(": ")
            meta[k] = v
        elif line:
            lines.append(line)
    names = lines[0].split(",")
    data = [[_parse_cell(c) for c in ln.split(",")] for ln in lines[1:]]
    cols = {n: np.array([r[i] for r in data]) for i, n in enumerate(names)}
    return meta, cols


def _parse_cell(c: str):
    if not c:
        return math.nan
    try:
        return float(c)
    except ValueError:
        return c
