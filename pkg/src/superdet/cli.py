"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 oracle or statistical failure.
"""
from __future__ import annotations

import argparse
import itertools
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__
from .analog_params import (
    DegenerateMediumError,
    MissingParameterError,
    coupling_mu,
    field_amplitude,
    sound_speed,
)
from .config import ConfigError, RunConfig, load_config
from .detection_model import Branch, NoSignalError, PsdModel
from .response_core import (
    response_epsilon_extrapolated,
    response_offdiag,
    response_offdiag_numeric_contour,
)
from .stochastic_sim import compare_psd, monte_carlo_witness, segment_count, segment_length_for
from .tables import band_grid, render, spectrum_table

EXIT_OK, EXIT_CONFIG, EXIT_FAIL = 0, 2, 3
CONTOUR_NODES = 256


class CheckFailed(Exception):
    """Oracle disagreement or statistical failure; carries the output."""

    def __init__(self, message, text):
        super().__init__(message)
        self.text = text


def _metadata(cfg: RunConfig, command: str, **extra) -> dict:
    meta = {
        "command": command,
        "version": __version__,
        "config_sha256": cfg.digest(),
        "seed": cfg.simulate.seed,
    }
    meta.update(extra)
    return meta


def _grid(cfg: RunConfig):
    d = cfg.detection
    return band_grid(d.band_min, d.band_max, d.grid_size)


def _oracles(nu: float, delta_over_cs: float) -> tuple[float, float]:
    # the response depends on nu * delta only; rescale so delta = 1 and the
    # epsilon ladder is measured against the light-crossing time
    tau = delta_over_cs if delta_over_cs > 0 else 1.0
    nu_s, d_s = nu * tau, delta_over_cs / tau
    return (
        response_offdiag_numeric_contour(nu_s, d_s, CONTOUR_NODES),
        response_epsilon_extrapolated(nu_s, d_s),
    )


def cmd_response(cfg: RunConfig, tolerance: float = 1e-3, workers: int = 1) -> tuple[dict, dict]:
    geom = cfg.build_geometry()
    d = geom.delta_over_cs
    single = cfg.detection.single_trajectory
    nu = _grid(cfg)
    table = spectrum_table(nu, geom, cfg.mu_sq_value(), cfg.detection.delta_lo, single_trajectory=single)
    closed = np.asarray(response_offdiag(nu, d))
    with ThreadPoolExecutor(max(1, workers)) as ex:
        pairs = list(ex.map(lambda v: _oracles(float(v), d), nu))
    contour = np.array([p[0] for p in pairs])
    eps = np.array([p[1] for p in pairs])
    err = np.maximum(np.abs(contour - closed), np.abs(eps - closed))
    err = np.maximum(err, np.abs(contour - eps))
    cols = {
        "nu": nu,
        "x": table["x"],
        "F_total": table["F_total"],
        "F_diff": table["F_diff"],
        "F_offdiag": closed,
        "F_offdiag_contour": contour,
        "F_offdiag_epsilon": eps,
        "oracle_err": err,
    }
    worst = float(err.max())
    meta = _metadata(
        cfg, "response", delta_over_cs=d, single_trajectory=single, tolerance=tolerance, oracle_max_err=worst
    )
    return _finish(meta, cols, worst <= tolerance, f"oracle disagreement {worst:.3e} exceeds {tolerance:.3e}")


def _spectrum(cfg: RunConfig):
    geom = cfg.build_geometry()
    mu_sq = cfg.mu_sq_value()
    table = spectrum_table(
        _grid(cfg), geom, mu_sq, cfg.detection.delta_lo, cfg.squeezed, cfg.detection.single_trajectory
    )
    meta = _metadata(
        cfg,
        "",
        mu_sq=mu_sq,
        mode=cfg.detection.mu_sq if isinstance(cfg.detection.mu_sq, str) else "explicit",
        squeezed=cfg.squeezed,
        squeezed_positive_nu="unsqueezed" if cfg.squeezed else "n/a",
        delta_over_cs=geom.delta_over_cs,
        delta_lo=cfg.detection.delta_lo,
        single_trajectory=cfg.detection.single_trajectory,
    )
    return table, meta


def cmd_psd(cfg: RunConfig) -> tuple[dict, dict]:
    table, meta = _spectrum(cfg)
    meta["command"] = "psd"
    return meta, dict(table.columns)


def snr_crossing(nu: np.ndarray, snr: np.ndarray, level: float = 10.0) -> float:
    """Gap where SNR first falls through ``level`` scanning from nu = 0-
    outward, by linear interpolation; NaN if it never does."""
    m = nu < 0
    x, y = nu[m][::-1], snr[m][::-1]
    for i in range(1, len(x)):
        if (y[i - 1] - level) * (y[i] - level) <= 0 and y[i - 1] != y[i]:
            t = (level - y[i - 1]) / (y[i] - y[i - 1])
            return float(x[i - 1] + t * (x[i] - x[i - 1]))
    return math.nan


def cmd_snr(cfg: RunConfig) -> tuple[dict, dict]:
    if not cfg.detection.band_min < 0:
        raise NoSignalError("snr band does not intersect nu < 0")
    table, meta = _spectrum(cfg)
    nu, snr = table["nu"], table["SNR"]
    m = nu < 0
    i = int(np.argmin(snr[m]))
    meta["command"] = "snr"
    meta["snr_band_min"] = float(snr[m][i])
    meta["snr_band_min_nu"] = float(nu[m][i])
    meta["snr_cross_10_nu"] = snr_crossing(nu, snr)
    return meta, dict(table.columns)


def cmd_witness(cfg: RunConfig) -> tuple[dict, dict]:
    table, meta = _spectrum(cfg)
    w = table["witness"]
    i = int(np.argmax(np.abs(w)))
    meta["command"] = "witness"
    meta["witness_peak"] = float(w[i])
    meta["witness_peak_nu"] = float(table["nu"][i])
    return meta, dict(table.columns)


def cmd_simulate(cfg: RunConfig, workers: int = 1) -> tuple[dict, dict]:
    s = cfg.simulate
    geom = cfg.build_geometry()
    model = PsdModel(
        Branch.SUM,
        cfg.mu_sq_value(),
        geom,
        cfg.detection.delta_lo,
        cfg.squeezed,
        cfg.detection.single_trajectory,
    )
    seg = segment_length_for(s.n_samples, s.segments)
    w = monte_carlo_witness(model, s.n_samples, s.sample_rate, seg, s.seed, workers=workers)
    cmp_s = compare_psd(w.sum_est, model.with_branch(Branch.SUM))
    cmp_d = compare_psd(w.diff_est, model.with_branch(Branch.DIFFERENCE))
    nu = w.nu
    neg = nu < 0
    mask = w.mask
    z_parts = [w.z[mask]]
    if s.branch != "difference":
        z_parts.append(cmp_s.z[mask])
    if s.branch != "sum":
        z_parts.append(cmp_d.z[mask])
    z_all = np.concatenate(z_parts)
    frac = float(np.mean(np.abs(z_all) > 3.0))
    cols = {
        "nu": nu,
        "analysis_freq": cfg.detection.delta_lo - nu,
        "S_sum_est": cmp_s.estimate,
        "S_sum_model": cmp_s.target,
        "z_sum": cmp_s.z,
        "S_diff_est": cmp_d.estimate,
        "S_diff_model": cmp_d.target,
        "z_diff": cmp_d.z,
        "witness_est": w.estimate,
        "witness_model": w.analytic,
        "witness_stderr": w.stderr,
        "z_witness": w.z,
        "used": mask,
    }
    if s.branch == "sum":
        for k in ("S_diff_est", "S_diff_model", "z_diff"):
            del cols[k]
    elif s.branch == "difference":
        for k in ("S_sum_est", "S_sum_model", "z_sum"):
            del cols[k]
    meta = _metadata(
        cfg,
        "simulate",
        mu_sq=model.mu_sq,
        delta_over_cs=geom.delta_over_cs,
        single_trajectory=model.single_trajectory,
        n_samples=s.n_samples,
        sample_rate=s.sample_rate,
        segment_len=seg,
        n_segments=segment_count(s.n_samples, seg),
        rms_rel_sum_neg=cmp_s.rms_relative(neg),
        rms_rel_diff_neg=cmp_d.rms_relative(neg),
        outlier_fraction=frac,
    )
    ok = frac < 0.01
    return _finish(meta, cols, ok, f"{frac:.2%} of bins beyond |z| = 3 (limit 1%)")


_SWEEP_ORDER = ("delta", "mu_sq", "band")


def parse_sweep(specs: list[str]) -> dict[str, list[float]]:
    out = {}
    for spec in specs:
        name, _, vals = spec.partition("=")
        name = name.strip()
        if name not in _SWEEP_ORDER:
            raise ConfigError(f"sweep variable must be one of {_SWEEP_ORDER}, got {name!r}")
        values = [float(v) for v in vals.split(",") if v.strip()]
        if not values:
            raise ConfigError(f"sweep range for {name!r} is empty")
        out[name] = values
    if not out:
        raise ConfigError("no sweep variables given (use --vary name=v1,v2,...)")
    return out


def _sweep_point(cfg: RunConfig, point: dict) -> RunConfig:
    det, geo = cfg.detection, cfg.geometry
    if "delta" in point:
        geo = replace(geo, x1=None, x2=None, delta=point["delta"])
    if "mu_sq" in point:
        det = replace(det, mu_sq=point["mu_sq"])
    if "band" in point:
        det = replace(det, band_min=point["band"])
    return replace(cfg, geometry=geo, detection=det)


def sweep_summary(cfg: RunConfig) -> dict:
    table, _ = _spectrum(cfg)
    nu, snr, w = table["nu"], table["SNR"], table["witness"]
    m = nu < 0
    row = {
        "delta": cfg.build_geometry().delta,
        "mu_sq": cfg.mu_sq_value(),
        "band_min": cfg.detection.band_min,
        "noise_neg": float(table["N"][m][0]) if m.any() else math.nan,
        "snr_band_min": math.nan,
        "snr_band_min_nu": math.nan,
    }
    if m.any():
        i = int(np.argmin(snr[m]))
        row["snr_band_min"] = float(snr[m][i])
        row["snr_band_min_nu"] = float(nu[m][i])
    j = int(np.argmax(np.abs(w)))
    row["witness_peak"] = float(w[j])
    row["witness_peak_nu"] = float(nu[j])
    return row


def cmd_sweep(cfg: RunConfig, sweep: dict[str, list[float]], workers: int = 1) -> tuple[dict, dict]:
    names = [n for n in _SWEEP_ORDER if n in sweep]
    points = [dict(zip(names, combo)) for combo in itertools.product(*(sweep[n] for n in names))]
    configs = [_sweep_point(cfg, p) for p in points]
    with ThreadPoolExecutor(max(1, workers)) as ex:
        rows = list(ex.map(sweep_summary, configs))
    cols = {k: [r[k] for r in rows] for k in rows[0]}
    meta = _metadata(cfg, "sweep", variables=",".join(names), points=len(rows))
    return meta, cols


def cmd_params(cfg: RunConfig) -> tuple[dict, dict]:
    geom = cfg.build_geometry()
    names, values = ["delta", "c_s", "delta_over_cs", "mu_sq"], [
        geom.delta, geom.c_s, geom.delta_over_cs, cfg.mu_sq_value()
    ]
    p = cfg.condensate()
    if p is not None:
        for k, v in p.as_dict().items():
            names.append(k)
            values.append(math.nan if v is None else v)
        try:
            names.append("c_s_condensate")
            values.append(sound_speed(p))
        except (MissingParameterError, DegenerateMediumError):
            values.append(math.nan)
        try:
            mu = coupling_mu(p)
            names += ["mu", "mu_sq_physical"]
            values += [mu, mu * mu]
        except MissingParameterError:
            pass
        names.append("E0_reference")
        values.append(field_amplitude(p))
    return _metadata(cfg, "params"), {"name": names, "value": values}


def _finish(meta, cols, ok, message):
    if not ok:
        raise CheckFailed(message, (meta, cols))
    return meta, cols


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="superdet",
        description="Response, heterodyne spectra and superposition witness for a detector "
        "superposed across two locations in a BEC analogue.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration (defaults used if omitted)")
    common.add_argument("--out", help="output file (stdout if omitted)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, help="override [simulate] seed")
    common.add_argument("--tolerance", type=float, default=1e-3, help="oracle tolerance for `response`")
    common.add_argument("--workers", type=int, default=1, help="worker threads; output is independent of it")
    for name, help_ in [
        ("response", "closed-form response and its two numerical oracles"),
        ("psd", "sum/difference heterodyne PSDs and noise budget"),
        ("snr", "signal-to-noise ratio over the band"),
        ("witness", "sum-minus-difference witness"),
        ("simulate", "Monte-Carlo synthesis and Welch recovery"),
        ("sweep", "cross-product parameter sweep"),
        ("params", "derived physical parameters"),
    ]:
        p = sub.add_parser(name, parents=[common], help=help_)
        if name == "sweep":
            p.add_argument(
                "--vary", action="append", default=[], metavar="NAME=V1,V2,...",
                help="sweep variable: delta, mu_sq or band (band_min)",
            )
    return parser


def run(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        cfg.build_geometry()
        cfg.mu_sq_value()
        if args.command == "sweep":
            sweep = parse_sweep(args.vary)
    except (ConfigError, MissingParameterError, DegenerateMediumError, ValueError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    code = EXIT_OK
    try:
        if args.command == "response":
            meta, cols = cmd_response(cfg, args.tolerance, args.workers)
        elif args.command == "psd":
            meta, cols = cmd_psd(cfg)
        elif args.command == "snr":
            meta, cols = cmd_snr(cfg)
        elif args.command == "witness":
            meta, cols = cmd_witness(cfg)
        elif args.command == "simulate":
            meta, cols = cmd_simulate(cfg, args.workers)
        elif args.command == "sweep":
            meta, cols = cmd_sweep(cfg, sweep, args.workers)
        else:
            meta, cols = cmd_params(cfg)
    except (NoSignalError, ConfigError, MissingParameterError, DegenerateMediumError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckFailed as e:
        print(f"check failed: {e}", file=sys.stderr)
        meta, cols = e.text
        code = EXIT_FAIL

    text = render(meta, cols, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
