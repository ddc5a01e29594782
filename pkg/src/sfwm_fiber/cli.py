"""Command-line front end: ``sfwm-fiber {modes,phasematch,spectrum,fit}``.

Each command reads one config file, writes its results into ``--out`` and
returns an exit code: 0 on success, 2 for configuration or input errors,
3 when no fit hypothesis survives.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, RunConfig, load_config
from .dispersion import Axis, cutoff_v, effective_index, guided_modes, nm_to_omega, v_number
from .fitting import NoFitError, PeakObservation, contour_rna, fit_parameters
from .phasematching import TABLE1, enumerate_processes, phasematch_diagram
from .spectra import jsa_grid, peak_heights, single_spectrum

__all__ = ["main", "cmd_modes", "cmd_phasematch", "cmd_spectrum", "cmd_fit", "read_peaks"]

log = logging.getLogger("sfwm_fiber")

EXIT_OK, EXIT_CONFIG, EXIT_NOFIT = 0, 2, 3
FORMATS = ("csv", "json", "svg")


def _map(func, items, jobs: int):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [func(*it) for it in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(func, *zip(*items)))


def _comments(config: RunConfig, command: str):
    return [f"sfwm-fiber {command}"] + config.header_lines()


def _emit_table(config, command, out: Path, stem: str, header, rows, formats):
    paths = []
    if "csv" in formats or "svg" in formats:
        paths.append(io.write_csv(out / f"{stem}.csv", header, rows, _comments(config, command)))
    if "json" in formats:
        payload = {"command": command, "config": config.resolved(), "columns": list(header),
                   "rows": [list(r) for r in rows]}
        paths.append(io.write_json(out / f"{stem}.json", payload))
    return paths


def _figure(*args, **kw):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt.subplots(*args, **kw)


def _close(fig):
    import matplotlib.pyplot as plt

    plt.close(fig)


def cmd_modes(config: RunConfig, formats=("csv",), jobs: int = 1) -> list[Path]:
    """Guided modes at the pump wavelength with cutoffs and effective indices."""
    f, b = config.fiber, config.bands
    lam_p = config.pump.center
    centers = {"pump": lam_p, "idler": sum(b.idler) / 2, "signal": sum(b.signal) / 2}
    header = ["mode", "cutoff_v", "v_pump", "n_eff_slow_pump", "n_eff_fast_pump",
              "n_eff_fast_idler_center", "n_eff_fast_signal_center"]
    rows = []
    for md in guided_modes(f, lam_p):
        row = [md.name, cutoff_v(md.l, md.m), v_number(f, lam_p)]
        row.append(float(effective_index(f, md.on(Axis.SLOW), nm_to_omega(lam_p), strict=False)))
        for key in ("pump", "idler", "signal"):
            row.append(float(effective_index(f, md, nm_to_omega(centers[key]), strict=False)))
        rows.append(row)
    return _emit_table(config, "modes", config.out_dir, "modes", header, rows, formats)


def _diagram(fiber, proc, pump_range, n_pump, band, n_grid):
    d = phasematch_diagram(fiber, proc, pump_range, n_pump, band, n_grid)
    return [(proc.name, p, s, i, r) for p, s, i, r in zip(d.lambda_p, d.lambda_s, d.lambda_i, d.residual)]


def cmd_phasematch(config: RunConfig, formats=("csv",), jobs: int = 1) -> list[Path]:
    """Phasematching contours versus pump wavelength for the configured processes."""
    pm = config.phasematch
    procs = [TABLE1[k] for k in pm.processes]
    items = [(config.fiber, p, pm.pump_range, pm.n_pump, config.bands.search, pm.n_grid) for p in procs]
    rows = [row for part in _map(_diagram, items, jobs) for row in part]
    header = ["process", "lambda_p_nm", "lambda_s_nm", "lambda_i_nm", "residual_rad_m"]
    paths = _emit_table(config, "phasematch", config.out_dir, "contours", header, rows, formats)
    if "svg" in formats:
        paths.append(_plot_contours(config, rows, config.out_dir / "contours.svg"))
    return paths


def _plot_contours(config, rows, path):
    fig, axes = _figure(1, 2, figsize=(9, 4), sharex=True)
    b = config.bands
    for ax, col, band, name in ((axes[0], 2, b.signal, "signal"), (axes[1], 3, b.idler, "idler")):
        ax.axhspan(*band, color="0.9", zorder=0)
        for label in dict.fromkeys(r[0] for r in rows):
            pts = np.array([(r[1], r[col]) for r in rows if r[0] == label])
            ax.plot(pts[:, 0], pts[:, 1], ".", ms=1.5, label=label)
        ax.axvline(config.pump.center, color="k", lw=0.6, ls="--")
        ax.set_xlabel("pump wavelength (nm)")
        ax.set_ylabel(f"{name} wavelength (nm)")
    axes[0].legend(markerscale=6, fontsize=8)
    fig.tight_layout()
    io.save_svg(fig, path)
    _close(fig)
    return path


def _spectrum_processes(config: RunConfig):
    names = config.spectrum.processes
    if names == ("auto",):
        b = config.bands
        return enumerate_processes(config.fiber, config.pump.center, b.idler, b.signal,
                                   search_band=b.search, n_grid=config.phasematch.n_grid)
    return [TABLE1[k] for k in names]


def _arm(fiber, pump, procs, band, arm, n_points, n_nodes, n_conj):
    return single_spectrum(fiber, pump, procs, band, arm, n_points, n_nodes, n_conj)


def cmd_spectrum(config: RunConfig, formats=("csv",), jobs: int = 1, jsa: bool = True) -> list[Path]:
    """Single-arm spectra of both detection bands, per-process peaks and JSA grids."""
    sp, b = config.spectrum, config.bands
    procs = _spectrum_processes(config)
    items = [(config.fiber, config.pump, procs, band, arm, sp.n_points, sp.n_nodes, sp.n_conj)
             for arm, band in (("signal", b.signal), ("idler", b.idler))]
    curves = _map(_arm, items, jobs)
    paths = []
    header = ["wavelength_nm", "process", "intensity"]
    peak_rows = []
    for curve in curves:
        rows = []
        for name, comp in list(curve.components.items()) + [("total", curve.total)]:
            rows.extend((lam, name, val) for lam, val in zip(curve.wavelength, comp))
        paths += _emit_table(config, "spectrum", config.out_dir, f"spectrum_{curve.arm}", header, rows, formats)
        for name, (lam, h) in peak_heights(curve).items():
            proc = curve.processes[name]
            peak_rows.append((curve.arm, name, proc.quadruple, lam, h))
    paths += _emit_table(config, "spectrum", config.out_dir, "spectrum_peaks",
                         ["arm", "process", "modes", "wavelength_nm", "height"], peak_rows, formats)
    if jsa:
        for proc in procs:
            try:
                g = jsa_grid(config.fiber, config.pump, proc, n_nodes=sp.n_nodes)
            except ValueError:
                continue
            header_meta = {
                "process": proc.name, "modes": proc.quadruple, "axes": ["omega_s", "omega_i"],
                "omega_s_rad_s": [g.omega_s[0], g.omega_s[-1], g.omega_s.size],
                "omega_i_rad_s": [g.omega_i[0], g.omega_i[-1], g.omega_i.size],
                "gamma": g.gamma, "weight": g.weight, "covers_support": g.covers_support,
                "config": config.resolved(),
            }
            paths.append(io.write_jsa(config.out_dir / f"jsa_{proc.name}.bin", g.values, header_meta))
    if "svg" in formats:
        paths.append(_plot_spectra(curves, config.out_dir / "spectrum.svg"))
    return paths


def _plot_spectra(curves, path):
    fig, axes = _figure(1, len(curves), figsize=(10, 3.8))
    for ax, curve in zip(np.atleast_1d(axes), curves):
        norm = curve.total.max() or 1.0
        ax.plot(curve.wavelength, curve.total / norm, "k", lw=1.2, label="total")
        for name, comp in curve.components.items():
            proc = curve.processes[name]
            ax.plot(curve.wavelength, comp / norm, lw=0.8, label=f"{name} ({proc.quadruple})")
        ax.set_xlabel(f"{curve.arm} wavelength (nm)")
        ax.set_ylabel("intensity (norm.)")
    np.atleast_1d(axes)[0].legend(fontsize=7)
    fig.tight_layout()
    io.save_svg(fig, path)
    _close(fig)
    return path


def read_peaks(path) -> list[PeakObservation]:
    """Peak file: CSV with columns label, lambda_i_nm, lambda_s_nm and optional height."""
    try:
        header, rows = io.read_csv(path)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read peaks file ({exc.strerror})") from None
    except IndexError:
        raise ConfigError(f"{path}: empty peaks file") from None
    need = ["label", "lambda_i_nm", "lambda_s_nm"]
    missing = [c for c in need if c not in header]
    if missing:
        raise ConfigError(f"{path}: missing column(s) {', '.join(missing)}")
    col = {c: header.index(c) for c in header}
    peaks = []
    for n, row in enumerate(rows, 2):
        try:
            height = float(row[col["height"]]) if "height" in col else float("nan")
            peaks.append(PeakObservation(row[col["label"]], float(row[col["lambda_i_nm"]]),
                                         float(row[col["lambda_s_nm"]]), height))
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"{path}: data row {n}: {exc}") from None
    if len(peaks) != 4:
        raise ConfigError(f"{path}: expected four peaks, found {len(peaks)}")
    return peaks


def _result_entry(res):
    entry = {"assignment": res.assignment, "residual_rad_m": res.residual,
             "coarse_residual_rad_m": res.coarse_residual, "refined": res.refined}
    if res.fiber is not None:
        entry.update(r_um=res.fiber.r, na=res.fiber.na, delta=res.fiber.delta)
    return entry


def cmd_fit(peaks_path, config: RunConfig, formats=("csv",), jobs: int = 1) -> list[Path]:
    """Fit (r, NA, delta) to a peak file; raises NoFitError after writing the report."""
    peaks = read_peaks(peaks_path)
    ft, f = config.fit, config.fiber
    try:
        report = fit_parameters(
            peaks, config.pump.center, ft.delta_range, box=ft.box, n_delta=ft.n_delta, n_grid=ft.n_grid,
            threshold=ft.threshold, n_refine=ft.n_refine, tolerance_nm=ft.tolerance_nm or None,
            energy_tol_nm=ft.energy_tol_nm, length=f.length, material=f.material, raise_on_failure=False,
        )
    except ValueError as exc:
        raise ConfigError(f"{peaks_path}: {exc}") from None
    out = config.out_dir
    best = report.best
    payload = {
        "command": "fit",
        "config": config.resolved(),
        "peaks": [{"label": p.label, "lambda_i_nm": p.lambda_i, "lambda_s_nm": p.lambda_s, "height": p.height}
                  for p in peaks],
        "threshold_rad_m": report.threshold,
        "n_hypotheses": report.n_hypotheses,
        "converged": best.residual < report.threshold,
        "best": dict(_result_entry(best), spread=best.spread,
                     per_peak_rad_m=best.per_peak, trace_rad_m=best.trace),
        "surviving": [_result_entry(r) for r in report.surviving],
        "ranking": [_result_entry(r) for r in report.results],
    }
    paths = [io.write_json(out / "fit.json", payload)]
    rows = []
    for k, res in enumerate(report.surviving or [best]):
        if res.fiber is None:
            continue
        for pk, proc in zip(peaks, res.hypothesis):
            c = contour_rna(proc, pk, res.fiber.delta, config.pump.center, ft.box, ft.n_contour, f.material)
            for seg, line in enumerate(c.lines):
                rows.extend((k, "".join(res.names), pk.label, proc.name, seg, r, na) for r, na in line)
    header = ["hypothesis", "assignment", "peak", "process", "segment", "r_um", "na"]
    paths.append(io.write_csv(out / "fit_contours.csv", header, rows, _comments(config, "fit")))
    if "svg" in formats:
        paths.append(_plot_fit(rows, report, out / "fit_contours.svg"))
    if not payload["converged"]:
        raise NoFitError(
            f"no hypothesis phasematches all peaks below {report.threshold} rad/m "
            f"(best {''.join(best.names)} at {best.residual:.4g} rad/m)",
            report,
        )
    return paths


def _plot_fit(rows, report, path):
    fig, ax = _figure(figsize=(5, 4))
    for key in dict.fromkeys((r[0], r[2], r[4]) for r in rows):
        pts = np.array([(r[5], r[6]) for r in rows if (r[0], r[2], r[4]) == key])
        ax.plot(pts[:, 0], pts[:, 1], lw=0.8, color=f"C{key[0] % 10}")
    b = report.best
    if b.fiber is not None:
        ax.plot([b.fiber.r], [b.fiber.na], "k+", ms=10)
    ax.set_xlabel("core radius (um)")
    ax.set_ylabel("NA")
    fig.tight_layout()
    io.save_svg(fig, path)
    _close(fig)
    return path


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI config file (defaults when omitted)")
    common.add_argument("--out", type=Path, help="output directory (overrides [output] dir)")
    common.add_argument("--format", action="append", choices=FORMATS, dest="formats",
                        help="output format; repeat for several (default csv)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="sfwm-fiber", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("modes", parents=[common], help="guided modes and effective indices")
    sub.add_parser("phasematch", parents=[common], help="phasematching contours vs pump wavelength")
    sub.add_parser("spectrum", parents=[common], help="simulated signal and idler spectra")
    fit = sub.add_parser("fit", parents=[common], help="fit fiber parameters to four peak pairs")
    fit.add_argument("peaks", type=Path, help="CSV with label, lambda_i_nm, lambda_s_nm[, height]")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        config = load_config(args.config) if args.config else RunConfig()
        if args.out:
            config = config.with_out(args.out)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        config.out_dir.mkdir(parents=True, exist_ok=True)
        formats = tuple(args.formats or ("csv",))
        if args.command == "fit":
            paths = cmd_fit(args.peaks, config, formats, args.jobs)
        else:
            cmd = {"modes": cmd_modes, "phasematch": cmd_phasematch, "spectrum": cmd_spectrum}[args.command]
            paths = cmd(config, formats, args.jobs)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoFitError as exc:
        print(f"no fit: {exc}", file=sys.stderr)
        return EXIT_NOFIT
    for path in paths:
        log.info("wrote %s", path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
