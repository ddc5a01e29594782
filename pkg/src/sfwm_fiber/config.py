"""Run configuration: an INI file whose keys carry their units.

Example::

    [fiber]
    r_um = 1.6
    na = 0.27
    delta = 4.2e-4

    [pump]
    center_nm = 692
    w_lp01 = 0.5
    w_lp11 = 0.3
    w_lp21 = 0.2

Every key is optional; unknown keys are rejected so that a unit typo such as
``r_nm`` cannot pass silently.
"""

from __future__ import annotations

import configparser
import csv
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .dispersion import FiberSpec, ModeId
from .fitting import DELTA_RANGE, SearchBox
from .materials import DEFAULT_MATERIAL, available_materials
from .phasematching import IDLER_BAND, SEARCH_BAND, SIGNAL_BAND
from .spectra import PumpSpec

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "DEFAULT_CONFIG"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the file, line and field."""


@dataclass(frozen=True)
class Bands:
    idler: tuple[float, float] = IDLER_BAND
    signal: tuple[float, float] = SIGNAL_BAND
    search: tuple[float, float] = SEARCH_BAND


@dataclass(frozen=True)
class PhasematchSettings:
    pump_range: tuple[float, float] = (660.0, 720.0)
    n_pump: int = 200
    n_grid: int = 2000
    processes: tuple[str, ...] = ("A", "B", "C", "D", "E", "F", "G")


@dataclass(frozen=True)
class SpectrumSettings:
    processes: tuple[str, ...] = ("auto",)
    n_points: int = 2000
    n_nodes: int = 129
    n_conj: int = 128


@dataclass(frozen=True)
class FitSettings:
    box: SearchBox = SearchBox()
    delta_range: tuple[float, float] = DELTA_RANGE
    n_delta: int = 21
    n_grid: tuple[int, int] = (64, 64)
    n_contour: int = 256
    threshold: float = 10.0
    tolerance_nm: float = 1.0
    energy_tol_nm: float = 0.5
    n_refine: int = 8


@dataclass(frozen=True)
class RunConfig:
    fiber: FiberSpec = FiberSpec(1.6, 0.27, 4.2e-4)
    pump: PumpSpec = field(default_factory=PumpSpec)
    bands: Bands = Bands()
    phasematch: PhasematchSettings = PhasematchSettings()
    spectrum: SpectrumSettings = SpectrumSettings()
    fit: FitSettings = FitSettings()
    out_dir: Path = Path("out")
    pump_table_path: str = ""

    def with_out(self, out_dir) -> RunConfig:
        return replace(self, out_dir=Path(out_dir))

    def resolved(self) -> dict[str, dict[str, str]]:
        """Every setting as canonical strings, grouped by section (output dir excluded)."""
        f, p, b, pm, sp, ft = self.fiber, self.pump, self.bands, self.phasematch, self.spectrum, self.fit
        pump = {"center_nm": _fmt(p.center), "fwhm_nm": _fmt(p.fwhm), "chirp_s2": _fmt(p.chirp)}
        for md in sorted(p.fractions):
            pump[f"w_lp{md.short}"] = _fmt(p.fractions[md])
        if self.pump_table_path:
            pump["table_csv"] = self.pump_table_path
        return {
            "fiber": {
                "r_um": _fmt(f.r), "na": _fmt(f.na), "delta": _fmt(f.delta),
                "length_m": _fmt(f.length), "material": f.material,
            },
            "pump": pump,
            "bands": {
                "idler_min_nm": _fmt(b.idler[0]), "idler_max_nm": _fmt(b.idler[1]),
                "signal_min_nm": _fmt(b.signal[0]), "signal_max_nm": _fmt(b.signal[1]),
                "search_min_nm": _fmt(b.search[0]), "search_max_nm": _fmt(b.search[1]),
            },
            "phasematch": {
                "pump_min_nm": _fmt(pm.pump_range[0]), "pump_max_nm": _fmt(pm.pump_range[1]),
                "n_pump": str(pm.n_pump), "n_grid": str(pm.n_grid), "processes": ",".join(pm.processes),
            },
            "spectrum": {
                "processes": ",".join(sp.processes), "n_points": str(sp.n_points),
                "n_nodes": str(sp.n_nodes), "n_conj": str(sp.n_conj),
            },
            "fit": {
                "r_min_um": _fmt(ft.box.r[0]), "r_max_um": _fmt(ft.box.r[1]),
                "na_min": _fmt(ft.box.na[0]), "na_max": _fmt(ft.box.na[1]),
                "delta_min": _fmt(ft.delta_range[0]), "delta_max": _fmt(ft.delta_range[1]),
                "n_delta": str(ft.n_delta), "n_grid_r": str(ft.n_grid[0]), "n_grid_na": str(ft.n_grid[1]),
                "n_contour": str(ft.n_contour), "threshold_rad_m": _fmt(ft.threshold),
                "tolerance_nm": _fmt(ft.tolerance_nm), "energy_tol_nm": _fmt(ft.energy_tol_nm),
                "n_refine": str(ft.n_refine),
            },
        }

    def header_lines(self) -> list[str]:
        lines = []
        for sec, items in self.resolved().items():
            lines.append(f"[{sec}]")
            lines.extend(f"{k} = {v}" for k, v in items.items())
        return lines


DEFAULT_CONFIG = RunConfig()


def _fmt(x: float) -> str:
    return repr(float(x))


_FLOAT, _INT, _STR, _LIST = "float", "int", "str", "list"
_SCHEMA = {
    "fiber": {"r_um": _FLOAT, "na": _FLOAT, "delta": _FLOAT, "length_m": _FLOAT, "material": _STR},
    "pump": {"center_nm": _FLOAT, "fwhm_nm": _FLOAT, "chirp_s2": _FLOAT, "table_csv": _STR},
    "bands": {k: _FLOAT for k in (
        "idler_min_nm", "idler_max_nm", "signal_min_nm", "signal_max_nm", "search_min_nm", "search_max_nm")},
    "phasematch": {"pump_min_nm": _FLOAT, "pump_max_nm": _FLOAT, "n_pump": _INT, "n_grid": _INT,
                   "processes": _LIST},
    "spectrum": {"processes": _LIST, "n_points": _INT, "n_nodes": _INT, "n_conj": _INT},
    "fit": {"r_min_um": _FLOAT, "r_max_um": _FLOAT, "na_min": _FLOAT, "na_max": _FLOAT,
            "delta_min": _FLOAT, "delta_max": _FLOAT, "n_delta": _INT, "n_grid_r": _INT, "n_grid_na": _INT,
            "n_contour": _INT, "threshold_rad_m": _FLOAT, "tolerance_nm": _FLOAT, "energy_tol_nm": _FLOAT,
            "n_refine": _INT},
    "output": {"dir": _STR},
}
_PUMP_FRACTION = re.compile(r"w_lp(\d)(\d)$")


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    """Line number of every ``key = value`` entry, for diagnostics."""
    lines, section = {}, None
    for n, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
        elif section and s and s[0] not in "#;":
            m = re.match(r"([^=:]+?)\s*[=:]", s)
            if m:
                lines.setdefault((section, m.group(1).strip().lower()), n)
    return lines


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config(text, str(path), base=path.parent)


def parse_config(text: str, source: str = "<config>", base=None) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(_parser_message(exc, source)) from None
    where = _key_lines(text)

    def loc(sec, key):
        line = where.get((sec, key))
        return f"{source}:{line}" if line else source

    values = {}
    for sec in parser.sections():
        if sec not in _SCHEMA:
            raise ConfigError(f"{source}: unknown section [{sec}]")
        for key, raw in parser.items(sec):
            kind = _SCHEMA[sec].get(key)
            if kind is None and sec == "pump" and _PUMP_FRACTION.match(key):
                kind = _FLOAT
            if kind is None:
                raise ConfigError(f"{loc(sec, key)}: unknown key '{key}' in [{sec}]")
            try:
                values[(sec, key)] = _convert(kind, raw)
            except ValueError:
                raise ConfigError(f"{loc(sec, key)}: [{sec}] {key} = {raw!r} is not a valid {kind}") from None

    def get(sec, key, default):
        return values.get((sec, key), default)

    def check(cond, sec, key, msg):
        if not cond:
            raise ConfigError(f"{loc(sec, key)}: [{sec}] {key}: {msg}")

    d = DEFAULT_CONFIG
    material = get("fiber", "material", DEFAULT_MATERIAL)
    check(material in available_materials(), "fiber", "material",
          f"unknown material, choose from {', '.join(available_materials())}")
    kw = {}
    for key, attr, default in (("r_um", "r", d.fiber.r), ("na", "na", d.fiber.na),
                               ("delta", "delta", d.fiber.delta), ("length_m", "length", d.fiber.length)):
        kw[attr] = get("fiber", key, default)
    check(kw["r"] > 0, "fiber", "r_um", "must be positive")
    check(0 < kw["na"] < 1, "fiber", "na", "must lie in (0, 1)")
    check(kw["delta"] >= 0, "fiber", "delta", "must be non-negative")
    check(kw["length"] > 0, "fiber", "length_m", "must be positive")
    fiber = FiberSpec(material=material, **kw)

    fractions = {}
    for (sec, key), val in values.items():
        m = _PUMP_FRACTION.match(key) if sec == "pump" else None
        if m:
            check(val >= 0, sec, key, "pump fraction must be non-negative")
            fractions[ModeId(int(m.group(1)), int(m.group(2)))] = val
    center = get("pump", "center_nm", d.pump.center)
    fwhm = get("pump", "fwhm_nm", d.pump.fwhm)
    check(center > 0, "pump", "center_nm", "must be positive")
    check(fwhm > 0, "pump", "fwhm_nm", "must be positive")
    if fractions:
        total = sum(fractions.values())
        check(abs(total - 1) <= 1e-9, "pump", next(k for s, k in values if s == "pump" and _PUMP_FRACTION.match(k)),
              f"pump fractions sum to {total!r}, not 1")
    table_path = get("pump", "table_csv", "")
    table = _read_pump_table(table_path, base, loc("pump", "table_csv")) if table_path else None
    pump = PumpSpec(center, fwhm, fractions, get("pump", "chirp_s2", 0.0), table)

    def interval(sec, lo_key, hi_key, default):
        lo, hi = get(sec, lo_key, default[0]), get(sec, hi_key, default[1])
        check(lo < hi, sec, hi_key, f"must exceed {lo_key} ({lo!r})")
        return (lo, hi)

    bands = Bands(
        interval("bands", "idler_min_nm", "idler_max_nm", d.bands.idler),
        interval("bands", "signal_min_nm", "signal_max_nm", d.bands.signal),
        interval("bands", "search_min_nm", "search_max_nm", d.bands.search),
    )

    def count(sec, key, default, minimum=2):
        n = get(sec, key, default)
        check(n >= minimum, sec, key, f"must be at least {minimum}")
        return n

    def labels(sec, default, allow_auto):
        names = get(sec, "processes", default)
        ok = set("ABCDEFG") | ({"auto"} if allow_auto else set())
        bad = [x for x in names if x not in ok]
        check(names and not bad, sec, "processes", f"unknown process label(s) {', '.join(bad) or '(empty)'}")
        check(not ("auto" in names and len(names) > 1), sec, "processes", "'auto' cannot be combined with labels")
        return tuple(names)

    phasematch = PhasematchSettings(
        interval("phasematch", "pump_min_nm", "pump_max_nm", d.phasematch.pump_range),
        count("phasematch", "n_pump", d.phasematch.n_pump),
        count("phasematch", "n_grid", d.phasematch.n_grid),
        labels("phasematch", d.phasematch.processes, False),
    )
    spectrum = SpectrumSettings(
        labels("spectrum", d.spectrum.processes, True),
        count("spectrum", "n_points", d.spectrum.n_points),
        count("spectrum", "n_nodes", d.spectrum.n_nodes),
        count("spectrum", "n_conj", d.spectrum.n_conj),
    )
    ft = d.fit
    fit = FitSettings(
        SearchBox(interval("fit", "r_min_um", "r_max_um", ft.box.r), interval("fit", "na_min", "na_max", ft.box.na)),
        interval("fit", "delta_min", "delta_max", ft.delta_range),
        count("fit", "n_delta", ft.n_delta),
        (count("fit", "n_grid_r", ft.n_grid[0]), count("fit", "n_grid_na", ft.n_grid[1])),
        count("fit", "n_contour", ft.n_contour),
        get("fit", "threshold_rad_m", ft.threshold),
        get("fit", "tolerance_nm", ft.tolerance_nm),
        get("fit", "energy_tol_nm", ft.energy_tol_nm),
        count("fit", "n_refine", ft.n_refine, minimum=1),
    )
    check(fit.threshold > 0, "fit", "threshold_rad_m", "must be positive")
    check(fit.tolerance_nm >= 0, "fit", "tolerance_nm", "must be non-negative")
    check(fit.energy_tol_nm > 0, "fit", "energy_tol_nm", "must be positive")
    out_dir = Path(get("output", "dir", str(d.out_dir)))
    return RunConfig(fiber, pump, bands, phasematch, spectrum, fit, out_dir, table_path)


def _convert(kind, raw: str):
    raw = raw.strip()
    if kind == _FLOAT:
        x = float(raw)
        if x != x or x in (float("inf"), float("-inf")):
            raise ValueError(raw)
        return x
    if kind == _INT:
        return int(raw)
    if kind == _LIST:
        return [p.strip() for p in raw.split(",") if p.strip()]
    return raw


def _parser_message(exc: configparser.Error, source: str) -> str:
    if isinstance(exc, configparser.MissingSectionHeaderError):
        return f"{source}:{exc.lineno}: expected a [section] header before {exc.line.strip()!r}"
    if isinstance(exc, configparser.ParsingError):
        lineno, line = exc.errors[0]
        return f"{source}:{lineno}: cannot parse {line.strip()!r}"
    if isinstance(exc, configparser.DuplicateOptionError):
        return f"{source}:{exc.lineno}: duplicate key '{exc.option}' in [{exc.section}]"
    if isinstance(exc, configparser.DuplicateSectionError):
        return f"{source}:{exc.lineno}: duplicate section [{exc.section}]"
    return f"{source}: {exc}"


def _read_pump_table(path_str: str, base, where: str):
    path = Path(path_str)
    if base is not None and not path.is_absolute():
        path = Path(base) / path
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    except OSError as exc:
        raise ConfigError(f"{where}: cannot read pump table {path} ({exc.strerror})") from None
    try:
        if rows and not _is_number(rows[0][0]):
            rows = rows[1:]
        lam = [float(r[0]) for r in rows]
        inten = [float(r[1]) for r in rows]
        PumpSpec(table=(lam, inten))
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"{where}: bad pump table {path}: {exc}") from None
    return (lam, inten)


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True
