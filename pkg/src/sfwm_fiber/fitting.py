"""Inverse problem: fiber parameters from measured peak positions.

Signal and idler frequencies are fixed at the observed peak maxima.  For a
process, the mismatch separates as ``dk = D(r, NA) + delta * S`` because
both pumps ride the slow axis, so the birefringence enters linearly.
A hypothesis assigns one process to each peak; simultaneous phasematching
is scored with the Chebyshev norm of the per-peak mismatches.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from ._roots import refine_brackets
from .dispersion import C_LIGHT, DEFAULT_MATERIAL, FiberSpec, ModeId, cutoff_v, effective_index_rna, nm_to_omega
from .phasematching import SEARCH_BAND, TABLE1, Process, conjugate_nm, solve_peaks

__all__ = [
    "PeakObservation",
    "SearchBox",
    "Contour",
    "FitResult",
    "FitReport",
    "NoFitError",
    "DEFAULT_BOX",
    "DELTA_RANGE",
    "PEAK_LABELS",
    "mismatch",
    "contour_rna",
    "all_hypotheses",
    "synthesize_peaks",
    "fit_parameters",
]

PEAK_LABELS = ("I", "II", "III", "IV")
DELTA_RANGE = (4.0e-4, 5.0e-4)


@dataclass(frozen=True)
class SearchBox:
    r: tuple[float, float] = (1.4, 2.5)
    na: tuple[float, float] = (0.14, 0.30)

    def contains(self, r: float, na: float) -> bool:
        return self.r[0] <= r <= self.r[1] and self.na[0] <= na <= self.na[1]


DEFAULT_BOX = SearchBox()


@dataclass(frozen=True)
class PeakObservation:
    """Measured peak pair in nm; ``height`` in arbitrary units."""

    label: str
    lambda_i: float
    lambda_s: float
    height: float = float("nan")

    def __post_init__(self):
        if not 0 < self.lambda_i < self.lambda_s:
            raise ValueError(f"peak {self.label}: need 0 < lambda_i < lambda_s")

    @property
    def omega_s(self) -> float:
        return float(nm_to_omega(self.lambda_s))

    @property
    def omega_i(self) -> float:
        return float(nm_to_omega(self.lambda_i))

    def implied_pump(self) -> float:
        """Pump wavelength for which this pair conserves energy exactly."""
        return 2.0 / (1.0 / self.lambda_s + 1.0 / self.lambda_i)


class NoFitError(RuntimeError):
    """No hypothesis phasematches all peaks simultaneously."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class _Mismatch:
    """Delta-free mismatch of (process, peak) pairs over (r, NA) arrays, with caching."""

    def __init__(self, lambda_p: float, material: str = DEFAULT_MATERIAL):
        self.omega_p = float(nm_to_omega(lambda_p))
        self.material = material
        self._cache = {}

    def _k(self, mode, omega, r, na, key):
        ck = (mode.l, mode.m, omega, key)
        if key is None or ck not in self._cache:
            k = effective_index_rna(mode, omega, r, na, self.material) * omega / C_LIGHT
            if key is None:
                return k
            self._cache[ck] = k
        return self._cache[ck]

    def parts(self, process: Process, peak: PeakObservation, r, na, key=None):
        wp = self.omega_p
        ws, wi = peak.omega_s, peak.omega_i
        wq = ws + wi - wp
        d = (
            self._k(process.pump1, wp, r, na, key)
            + self._k(process.pump2, wq, r, na, key)
            - self._k(process.signal, ws, r, na, key)
            - self._k(process.idler, wi, r, na, key)
        )
        return d, (wp + wq) / C_LIGHT


def mismatch(process: Process, peak: PeakObservation, lambda_p: float, r, na, delta, material=DEFAULT_MATERIAL):
    """Phase mismatch (rad/m) at the observed peak frequencies for fibers (r, NA, delta)."""
    d, s = _Mismatch(lambda_p, material).parts(process, peak, r, na)
    return d + np.asarray(delta, dtype=float) * s


@dataclass
class Contour:
    """Zero set of the mismatch in (r, NA) at fixed delta; polylines are (N, 2) [r, NA]."""

    process: Process
    peak: PeakObservation
    delta: float
    lines: list[np.ndarray]
    truncated: bool
    residual: float

    @property
    def points(self) -> np.ndarray:
        return np.concatenate(self.lines) if self.lines else np.empty((0, 2))


def contour_rna(
    process: Process,
    peak: PeakObservation,
    delta: float,
    lambda_p: float = 692.0,
    box: SearchBox = DEFAULT_BOX,
    n: int = 256,
    material: str = DEFAULT_MATERIAL,
) -> Contour:
    """Trace ``dk = 0`` in (r, NA) by marching squares with bisection on cell edges.

    Regions where a mode is unguided are masked; the contour stops there and
    ``truncated`` is set.
    """
    from skimage.measure import find_contours

    rs = np.linspace(*box.r, n)
    nas = np.linspace(*box.na, n)
    R, NA = np.meshgrid(rs, nas)
    mm = _Mismatch(lambda_p, material)
    d, s = mm.parts(process, peak, R, NA)
    z = d + delta * s
    finite = np.isfinite(z)
    truncated = not bool(finite.all())
    if not truncated and (z.min() > 0 or z.max() < 0):
        return Contour(process, peak, delta, [], truncated, 0.0)
    raw = find_contours(np.where(finite, z, 0.0), 0.0, mask=finite)
    if not raw:
        return Contour(process, peak, delta, [], truncated, 0.0)

    verts = np.concatenate(raw)
    row, col = verts[:, 0], verts[:, 1]
    on_row = np.abs(row - np.round(row)) < 1e-9
    # vertices on a row move along r, the others along NA
    fixed = np.where(on_row, nas[np.clip(np.round(row).astype(int), 0, n - 1)], rs[np.clip(np.round(col).astype(int), 0, n - 1)])
    lo_i = np.where(on_row, np.floor(col), np.floor(row)).astype(int)
    lo_i = np.clip(lo_i, 0, n - 2)
    axis_vals = np.where(on_row[:, None], rs[None, :], nas[None, :])
    a = axis_vals[np.arange(lo_i.size), lo_i]
    b = axis_vals[np.arange(lo_i.size), lo_i + 1]

    def func(x, idx):
        rr = np.where(on_row[idx], x, fixed[idx])
        nn = np.where(on_row[idx], fixed[idx], x)
        dd, ss = mm.parts(process, peak, rr, nn)
        return dd + delta * ss

    fa, fb = func(a, np.arange(a.size)), func(b, np.arange(b.size))
    good = np.isfinite(fa) & np.isfinite(fb) & (fa * fb <= 0)
    x = a + (b - a) * (np.where(on_row, col, row) - lo_i)
    if np.any(good):
        gi = np.flatnonzero(good)
        roots, fr = refine_brackets(lambda t, idx: func(t, gi[idx]), a[gi], b[gi], fa[gi], fb[gi], xtol=1e-13)
        x[gi] = roots
    pts = np.column_stack([np.where(on_row, x, fixed), np.where(on_row, fixed, x)])
    res = np.abs(func(x, np.arange(x.size)))
    lines, start = [], 0
    for seg in raw:
        lines.append(pts[start:start + len(seg)])
        start += len(seg)
    worst = float(np.nanmax(res[good])) if np.any(good) else 0.0
    return Contour(process, peak, delta, lines, truncated, worst)


def _max_v(box: SearchBox, lam_nm: float) -> float:
    return 2 * np.pi * box.r[1] * box.na[1] / (lam_nm * 1e-3)


def _supportable(process: Process, peak: PeakObservation, lambda_p: float, box: SearchBox) -> bool:
    waves = [(process.pump1, lambda_p), (process.pump2, lambda_p),
             (process.idler, peak.lambda_i), (process.signal, peak.lambda_s)]
    return all(cutoff_v(md.l, md.m) < _max_v(box, lam) for md, lam in waves)


def all_hypotheses(peaks, lambda_p: float = 692.0, processes=None, box: SearchBox = DEFAULT_BOX):
    """Injective process-to-peak assignments whose modes can be guided somewhere in the box."""
    processes = list(TABLE1.values()) if processes is None else list(processes)
    out = []
    for combo in itertools.permutations(processes, len(peaks)):
        if all(_supportable(p, pk, lambda_p, box) for p, pk in zip(combo, peaks)):
            out.append(combo)
    return out


def synthesize_peaks(fiber: FiberSpec, assignment, lambda_p: float = 692.0, labels=PEAK_LABELS, band=SEARCH_BAND):
    """Forward model: the phasematched pair of each assigned process."""
    peaks = []
    for label, proc in zip(labels, assignment):
        sols = solve_peaks(fiber, proc, lambda_p, band)
        if not sols:
            raise ValueError(f"process {proc.name} does not phasematch for {fiber}")
        sol = sols[0]
        peaks.append(PeakObservation(label, sol.lambda_i, sol.lambda_s))
    return peaks


@dataclass
class FitResult:
    hypothesis: tuple[Process, ...]
    labels: tuple[str, ...]
    fiber: FiberSpec | None
    residual: float
    coarse_residual: float
    per_peak: np.ndarray | None = None
    trace: list[float] = field(default_factory=list)
    refined: bool = False
    spread: dict[str, float] | None = None

    @property
    def assignment(self) -> dict[str, str]:
        return {lab: proc.name for lab, proc in zip(self.labels, self.hypothesis)}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.hypothesis)


@dataclass
class FitReport:
    results: list[FitResult]
    threshold: float
    n_hypotheses: int
    delta_grid: np.ndarray

    @property
    def best(self) -> FitResult:
        return self.results[0]

    @property
    def surviving(self) -> list[FitResult]:
        return [r for r in self.results if r.residual < self.threshold]


class _Refiner:
    """Trust-region sequential linear programming on the Chebyshev residual.

    Each step solves ``min t`` subject to ``|f + J d| <= t`` inside a box
    trust region; a step is kept only if the true residual drops, otherwise
    the region is halved.  The accepted residuals never increase.
    """

    def __init__(self, mm: _Mismatch, hypothesis, peaks, box: SearchBox, delta_range):
        self.mm, self.hyp, self.peaks = mm, hypothesis, peaks
        self.lo = np.array([box.r[0], box.na[0], delta_range[0]])
        self.hi = np.array([box.r[1], box.na[1], delta_range[1]])
        self.scale = self.hi - self.lo

        # wavenumber terms grouped per mode so each mode is solved once per call
        wp = mm.omega_p
        terms = {}
        for j, (proc, pk) in enumerate(zip(hypothesis, peaks)):
            wq = pk.omega_s + pk.omega_i - wp
            for md, om, sg in ((proc.pump1, wp, 1.0), (proc.pump2, wq, 1.0),
                               (proc.signal, pk.omega_s, -1.0), (proc.idler, pk.omega_i, -1.0)):
                terms.setdefault((md.l, md.m), []).append((j, om, sg))
        self._terms = []
        for (l, m), items in terms.items():
            j, om, sg = (np.array(t) for t in zip(*items))
            signs = np.zeros((j.size, len(peaks)))
            signs[np.arange(j.size), j.astype(int)] = sg
            self._terms.append((ModeId(l, m), om, signs))
        self._s = np.array([(pk.omega_s + pk.omega_i) / C_LIGHT for pk in peaks])

    def residuals(self, z):
        """Per-peak mismatch for scaled points ``z`` of shape (..., 3)."""
        x = self.lo + np.asarray(z) * self.scale
        r, na = x[..., 0, None], x[..., 1, None]
        out = np.zeros(x.shape[:-1] + (len(self.peaks),))
        for md, om, signs in self._terms:
            out += (effective_index_rna(md, om, r, na, self.mm.material) * om / C_LIGHT) @ signs
        return out + x[..., 2, None] * self._s

    def run(self, z0, maxiter=80, h=1e-7, rtol=1e-9):
        z = np.clip(np.asarray(z0, dtype=float), 0, 1)
        f = self.residuals(z)
        cheb = float(np.max(np.abs(f))) if np.all(np.isfinite(f)) else np.inf
        trace = [cheb]
        rho = 0.05
        s = self._s * self.scale[2]
        for _ in range(maxiter):
            if cheb == 0 or rho < 1e-9:
                break
            step = np.where(z + h <= 1, h, -h)
            probe = np.stack([z + np.array([step[0], 0, 0]), z + np.array([0, step[1], 0])])
            fp = self.residuals(probe)
            jac = np.column_stack([(fp[0] - f) / step[0], (fp[1] - f) / step[1], s])
            if not np.all(np.isfinite(jac)):
                rho *= 0.5
                continue
            n = f.size
            a_ub = np.block([[jac, -np.ones((n, 1))], [-jac, -np.ones((n, 1))]])
            b_ub = np.concatenate([-f, f])
            bounds = [(max(-rho, -z[i]), min(rho, 1 - z[i])) for i in range(3)] + [(0, None)]
            lp = linprog([0, 0, 0, 1], A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
            if not lp.success:
                rho *= 0.5
                continue
            cand = z + lp.x[:3]
            fc = self.residuals(cand)
            cc = float(np.max(np.abs(fc))) if np.all(np.isfinite(fc)) else np.inf
            if cc < cheb:
                z, f, cheb = cand, fc, cc
                trace.append(cheb)
                if np.max(np.abs(lp.x[:3])) >= 0.5 * rho:
                    rho = min(2 * rho, 0.5)
                if cheb <= rtol * np.max(np.abs(s)):
                    break
            else:
                rho *= 0.5
        return z, f, cheb, trace

    def fiber(self, z, length, material) -> FiberSpec:
        x = self.lo + z * self.scale
        return FiberSpec(float(x[0]), float(x[1]), float(x[2]), length, material)


def fit_parameters(
    peaks,
    lambda_p: float = 692.0,
    delta_range=DELTA_RANGE,
    hypotheses=None,
    box: SearchBox = DEFAULT_BOX,
    n_delta: int = 21,
    n_grid=(64, 64),
    threshold: float = 10.0,
    n_refine: int = 8,
    tolerance_nm: float | None = 1.0,
    energy_tol_nm: float = 0.5,
    length: float = 0.12,
    material: str = DEFAULT_MATERIAL,
    raise_on_failure: bool = True,
) -> FitReport:
    """Rank process hypotheses by how well they phasematch all peaks at once.

    Coarse stage: for every hypothesis and every delta on an ``n_delta``
    grid, the minimum over an (r, NA) grid of the largest |dk|.  The
    ``n_refine`` best hypotheses are then refined continuously in
    (r, NA, delta).  With ``tolerance_nm`` set, the best hypothesis is refit
    at every corner of +-tolerance shifts of the peaks and the half-range of
    the parameters is reported as ``spread``.
    """
    peaks = list(peaks)
    for pk in peaks:
        if abs(pk.implied_pump() - lambda_p) > energy_tol_nm:
            raise ValueError(
                f"peak {pk.label} implies a pump at {pk.implied_pump():.3f} nm, not {lambda_p} nm"
            )
    if hypotheses is None:
        hypotheses = all_hypotheses(peaks, lambda_p, box=box)
    hypotheses = [tuple(h) for h in hypotheses]
    if not hypotheses:
        raise NoFitError("no hypotheses to test")
    labels = tuple(pk.label for pk in peaks)

    mm = _Mismatch(lambda_p, material)
    procs = sorted({p for h in hypotheses for p in h}, key=lambda p: (p.name, p.quadruple))
    pindex = {p: i for i, p in enumerate(procs)}
    rs = np.linspace(*box.r, n_grid[0])
    nas = np.linspace(*box.na, n_grid[1])
    R, NA = np.meshgrid(rs, nas, indexing="ij")
    d = np.empty((len(procs), len(peaks), R.size))
    s = np.empty(len(peaks))
    for i, proc in enumerate(procs):
        for j, pk in enumerate(peaks):
            dd, ss = mm.parts(proc, pk, R.ravel(), NA.ravel(), key=("grid", j))
            d[i, j] = dd
            s[j] = ss
    d = np.where(np.isfinite(d), d, np.inf)
    hidx = np.array([[pindex[p] for p in h] for h in hypotheses])
    cols = np.arange(len(peaks))
    deltas = np.linspace(*delta_range, n_delta)

    best = np.full(len(hypotheses), np.inf)
    best_at = np.zeros((len(hypotheses), 2), dtype=int)
    chunk = max(1, 2_000_000 // (len(peaks) * R.size))
    for k, dl in enumerate(deltas):
        e = np.abs(d + dl * s[None, :, None])
        for lo in range(0, len(hypotheses), chunk):
            sl = slice(lo, lo + chunk)
            worst = e[hidx[sl], cols].max(axis=1)
            g = worst.argmin(axis=1)
            val = worst[np.arange(g.size), g]
            better = val < best[sl]
            best[sl] = np.where(better, val, best[sl])
            best_at[sl] = np.where(better[:, None], np.column_stack([np.full(g.size, k), g]), best_at[sl])

    order = np.lexsort((np.arange(len(hypotheses)), best))
    results = []
    for rank, hi in enumerate(order):
        hyp = hypotheses[hi]
        res = FitResult(hyp, labels, None, float(best[hi]), float(best[hi]))
        if rank < n_refine and np.isfinite(best[hi]):
            ref = _Refiner(mm, hyp, peaks, box, delta_range)
            k, g = best_at[hi]
            x0 = np.array([R.ravel()[g], NA.ravel()[g], deltas[k]])
            z, f, cheb, trace = ref.run((x0 - ref.lo) / ref.scale)
            res.fiber = ref.fiber(z, length, material)
            res.residual, res.per_peak, res.trace, res.refined = cheb, f, trace, True
        elif np.isfinite(best[hi]):
            k, g = best_at[hi]
            res.fiber = FiberSpec(float(R.ravel()[g]), float(NA.ravel()[g]), float(deltas[k]), length, material)
        results.append(res)
    results.sort(key=lambda r: (not r.refined, r.residual))
    report = FitReport(results, threshold, len(hypotheses), deltas)

    if report.best.residual >= threshold:
        if raise_on_failure:
            raise NoFitError(
                f"no hypothesis phasematches all peaks below {threshold} rad/m "
                f"(best {report.best.residual:.3g} rad/m)",
                report,
            )
        return report
    if tolerance_nm:
        report.best.spread = _corner_spread(report.best, peaks, lambda_p, box, delta_range, tolerance_nm, material)
    return report


def _corner_spread(result: FitResult, peaks, lambda_p, box, delta_range, tol, material):
    fits = []
    for signs in itertools.product((-1.0, 1.0), repeat=len(peaks)):
        shifted = []
        for sg, pk in zip(signs, peaks):
            ls = pk.lambda_s + sg * tol
            shifted.append(PeakObservation(pk.label, float(conjugate_nm(lambda_p, ls)), ls))
        ref = _Refiner(_Mismatch(lambda_p, material), result.hypothesis, shifted, box, delta_range)
        x0 = np.array([result.fiber.r, result.fiber.na, result.fiber.delta])
        z, _, _, _ = ref.run((x0 - ref.lo) / ref.scale)
        fits.append(ref.lo + z * ref.scale)
    fits = np.array(fits)
    half = (fits.max(axis=0) - fits.min(axis=0)) / 2
    return {"r": float(half[0]), "na": float(half[1]), "delta": float(half[2])}
