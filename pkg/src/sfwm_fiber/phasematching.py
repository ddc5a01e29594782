"""Phase mismatch, process enumeration and phasematched peak solving.

Cross-polarized scheme: both pumps travel on the slow axis, signal and
idler on the fast axis.  The signal is the long-wavelength photon.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ._roots import refine_brackets
from .dispersion import (
    Axis,
    FiberSpec,
    ModeId,
    guided_modes,
    nm_to_omega,
    wavenumber,
)
from .overlap import selection_rule

__all__ = [
    "Process",
    "PeakSolution",
    "DiagramContour",
    "TABLE1",
    "SEARCH_BAND",
    "IDLER_BAND",
    "SIGNAL_BAND",
    "delta_k",
    "delta_k_degenerate",
    "candidate_processes",
    "enumerate_processes",
    "solve_peaks",
    "phasematch_diagram",
    "conjugate_nm",
    "in_bands",
    "phasematch_rows",
    "candidate_separation",
]

SEARCH_BAND = (676.0, 950.0)
IDLER_BAND = (584.0, 676.0)
SIGNAL_BAND = (768.0, 849.0)


@dataclass(frozen=True, eq=False)
class Process:
    """Mode quadruple (pump1, pump2, idler, signal).

    The pump pair is unordered: processes compare equal when they differ
    only by swapping pumps.  ``label`` does not take part in comparison.
    """

    pump1: ModeId
    pump2: ModeId
    idler: ModeId
    signal: ModeId
    label: str | None = None

    @classmethod
    def from_labels(cls, p1: str, p2: str, idler: str, signal: str, label=None) -> Process:
        return cls(
            ModeId.parse(p1, Axis.SLOW),
            ModeId.parse(p2, Axis.SLOW),
            ModeId.parse(idler, Axis.FAST),
            ModeId.parse(signal, Axis.FAST),
            label,
        )

    @property
    def modes(self) -> tuple[ModeId, ModeId, ModeId, ModeId]:
        return (self.pump1, self.pump2, self.idler, self.signal)

    @property
    def key(self):
        return (tuple(sorted((self.pump1, self.pump2))), self.idler, self.signal)

    @property
    def quadruple(self) -> str:
        return ",".join(md.short for md in self.modes)

    @property
    def name(self) -> str:
        return self.label or f"({self.quadruple})"

    @property
    def azimuthal_orders(self) -> tuple[int, int, int, int]:
        return tuple(md.l for md in self.modes)

    def with_label(self, label) -> Process:
        return Process(self.pump1, self.pump2, self.idler, self.signal, label)

    def __eq__(self, other):
        return isinstance(other, Process) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"Process({self.name}: {self.quadruple})"


TABLE1 = {
    lab: Process.from_labels(*row, label=lab)
    for lab, row in {
        "A": ("01", "01", "01", "01"),
        "B": ("11", "11", "11", "11"),
        "C": ("01", "11", "11", "01"),
        "D": ("01", "11", "01", "11"),
        "E": ("21", "21", "21", "21"),
        "F": ("01", "21", "21", "01"),
        "G": ("11", "21", "21", "11"),
    }.items()
}
_TABLE1_BY_KEY = {p.key: lab for lab, p in TABLE1.items()}


def _labelled(process: Process) -> Process:
    if process.label is None and process.key in _TABLE1_BY_KEY:
        return process.with_label(_TABLE1_BY_KEY[process.key])
    return process


@dataclass(frozen=True)
class PeakSolution:
    """One phasematched (signal, idler) pair for a monochromatic pump; nm."""

    process: Process
    lambda_p: float
    lambda_s: float
    lambda_i: float
    residual: float

    @property
    def omega_s(self) -> float:
        return float(nm_to_omega(self.lambda_s))

    @property
    def omega_i(self) -> float:
        return float(nm_to_omega(self.lambda_i))

    @property
    def omega_p(self) -> float:
        return float(nm_to_omega(self.lambda_p))


@dataclass
class DiagramContour:
    """Phasematching contour of one process over a pump-wavelength sweep."""

    process: Process
    lambda_p: np.ndarray
    lambda_s: np.ndarray
    lambda_i: np.ndarray
    residual: np.ndarray
    pump_grid: np.ndarray = field(repr=False)


def conjugate_nm(lambda_p, lambda_x):
    """Energy-conserving partner wavelength: 1/l_x + 1/l_y = 2/l_p."""
    return 1.0 / (2.0 / np.asarray(lambda_p, dtype=float) - 1.0 / np.asarray(lambda_x, dtype=float))


def delta_k(fiber: FiberSpec, process: Process, omega_pump, omega_s, omega_i, strict: bool = True):
    """``k_p1(w) + k_p2(w_s + w_i - w) - k_sig(w_s) - k_idl(w_i)`` in rad/m, w = omega_pump."""
    omega_pump = np.asarray(omega_pump, dtype=float)
    omega_s = np.asarray(omega_s, dtype=float)
    omega_i = np.asarray(omega_i, dtype=float)
    omega_q = omega_s + omega_i - omega_pump
    return (
        wavenumber(fiber, process.pump1, omega_pump, strict)
        + wavenumber(fiber, process.pump2, omega_q, strict)
        - wavenumber(fiber, process.signal, omega_s, strict)
        - wavenumber(fiber, process.idler, omega_i, strict)
    )


def delta_k_degenerate(fiber: FiberSpec, process: Process, lambda_p, lambda_s, strict: bool = False):
    """Mismatch for a monochromatic pump at ``lambda_p`` (nm), idler from energy conservation."""
    lambda_p, lambda_s = np.broadcast_arrays(
        np.asarray(lambda_p, dtype=float), np.asarray(lambda_s, dtype=float)
    )
    # pump terms depend on the pump alone; solve them once per distinct pump
    pumps, inverse = np.unique(lambda_p, return_inverse=True)
    wpu = nm_to_omega(pumps)
    wp = wpu[inverse].reshape(lambda_p.shape)
    ws = nm_to_omega(lambda_s)
    wi = 2 * wp - ws
    with np.errstate(invalid="ignore"):
        kp = wavenumber(fiber, process.pump1, wpu, strict) + wavenumber(fiber, process.pump2, wpu, strict)
        return (
            kp[inverse].reshape(lambda_p.shape)
            - wavenumber(fiber, process.signal, ws, strict)
            - wavenumber(fiber, process.idler, wi, strict)
        )


def candidate_processes(modes) -> list[Process]:
    """Cross-polarized quadruples over ``modes`` with a non-vanishing azimuthal overlap."""
    modes = sorted({ModeId(md.l, md.m) for md in modes})
    out = []
    for p1, p2 in itertools.combinations_with_replacement(modes, 2):
        for idl, sig in itertools.product(modes, repeat=2):
            if selection_rule(p1.l, p2.l, idl.l, sig.l):
                out.append(
                    _labelled(Process(p1.on(Axis.SLOW), p2.on(Axis.SLOW), idl.on(Axis.FAST), sig.on(Axis.FAST)))
                )
    return out


def _signal_grid(lambda_p: float, band, n_grid: int) -> np.ndarray:
    lo = max(band[0], lambda_p)
    return np.linspace(lo, band[1], n_grid)


def _bracket_roots(values: np.ndarray):
    """Index pairs of sign changes and exact zeros along the last axis."""
    finite = np.isfinite(values[..., :-1]) & np.isfinite(values[..., 1:])
    change = finite & (np.sign(values[..., :-1]) * np.sign(values[..., 1:]) < 0)
    exact = values == 0
    return change, exact


def _solutions(process, lam_p, lam_s, residual):
    lam_i = conjugate_nm(lam_p, lam_s)
    return [
        PeakSolution(process, float(p), float(s), float(i), float(abs(res)))
        for p, s, i, res in zip(lam_p, lam_s, lam_i, residual)
    ]


def solve_peaks(
    fiber: FiberSpec,
    process: Process,
    lambda_p: float,
    band=SEARCH_BAND,
    n_grid: int = 2000,
    xtol_nm: float = 1e-6,
) -> list[PeakSolution]:
    """All phasematched signal wavelengths above ``lambda_p`` within ``band``.

    Sign changes of the mismatch on an ``n_grid`` signal grid are refined to
    ``xtol_nm``; grid nodes where the mismatch vanishes exactly (the
    degenerate point of identical waves) are reported as they are.
    """
    rows = phasematch_rows(fiber, process, np.array([float(lambda_p)]), band, n_grid, xtol_nm)
    return _solutions(process, *rows)


def phasematch_rows(fiber, process, pumps, band=SEARCH_BAND, n_grid=2000, xtol_nm=1e-6):
    """Vectorized core of :func:`solve_peaks` for many pump wavelengths."""
    pumps = np.asarray(pumps, dtype=float)
    grids = np.stack([_signal_grid(p, band, n_grid) for p in pumps])
    lam_p = np.broadcast_to(pumps[:, None], grids.shape)
    vals = delta_k_degenerate(fiber, process, lam_p, grids)
    change, exact = _bracket_roots(vals)

    rows_c, cols_c = np.nonzero(change)
    a, b = grids[rows_c, cols_c], grids[rows_c, cols_c + 1]
    pa, fa, fb = pumps[rows_c], vals[rows_c, cols_c], vals[rows_c, cols_c + 1]

    def func(x, idx):
        return delta_k_degenerate(fiber, process, pa[idx], x)

    roots, fr = refine_brackets(func, a, b, fa, fb, xtol=xtol_nm) if a.size else (a, a)

    rows_e, cols_e = np.nonzero(exact)
    all_p = np.concatenate([pa, pumps[rows_e]])
    all_s = np.concatenate([roots, grids[rows_e, cols_e]])
    all_r = np.concatenate([fr, np.zeros(rows_e.size)])
    order = np.lexsort((all_s, all_p))
    return all_p[order], all_s[order], all_r[order]


def enumerate_processes(
    fiber: FiberSpec,
    lambda_p: float,
    idler_band=IDLER_BAND,
    signal_band=SIGNAL_BAND,
    modes=None,
    search_band=SEARCH_BAND,
    n_grid: int = 2000,
) -> list[Process]:
    """Candidates that phasematch with both photons inside their filter bands."""
    if modes is None:
        modes = guided_modes(fiber, lambda_p)
    keep = []
    for proc in candidate_processes(modes):
        for sol in solve_peaks(fiber, proc, lambda_p, search_band, n_grid):
            if in_bands(sol, idler_band, signal_band):
                keep.append(proc)
                break
    return keep


def in_bands(sol: PeakSolution, idler_band=IDLER_BAND, signal_band=SIGNAL_BAND) -> bool:
    return (
        idler_band[0] <= sol.lambda_i <= idler_band[1]
        and signal_band[0] <= sol.lambda_s <= signal_band[1]
    )


def phasematch_diagram(
    fiber: FiberSpec,
    process: Process,
    lambda_p_range,
    n_pump: int = 200,
    band=SEARCH_BAND,
    n_grid: int = 2000,
) -> DiagramContour:
    """:func:`solve_peaks` swept over ``n_pump`` pump wavelengths."""
    pumps = np.linspace(float(lambda_p_range[0]), float(lambda_p_range[1]), n_pump)
    lam_p, lam_s, res = phasematch_rows(fiber, process, pumps, band, n_grid)
    return DiagramContour(process, lam_p, lam_s, conjugate_nm(lam_p, lam_s), np.abs(res), pumps)


def candidate_separation(fiber: FiberSpec, lambda_p: float, labels=("C", "F"), idler_band=IDLER_BAND,
                         signal_band=SIGNAL_BAND) -> dict:
    """In-band solutions of competing candidates and their signal/idler separations (nm).

    Both candidates are kept; nothing is decided between them.
    """
    sols = {}
    for lab in labels:
        hits = [s for s in solve_peaks(fiber, TABLE1[lab], lambda_p) if in_bands(s, idler_band, signal_band)]
        sols[lab] = hits[0] if hits else None
    out = {"solutions": sols, "separation_s_nm": None, "separation_i_nm": None}
    a, b = (sols[lab] for lab in labels[:2])
    if a is not None and b is not None:
        out["separation_s_nm"] = abs(a.lambda_s - b.lambda_s)
        out["separation_i_nm"] = abs(a.lambda_i - b.lambda_i)
    return out
