"""Joint spectral amplitudes, single-photon spectra and pump-mode fractions.

Each process contributes its own joint amplitude; the two orderings of a
non-degenerate pump pair add coherently inside it.  Distinct processes are
summed incoherently in the single-photon spectra.

Pump pathways are weighted by ``sqrt(W_p W_q)``, the product of the pump
field amplitudes in each mode, so a peak height scales as ``W_p W_q``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.signal import find_peaks

from .dispersion import Axis, C_LIGHT, FiberSpec, ModeId, nm_to_omega, omega_to_nm, wavenumber
from .overlap import gamma
from .phasematching import (
    IDLER_BAND,
    SIGNAL_BAND,
    PeakSolution,
    Process,
    delta_k,
    in_bands,
    solve_peaks,
)

__all__ = [
    "PumpSpec",
    "JointAmplitude",
    "SpectrumCurve",
    "InfeasibleError",
    "pump_amplitude",
    "fwhm_to_omega",
    "nominal_peak",
    "phasematching_fwhm",
    "jsa_grid",
    "single_spectrum",
    "peak_heights",
    "count_peaks",
    "unit_responses",
    "solve_pump_fractions",
    "predict_peak_iv",
]

LN2 = np.log(2.0)


class InfeasibleError(ValueError):
    """Peak heights admit no non-negative pump-fraction solution."""


def _mode_key(mode) -> ModeId:
    if isinstance(mode, str):
        mode = ModeId.parse(mode)
    return ModeId(mode.l, mode.m, Axis.SLOW)


@dataclass(frozen=True)
class PumpSpec:
    """Gaussian pump: center and intensity FWHM in nm, per-mode power fractions.

    ``chirp`` is a quadratic spectral phase in s^2 (zero is transform limited).
    ``table`` optionally replaces the Gaussian by a tabulated intensity
    spectrum ``((wavelength_nm, ...), (intensity, ...))``; ``fwhm`` then only
    sets the integration window.
    """

    center: float = 692.0
    fwhm: float = 2.0
    fractions: Mapping[ModeId, float] = field(default_factory=dict)
    chirp: float = 0.0
    table: tuple | None = None

    def __post_init__(self):
        fr = {_mode_key(k): float(v) for k, v in dict(self.fractions).items()}
        if not fr:
            fr = {_mode_key("01"): 1.0}
        if any(v < 0 for v in fr.values()):
            raise ValueError("pump fractions must be non-negative")
        total = sum(fr.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"pump fractions must sum to one, got {total}")
        if not self.fwhm > 0:
            raise ValueError("pump bandwidth must be positive")
        object.__setattr__(self, "fractions", fr)
        if self.table is not None:
            lam, inten = (tuple(float(x) for x in col) for col in self.table)
            if len(lam) != len(inten) or len(lam) < 2:
                raise ValueError("pump table needs matching wavelength and intensity columns")
            if any(b <= a for a, b in zip(lam, lam[1:])):
                raise ValueError("pump table wavelengths must increase")
            if min(inten) < 0 or max(inten) <= 0:
                raise ValueError("pump table intensities must be non-negative and not all zero")
            object.__setattr__(self, "table", (lam, inten))

    @classmethod
    def normalized(cls, center=692.0, fwhm=2.0, fractions=None, chirp=0.0, table=None) -> PumpSpec:
        fr = {_mode_key(k): float(v) for k, v in dict(fractions or {}).items()}
        total = sum(fr.values())
        if total <= 0:
            raise ValueError("pump fractions must have a positive sum")
        return cls(center, fwhm, {k: v / total for k, v in fr.items()}, chirp, table)

    def fraction(self, mode) -> float:
        return self.fractions.get(_mode_key(mode), 0.0)

    @property
    def omega(self) -> float:
        return float(nm_to_omega(self.center))

    @property
    def fwhm_omega(self) -> float:
        return fwhm_to_omega(self.center, self.fwhm)

    @property
    def sigma(self) -> float:
        """Standard deviation of the (amplitude) Gaussian in rad/s."""
        return self.fwhm_omega / (2 * np.sqrt(LN2))


def fwhm_to_omega(center_nm: float, fwhm_nm: float) -> float:
    return float(2 * np.pi * C_LIGHT * fwhm_nm * 1e-9 / (center_nm * 1e-9) ** 2)


def pump_amplitude(pump: PumpSpec, omega):
    """Unit-peak Gaussian amplitude whose modulus squared has the pump FWHM."""
    d = np.asarray(omega, dtype=float) - pump.omega
    if pump.table is None:
        amp = np.exp(-(d * d) / (2 * pump.sigma**2))
    else:
        lam, inten = (np.asarray(col) for col in pump.table)
        with np.errstate(divide="ignore"):
            x = omega_to_nm(np.asarray(omega, dtype=float))
        amp = np.sqrt(np.interp(x, lam, inten, left=0.0, right=0.0) / inten.max())
    if pump.chirp:
        return amp * np.exp(1j * pump.chirp * d * d)
    return amp.astype(complex)


def _pathways(process: Process):
    """Ordered pump-mode pathways (p, q) summed coherently within a process."""
    first = (process.pump1, process.pump2)
    if process.pump1 == process.pump2:
        return [first]
    return [first, (process.pump2, process.pump1)]


def _pump_weight(pump: PumpSpec, process: Process, unit: bool = False) -> float:
    if unit:
        return 1.0
    return float(np.sqrt(pump.fraction(process.pump1) * pump.fraction(process.pump2)))


def nominal_peak(fiber: FiberSpec, process: Process, lambda_p: float, idler_band=None, signal_band=None):
    """Phasematched solution used to center grids and evaluate the overlap.

    Prefers a root inside both filter bands when bands are given.
    """
    sols = solve_peaks(fiber, process, lambda_p)
    if not sols:
        return None
    if idler_band is not None and signal_band is not None:
        inside = [s for s in sols if in_bands(s, idler_band, signal_band)]
        if inside:
            return inside[0]
    return sols[0]


def _gamma_at(fiber: FiberSpec, process: Process, peak: PeakSolution | None, omega_p: float) -> float:
    if peak is None:
        return gamma(fiber, process, omega_p).value
    return gamma(fiber, process, (omega_p, omega_p, peak.omega_i, peak.omega_s)).value


def phasematching_fwhm(fiber: FiberSpec, process: Process, peak: PeakSolution, step: float | None = None) -> float:
    """CW sinc^2 width in signal angular frequency along the energy-conserving line.

    Uses a central finite difference of the mismatch with respect to the
    signal frequency (idler tied to ``2 w_p - w_s``).
    """
    wp, ws = peak.omega_p, peak.omega_s
    h = step if step is not None else 1e-5 * abs(wp - ws) + 1e9
    dk = delta_k(fiber, process, wp, np.array([ws - h, ws + h]), 2 * wp - np.array([ws - h, ws + h]))
    slope = (dk[1] - dk[0]) / (2 * h)
    return float(2 * 2.7831152886 / (fiber.length * abs(slope)))


@dataclass
class JointAmplitude:
    process: Process
    omega_s: np.ndarray
    omega_i: np.ndarray
    values: np.ndarray
    gamma: float
    weight: float
    covers_support: bool = True

    @property
    def lambda_s(self):
        return omega_to_nm(self.omega_s)

    @property
    def lambda_i(self):
        return omega_to_nm(self.omega_i)


def _pump_integral(fiber, pump, process, omega_s, omega_sum, n_nodes):
    """``sum_(p,q) int dw a(w) a(W - w) sinc(L dk / 2)`` on broadcast arrays.

    ``omega_s`` and ``omega_sum`` (W = w_s + w_i) broadcast together; the
    idler frequency is ``W - w_s``.  Gauss-Legendre nodes cover four pump
    standard deviations either side of W / 2, the center of the pump product.
    """
    x, wts = np.polynomial.legendre.leggauss(n_nodes)
    half = 4 * pump.sigma
    omega_s, omega_sum = np.broadcast_arrays(np.asarray(omega_s, float), np.asarray(omega_sum, float))
    flat_s = omega_s.ravel()
    flat_sum = omega_sum.ravel()
    k_sig = wavenumber(fiber, process.signal, flat_s)
    k_idl = wavenumber(fiber, process.idler, flat_sum - flat_s)
    uniq, inv = np.unique(flat_sum, return_inverse=True)
    # both pump frequencies for every distinct W and quadrature node
    omega_p = 0.5 * uniq[:, None] + half * x[None, :]
    omega_q = uniq[:, None] - omega_p
    a_pair = pump_amplitude(pump, omega_p) * pump_amplitude(pump, omega_q) * (half * wts)[None, :]
    total = np.zeros(flat_s.shape, dtype=complex)
    for p, q in _pathways(process):
        k_pump = wavenumber(fiber, p, omega_p) + wavenumber(fiber, q, omega_q)
        chunk = 4096
        for lo in range(0, flat_s.size, chunk):
            sl = slice(lo, lo + chunk)
            dk = k_pump[inv[sl]] - (k_sig[sl] + k_idl[sl])[:, None]
            sinc = np.sinc(fiber.length * dk / (2 * np.pi))
            total[sl] += np.einsum("ij,ij->i", a_pair[inv[sl]], sinc)
    return total.reshape(omega_s.shape)


def _grid_sums(omega_s, omega_i):
    """``w_s + w_i`` on the grid, bit-identical along anti-diagonals of equal-step grids."""
    ds, di = np.diff(omega_s), np.diff(omega_i)
    if ds.size and di.size:
        step = ds[0]
        if np.allclose(ds, step, rtol=1e-9, atol=0) and np.allclose(di, step, rtol=1e-9, atol=0):
            k = np.arange(omega_s.size)[:, None] + np.arange(omega_i.size)[None, :]
            return (omega_s[0] + omega_i[0]) + step * k
    return omega_s[:, None] + omega_i[None, :]


def jsa_grid(
    fiber: FiberSpec,
    pump: PumpSpec,
    process: Process,
    omega_s=None,
    omega_i=None,
    n_grid: int = 512,
    n_nodes: int = 129,
    span: float | None = None,
) -> JointAmplitude:
    """Joint spectral amplitude of one process on a (signal, idler) grid.

    Default grids are centered on the phasematched point with half-width
    ``span`` (rad/s), by default five times the larger of the pump FWHM and
    the CW phasematching width.
    """
    peak = nominal_peak(fiber, process, pump.center)
    if omega_s is None or omega_i is None:
        if peak is None:
            raise ValueError(f"process {process.name} does not phasematch; pass explicit grids")
        if span is None:
            span = 5 * max(pump.fwhm_omega, phasematching_fwhm(fiber, process, peak))
        offs = np.linspace(-span, span, n_grid)
        omega_s = peak.omega_s + offs
        omega_i = peak.omega_i + offs
    omega_s = np.asarray(omega_s, dtype=float)
    omega_i = np.asarray(omega_i, dtype=float)
    g = _gamma_at(fiber, process, peak, pump.omega)
    weight = _pump_weight(pump, process)
    values = np.zeros((omega_s.size, omega_i.size), dtype=complex)
    if weight != 0.0:
        ws, wi = np.meshgrid(omega_s, omega_i, indexing="ij")
        values = weight * g * _pump_integral(fiber, pump, process, ws, _grid_sums(omega_s, omega_i), n_nodes)
    peak_abs = np.abs(values).max() if values.size else 0.0
    edge = max(
        np.abs(values[0]).max(), np.abs(values[-1]).max(),
        np.abs(values[:, 0]).max(), np.abs(values[:, -1]).max(),
    ) if values.size else 0.0
    # sinc sidelobes five widths out still reach ~0.07 of the peak amplitude
    covers = peak_abs == 0 or edge <= 0.1 * peak_abs
    return JointAmplitude(process, omega_s, omega_i, values, g, weight, bool(covers))


@dataclass
class SpectrumCurve:
    """Single-photon spectrum of one detection arm with per-process parts."""

    arm: str
    wavelength: np.ndarray
    omega: np.ndarray
    components: dict[str, np.ndarray]
    processes: dict[str, Process] = field(default_factory=dict)

    @property
    def total(self) -> np.ndarray:
        parts = list(self.components.values())
        return np.sum(parts, axis=0) if parts else np.zeros_like(self.omega)


def single_spectrum(
    fiber: FiberSpec,
    pump: PumpSpec,
    processes,
    band=None,
    arm: str = "signal",
    n_points: int = 2000,
    n_nodes: int = 129,
    n_conj: int = 128,
    unit_weights: bool = False,
) -> SpectrumCurve:
    """Frequency-resolved single-channel spectrum of one arm (nm band).

    The conjugate photon is integrated out with Gauss-Legendre nodes in the
    sum frequency ``w_s + w_i`` over eight pump standard deviations around
    twice the pump frequency, where the pump envelope confines the amplitude.
    ``unit_weights`` replaces every pump-mode weight by one.
    """
    if arm not in ("signal", "idler"):
        raise ValueError("arm must be 'signal' or 'idler'")
    if band is None:
        band = SIGNAL_BAND if arm == "signal" else IDLER_BAND
    lam = np.linspace(float(band[0]), float(band[1]), n_points)
    omega = nm_to_omega(lam)
    x, wts = np.polynomial.legendre.leggauss(n_conj)
    half = 8 * pump.sigma
    sums = 2 * pump.omega + half * x
    components = {}
    labelled = {}
    for proc in processes:
        peak = nominal_peak(fiber, proc, pump.center, IDLER_BAND, SIGNAL_BAND)
        g = _gamma_at(fiber, proc, peak, pump.omega)
        weight = _pump_weight(pump, proc, unit_weights)
        s = np.zeros(omega.shape)
        if weight != 0.0:
            if arm == "signal":
                ws = omega[:, None]
            else:
                ws = sums[None, :] - omega[:, None]
            amp = _pump_integral(fiber, pump, proc, ws, sums[None, :], n_nodes)
            s = (weight * g) ** 2 * (np.abs(amp) ** 2 @ (half * wts))
        components[proc.name] = s
        labelled[proc.name] = proc
    return SpectrumCurve(arm, lam, omega, components, labelled)


def peak_heights(curve: SpectrumCurve) -> dict[str, tuple[float, float]]:
    """Per-process (wavelength, height) at the maximum of each component."""
    out = {}
    for name, s in curve.components.items():
        i = int(np.argmax(s))
        out[name] = (float(curve.wavelength[i]), float(s[i]))
    return out


def count_peaks(curve: SpectrumCurve, prominence: float = 0.01) -> np.ndarray:
    """Wavelengths of local maxima of the total spectrum.

    ``prominence`` is relative to the global maximum.
    """
    total = curve.total
    if not np.any(total > 0):
        return np.empty(0)
    idx, _ = find_peaks(total, prominence=prominence * total.max())
    return curve.wavelength[idx]


def unit_responses(fiber: FiberSpec, pump: PumpSpec, processes, arm: str = "idler", **kw) -> dict[str, float]:
    """Peak height of each process when every pump-mode weight is one.

    A peak with pump pair (p, q) then has height ``W_p W_q`` times this
    response; it contains the overlap squared, the coherent pathway count and
    the phasematching lineshape.
    """
    curve = single_spectrum(fiber, pump, processes, arm=arm, unit_weights=True, **kw)
    return {name: h for name, (_, h) in peak_heights(curve).items()}


def _response(name, gammas, responses):
    if responses is not None:
        return float(responses[name])
    g = gammas[name]
    g = getattr(g, "value", g)
    return float(g) ** 2


def solve_pump_fractions(
    peak_heights_,
    gammas=None,
    responses=None,
    labels=("A", "B", "G"),
) -> dict[ModeId, float]:
    """Pump fractions (W01, W11, W21) from the heights of peaks I, II, III.

    Heights follow ``h_I = k W01^2 R_A``, ``h_II = k W11^2 R_B`` and
    ``h_III = k W11 W21 R_G`` with one unknown detection constant k.  R is
    the squared overlap unless explicit ``responses`` are given.
    """
    h1, h2, h3 = (float(h) for h in peak_heights_)
    if gammas is None and responses is None:
        raise ValueError("need overlaps or responses")
    r1, r2, r3 = (_response(name, gammas, responses) for name in labels)
    if min(h1, h2, h3) < 0 or min(r1, r2, r3) <= 0:
        raise InfeasibleError("heights must be non-negative and responses positive")
    if h1 == 0:
        raise InfeasibleError("peak I vanishes: W01 = 0 leaves the system undetermined")
    if h2 == 0:
        if h3 > 0:
            raise InfeasibleError("peak II vanishes while peak III does not (needs W11 > 0)")
        raise InfeasibleError("peaks II and III vanish: W21 is undetermined")
    ratio_11_01 = np.sqrt((h2 / r2) / (h1 / r1))
    ratio_21_11 = (h3 / r3) / (h2 / r2)
    w01 = 1.0 / (1.0 + ratio_11_01 + ratio_11_01 * ratio_21_11)
    w11 = ratio_11_01 * w01
    w21 = ratio_21_11 * w11
    return {_mode_key("01"): w01, _mode_key("11"): w11, _mode_key("21"): w21}


def predict_peak_iv(
    fractions,
    gammas=None,
    responses=None,
    candidates=None,
    reference: str = "A",
) -> dict[str, float]:
    """Predicted peak-IV to peak-I height ratio for each candidate process.

    Each candidate uses its own pump pair.  ``candidates`` maps a label to a
    :class:`Process`; by default both C and F.
    """
    from .phasematching import TABLE1

    if candidates is None:
        candidates = {k: TABLE1[k] for k in ("C", "F")}
    fr = {_mode_key(k): float(v) for k, v in dict(fractions).items()}
    ref = TABLE1[reference]
    ref_h = fr.get(_mode_key(ref.pump1), 0.0) * fr.get(_mode_key(ref.pump2), 0.0) * _response(reference, gammas, responses)
    out = {}
    for name, proc in candidates.items():
        h = fr.get(_mode_key(proc.pump1), 0.0) * fr.get(_mode_key(proc.pump2), 0.0) * _response(name, gammas, responses)
        out[name] = h / ref_h if ref_h > 0 else float("inf")
    return out
