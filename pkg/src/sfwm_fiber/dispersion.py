"""Material and modal dispersion of a weakly-guiding step-index fiber.

All heavy routines are vectorized over angular frequency.  Wavelengths at
the public surface are vacuum wavelengths in nanometers; the core radius is
in micrometers and wavenumbers come out in rad/m.

The LP characteristic equation is written in the pole-free form

    H(u) = u J_{l+1}(u) - w [K_{l+1}(w) / K_l(w)] J_l(u),   u^2 + w^2 = V^2,

whose zeros coincide with those of the usual ratio form.  For a given
(l, m) the root lies in the interval bounded below by the mode cutoff and
above by min(j_{l,m}, V), which contains exactly one zero of H.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.constants import c as C_LIGHT
from scipy.optimize import brentq

from .materials import DEFAULT_MATERIAL, load_material, material_index

__all__ = [
    "C_LIGHT",
    "Axis",
    "FiberSpec",
    "ModeId",
    "ModeCutoffError",
    "nm_to_omega",
    "omega_to_nm",
    "v_number",
    "cutoff_v",
    "guided_modes",
    "characteristic",
    "solve_u",
    "solve_uw",
    "mode_roots",
    "effective_index",
    "effective_index_rna",
    "wavenumber",
]

N_SCAN = 512
# smallest resolvable b = (w/V)^2: keeps n_eff - n2 about a hundred ulps above the cladding
B_MIN = 1e-12


class ModeCutoffError(ValueError):
    """Requested LP mode is not guided at the evaluation frequency."""


class Axis(str, Enum):
    """Polarization axis of the birefringent fiber."""

    SLOW = "slow"  # x; carries the birefringence offset
    FAST = "fast"  # y


@dataclass(frozen=True)
class FiberSpec:
    """Step-index fiber with a constant birefringence offset.

    r is the core radius in micrometers, length is in meters.  The cladding
    follows ``material``; the core index is derived from the numerical
    aperture so that NA is wavelength independent.
    """

    r: float
    na: float
    delta: float = 0.0
    length: float = 0.12
    material: str = DEFAULT_MATERIAL

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"core radius must be positive, got {self.r}")
        if not 0 <= self.na < 1:
            raise ValueError(f"numerical aperture must lie in [0, 1), got {self.na}")
        if not self.delta >= 0:
            raise ValueError(f"birefringence offset must be non-negative, got {self.delta}")
        if not self.length > 0:
            raise ValueError(f"fiber length must be positive, got {self.length}")

    def cladding_index(self, lam_um):
        return material_index(load_material(self.material), lam_um)

    def core_index(self, lam_um):
        return np.sqrt(self.cladding_index(lam_um) ** 2 + self.na**2)

    def replace(self, **changes) -> FiberSpec:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, order=True)
class ModeId:
    """LP_lm mode label on one polarization axis."""

    l: int
    m: int
    axis: Axis = Axis.FAST

    def __post_init__(self):
        if self.l < 0 or self.m < 1:
            raise ValueError(f"invalid LP indices ({self.l}, {self.m})")
        object.__setattr__(self, "axis", Axis(self.axis))

    @property
    def short(self) -> str:
        return f"{self.l}{self.m}"

    @property
    def name(self) -> str:
        return f"LP{self.l}{self.m}"

    def on(self, axis) -> ModeId:
        return ModeId(self.l, self.m, Axis(axis))

    @classmethod
    def parse(cls, label: str, axis=Axis.FAST) -> ModeId:
        """Parse ``"01"``, ``"LP11"`` or ``"lp21"``."""
        text = label.strip().upper().removeprefix("LP")
        if len(text) != 2 or not text.isdigit():
            raise ValueError(f"cannot parse LP mode label {label!r}")
        return cls(int(text[0]), int(text[1]), Axis(axis))

    def __str__(self):
        return f"{self.name}/{self.axis.value}"


def nm_to_omega(lam_nm):
    return 2 * np.pi * C_LIGHT / (np.asarray(lam_nm, dtype=float) * 1e-9)


def omega_to_nm(omega):
    return 2 * np.pi * C_LIGHT / np.asarray(omega, dtype=float) * 1e9


def _lam_um(omega):
    return 2 * np.pi * C_LIGHT / np.asarray(omega, dtype=float) * 1e6


def v_number(fiber: FiberSpec, lam_nm):
    """Normalized frequency ``2 pi r NA / lambda``."""
    lam = np.asarray(lam_nm, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("wavelength must be positive")
    v = 2 * np.pi * fiber.r * fiber.na / (lam * 1e-3)
    return float(v) if v.ndim == 0 else v


@lru_cache(maxsize=None)
def cutoff_v(l: int, m: int) -> float:
    """Cutoff V of LP_lm: j_{1,m-1} for l = 0 (zero for LP01), else j_{l-1,m}."""
    if l == 0:
        return 0.0 if m == 1 else float(special.jn_zeros(1, m - 1)[-1])
    return float(special.jn_zeros(l - 1, m)[-1])


@lru_cache(maxsize=None)
def _j_zero(l: int, m: int) -> float:
    return float(special.jn_zeros(l, m)[-1])


def _resolvable(l: int, m: int, v: float) -> bool:
    """True if the LP_lm root at V brackets inside the solver's interval.

    Just above an l = 0 cutoff the exterior decay w shrinks like
    exp(-1/(j (V - j))), so n_eff - n2 underflows double precision for
    V - j below roughly 0.02 and the mode cannot be told from the cladding.
    """
    a = cutoff_v(l, m)
    b = min(_j_zero(l, m), v * (1 - 1e-14))
    return bool(characteristic(l, a, v) * characteristic(l, b, v) <= 0)


def guided_modes(fiber: FiberSpec, lam_nm, axis=Axis.FAST) -> list[ModeId]:
    """All LP modes with cutoff below V and a resolvable root, ordered by cutoff.

    Even LP01 drops out below V of about 0.37, where b falls under ``B_MIN``.
    """
    v = float(v_number(fiber, lam_nm))
    found = []
    l = 0
    while cutoff_v(l, 1) < v or l == 0:
        m = 1
        while cutoff_v(l, m) < v or (l == 0 and m == 1):
            if v > 0 and _resolvable(l, m, v):
                found.append((cutoff_v(l, m), ModeId(l, m, axis)))
            m += 1
        l += 1
    return [mode for _, mode in sorted(found, key=lambda t: (t[0], t[1].l))]


def _bessel_orders(l: int, u, w):
    """J_l(u), J_{l+1}(u) and exponentially scaled K_l(w), K_{l+1}(w).

    Built by upward recurrence from orders 0 and 1, which is stable here
    because guided LP_lm roots satisfy u > j_{l-1,1} > l - 1.
    """
    j_lo, j_hi = special.j0(u), special.j1(u)
    k_lo, k_hi = special.k0e(w), special.k1e(w)
    for n in range(1, l + 1):
        with np.errstate(divide="ignore", invalid="ignore"):
            j_next = np.where(u > 0, 2 * n / u * j_hi - j_lo, 0.0)
        k_next = k_lo + 2 * n / w * k_hi
        j_lo, j_hi = j_hi, j_next
        k_lo, k_hi = k_hi, k_next
    return j_lo, j_hi, k_lo, k_hi


def characteristic(l: int, u, v, w=None):
    """Pole-free LP characteristic function H(u) at normalized frequency v.

    ``w`` defaults to sqrt(v^2 - u^2); pass the solver's own w near cutoff,
    where recomputing it from u loses all precision.
    """
    u = np.asarray(u, dtype=float)
    if w is None:
        w = np.sqrt(np.maximum(np.asarray(v, dtype=float) ** 2 - u * u, 0.0))
    jl, jl1, kl, kl1 = _bessel_orders(l, u, np.asarray(w, dtype=float))
    return u * jl1 - w * (kl1 / kl) * jl


def _h_of_w(l: int, w, v):
    return characteristic(l, np.sqrt((v - w) * (v + w)), v, w)


def _w_bracket(l: int, m: int, v):
    """Bracket in w: the cutoff end u = j_{l-1,m} and the end u = min(j_lm, V) or b = B_MIN."""
    hi = np.sqrt(np.maximum((v - cutoff_v(l, m)) * (v + cutoff_v(l, m)), 0.0))
    jz = _j_zero(l, m)
    lo = np.where(jz < v, np.sqrt(np.maximum((v - jz) * (v + jz), 0.0)), 0.0)
    return np.maximum(lo, v * np.sqrt(B_MIN)), hi


def _resolvable(l: int, m: int, v: float) -> bool:
    """True if LP_lm has a root with b = (w/V)^2 of at least ``B_MIN``.

    Just above an l = 0 cutoff w shrinks like exp(-1/(j (V - j))), so
    n_eff - n2 underflows double precision for V - j below roughly 0.02
    and the mode cannot be told from the cladding.
    """
    lo, hi = _w_bracket(l, m, v)
    return bool(lo < hi and _h_of_w(l, lo, v) * _h_of_w(l, hi, v) <= 0)


def solve_uw(l: int, m: int, v, strict: bool = True):
    """Transverse wavenumbers (u, w) of LP_lm for each normalized frequency.

    Vectorized Illinois (modified regula falsi) iteration in w, which stays
    well conditioned up to cutoff, on the bracket from ``_w_bracket``.
    Unguided entries raise :class:`ModeCutoffError` or, with
    ``strict=False``, come back as NaN.
    """
    v = np.asarray(v, dtype=float)
    shape = v.shape
    v = v.ravel()
    out_w = np.full(v.shape, np.nan)
    lo_u = cutoff_v(l, m)
    guided = v > lo_u
    if strict and not np.all(guided):
        raise ModeCutoffError(f"LP{l}{m} is cut off (V = {v[~guided].min():.6g} <= {lo_u:.6g})")
    idx = np.flatnonzero(guided)
    if idx.size:
        vv = v[idx]
        a, b = _w_bracket(l, m, vv)
        fa, fb = _h_of_w(l, a, vv), _h_of_w(l, b, vv)
        bad = (a >= b) | (fa * fb > 0)
        if np.any(bad):
            # root squeezed against V: the mode sits on its cutoff
            if strict:
                raise ModeCutoffError(f"LP{l}{m} has no resolvable root at V = {vv[bad].min():.6g}")
        ok = ~bad
        active = np.flatnonzero(ok)
        a, b, fa, fb, vv = a[ok], b[ok], fa[ok], fb[ok], vv[ok]
        root = b.copy()
        best_a = a.copy()
        live = np.arange(a.size)
        for _ in range(200):
            if live.size == 0:
                break
            denom = fb - fa
            cand = b - fb * (b - a) / np.where(denom == 0, 1.0, denom)
            outside = (denom == 0) | ~(
                (cand > np.minimum(a, b)) & (cand < np.maximum(a, b))
            )
            cand = np.where(outside, 0.5 * (a + b), cand)
            fc = _h_of_w(l, cand, vv)
            flip = fc * fb < 0
            a = np.where(flip, b, a)
            fa = np.where(flip, fb, 0.5 * fa)
            b, fb = cand, fc
            root[live] = b
            best_a[live] = a
            done = (fc == 0) | (np.abs(b - a) <= 4e-16 * np.abs(b))
            keep = ~done
            live, a, b, fa, fb, vv = live[keep], a[keep], b[keep], fa[keep], fb[keep], vv[keep]
        # the bracket end with the smaller residual (fa is halved by Illinois, so re-evaluate)
        va = v[idx[active]]
        other, here = _h_of_w(l, best_a, va), _h_of_w(l, root, va)
        out_w[idx[active]] = np.where(np.abs(other) < np.abs(here), best_a, root)
    out_u = np.sqrt((v - out_w) * (v + out_w))
    if shape:
        return out_u.reshape(shape), out_w.reshape(shape)
    return float(out_u[0]), float(out_w[0])


def solve_u(l: int, m: int, v, strict: bool = True):
    """Interior transverse wavenumber u of LP_lm; see :func:`solve_uw`."""
    return solve_uw(l, m, v, strict)[0]


def _indices(fiber: FiberSpec, omega):
    lam = _lam_um(omega)
    n2 = np.asarray(fiber.cladding_index(lam), dtype=float)
    v = 2 * np.pi * fiber.r * fiber.na / lam
    return n2, v


def mode_roots(fiber: FiberSpec, l: int, omega: float, n_scan: int = N_SCAN) -> np.ndarray:
    """Every LP_l* effective index at one frequency, by brute-force bracketing.

    Scans H on ``n_scan`` uniformly spaced effective indices spanning the
    open interval (n2, n1) and bisects each sign change.  Returned in descending order, so
    entry ``m - 1`` is LP_lm.
    """
    n2, v = _indices(fiber, omega)
    n2, v = float(n2), float(v)
    n1 = np.sqrt(n2**2 + fiber.na**2)
    if v == 0:
        return np.empty(0)

    def h(n):
        b = (n * n - n2 * n2) / fiber.na**2
        return characteristic(l, v * np.sqrt(np.clip(1 - b, 0, None)), v)

    # end points hug the open interval so near-cutoff roots are bracketed
    t = np.linspace(0.0, 1.0, n_scan)
    t[0], t[-1] = 1e-13, 1 - 1e-13
    grid = n2 + (n1 - n2) * t
    vals = h(grid)
    roots = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        roots.append(brentq(h, grid[i], grid[i + 1], xtol=1e-16, rtol=1e-15))
    return np.array(sorted(roots, reverse=True))


def effective_index(fiber: FiberSpec, mode: ModeId, omega, strict: bool = True):
    """Effective index of ``mode``; the slow axis carries ``+ fiber.delta``."""
    n2, v = _indices(fiber, omega)
    _, w = solve_uw(mode.l, mode.m, v, strict=strict)
    with np.errstate(invalid="ignore", divide="ignore"):
        b = (w / v) ** 2
    n = np.sqrt(n2**2 + b * fiber.na**2)
    if Axis(mode.axis) is Axis.SLOW:
        n = n + fiber.delta
    return float(n) if np.ndim(n) == 0 else n


def effective_index_rna(mode: ModeId, omega, r, na, material: str = DEFAULT_MATERIAL):
    """Delta-free effective index over arrays of core radius (um) and NA.

    ``omega``, ``r`` and ``na`` broadcast together.  Unguided entries are NaN.
    Used to scan fiber parameters at fixed frequencies.
    """
    lam, r, na = np.broadcast_arrays(
        _lam_um(np.asarray(omega, dtype=float)), np.asarray(r, dtype=float), np.asarray(na, dtype=float)
    )
    n2 = material_index(load_material(material), lam)
    v = 2 * np.pi * r * na / lam
    _, w = solve_uw(mode.l, mode.m, v, strict=False)
    with np.errstate(invalid="ignore", divide="ignore"):
        b = (w / v) ** 2
    return np.sqrt(n2**2 + b * na**2)


def wavenumber(fiber: FiberSpec, mode: ModeId, omega, strict: bool = True):
    """Propagation constant ``n_eff omega / c`` in rad/m."""
    omega = np.asarray(omega, dtype=float)
    k = np.zeros(omega.shape)
    live = omega != 0
    if np.any(live):
        k[live] = effective_index(fiber, mode, omega[live], strict=strict) * omega[live] / C_LIGHT
    return float(k) if k.ndim == 0 else k
