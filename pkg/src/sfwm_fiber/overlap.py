"""LP transverse field profiles and four-mode overlap integrals.

Profiles use the cosine azimuthal orientation, so every overlap is real and
factorizes into a radial integral times an azimuthal integral.  Lengths are
in micrometers; overlaps come out in 1/um^2 up to an overall constant.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy import integrate, special

from .dispersion import FiberSpec, ModeCutoffError, ModeId, _lam_um, solve_uw

if TYPE_CHECKING:
    from .phasematching import Process

__all__ = [
    "FieldProfile",
    "OverlapValue",
    "field_profile",
    "selection_rule",
    "azimuthal_integral",
    "radial_overlap",
    "gamma",
]


@dataclass(frozen=True)
class FieldProfile:
    """Unit-norm LP field ``N R(rho) cos(l phi)`` of one mode at one frequency."""

    mode: ModeId
    r: float
    u: float
    w: float
    norm: float

    def radial(self, rho):
        """Radial factor including the normalization constant."""
        rho = np.asarray(rho, dtype=float)
        l, u, w, r = self.mode.l, self.u, self.w, self.r
        x = rho / r
        inside = special.jv(l, u * np.minimum(x, 1.0))
        xo = np.maximum(x, 1.0)
        outside = special.jv(l, u) * special.kve(l, w * xo) / special.kve(l, w) * np.exp(-w * (xo - 1))
        return self.norm * np.where(x <= 1.0, inside, outside)

    def __call__(self, x, y):
        rho = np.hypot(x, y)
        phi = np.arctan2(y, x)
        return self.radial(rho) * np.cos(self.mode.l * phi)


@dataclass(frozen=True)
class OverlapValue:
    value: float
    radial: float
    azimuthal: float
    process: "Process | None" = None


def _angular_norm(l: int) -> float:
    return 2 * np.pi if l == 0 else np.pi


def field_profile(fiber: FiberSpec, mode: ModeId, omega: float) -> FieldProfile:
    lam = float(_lam_um(omega))
    v = 2 * np.pi * fiber.r * fiber.na / lam
    u, w = solve_uw(mode.l, mode.m, v, strict=True)
    if not w > 0:
        raise ModeCutoffError(f"{mode.name} is at cutoff")
    bare = FieldProfile(mode, fiber.r, float(u), w, 1.0)
    power = _radial_integral(lambda rho: bare.radial(rho) ** 2, fiber.r)
    return FieldProfile(mode, fiber.r, float(u), w, 1.0 / np.sqrt(power * _angular_norm(mode.l)))


def _radial_integral(func, r: float) -> float:
    """``int_0^inf func(rho) rho d rho`` split at the core boundary."""
    opts = dict(epsabs=0.0, epsrel=1e-12, limit=200)
    core, _ = integrate.quad(lambda p: func(p) * p, 0.0, r, **opts)
    clad, _ = integrate.quad(lambda p: func(p) * p, r, np.inf, **opts)
    return core + clad


def selection_rule(lp: int, lq: int, lm: int, ln: int) -> bool:
    """True when the product of the four cosines has a constant term."""
    return azimuthal_integral(lp, lq, lm, ln) != 0.0


def azimuthal_integral(lp: int, lq: int, lm: int, ln: int) -> float:
    """``int_0^{2 pi} cos(lp phi) cos(lq phi) cos(lm phi) cos(ln phi) d phi``.

    Product-to-sum: the integrand is the mean of cos((lp +- lq +- lm +- ln) phi)
    over the eight sign choices, and only vanishing harmonics survive.
    """
    hits = sum(
        lp + s1 * lq + s2 * lm + s3 * ln == 0
        for s1, s2, s3 in itertools.product((1, -1), repeat=3)
    )
    return 2 * np.pi * hits / 8


def radial_overlap(profiles) -> float:
    prods = list(profiles)
    r = prods[0].r
    return _radial_integral(lambda rho: np.prod([p.radial(rho) for p in prods], axis=0), r)


def gamma(fiber: FiberSpec, process: "Process", omegas) -> OverlapValue:
    """Four-mode overlap of ``process`` with each profile at its own frequency.

    ``omegas`` gives the frequencies of (pump1, pump2, idler, signal), in
    process order.  A single number evaluates all four at that frequency.
    """
    omegas = np.broadcast_to(np.asarray(omegas, dtype=float), (4,))
    modes = process.modes
    ang = azimuthal_integral(*(md.l for md in modes))
    profiles = [field_profile(fiber, md, om) for md, om in zip(modes, omegas)]
    if ang == 0.0:
        return OverlapValue(0.0, radial_overlap(profiles), 0.0, process)
    rad = radial_overlap(profiles)
    return OverlapValue(rad * ang, rad, ang, process)
