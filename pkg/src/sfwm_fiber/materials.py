"""Sellmeier material models bundled with the package."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

DEFAULT_MATERIAL = "fused_silica_malitson"


class DomainError(ValueError):
    """Wavelength outside the validity window of a material model."""


@dataclass(frozen=True)
class MaterialModel:
    """Three-term Sellmeier fit ``n^2 = 1 + sum B_i l^2 / (l^2 - C_i^2)``.

    ``C`` holds resonance wavelengths in micrometers.
    """

    name: str
    B: tuple[float, ...]
    C: tuple[float, ...]
    window: tuple[float, float] = (0.4, 1.1)

    def __post_init__(self):
        if len(self.B) != len(self.C):
            raise ValueError("Sellmeier B and C must have the same length")


@lru_cache(maxsize=None)
def _table() -> dict:
    with resources.files("sfwm_fiber.data").joinpath("sellmeier.json").open() as fh:
        return json.load(fh)


def available_materials() -> list[str]:
    return sorted(_table()["models"])


@lru_cache(maxsize=None)
def load_material(name: str = DEFAULT_MATERIAL) -> MaterialModel:
    try:
        entry = _table()["models"][name]
    except KeyError:
        raise KeyError(f"unknown material {name!r}; known: {available_materials()}") from None
    return MaterialModel(
        name=name,
        B=tuple(entry["B"]),
        C=tuple(entry["C_um"]),
        window=tuple(entry["window_um"]),
    )


def material_index(model: MaterialModel, lam_um):
    """Refractive index of ``model`` at vacuum wavelength ``lam_um`` (micrometers)."""
    lam = np.asarray(lam_um, dtype=float)
    lo, hi = model.window
    if np.any(~np.isfinite(lam)) or np.any(lam < lo) or np.any(lam > hi):
        raise DomainError(
            f"wavelength outside {model.name} validity window {lo}-{hi} um"
        )
    x = lam * lam
    n2 = 1.0
    for b, c in zip(model.B, model.C):
        n2 = n2 + b * x / (x - c * c)
    n = np.sqrt(n2)
    return float(n) if n.ndim == 0 else n
