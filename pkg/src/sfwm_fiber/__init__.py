"""Multimode spontaneous four-wave mixing in birefringent step-index fibers.

Forward model (modes, overlaps, phasematching, spectra) and the inverse fit
of core radius, NA and birefringence from measured peak positions.
"""

from .dispersion import Axis, FiberSpec, ModeCutoffError, ModeId, effective_index, guided_modes, v_number, wavenumber
from .fitting import NoFitError, PeakObservation, contour_rna, fit_parameters, synthesize_peaks
from .materials import DomainError, load_material, material_index
from .overlap import field_profile, gamma, selection_rule
from .phasematching import TABLE1, Process, delta_k, enumerate_processes, phasematch_diagram, solve_peaks
from .spectra import PumpSpec, jsa_grid, predict_peak_iv, single_spectrum, solve_pump_fractions

__version__ = "0.1.0"

__all__ = [
    "Axis", "FiberSpec", "ModeCutoffError", "ModeId", "effective_index", "guided_modes", "v_number",
    "wavenumber", "NoFitError", "PeakObservation", "contour_rna", "fit_parameters", "synthesize_peaks",
    "DomainError", "load_material", "material_index", "field_profile", "gamma", "selection_rule",
    "TABLE1", "Process", "delta_k", "enumerate_processes", "phasematch_diagram", "solve_peaks",
    "PumpSpec", "jsa_grid", "predict_peak_iv", "single_spectrum", "solve_pump_fractions",
]
