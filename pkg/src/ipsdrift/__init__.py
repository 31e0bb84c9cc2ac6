"""Drift estimation and kernel deconvolution for interacting particle systems on the torus."""

from .core import (DriftEvaluator, EmpiricalMeasureSnapshot, FourierDriftModel, ModeLattice,
                   empirical_fourier, eval_drift, eval_drift_naive, fourier_phases, wrap)
from .deconvolve import (DeconvolutionReport, IllPosedMode, WeightFunction, deconvolve, eta_N,
                         flow_fourier_L, identifiability_report, operator_L_drift,
                         recover_interaction, stability_bound)
from .estimate import FitConfig, SingularGram, fit_mle, select_K, solve_normal_equations
from .likelihood import NormalEquations, assemble_normal_equations, log_likelihood
from .metrics import decoupling_error_t1, e_norm, h1_norm, l2_norm, rate_exponent, x_norm
from .simulate import (InitialLaw, MeasureFlow, TrajectoryDataset, simulate_ips,
                       simulate_reference_flow)

__all__ = [
    "DeconvolutionReport", "DriftEvaluator", "EmpiricalMeasureSnapshot", "FitConfig",
    "FourierDriftModel", "IllPosedMode", "InitialLaw", "MeasureFlow", "ModeLattice",
    "NormalEquations", "SingularGram", "TrajectoryDataset", "WeightFunction",
    "assemble_normal_equations", "decoupling_error_t1", "deconvolve", "e_norm",
    "empirical_fourier", "eta_N", "eval_drift", "eval_drift_naive", "fit_mle", "flow_fourier_L",
    "fourier_phases", "h1_norm", "identifiability_report", "l2_norm", "log_likelihood",
    "operator_L_drift", "rate_exponent", "recover_interaction", "select_K", "simulate_ips",
    "simulate_reference_flow", "solve_normal_equations", "stability_bound", "wrap", "x_norm",
]
