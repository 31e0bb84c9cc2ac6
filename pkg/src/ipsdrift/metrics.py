"""Path-space seminorms, Sobolev norms, decoupling error and rate arithmetic."""

from __future__ import annotations

import math

import numpy as np

from .core import TWO_PI, DriftEvaluator, FourierDriftModel, ModeLattice
from .likelihood import pairwise_sum
from .simulate import MeasureFlow, TrajectoryDataset


def _path_energy(model: FourierDriftModel, positions, mu_f, dt: float, external: bool = True) -> float:
    """``N^-1 sum_i sum_{m<M} |b(mu_m, X^i_m)|^2 dt``.

    ``positions`` is ``(M+1, N, d)`` (or ``(M, N, d)``) and ``mu_f`` holds the
    measure coefficients on ``model.f_lattice`` for each of the first ``M``
    slices.  The measure need not be a probability measure; it enters linearly.
    """
    ev = DriftEvaluator(model)
    steps = []
    for m in range(mu_f.shape[0]):
        e = ev.phases(positions[m])
        b = ev.drift(e, mu_f[m]) if external else ev.interaction(e, mu_f[m])
        steps.append(np.mean(np.sum(b * b, axis=-1)))
    return float(pairwise_sum(np.array(steps))) * dt


def e_norm(delta: FourierDriftModel, flow: MeasureFlow, ensemble) -> float:
    """Population seminorm ``(int_0^T int |delta(mu_t, x)|^2 dmu_t(x) dt)^{1/2}``.

    ``ensemble`` holds the reference positions ``(M+1, N_ref, d)`` that produced
    ``flow``; they serve both as the integration law and, through ``flow``, as
    the measure argument.
    """
    ensemble = np.asarray(ensemble, dtype=float)
    if ensemble.shape[0] != flow.m + 1 or (flow.n_ref and ensemble.shape[1] != flow.n_ref):
        raise ValueError("ensemble and flow come from different reference simulations")
    if ensemble.shape[2] != delta.dim:
        raise ValueError("dimension mismatch")
    mu = flow.take(delta.f_lattice)[:-1]
    return math.sqrt(_path_energy(delta, ensemble, mu, flow.dt))


def x_norm(delta: FourierDriftModel, dataset: TrajectoryDataset, flow: MeasureFlow) -> float:
    """Empirical seminorm ``(N^-1 sum_i int |delta(mu_t, X^i_t)|^2 dt)^{1/2}`` with the reference flow."""
    if not flow.same_grid(dataset.T, dataset.m):
        raise ValueError("flow and dataset time grids differ")
    mu = flow.take(delta.f_lattice)[:-1]
    return math.sqrt(_path_energy(delta, dataset.positions, mu, dataset.dt))


def norm_gap(delta: FourierDriftModel, dataset: TrajectoryDataset, flow: MeasureFlow,
             ensemble) -> tuple[float, float, float]:
    """``(|x^2 - e^2|, x, e)`` for the empirical/population norm comparison."""
    e = e_norm(delta, flow, ensemble)
    x = x_norm(delta, dataset, flow)
    return abs(x * x - e * e), x, e


def decoupling_error_t1(dataset: TrajectoryDataset, model: FourierDriftModel,
                        flow: MeasureFlow) -> float:
    """``N^-1 sum_i int |b(mu^N_t, X^i_t) - b(mu_t, X^i_t)|^2 dt``.

    Only the interaction sees the measure, so this is the path energy of
    ``F * (mu^N - mu)`` along the particles.
    """
    if not flow.same_grid(dataset.T, dataset.m):
        raise ValueError("flow and dataset time grids differ")
    if model.f_lattice.size == 0 or not (np.any(model.f_cos) or np.any(model.f_sin)):
        return 0.0
    lat = model.f_lattice
    ev = DriftEvaluator(model)
    mu_ref = flow.take(lat)[:-1]
    steps = []
    for m in range(dataset.m):
        e = ev.phases(dataset.positions[m])
        mu_n = ev.measure(e)[ev.f_idx]
        b = ev.interaction(e, mu_n - mu_ref[m])
        steps.append(np.mean(np.sum(b * b, axis=-1)))
    return float(pairwise_sum(np.array(steps))) * dataset.dt


def _coeff_energy(model: FourierDriftModel, which: str, order: float) -> float:
    if which == "g":
        modes = model.g_lattice.modes
        const = float(np.sum(model.g_cos[:, 0] ** 2))
        cos, sin = model.g_cos[:, 1:], model.g_sin
    elif which == "f":
        modes = model.f_lattice.modes
        const = 0.0
        cos, sin = model.f_cos, model.f_sin
    else:
        raise ValueError("which must be 'g' or 'f'")
    w = (1.0 + TWO_PI**2 * np.sum(modes.astype(float) ** 2, axis=1)) ** order
    # each half-lattice pair (k, -k) contributes 2 |(f)_k|^2 = (a^2 + b^2) / 2
    return const + 0.5 * float(np.sum(w * (cos**2 + sin**2)))


def l2_norm(model: FourierDriftModel, which: str = "f") -> float:
    """``L^2(T^d)`` norm of ``G`` (``which='g'``) or ``F``, via Plancherel."""
    return math.sqrt(_coeff_energy(model, which, 0.0))


def h1_norm(model: FourierDriftModel, which: str = "f") -> float:
    """``H^1`` norm: ``sum_k (1 + 4 pi^2 |k|^2) |(f)_k|^2``."""
    return math.sqrt(_coeff_energy(model, which, 1.0))


def rate_exponent(alpha: float, d: int) -> float:
    """Minimax exponent ``alpha / (d + 2 alpha)``."""
    if alpha <= 0 or d < 1:
        raise ValueError("need alpha > 0 and d >= 1")
    return alpha / (d + 2.0 * alpha)


def loglog_slope(x, y) -> tuple[float, float]:
    """Least-squares slope of ``log y`` on ``log x`` and its standard error."""
    from scipy.stats import linregress

    x, y = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    if len(x) < 2:
        return math.nan, math.nan
    if len(x) == 2:
        return float((y[1] - y[0]) / (x[1] - x[0])), math.nan
    fit = linregress(x, y)
    return float(fit.slope), float(fit.stderr)


def flow_lattice_for(*models: FourierDriftModel) -> ModeLattice:
    """Smallest flow lattice covering the interaction lattices of ``models``."""
    return ModeLattice(models[0].dim, max(m.kf for m in models))
