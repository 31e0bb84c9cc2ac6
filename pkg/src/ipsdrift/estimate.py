"""Sieve / Sobolev-ridge maximum likelihood for (F, G)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import TWO_PI, FourierDriftModel, ModeLattice
from .likelihood import NormalEquations, assemble_normal_equations
from .simulate import TrajectoryDataset


class SingularGram(np.linalg.LinAlgError):
    """Penalised Gram matrix is not positive definite."""

    def __init__(self, min_eigenvalue: float):
        super().__init__(f"singular Gram matrix (smallest eigenvalue {min_eigenvalue:.3e})")
        self.min_eigenvalue = min_eigenvalue


@dataclass(frozen=True)
class FitConfig:
    kg: int = 4
    kf: int = 4
    lam: float = 0.0
    sobolev: float = 0.0
    # on a failed factorisation, retry once with jitter * trace(A) / p on the diagonal
    jitter: float = 0.0

    def __post_init__(self):
        if self.kg < 0 or self.kf < 0:
            raise ValueError("mode cutoffs must be nonnegative")
        if not (self.lam >= 0 and self.jitter >= 0 and self.sobolev >= 0):
            raise ValueError("lam, sobolev and jitter must be nonnegative")


def sobolev_weights(g_lattice: ModeLattice, f_lattice: ModeLattice, order: float) -> np.ndarray:
    """Diagonal penalty ``(1 + 4 pi^2 |k|^2)^s`` in ``theta`` ordering."""
    def w(modes):
        return (1.0 + TWO_PI**2 * np.sum(modes.astype(float) ** 2, axis=1)) ** order

    wg = w(g_lattice.modes)
    wf = w(f_lattice.modes)
    return np.concatenate([[1.0], wg, wg, wf, wf])


def solve_normal_equations(ne: NormalEquations, config: FitConfig) -> FourierDriftModel:
    a = ne.gram
    if config.lam > 0:
        a = a + config.lam * np.diag(sobolev_weights(ne.g_lattice, ne.f_lattice, config.sobolev))
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(ne.response))):
        raise ValueError("normal equations contain non-finite values")
    try:
        theta = _spd_solve(a, ne.response)
    except SingularGram:
        if config.jitter <= 0:
            raise
        bump = config.jitter * np.trace(a) / a.shape[0]
        theta = _spd_solve(a + bump * np.eye(a.shape[0]), ne.response)
    return ne.model(theta.T)


def _spd_solve(a, c):
    eig = np.linalg.eigvalsh(a)
    scale = max(abs(eig[-1]), np.finfo(float).tiny) if len(eig) else 1.0
    if len(eig) and eig[0] <= 1e-13 * scale:
        raise SingularGram(float(eig[0]))
    try:
        fac = scipy.linalg.cho_factor(a)
    except np.linalg.LinAlgError:
        raise SingularGram(float(eig[0])) from None
    return scipy.linalg.cho_solve(fac, c)


def fit_mle(dataset: TrajectoryDataset, config: FitConfig) -> FourierDriftModel:
    """Maximise the discretised likelihood over the ``(kg, kf)`` trigonometric class.

    The zero-mean constraint on ``F`` is structural: its basis has no constant.
    With ``lam > 0`` the objective is penalised by ``lam * sum_a D_aa theta_a^2``.
    """
    if not (np.all(np.isfinite(dataset.positions)) and np.all(np.isfinite(dataset.increments))):
        raise ValueError("dataset contains non-finite values")
    ne = assemble_normal_equations(dataset, ModeLattice(dataset.d, config.kg, True),
                                   ModeLattice(dataset.d, config.kf, False))
    return solve_normal_equations(ne, config)


def select_K(n: int, alpha: float, d: int, c: float = 1.0) -> int:
    """Sieve cutoff ``K ~ c N^{1/(d + 2 alpha)}``, rounded to the nearest integer (at least 1)."""
    if n < 2 or alpha <= 0 or d < 1:
        raise ValueError("need N >= 2, alpha > 0, d >= 1")
    raw = c * n ** (1.0 / (d + 2.0 * alpha))
    return max(1, int(math.floor(raw + 0.5)))
