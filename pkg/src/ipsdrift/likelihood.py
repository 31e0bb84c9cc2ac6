"""Discretised Girsanov log-likelihood and its normal-equation form.

For a model with coefficient vector ``theta`` the drift at particle ``i`` and
step ``m`` is linear, ``b = Phi(i, m) theta``, with features

* external part: ``1, cos(2 pi k.X), sin(2 pi k.X)``
* interaction part: ``N^-1 sum_j cos(2 pi k.(X_i - X_j))`` and the ``sin`` twin,
  computed as ``Re/Im(exp(2 pi i k.X_i) (mu^N)_k)``.

The log-likelihood is then ``<theta, c> - theta' A theta / 2`` per output
component with ``A = sum Phi Phi' dt`` and ``c = sum Phi dX``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DriftEvaluator, FourierDriftModel, ModeLattice, fourier_phases
from .simulate import TrajectoryDataset


def pairwise_sum(blocks: np.ndarray) -> np.ndarray:
    """Sum along axis 0 with a fixed binary tree (deterministic, low roundoff)."""
    blocks = np.asarray(blocks)
    if blocks.shape[0] == 0:
        return np.zeros(blocks.shape[1:], dtype=blocks.dtype)
    while blocks.shape[0] > 1:
        n = blocks.shape[0]
        half = blocks[0:n - n % 2:2] + blocks[1:n:2]
        blocks = np.concatenate([half, blocks[n - 1:]]) if n % 2 else half
    return blocks[0]


def log_likelihood_terms(dataset: TrajectoryDataset, model: FourierDriftModel) -> tuple[float, float]:
    """``(ito, energy)`` with ``L_T = ito - energy``.

    ``ito = sum_i sum_m <b(mu^N_{t_m}, X^i_{t_m}), dX^i_m>`` over unwrapped
    increments and ``energy = sum_i sum_m |b|^2 dt / 2``.
    """
    if dataset.d != model.dim:
        raise ValueError("dataset and model dimensions differ")
    ev = DriftEvaluator(model)
    ito, energy = [], []
    for m in range(dataset.m):
        e = ev.phases(dataset.positions[m])
        mu = ev.measure(e)
        b = ev.drift(e, mu[ev.f_idx])
        ito.append(float(np.sum(b * dataset.increments[m])))
        energy.append(float(np.sum(b * b)))
    return math.fsum(ito), 0.5 * dataset.dt * math.fsum(energy)


def log_likelihood(dataset: TrajectoryDataset, model: FourierDriftModel) -> float:
    """Discretised log-likelihood ratio against driftless Brownian motion."""
    ito, energy = log_likelihood_terms(dataset, model)
    return ito - energy


@dataclass(frozen=True, eq=False)
class NormalEquations:
    """Gram matrix ``A`` ``(p, p)`` and responses ``c`` ``(p, d)``.

    Feature ordering matches :attr:`FourierDriftModel.theta` for cutoffs
    ``kg`` and ``kf``.
    """

    gram: np.ndarray
    response: np.ndarray
    g_lattice: ModeLattice
    f_lattice: ModeLattice
    n_obs: int = 0

    @property
    def dim(self) -> int:
        return self.g_lattice.dim

    @property
    def kg(self) -> int:
        return self.g_lattice.max_norm

    @property
    def kf(self) -> int:
        return self.f_lattice.max_norm

    @property
    def p(self) -> int:
        return self.gram.shape[0]

    def labels(self) -> list[str]:
        out = ["g:const"]
        out += [f"g:cos{tuple(k)}" for k in self.g_lattice.modes.tolist()]
        out += [f"g:sin{tuple(k)}" for k in self.g_lattice.modes.tolist()]
        out += [f"f:cos{tuple(k)}" for k in self.f_lattice.modes.tolist()]
        out += [f"f:sin{tuple(k)}" for k in self.f_lattice.modes.tolist()]
        return out

    def objective(self, theta) -> float:
        """``sum_l <theta_l, c_l> - theta_l' A theta_l / 2`` for ``theta`` of shape ``(d, p)``."""
        theta = np.asarray(theta, dtype=float).reshape(self.dim, self.p)
        lin = np.einsum("lp,pl->", theta, self.response)
        quad = np.einsum("lp,pq,lq->", theta, self.gram, theta)
        return float(lin - 0.5 * quad)

    def model(self, theta) -> FourierDriftModel:
        return FourierDriftModel.from_theta(self.dim, self.kg, self.kf, theta)


def step_features(x, g_lattice: ModeLattice, f_lattice: ModeLattice, mu_f=None) -> np.ndarray:
    """Feature matrix ``(N, p)`` for one time slice of positions ``x`` ``(N, d)``.

    ``mu_f`` defaults to the empirical coefficients of ``x`` itself.
    """
    K = max(g_lattice.max_norm, f_lattice.max_norm)
    lat = ModeLattice(g_lattice.dim, K, include_zero=True)
    e = fourier_phases(x, lat)
    eg = e[:, lat.index_of(g_lattice.all_modes)]
    parts = [eg.real, eg[:, 1:].imag]
    if f_lattice.size:
        ef = e[:, lat.index_of(f_lattice.modes)]
        if mu_f is None:
            mu_f = np.conj(ef.mean(axis=0))
        w = ef * mu_f
        parts += [w.real, w.imag]
    return np.concatenate(parts, axis=1)


def assemble_normal_equations(dataset: TrajectoryDataset, g_lattice: ModeLattice,
                              f_lattice: ModeLattice, chunk: int = 64) -> NormalEquations:
    """Gram matrix and Ito responses of the discretised likelihood.

    Per-step contributions are reduced with :func:`pairwise_sum`, so the
    result does not depend on how steps are chunked.
    """
    if f_lattice.include_zero:
        raise ValueError("interaction lattice must exclude the zero mode")
    if not g_lattice.include_zero:
        raise ValueError("external-force lattice must include the zero mode")
    if g_lattice.dim != dataset.d or f_lattice.dim != dataset.d:
        raise ValueError("lattice dimension does not match dataset")
    K = max(g_lattice.max_norm, f_lattice.max_norm)
    lat = ModeLattice(dataset.d, K, include_zero=True)
    gi = lat.index_of(g_lattice.all_modes)
    fi = lat.index_of(f_lattice.modes) if f_lattice.size else np.zeros(0, dtype=np.int64)
    grams, resps = [], []
    M, N = dataset.m, dataset.n
    for start in range(0, M, chunk):
        stop = min(M, start + chunk)
        e = fourier_phases(dataset.positions[start:stop], lat)  # (c, N, n)
        eg = e[..., gi]
        parts = [eg.real, eg[..., 1:].imag]
        if fi.size:
            ef = e[..., fi]
            w = ef * np.conj(ef.mean(axis=1, keepdims=True))
            parts += [w.real, w.imag]
        phi = np.concatenate(parts, axis=-1)
        grams.append(np.einsum("cnp,cnq->cpq", phi, phi))
        resps.append(np.einsum("cnp,cnl->cpl", phi, dataset.increments[start:stop]))
    gram = pairwise_sum(np.concatenate(grams)) * dataset.dt
    gram = 0.5 * (gram + gram.T)
    resp = pairwise_sum(np.concatenate(resps))
    return NormalEquations(gram, resp, g_lattice, f_lattice, n_obs=M * N)
