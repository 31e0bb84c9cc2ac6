"""Euler-Maruyama simulation of the interacting particle system on the torus."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng
from .core import DriftEvaluator, FourierDriftModel, ModeLattice, empirical_fourier, wrap


@dataclass(frozen=True)
class InitialLaw:
    """Law of the i.i.d. initial positions.

    ``kind`` is ``"uniform"``, ``"wrapped_gaussian"`` or ``"mixture"``.  Centers
    have shape ``(n_components, d)`` or ``(n_components, 1)``, the latter
    broadcast over all coordinates.
    """

    kind: str = "wrapped_gaussian"
    centers: tuple = ((0.5,),)
    sigmas: tuple = (0.1,)
    weights: tuple = (1.0,)

    def __post_init__(self):
        if self.kind not in ("uniform", "wrapped_gaussian", "mixture"):
            raise ValueError(f"unknown initial law {self.kind!r}")
        if self.kind == "uniform":
            return
        if len(self.centers) != len(self.sigmas) or len(self.centers) != len(self.weights):
            raise ValueError("centers, sigmas and weights must have equal length")
        if any(not (s > 0 and np.isfinite(s)) for s in self.sigmas):
            raise ValueError("sigma must be positive")
        if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError("mixture weights must be nonnegative and sum to 1")

    @classmethod
    def uniform(cls) -> "InitialLaw":
        return cls(kind="uniform", centers=(), sigmas=(), weights=())

    @classmethod
    def wrapped_gaussian(cls, center=0.5, sigma: float = 0.1) -> "InitialLaw":
        return cls("wrapped_gaussian", (tuple(np.atleast_1d(center).tolist()),), (float(sigma),), (1.0,))

    @classmethod
    def mixture(cls, centers, sigma=0.05, weights=None) -> "InitialLaw":
        centers = tuple(tuple(np.atleast_1d(c).tolist()) for c in centers)
        n = len(centers)
        sigmas = tuple(np.broadcast_to(np.asarray(sigma, dtype=float), (n,)).tolist())
        if weights is None:
            weights = (1.0 / n,) * n
        return cls("mixture", centers, sigmas, tuple(float(w) for w in weights))

    @classmethod
    def parse(cls, text: str) -> "InitialLaw":
        """Parse ``uniform``, ``wrapped_gaussian:C:S`` or ``mixture:C1,C2:S[:W1,W2]``."""
        parts = text.strip().split(":")
        try:
            if parts[0] == "uniform" and len(parts) == 1:
                return cls.uniform()
            if parts[0] == "wrapped_gaussian" and len(parts) == 3:
                return cls.wrapped_gaussian(float(parts[1]), float(parts[2]))
            if parts[0] == "mixture" and len(parts) in (3, 4):
                centers = [float(c) for c in parts[1].split(",")]
                weights = [float(w) for w in parts[3].split(",")] if len(parts) == 4 else None
                return cls.mixture(centers, float(parts[2]), weights)
        except ValueError as err:
            raise ValueError(f"bad initial law {text!r}: {err}") from None
        raise ValueError(f"bad initial law {text!r}")

    def __str__(self) -> str:
        if self.kind == "uniform":
            return "uniform"
        if self.kind == "wrapped_gaussian":
            return f"wrapped_gaussian:{self.centers[0][0]!r}:{self.sigmas[0]!r}"
        cs = ",".join(repr(c[0]) for c in self.centers)
        ws = ",".join(repr(w) for w in self.weights)
        return f"mixture:{cs}:{self.sigmas[0]!r}:{ws}"


def sample_initial(init: InitialLaw, n: int, seed: int, dim: int = 1, ids=None) -> np.ndarray:
    """Draw ``n`` i.i.d. positions, shape ``(n, dim)``.

    Particle ``i`` uses the stream of ``ids[i]`` (default ``i``), so a particle's
    starting point does not depend on how many others are drawn.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    ids = np.arange(n) if ids is None else np.asarray(ids)
    if init.kind == "uniform":
        return wrap(rng.uniforms(seed, rng.INIT, ids, 0, dim))
    pick = rng.uniforms(seed, rng.INIT, ids, 0, 1, lane0=0)[:, 0]
    comp = np.searchsorted(np.cumsum(init.weights), pick, side="right")
    comp = np.minimum(comp, len(init.weights) - 1)
    centers = np.array([np.broadcast_to(c, (dim,)) for c in init.centers], dtype=float)
    sigmas = np.asarray(init.sigmas, dtype=float)
    z = rng.normals(seed, rng.INIT, ids, 0, dim, lane0=2)
    return wrap(centers[comp] + sigmas[comp, None] * z)


@dataclass(frozen=True, eq=False)
class TrajectoryDataset:
    """Wrapped positions ``(M+1, N, d)`` and unwrapped increments ``(M, N, d)``."""

    positions: np.ndarray = field(repr=False)
    increments: np.ndarray = field(repr=False)
    T: float
    seed: int = 0

    def __post_init__(self):
        pos, inc = self.positions, self.increments
        if pos.ndim != 3 or inc.shape != (pos.shape[0] - 1,) + pos.shape[1:]:
            raise ValueError("positions must be (M+1, N, d) and increments (M, N, d)")
        if not (self.T > 0):
            raise ValueError("T must be positive")
        for a in (pos, inc):
            a.setflags(write=False)

    @property
    def d(self) -> int:
        return self.positions.shape[2]

    @property
    def n(self) -> int:
        return self.positions.shape[1]

    @property
    def m(self) -> int:
        return self.increments.shape[0]

    @property
    def dt(self) -> float:
        return self.T / self.m

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.m + 1) * self.dt

    def consistency_error(self) -> float:
        """Largest torus gap between ``wrap(X_m + dX_m)`` and ``X_{m+1}``."""
        diff = wrap(self.positions[:-1] + self.increments) - self.positions[1:]
        return float(np.max(np.abs(diff - np.round(diff)), initial=0.0))

    def shifted(self, v) -> "TrajectoryDataset":
        """All positions translated by ``v`` (increments unchanged)."""
        return TrajectoryDataset(wrap(self.positions + np.asarray(v, dtype=float)),
                                 np.array(self.increments), self.T, self.seed)

    def permuted(self, perm) -> "TrajectoryDataset":
        perm = np.asarray(perm)
        return TrajectoryDataset(np.array(self.positions[:, perm]), np.array(self.increments[:, perm]),
                                 self.T, self.seed)


@dataclass(frozen=True, eq=False)
class MeasureFlow:
    """Time-indexed Fourier coefficients ``(mu_{t_m})_k`` of a reference ensemble."""

    lattice: ModeLattice
    T: float
    coeffs: np.ndarray = field(repr=False)  # (M+1, len(lattice.all_modes)) complex
    n_ref: int = 0
    seed: int = 0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[1] != len(self.lattice.all_modes):
            raise ValueError("coeffs must be (M+1, n_modes)")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def m(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def dt(self) -> float:
        return self.T / self.m

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.m + 1) * self.dt

    def take(self, lattice: ModeLattice) -> np.ndarray:
        """Coefficients restricted to ``lattice.all_modes``, shape ``(M+1, n)``."""
        if not self.lattice.covers(lattice):
            raise ValueError("flow lattice does not cover the requested modes")
        if len(lattice.all_modes) == 0:
            return np.zeros((self.m + 1, 0), dtype=complex)
        if lattice.include_zero and not self.lattice.include_zero:
            idx = self.lattice.index_of(lattice.modes)
            return np.hstack([np.ones((self.m + 1, 1), dtype=complex), self.coeffs[:, idx]])
        return self.coeffs[:, self.lattice.index_of(lattice.all_modes)]

    def same_grid(self, T: float, m: int) -> bool:
        return self.m == m and abs(self.T - T) <= 1e-12 * max(1.0, T)


def _validate(n, t, m):
    if not (n >= 1 and m >= 1 and t > 0):
        raise ValueError("need N >= 1, M >= 1 and T > 0")


def _integrate(model, x0, t, m, seed, ids, flow_lattice=None, keep=True):
    """Core Euler-Maruyama loop.

    Returns ``(positions, increments, flow_coeffs)``; the first two are None
    unless ``keep`` and the last is None unless ``flow_lattice`` is given.
    """
    n, d = x0.shape
    dt = t / m
    sdt = np.sqrt(dt)
    ev = DriftEvaluator(model, extra=flow_lattice)
    has_f = ev.f_idx.size > 0 and bool(np.any(model.f_cos != 0) or np.any(model.f_sin != 0))
    pos = np.empty((m + 1, n, d)) if keep else None
    inc = np.empty((m, n, d)) if keep else None
    flow = None
    if flow_lattice is not None:
        flow = np.empty((m + 1, len(flow_lattice.all_modes)), dtype=complex)
    noise = rng.CounterStream(seed, rng.NOISE, ids)
    x = x0
    if keep:
        pos[0] = x
    for step in range(m + 1):
        if step < m or flow is not None:
            e = ev.phases(x)
            mu = ev.measure(e) if (has_f or flow is not None) else None
        if flow is not None:
            flow[step] = mu[ev.extra_idx]
        if step == m:
            break
        b = ev.drift(e, mu[ev.f_idx]) if has_f else ev.external(e)
        dx = b * dt + sdt * noise.normals(step, d)
        x = wrap(x + dx)
        if keep:
            inc[step] = dx
            pos[step + 1] = x
    return pos, inc, flow


def simulate_ips(model: FourierDriftModel, n: int, t: float, m: int, init: InitialLaw,
                 seed: int, ids=None) -> TrajectoryDataset:
    """Simulate ``N`` coupled particles with ``M`` Euler-Maruyama steps on ``[0, T]``.

    ``X_{m+1} = wrap(X_m + b(mu^N_{t_m}, X_m) dt + sqrt(dt) xi_m)``.  Particle
    ``i`` draws its start and noise from stream ``ids[i]`` (default ``i``).
    """
    _validate(n, t, m)
    ids = np.arange(n) if ids is None else np.asarray(ids)
    if len(ids) != n:
        raise ValueError("ids must have length N")
    x0 = sample_initial(init, n, seed, model.dim, ids)
    pos, inc, _ = _integrate(model, x0, t, m, seed, ids)
    return TrajectoryDataset(pos, inc, float(t), int(seed))


def simulate_reference_flow(model: FourierDriftModel, n_ref: int, t: float, m: int,
                            init: InitialLaw, lattice: ModeLattice, seed: int,
                            keep_positions: bool = False):
    """Fourier coefficients of a large reference ensemble, a proxy for the mean-field law.

    With ``keep_positions`` the ensemble positions ``(M+1, N_ref, d)`` are
    returned as well, as ``(flow, positions)``.
    """
    _validate(n_ref, t, m)
    if lattice.dim != model.dim:
        raise ValueError("lattice dimension does not match model")
    ids = np.arange(n_ref)
    x0 = sample_initial(init, n_ref, seed, model.dim, ids)
    pos, _, coeffs = _integrate(model, x0, t, m, seed, ids, flow_lattice=lattice,
                                keep=keep_positions)
    flow = MeasureFlow(lattice, float(t), coeffs, int(n_ref), int(seed))
    return (flow, pos) if keep_positions else flow


def flow_from_positions(positions, lattice: ModeLattice, T: float, seed: int = 0) -> MeasureFlow:
    """Measure flow of a stored ensemble, ``positions`` of shape ``(M+1, N, d)``."""
    positions = np.asarray(positions, dtype=float)
    coeffs = np.stack([empirical_fourier(p, lattice) for p in positions])
    return MeasureFlow(lattice, float(T), coeffs, positions.shape[1], seed)
