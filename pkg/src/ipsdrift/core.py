"""Torus geometry, Fourier mode lattices and trigonometric drift models.

Everything here lives on the unit torus ``[0, 1)^d``.  A drift field has the
external/interaction form

    b(nu, x) = G(x) + int F(x - y) dnu(y)

with ``G`` and ``F`` real trigonometric polynomials.  Coefficients are kept in
a real basis ``{1, cos(2 pi k.x), sin(2 pi k.x)}`` over a half-lattice of modes,
so ``F`` simply has no constant term.

Complex Fourier coefficients follow ``(f)_k = int f(x) exp(-2 pi i k.x) dx`` and
empirical measures use ``(mu)_k = N^-1 sum_j exp(-2 pi i k.X_j)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi


def wrap(x) -> np.ndarray:
    """Reduce coordinates modulo 1 into ``[0, 1)``."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("cannot wrap non-finite coordinates")
    r = x - np.floor(x)
    # x - floor(x) rounds up to 1.0 for tiny negative x
    return np.where(r >= 1.0, 0.0, r)


def wrap_nearest(z) -> np.ndarray:
    """Nearest-lift representative of a torus difference, in ``(-0.5, 0.5]``."""
    z = np.asarray(z, dtype=float)
    return z - np.ceil(z - 0.5)


@dataclass(frozen=True)
class ModeLattice:
    """Half-lattice of integer modes ``0 < |k|_inf <= max_norm``.

    One representative is kept per ``{k, -k}`` pair: the one whose first
    nonzero entry is positive.  Modes are ordered by sup-norm, then
    lexicographically, so a lattice with a smaller cutoff is always a prefix
    of a larger one.  With ``include_zero`` the zero mode is prepended in
    :attr:`all_modes`.
    """

    dim: int
    max_norm: int
    include_zero: bool = False

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.max_norm < 0:
            raise ValueError("max_norm must be >= 0")

    @cached_property
    def modes(self) -> np.ndarray:
        """Nonzero half-lattice modes, shape ``(n, dim)``."""
        K = self.max_norm
        keep = []
        for k in itertools.product(range(-K, K + 1), repeat=self.dim):
            nz = [c for c in k if c != 0]
            if nz and nz[0] > 0:
                keep.append(k)
        keep.sort(key=lambda k: (max(abs(c) for c in k), k))
        out = np.array(keep, dtype=np.int64).reshape(len(keep), self.dim)
        out.setflags(write=False)
        return out

    @cached_property
    def all_modes(self) -> np.ndarray:
        if not self.include_zero:
            return self.modes
        out = np.vstack([np.zeros((1, self.dim), dtype=np.int64), self.modes])
        out.setflags(write=False)
        return out

    @property
    def size(self) -> int:
        """Number of nonzero modes."""
        return len(self.modes)

    @property
    def n_basis(self) -> int:
        """Number of real basis functions (constant, cosines, sines)."""
        return int(self.include_zero) + 2 * self.size

    @cached_property
    def _index(self) -> dict:
        return {tuple(int(c) for c in k): i for i, k in enumerate(self.all_modes)}

    def index_of(self, modes) -> np.ndarray:
        """Positions of ``modes`` within :attr:`all_modes`."""
        try:
            return np.array([self._index[tuple(int(c) for c in k)] for k in np.atleast_2d(modes)],
                            dtype=np.int64)
        except KeyError as err:
            raise ValueError(f"mode {err.args[0]} is not in lattice {self}") from None

    def covers(self, other: "ModeLattice") -> bool:
        """True when every nonzero mode of ``other`` is present here."""
        return self.dim == other.dim and self.max_norm >= other.max_norm

    def euclidean_norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.all_modes.astype(float) ** 2, axis=1))


def fourier_phases(x, lattice: ModeLattice) -> np.ndarray:
    """``exp(2 pi i k.x)`` for every mode in ``lattice.all_modes``.

    ``x`` has shape ``(..., d)``; the result has shape ``(..., n)``.  Integer
    powers of the per-axis phase are built by repeated multiplication, which
    is much cheaper than calling ``cos``/``sin`` per mode.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return fourier_phases(x[None], lattice)[0]
    modes = lattice.all_modes
    K = lattice.max_norm
    lead = x.shape[:-1]
    if len(modes) == 0 or K == 0:
        return np.ones(lead + (len(modes),), dtype=complex)
    out = None
    for j in range(lattice.dim):
        kj = modes[:, j]
        if not kj.any():
            continue
        z = np.exp(1j * TWO_PI * x[..., j])
        powers = np.empty((K + 1,) + lead, dtype=complex)
        powers[0] = 1.0
        powers[1] = z
        for p in range(2, K + 1):
            np.multiply(powers[p - 1], z, out=powers[p])
        ak = np.abs(kj)
        if len(ak) == K + 1 and np.array_equal(ak, np.arange(K + 1)):
            vals = powers
        else:
            vals = powers[ak]
        neg = kj < 0
        if neg.any():
            vals[neg] = np.conj(vals[neg])
        out = vals if out is None else out * vals
    return np.moveaxis(out, 0, -1)


def trig_basis(x, lattice: ModeLattice) -> np.ndarray:
    """Real basis values ``[1?, cos(2 pi k.x)..., sin(2 pi k.x)...]``."""
    e = fourier_phases(x, lattice)
    nz = e[..., int(lattice.include_zero):]
    parts = [e[..., :1].real] if lattice.include_zero else []
    parts += [nz.real, nz.imag]
    return np.concatenate(parts, axis=-1)


def empirical_fourier(positions, lattice: ModeLattice) -> np.ndarray:
    """Empirical characteristic coefficients ``N^-1 sum_j exp(-2 pi i k.X_j)``."""
    positions = np.asarray(positions, dtype=float)
    if positions.ndim == 1:
        positions = positions[:, None] if lattice.dim == 1 else positions[None, :]
    if positions.shape[0] == 0:
        raise ValueError("empirical_fourier needs at least one position")
    if positions.shape[-1] != lattice.dim:
        raise ValueError("position dimension does not match lattice")
    return np.conj(fourier_phases(positions, lattice)).mean(axis=0)


@dataclass(frozen=True)
class EmpiricalMeasureSnapshot:
    """Particle positions at one instant together with their Fourier cache."""

    positions: np.ndarray
    lattice: ModeLattice
    coeffs: np.ndarray = field(repr=False)

    @classmethod
    def from_positions(cls, positions, lattice: ModeLattice) -> "EmpiricalMeasureSnapshot":
        positions = wrap(np.asarray(positions, dtype=float).reshape(-1, lattice.dim))
        return cls(positions, lattice, empirical_fourier(positions, lattice))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FourierDriftModel:
    """Trigonometric external force ``G`` and zero-mean interaction kernel ``F``.

    Coefficient arrays are indexed ``[output component, basis index]``:

    * ``g_cos``: shape ``(d, 1 + n_G)``, constant term first
    * ``g_sin``: shape ``(d, n_G)``
    * ``f_cos``, ``f_sin``: shape ``(d, n_F)``

    where ``n_G``, ``n_F`` are the half-lattice sizes for cutoffs ``kg``, ``kf``.
    """

    dim: int
    kg: int
    kf: int
    g_cos: np.ndarray
    g_sin: np.ndarray
    f_cos: np.ndarray
    f_sin: np.ndarray

    def __post_init__(self):
        for name in ("g_cos", "g_sin", "f_cos", "f_sin"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        d = self.dim
        ng, nf = self.g_lattice.size, self.f_lattice.size
        expect = {"g_cos": (d, ng + 1), "g_sin": (d, ng), "f_cos": (d, nf), "f_sin": (d, nf)}
        for name, shape in expect.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} has non-finite entries")

    @cached_property
    def g_lattice(self) -> ModeLattice:
        return ModeLattice(self.dim, self.kg, include_zero=True)

    @cached_property
    def f_lattice(self) -> ModeLattice:
        return ModeLattice(self.dim, self.kf, include_zero=False)

    @classmethod
    def zeros(cls, dim: int, kg: int, kf: int) -> "FourierDriftModel":
        ng = ModeLattice(dim, kg).size
        nf = ModeLattice(dim, kf).size
        z = np.zeros
        return cls(dim, kg, kf, z((dim, ng + 1)), z((dim, ng)), z((dim, nf)), z((dim, nf)))

    @classmethod
    def from_modes(cls, dim: int, kg: int, kf: int, g=(), f=()) -> "FourierDriftModel":
        """Build from sparse terms.

        ``g`` and ``f`` are iterables of ``(component, mode, cos_coef, sin_coef)``;
        ``mode`` may be any nonzero integer vector (its negative is folded
        onto the half-lattice representative), or zero for the constant of
        ``G``.
        """
        m = cls.zeros(dim, kg, kf)
        arrays = {k: np.array(getattr(m, k)) for k in ("g_cos", "g_sin", "f_cos", "f_sin")}
        for which, terms, lat in (("g", g, m.g_lattice), ("f", f, m.f_lattice)):
            for comp, mode, a, b in terms:
                mode = np.atleast_1d(np.asarray(mode, dtype=np.int64))
                if not mode.any():
                    if which == "f":
                        raise ValueError("interaction kernel has no constant term")
                    arrays["g_cos"][comp, 0] += a
                    continue
                nz = mode[mode != 0]
                if nz[0] < 0:
                    mode, b = -mode, -b
                idx = lat.index_of(mode)[0] - int(lat.include_zero)
                off = 1 if which == "g" else 0
                arrays[f"{which}_cos"][comp, idx + off] += a
                arrays[f"{which}_sin"][comp, idx] += b
        return cls(dim, kg, kf, **arrays)

    # -- parameter vector --------------------------------------------------
    @property
    def n_params(self) -> int:
        return self.g_lattice.n_basis + 2 * self.f_lattice.size

    @property
    def theta(self) -> np.ndarray:
        """Coefficients as ``(d, p)``: ``[g_cos, g_sin, f_cos, f_sin]``."""
        return np.concatenate([self.g_cos, self.g_sin, self.f_cos, self.f_sin], axis=1)

    @classmethod
    def from_theta(cls, dim: int, kg: int, kf: int, theta) -> "FourierDriftModel":
        theta = np.asarray(theta, dtype=float).reshape(dim, -1)
        ng = ModeLattice(dim, kg).size
        nf = ModeLattice(dim, kf).size
        cuts = np.cumsum([ng + 1, ng, nf])
        if theta.shape[1] != cuts[-1] + nf:
            raise ValueError("theta length does not match lattices")
        gc, gs, fc, fs = np.split(theta, cuts, axis=1)
        return cls(dim, kg, kf, gc, gs, fc, fs)

    # -- lattice changes and arithmetic -----------------------------------
    def embed(self, kg: int, kf: int) -> "FourierDriftModel":
        """Same functions expressed on (larger) cutoffs ``kg``, ``kf``."""
        if kg < self.kg or kf < self.kf:
            raise ValueError("embed only enlarges lattices")
        out = FourierDriftModel.zeros(self.dim, kg, kf)
        ng, nf = self.g_lattice.size, self.f_lattice.size
        gc, gs = np.array(out.g_cos), np.array(out.g_sin)
        fc, fs = np.array(out.f_cos), np.array(out.f_sin)
        # smaller cutoffs are prefixes of the mode ordering
        gc[:, : ng + 1] = self.g_cos
        gs[:, :ng] = self.g_sin
        fc[:, :nf] = self.f_cos
        fs[:, :nf] = self.f_sin
        return FourierDriftModel(self.dim, kg, kf, gc, gs, fc, fs)

    def _aligned(self, other):
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        kg, kf = max(self.kg, other.kg), max(self.kf, other.kf)
        return self.embed(kg, kf), other.embed(kg, kf)

    def __add__(self, other: "FourierDriftModel") -> "FourierDriftModel":
        a, b = self._aligned(other)
        return FourierDriftModel.from_theta(a.dim, a.kg, a.kf, a.theta + b.theta)

    def __sub__(self, other: "FourierDriftModel") -> "FourierDriftModel":
        a, b = self._aligned(other)
        return FourierDriftModel.from_theta(a.dim, a.kg, a.kf, a.theta - b.theta)

    def scale(self, s: float) -> "FourierDriftModel":
        return FourierDriftModel.from_theta(self.dim, self.kg, self.kf, s * self.theta)

    def without_interaction(self) -> "FourierDriftModel":
        return FourierDriftModel(self.dim, self.kg, self.kf, self.g_cos, self.g_sin,
                                 np.zeros_like(self.f_cos), np.zeros_like(self.f_sin))

    def without_external(self) -> "FourierDriftModel":
        return FourierDriftModel(self.dim, self.kg, self.kf, np.zeros_like(self.g_cos),
                                 np.zeros_like(self.g_sin), self.f_cos, self.f_sin)

    def shifted(self, v) -> "FourierDriftModel":
        """External force translated by ``v``: ``G'(x) = G(x - v)``; ``F`` unchanged."""
        v = np.asarray(v, dtype=float).reshape(self.dim)
        phase = TWO_PI * (self.g_lattice.modes @ v)
        c, s = np.cos(phase), np.sin(phase)
        a, b = self.g_cos[:, 1:], self.g_sin
        gc = np.array(self.g_cos)
        # cos(k(x - v)) = cos kx cos kv + sin kx sin kv, likewise for sin
        gc[:, 1:] = a * c - b * s
        gs = a * s + b * c
        return FourierDriftModel(self.dim, self.kg, self.kf, gc, gs, self.f_cos, self.f_sin)

    # -- complex Fourier coefficients --------------------------------------
    def g_fourier(self) -> np.ndarray:
        """``(G)_k`` on ``g_lattice.all_modes`` (zero mode first), shape ``(d, 1+n)``."""
        out = np.empty(self.g_cos.shape, dtype=complex)
        out[:, 0] = self.g_cos[:, 0]
        out[:, 1:] = 0.5 * (self.g_cos[:, 1:] - 1j * self.g_sin)
        return out

    def f_fourier(self) -> np.ndarray:
        """``(F)_k`` on the half-lattice, shape ``(d, n_F)``; ``(F)_{-k}`` is the conjugate."""
        return 0.5 * (self.f_cos - 1j * self.f_sin)

    @classmethod
    def with_f_fourier(cls, base: "FourierDriftModel", f_hat) -> "FourierDriftModel":
        """Copy of ``base`` with kernel coefficients replaced by complex ``f_hat``."""
        f_hat = np.asarray(f_hat, dtype=complex).reshape(base.f_cos.shape)
        return cls(base.dim, base.kg, base.kf, base.g_cos, base.g_sin,
                   2.0 * f_hat.real, -2.0 * f_hat.imag)

    # -- pointwise evaluation ----------------------------------------------
    def G(self, x) -> np.ndarray:
        """External force at positions ``x`` of shape ``(..., d)``."""
        e = fourier_phases(x, self.g_lattice)
        return e.real @ self.g_cos.T + e[..., 1:].imag @ self.g_sin.T

    def F(self, z) -> np.ndarray:
        """Interaction kernel at displacements ``z`` of shape ``(..., d)``."""
        e = fourier_phases(z, self.f_lattice)
        return e.real @ self.f_cos.T + e.imag @ self.f_sin.T

    def interaction(self, x, mu_f) -> np.ndarray:
        """``(F * mu)(x)`` from measure coefficients ``mu_f`` aligned with ``f_lattice``."""
        e = fourier_phases(x, self.f_lattice) * mu_f
        return e.real @ self.f_cos.T + e.imag @ self.f_sin.T


class DriftEvaluator:
    """Vectorised drift evaluation against many positions at once.

    Phases are computed once on the larger of the model lattices (and an
    optional extra lattice, e.g. for recording a flow) and contracted with
    complex coefficients: ``a cos(t) + b sin(t) = Re((a - i b) exp(i t))``.
    This is the fast path used by the simulator and the diagnostics.
    """

    def __init__(self, model: FourierDriftModel, extra: ModeLattice | None = None):
        self.model = model
        K = max(model.kg, model.kf, extra.max_norm if extra is not None else 0)
        self.lattice = ModeLattice(model.dim, K, include_zero=True)
        empty = np.zeros(0, dtype=np.int64)
        self.g_idx = self.lattice.index_of(model.g_lattice.all_modes)
        self.f_idx = self.lattice.index_of(model.f_lattice.modes) if model.f_lattice.size else empty
        self.extra_idx = None
        if extra is not None:
            self.extra_idx = self.lattice.index_of(extra.all_modes) if len(extra.all_modes) else empty
        n = len(self.lattice.all_modes)
        gc = np.zeros((n, model.dim), dtype=complex)
        gc[self.g_idx] = model.g_fourier().T * np.r_[1.0, 2.0 * np.ones(model.g_lattice.size)][:, None]
        self._g = gc
        self._f = (model.f_cos - 1j * model.f_sin).T  # (n_F, d)

    def phases(self, x) -> np.ndarray:
        return fourier_phases(x, self.lattice)

    def measure(self, e) -> np.ndarray:
        """Empirical coefficients over ``self.lattice`` from phases of shape ``(N, n)``."""
        return np.conj(e.mean(axis=0))

    # einsum keeps each particle's sum independent of how many rows are evaluated
    def external(self, e) -> np.ndarray:
        return np.einsum("...k,kd->...d", e, self._g).real

    def interaction(self, e, mu_f) -> np.ndarray:
        return np.einsum("...k,kd->...d", e[..., self.f_idx], mu_f[:, None] * self._f).real

    def drift(self, e, mu_f) -> np.ndarray:
        coef = self._g.copy()
        if self.f_idx.size:
            coef[self.f_idx] += mu_f[:, None] * self._f
        return np.einsum("...k,kd->...d", e, coef).real


def _as_points(x, dim: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1 and (x.size == dim)
    return x.reshape(-1, dim), single


def eval_drift(model: FourierDriftModel, snapshot: EmpiricalMeasureSnapshot, x) -> np.ndarray:
    """``G(x) + (F * mu^N)(x)`` using the snapshot's Fourier cache."""
    if not snapshot.lattice.covers(model.f_lattice):
        raise ValueError("snapshot Fourier cache does not cover the interaction lattice")
    pts, single = _as_points(x, model.dim)
    mu_f = snapshot.coeffs[snapshot.lattice.index_of(model.f_lattice.modes)] \
        if model.f_lattice.size else np.zeros(0, dtype=complex)
    out = model.G(pts) + model.interaction(pts, mu_f)
    return out[0] if single else out


def eval_drift_naive(model: FourierDriftModel, positions, x) -> np.ndarray:
    """``G(x) + N^-1 sum_j F(x - x_j)`` by direct pairwise summation.

    Uses explicit ``cos``/``sin`` calls rather than the phase recursion, so it
    is independent of :func:`eval_drift`.
    """
    positions = np.asarray(positions, dtype=float).reshape(-1, model.dim)
    if positions.shape[0] == 0:
        raise ValueError("need at least one particle")
    pts, single = _as_points(x, model.dim)
    out = np.empty((len(pts), model.dim))
    gk = model.g_lattice.modes.astype(float)
    fk = model.f_lattice.modes.astype(float)
    for n, p in enumerate(pts):
        ph = TWO_PI * (gk @ p)
        g = model.g_cos[:, 0] + model.g_cos[:, 1:] @ np.cos(ph) + model.g_sin @ np.sin(ph)
        total = np.zeros(model.dim)
        for y in positions:
            z = wrap_nearest(p - y)
            phz = TWO_PI * (fk @ z)
            total += model.f_cos @ np.cos(phz) + model.f_sin @ np.sin(phz)
        out[n] = g + total / len(positions)
    return out[0] if single else out
