"""Time-weighted deconvolution of the interaction kernel from a drift field.

The operator ``L f = int_0^T f(t) w(t) dt`` with a zero-integral weight kills
anything constant in time, so applied to ``b(mu_t, x) = G(x) + (F * mu_t)(x)``
it leaves ``(L b)_k = (F)_k (L mu)_k`` mode by mode.  ``F`` is recoverable
wherever ``(L mu)_k`` is bounded away from zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import TWO_PI, FourierDriftModel, ModeLattice
from .simulate import MeasureFlow


class IllPosedMode(ValueError):
    """Deconvolution attempted at modes where ``|(L mu)_k|`` is below tolerance."""

    def __init__(self, modes):
        self.modes = [tuple(int(c) for c in k) for k in modes]
        super().__init__(f"(L mu)_k vanishes at modes {self.modes}")


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """Samples ``w(t_m)`` at the left endpoints ``t_m = m dt``, ``m < M``."""

    samples: np.ndarray = field(repr=False)
    T: float
    kind: str = "custom"

    def __post_init__(self):
        w = np.array(self.samples, dtype=float)
        if w.ndim != 1 or len(w) == 0 or not np.all(np.isfinite(w)):
            raise ValueError("weight samples must be a finite 1-d array")
        if abs(w.sum() * self.dt) > 1e-10 * self.T:
            raise ValueError("weight must integrate to zero over [0, T]")
        w.setflags(write=False)
        object.__setattr__(self, "samples", w)

    @property
    def m(self) -> int:
        return len(self.samples)

    @property
    def dt(self) -> float:
        return self.T / len(self.samples)

    @classmethod
    def cosine(cls, m: int, T: float) -> "WeightFunction":
        t = np.arange(m) * (T / m)
        w = np.cos(TWO_PI * t / T)
        return cls(w - w.mean(), T, "cosine")

    @classmethod
    def haar(cls, m: int, T: float) -> "WeightFunction":
        t = np.arange(m) * (T / m)
        w = np.where(t < T / 2, 1.0, -1.0)
        # exact +-1 for even M; odd M gets re-centred
        return cls(w - w.mean(), T, "haar")

    @classmethod
    def make(cls, kind: str, m: int, T: float) -> "WeightFunction":
        if kind == "cosine":
            return cls.cosine(m, T)
        if kind == "haar":
            return cls.haar(m, T)
        raise ValueError(f"unknown weight kind {kind!r}")


def _check_grid(flow: MeasureFlow, w: WeightFunction):
    if not flow.same_grid(w.T, w.m):
        raise ValueError("weight and flow time grids differ")


def flow_fourier_L(flow: MeasureFlow, w: WeightFunction) -> np.ndarray:
    """``(L mu)_k = sum_m (mu_{t_m})_k w(t_m) dt`` on ``flow.lattice.all_modes``."""
    _check_grid(flow, w)
    return (w.samples @ flow.coeffs[:-1]) * w.dt


def operator_L_drift(bhat: FourierDriftModel, flow: MeasureFlow, w: WeightFunction) -> np.ndarray:
    """Fourier coefficients of ``L[b(mu, .)]`` on the kernel half-lattice, shape ``(d, n_F)``.

    The external force is time independent and drops out.
    """
    _check_grid(flow, w)
    if not flow.lattice.covers(bhat.f_lattice):
        raise ValueError("flow lattice does not cover the interaction lattice")
    lmu = (w.samples @ flow.take(bhat.f_lattice)[:-1]) * w.dt
    return bhat.f_fourier() * lmu[None, :]


def default_tol(lmu, floor: float = 0.0) -> float:
    """``1e-6 max_k |(L mu)_k|``, but never below ``floor``."""
    lmu = np.abs(np.asarray(lmu))
    return max(1e-6 * float(lmu.max()) if lmu.size else 0.0, floor)


def _rounding_floor(w: WeightFunction, coeffs) -> float:
    # quadrature roundoff: a stationary flow leaves ~eps * sum |w| |mu| dt, not exact zeros
    if coeffs.size == 0:
        return 0.0
    scale = float(np.abs(w.samples) @ np.max(np.abs(coeffs), axis=1)) * w.dt
    return 64 * np.finfo(float).eps * scale


def recover_interaction(lb, lmu, tol: float | None = None, modes=None) -> np.ndarray:
    """Kernel coefficients ``(F)_k = (L b)_k / (L mu)_k``.

    ``lb`` has shape ``(d, n)`` and ``lmu`` shape ``(n,)``, both on the nonzero
    half-lattice; the zero mode of ``F`` is fixed at 0 by construction.
    Raises :class:`IllPosedMode` if any ``|(L mu)_k| <= tol``.
    """
    lb = np.atleast_2d(np.asarray(lb, dtype=complex))
    lmu = np.asarray(lmu, dtype=complex)
    if lb.shape[-1] != lmu.shape[0]:
        raise ValueError("lb and lmu cover different modes")
    tol = default_tol(lmu) if tol is None else tol
    bad = np.abs(lmu) <= tol
    if bad.any():
        if modes is None:
            modes = np.arange(1, len(lmu) + 1)[:, None]
        raise IllPosedMode(np.asarray(modes)[bad])
    return lb / lmu[None, :]


@dataclass
class IdentifiabilityReport:
    modes: np.ndarray
    lmu: np.ndarray
    tol: float
    min_modulus: float

    @property
    def flagged(self) -> np.ndarray:
        return np.abs(self.lmu) <= self.tol

    def rows(self) -> list[dict]:
        return [{"mode": [int(c) for c in k], "modulus": float(abs(v)), "flagged": bool(f)}
                for k, v, f in zip(self.modes, self.lmu, self.flagged)]


def identifiability_report(flow: MeasureFlow, w: WeightFunction, K: int,
                           tol: float | None = None) -> IdentifiabilityReport:
    """``inf_{0 < |k|_inf <= K} |(L mu)_k|`` and the per-mode table."""
    if K > flow.lattice.max_norm:
        raise ValueError("K exceeds the flow lattice cutoff")
    _check_grid(flow, w)
    lat = ModeLattice(flow.lattice.dim, K)
    mu = flow.take(lat)[:-1]
    lmu = (w.samples @ mu) * w.dt
    tol = default_tol(lmu, _rounding_floor(w, mu)) if tol is None else tol
    mins = float(np.min(np.abs(lmu))) if lmu.size else math.inf
    return IdentifiabilityReport(lat.modes, lmu, tol, mins)


def stability_bound(lb_error_l2: float, lmu_inf: float, C: float, h1_budget: float) -> float:
    """``|L(bhat - b)|_2 / inf|(L mu)_k| + |Fhat - F|_{H^1} / (2 pi C)``."""
    if C <= 0:
        raise ValueError("C must be positive")
    if lmu_inf <= 0:
        raise ValueError("infimum of |(L mu)_k| must be positive")
    return lb_error_l2 / lmu_inf + h1_budget / (TWO_PI * C)


def lmu_by_radius(lattice: ModeLattice, lmu, max_radius: int | None = None) -> np.ndarray:
    """Entry ``r-1`` is ``inf_{0 < |k| <= r} |(L mu)_k|`` (Euclidean ``|k|``), ``r = 1..R``."""
    R = lattice.max_norm if max_radius is None else max_radius
    norms = np.sqrt(np.sum(lattice.modes.astype(float) ** 2, axis=1))
    mod = np.abs(np.asarray(lmu))
    return np.array([mod[norms <= r + 1e-12].min() for r in range(1, R + 1)])


@dataclass(frozen=True)
class EtaResult:
    eta: int
    satisfiable: bool


def eta_N(n: int, delta_n: float, r_n: float, C1: float, lmu_by_radius) -> EtaResult:
    """Radius of reliably invertible modes.

    The largest ``eta`` with ``eta (delta_N + r_N + log N / N) <= C1 inf_{0<|k|<=eta} |(L mu)_k|``,
    searched over the radii covered by ``lmu_by_radius``.  The left side grows
    and the right side shrinks with ``eta``, so the admissible set is an initial
    segment; if ``eta = 1`` already fails the result is flagged unsatisfiable.
    """
    if C1 <= 0:
        raise ValueError("C1 must be positive")
    rate = delta_n + r_n + math.log(n) / n
    inf_mod = np.asarray(lmu_by_radius, dtype=float)
    eta = 0
    for r, v in enumerate(inf_mod, start=1):
        if r * rate <= C1 * v * (1 + 1e-12):
            eta = r
        else:
            break
    return EtaResult(eta, eta >= 1)


@dataclass
class DeconvolutionReport:
    modes: np.ndarray
    lflow: np.ndarray
    min_modulus: float
    tol: float
    recovered_f: np.ndarray
    flags: np.ndarray
    stability_bound: float | None = None
    eta: EtaResult | None = None

    def to_dict(self) -> dict:
        def cplx(a):
            return [[float(v.real), float(v.imag)] for v in np.ravel(a)]

        return {
            "modes": self.modes.tolist(),
            "lflow": cplx(self.lflow),
            "min_modulus": self.min_modulus,
            "tol": self.tol,
            "recovered_f": [cplx(row) for row in self.recovered_f],
            "flags": [bool(f) for f in self.flags],
            "stability_bound": self.stability_bound,
            "eta_n": None if self.eta is None else self.eta.eta,
            "eta_satisfiable": None if self.eta is None else self.eta.satisfiable,
        }


def deconvolve(bhat: FourierDriftModel, flow: MeasureFlow, w: WeightFunction,
               K: int | None = None, tol: float | None = None, n: int | None = None,
               alpha: float = 2.0, C1: float = 1.0, lb_error_l2: float = 0.0,
               h1_budget: float | None = None) -> DeconvolutionReport:
    """Run the full deconvolution on ``bhat``: identifiability, recovery, bounds.

    Modes whose ``|(L mu)_k|`` is below tolerance are reported through
    ``flags`` and get NaN in ``recovered_f`` rather than being dropped.
    """
    from .metrics import h1_norm, rate_exponent

    K = bhat.kf if K is None else K
    rep = identifiability_report(flow, w, K, tol)
    lat = ModeLattice(bhat.dim, K)
    f_hat = bhat.embed(bhat.kg, max(bhat.kf, K)).f_fourier()[:, : lat.size]
    lb = f_hat * rep.lmu[None, :]
    ok = ~rep.flagged
    rec = np.full(lb.shape, np.nan + 0j)
    if ok.any():
        rec[:, ok] = recover_interaction(lb[:, ok], rep.lmu[ok], rep.tol, lat.modes[ok])
    bound = None
    if np.isfinite(rep.min_modulus) and rep.min_modulus > 0 and K > 0:
        budget = h1_norm(bhat, "f") if h1_budget is None else h1_budget
        bound = stability_bound(lb_error_l2, rep.min_modulus, K, budget)
    eta = None
    if n is not None and lat.size:
        rn = n ** -rate_exponent(alpha, bhat.dim)
        eta = eta_N(n, rn, rn, C1, lmu_by_radius(lat, rep.lmu))
    return DeconvolutionReport(lat.modes, rep.lmu, rep.min_modulus, rep.tol, rec,
                               rep.flagged, bound, eta)
