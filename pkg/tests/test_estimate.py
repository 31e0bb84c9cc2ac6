import numpy as np
import pytest
from scipy.stats import chi2

from conftest import random_model
from ipsdrift.core import FourierDriftModel, ModeLattice
from ipsdrift.estimate import (FitConfig, SingularGram, fit_mle, select_K, sobolev_weights,
                               solve_normal_equations)
from ipsdrift.likelihood import assemble_normal_equations
from ipsdrift.metrics import e_norm
from ipsdrift.simulate import InitialLaw, simulate_ips, simulate_reference_flow


def test_constant_drift_closed_form():
    g0 = 0.7
    model = FourierDriftModel.from_modes(1, 0, 0, g=[(0, (0,), g0, 0.0)])
    data = simulate_ips(model, 30, 2.0, 200, InitialLaw(), 1)
    fit = fit_mle(data, FitConfig(kg=0, kf=0))
    assert fit.g_cos[0, 0] == pytest.approx(data.increments.sum() / (data.n * data.T), rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_fit_beats_truth_on_objective(truth, seed):
    data = simulate_ips(truth, 64, 1.0, 256, InitialLaw(), seed)
    ne = assemble_normal_equations(data, ModeLattice(1, 4, True), ModeLattice(1, 4))
    fit = solve_normal_equations(ne, FitConfig())
    assert ne.objective(fit.theta) >= ne.objective(truth.theta)
    # residual orthogonality at lambda = 0
    resid = ne.response - ne.gram @ fit.theta.T
    assert np.max(np.abs(resid)) <= 1e-9 * np.max(np.abs(ne.response))


def test_parametric_error_at_moderate_n(truth):
    # n * T * E^2 behaves like a chi-square with p degrees of freedom (unit noise)
    n, T, p = 512, 1.0, truth.n_params
    bound = np.sqrt(chi2.ppf(0.95, p) / (n * T))
    hits = 0
    for seed in range(20):
        data = simulate_ips(truth, n, T, 1024, InitialLaw(), 1000 + seed)
        flow, ens = simulate_reference_flow(truth, 2048, T, 1024, InitialLaw(), ModeLattice(1, 4),
                                            5000 + seed, keep_positions=True)
        hits += e_norm(fit_mle(data, FitConfig()) - truth, flow, ens) <= bound
    assert hits >= 18


@pytest.mark.parametrize("n, alpha, d, want", [(1024, 2, 1, 4), (2, 2, 1, 1), (2, 7, 3, 1),
                                               (10**5, 2, 2, 7)])
def test_select_k(n, alpha, d, want):
    assert select_K(n, alpha, d) == want


def test_penalty_is_monotone(rng, truth):
    data = simulate_ips(truth, 32, 1.0, 128, InitialLaw(), 3)
    ne = assemble_normal_equations(data, ModeLattice(1, 4, True), ModeLattice(1, 4))
    D = sobolev_weights(ne.g_lattice, ne.f_lattice, 1.0)
    energies = []
    for lam in (0.0, 1e-4, 2e-4, 1e-2, 2e-2, 1.0):
        theta = solve_normal_equations(ne, FitConfig(lam=lam, sobolev=1.0)).theta
        energies.append(float(np.sum(D * theta**2)))
    assert all(b <= a * (1 + 1e-12) for a, b in zip(energies, energies[1:]))


def test_translation_equivariance(rng):
    model = random_model(rng, 2, 2, 2, 0.3)
    data = simulate_ips(model, 40, 1.0, 64, InitialLaw(), 11)
    v = np.array([0.37, 0.81])
    cfg = FitConfig(kg=2, kf=2)
    base, moved = fit_mle(data, cfg), fit_mle(data.shifted(v), cfg)
    np.testing.assert_allclose(moved.f_cos, base.f_cos, atol=1e-6)
    np.testing.assert_allclose(moved.f_sin, base.f_sin, atol=1e-6)
    x = rng.random((10, 2))
    np.testing.assert_allclose(moved.G(x), base.G(x - v), atol=1e-6)


def test_singular_gram():
    # one particle: the interaction feature is identically 1, collinear with the constant
    data = simulate_ips(FourierDriftModel.zeros(1, 1, 1), 1, 1.0, 32, InitialLaw(), 0)
    with pytest.raises(SingularGram) as err:
        fit_mle(data, FitConfig(kg=1, kf=1))
    assert err.value.min_eigenvalue < 1e-8
    fit = fit_mle(data, FitConfig(kg=1, kf=1, jitter=1e-10))
    assert np.all(np.isfinite(fit.theta))


def test_config_validation():
    with pytest.raises(ValueError):
        FitConfig(lam=-1.0)
    with pytest.raises(ValueError):
        select_K(1, 2, 1)
