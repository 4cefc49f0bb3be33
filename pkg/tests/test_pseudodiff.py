import math

import numpy as np
import pytest
from scipy import integrate

from ncthom.clifford import multiply_arrays
from ncthom.crossed_rn import RnAction, RnCrossedElement
from ncthom.finite_group import CyclicAction
from ncthom.grid import GridSpec, e
from ncthom.nctorus import DeformationMatrix, TorusElement, star_J
from ncthom.pseudodiff import (HankelIntegrand, NormalizingFunction, ResolutionWarning, apply_D, boundedness_sweep,
                               build_chi, check_D_invariance, coefficient_adjoint, coefficient_product,
                               constant_symbol, delta_power, dirac_commutator_kernel, dirac_defect_kernel,
                               gaussian_symbol, grading_anticommutator, grid_pairing, h_multi_derivative,
                               invariant_frame, polynomial_symbol, principal_part_check, schwartz_profile,
                               sigma_derivative, sigma_hat_grid_oracle, sigma_symbol, symbol_adjoint,
                               symbol_compose, symbol_seminorms)
from ncthom.suites import _monotone


def chi_quad(chi, lam):
    # independent adaptive quadrature of int g(s) sin(lam s)/s ds
    f = lambda s: chi.g(s) * (math.sin(lam * s) / s if s else lam)
    return 2 * integrate.quad(f, 0, chi.sigma, limit=400, epsabs=1e-13)[0]


def gauss(center, width):
    c = np.asarray(center, dtype=float)
    return lambda x: np.exp(-np.sum((x - c) ** 2, axis=-1) / width)


# ---------------------------------------------------------------- chi


def test_chi_against_adaptive_quadrature(chi):
    for lam in (0.3, 2.0, 7.5, 25.0):
        assert abs(chi(lam) - chi_quad(chi, lam)) < 1e-10


def test_chi_basic_properties(chi):
    assert chi(0.0) == 0
    assert chi.dirichlet_limit() == pytest.approx(1, abs=1e-15)
    lam = np.linspace(0.1, 40, 300)
    assert np.array_equal(chi(-lam), -chi(lam))
    assert np.all(chi(lam) > 0)
    assert abs(chi(30.0) - 1) < 1e-9


def test_chi_derivative_and_ratio(chi):
    lam = np.array([0.5, 3.0, 11.0])
    fd = (chi(lam + 1e-5) - chi(lam - 1e-5)) / 2e-5
    assert np.allclose(chi.derivative(lam), fd, atol=1e-8)
    r = np.array([1e-3, 0.7, 4.0])
    assert np.allclose(chi.over_r(r), chi(r) / r, atol=1e-12)
    assert np.allclose(chi.moment(r, 0, 0), chi.over_r(r), atol=1e-12)
    assert chi.moment(r, 1, 0)[0] == 0


def test_chi_schwartz_tail(chi):
    _, prof = schwartz_profile(chi)
    assert prof.max() <= 10


def test_small_support_violates_tail_bound():
    _, prof = schwartz_profile(NormalizingFunction(1.0))
    assert prof.max() > 1e6


def test_chi_validation():
    with pytest.raises(ValueError):
        build_chi(0)
    with pytest.raises(ValueError):
        NormalizingFunction(1.0, nodes=4)
    with pytest.raises(ValueError):
        NormalizingFunction(14.0, nodes=64)(100.0)


# ------------------------------------------------------------ symbols


def test_symbol_shape_and_multi_index_checks():
    bad = polynomial_symbol(2, {(1, 0): [[1.0]]}, [[0, 0]])
    with pytest.raises(ValueError):
        bad.derivative(np.zeros(2), (1,))
    from ncthom.pseudodiff import Symbol
    wrong = Symbol(2, 0.0, lambda xi: np.zeros(xi.shape[:-1] + (3, 1)), [[0, 0]])
    with pytest.raises(ValueError):
        wrong(np.zeros((4, 2)))


def test_gaussian_symbol_derivatives_match_differences(rng):
    s = gaussian_symbol(2, [0.5, -0.3], 1.5, [[1.0], [0.5j]], [[1, 0], [0, 1]])
    fd = s.__class__(s.n, s.order, s.fn, s.modes, s.clifford, None, 1e-2)
    xi = rng.normal(size=(6, 2))
    for k in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 3)]:
        assert np.allclose(s.derivative(xi, k), fd.derivative(xi, k), atol=1e-7)


def test_polynomial_symbol_derivatives():
    p = polynomial_symbol(2, {(2, 1): [[1.0]], (0, 1): [[3.0]]}, [[0, 0]])
    xi = np.array([[1.5, -2.0]])
    assert p(xi)[0, 0, 0] == pytest.approx(1.5**2 * -2 + 3 * -2)
    assert p.derivative(xi, (1, 0))[0, 0, 0] == pytest.approx(2 * 1.5 * -2)
    assert p.derivative(xi, (2, 1))[0, 0, 0] == pytest.approx(2)
    assert p.derivative(xi, (3, 0))[0, 0, 0] == 0


def test_coefficient_product_matches_star(rng):
    J = DeformationMatrix.planar(0.3)
    mx, my = np.array([[1, 0], [0, 1]]), np.array([[0, 1], [2, -1]])
    x = rng.normal(size=(2, 1)) + 0j
    y = rng.normal(size=(2, 1)) + 0j
    vals, modes, _ = coefficient_product(x, mx, 0, y, my, 0, J)
    a = TorusElement(2, {tuple(m): x[i, 0] for i, m in enumerate(mx)})
    b = TorusElement(2, {tuple(m): y[i, 0] for i, m in enumerate(my)})
    ab = star_J(a, b, J)
    for i, m in enumerate(modes):
        assert abs(vals[i, 0] - ab[tuple(m)]) < 1e-14


def test_coefficient_adjoint_involution(rng):
    x = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    modes = np.array([[1, 0], [0, 0], [2, 1]])
    a, ma = coefficient_adjoint(x, modes, 2)
    b, mb = coefficient_adjoint(a, ma, 2)
    assert np.array_equal(b, x) and np.array_equal(mb, modes)


def test_delta_power():
    vals = np.ones((2, 1), complex)
    modes = np.array([[1, 0], [2, 3]])
    out = delta_power(vals, modes, (1, 1), RnAction.torus(2, scale=0.5))
    assert np.allclose(out[:, 0], [0, (0.5j * 2) * (0.5j * 3)])
    assert np.all(delta_power(vals, modes, (1, 0), RnAction.trivial(2)) == 0)


def test_compose_order_range():
    s = constant_symbol(2, [[1.0]], [[0, 0]])
    with pytest.raises(ValueError):
        symbol_compose(s, s, 4, RnAction.torus(2))
    with pytest.raises(ValueError):
        symbol_adjoint(s, -1, RnAction.torus(2))


def test_compose_of_constants_is_product():
    act = RnAction.torus(2, J=DeformationMatrix.planar(0.2))
    a = constant_symbol(2, [[2.0]], [[1, 0]])
    b = constant_symbol(2, [[3.0j]], [[0, 1]])
    c = symbol_compose(a, b, 3, act)
    expect = star_J(TorusElement.basis((1, 0)) * 2.0, TorusElement.basis((0, 1)) * 3.0j, act.J)
    assert np.allclose(c(np.zeros((1, 2)))[0, :, 0], [expect[(1, 1)]])


# ------------------------------------------------------------- Sigma


def test_sigma_square_is_chi_squared(chi, rng):
    sig = sigma_symbol(chi, 2)
    xi = rng.normal(scale=5, size=(20, 2))
    v = sig(xi)[:, 0, :]
    sq = multiply_arrays(v, v, 2)
    r = np.linalg.norm(xi, axis=-1)
    assert np.allclose(sq[:, 0], chi(r) ** 2, atol=1e-13)
    assert np.abs(sq[:, 1:]).max() < 1e-13


@pytest.mark.parametrize("n", [1, 2, 3])
def test_sigma_derivative_against_differences(chi, rng, n):
    sig = sigma_symbol(chi, n)
    fd = sig.__class__(n, 0.0, sig.fn, sig.modes, n, None, 1e-4)
    xi = rng.normal(scale=3, size=(5, n))
    for j in range(n):
        k = tuple(int(i == j) for i in range(n))
        assert np.allclose(sigma_derivative(chi, xi, j), fd.derivative(xi, k), atol=1e-8)


def test_sigma_is_odd_and_has_principal_part(chi, rng):
    sig = sigma_symbol(chi, 2)
    assert grading_anticommutator(sig, rng.normal(size=(10, 2)) * 4) < 1e-14
    out = principal_part_check(sig, lambdas=(20.0, 40.0, 80.0), tol=1e-6)
    assert out["pass"]
    assert np.allclose(np.abs(out["limit"][:, 0, 1]) ** 2 + np.abs(out["limit"][:, 0, 2]) ** 2, 1, atol=1e-8)


def test_sigma_symbol_seminorms(chi):
    assert symbol_seminorms(sigma_symbol(chi, 2), jmax=1).passed


def test_polynomial_symbol_seminorms():
    p = polynomial_symbol(2, {(2, 0): [[1.0]], (0, 1): [[1.0]]}, [[0, 0]])
    assert symbol_seminorms(p).passed


def test_h_multi_derivative_against_differences(chi):
    omega = np.array([math.cos(0.4), math.sin(0.4)])
    r, h = 3.0, 1e-3
    F = lambda xi: chi.moment(np.linalg.norm(xi), 0, 0)
    xi0 = r * omega
    E = np.eye(2) * h
    d1 = [(F(xi0 + E[i]) - F(xi0 - E[i])) / (2 * h) for i in range(2)]
    assert h_multi_derivative(chi, r, omega, (1, 0)) == pytest.approx(d1[0], abs=1e-7)
    assert h_multi_derivative(chi, r, omega, (0, 1)) == pytest.approx(d1[1], abs=1e-7)
    d11 = (F(xi0 + E[0] + E[1]) - F(xi0 + E[0] - E[1]) - F(xi0 - E[0] + E[1]) + F(xi0 - E[0] - E[1])) / (4 * h * h)
    assert h_multi_derivative(chi, r, omega, (1, 1)) == pytest.approx(d11, abs=1e-5)
    d20 = (F(xi0 + E[0]) - 2 * F(xi0) + F(xi0 - E[0])) / h**2
    assert h_multi_derivative(chi, r, omega, (2, 0)) == pytest.approx(d20, abs=1e-5)
    with pytest.raises(ValueError):
        h_multi_derivative(chi, r, omega, (2, 1))


def test_boundedness_sweep_structure(chi):
    rows = boundedness_sweep(chi, lmax=4)
    assert len(rows) == 6 * 5
    # measured: bounded exactly when l <= 1 + |J|
    assert all(r["bounded"] == (r["l"] <= 1 + sum(r["J"])) for r in rows)


# ------------------------------------------------------ transforms


def test_hankel_matches_grid_transform(chi):
    eps = 0.2
    oracle = sigma_hat_grid_oracle(chi, eps)
    x = oracle.spec.points()
    r = np.linalg.norm(x, axis=-1)
    sel = (r < 3) & (r > 0.1)
    S = HankelIntegrand(chi, r[sel], 2, eps)(eps)
    for j in range(2):
        assert np.abs(oracle.values[sel][:, 1 << j] - x[sel][:, j] * S).max() < 1e-9


def test_commutator_kernel_vanishes_on_unit(chi):
    spec = GridSpec(2, 6, 1.0)
    K, _ = dirac_commutator_kernel(TorusElement.one(2), chi, spec)
    assert np.all(K.values == 0)


def test_defect_kernel_at_origin(chi):
    spec = GridSpec(2, 4, 1.0)
    K, noise = dirac_defect_kernel(TorusElement.one(2), chi, spec)
    total = 2 * math.pi * integrate.quad(lambda r: (1 - chi(r) ** 2) * r, 0, 70, limit=400)[0]
    assert abs(K.values[tuple(spec.index_of([0, 0]))][0] - total) < 1e-6 + noise


# ------------------------------------------------------ operators


def test_apply_D_polynomial_is_derivative():
    spec = GridSpec(1, 8, 1 / 16)
    u = RnCrossedElement.scalar(spec, gauss([0.2], 0.5))
    p = polynomial_symbol(1, {(1,): [[1.0]]}, [[0]])
    out = apply_D(p, u).component((0,))
    x = spec.points()[..., 0]
    du = -2 * (x - 0.2) / 0.5 * np.exp(-(x - 0.2) ** 2 / 0.5)
    assert np.max(np.abs(out - 1j / (2 * math.pi) * du)) < 1e-10


def test_apply_D_constant_mode_multiplies():
    spec = GridSpec(2, 6, 0.25)
    u = RnCrossedElement.from_modes(spec, RnAction.torus(2), {(0, 1): gauss([0, 0], 0.6)})
    s = constant_symbol(2, [[2.0]], [[1, 0]])
    out = apply_D(s, u).component((1, 1))
    t = spec.points()
    assert np.max(np.abs(out - 2 * e(t[..., 0]) * gauss([0, 0], 0.6)(t))) < 1e-12


def test_apply_D_warns_when_unresolved():
    spec = GridSpec(1, 2, 0.5)
    u = RnCrossedElement.scalar(spec, gauss([0], 0.02))
    with pytest.warns(ResolutionWarning):
        apply_D(constant_symbol(1, [[1.0]], [[0]]), u)


def test_pairing_is_sesquilinear():
    spec = GridSpec(1, 4, 0.25)
    f = RnCrossedElement.scalar(spec, gauss([0], 1))
    assert grid_pairing(f.scale(2j), f) == pytest.approx(-2j * grid_pairing(f, f))
    assert grid_pairing(f, f).real == pytest.approx(math.sqrt(math.pi / 2), rel=1e-10)


def test_expansions(expansion):
    assert _monotone(expansion["compose"]) and _monotone(expansion["adjoint"])
    for key in ("trivial_compose", "trivial_adjoint", "polynomial_compose", "polynomial_adjoint"):
        assert expansion[key] < 1e-12


# -------------------------------------------------------- invariance


@pytest.mark.parametrize("k", [1, 2, 3, 4, 6])
def test_invariance_of_sigma(chi, k):
    G = CyclicAction.standard(k)
    P = invariant_frame(G)
    assert np.allclose(P.T @ P, G.gram())
    out = check_D_invariance(chi, G, samples=20)
    assert out["max_defect"] < 1e-12
    assert max(r["orthogonality"] for r in out["rows"]) < 1e-12
