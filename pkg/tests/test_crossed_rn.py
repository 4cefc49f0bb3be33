import warnings

import numpy as np
import pytest

from ncthom.crossed_rn import (DualCrossedElement, RnAction, RnCrossedElement, SmoothKernel, TruncationWarning,
                               dual_action, dual_crossed_product, dual_group_act, gamma_action, group_act,
                               kernel_decay, kernel_group_action, lattice_pullback, takai_map, theta_J,
                               twisted_conv)
from ncthom.finite_group import CyclicAction
from ncthom.grid import GridSpec, e
from ncthom.nctorus import DeformationMatrix
from ncthom.suites import takai_equivariance, takai_multiplicativity, theta_equivariance, theta_homomorphism


def gauss(center, width):
    c = np.asarray(center, dtype=float)
    return lambda x: np.exp(-np.sum((x - c) ** 2, axis=-1) / width)


def brute_twisted(f, g, m, n, x_index):
    """Direct sum over the grid of f_m(y) e(-<y, n>) g_n(x - y), ignoring the star phase (J = 0)."""
    spec = f.spec
    pts = spec.points().reshape(-1, spec.dim)
    fm = f.component(m).reshape(-1)
    x = spec.points()[x_index]
    gn = gauss(*g)(x - pts)
    return np.sum(fm * e(-pts @ np.asarray(n, float)) * gn) * spec.cell


def test_action_validation():
    with pytest.raises(ValueError):
        RnAction("shear", 2)
    with pytest.raises(ValueError):
        RnAction.torus(2, J=np.zeros((3, 3)))
    act = RnAction.torus(2, scale=0.5)
    assert np.allclose(act.phase(np.array([1.0, 0]), [[1, 0]]), e(-0.5))
    assert np.all(RnAction.trivial(2).phase(np.ones((3, 2)), [[1, 2]]) == 1)


def test_element_validation():
    spec = GridSpec(2, 2, 0.5)
    f = RnCrossedElement.from_modes(spec, RnAction.torus(2), {(1, 0): gauss([0, 0], 1)})
    with pytest.raises(ValueError):
        RnCrossedElement(f.data, RnAction.torus(3))
    assert np.all(f.component((5, 5)) == 0)
    g = RnCrossedElement.from_modes(GridSpec(2, 2, 0.25), RnAction.torus(2), {(1, 0): gauss([0, 0], 1)})
    with pytest.raises(ValueError):
        f + g


def test_scalar_convolution_closed_form():
    spec = GridSpec(1, 8, 1 / 16)
    a, b = 0.7, 1.3
    f = RnCrossedElement.scalar(spec, gauss([0], a))
    g = RnCrossedElement.scalar(spec, gauss([0], b))
    x = spec.points()[..., 0]
    exact = np.sqrt(np.pi * a * b / (a + b)) * np.exp(-x**2 / (a + b))
    assert np.max(np.abs(twisted_conv(f, g).component((0,)) - exact)) < 1e-12


def test_twisted_convolution_matches_direct_sum():
    spec = GridSpec(2, 4, 0.25)
    act = RnAction.torus(2)
    fprof = ([0.2, -0.1], 0.5)
    gprof = ([0.0, 0.3], 0.7)
    f = RnCrossedElement.from_modes(spec, act, {(1, 0): gauss(*fprof)})
    g = RnCrossedElement.from_modes(spec, act, {(0, 1): gauss(*gprof)})
    fg = twisted_conv(f, g)
    for idx in [(16, 16), (14, 18), (20, 11)]:
        assert abs(fg.component((1, 1))[idx] - brute_twisted(f, gprof, (1, 0), (0, 1), idx)) < 1e-13


def test_twisted_convolution_associative():
    spec = GridSpec(2, 6, 0.25)
    act = RnAction.torus(2, J=DeformationMatrix.planar(0.3))
    f = RnCrossedElement.from_modes(spec, act, {(1, 0): gauss([0.3, 0], 0.5), (0, 0): gauss([0, 0], 0.4)})
    g = RnCrossedElement.from_modes(spec, act, {(0, 1): gauss([0, -0.2], 0.6)})
    k = RnCrossedElement.from_modes(spec, act, {(-1, 1): gauss([0.1, 0.1], 0.5)})
    lhs = twisted_conv(twisted_conv(f, g), k)
    rhs = twisted_conv(f, twisted_conv(g, k))
    assert lhs.defect(rhs) < 1e-12


def test_twisted_convolution_mismatch():
    spec = GridSpec(1, 2, 0.5)
    f = RnCrossedElement.scalar(spec, gauss([0], 1))
    g = RnCrossedElement.scalar(spec, gauss([0], 1), RnAction.torus(1))
    with pytest.raises(ValueError):
        twisted_conv(f, g)


def test_dual_action_group_law_and_automorphism():
    spec = GridSpec(2, 6, 0.25)
    act = RnAction.torus(2)
    f = RnCrossedElement.from_modes(spec, act, {(1, 0): gauss([0.3, 0], 0.5)})
    g = RnCrossedElement.from_modes(spec, act, {(0, 1): gauss([0, -0.2], 0.6)})
    x, y = np.array([0.3, -0.7]), np.array([1.1, 0.4])
    assert dual_action(x, dual_action(y, f)).defect(dual_action(x + y, f)) < 1e-14
    lhs = dual_action(x, twisted_conv(f, g))
    rhs = twisted_conv(dual_action(x, f), dual_action(x, g))
    assert lhs.defect(rhs) < 1e-13


def test_gamma_lattice_shift_exact():
    spec = GridSpec(2, 6, 0.25)
    f = RnCrossedElement.from_modes(spec, RnAction.torus(2), {(1, 0): gauss([0, 0], 0.5)})
    moved = gamma_action([0.5, -0.25], f)
    expect = RnCrossedElement.from_modes(spec, RnAction.torus(2), {(1, 0): gauss([0.5, -0.25], 0.5)})
    assert moved.defect(expect) < 1e-14
    assert gamma_action([-0.5, 0.25], moved).defect(f) < 1e-14


@pytest.mark.filterwarnings("ignore::ncthom.crossed_rn.TruncationWarning")
def test_gamma_spline_shift_accuracy():
    spec = GridSpec(1, 6, 1 / 32)
    f = RnCrossedElement.scalar(spec, gauss([0], 0.8))
    moved = gamma_action([0.3 + 1 / 97], f)
    assert moved.defect(RnCrossedElement.scalar(spec, gauss([0.3 + 1 / 97], 0.8))) < 1e-4


def test_gamma_truncation_warns():
    spec = GridSpec(1, 2, 0.25)
    f = RnCrossedElement.scalar(spec, gauss([1.0], 0.5))
    with pytest.warns(TruncationWarning):
        gamma_action([1.5], f)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        gamma_action([0.0], f)


def test_theta_translates_each_mode():
    spec = GridSpec(2, 8, 0.125)
    J = DeformationMatrix.planar(0.37)
    act = RnAction.torus(2, J=J)
    profiles = {(1, 0): gauss([0.3, 0], 0.6), (0, 1): gauss([0, -0.2], 0.8)}
    f = RnCrossedElement.from_modes(spec, act, profiles)
    out = theta_J(f)
    assert out.action.J is None
    for m, prof in profiles.items():
        shift = J.J @ np.array(m, float)
        expect = prof(spec.points() + shift)
        assert np.max(np.abs(out.component(m) - expect)) < 1e-12


def test_theta_zero_is_identity():
    spec = GridSpec(2, 4, 0.25)
    f = RnCrossedElement.from_modes(spec, RnAction.torus(2), {(1, 1): gauss([0, 0], 0.5)})
    assert theta_J(f).defect(f) == 0
    with pytest.raises(ValueError):
        theta_J(RnCrossedElement.scalar(spec, gauss([0, 0], 1)))


def test_theta_homomorphism_and_equivariance():
    assert theta_homomorphism(8, 0.25) < 1e-10
    assert theta_equivariance(8, 0.125, (2, 4)) < 1e-13


def test_group_action_group_law():
    spec = GridSpec(2, 3, 0.25)
    f = RnCrossedElement.from_modes(spec, RnAction.torus(2), {(1, 0): gauss([0.5, 0], 0.4), (0, 2): gauss([0, 0], 0.3)})
    for k in (3, 4, 6):
        G = CyclicAction.standard(k)
        a, b = G.element(1), G.element(2)
        assert group_act(a, group_act(b, f)).defect(group_act(a @ b, f)) == 0
        assert group_act(G.element(k), f).defect(f) == 0


def test_group_action_rejections():
    f = RnCrossedElement.from_modes(GridSpec(2, 2.25, 0.25), RnAction.torus(2), {(1, 0): gauss([0, 0], 1)})
    with pytest.raises(ValueError):
        group_act(-np.eye(2, dtype=int), f)
    g = RnCrossedElement.from_modes(GridSpec(2, 2, 0.25), RnAction.torus(2), {(1, 0): gauss([0, 0], 1)})
    with pytest.raises(ValueError):
        group_act(np.array([[2, 0], [0, 1]]), g)


@pytest.mark.parametrize("k", [2, 4])
def test_group_action_respects_convolution(k):
    spec = GridSpec(2, 6, 0.25)
    act = RnAction.torus(2)
    f = RnCrossedElement.from_modes(spec, act, {(1, 0): gauss([0.3, 0], 0.5)})
    g = RnCrossedElement.from_modes(spec, act, {(0, 1): gauss([0, -0.2], 0.6)})
    for r in CyclicAction.standard(k).elements():
        lhs = group_act(r, twisted_conv(f, g))
        rhs = twisted_conv(group_act(r, f), group_act(r, g))
        assert lhs.defect(rhs) < 1e-12


def test_lattice_pullback_is_permutation():
    idx = lattice_pullback(8, CyclicAction.standard(3).gen)
    flat = np.ravel_multi_index(idx, (8, 8))
    assert sorted(flat.ravel()) == list(range(64))


def kernel(spec, rng, modes=((0, 0), (1, 0))):
    d = spec.dim
    vals = rng.normal(size=(spec.size,) * (2 * d) + (len(modes),)) + 0j
    return SmoothKernel(spec, vals, np.array(modes))


def test_kernel_operator_round_trip(rng):
    spec = GridSpec(2, 1, 0.25)
    k = kernel(spec, rng)
    back = SmoothKernel.from_operator_form(spec, k.operator_form(), k.modes)
    assert back.defect(k) == 0


def test_kernel_compose_associative(rng):
    spec = GridSpec(1, 2, 0.25)
    a, b, c = (kernel(spec, rng, ((0,), (1,))) for _ in range(3))
    assert a.compose(b).compose(c).defect(a.compose(b.compose(c))) < 1e-11


def test_kernel_group_action(rng):
    spec = GridSpec(2, 1, 0.25)
    k = kernel(spec, rng)
    G = CyclicAction.standard(6)
    a, b = G.element(1), G.element(4)
    assert kernel_group_action(a, kernel_group_action(b, k)).defect(kernel_group_action(a @ b, k)) == 0
    ab = kernel_group_action(a, k.compose(k))
    assert ab.defect(kernel_group_action(a, k).compose(kernel_group_action(a, k))) < 1e-12


def test_kernel_decay_of_gaussian_saturates():
    spec = GridSpec(1, 16, 0.5)
    x = spec.points()[..., 0]
    vals = np.exp(-(x[:, None] ** 2) - x[None, :] ** 2)[..., None] + 0j
    first, second = kernel_decay(SmoothKernel(spec, vals, np.array([[0]])), (6, 15), noise_floor=1e-12)
    assert first.order == np.inf and second.order == np.inf


def test_inverse_t_transform_gaussian():
    spec = GridSpec(1, 4, 1 / 8)
    F = DualCrossedElement.from_modes(spec, RnAction.torus(1), {(0,): lambda t, s: np.exp(-np.pi * t[..., 0] ** 2)
                                                                + 0 * s[..., 0]})
    u = spec.points()[..., 0]
    out = F.inverse_t_transform()[..., 0]
    assert np.max(np.abs(out - np.exp(-np.pi * u[:, None] ** 2))) < 1e-12


def test_takai_map_tensor_product():
    # F(t, s) = a(t) b(s) U_0  maps to  b(s) a-check(r - s)
    spec = GridSpec(1, 4, 1 / 8)
    F = DualCrossedElement.from_modes(spec, RnAction.torus(1),
                                      {(0,): lambda t, s: np.exp(-np.pi * t[..., 0] ** 2 - s[..., 0] ** 2)})
    K = takai_map(F).values[..., 0]
    s = spec.points()[..., 0]
    expect = np.exp(-s[:, None] ** 2) * np.exp(-np.pi * (s[None, :] - s[:, None]) ** 2)
    inside = np.abs(s[None, :] - s[:, None]) < 2
    assert np.max(np.abs(K - expect)[inside]) < 1e-12


def test_takai_mode_phase():
    spec = GridSpec(1, 4, 1 / 8)
    F = DualCrossedElement.from_modes(spec, RnAction.torus(1),
                                      {(1,): lambda t, s: np.exp(-np.pi * t[..., 0] ** 2 - s[..., 0] ** 2)})
    K0 = takai_map(F.on_modes([[1]])).values[..., 0]
    r = spec.points()[..., 0]
    F0 = DualCrossedElement(spec, F.values, np.array([[0]]), F.action)
    assert np.allclose(K0, takai_map(F0).values[..., 0] * e(r)[None, :], atol=1e-14)


def test_takai_multiplicative():
    assert takai_multiplicativity(4, 0.25) < 1e-12


def test_takai_equivariant():
    table = takai_equivariance(2, 0.5, (1, 2, 3, 4, 6))
    assert max(table.values()) < 1e-12


def test_dual_group_action_group_law(rng):
    spec = GridSpec(2, 1, 0.25)
    vals = rng.normal(size=(spec.size,) * 4 + (1,)) + 0j
    F = DualCrossedElement(spec, vals, np.array([[1, 0]]), RnAction.torus(2))
    G = CyclicAction.standard(3)
    a, b = G.element(1), G.element(2)
    assert dual_group_act(a, dual_group_act(b, F)).defect(dual_group_act(a @ b, F)) == 0


def test_dual_product_rejects_deformed():
    spec = GridSpec(1, 1, 0.25)
    act = RnAction.torus(1, J=np.zeros((1, 1)))
    F = DualCrossedElement(spec, np.ones((8, 8, 1), complex), np.array([[0]]), act)
    with pytest.raises(ValueError):
        dual_crossed_product(F, F)
    with pytest.raises(ValueError):
        DualCrossedElement(GridSpec(1, 1.25, 0.25), np.ones((10, 10, 1), complex), np.array([[0]]), act)


def test_approximate_identity_under_refinement():
    errs = []
    for h in (1 / 8, 1 / 16, 1 / 32):
        spec = GridSpec(1, 6, h)
        w = 4 * h  # bump width tied to the mesh
        bump = RnCrossedElement.scalar(spec, lambda x: np.exp(-x[..., 0] ** 2 / w**2) / (np.sqrt(np.pi) * w))
        f = RnCrossedElement.scalar(spec, gauss([0.2], 0.8))
        errs.append(twisted_conv(bump, f).defect(f))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-2


def test_gamma_intertwines_convolution():
    spec = GridSpec(2, 6, 0.25)
    act = RnAction.torus(2)
    f = RnCrossedElement.from_modes(spec, act, {(1, 0): gauss([0.3, 0], 0.5)})
    g = RnCrossedElement.from_modes(spec, act, {(0, 1): gauss([0, -0.2], 0.6)})
    t = np.array([0.5, -0.25])
    lhs = gamma_action(t, twisted_conv(f, g))
    rhs = twisted_conv(f, gamma_action(t, g))
    assert lhs.defect(rhs) < 1e-12
