"""Verification suites run by the command line driver.

Each suite returns a list of :class:`Verification` records. A suite passes
when every record does.
"""
from __future__ import annotations

import math
import time
import warnings
from functools import lru_cache

import numpy as np

from . import _reference as ref
from .clifford import CliffordElement, chi_of_clifford, clifford_mul, clifford_vector, wave_operator
from .config import RunConfig
from .crossed_rn import (DualCrossedElement, RnAction, RnCrossedElement, dual_crossed_product,
                         dual_group_act, group_act, kernel_group_action, takai_map, theta_J, twisted_conv)
from .finite_group import (CyclicAction, GroupCrossedElement, MatrixAlgebra, Representation, RGClass,
                           TorusAlgebra, beta_respects_star, block_defect, block_mul, cocycle_defect_exponent,
                           crossed_mul, g_index, kernel_cokernel, rho_stabilization)
from .grid import GridSpec, decay_order, refinement_study
from .nctorus import DeformationMatrix, TorusElement, associator_exponent, star_phase_by_quadrature
from .orbifold import hp_report, theta_independence_regression
from .pseudodiff import (boundedness_sweep, build_chi, check_D_invariance, dirac_commutator_kernel,
                         dirac_defect_kernel, apply_D, gaussian_symbol, grid_pairing, operator_defect,
                         polynomial_symbol, schwartz_profile, symbol_adjoint, symbol_compose,
                         symbol_derivative_decay)
from .report import SuiteResult, Verification

# expected ranks (even, odd) of the crossed products by Z_k
HP_TABLE = {1: (2, 2), 2: (6, 0), 3: (8, 0), 4: (9, 0), 6: (10, 0)}


def _grid(spec: GridSpec) -> dict:
    return {"L": spec.L, "h": spec.h}


@lru_cache(maxsize=4)
def _chi(sigma: float, nodes: int):
    return build_chi(sigma, nodes)


def chi_for(cfg: RunConfig):
    return _chi(cfg.chi_sigma, cfg.quad.nodes)


def _gauss(center, width):
    c = np.asarray(center, dtype=float)
    return lambda x: np.exp(-np.sum((x - c) ** 2, axis=-1) / width)


# ------------------------------------------------------------------ clifford


def suite_clifford(cfg: RunConfig) -> list:
    rng = np.random.default_rng(2024)
    out = []
    for n in (1, 2, 3):
        err = 0.0
        sq = 0.0
        for _ in range(100):
            xi = rng.normal(size=n) * rng.uniform(0.01, 5)
            s = rng.uniform(-4, 4)
            w = ref.to_matrix(wave_operator(s, xi))
            err = max(err, float(np.max(np.abs(w - ref.wave_operator_oracle(s, xi)))))
            c = clifford_vector(xi)
            sq = max(sq, (clifford_mul(c, c) - CliffordElement.scalar(n, float(xi @ xi))).norm())
        out.append(Verification(f"wave_operator_n{n}", err <= cfg.tol("clifford"), err,
                                details={"samples": 100, "c_square_defect": sq}))
    # the matrix picture is a faithful algebra map
    hom = 0.0
    for n in (1, 2, 3):
        for _ in range(20):
            a = CliffordElement(n, rng.normal(size=2**n) + 1j * rng.normal(size=2**n))
            b = CliffordElement(n, rng.normal(size=2**n) + 1j * rng.normal(size=2**n))
            hom = max(hom, float(np.max(np.abs(ref.to_matrix(a * b) - ref.to_matrix(a) @ ref.to_matrix(b)))))
    out.append(Verification("matrix_representation", hom <= 1e-12, hom))
    chi = chi_for(cfg)
    odd = 0.0
    for _ in range(20):
        xi = rng.normal(size=2) * 3
        x = chi_of_clifford(chi, xi)
        odd = max(odd, (x.grading() + x).norm())
    out.append(Verification("chi_of_clifford_odd", odd <= 1e-14, odd))
    return out


# ----------------------------------------------------------------------- chi


def suite_chi(cfg: RunConfig) -> list:
    t0 = time.perf_counter()
    chi = chi_for(cfg)
    lam = np.linspace(1e-3, 50, 5001)
    vals = chi(lam)
    odd = float(np.max(np.abs(chi(-lam) + vals)))
    pos = float(np.min(vals))
    _, prof = schwartz_profile(chi)
    bound = float(np.max(prof))
    secs = time.perf_counter() - t0
    return [
        Verification("chi_odd", odd <= cfg.tol("chi_odd"), odd),
        Verification("chi_positive", pos > 0, details={"min_on_0_50": pos}),
        Verification("chi_square_minus_one_weighted", bound <= cfg.tol("schwartz_bound"), bound,
                     details={"weight_power": 6, "interval": [5.0, 50.0], "sigma": chi.sigma, "seconds": secs}),
        Verification("chi_limits", abs(float(chi(30.0)) - 1) < 1e-8,
                     details={"chi_30_minus_1": float(chi(30.0)) - 1}),
    ]


# --------------------------------------------------------------- sigma decay


def suite_sigma_decay(cfg: RunConfig) -> list:
    chi = chi_for(cfg)
    out = []
    need = cfg.tol("decay_order")
    for j in range(cfg.n):
        rep = symbol_derivative_decay(chi, cfg.n, j)
        out.append(Verification(f"sigma_derivative_decay_axis{j}", rep.order >= need,
                                grid={"L": float(rep.window[1]), "h": 0.5},
                                details={"order": rep.order, "status": rep.status, "required": need,
                                         "n": cfg.n, "window": list(rep.window)}))
    if cfg.n == 2:
        rows = boundedness_sweep(chi)
        claim = all(r["bounded"] for r in rows)
        out.append(Verification("multi_derivative_boundedness", claim,
                                details={"rows": rows, "bounded_iff_l_le_1_plus_J":
                                         all(r["bounded"] == (r["l"] <= 1 + sum(r["J"])) for r in rows)}))
    return out


# -------------------------------------------------------------- dirac lemmas


def compose_family(width: float = 3.0):
    """Torus-valued symbols and test elements shared by the expansion checks."""
    spec = GridSpec(2, 8, 0.125)
    act = RnAction.torus(2)
    u = RnCrossedElement.from_modes(spec, act, {(0, 0): _gauss([0.3, 0], 0.6), (1, -1): _gauss([0, -0.2], 0.8)})
    v = RnCrossedElement.from_modes(spec, act, {(1, 0): _gauss([0.1, 0], 0.7), (2, -1): _gauss([0, 0.2], 0.5)})
    r1 = gaussian_symbol(2, [0.5, -0.3], width, [[1.0], [0.5]], [[1, 0], [0, 1]])
    r2 = gaussian_symbol(2, [0, 0.2], width, [[1.0], [-0.7j]], [[0, 0], [1, 0]])
    return spec, act, u, v, r1, r2


def expansion_defects(width: float = 3.0, orders=range(4)) -> dict:
    spec, act, u, v, r1, r2 = compose_family(width)
    direct = apply_D(r1, apply_D(r2, u))
    comp = [operator_defect(apply_D(symbol_compose(r1, r2, N, act), u), direct) for N in orders]
    lhs = grid_pairing(apply_D(r1, u), v)
    adj = [abs(lhs - grid_pairing(u, apply_D(symbol_adjoint(r1, N, act), v))) for N in orders]
    triv = RnAction.trivial(2)
    ut = RnCrossedElement(u.data, triv)
    vt = RnCrossedElement(v.data, triv)
    tc = operator_defect(apply_D(symbol_compose(r1, r2, 0, triv), ut), apply_D(r1, apply_D(r2, ut)))
    ta = abs(grid_pairing(apply_D(r1, ut), vt) - grid_pairing(ut, apply_D(symbol_adjoint(r1, 0, triv), vt)))
    # polynomial symbols have finite expansions, so truncation is exact
    p = polynomial_symbol(2, {(1, 0): [[1.0], [0]], (0, 2): [[0], [0.5j]]}, [[1, 0], [0, 1]])
    pc = operator_defect(apply_D(symbol_compose(p, r2, 2, act), u), apply_D(p, apply_D(r2, u)))
    pa = abs(grid_pairing(apply_D(p, u), v) - grid_pairing(u, apply_D(symbol_adjoint(p, 2, act), v)))
    return {"grid": _grid(spec), "compose": comp, "adjoint": adj, "trivial_compose": tc, "trivial_adjoint": ta,
            "polynomial_compose": pc, "polynomial_adjoint": pa}


def _monotone(seq) -> bool:
    return all(b < a for a, b in zip(seq, seq[1:]))


def suite_dirac_lemmas(cfg: RunConfig) -> list:
    chi = chi_for(cfg)
    need = cfg.tol("decay_order")
    out = []
    K, noise = dirac_commutator_kernel(TorusElement.basis((1, 0)), chi, quad=cfg.quad)
    rep = decay_order(K, (5.0, 40.0), noise)
    out.append(Verification("commutator_kernel_decay", rep.order >= need, grid=_grid(K.spec),
                            details={"order": rep.order, "status": rep.status, "noise_floor": noise,
                                     "max_value": float(np.max(np.abs(K.values)))}))
    K0, _ = dirac_commutator_kernel(TorusElement.basis((0, 0)), chi, quad=cfg.quad)
    zmax = float(np.max(np.abs(K0.values)))
    out.append(Verification("commutator_kernel_unit_zero", zmax == 0.0, zmax))
    D, dnoise = dirac_defect_kernel(TorusElement.basis((0, 0)), chi)
    rep = decay_order(D, (5.0, 50.0), dnoise)
    out.append(Verification("defect_kernel_decay", rep.order >= need, grid=_grid(D.spec),
                            details={"order": rep.order, "status": rep.status, "noise_floor": dnoise}))
    worst = 0.0
    per = {}
    for k in cfg.groups:
        r = check_D_invariance(chi, CyclicAction.standard(k), samples=100, quad=cfg.quad)
        per[r["group"]] = r["max_defect"]
        worst = max(worst, r["max_defect"])
    out.append(Verification("dirac_group_invariance", worst <= cfg.tol("invariance"), worst,
                            details={"per_group": per, "samples": 100}))
    ex = expansion_defects()
    comp = ex["compose"]
    ok = _monotone(comp[1:]) and ex["trivial_compose"] <= 1e-12 and ex["polynomial_compose"] <= 1e-12
    out.append(Verification("composition_expansion", ok, comp[-1], grid=ex["grid"],
                            details={"defects_by_order": comp, "trivial_action": ex["trivial_compose"],
                                     "polynomial": ex["polynomial_compose"]}))
    adj = ex["adjoint"]
    ok = _monotone(adj[1:]) and ex["trivial_adjoint"] <= 1e-12 and ex["polynomial_adjoint"] <= 1e-12
    out.append(Verification("adjoint_expansion", ok, adj[-1], grid=ex["grid"],
                            details={"defects_by_order": adj, "trivial_action": ex["trivial_adjoint"],
                                     "polynomial": ex["polynomial_adjoint"]}))
    return out


# --------------------------------------------------------------------- takai


def _takai_profiles_1d():
    t0 = lambda t: t[..., 0]
    F = {(1,): lambda t, s: np.exp(-2 * t0(t) ** 2 - s[..., 0] ** 2),
         (0,): lambda t, s: np.exp(-(t0(t) - 0.3) ** 2 - (s[..., 0] + 0.5) ** 2)}
    G = {(-1,): lambda t, s: np.exp(-t0(t) ** 2 - 2 * s[..., 0] ** 2) * (1 + 1j * t0(t))}
    return F, G


def _takai_profiles_2d():
    def prof(c, w, ct):
        c, ct = np.asarray(c, float), np.asarray(ct, float)
        return lambda t, s: np.exp(-np.sum((s - c) ** 2, -1) / w - np.sum((t - ct) ** 2, -1))
    return {(1, 0): prof([0.3, 0], 0.5, [0.2, -0.1]), (0, -1): prof([0, 0.2], 0.4, [0, 0])}


def takai_multiplicativity(L: float, h: float) -> float:
    act = RnAction.torus(1)
    spec = GridSpec(1, L, h)
    pf, pg = _takai_profiles_1d()
    F = DualCrossedElement.from_modes(spec, act, pf)
    G = DualCrossedElement.from_modes(spec, act, pg)
    return takai_map(dual_crossed_product(F, G)).defect(takai_map(F).compose(takai_map(G)))


def takai_equivariance(L: float, h: float, groups) -> dict:
    spec = GridSpec(2, L, h)
    F = DualCrossedElement.from_modes(spec, RnAction.torus(2), _takai_profiles_2d())
    phi = takai_map(F)
    out = {}
    for k in groups:
        G = CyclicAction.standard(k)
        out[G.name] = max(kernel_group_action(g, phi).defect(takai_map(dual_group_act(g, F))) for g in G.elements())
    return out


def suite_takai(cfg: RunConfig) -> list:
    tol, ratio, floor = cfg.tol("refinement_defect"), cfg.tol("min_ratio"), cfg.tol("roundoff_floor")
    mult = refinement_study(lambda h: takai_multiplicativity(cfg.takai_L, h), cfg.takai_h, cfg.refine, ratio, floor)
    out = [Verification("takai_multiplicativity", mult.passed and mult.defects[0] <= tol, mult.defects[0],
                        {"L": cfg.takai_L, "h": cfg.takai_h}, mult.ratios, mult.to_dict())]
    tables = {}
    minus = []

    def eq_defect(h):
        t = takai_equivariance(cfg.takai_L2, h, cfg.groups)
        tables[h] = t
        return max(t.values())

    eq = refinement_study(eq_defect, cfg.takai_h2, cfg.refine, ratio, floor)
    for h in eq.steps:
        F = DualCrossedElement.from_modes(GridSpec(2, cfg.takai_L2, h), RnAction.torus(2), _takai_profiles_2d())
        g = -np.eye(2, dtype=int)
        minus.append(kernel_group_action(g, takai_map(F)).defect(takai_map(dual_group_act(g, F))))
    out.append(Verification("takai_equivariance", eq.passed and eq.defects[0] <= tol, eq.defects[0],
                            {"L": cfg.takai_L2, "h": cfg.takai_h2}, eq.ratios,
                            dict(eq.to_dict(), per_group={str(h): t for h, t in tables.items()})))
    out.append(Verification("takai_minus_identity", max(minus) <= floor, max(minus),
                            details={"defects": minus, "steps": eq.steps}))
    return out


# ------------------------------------------------------------------- theta-j

THETA_DEMO = 0.37


def _theta_family(spec: GridSpec, J):
    act = RnAction.torus(2, J=J)
    f = RnCrossedElement.from_modes(spec, act, {(1, 0): _gauss([0.3, 0], 0.6), (0, 1): _gauss([0, -0.2], 0.8)})
    g = RnCrossedElement.from_modes(spec, act, {(0, 0): _gauss([0, 0], 0.5), (-1, 1): _gauss([0.1, 0.1], 0.7)})
    return f, g


def theta_homomorphism(L: float, h: float, theta: float = THETA_DEMO) -> float:
    J = DeformationMatrix.planar(theta)
    f, g = _theta_family(GridSpec(2, L, h), J)
    return theta_J(twisted_conv(f, g), J).defect(twisted_conv(theta_J(f, J), theta_J(g, J)))


def theta_equivariance(L: float, h: float, groups, theta: float = THETA_DEMO) -> float:
    J = DeformationMatrix.planar(theta)
    f, _ = _theta_family(GridSpec(2, L, h), J)
    worst = 0.0
    for k in groups:
        for g in CyclicAction.standard(k).elements():
            worst = max(worst, group_act(g, theta_J(f, J)).defect(theta_J(group_act(g, f), J)))
    return worst


def suite_theta_j(cfg: RunConfig) -> list:
    tol, ratio, floor = cfg.tol("refinement_defect"), cfg.tol("min_ratio"), cfg.tol("roundoff_floor")
    spec = cfg.grid
    f, _ = _theta_family(spec, DeformationMatrix.zero(2))
    ident = theta_J(f).defect(f.replace(action=f.action.undeformed()))
    hom = refinement_study(lambda h: theta_homomorphism(cfg.grid_L, h), cfg.grid_h, cfg.refine, ratio, floor)
    eqv = refinement_study(lambda h: theta_equivariance(cfg.grid_L, h, cfg.groups), cfg.grid_h, cfg.refine,
                           ratio, floor)
    return [
        Verification("theta_zero_identity", ident <= cfg.tol("theta_identity"), ident, _grid(spec)),
        Verification("theta_homomorphism", hom.passed and hom.defects[0] <= tol, hom.defects[0], _grid(spec),
                     hom.ratios, hom.to_dict()),
        Verification("theta_equivariance", eqv.passed and eqv.defects[0] <= tol, eqv.defects[0], _grid(spec),
                     eqv.ratios, eqv.to_dict()),
    ]


# -------------------------------------------------------------- star product


def _ball(radius: int):
    return [(a, b) for a in range(-radius, radius + 1) for b in range(-radius, radius + 1) if a * a + b * b <= radius**2]


def _random_element(rng, radius: int = 2) -> TorusElement:
    modes = _ball(radius)
    pick = rng.choice(len(modes), size=5, replace=False)
    return TorusElement(2, {modes[i]: complex(rng.normal(), rng.normal()) for i in pick})


def suite_star_product(cfg: RunConfig) -> list:
    modes = _ball(3)
    # the associator exponent is an integer vector; zero means exact associativity for every J
    nonzero = sum(1 for m in modes for k in modes for p in _ball(2) if any(associator_exponent(m, k, p)))
    J = DeformationMatrix.planar(THETA_DEMO)
    worst = 0.0
    unconverged = 0
    for m in modes:
        for k in modes:
            res = star_phase_by_quadrature(m, k, J)
            unconverged += not res.converged
            worst = max(worst, abs(complex(res.value) - J.phase(m, k)))
    rng = np.random.default_rng(11)
    beta_def = 0.0
    for _ in range(20):
        Jr = DeformationMatrix.random(2, rng)
        a, b = _random_element(rng), _random_element(rng)
        for q in (2, 3, 4, 6):
            for g in CyclicAction.standard(q).elements():
                beta_def = max(beta_def, beta_respects_star(g, a, b, Jr).max_abs())
    return [
        Verification("star_associativity", nonzero == 0, float(nonzero), details={"triples": len(modes) ** 2 * len(_ball(2))}),
        Verification("star_phase_vs_oscillatory_integral", worst <= cfg.tol("star_oracle") and unconverged == 0, worst,
                     details={"pairs": len(modes) ** 2, "theta": THETA_DEMO}),
        Verification("beta_automorphism", beta_def == 0.0, beta_def, details={"random_J": 20}),
    ]


# ------------------------------------------------------------------ crossed-g


def suite_crossed_g(cfg: RunConfig) -> list:
    rng = np.random.default_rng(5)
    out = []
    for k in cfg.groups:
        G = CyclicAction.standard(k)
        alg = TorusAlgebra(G, DeformationMatrix.planar(THETA_DEMO))
        els = [GroupCrossedElement(alg, tuple(_random_element(rng) for _ in range(k))) for _ in range(3)]
        x, y, z = els
        assoc = (crossed_mul(crossed_mul(x, y), z) - crossed_mul(x, crossed_mul(y, z))).size()
        scale = max(1.0, crossed_mul(crossed_mul(x, y), z).size())
        one = GroupCrossedElement.unit(alg)
        unit = max((crossed_mul(one, x) - x).size(), (crossed_mul(x, one) - x).size())
        malg = MatrixAlgebra(G, 3, np.diag(np.exp(2j * np.pi * np.arange(3) / k)))
        mats = [GroupCrossedElement(malg, tuple(rng.normal(size=(3, 3)) + 0j for _ in range(k))) for _ in range(3)]
        massoc = (crossed_mul(crossed_mul(mats[0], mats[1]), mats[2]) - crossed_mul(mats[0], crossed_mul(mats[1], mats[2]))).size()
        out.append(Verification(f"crossed_product_{G.name}", assoc / scale <= 1e-13 and unit <= 1e-15 and massoc <= 1e-12,
                                assoc / scale, details={"unit_defect": unit, "matrix_coefficients": massoc}))
    cyc = sum(1 for x in _ball(2) for y in _ball(2) for z in _ball(1) if any(cocycle_defect_exponent(x, y, z)))
    out.append(Verification("cocycle_identity", cyc == 0, float(cyc)))
    return out


# ------------------------------------------------------------------- rg-index


def _direct_index(k, mult_dom, mult_cod) -> RGClass:
    # per character: dim ker - dim coker = (b - r) - (a - r)
    return RGClass(k, tuple(b - a for a, b in zip(mult_cod, mult_dom)))


def _averaged_intertwiner(X, gd, gc, k):
    """(1/k) sum_l gc^-l X gd^l, an equivariant map built from any X."""
    out = np.zeros_like(X, dtype=complex)
    for l in range(k):
        out += np.linalg.matrix_power(np.linalg.inv(gc), l) @ X @ np.linalg.matrix_power(gd, l)
    return out / k


def suite_rg_index(cfg: RunConfig) -> list:
    rng = np.random.default_rng(7)
    out = []
    for k in cfg.groups:
        mismatches = 0
        ker_mismatch = 0
        for _ in range(25):
            md = tuple(int(v) for v in rng.integers(0, 4, size=k))
            mc = tuple(int(v) for v in rng.integers(0, 4, size=k))
            if sum(md) == 0 or sum(mc) == 0:
                md = tuple(v + 1 for v in md)
                mc = tuple(v + 1 for v in mc)
            T, gd, gc, ranks = ref.random_equivariant(k, md, mc, rng)
            dom, cod = Representation(k, gd), Representation(k, gc)
            mismatches += g_index(T, dom, cod) != _direct_index(k, md, mc)
            ker, _ = kernel_cokernel(T, dom, cod)
            ker_mismatch += ker != RGClass(k, tuple(b - r for b, r in zip(md, ranks)))
        # homotopy: the straight path between two intertwiners stays equivariant and keeps the index
        md, mc = (2,) * k, (1,) * k
        T0, gd, gc, _ = ref.random_equivariant(k, md, mc, rng)
        T1 = _averaged_intertwiner(rng.normal(size=T0.shape), gd, gc, k)
        dom, cod = Representation(k, gd), Representation(k, gc)
        path = {g_index((1 - t) * T0 + t * T1, dom, cod) for t in np.linspace(0, 1, 11)}
        homotopy = len(path) == 1
        out.append(Verification(f"g_index_Z{k}", mismatches == 0 and ker_mismatch == 0 and homotopy, float(mismatches),
                                details={"samples": 25, "kernel_mismatches": ker_mismatch, "homotopy_invariant": homotopy}))
    # stabilization is multiplicative
    worst = 0.0
    for k in cfg.groups:
        G = CyclicAction.standard(k)
        alg = TorusAlgebra(G)
        rho = Representation.from_class(RGClass(k, tuple([1] * k)) if k > 1 else RGClass(1, (2,)))
        x = GroupCrossedElement(alg, tuple(_random_element(rng) for _ in range(k)))
        y = GroupCrossedElement(alg, tuple(_random_element(rng) for _ in range(k)))
        worst = max(worst, block_defect(rho_stabilization(rho, crossed_mul(x, y)),
                                        block_mul(rho_stabilization(rho, x), rho_stabilization(rho, y))))
    out.append(Verification("rho_stabilization_homomorphism", worst <= cfg.tol("rho_stabilization"), worst))
    return out


# -------------------------------------------------------------------- hp-dims


def suite_hp_dims(cfg: RunConfig) -> list:
    out = []
    for k in cfg.groups:
        G = CyclicAction.standard(k)
        rep = hp_report(G)
        expect = HP_TABLE[k]
        ok = (rep["hp0"], rep["hp1"]) == expect and (rep["k0"], rep["k1"]) == expect
        reg = theta_independence_regression([0.0, 0.25, 1 / math.sqrt(2), THETA_DEMO], G)
        out.append(Verification(f"hp_{G.name}", ok and reg["pass"],
                                details={"report": rep, "expected": list(expect), "theta_independent": reg["pass"]}))
    return out


SUITES = {
    "clifford": suite_clifford,
    "chi": suite_chi,
    "sigma-decay": suite_sigma_decay,
    "dirac-lemmas": suite_dirac_lemmas,
    "takai": suite_takai,
    "theta-j": suite_theta_j,
    "star-product": suite_star_product,
    "crossed-g": suite_crossed_g,
    "rg-index": suite_rg_index,
    "hp-dims": suite_hp_dims,
}


def run_suite(name: str, cfg: RunConfig) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}")
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        records = SUITES[name](cfg)
    return SuiteResult(name, records, time.perf_counter() - t0)
