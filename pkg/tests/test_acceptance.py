"""The twelve acceptance criteria, run with the packaged default configuration.

Each test records a one-line verdict that is printed in the pytest terminal
summary. Suites are reused from ``ncthom.suites`` so the numbers here are the
ones ``verify`` reports.
"""
import time

import pytest

from ncthom import suites
from ncthom.config import load_config
from ncthom.finite_group import CyclicAction
from ncthom.orbifold import hp_dimensions, k_ranks
from ncthom.pseudodiff import symbol_derivative_decay

CFG = load_config()
pytestmark = pytest.mark.slow


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def fmt(values) -> str:
    return "[" + ", ".join(f"{x:.2e}" for x in values) + "]"


def records(result):
    return {r.lemma_id: r for r in result.records}


@pytest.fixture(scope="module")
def dirac():
    res, secs = timed(suites.run_suite, "dirac-lemmas", CFG)
    return records(res), secs


def test_criterion_01_hp_constants(verdict):
    res, secs = timed(suites.run_suite, "hp-dims", CFG)
    got = {k: (hp_dimensions(CyclicAction.standard(k)).even, hp_dimensions(CyclicAction.standard(k)).odd)
           for k in (1, 2, 3, 4, 6)}
    ok = res.passed and got == suites.HP_TABLE and secs < 1.0
    verdict(1, "HP constants", ok, f"{got}, k_ranks agree={res.passed}, {secs:.2f} s")
    assert ok


def test_criterion_02_k_constants(verdict):
    got = {k: k_ranks(CyclicAction.standard(k)) for k in (2, 3, 4, 6)}
    ok = got == {2: (6, 0), 3: (8, 0), 4: (9, 0), 6: (10, 0)}
    verdict(2, "K constants", ok, f"{got}")
    assert ok


def test_criterion_03_clifford_closed_form(verdict):
    res, secs = timed(suites.run_suite, "clifford", CFG)
    rec = records(res)
    errs = [rec[f"wave_operator_n{n}"].defect for n in (1, 2, 3)]
    ok = all(rec[f"wave_operator_n{n}"].passed for n in (1, 2, 3)) and max(errs) <= 1e-10 and secs < 5
    verdict(3, "wave operator vs expm", ok, f"max error {max(errs):.2e} over 3x100 samples, {secs:.2f} s")
    assert ok


def test_criterion_04_normalizing_function(verdict):
    suites._chi.cache_clear()  # time the construction too
    res, secs = timed(suites.run_suite, "chi", CFG)
    rec = records(res)
    ok = res.passed and secs < 10
    verdict(4, "normalizing function", ok,
            f"oddness {rec['chi_odd'].defect:.1e}, min chi on (0,50] {rec['chi_positive'].details['min_on_0_50']:.2e}, "
            f"max (1+l)^6|chi^2-1| = {rec['chi_square_minus_one_weighted'].defect:.3f} (bound 10), {secs:.2f} s")
    assert ok


def test_criterion_05_sigma_decay(verdict):
    chi = suites.chi_for(CFG)
    t0 = time.perf_counter()
    reps = [symbol_derivative_decay(chi, 2, j) for j in (0, 1)]
    secs = time.perf_counter() - t0
    need = CFG.tol("decay_order")
    ok = all(r.order >= need for r in reps) and secs < 60
    verdict(5, "Sigma derivative decay", ok,
            ", ".join(f"axis{j} order {r.order:.4f} ({r.status})" for j, r in enumerate(reps))
            + f", need >= {need:g}, {secs:.1f} s")
    assert ok, "measured decay order of dSigma/dxi_j is about 1, below the required order"


def test_criterion_06_dirac_kernels(verdict, dirac):
    rec, secs = dirac
    comm, zero, defect = rec["commutator_kernel_decay"], rec["commutator_kernel_unit_zero"], rec["defect_kernel_decay"]
    ok = comm.passed and zero.passed and defect.passed and secs < 120
    verdict(6, "Dirac commutator and defect kernels", ok,
            f"commutator order {comm.details['order']} ({comm.details['status']}), "
            f"defect order {defect.details['order']} ({defect.details['status']}), "
            f"U_0 commutator max {zero.defect}, suite {secs:.1f} s")
    assert ok


def test_criterion_07_group_invariance(verdict, dirac):
    rec, _ = dirac
    inv = rec["dirac_group_invariance"]
    per = inv.details["per_group"]
    ok = inv.passed and per["Z2"] == 0.0 and inv.details["samples"] == 100
    groups = ", ".join(f"{k} {v:.1e}" for k, v in per.items())
    verdict(7, "G-invariance of D", ok, f"max defect {inv.defect:.2e}, Z2 defect {per['Z2']}, per group: {groups}")
    assert ok


def test_criterion_08_star_product(verdict):
    res = suites.run_suite("star-product", CFG)
    rec = records(res)
    ok = res.passed and rec["star_associativity"].defect == 0 and rec["beta_automorphism"].defect == 0
    verdict(8, "star product", ok,
            f"associator exponents nonzero: {int(rec['star_associativity'].defect)}, "
            f"oracle phase error {rec['star_phase_vs_oscillatory_integral'].defect:.1e}, "
            f"beta defect {rec['beta_automorphism'].defect}")
    assert ok


def test_criterion_09_theta(verdict):
    res, secs = timed(suites.run_suite, "theta-j", CFG)
    rec = records(res)
    hom, eqv = rec["theta_homomorphism"], rec["theta_equivariance"]
    ok = res.passed and secs < 300
    verdict(9, "Theta_J", ok,
            f"J=0 error {rec['theta_zero_identity'].defect:.1e}, homomorphism {fmt(hom.details['defects'])}, "
            f"equivariance {fmt(eqv.details['defects'])}, {secs:.1f} s")
    assert ok


def test_criterion_10_takai(verdict):
    res, secs = timed(suites.run_suite, "takai", CFG)
    rec = records(res)
    ok = res.passed
    verdict(10, "Takai map", ok,
            f"multiplicativity {fmt(rec['takai_multiplicativity'].details['defects'])}, "
            f"equivariance {fmt(rec['takai_equivariance'].details['defects'])}, "
            f"g=-I max {rec['takai_minus_identity'].defect:.1e}, {secs:.1f} s")
    assert ok


def test_criterion_11_g_index(verdict):
    res = suites.run_suite("rg-index", CFG)
    rec = records(res)
    ok = res.passed
    mism = {k: int(v.defect) for k, v in rec.items() if k.startswith("g_index")}
    verdict(11, "G-index", ok, f"mismatches {mism}, rho stabilization defect "
                               f"{rec['rho_stabilization_homomorphism'].defect:.1e}")
    assert ok


def test_criterion_12_expansions(verdict, dirac):
    rec, _ = dirac
    comp, adj = rec["composition_expansion"], rec["adjoint_expansion"]
    ok = comp.passed and adj.passed
    verdict(12, "composition and adjoint expansions", ok,
            f"compose {fmt(comp.details['defects_by_order'])}, adjoint {fmt(adj.details['defects_by_order'])}, "
            f"trivial action {comp.details['trivial_action']:.1e}/{adj.details['trivial_action']:.1e}")
    assert ok
