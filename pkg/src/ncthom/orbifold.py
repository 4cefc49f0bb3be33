"""Fixed-point and orbit counting for cyclic groups acting on the 2-torus.

Everything here is exact: points of R^2/Z^2 are pairs of Fractions reduced
mod 1, and all counts are integers.

Two independent routes produce the periodic cyclic homology ranks of the
crossed products:

* ``hp_dimensions`` enumerates fixed points and their G-orbits explicitly;
* ``k_ranks`` uses the decomposition of equivariant K-theory over cyclic
  subgroups, counting orbits with Burnside's lemma from Lefschetz numbers
  det(I - g) alone, without listing any point.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import gcd

import numpy as np

from .finite_group import CyclicAction
from .nctorus import DeformationMatrix, TorusElement, trace
from .finite_group import GroupCrossedElement, TorusAlgebra, beta_respects_star, crossed_mul

Point = tuple


def _mod1(p) -> Point:
    return tuple(Fraction(x) - (Fraction(x).numerator // Fraction(x).denominator) for x in p)


def _apply(g, p) -> Point:
    g = [[int(v) for v in row] for row in np.asarray(g)]
    return _mod1((g[0][0] * p[0] + g[0][1] * p[1], g[1][0] * p[0] + g[1][1] * p[1]))


def _det(m) -> int:
    m = np.asarray(m, dtype=np.int64)
    return int(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


@dataclass(frozen=True)
class FixedPointData:
    g: int
    points: tuple
    count: int

    def __post_init__(self):
        if self.count != len(self.points):
            raise ValueError("count does not match the enumerated points")


@dataclass(frozen=True)
class HPDims:
    even: int
    odd: int


def fixed_points(G: CyclicAction, j: int) -> FixedPointData:
    """All x in [0,1)^2 with (g^j - I) x in Z^2, for g^j not the identity.

    With A = g^j - I and d = |det A|, the solutions are A^{-1} z for z in Z^2,
    and A^{-1} = adj(A)/det(A) shows every solution has denominator dividing
    d, so it suffices to scan z over [0, d)^2.
    """
    if j % G.k == 0:
        raise ValueError("the identity fixes the whole torus")
    A = G.element(j) - np.eye(2, dtype=np.int64)
    d = _det(A)
    if d == 0:
        raise ValueError("element has a fixed circle; not an isolated fixed point set")
    adj = [[int(A[1, 1]), -int(A[0, 1])], [-int(A[1, 0]), int(A[0, 0])]]
    pts = set()
    for z0, z1 in product(range(abs(d)), repeat=2):
        x = (Fraction(adj[0][0] * z0 + adj[0][1] * z1, d), Fraction(adj[1][0] * z0 + adj[1][1] * z1, d))
        pts.add(_mod1(x))
    g = G.element(j)
    for p in pts:
        if _apply(g, p) != p:
            raise AssertionError("enumerated point is not fixed")
    if len(pts) != abs(d):
        raise AssertionError("fixed point count differs from |det(g - I)|")
    return FixedPointData(j % G.k, tuple(sorted(pts)), abs(d))


def orbits(G: CyclicAction, points) -> list:
    """Partition of a G-invariant finite set of torus points into orbits."""
    remaining = set(points)
    out = []
    while remaining:
        p = min(remaining)
        orbit = {_apply(g, p) for g in G.elements()}
        if not orbit <= set(points):
            raise ValueError("point set is not G-invariant")
        out.append(tuple(sorted(orbit)))
        remaining -= orbit
    return out


def invariant_rank(G: CyclicAction, dual: bool = False) -> int:
    """Dimension of the G-invariants in C^2 (rank of the group average)."""
    mats = [G.dual_element(j) if dual else G.element(j) for j in range(G.k)]
    avg = sum(m.astype(float) for m in mats) / G.k
    return int(np.linalg.matrix_rank(avg, tol=1e-12))


def strata(G: CyclicAction) -> list:
    """Per-element contributions: fixed points and orbit representatives."""
    out = []
    for j in range(1, G.k):
        fp = fixed_points(G, j)
        orb = orbits(G, fp.points)
        out.append({"element": j, "fixed_points": fp.count, "orbits": len(orb),
                    "representatives": [[str(c) for c in o[0]] for o in orb]})
    return out


def hp_dimensions(G: CyclicAction) -> HPDims:
    """Ranks of HP_0 and HP_1 of the crossed product of the smooth torus algebra by G.

    even: invariant even cohomology of T^2 plus one class per G-orbit of
    fixed points of every nontrivial element; odd: invariant part of H^1.
    """
    if G.k not in (1, 2, 3, 4, 6):
        raise ValueError(f"unsupported group order {G.k}")
    # H^0 and H^2 are invariant because every element preserves orientation
    h_even = 1 + sum(1 for g in G.elements() if _det(g) == 1) // G.k
    even = h_even + sum(s["orbits"] for s in strata(G))
    # H^1(T^2) transforms by the transpose inverse; its invariants have the same rank
    odd = invariant_rank(G, dual=True)
    return HPDims(even, odd)


def lefschetz(g) -> int:
    """Lefschetz number of a linear torus map: 1 - tr g + det g = det(I - g)."""
    g = np.asarray(g, dtype=np.int64)
    return 1 - int(np.trace(g)) + _det(g)


def k_ranks(G: CyclicAction) -> tuple:
    """Ranks of K_0 and K_1 of the crossed product, by a trace-only route.

    Rationally K^*_G(X) splits over the elements g of the abelian group G
    into the G-invariant cohomology of the fixed sets X^g. For g = e this is
    the invariant cohomology of T^2, read off from traces on H^0, H^1, H^2.
    For g != e the fixed set is finite and the number of G-orbits on it is
    (1/|G|) sum_h |X^g cap X^h| (Burnside); X^g cap X^h is the fixed set of
    the cyclic subgroup <g, h>, whose size is |det(I - c)| for a generator c.
    """
    if G.k not in (1, 2, 3, 4, 6):
        raise ValueError(f"unsupported group order {G.k}")
    k = G.k
    even = Fraction(0)
    odd = Fraction(0)
    for j in range(k):
        g = G.element(j)
        even += Fraction(1 + _det(g), k)  # trace on H^0 + trace on H^2
        odd += Fraction(int(np.trace(G.dual_element(j))), k)  # trace on H^1
    for a in range(1, k):
        total = 0
        for b in range(k):
            c = gcd(gcd(a, b), k)  # <g^a, g^b> is generated by g^c
            total += abs(lefschetz(G.element(c)))
        even += Fraction(total, k)
    if even.denominator != 1 or odd.denominator != 1:
        raise AssertionError("non-integral rank")
    return int(even), int(odd)


def stringy_euler(G: CyclicAction) -> Fraction:
    """(1/|G|) sum over pairs (g, h) of the Euler characteristic of X^<g,h>.

    Uses only Lefschetz numbers; should equal even - odd of hp_dimensions.
    """
    total = 0
    for a in range(G.k):
        for b in range(G.k):
            c = gcd(gcd(a, b), G.k)
            total += 0 if c % G.k == 0 else lefschetz(G.element(c))
    return Fraction(total, G.k)


def hp_report(G: CyclicAction) -> dict:
    hp = hp_dimensions(G)
    k0, k1 = k_ranks(G)
    return {"group": G.name, "hp0": hp.even, "hp1": hp.odd, "k0": k0, "k1": k1, "strata": strata(G)}


def hp_report_json(G: CyclicAction) -> str:
    return json.dumps(hp_report(G), sort_keys=True)


# ------------------------------------------------------ theta independence


def average_idempotent(G: CyclicAction, theta: float) -> GroupCrossedElement:
    """(1/|G|) sum_g (1, g) in the crossed product of the deformed torus by G."""
    alg = TorusAlgebra(G, DeformationMatrix.planar(theta))
    one = TorusElement.one(2) * (1 / G.k)
    return GroupCrossedElement(alg, tuple(one for _ in range(G.k)))


def theta_independence_regression(thetas, G: CyclicAction, probes=None) -> dict:
    """Recompute the theta-dependent pipeline pieces at each theta.

    Reports the counted ranks, the largest beta-automorphism defect of the
    deformed product over a fixed set of probe elements, and the trace of the
    group-average idempotent, whose square is checked against itself.
    """
    if probes is None:
        probes = [TorusElement(2, {(1, 0): 1.0, (0, 1): 0.5j}), TorusElement(2, {(-1, 2): 2.0, (1, 1): -1.0})]
    rows = []
    for theta in thetas:
        J = DeformationMatrix.planar(theta)
        hp = hp_dimensions(G)
        beta_def = 0.0
        for g in G.elements():
            for a in probes:
                for b in probes:
                    d = beta_respects_star(g, a, b, J)
                    beta_def = max(beta_def, d.max_abs())
        p = average_idempotent(G, theta)
        p2 = crossed_mul(p, p)
        idem_def = (p2 - p).size()
        rows.append({"theta": float(theta), "hp0": hp.even, "hp1": hp.odd, "beta_defect": beta_def,
                     "idempotent_defect": idem_def, "trace": trace(p.carrier[0]).real})
    constant = len({(r["hp0"], r["hp1"]) for r in rows}) == 1
    return {"group": G.name, "rows": rows, "ranks_constant": constant,
            "pass": constant and all(r["beta_defect"] == 0 for r in rows)
            and all(abs(r["trace"] - 1 / G.k) < 1e-15 and r["idempotent_defect"] < 1e-15 for r in rows)}
