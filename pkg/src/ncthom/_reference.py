"""Independent reference computations used as oracles.

Nothing here shares code with the implementations it checks: Clifford
elements are turned into explicit matrices through a Jordan-Wigner
representation and exponentiated with scipy; equivariant maps are built
block by block so their kernels can be read off from block ranks.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .clifford import CliffordElement

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_I = np.eye(2, dtype=complex)


def _kron(mats):
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


@lru_cache(maxsize=None)
def gamma_matrices(n: int) -> tuple:
    """Hermitian matrices with g_i g_j + g_j g_i = 2 delta_ij.

    Jordan-Wigner on ceil(n/2) qubits; for odd n the two inequivalent
    irreducible representations are stacked so the map is injective.
    """
    m = (n + 1) // 2
    gens = []
    for k in range(m):
        pre = [_Z] * k
        post = [_I] * (m - k - 1)
        gens.append(_kron(pre + [_X] + post))
        gens.append(_kron(pre + [_Y] + post))
    gens = gens[:n]
    if n % 2:
        gens = [np.block([[g, np.zeros_like(g)], [np.zeros_like(g), -g]]) for g in gens]
    return tuple(gens)


def blade_matrix(n: int, mask: int) -> np.ndarray:
    gens = gamma_matrices(n)
    out = np.eye(gens[0].shape[0], dtype=complex)
    for i in range(n):
        if mask >> i & 1:
            out = out @ gens[i]
    return out


def to_matrix(x: CliffordElement) -> np.ndarray:
    return sum(c * blade_matrix(x.n, a) for a, c in enumerate(x.coeffs) if c != 0) + 0 * blade_matrix(x.n, 0)


def grading_matrix(n: int) -> np.ndarray:
    """Operator implementing the grading by conjugation (chirality, or its doubled version)."""
    gens = gamma_matrices(n)
    if n % 2 == 0:
        vol = np.eye(gens[0].shape[0], dtype=complex)
        for g in gens:
            vol = vol @ g
        return (1j) ** (n // 2) * vol
    raise ValueError("odd rank has no inner grading operator")


def wave_operator_oracle(s: float, xi) -> np.ndarray:
    """exp(i s c(xi)) by matrix exponential."""
    xi = np.asarray(xi, dtype=float).reshape(-1)
    gens = gamma_matrices(xi.size)
    c = sum(v * g for v, g in zip(xi, gens))
    return expm(1j * s * c)


def random_equivariant(k: int, mult_dom, mult_cod, rng, rank_frac: float = 0.6):
    """Random T: V -> W commuting with Z_k, plus its per-character block ranks.

    V, W are direct sums of characters with the given multiplicities, each
    written in a random basis. Returns (T, gen_dom, gen_cod, ranks).
    """
    ranks = []
    dom_diag, cod_diag = [], []
    rows, cols = sum(mult_cod), sum(mult_dom)
    T0 = np.zeros((rows, cols), dtype=complex)
    r0 = c0 = 0
    for j in range(k):
        a, b = mult_cod[j], mult_dom[j]
        lam = np.exp(2j * np.pi * j / k)
        dom_diag += [lam] * b
        cod_diag += [lam] * a
        if a and b:
            full = min(a, b)
            rank = int(rng.integers(0, full + 1)) if rng.random() < rank_frac else full
            left = rng.standard_normal((a, rank)) + 1j * rng.standard_normal((a, rank))
            right = rng.standard_normal((rank, b)) + 1j * rng.standard_normal((rank, b))
            T0[r0:r0 + a, c0:c0 + b] = left @ right
        else:
            rank = 0
        ranks.append(rank)
        r0 += a
        c0 += b
    Bd = rng.standard_normal((cols, cols)) + 1j * rng.standard_normal((cols, cols))
    Bc = rng.standard_normal((rows, rows)) + 1j * rng.standard_normal((rows, rows))
    gen_dom = Bd @ np.diag(dom_diag) @ np.linalg.inv(Bd) if cols else np.zeros((0, 0))
    gen_cod = Bc @ np.diag(cod_diag) @ np.linalg.inv(Bc) if rows else np.zeros((0, 0))
    T = Bc @ T0 @ np.linalg.inv(Bd) if rows and cols else np.zeros((rows, cols))
    return T, gen_dom, gen_cod, ranks
