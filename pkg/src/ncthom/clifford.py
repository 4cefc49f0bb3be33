"""Complexified Clifford algebra on n generators with e_i^2 = +1.

Basis multivectors are indexed by bitmasks: bit ``i`` set means the generator
``e_{i+1}`` occurs, and a basis blade is always written in increasing
generator order. The convention e_i^2 = +1 makes c(xi)^2 = |xi|^2.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

SMALL_RADIUS = 1e-6


def _swap_count(a: int, b: int) -> int:
    # transpositions needed to bring e_A e_B into increasing order
    a >>= 1
    total = 0
    while a:
        total += bin(a & b).count("1")
        a >>= 1
    return total


@lru_cache(maxsize=None)
def sign_table(n: int) -> np.ndarray:
    """Signs s[A, B] with e_A e_B = s[A, B] e_{A xor B}."""
    dim = 1 << n
    table = np.empty((dim, dim), dtype=np.int8)
    for a in range(dim):
        for b in range(dim):
            table[a, b] = -1 if _swap_count(a, b) % 2 else 1
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def blade_grades(n: int) -> np.ndarray:
    g = np.array([bin(a).count("1") for a in range(1 << n)], dtype=np.int64)
    g.setflags(write=False)
    return g


def multiply_arrays(x: np.ndarray, y: np.ndarray, n: int) -> np.ndarray:
    """Clifford product of coefficient arrays along their last axis.

    ``x`` and ``y`` have shape ``(..., 2**n)`` and broadcast against each other.
    """
    dim = 1 << n
    if x.shape[-1] != dim or y.shape[-1] != dim:
        raise ValueError(f"last axis must have length {dim}")
    signs = sign_table(n)
    idx = np.arange(dim)
    shape = np.broadcast_shapes(x.shape, y.shape)
    out = np.zeros(shape, dtype=np.result_type(x, y, complex))
    for a in range(dim):
        xa = x[..., a : a + 1]
        if not np.any(xa):
            continue
        out[..., a ^ idx] += signs[a] * xa * y
    return out


@dataclass(frozen=True, eq=False)
class CliffordElement:
    """Element of the complex Clifford algebra on ``n`` generators.

    Attributes
    ----------
    n : int
        Number of generators.
    coeffs : ndarray of complex, shape (2**n,)
        Coefficient of the basis blade with bitmask ``A`` at index ``A``.
    """

    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (1 << self.n,):
            raise ValueError(f"expected {1 << self.n} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, n: int) -> "CliffordElement":
        return cls(n, np.zeros(1 << n))

    @classmethod
    def scalar(cls, n: int, value: complex = 1.0) -> "CliffordElement":
        c = np.zeros(1 << n, dtype=complex)
        c[0] = value
        return cls(n, c)

    @classmethod
    def generator(cls, n: int, i: int) -> "CliffordElement":
        """Generator e_{i+1} (``i`` is zero based)."""
        if not 0 <= i < n:
            raise ValueError(f"generator index {i} out of range for n={n}")
        c = np.zeros(1 << n, dtype=complex)
        c[1 << i] = 1.0
        return cls(n, c)

    @classmethod
    def blade(cls, n: int, gens, value: complex = 1.0) -> "CliffordElement":
        """Ordered product of generators, e.g. ``blade(3, [0, 2])`` is e1 e3."""
        out = cls.scalar(n, value)
        for i in gens:
            out = out * cls.generator(n, i)
        return out

    def __add__(self, other):
        if isinstance(other, CliffordElement):
            _check_rank(self, other)
            return CliffordElement(self.n, self.coeffs + other.coeffs)
        return self + CliffordElement.scalar(self.n, other)

    __radd__ = __add__

    def __neg__(self):
        return CliffordElement(self.n, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, CliffordElement):
            return clifford_mul(self, other)
        return CliffordElement(self.n, self.coeffs * other)

    def __rmul__(self, other):
        return CliffordElement(self.n, other * self.coeffs)

    def __truediv__(self, other):
        return CliffordElement(self.n, self.coeffs / other)

    def __repr__(self):
        terms = []
        for a, c in enumerate(self.coeffs):
            if c != 0:
                name = "".join(f"e{i + 1}" for i in range(self.n) if a >> i & 1) or "1"
                terms.append(f"({c:.6g}){name}")
        return f"CliffordElement(n={self.n}, " + (" + ".join(terms) or "0") + ")"

    def grading(self) -> "CliffordElement":
        """Parity automorphism: e_A -> (-1)^{|A|} e_A."""
        return CliffordElement(self.n, self.coeffs * (-1.0) ** blade_grades(self.n))

    def adjoint(self) -> "CliffordElement":
        """Involution with generators self-adjoint; reverses blades, conjugates scalars."""
        k = blade_grades(self.n)
        return CliffordElement(self.n, np.conj(self.coeffs) * (-1.0) ** (k * (k - 1) // 2))

    def even_part(self) -> "CliffordElement":
        return CliffordElement(self.n, np.where(blade_grades(self.n) % 2 == 0, self.coeffs, 0))

    def odd_part(self) -> "CliffordElement":
        return CliffordElement(self.n, np.where(blade_grades(self.n) % 2 == 1, self.coeffs, 0))

    def parity(self) -> int | None:
        """0 or 1 for homogeneous elements, None for mixed ones (zero counts as even)."""
        odd = np.any(self.odd_part().coeffs)
        even = np.any(self.even_part().coeffs)
        if odd and even:
            return None
        return 1 if odd else 0

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def allclose(self, other, atol=1e-12) -> bool:
        if not isinstance(other, CliffordElement):
            other = CliffordElement.scalar(self.n, other)
        return self.n == other.n and bool(np.allclose(self.coeffs, other.coeffs, rtol=0, atol=atol))


def _check_rank(a: CliffordElement, b: CliffordElement):
    if a.n != b.n:
        raise ValueError(f"rank mismatch: {a.n} vs {b.n}")


def clifford_mul(a: CliffordElement, b: CliffordElement) -> CliffordElement:
    _check_rank(a, b)
    return CliffordElement(a.n, multiply_arrays(a.coeffs, b.coeffs, a.n))


def clifford_vector(xi) -> CliffordElement:
    """c(xi) = sum_j xi_j e_j."""
    xi = np.asarray(xi, dtype=float).reshape(-1)
    n = xi.size
    c = np.zeros(1 << n, dtype=complex)
    c[1 << np.arange(n)] = xi
    return CliffordElement(n, c)


def vector_coeffs(xi: np.ndarray) -> np.ndarray:
    """Batched c(xi): array (..., n) -> coefficient array (..., 2**n)."""
    xi = np.asarray(xi, dtype=float)
    n = xi.shape[-1]
    out = np.zeros(xi.shape[:-1] + (1 << n,), dtype=complex)
    out[..., 1 << np.arange(n)] = xi
    return out


def sinc_factor(s, r):
    """sin(s r)/r, continued by its power series for small r."""
    s = np.asarray(s, dtype=float)
    r = np.asarray(r, dtype=float)
    small = r < SMALL_RADIUS
    safe = np.where(small, 1.0, r)
    sr2 = (s * r) ** 2
    series = s * (1 - sr2 / 6 + sr2 * sr2 / 120)
    return np.where(small, series, np.sin(s * r) / safe)


def wave_operator(s: float, xi) -> CliffordElement:
    """Closed form of exp(i s c(xi)) = cos(s|xi|) + i c(xi) sin(s|xi|)/|xi|."""
    xi = np.asarray(xi, dtype=float).reshape(-1)
    r = float(np.linalg.norm(xi))
    out = clifford_vector(xi) * (1j * float(sinc_factor(s, r)))
    return out + np.cos(s * r)


def chi_of_clifford(chi, xi, quad=None) -> CliffordElement:
    """chi(c(xi)) as the integral of chi_hat(s) exp(i s c(xi)) over the support of chi_hat.

    Uses the symmetric midpoint rule on [-sigma, sigma] with ``quad.nodes``
    nodes on each half line, and pairs s with -s so the principal value of the
    1/s singularity in chi_hat cancels exactly. Refuses to run when the nodes
    undersample the oscillation exp(i s |xi|).
    """
    xi = np.asarray(xi, dtype=float).reshape(-1)
    nodes = chi.nodes if quad is None else quad.nodes
    s, w = chi.half_nodes(nodes)
    r = float(np.linalg.norm(xi))
    step = w[0]
    if step * r > np.pi / 2:
        raise ValueError(
            f"{nodes} nodes undersample exp(i s|xi|) at |xi|={r:.4g}: "
            f"need at least {int(np.ceil(2 * chi.sigma * r / np.pi))}"
        )
    chat = chi.chi_hat(s) * w
    # chat(-s) = -chat(s); the scalar part cos(sr) is even in s and cancels pairwise
    scalar = np.sum(chat * np.cos(s * r) + (-chat) * np.cos(-s * r))
    vector = np.sum(chat * 1j * sinc_factor(s, r) + (-chat) * 1j * sinc_factor(-s, r))
    return clifford_vector(xi) * vector + scalar


@dataclass(frozen=True)
class PolyPair:
    """Polynomials with d^n/dy^n (sin y / y) = (sin(y) phi(y) + cos(y) psi(y)) / y^{n+1}.

    Coefficients are stored lowest degree first as Fractions.
    """

    n: int
    phi: tuple
    psi: tuple

    def __post_init__(self):
        if _degree(self.phi) > self.n or _degree(self.psi) > self.n:
            raise ValueError("degree bound violated")

    def evaluate(self, y):
        y = np.asarray(y, dtype=float)
        p = np.polynomial.polynomial.polyval(y, [float(c) for c in self.phi])
        q = np.polynomial.polynomial.polyval(y, [float(c) for c in self.psi])
        return (np.sin(y) * p + np.cos(y) * q) / y ** (self.n + 1)


def _degree(coeffs) -> int:
    nz = [i for i, c in enumerate(coeffs) if c != 0]
    return nz[-1] if nz else -1


def _poly_add(p, q):
    m = max(len(p), len(q))
    return tuple((p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(m))


def _poly_scale(p, c):
    return tuple(c * a for a in p)


def _poly_shift(p):
    # multiply by y
    return (Fraction(0),) + tuple(p)


def _poly_deriv(p):
    return tuple(i * p[i] for i in range(1, len(p))) or (Fraction(0),)


def _trim(p):
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return tuple(p)


@lru_cache(maxsize=None)
def h_derivative_polys(order: int) -> PolyPair:
    """Exact polynomials for the ``order``-th derivative of h(y) = sin(y)/y."""
    if order < 0:
        raise ValueError("order must be nonnegative")
    if order == 0:
        return PolyPair(0, (Fraction(1),), (Fraction(0),))
    prev = h_derivative_polys(order - 1)
    k = order - 1
    phi, psi = prev.phi, prev.psi
    # phi' = y phi_k' - y psi_k - (k+1) phi_k ; psi' = y phi_k + y psi_k' - (k+1) psi_k
    new_phi = _poly_add(_poly_add(_poly_shift(_poly_deriv(phi)), _poly_scale(_poly_shift(psi), -1)),
                        _poly_scale(phi, -(k + 1)))
    new_psi = _poly_add(_poly_add(_poly_shift(phi), _poly_shift(_poly_deriv(psi))),
                        _poly_scale(psi, -(k + 1)))
    return PolyPair(order, _trim(new_phi), _trim(new_psi))


def h_derivative(order: int, y, series_below: float = 1.0):
    """Numerical d^order/dy^order of sin(y)/y, stable at small |y|.

    The closed form divides by y^{order+1}, so below ``series_below`` the
    Taylor series sum_j (-1)^j y^{2j} / (2j+1)! is differentiated instead.
    """
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < series_below
    ys = np.where(small, y, 0.0)
    series = np.zeros_like(y)
    for j in range(order // 2, order // 2 + 14):
        p = 2 * j
        if p < order:
            continue
        coef = (-1) ** j / factorial(p + 1) * factorial(p) / factorial(p - order)
        series = series + coef * ys ** (p - order)
    closed = h_derivative_polys(order).evaluate(np.where(small, 1.0, y))
    return np.where(small, series, closed)
