"""Fourier-coefficient model of smooth functions on the n-torus and its deformations.

An element is a finitely supported map Z^n -> C, m -> a_m, standing for
sum_m a_m U_m. The deformed product with an antisymmetric matrix J lives on the
same coefficient space:

    U_m x_J U_n = e(STAR_PHASE_CONSTANT * <Jm, n>) U_{m+n}.

Phases are carried as integer combinations of the upper-triangular entries of
J, so identities between phases are checked in exact integer arithmetic and
equal exponents always produce bit-identical floating point phases.
Coefficient sums use correctly rounded summation, so they do not depend on
the order in which terms are produced.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import product
from types import MappingProxyType

import numpy as np
from scipy import integrate

from .grid import GridSpec, PairingIntegrand, ProductIntegrand, QuadratureSpec, e, osc_integral

# Sign of the bicharacter in U_m x_J U_n, fixed by comparison with the
# regularized double integral (see star_phase_by_quadrature).
STAR_PHASE_CONSTANT = 1
# With the product above the torus relations read U_k U_j = e(theta_jk) U_j U_k
# for theta = THETA_PER_J * J.
THETA_PER_J = 2

Mode = tuple

# regularizer schedule that resolves phases of modes with |m|, |k| <= 3 well below 1e-4
ORACLE_QUAD = QuadratureSpec((0.02, 0.01, 0.005, 0.0025), 3)


def _fsum_complex(terms) -> complex:
    terms = list(terms)
    return complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))


class TorusElement:
    """Finitely supported Fourier coefficients a_m, m in Z^n.

    Zero coefficients are dropped, so two elements are equal exactly when
    their coefficient maps agree.
    """

    __slots__ = ("n", "_coeffs")

    def __init__(self, n: int, coeffs=None):
        if n < 1:
            raise ValueError("dimension must be positive")
        clean = {}
        for m, c in (coeffs or {}).items():
            m = tuple(int(k) for k in m)
            if len(m) != n:
                raise ValueError(f"mode {m} does not have length {n}")
            c = complex(c)
            if c != 0:
                clean[m] = c
        self.n = n
        self._coeffs = MappingProxyType(dict(sorted(clean.items())))

    @property
    def coeffs(self):
        return self._coeffs

    @classmethod
    def basis(cls, m, value: complex = 1.0) -> "TorusElement":
        m = tuple(int(k) for k in m)
        return cls(len(m), {m: value})

    @classmethod
    def one(cls, n: int) -> "TorusElement":
        return cls(n, {(0,) * n: 1.0})

    @classmethod
    def zero(cls, n: int) -> "TorusElement":
        return cls(n, {})

    def __getitem__(self, m) -> complex:
        return self._coeffs.get(tuple(m), 0j)

    def support(self) -> list:
        return list(self._coeffs)

    def items(self):
        return self._coeffs.items()

    def __len__(self):
        return len(self._coeffs)

    def _check(self, other):
        if not isinstance(other, TorusElement):
            raise TypeError("expected a TorusElement")
        if other.n != self.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")

    def __add__(self, other):
        self._check(other)
        keys = set(self._coeffs) | set(other._coeffs)
        return TorusElement(self.n, {m: self[m] + other[m] for m in keys})

    def __sub__(self, other):
        self._check(other)
        keys = set(self._coeffs) | set(other._coeffs)
        return TorusElement(self.n, {m: self[m] - other[m] for m in keys})

    def __neg__(self):
        return TorusElement(self.n, {m: -c for m, c in self.items()})

    def __mul__(self, scalar):
        if isinstance(scalar, TorusElement):
            return star_J(self, scalar, None)
        return TorusElement(self.n, {m: c * scalar for m, c in self.items()})

    def __rmul__(self, scalar):
        return TorusElement(self.n, {m: scalar * c for m, c in self.items()})

    def __eq__(self, other):
        return isinstance(other, TorusElement) and self.n == other.n and dict(self._coeffs) == dict(other._coeffs)

    def __hash__(self):
        return hash((self.n, tuple(self._coeffs.items())))

    def __repr__(self):
        body = ", ".join(f"{m}: {c:.6g}" for m, c in self.items())
        return f"TorusElement(n={self.n}, {{{body}}})"

    def adjoint(self) -> "TorusElement":
        """(a*)_m = conj(a_{-m})."""
        return TorusElement(self.n, {tuple(-k for k in m): c.conjugate() for m, c in self.items()})

    def is_zero(self) -> bool:
        return not self._coeffs

    def max_abs(self) -> float:
        return max((abs(c) for c in self._coeffs.values()), default=0.0)

    def to_json(self) -> str:
        data = {"n": self.n, "coeffs": [{"m": list(m), "re": c.real, "im": c.imag} for m, c in self.items()]}
        return json.dumps(data)

    @classmethod
    def from_json(cls, text: str) -> "TorusElement":
        data = json.loads(text)
        return cls(int(data["n"]), {tuple(t["m"]): complex(t["re"], t["im"]) for t in data["coeffs"]})


@dataclass(frozen=True, eq=False)
class DeformationMatrix:
    """Real antisymmetric n x n matrix J."""

    J: np.ndarray

    def __post_init__(self):
        J = np.array(self.J, dtype=float)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise ValueError("J must be square")
        if not np.array_equal(J.T, -J):
            raise ValueError("J must be antisymmetric")
        J.setflags(write=False)
        object.__setattr__(self, "J", J)

    @property
    def n(self) -> int:
        return self.J.shape[0]

    @classmethod
    def zero(cls, n: int) -> "DeformationMatrix":
        return cls(np.zeros((n, n)))

    @classmethod
    def planar(cls, theta: float) -> "DeformationMatrix":
        """theta * [[0, 1], [-1, 0]]."""
        return cls(np.array([[0.0, theta], [-theta, 0.0]]))

    @classmethod
    def random(cls, n: int, rng, scale: float = 1.0) -> "DeformationMatrix":
        a = rng.uniform(-scale, scale, size=(n, n))
        return cls(np.triu(a, 1) - np.triu(a, 1).T)

    def upper(self) -> np.ndarray:
        return self.J[np.triu_indices(self.n, 1)]

    def phase_exponent(self, m, k) -> tuple:
        """Integer vector c with <Jm, k> = sum c_(ij) J_ij over i < j."""
        return pairing_exponent(m, k)

    def pairing(self, m, k) -> float:
        c = pairing_exponent(m, k)
        return math.fsum(ci * Jij for ci, Jij in zip(c, self.upper()))

    def phase(self, m, k) -> complex:
        return complex(e(STAR_PHASE_CONSTANT * self.pairing(m, k)))


def pairing_exponent(m, k) -> tuple:
    """Coefficients of J_ij (i < j) in <Jm, k> = sum_ij J_ij m_j k_i."""
    n = len(m)
    return tuple(m[j] * k[i] - m[i] * k[j] for i in range(n) for j in range(i + 1, n))


def associator_exponent(m, k, p) -> tuple:
    """Integer defect of the cocycle identity <Jm,k> + <J(m+k),p> - <Jk,p> - <Jm,k+p>."""
    mk = tuple(a + b for a, b in zip(m, k))
    kp = tuple(a + b for a, b in zip(k, p))
    terms = zip(pairing_exponent(m, k), pairing_exponent(mk, p), pairing_exponent(k, p), pairing_exponent(m, kp))
    return tuple(a + b - c - d for a, b, c, d in terms)


def _as_J(J, n: int) -> DeformationMatrix | None:
    if J is None:
        return None
    if not isinstance(J, DeformationMatrix):
        J = DeformationMatrix(J)
    if J.n != n:
        raise ValueError(f"J has size {J.n}, elements have dimension {n}")
    return J


def star_J(a: TorusElement, b: TorusElement, J=None) -> TorusElement:
    """Deformed product a x_J b; ``J=None`` or zero gives the commutative product."""
    a._check(b)
    J = _as_J(J, a.n)
    terms: dict = {}
    for m, am in a.items():
        for k, bk in b.items():
            c = am * bk
            if J is not None:
                c = c * J.phase(m, k)
            terms.setdefault(tuple(x + y for x, y in zip(m, k)), []).append(c)
    return TorusElement(a.n, {mk: _fsum_complex(ts) for mk, ts in terms.items()})


def alpha(x, a: TorusElement) -> TorusElement:
    """Translation action: (alpha_x a)_m = e(-<x, m>) a_m."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != a.n:
        raise ValueError("dimension mismatch")
    return TorusElement(a.n, {m: c * complex(e(-math.fsum(x * np.array(m)))) for m, c in a.items()})


def scaled_alpha(s: float, x, a: TorusElement) -> TorusElement:
    """alpha^s_x = alpha_{s x}."""
    return alpha(s * np.asarray(x, dtype=float), a)


def derivation(j: int, a: TorusElement) -> TorusElement:
    """Generator of alpha along axis ``j`` (zero based): (delta_j a)_m = -2 pi i m_j a_m."""
    if not 0 <= j < a.n:
        raise ValueError(f"axis {j} out of range for n={a.n}")
    return TorusElement(a.n, {m: -2j * math.pi * m[j] * c for m, c in a.items()})


def trace(a: TorusElement) -> complex:
    return a[(0,) * a.n]


def smooth_seminorm(a: TorusElement, i: float) -> float:
    """sup_m (1 + |m|)^i |a_m|."""
    return max(((1 + math.hypot(*m)) ** i * abs(c) for m, c in a.items()), default=0.0)


def seminorm_product_constant(n: int, cutoff: int = 400) -> float:
    """Upper bound for sum over Z^n of (1 + |m|)^{-(n+1)}.

    With it, p_i(a b) <= C p_{i+n+1}(a) p_{i+n+1}(b) for the undeformed product.
    The lattice sum is taken exactly up to ``cutoff`` and the remainder bounded by
    the radial integral.
    """
    if n > 3:
        raise ValueError("only implemented for n <= 3")
    axis = np.arange(-cutoff, cutoff + 1)
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    r = np.sqrt(sum(g.astype(float) ** 2 for g in mesh))
    inner = r <= cutoff
    total = float(np.sum((1 + r[inner]) ** -(n + 1)))
    sphere = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
    # each remaining point owns a unit cube on which 1 + |m| >= 1 + |x| - sqrt(n)/2
    half = math.sqrt(n) / 2
    tail, _ = integrate.quad(lambda t: t ** (n - 1) * (1 + t - half) ** -(n + 1), cutoff - half, math.inf)
    return total + sphere * tail


# ----------------------------------------------------------- dense mode arrays


def mode_key(m) -> tuple:
    return tuple(int(k) for k in m)


def sumset(modes_a, modes_b) -> np.ndarray:
    """Sorted unique array of m + k."""
    s = {mode_key(np.add(m, k)) for m in modes_a for k in modes_b}
    return np.array(sorted(s), dtype=np.int64).reshape(len(s), -1)


def star_phase_matrix(modes_a, modes_b, J: DeformationMatrix | None) -> np.ndarray:
    """Matrix of e(<J m, k>) for m in modes_a, k in modes_b (ones when J is None)."""
    out = np.ones((len(modes_a), len(modes_b)), dtype=complex)
    if J is None:
        return out
    for i, m in enumerate(modes_a):
        for j, k in enumerate(modes_b):
            out[i, j] = J.phase(mode_key(m), mode_key(k))
    return out


def alpha_phase(x: np.ndarray, modes) -> np.ndarray:
    """e(-<x, m>) for points x (..., n) and modes (K, n): shape (..., K)."""
    return e(-np.asarray(x, dtype=float) @ np.asarray(modes, dtype=float).T)


def to_dense(a: TorusElement, modes=None):
    """Coefficient vector of ``a`` on ``modes`` (default: its support)."""
    modes = np.array(a.support() if modes is None else modes, dtype=np.int64).reshape(-1, a.n)
    return modes, np.array([a[mode_key(m)] for m in modes], dtype=complex)


def from_dense(modes, values) -> TorusElement:
    modes = np.asarray(modes)
    return TorusElement(modes.shape[1], {mode_key(m): v for m, v in zip(modes, values)})


# -------------------------------------------------------------- oracle


def star_phase_by_quadrature(m, k, J: DeformationMatrix, quad: QuadratureSpec | None = None,
                             spec: GridSpec | None = None):
    """Coefficient of U_{m+k} in U_m x_J U_k from the defining double integral.

    Evaluates the integral of alpha_{Jx}(U_m) alpha_y(U_k) e(x.y) over
    R^n x R^n with the Gaussian regularizer exp(-eps(|x|^2 + |y|^2)/2). The
    integrand and the regularizer factor over coordinates, so each coordinate
    contributes a two dimensional pairing integral evaluated by a grid
    Fourier transform, and the product is extrapolated to eps = 0.
    """
    if quad is None:
        quad = ORACLE_QUAD
    if spec is None:
        spec = GridSpec(1, 256.0, 1 / 16)
    m = np.asarray(m, dtype=float)
    k = np.asarray(k, dtype=float)
    n = m.size
    # alpha_{Jx}(U_m) = e(-<Jx, m>) U_m = e(<x, J m>) U_m since J is antisymmetric
    Jm = J.J @ m
    factors = []
    for i in range(n):
        a_i, k_i = Jm[i], k[i]
        factors.append(PairingIntegrand(
            spec,
            left=lambda x, a=a_i: e(a * x[..., 0]),
            right=lambda y, b=k_i: e(-b * y[..., 0]),
            sign=1,
        ))
    return osc_integral(ProductIntegrand(tuple(factors)), quad)


def grid_modes(radius: int, n: int = 2) -> list:
    """All modes with max-norm at most ``radius``."""
    return [m for m in product(range(-radius, radius + 1), repeat=n)]
