"""Finite cyclic symmetries of the 2-torus and crossed products by them.

The groups Z_k, k in {1, 2, 3, 4, 6}, are realized by fixed generators in
SL_2(Z). Group elements are referred to by their exponent j (meaning gen^j)
or by the integer matrix itself.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from .nctorus import DeformationMatrix, TorusElement, mode_key, pairing_exponent, smooth_seminorm, star_J

GENERATORS = {
    1: ((1, 0), (0, 1)),
    2: ((-1, 0), (0, -1)),
    3: ((0, -1), (1, -1)),
    4: ((0, -1), (1, 0)),
    6: ((1, -1), (1, 0)),
}


def int_inverse(g: np.ndarray) -> np.ndarray:
    """Inverse of a unimodular integer 2x2 matrix, exactly."""
    g = np.asarray(g, dtype=np.int64)
    det = int(round(np.linalg.det(g)))
    if abs(det) != 1:
        raise ValueError("matrix is not unimodular")
    adj = np.array([[g[1, 1], -g[0, 1]], [-g[1, 0], g[0, 0]]], dtype=np.int64)
    return adj * det


@dataclass(frozen=True, eq=False)
class CyclicAction:
    """Cyclic group of order k generated by an integer matrix of determinant 1."""

    k: int
    gen: np.ndarray

    def __post_init__(self):
        g = np.array(self.gen, dtype=np.int64)
        if g.shape != (2, 2):
            raise ValueError("generator must be 2x2")
        if round(np.linalg.det(g)) != 1:
            raise ValueError("generator must have determinant 1")
        power = np.eye(2, dtype=np.int64)
        for j in range(1, self.k + 1):
            power = power @ g
            if np.array_equal(power, np.eye(2, dtype=np.int64)) and j < self.k:
                raise ValueError(f"generator has order {j}, not {self.k}")
        if not np.array_equal(power, np.eye(2, dtype=np.int64)):
            raise ValueError(f"generator does not have order {self.k}")
        J = np.array([[0, 1], [-1, 0]])
        if not np.array_equal(g.T @ J @ g, J):
            raise ValueError("generator does not preserve antisymmetric forms")
        g.setflags(write=False)
        object.__setattr__(self, "gen", g)

    @classmethod
    def standard(cls, k: int) -> "CyclicAction":
        if k not in GENERATORS:
            raise ValueError(f"unsupported group order {k}; choose from {sorted(GENERATORS)}")
        return cls(k, np.array(GENERATORS[k]))

    @classmethod
    def from_name(cls, name: str) -> "CyclicAction":
        """'Z4' -> the standard cyclic group of order 4."""
        name = name.strip()
        if not name.upper().startswith("Z") or not name[1:].isdigit():
            raise ValueError(f"group name must look like Z4, got {name!r}")
        return cls.standard(int(name[1:]))

    @property
    def name(self) -> str:
        return f"Z{self.k}"

    def element(self, j: int) -> np.ndarray:
        return np.linalg.matrix_power(self.gen, j % self.k)

    def elements(self) -> list:
        return [self.element(j) for j in range(self.k)]

    def dual_element(self, j: int) -> np.ndarray:
        """(g^T)^{-1}, the action on the dual group and on lattice modes."""
        return int_inverse(self.element(j)).T

    def inverse(self, j: int) -> int:
        return (-j) % self.k

    def index_of(self, g) -> int:
        g = np.asarray(g)
        for j in range(self.k):
            if np.array_equal(self.element(j), g):
                return j
        raise ValueError("matrix is not in the group")

    def gram(self) -> np.ndarray:
        """Invariant inner product: average of g^T g over the group."""
        return sum(g.T @ g for g in self.elements()) / self.k

    def gram_exact(self) -> list:
        tot = sum(g.T @ g for g in self.elements())
        return [[Fraction(int(v), self.k) for v in row] for row in tot]

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "gen": self.gen.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "CyclicAction":
        data = json.loads(text)
        return cls(int(data["k"]), np.array(data["gen"]))


def all_groups() -> list:
    return [CyclicAction.standard(k) for k in (2, 3, 4, 6)]


# --------------------------------------------------------------- beta


def beta(g, a: TorusElement) -> TorusElement:
    """beta_g U_m = U_{(g^T)^{-1} m}, i.e. (beta_g a)_m = a_{g^T m}."""
    g = np.asarray(g, dtype=np.int64)
    if g.shape != (a.n, a.n):
        raise ValueError("group element and torus dimension disagree")
    dual = int_inverse(g).T
    return TorusElement(a.n, {mode_key(dual @ np.array(m)): c for m, c in a.items()})


def beta_respects_star(g, a: TorusElement, b: TorusElement, J) -> TorusElement:
    """beta_g(a x_J b) - beta_g(a) x_J beta_g(b)."""
    return beta(g, star_J(a, b, J)) - star_J(beta(g, a), beta(g, b), J)


# ------------------------------------------------------ coefficient algebras


class TorusAlgebra:
    """Smooth (possibly deformed) torus functions with the action beta."""

    def __init__(self, group: CyclicAction, J: DeformationMatrix | None = None):
        self.group = group
        self.J = J

    def mul(self, a, b):
        return star_J(a, b, self.J)

    def add(self, a, b):
        return a + b

    def zero(self):
        return TorusElement.zero(2)

    def one(self):
        return TorusElement.one(2)

    def act(self, j: int, a):
        return beta(self.group.element(j), a)

    def norm(self, a, i: float) -> float:
        return smooth_seminorm(a, i)

    def scale(self, a, c):
        return a * c

    def same(self, other) -> bool:
        return isinstance(other, TorusAlgebra) and other.group is self.group and other.J is self.J


class MatrixAlgebra:
    """d x d complex matrices with the group acting by conjugation u_g M u_g^{-1}.

    ``unitary`` is the image of the generator; the identity gives the trivial
    action. Commutative examples such as C^2 with the swap action are the
    diagonal matrices conjugated by a permutation.
    """

    def __init__(self, group: CyclicAction, d: int, unitary=None):
        self.group = group
        self.d = d
        u = np.eye(d, dtype=complex) if unitary is None else np.asarray(unitary, dtype=complex)
        if not np.allclose(np.linalg.matrix_power(u, group.k), np.eye(d)):
            raise ValueError("unitary does not define a representation of the group")
        self.u = u

    def mul(self, a, b):
        return a @ b

    def add(self, a, b):
        return a + b

    def zero(self):
        return np.zeros((self.d, self.d), dtype=complex)

    def one(self):
        return np.eye(self.d, dtype=complex)

    def act(self, j: int, a):
        uj = np.linalg.matrix_power(self.u, j % self.group.k)
        return uj @ a @ np.linalg.inv(uj)

    def norm(self, a, i: float = 0) -> float:
        return float(np.linalg.norm(a, 2))

    def scale(self, a, c):
        return a * c

    def same(self, other) -> bool:
        return other is self


@dataclass(frozen=True, eq=False)
class GroupCrossedElement:
    """sum_j (a_j, g^j) in A x| G, with one coefficient per group element.

    ``parity`` tags homogeneous elements of a graded coefficient algebra.
    """

    algebra: Any
    carrier: tuple
    parity: int | None = None

    def __post_init__(self):
        if len(self.carrier) != self.algebra.group.k:
            raise ValueError("carrier must have one value per group element")
        object.__setattr__(self, "carrier", tuple(self.carrier))

    @property
    def group(self) -> CyclicAction:
        return self.algebra.group

    @classmethod
    def single(cls, algebra, a, j: int = 0) -> "GroupCrossedElement":
        """(a, g^j)."""
        carrier = [algebra.zero() for _ in range(algebra.group.k)]
        carrier[j % algebra.group.k] = a
        return cls(algebra, tuple(carrier))

    @classmethod
    def unit(cls, algebra) -> "GroupCrossedElement":
        return cls.single(algebra, algebra.one(), 0)

    def __add__(self, other):
        _check_same(self, other)
        return GroupCrossedElement(self.algebra, tuple(self.algebra.add(a, b) for a, b in zip(self.carrier, other.carrier)))

    def __sub__(self, other):
        _check_same(self, other)
        neg = tuple(self.algebra.scale(b, -1) for b in other.carrier)
        return GroupCrossedElement(self.algebra, tuple(self.algebra.add(a, b) for a, b in zip(self.carrier, neg)))

    def scale(self, c):
        return GroupCrossedElement(self.algebra, tuple(self.algebra.scale(a, c) for a in self.carrier))

    def __mul__(self, other):
        if isinstance(other, GroupCrossedElement):
            return crossed_mul(self, other)
        return self.scale(other)

    def size(self) -> float:
        """Largest coefficient norm, for defect reporting."""
        vals = []
        for a in self.carrier:
            if isinstance(a, TorusElement):
                vals.append(a.max_abs())
            else:
                vals.append(float(np.max(np.abs(a))) if np.size(a) else 0.0)
        return max(vals)


def _check_same(x: GroupCrossedElement, y: GroupCrossedElement):
    if not x.algebra.same(y.algebra):
        raise ValueError("elements live over different coefficient algebras")


def crossed_mul(x: GroupCrossedElement, y: GroupCrossedElement) -> GroupCrossedElement:
    """(a, g)(b, h) = (a g(b), gh), extended bilinearly."""
    _check_same(x, y)
    alg = x.algebra
    k = alg.group.k
    out = [alg.zero() for _ in range(k)]
    for i, a in enumerate(x.carrier):
        for j, b in enumerate(y.carrier):
            out[(i + j) % k] = alg.add(out[(i + j) % k], alg.mul(a, alg.act(i, b)))
    parity = None if x.parity is None or y.parity is None else (x.parity + y.parity) % 2
    return GroupCrossedElement(alg, tuple(out), parity)


def crossed_seminorm(x: GroupCrossedElement, i: float, C: float = 1.0) -> float:
    """C * sum_g ||g^{-1}(a_g)||_i."""
    alg = x.algebra
    return C * math.fsum(alg.norm(alg.act(alg.group.inverse(j), a), i) for j, a in enumerate(x.carrier))


# ----------------------------------------------------------------- cocycle


def _theta_matrix(theta) -> DeformationMatrix:
    if np.ndim(theta) == 0:
        return DeformationMatrix.planar(float(theta))
    return theta if isinstance(theta, DeformationMatrix) else DeformationMatrix(theta)


def cocycle_omega(theta, x, y) -> complex:
    """omega_theta(x, y) = e(<Theta x, y>) with Theta = theta [[0, 1], [-1, 0]] for scalar theta."""
    return _theta_matrix(theta).phase(mode_key(x), mode_key(y))


def cocycle_defect_exponent(x, y, z) -> tuple:
    """Integer exponent of omega(x,y) omega(x+y,z) / (omega(y,z) omega(x,y+z)); zero for a cocycle."""
    xy = np.add(x, y)
    yz = np.add(y, z)
    parts = [pairing_exponent(x, y), pairing_exponent(xy, z), pairing_exponent(y, z), pairing_exponent(x, yz)]
    return tuple(int(a + b - c - d) for a, b, c, d in zip(*parts))


def group_commutator_phase(theta, x, y) -> complex:
    """Coefficient of U_0 in U_x U_y U_{-x} U_{-y} in the twisted group algebra."""
    J = _theta_matrix(theta)
    ux, uy = TorusElement.basis(x), TorusElement.basis(y)
    mx, my = TorusElement.basis(np.negative(x)), TorusElement.basis(np.negative(y))
    prod = star_J(star_J(star_J(ux, uy, J), mx, J), my, J)
    return prod[(0, 0)]


# ----------------------------------------------------- representation ring


@dataclass(frozen=True, eq=False)
class RGClass:
    """Virtual representation of Z_k: multiplicity of each character chi_j(g^l) = w^{jl}."""

    k: int
    multiplicities: tuple

    def __post_init__(self):
        m = tuple(int(v) for v in self.multiplicities)
        if len(m) != self.k:
            raise ValueError("need one multiplicity per character")
        object.__setattr__(self, "multiplicities", m)

    @classmethod
    def zero(cls, k: int) -> "RGClass":
        return cls(k, (0,) * k)

    @classmethod
    def irrep(cls, k: int, j: int) -> "RGClass":
        m = [0] * k
        m[j % k] = 1
        return cls(k, tuple(m))

    @classmethod
    def regular(cls, k: int) -> "RGClass":
        return cls(k, (1,) * k)

    @classmethod
    def from_character(cls, k: int, chi, tol: float = 1e-8) -> "RGClass":
        chi = np.asarray(chi, dtype=complex)
        table = character_table(k)
        mult = table.conj() @ chi / k
        rounded = np.rint(mult.real)
        if np.max(np.abs(mult - rounded)) > tol:
            raise ValueError(f"character is not virtual: multiplicities {mult}")
        return cls(k, tuple(int(v) for v in rounded))

    def character(self) -> np.ndarray:
        return np.asarray(self.multiplicities, dtype=complex) @ character_table(self.k)

    @property
    def dim(self) -> int:
        return sum(self.multiplicities)

    def __add__(self, other):
        self._check(other)
        return RGClass(self.k, tuple(a + b for a, b in zip(self.multiplicities, other.multiplicities)))

    def __sub__(self, other):
        self._check(other)
        return RGClass(self.k, tuple(a - b for a, b in zip(self.multiplicities, other.multiplicities)))

    def __neg__(self):
        return RGClass(self.k, tuple(-a for a in self.multiplicities))

    def __mul__(self, other):
        if isinstance(other, int):
            return RGClass(self.k, tuple(other * a for a in self.multiplicities))
        self._check(other)
        out = [0] * self.k
        for i, a in enumerate(self.multiplicities):
            for j, b in enumerate(other.multiplicities):
                out[(i + j) % self.k] += a * b
        return RGClass(self.k, tuple(out))

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, RGClass) and self.k == other.k and self.multiplicities == other.multiplicities

    def __hash__(self):
        return hash((self.k, self.multiplicities))

    def __repr__(self):
        return f"RGClass(k={self.k}, {list(self.multiplicities)})"

    def _check(self, other):
        if not isinstance(other, RGClass) or other.k != self.k:
            raise ValueError("classes belong to different groups")

    def to_json(self) -> str:
        header = [f"chi_{j}(g^l) = exp(2 pi i {j} l / {self.k})" for j in range(self.k)]
        return json.dumps({"k": self.k, "characters": header, "multiplicities": list(self.multiplicities)})


def character_table(k: int) -> np.ndarray:
    """T[j, l] = exp(2 pi i j l / k)."""
    j = np.arange(k)
    return np.exp(2j * np.pi * np.outer(j, j) / k)


@dataclass(frozen=True, eq=False)
class Representation:
    """Finite-dimensional representation of Z_k given by the image of the generator."""

    k: int
    gen: np.ndarray

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.gen, dtype=complex))
        if g.shape[0] != g.shape[1]:
            raise ValueError("generator image must be square")
        if g.shape[0] and not np.allclose(np.linalg.matrix_power(g, self.k), np.eye(g.shape[0]), atol=1e-9):
            raise ValueError("matrix does not have order dividing k")
        object.__setattr__(self, "gen", g)

    @property
    def dim(self) -> int:
        return self.gen.shape[0]

    def matrix(self, l: int) -> np.ndarray:
        return np.linalg.matrix_power(self.gen, l % self.k)

    def character(self) -> np.ndarray:
        return np.array([np.trace(self.matrix(l)) for l in range(self.k)])

    def rclass(self) -> RGClass:
        return RGClass.from_character(self.k, self.character())

    @classmethod
    def from_class(cls, c: RGClass, basis=None) -> "Representation":
        """Direct sum of characters with the given multiplicities, optionally in another basis."""
        if any(m < 0 for m in c.multiplicities):
            raise ValueError("only actual representations can be realized")
        diag = np.concatenate([np.full(m, np.exp(2j * np.pi * j / c.k)) for j, m in enumerate(c.multiplicities)] or [[]])
        g = np.diag(diag)
        if basis is not None:
            g = basis @ g @ np.linalg.inv(basis)
        return cls(c.k, g)

    @classmethod
    def from_matrices(cls, k: int, gen) -> "Representation":
        return cls(k, gen)


def _restricted_character(rep: Representation, basis: np.ndarray) -> np.ndarray:
    # character of rep restricted to the invariant subspace spanned by the columns of basis
    if basis.shape[1] == 0:
        return np.zeros(rep.k, dtype=complex)
    pinv = np.linalg.pinv(basis)
    return np.array([np.trace(pinv @ rep.matrix(l) @ basis) for l in range(rep.k)])


def kernel_cokernel(T: np.ndarray, dom: Representation, cod: Representation, tol: float = 1e-9):
    """Classes of ker T and coker T for an intertwiner T: dom -> cod."""
    T = np.asarray(T, dtype=complex).reshape(cod.dim, dom.dim)
    if dom.k != cod.k:
        raise ValueError("representations of different groups")
    scale = max(1.0, float(np.linalg.norm(T)))
    for l in range(dom.k):
        if np.linalg.norm(cod.matrix(l) @ T - T @ dom.matrix(l)) > tol * scale * 10:
            raise ValueError("T is not equivariant")
    u, s, vh = np.linalg.svd(T) if T.size else (np.eye(cod.dim), np.zeros(0), np.eye(dom.dim))
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 1.0)))
    ker = vh[rank:].conj().T
    image = u[:, :rank]
    chi_ker = _restricted_character(dom, ker)
    chi_im = _restricted_character(cod, image)
    chi_coker = cod.character() - chi_im
    return RGClass.from_character(dom.k, chi_ker), RGClass.from_character(dom.k, chi_coker)


def g_index(T: np.ndarray, dom: Representation, cod: Representation, tol: float = 1e-9) -> RGClass:
    """[ker T] - [coker T] in R(Z_k)."""
    ker, coker = kernel_cokernel(T, dom, cod, tol)
    return ker - coker


# -------------------------------------------------------- stabilization


def rho_stabilization(rho: Representation, x: GroupCrossedElement) -> list:
    """Image of x under A x| G -> M_l(A x| G), sum_g (a_g, g) -> [sum_g ((rho_g)_ij a_g, g)]_ij.

    The map untwists the conjugation action of G on End(V) tensored with A
    and then reads the result as an l x l matrix over the crossed product.
    """
    G = x.group
    if rho.k != G.k:
        raise ValueError("representation and crossed product use different groups")
    for a in range(G.k):
        for b in range(G.k):
            if not np.allclose(rho.matrix(a) @ rho.matrix(b), rho.matrix(a + b), atol=1e-12):
                raise ValueError("rho is not a representation")
    alg = x.algebra
    l = rho.dim
    out = []
    for i in range(l):
        row = []
        for j in range(l):
            carrier = tuple(alg.scale(a, rho.matrix(g)[i, j]) for g, a in enumerate(x.carrier))
            row.append(GroupCrossedElement(alg, carrier))
        out.append(row)
    return out


def block_mul(X: list, Y: list) -> list:
    """Product of square matrices with crossed-product entries."""
    l = len(X)
    out = []
    for i in range(l):
        row = []
        for k in range(l):
            acc = crossed_mul(X[i][0], Y[0][k])
            for j in range(1, l):
                acc = acc + crossed_mul(X[i][j], Y[j][k])
            row.append(acc)
        out.append(row)
    return out


def block_defect(X: list, Y: list) -> float:
    return max((X[i][j] - Y[i][j]).size() for i in range(len(X)) for j in range(len(X)))


# ------------------------------------------------------------ J splitting


def split_degenerate(J, gram=None, group: CyclicAction | None = None, tol: float = 1e-10):
    """Split R^n = V + W with V = ker J and W its complement.

    Orthogonality and orthonormality refer to ``gram`` (default: the standard
    inner product, or the group's invariant one when a group is supplied).
    Returns column matrices (V, W).
    """
    J = J.J if isinstance(J, DeformationMatrix) else np.asarray(J, dtype=float)
    n = J.shape[0]
    if gram is None:
        gram = group.gram() if group is not None and n == 2 else np.eye(n)
    P = np.linalg.cholesky(np.asarray(gram, dtype=float)).T  # gram = P^T P
    Pinv = np.linalg.inv(P)
    # work in coordinates y = P x, where the metric is standard
    Jy = Pinv.T @ J @ Pinv
    u, s, vh = np.linalg.svd(Jy)
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 1.0)))
    V = Pinv @ vh[rank:].T
    W = Pinv @ vh[:rank].T
    if group is not None and n == 2:
        for g in group.elements():
            for basis in (V, W):
                if basis.shape[1] and np.linalg.matrix_rank(np.hstack([basis, g @ basis]), tol=1e-8) > basis.shape[1]:
                    raise ValueError("splitting is not invariant under the group")
    return V, W
