"""Grid model of smooth crossed products by R^n and of the Takai duality map.

Elements of A x| R^n are sampled on a :class:`~ncthom.grid.GridSpec` and take
values in the smooth torus algebra, stored densely over a finite list of
Fourier modes (axis right after the grid axes), optionally tensored with a
Clifford algebra (last axis). The translation action is
alpha_x(U_m) = e(-<x, m>) U_m.

Two discretizations are used:

* products by R^n (``twisted_conv``) are zero padded linear convolutions;
  the grid box must contain the supports, and shifts that push mass out of
  the box raise :class:`TruncationWarning`;
* group actions, the dual crossed product and the Takai map live on the
  discrete torus (Z/N)^n. Integer matrices of determinant one permute its
  points and the discrete Fourier kernel is invariant under (g, g^{-T}), so
  every G-identity holds exactly, with no interpolation. This needs 2L to be
  an integer, so that alpha is periodic on the box.

Dual variables (R_n) carry the contragredient action t -> g^{-T} t, and
functions on R_n x R^n are stored with the dual variable first.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .clifford import multiply_arrays
from .grid import GridFunction, GridSpec, decay_order, e, fourier
from .nctorus import DeformationMatrix, mode_key, star_phase_matrix, sumset


class TruncationWarning(UserWarning):
    """Mass was pushed out of the grid box and dropped."""


TRUNCATION_TOL = 1e-12


def same_grid(a: GridSpec, b: GridSpec) -> bool:
    return a.dim == b.dim and a.size == b.size and math.isclose(a.h, b.h, rel_tol=1e-12)


def integer_period(spec: GridSpec) -> bool:
    return abs(2 * spec.L - round(2 * spec.L)) < 1e-9


@dataclass(frozen=True)
class RnAction:
    """Descriptor of the R^n action on the coefficients.

    kind "torus": alpha^s_x(U_m) = e(-s <x, m>) U_m with s = ``scale``;
    kind "trivial": alpha_x = id. ``J`` deforms the coefficient product to
    x_J (None for the commutative torus).
    """

    kind: str
    n: int
    scale: float = 1.0
    J: DeformationMatrix | None = None

    def __post_init__(self):
        if self.kind not in ("torus", "trivial"):
            raise ValueError(f"unknown action kind {self.kind!r}")
        if self.J is not None and self.J.n != self.n:
            raise ValueError("deformation matrix has the wrong size")

    @classmethod
    def torus(cls, n: int, scale: float = 1.0, J=None) -> "RnAction":
        if J is not None and not isinstance(J, DeformationMatrix):
            J = DeformationMatrix(J)
        return cls("torus", n, scale, J)

    @classmethod
    def trivial(cls, n: int) -> "RnAction":
        return cls("trivial", n)

    def phase(self, x: np.ndarray, modes) -> np.ndarray:
        """Multipliers of alpha_x on the modes: shape x.shape[:-1] + (K,)."""
        x = np.asarray(x, dtype=float)
        modes = np.asarray(modes, dtype=float).reshape(-1, self.n)
        if self.kind == "trivial":
            return np.ones(x.shape[:-1] + (len(modes),), dtype=complex)
        return e(-self.scale * (x @ modes.T))

    def undeformed(self) -> "RnAction":
        return RnAction(self.kind, self.n, self.scale, None)

    def same(self, other: "RnAction") -> bool:
        if (self.kind, self.n) != (other.kind, other.n):
            return False
        if self.kind == "torus" and self.scale != other.scale:
            return False
        if (self.J is None) != (other.J is None):
            return False
        return self.J is None or np.array_equal(self.J.J, other.J.J)


@dataclass(frozen=True, eq=False)
class RnCrossedElement:
    """Sampled element of A x| R^n.

    ``data.values`` has shape grid + (K,) for torus coefficients, or
    grid + (K, 2**clifford) when tensored with a Clifford algebra.
    """

    data: GridFunction
    action: RnAction
    clifford: int = 0

    def __post_init__(self):
        if self.data.modes is None:
            raise ValueError("coefficients must be indexed by torus modes")
        if self.data.modes.shape[1] != self.action.n:
            raise ValueError("mode dimension does not match the action")
        if self.data.spec.dim != self.action.n:
            raise ValueError("grid dimension does not match the action")
        extra = self.data.values.ndim - self.data.spec.dim
        want = 2 if self.clifford else 1
        if extra != want or (self.clifford and self.data.values.shape[-1] != 1 << self.clifford):
            raise ValueError("value axes do not match the coefficient algebra")

    @property
    def spec(self) -> GridSpec:
        return self.data.spec

    @property
    def modes(self) -> np.ndarray:
        return self.data.modes

    @property
    def values(self) -> np.ndarray:
        return self.data.values

    @classmethod
    def from_modes(cls, spec: GridSpec, action: RnAction, profiles: dict, clifford: int = 0):
        """Build sum_m f_m(x) U_m from callables ``profiles[m](points)``."""
        modes = sorted(mode_key(m) for m in profiles)
        pts = spec.points()
        vals = np.stack([np.asarray(profiles[m](pts), dtype=complex) for m in modes], axis=spec.dim)
        return cls(GridFunction(spec, vals, "torus*clifford" if clifford else "torus", np.array(modes)), action, clifford)

    @classmethod
    def scalar(cls, spec: GridSpec, fn, action: RnAction | None = None):
        """A = C sitting inside the torus as multiples of U_0."""
        action = RnAction.trivial(spec.dim) if action is None else action
        return cls.from_modes(spec, action, {(0,) * spec.dim: fn})

    def replace(self, values=None, modes=None, action=None) -> "RnCrossedElement":
        return RnCrossedElement(self.data.replace(values=values, modes=modes),
                                self.action if action is None else action, self.clifford)

    def component(self, m) -> np.ndarray:
        key = mode_key(m)
        for i, k in enumerate(self.modes):
            if mode_key(k) == key:
                return self.values[(slice(None),) * self.spec.dim + (i,)]
        return np.zeros(self.spec.shape + self.values.shape[self.spec.dim + 1:], dtype=complex)

    def on_modes(self, modes) -> "RnCrossedElement":
        """Same element written over a larger mode list (missing modes are zero)."""
        modes = np.asarray(modes, dtype=np.int64).reshape(-1, self.action.n)
        vals = np.stack([self.component(m) for m in modes], axis=self.spec.dim)
        return self.replace(values=vals, modes=modes)

    def _aligned(self, other):
        if not same_grid(self.spec, other.spec) or not self.action.same(other.action) or self.clifford != other.clifford:
            raise ValueError("elements live on different grids or coefficient algebras")
        modes = np.array(sorted({mode_key(m) for m in np.vstack([self.modes, other.modes])}))
        return self.on_modes(modes), other.on_modes(modes)

    def __add__(self, other):
        a, b = self._aligned(other)
        return a.replace(values=a.values + b.values)

    def __sub__(self, other):
        a, b = self._aligned(other)
        return a.replace(values=a.values - b.values)

    def scale(self, c) -> "RnCrossedElement":
        return self.replace(values=self.values * c)

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def defect(self, other) -> float:
        """Largest coefficient of the difference."""
        return (self - other).max_norm()

    def pointwise_alpha(self, t) -> "RnCrossedElement":
        """x -> alpha_t(f(x))."""
        ph = self.action.phase(np.asarray(t, dtype=float), self.modes)
        return self.replace(values=self.values * _expand(ph, self))


def _expand(mode_factor: np.ndarray, f: RnCrossedElement) -> np.ndarray:
    # mode_factor has shape (..., K) broadcasting against the grid; pad for the Clifford axis
    return mode_factor[..., None] if f.clifford else mode_factor


# ------------------------------------------------------------ convolution


def _linear_conv(a: np.ndarray, b: np.ndarray, spec: GridSpec, clifford: int) -> np.ndarray:
    """Grid quadrature of int a(y) b(x - y) dy, sampled back on the grid.

    ``a`` and ``b`` have grid axes first and optionally a Clifford axis last.
    """
    N, d = spec.size, spec.dim
    axes = tuple(range(d))
    shape = (2 * N,) * d
    fa = np.fft.fftn(a, s=shape, axes=axes)
    fb = np.fft.fftn(b, s=shape, axes=axes)
    prod = multiply_arrays(fa, fb, clifford) if clifford else fa * fb
    full = np.fft.ifftn(prod, axes=axes)
    # a_k sits at (k - N/2) h, so the sample at (i - N/2) h is full[i + N/2]
    sl = tuple(slice(N // 2, N // 2 + N) for _ in range(d))
    return full[sl] * spec.cell


def twisted_conv(f: RnCrossedElement, g: RnCrossedElement) -> RnCrossedElement:
    """(f * g)(x) = int f(y) alpha_y(g(x - y)) dy with the coefficient product of the action."""
    if not same_grid(f.spec, g.spec):
        raise ValueError("grid mismatch")
    if not f.action.same(g.action) or f.clifford != g.clifford:
        raise ValueError("action or coefficient algebra mismatch")
    spec, d = f.spec, f.spec.dim
    out_modes = sumset(f.modes, g.modes)
    index = {mode_key(m): i for i, m in enumerate(out_modes)}
    vshape = f.values.shape[d + 1:]
    out = np.zeros(spec.shape + (len(out_modes),) + vshape, dtype=complex)
    phases = star_phase_matrix(f.modes, g.modes, f.action.J)
    pts = spec.points()
    for j, n in enumerate(g.modes):
        # alpha_y(U_n) = phase(y) U_n is absorbed into the left factor
        twist = f.action.phase(pts, n[None, :])[..., 0]
        if f.clifford:
            twist = twist[..., None]
        gn = g.values[(slice(None),) * d + (j,)]
        if not np.any(gn):
            continue
        for i, m in enumerate(f.modes):
            fm = f.values[(slice(None),) * d + (i,)]
            if not np.any(fm):
                continue
            k = index[mode_key(m + n)]
            out[(slice(None),) * d + (k,)] += phases[i, j] * _linear_conv(fm * twist, gn, spec, f.clifford)
    return f.replace(values=out, modes=out_modes)


def dual_action(x, f: RnCrossedElement) -> RnCrossedElement:
    """hat-alpha_x(f)(s) = e(<x, s>) f(s)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    ph = e(f.spec.points() @ x)
    ph = ph.reshape(f.spec.shape + (1,) * (f.values.ndim - f.spec.dim))
    return f.replace(values=f.values * ph)


def gamma_action(t, f: RnCrossedElement, tol: float = TRUNCATION_TOL) -> RnCrossedElement:
    """(gamma_t f)(s) = f(s - t).

    On-lattice shifts move samples and fill with zeros; other shifts use
    cubic spline interpolation. Mass leaving the box is dropped with a
    :class:`TruncationWarning` when it exceeds ``tol``.
    """
    t = np.asarray(t, dtype=float).reshape(-1)
    spec, d = f.spec, f.spec.dim
    steps = t / spec.h
    on_lattice = np.allclose(steps, np.rint(steps), atol=1e-9)
    vals = f.values
    if on_lattice:
        k = np.rint(steps).astype(int)
        out = np.zeros_like(vals)
        src, dst = [], []
        for ax in range(d):
            s = k[ax]
            N = spec.size
            if abs(s) >= N:
                src.append(slice(0, 0))
                dst.append(slice(0, 0))
            elif s >= 0:
                src.append(slice(0, N - s))
                dst.append(slice(s, N))
            else:
                src.append(slice(-s, N))
                dst.append(slice(0, N + s))
        out[tuple(dst)] = vals[tuple(src)]
    else:
        flat = vals.reshape(spec.shape + (-1,))
        cols = []
        for c in range(flat.shape[-1]):
            col = flat[..., c]
            re = ndimage.shift(col.real, steps, order=3, mode="constant", cval=0.0)
            im = ndimage.shift(col.imag, steps, order=3, mode="constant", cval=0.0)
            cols.append(re + 1j * im)
        out = np.stack(cols, axis=-1).reshape(vals.shape)
    lost = float(np.sum(np.abs(vals) ** 2) - np.sum(np.abs(out) ** 2)) * spec.cell
    if lost > tol:
        warnings.warn(f"shift by {t.tolist()} dropped L2 mass {lost:.3e} outside the box", TruncationWarning, stacklevel=2)
    return f.replace(values=out)


# --------------------------------------------------------------- Theta_J


def theta_J(f: RnCrossedElement, J=None) -> RnCrossedElement:
    """Theta_J(f)(x) = int alpha_{Jy}(f^(y)) e(<x, y>) dy, from A_J x| R^n to A x| R^n.

    Computed as forward transform, multiplication by the alpha-phase of Jy on
    each mode, and inverse transform; on mode m this is the translate
    f_m(x + J m).
    """
    if f.action.kind != "torus":
        raise ValueError("Theta_J needs the torus translation action")
    if J is None:
        J = f.action.J
    if J is None:
        return f.replace(action=f.action.undeformed())
    J = J if isinstance(J, DeformationMatrix) else DeformationMatrix(J)
    fhat = fourier(f.data, -1)
    y = fhat.spec.points()
    ph = f.action.phase(y @ J.J.T, f.modes)
    shifted = fhat.replace(values=fhat.values * _expand(ph, f))
    back = fourier(shifted, +1)
    return RnCrossedElement(GridFunction(f.spec, back.values, f.data.kind, f.modes), f.action.undeformed(), f.clifford)


# --------------------------------------------------------- finite groups


def _centered_index(N: int, dim: int) -> np.ndarray:
    c = np.arange(N) - N // 2
    return np.stack(np.meshgrid(*([c] * dim), indexing="ij"), axis=-1)


def lattice_pullback(N: int, mat) -> tuple:
    """Index arrays p with out[k] = in[p[k]] where p(k) = mat @ k on (Z/N)^dim, centered."""
    mat = np.asarray(mat, dtype=np.int64)
    dim = mat.shape[0]
    c = _centered_index(N, dim)
    src = (c @ mat.T + N // 2) % N
    return tuple(src[..., i] for i in range(dim))


def _check_unimodular(g) -> np.ndarray:
    g = np.asarray(g)
    if not np.array_equal(g, np.rint(g)) or abs(round(np.linalg.det(g))) != 1:
        raise ValueError("only integer matrices of determinant +-1 preserve the lattice")
    return np.rint(g).astype(np.int64)


def _ginv(g: np.ndarray) -> np.ndarray:
    return np.rint(np.linalg.inv(g)).astype(np.int64)


def beta_modes(g, modes) -> np.ndarray:
    """beta_g(U_m) = U_{g^{-T} m}."""
    g = _check_unimodular(g)
    return np.asarray(modes, dtype=np.int64) @ _ginv(g)


def group_act(g, f: RnCrossedElement) -> RnCrossedElement:
    """(g.f)(x) = beta_g(f(g^{-1} x)) on the discrete torus of the grid."""
    g = _check_unimodular(g)
    if f.clifford:
        raise ValueError("group action on Clifford-valued elements is not defined here")
    if f.action.kind == "torus" and not integer_period(f.spec):
        raise ValueError("the periodic model needs 2L to be an integer")
    idx = lattice_pullback(f.spec.size, _ginv(g))
    vals = f.values[idx]
    return f.replace(values=vals, modes=beta_modes(g, f.modes))


@dataclass(frozen=True, eq=False)
class SmoothKernel:
    """Kernel k(s, r) on R^n x R^n with torus values, stored with s first.

    ``values`` has shape (N,)*2n + (K,). The composition law of the Takai
    picture is ordinary matrix composition of the operator form
    K(x, z) = k(x - z, x).
    """

    spec: GridSpec
    values: np.ndarray
    modes: np.ndarray

    def __post_init__(self):
        d = self.spec.dim
        if self.values.shape[: 2 * d] != self.spec.shape * 2:
            raise ValueError("kernel must be sampled on the product grid")
        if self.values.shape[2 * d] != len(self.modes):
            raise ValueError("mode axis mismatch")

    @property
    def n(self) -> int:
        return self.spec.dim

    def as_grid_function(self) -> GridFunction:
        big = GridSpec(2 * self.n, self.spec.L, self.spec.h)
        return GridFunction(big, self.values, "torus", self.modes)

    def operator_form(self) -> np.ndarray:
        """K(x, z) = k(x - z, x), with x - z taken on the discrete torus."""
        N, d = self.spec.size, self.n
        c = _centered_index(N, d)
        x = c.reshape((N,) * d + (1,) * d + (d,))
        z = c.reshape((1,) * d + (N,) * d + (d,))
        s = (x - z + N // 2) % N
        xi = np.broadcast_to(x + N // 2, s.shape)
        idx = tuple(s[..., i] for i in range(d)) + tuple(xi[..., i] for i in range(d))
        return self.values[idx]

    @classmethod
    def from_operator_form(cls, spec: GridSpec, K: np.ndarray, modes) -> "SmoothKernel":
        N, d = spec.size, spec.dim
        c = _centered_index(N, d)
        s = c.reshape((N,) * d + (1,) * d + (d,))
        r = c.reshape((1,) * d + (N,) * d + (d,))
        # k(s, r) = K(r, r - s)
        x = np.broadcast_to(r + N // 2, (N,) * (2 * d) + (d,))
        z = (r - s + N // 2) % N
        idx = tuple(x[..., i] for i in range(d)) + tuple(z[..., i] for i in range(d))
        return cls(spec, K[idx], np.asarray(modes, dtype=np.int64))

    def on_modes(self, modes) -> "SmoothKernel":
        modes = np.asarray(modes, dtype=np.int64).reshape(-1, self.n)
        lookup = {mode_key(m): i for i, m in enumerate(self.modes)}
        d2 = 2 * self.n
        zero = np.zeros(self.values.shape[:d2], dtype=complex)
        cols = [self.values[(slice(None),) * d2 + (lookup[mode_key(m)],)] if mode_key(m) in lookup else zero for m in modes]
        return SmoothKernel(self.spec, np.stack(cols, axis=d2), modes)

    def defect(self, other: "SmoothKernel") -> float:
        modes = np.array(sorted({mode_key(m) for m in np.vstack([self.modes, other.modes])}))
        return float(np.max(np.abs(self.on_modes(modes).values - other.on_modes(modes).values)))

    def compose(self, other: "SmoothKernel") -> "SmoothKernel":
        """Operator composition int K(x, w) K'(w, z) dw with the undeformed torus product."""
        if not same_grid(self.spec, other.spec):
            raise ValueError("grid mismatch")
        N, d = self.spec.size, self.n
        M = N**d
        A = self.operator_form().reshape(M, M, -1)
        B = other.operator_form().reshape(M, M, -1)
        out_modes = sumset(self.modes, other.modes)
        index = {mode_key(m): i for i, m in enumerate(out_modes)}
        out = np.zeros((M, M, len(out_modes)), dtype=complex)
        for i, m in enumerate(self.modes):
            for j, k in enumerate(other.modes):
                out[:, :, index[mode_key(m + k)]] += (A[:, :, i] @ B[:, :, j]) * self.spec.cell
        return SmoothKernel.from_operator_form(self.spec, out.reshape((N,) * (2 * d) + (-1,)), out_modes)


def kernel_group_action(g, k: SmoothKernel) -> SmoothKernel:
    """Diagonal action (g.k)(s, r) = beta_g(k(g^{-1} s, g^{-1} r)).

    Lattice-preserving g act by permuting grid points of the discrete torus,
    so no interpolation is involved.
    """
    g = _check_unimodular(g)
    N, d = k.spec.size, k.n
    gi = _ginv(g)
    block = np.zeros((2 * d, 2 * d), dtype=np.int64)
    block[:d, :d] = gi
    block[d:, d:] = gi
    idx = lattice_pullback(N, block)
    return SmoothKernel(k.spec, k.values[idx], beta_modes(g, k.modes))


def kernel_decay(k: SmoothKernel, window, noise_floor: float = 0.0) -> tuple:
    """Decay reports of sup_r |k(s, r)| in s and of sup_s |k(s, r)| in r."""
    d = k.n
    mag = np.abs(k.values).max(axis=-1)
    first = mag.max(axis=tuple(range(d, 2 * d)))
    second = mag.max(axis=tuple(range(d)))
    return (decay_order(GridFunction(k.spec, first), window, noise_floor),
            decay_order(GridFunction(k.spec, second), window, noise_floor))


# --------------------------------------------------- dual crossed product


@dataclass(frozen=True, eq=False)
class DualCrossedElement:
    """F(t, s) in (A x| R^n) x| R_n, dual variable t first.

    ``spec`` is the grid of the primal variable s; t lives on its dual grid,
    so that transforming in t lands back on ``spec``.
    """

    spec: GridSpec
    values: np.ndarray
    modes: np.ndarray
    action: RnAction

    def __post_init__(self):
        d = self.spec.dim
        if self.values.shape[: 2 * d] != self.spec.shape * 2 or self.values.shape[2 * d] != len(self.modes):
            raise ValueError("values must have shape grid x grid x modes")
        if not integer_period(self.spec):
            raise ValueError("the periodic model needs 2L to be an integer")

    @property
    def dual_spec(self) -> GridSpec:
        return self.spec.dual()

    @classmethod
    def from_modes(cls, spec: GridSpec, action: RnAction, profiles: dict) -> "DualCrossedElement":
        """profiles[m](t, s) with t on the dual grid and s on ``spec``."""
        d = spec.dim
        t = spec.dual().points().reshape((spec.size,) * d + (1,) * d + (d,))
        s = spec.points().reshape((1,) * d + (spec.size,) * d + (d,))
        modes = sorted(mode_key(m) for m in profiles)
        vals = np.stack([np.broadcast_to(profiles[m](t, s), (spec.size,) * (2 * d)) for m in modes], axis=2 * d)
        return cls(spec, vals.astype(complex), np.array(modes, dtype=np.int64), action)

    def on_modes(self, modes) -> "DualCrossedElement":
        modes = np.asarray(modes, dtype=np.int64).reshape(-1, self.spec.dim)
        lookup = {mode_key(m): i for i, m in enumerate(self.modes)}
        d2 = 2 * self.spec.dim
        zero = np.zeros(self.values.shape[:d2], dtype=complex)
        cols = [self.values[(slice(None),) * d2 + (lookup[mode_key(m)],)] if mode_key(m) in lookup else zero for m in modes]
        return DualCrossedElement(self.spec, np.stack(cols, axis=d2), modes, self.action)

    def defect(self, other: "DualCrossedElement") -> float:
        modes = np.array(sorted({mode_key(m) for m in np.vstack([self.modes, other.modes])}))
        return float(np.max(np.abs(self.on_modes(modes).values - other.on_modes(modes).values)))

    def inverse_t_transform(self) -> np.ndarray:
        """F-check(u, s) = int F(t, s) e(<t, u>) dt with u on ``spec``."""
        d = self.spec.dim
        axes = tuple(range(d))
        N = self.spec.size
        v = np.fft.ifftshift(self.values, axes=axes)
        v = np.fft.ifftn(v, axes=axes) * N**d
        return np.fft.fftshift(v, axes=axes) * self.dual_spec.cell


def dual_group_act(g, F: DualCrossedElement) -> DualCrossedElement:
    """(g.F)(t, s) = beta_g(F(g^T t, g^{-1} s)); the dual variable moves by g^{-T}."""
    g = _check_unimodular(g)
    d = F.spec.dim
    block = np.zeros((2 * d, 2 * d), dtype=np.int64)
    block[:d, :d] = g.T
    block[d:, d:] = _ginv(g)
    idx = lattice_pullback(F.spec.size, block)
    return DualCrossedElement(F.spec, F.values[idx], beta_modes(g, F.modes), F.action)


def dual_crossed_product(F: DualCrossedElement, G: DualCrossedElement) -> DualCrossedElement:
    """(F * G)(t, s) = int int F(u, y) e(<u, s - y>) alpha_y(G(t - u, s - y)) du dy.

    The inner integrand is the dual action hat-alpha_u applied to G(t - u, .),
    so this is the twisted convolution over R_n of functions with values in
    A x| R^n. Both integrals are periodic grid sums; the u-sum runs as a
    discrete convolution in t.
    """
    if not same_grid(F.spec, G.spec) or not F.action.same(G.action):
        raise ValueError("grid or action mismatch")
    if F.action.J is not None:
        raise ValueError("only the undeformed coefficient product is supported")
    spec, d = F.spec, F.spec.dim
    N = spec.size
    t_axes = tuple(range(d))
    s_axes = tuple(range(d, 2 * d))
    tcell = spec.dual().cell
    out_modes = sumset(F.modes, G.modes)
    index = {mode_key(m): i for i, m in enumerate(out_modes)}
    out = np.zeros((N,) * (2 * d) + (len(out_modes),), dtype=complex)
    c = _centered_index(N, d)
    u_pts = spec.dual().points()  # (N,)*d + (d,)
    s_pts = spec.points()
    y_list = c.reshape(-1, d)
    for yc in y_list:
        y = yc * spec.h
        y_idx = tuple((yc + N // 2) % N)
        # e(<u, s - y>) on the (u, s) grid, with s - y periodic
        diff = s_pts - y
        mod = e(np.einsum("...i,...i->...", u_pts.reshape((N,) * d + (1,) * d + (d,)),
                          diff.reshape((1,) * d + (N,) * d + (d,))))
        shift = tuple(int(v) for v in yc)
        for i, m in enumerate(F.modes):
            a = F.values[(slice(None),) * d + y_idx + (i,)]  # F_m(u, y), function of u
            if not np.any(a):
                continue
            A = a.reshape((N,) * d + (1,) * d) * mod
            fa = np.fft.fftn(A, axes=t_axes)
            for j, k in enumerate(G.modes):
                gk = G.values[(Ellipsis, j)]
                # alpha_y(U_k) and the s-shift s -> s - y on the discrete torus
                B = np.roll(gk, shift, axis=s_axes) * F.action.phase(y, k[None, :])[0]
                conv = np.fft.ifftn(fa * np.fft.fftn(B, axes=t_axes), axes=t_axes)
                # both t grids are centered: shift the cyclic convolution back by N/2
                conv = np.roll(conv, tuple([N // 2] * d), axis=t_axes)
                out[(Ellipsis, index[mode_key(m + k)])] += conv * tcell * spec.cell
    return DualCrossedElement(spec, out, out_modes, F.action)


def takai_map(F: DualCrossedElement) -> SmoothKernel:
    """Phi(F)(s, r) = int alpha_r^{-1}(F(t, s)) e(<r - s, t>) dt.

    The t-integral is the inverse transform of F in its first variable,
    evaluated at r - s on the discrete torus; alpha_r^{-1} multiplies mode m
    by the inverse of its alpha-phase at r.
    """
    spec, d = F.spec, F.spec.dim
    N = spec.size
    Fc = F.inverse_t_transform()  # (u, s, K)
    c = _centered_index(N, d)
    s = c.reshape((N,) * d + (1,) * d + (d,))
    r = c.reshape((1,) * d + (N,) * d + (d,))
    u = (r - s + N // 2) % N
    s_idx = np.broadcast_to(s + N // 2, u.shape)
    idx = tuple(u[..., i] for i in range(d)) + tuple(s_idx[..., i] for i in range(d))
    vals = Fc[idx]
    r_pts = (np.broadcast_to(r, u.shape) * spec.h).astype(float)
    vals = vals / F.action.phase(r_pts, F.modes)
    return SmoothKernel(spec, vals, F.modes.copy())
