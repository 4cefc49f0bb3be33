"""Symbols, the normalizing function and the dual-Dirac symbol on grids.

The normalizing function is

    chi(lam) = int g(s) sin(lam s) / s ds,   g(s) = exp(1 - 1/(1 - (s/sigma)^2)) / pi

on |s| < sigma, so that chi_hat(s) = -i g(s)/s and chi(+-inf) = +-pi g(0) = +-1.
All s-integrals use the symmetric midpoint rule on [-sigma, sigma]; the
integrand is smooth and vanishes to infinite order at the ends, so the rule
is spectrally accurate.

Symbol values are dense arrays of shape (..., K, C): K torus modes (the
algebra leg) times C = 2**c Clifford coefficients. The operator of a symbol
rho = sum_p rho_p U_p acts by

    D_rho(u)(t) = sum_p alpha_{-t}(U_p) F^{-1}[rho_p(-eta) u^(eta)](t),

the Fourier-multiplier reading of the defining double integral. In the
expansions below the derivation delta is normalized as
delta~ = -delta / (2 pi), i.e. delta~ U_m = i s m U_m for the action alpha^s.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from math import factorial
from typing import Callable

import numpy as np
from scipy import special

from .clifford import blade_grades, h_derivative, multiply_arrays
from .crossed_rn import RnAction, RnCrossedElement
from .finite_group import CyclicAction
from .grid import DecayReport, GridFunction, GridSpec, QuadratureSpec, decay_order, fourier, osc_integral
from .nctorus import TorusElement, mode_key, star_phase_matrix, sumset

DEFAULT_SIGMA = 14.0
DEFAULT_NODES = 8192
LAMBDA_TEST = 50.0
SCHWARTZ_THRESHOLD = 4.0
DECAY_WINDOW = (5.0, 40.0)
_CHUNK = 1 << 22


class ResolutionWarning(UserWarning):
    """Spectrum of the input is not resolved by the grid."""


# --------------------------------------------------------- normalizing function


@dataclass(frozen=True, eq=False)
class NormalizingFunction:
    """chi with compactly supported Fourier transform, support radius ``sigma``.

    Parameters
    ----------
    sigma : float
        Support radius of chi_hat.
    nodes : int
        Midpoint nodes on (0, sigma).
    lam_test : float
        Positivity of chi is checked on (0, lam_test].
    """

    sigma: float
    nodes: int = DEFAULT_NODES
    lam_test: float = LAMBDA_TEST

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.nodes < 16:
            raise ValueError("too few nodes")

    def g(self, s):
        s = np.asarray(s, dtype=float)
        u = (s / self.sigma) ** 2
        inside = u < 1
        safe = np.where(inside, u, 0.0)
        return np.where(inside, np.exp(1 - 1 / (1 - safe)) / math.pi, 0.0)

    def half_nodes(self, nodes: int | None = None):
        """Midpoint nodes on (0, sigma) and their (uniform) weights."""
        m = self.nodes if nodes is None else int(nodes)
        step = self.sigma / m
        s = (np.arange(m) + 0.5) * step
        return s, np.full(m, step)

    def chi_hat(self, s):
        s = np.asarray(s, dtype=float)
        return -1j * self.g(s) / s

    def _weights(self):
        s, w = self.half_nodes()
        # both halves of [-sigma, sigma] folded onto s > 0
        return s, 2 * w * self.g(s)

    def _integrate(self, lam, kernel: Callable) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        flat = np.abs(lam).ravel()
        uniq, inv = np.unique(flat, return_inverse=True)
        s, gw = self._weights()
        step = self.sigma / self.nodes
        if uniq.size and step * uniq[-1] > math.pi / 2:
            raise ValueError(f"{self.nodes} nodes undersample |lambda| = {uniq[-1]:.4g}")
        out = np.empty(uniq.size)
        rows = max(1, _CHUNK // s.size)
        for a in range(0, uniq.size, rows):
            lt = uniq[a:a + rows, None]
            out[a:a + rows] = kernel(lt, s[None, :]) @ gw
        return out[inv].reshape(lam.shape)

    def __call__(self, lam):
        """chi(lam); odd by construction (evaluated at |lam|, sign restored)."""
        lam = np.asarray(lam, dtype=float)
        val = self._integrate(lam, lambda l, s: np.sin(l * s) / s)
        return np.sign(lam) * val

    def over_r(self, r):
        """chi(r) / r, continuous at r = 0 with value 2 int_0^sigma g."""
        return self._integrate(r, lambda l, s: np.sinc(l * s / math.pi))

    def derivative(self, lam):
        """chi'(lam) = int g(s) cos(lam s) ds (even)."""
        return self._integrate(lam, lambda l, s: np.cos(l * s))

    def moment(self, r, order: int, power: int):
        """int g(s) s^power h^(order)(s r) ds with h(y) = sin(y)/y."""
        sgn = 1.0 if (power + order) % 2 == 0 else 0.0  # odd integrands vanish on the symmetric rule
        return sgn * self._integrate(r, lambda l, s: s**power * h_derivative(order, l * s))

    def dirichlet_limit(self) -> float:
        return math.pi * float(self.g(0.0))

    def validate(self, samples: int = 5000):
        """Checks run by :func:`build_chi`; returns the positivity sample."""
        if abs(self.dirichlet_limit() - 1) > 1e-14:
            raise ValueError("profile is not normalized: pi g(0) != 1")
        lam = np.linspace(self.lam_test / samples, self.lam_test, samples)
        vals = self(lam)
        if np.any(vals <= 0):
            bad = lam[np.argmax(vals <= 0)]
            raise ValueError(f"chi is not positive on (0, {self.lam_test}]: fails at {bad:.4g}")
        if self(0.0) != 0:
            raise ValueError("chi(0) != 0")
        return lam, vals

    @lru_cache(maxsize=8)
    def on_panels(self, R: float, width: float, points: int = 24):
        """Composite Gauss-Legendre nodes on [0, R] with chi sampled on them."""
        panels = max(1, int(math.ceil(R / width)))
        x, w = np.polynomial.legendre.leggauss(points)
        edges = np.linspace(0, R, panels + 1)
        a, b = edges[:-1, None], edges[1:, None]
        r = ((b - a) / 2 * x[None, :] + (a + b) / 2).ravel()
        wr = ((b - a) / 2 * w[None, :]).ravel()
        return r, wr, self(r)


def build_chi(sigma: float = DEFAULT_SIGMA, nodes: int = DEFAULT_NODES, lam_test: float = LAMBDA_TEST) -> NormalizingFunction:
    """Construct and validate the normalizing function with support radius ``sigma``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    chi = NormalizingFunction(float(sigma), int(nodes), float(lam_test))
    chi.validate()
    return chi


def schwartz_profile(chi: NormalizingFunction, lo: float = 5.0, hi: float = 50.0, power: int = 6, samples: int = 2000):
    """(1 + lam)^power |chi(lam)^2 - 1| sampled on [lo, hi]."""
    lam = np.linspace(lo, hi, samples)
    return lam, (1 + lam) ** power * np.abs(chi(lam) ** 2 - 1)


# ------------------------------------------------------------------ symbols


def _fd_weights(order: int, half: int = 3) -> np.ndarray:
    # central stencil on -half..half exact for polynomials of degree 2*half
    pts = np.arange(-half, half + 1, dtype=float)
    A = np.vander(pts, increasing=True).T
    rhs = np.zeros(pts.size)
    rhs[order] = factorial(order)
    return np.linalg.solve(A, rhs)


@dataclass(frozen=True, eq=False)
class Symbol:
    """xi -> value in (torus modes) x (Clifford), of order ``order``.

    ``fn(xi)`` maps points of shape (..., n) to arrays (..., K, 2**clifford).
    ``deriv(xi, k)`` optionally returns the derivative for a multi-index k;
    otherwise nested central differences with step ``fd_step`` are used.
    """

    n: int
    order: float
    fn: Callable
    modes: np.ndarray
    clifford: int = 0
    deriv: Callable | None = None
    fd_step: float = 1e-2
    name: str = "symbol"

    def __post_init__(self):
        m = np.asarray(self.modes, dtype=np.int64).reshape(-1, self.n)
        object.__setattr__(self, "modes", m)

    @property
    def C(self) -> int:
        return 1 << self.clifford

    def __call__(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        out = np.asarray(self.fn(xi), dtype=complex)
        want = xi.shape[:-1] + (len(self.modes), self.C)
        if out.shape != want:
            raise ValueError(f"symbol returned shape {out.shape}, expected {want}")
        return out

    def derivative(self, xi, k) -> np.ndarray:
        k = tuple(int(v) for v in k)
        if len(k) != self.n or min(k) < 0:
            raise ValueError("bad multi-index")
        if sum(k) == 0:
            return self(xi)
        if self.deriv is not None:
            return np.asarray(self.deriv(np.asarray(xi, dtype=float), k), dtype=complex)
        xi = np.asarray(xi, dtype=float)
        h = self.fd_step
        terms = []
        for axis, order in enumerate(k):
            if order:
                w = _fd_weights(order)
                terms.append([(j - 3, c / h**order) for j, c in enumerate(w) if c != 0])
            else:
                terms.append([(0, 1.0)])
        out = 0
        for combo in product(*terms):
            shift = np.array([j for j, _ in combo], dtype=float) * h
            coef = np.prod([c for _, c in combo])
            out = out + coef * self(xi + shift)
        return out


def _as_modes(values: np.ndarray, modes, target) -> np.ndarray:
    # re-index the mode axis (-2) onto a target mode list
    lookup = {mode_key(m): i for i, m in enumerate(modes)}
    shape = values.shape[:-2] + (len(target), values.shape[-1])
    out = np.zeros(shape, dtype=complex)
    for j, m in enumerate(target):
        i = lookup.get(mode_key(m))
        if i is not None:
            out[..., j, :] = values[..., i, :]
    return out


def _clifford_rank(a: int, b: int) -> int:
    if a and b and a != b:
        raise ValueError("Clifford ranks differ")
    return max(a, b)


def _lift(values: np.ndarray, c_from: int, c_to: int) -> np.ndarray:
    # scalar Clifford part -> rank c_to
    if c_from == c_to:
        return values
    out = np.zeros(values.shape[:-1] + (1 << c_to,), dtype=complex)
    out[..., 0] = values[..., 0]
    return out


def coefficient_product(x: np.ndarray, mx, cx: int, y: np.ndarray, my, cy: int, J=None):
    """Product of dense (..., K, C) coefficient arrays in A_J tensor Cl.

    Returns (values, modes, clifford rank).
    """
    c = _clifford_rank(cx, cy)
    x, y = _lift(x, cx, c), _lift(y, cy, c)
    out_modes = sumset(mx, my)
    index = {mode_key(m): i for i, m in enumerate(out_modes)}
    ph = star_phase_matrix(mx, my, J)
    shape = np.broadcast_shapes(x.shape[:-2], y.shape[:-2]) + (len(out_modes), 1 << c)
    out = np.zeros(shape, dtype=complex)
    for i, m in enumerate(mx):
        for j, k in enumerate(my):
            a, b = x[..., i, :], y[..., j, :]
            prod = multiply_arrays(a, b, c) if c else a * b
            out[..., index[mode_key(m + k)], :] += ph[i, j] * prod
    return out, out_modes, c


def clifford_adjoint_signs(c: int) -> np.ndarray:
    k = blade_grades(c)
    return np.where((k * (k - 1) // 2) % 2, -1.0, 1.0)


def coefficient_adjoint(x: np.ndarray, modes, c: int):
    """(a U_p tensor e_A)* = conj(a) U_{-p} tensor e_A*, on dense arrays."""
    signs = clifford_adjoint_signs(c)
    out = np.conj(x) * signs
    return out, -np.asarray(modes)


def delta_power(values: np.ndarray, modes, k, action: RnAction) -> np.ndarray:
    """delta~^k on the mode axis: multiplication by prod_j (i s m_j)^{k_j}."""
    if action.kind == "trivial":
        return values if sum(k) == 0 else np.zeros_like(values)
    m = np.asarray(modes, dtype=float)
    fac = np.prod((1j * action.scale * m) ** np.asarray(k, dtype=float), axis=1)
    return values * fac[:, None]


def multi_indices(n: int, total: int):
    return [k for k in product(range(total + 1), repeat=n) if sum(k) == total]


def _kfact(k) -> int:
    return math.prod(factorial(v) for v in k)


def symbol_compose(r1: Symbol, r2: Symbol, N: int, action: RnAction) -> Symbol:
    """Truncated expansion sum_{|k| <= N} (i^|k| / k!) r1^(k)(xi) delta~^k(r2(xi))."""
    if not 0 <= N <= 3:
        raise ValueError("truncation order must lie in 0..3")
    if r1.n != r2.n:
        raise ValueError("dimension mismatch")
    c = _clifford_rank(r1.clifford, r2.clifford)
    out_modes = sumset(r1.modes, r2.modes)
    J = action.J

    def fn(xi):
        total = 0
        for order in range(0, N + 1):
            for k in multi_indices(r1.n, order):
                if action.kind == "trivial" and order:
                    continue
                a = r1.derivative(xi, k)
                b = delta_power(r2(xi), r2.modes, k, action)
                prod_, modes, _ = coefficient_product(a, r1.modes, r1.clifford, b, r2.modes, r2.clifford, J)
                total = total + (1j**order / _kfact(k)) * _as_modes(prod_, modes, out_modes)
        return total

    return Symbol(r1.n, r1.order + r2.order, fn, out_modes, c, None, r1.fd_step, f"compose{N}")


def symbol_adjoint(r: Symbol, N: int, action: RnAction) -> Symbol:
    """Truncated expansion sum_{|k| <= N} (i^|k| / k!) delta~^k(r^(k)(xi)*)."""
    if not 0 <= N <= 3:
        raise ValueError("truncation order must lie in 0..3")
    adj_modes = -r.modes

    def fn(xi):
        total = 0
        for order in range(0, N + 1):
            if action.kind == "trivial" and order:
                break
            for k in multi_indices(r.n, order):
                a, modes = coefficient_adjoint(r.derivative(xi, k), r.modes, r.clifford)
                total = total + (1j**order / _kfact(k)) * delta_power(a, modes, k, action)
        return total

    return Symbol(r.n, r.order, fn, adj_modes, r.clifford, None, r.fd_step, f"adjoint{N}")


def constant_symbol(n: int, values, modes, clifford: int = 0) -> Symbol:
    """xi-independent symbol with dense coefficient array ``values`` (K, C)."""
    v = np.asarray(values, dtype=complex)

    def fn(xi):
        return np.broadcast_to(v, np.asarray(xi).shape[:-1] + v.shape).copy()

    def deriv(xi, k):
        return np.zeros(np.asarray(xi).shape[:-1] + v.shape, dtype=complex)

    return Symbol(n, 0.0, fn, modes, clifford, deriv, name="constant")


def gaussian_symbol(n: int, center, width: float, values, modes, clifford: int = 0) -> Symbol:
    """exp(-|xi - center|^2 / (2 width^2)) times a constant coefficient array; analytic derivatives."""
    center = np.asarray(center, dtype=float).reshape(n)
    v = np.asarray(values, dtype=complex)
    he = np.polynomial.hermite_e

    def fn(xi):
        z = (xi - center) / width
        g = np.exp(-0.5 * np.sum(z**2, axis=-1))
        return g[..., None, None] * v

    def deriv(xi, k):
        z = (xi - center) / width
        g = np.exp(-0.5 * np.sum(z**2, axis=-1))
        fac = np.ones_like(g)
        for j, kj in enumerate(k):
            if kj:
                c = np.zeros(kj + 1)
                c[kj] = 1
                fac = fac * (-1) ** kj * he.hermeval(z[..., j], c) / width**kj
        return (g * fac)[..., None, None] * v

    return Symbol(n, -math.inf, fn, modes, clifford, deriv, name="gaussian")


def polynomial_symbol(n: int, terms: dict, modes, clifford: int = 0) -> Symbol:
    """sum over exponent tuples e of xi^e times coefficient arrays (K, C); analytic derivatives."""
    terms = {tuple(k): np.asarray(v, dtype=complex) for k, v in terms.items()}
    degree = max(sum(k) for k in terms)

    def mono(xi, e, k):
        out = np.ones(xi.shape[:-1], dtype=float)
        for j, (ej, kj) in enumerate(zip(e, k)):
            if kj > ej:
                return None
            out = out * (factorial(ej) / factorial(ej - kj)) * xi[..., j] ** (ej - kj)
        return out

    def deriv(xi, k):
        xi = np.asarray(xi, dtype=float)
        total = 0
        for e, v in terms.items():
            m = mono(xi, e, k)
            if m is not None:
                total = total + m[..., None, None] * v
        if isinstance(total, int):
            first = next(iter(terms.values()))
            return np.zeros(xi.shape[:-1] + first.shape, dtype=complex)
        return total

    return Symbol(n, float(degree), lambda xi: deriv(xi, (0,) * n), modes, clifford, deriv, name="polynomial")


# ------------------------------------------------------- dual Dirac symbol


def _sigma_coeffs(chi: NormalizingFunction, xi: np.ndarray) -> np.ndarray:
    n = xi.shape[-1]
    r = np.linalg.norm(xi, axis=-1)
    f = chi.over_r(r)
    out = np.zeros(xi.shape[:-1] + (1, 1 << n), dtype=complex)
    for j in range(n):
        out[..., 0, 1 << j] = xi[..., j] * f
    return out


def sigma_derivative(chi: NormalizingFunction, xi, j: int) -> np.ndarray:
    """d Sigma / d xi_j by differentiating exp(i s c(xi)) under the chi_hat integral.

    With H(s, xi) = h(s|xi|), h(y) = sin(y)/y:
      d/dxi_j exp(i s c(xi)) = -s^2 H xi_j + i s (e_j H + c(xi) dH/dxi_j),
    and chi_hat(s) i s = g(s). The scalar part integrates an odd function of s
    and vanishes; it is evaluated anyway on the symmetric rule.
    """
    xi = np.asarray(xi, dtype=float)
    n = xi.shape[-1]
    if not 0 <= j < n:
        raise ValueError("axis out of range")
    r = np.linalg.norm(xi, axis=-1)
    I0 = chi.moment(r, 0, 0)  # int g h(sr)
    I1 = chi.moment(r, 1, 1)  # int g s h'(sr)
    scalar = 1j * xi[..., j] * chi.moment(r, 0, 1)  # int chi_hat (-s^2 H xi_j) = i xi_j int g s h(sr)
    safe = np.where(r > 0, r, 1.0)
    radial = np.where(r > 0, I1 / safe, 0.0)
    out = np.zeros(xi.shape[:-1] + (1, 1 << n), dtype=complex)
    out[..., 0, 0] = scalar
    out[..., 0, 1 << j] += I0
    for i in range(n):
        out[..., 0, 1 << i] += xi[..., i] * xi[..., j] * radial
    return out


def sigma_symbol(chi: NormalizingFunction, n: int) -> Symbol:
    """Sigma(xi) = 1 tensor chi(c(xi)) = c(xi) chi(|xi|) / |xi|, order 0."""

    def deriv(xi, k):
        if sum(k) == 1:
            return sigma_derivative(chi, xi, k.index(1))
        return Symbol(n, 0.0, lambda x: _sigma_coeffs(chi, x), np.zeros((1, n)), n, None, 1e-3).derivative(xi, k)

    return Symbol(n, 0.0, lambda xi: _sigma_coeffs(chi, xi), np.zeros((1, n), dtype=np.int64), n, deriv, 1e-3, "Sigma")


def derivative_grid(chi: NormalizingFunction, n: int, j: int, spec: GridSpec) -> GridFunction:
    vals = sigma_derivative(chi, spec.points(), j)[..., 0, :]
    return GridFunction(spec, vals, "clifford")


def symbol_derivative_decay(chi: NormalizingFunction, n: int, j: int, window=DECAY_WINDOW,
                            spec: GridSpec | None = None, noise_floor: float = 1e-13) -> DecayReport:
    """Decay of d Sigma / d xi_j over ``window`` (xi-space grid)."""
    if n < 1:
        raise ValueError("n must be positive")
    lo, hi = window
    if spec is None:
        spec = GridSpec(n, hi, 0.5)
    if hi - lo < 6 * spec.h:
        raise ValueError("window too small")
    return decay_order(derivative_grid(chi, n, j, spec), window, noise_floor)


def h_multi_derivative(chi: NormalizingFunction, r, omega, J) -> np.ndarray:
    """int kappa(s) d^J_xi H(s, xi) ds at xi = r omega, |kappa| = g, for |J| <= 2."""
    J = tuple(J)
    omega = np.asarray(omega, dtype=float)
    total = sum(J)
    if total == 0:
        return chi.moment(r, 0, 0)
    if total == 1:
        i = J.index(1)
        return omega[i] * chi.moment(r, 1, 1)
    if total == 2:
        idx = [i for i, v in enumerate(J) for _ in range(v)]
        a, b = idx
        delta = 1.0 if a == b else 0.0
        r = np.asarray(r, dtype=float)
        return omega[a] * omega[b] * chi.moment(r, 2, 2) + (delta - omega[a] * omega[b]) * chi.moment(r, 1, 1) / r
    raise ValueError("only |J| <= 2")


def boundedness_sweep(chi: NormalizingFunction, lmax: int = 4, n: int = 2, window=DECAY_WINDOW, rays: int = 8,
                      samples: int = 64, tol: float = 0.25) -> list:
    """Growth rate of |xi|^l |int kappa d^J H ds| along rays, for l <= lmax, |J| <= 2.

    The rate is the fitted log-log slope of the running maximum taken
    outward from the inner radius; a quantity counts as bounded when the
    rate does not exceed ``tol``.
    """
    r = np.geomspace(window[0], window[1], samples)
    angles = np.arange(rays) * 2 * math.pi / rays + 0.1
    rows = []
    Js = [k for t in range(3) for k in multi_indices(n, t)]
    for J in Js:
        mag = np.zeros_like(r)
        for a in angles:
            omega = np.zeros(n)
            omega[0] = math.cos(a)
            if n > 1:
                omega[1] = math.sin(a)
            mag = np.maximum(mag, np.abs(h_multi_derivative(chi, r, omega, J)))
        for l in range(lmax + 1):
            q = r**l * mag
            env = np.maximum.accumulate(q)  # running max from the inner radius exposes growth
            slope = float(np.polyfit(np.log(r), np.log(env), 1)[0])
            rows.append({"l": l, "J": list(J), "sup": float(q.max()), "growth": slope, "bounded": slope <= tol})
    return rows


# ----------------------------------------------------- Fourier transforms


def _hankel_nodes(chi: NormalizingFunction, rho_max: float, R: float, wavelengths: float = 3.0):
    # 24-point panels spanning three periods of J(2 pi rho r) at the largest rho
    width = min(0.5, wavelengths / max(rho_max, 1e-9))
    return chi.on_panels(round(R, 9), round(width, 12))


class HankelIntegrand:
    """eps -> S_eps(rho) on a fixed set of radii, the regularized radial transform of Sigma.

    S_eps(rho) = -2 pi i rho^{-n/2} int chi(r) r^{n/2} J_{n/2}(2 pi rho r) exp(-eps r^2 / 2) dr,
    so that the regularized transform is c(x) S_eps(|x|). Nodes are composite
    Gauss-Legendre panels out to the radius where the weakest regularizer
    has decayed below exp(-40).
    """

    def __init__(self, chi: NormalizingFunction, rho, n: int = 2, eps_min: float = 0.05):
        rho = np.asarray(rho, dtype=float)
        self.shape = rho.shape
        uniq, self.inv = np.unique(rho.ravel(), return_inverse=True)
        pos = uniq > 0
        R = math.sqrt(2 * 40 / eps_min)
        r, w, chir = _hankel_nodes(chi, float(uniq.max()) if uniq.size else 1.0, R)
        nu = n / 2
        self.r = r
        self.base = chir * r**nu * w
        self.bess = np.zeros((uniq.size, r.size))
        rows = max(1, _CHUNK // r.size)
        for a in range(0, uniq.size, rows):
            self.bess[a:a + rows] = special.jv(nu, 2 * math.pi * uniq[a:a + rows, None] * r[None, :])
        self.pref = np.where(pos, -2j * math.pi * np.where(pos, uniq, 1.0) ** (-nu), 0.0)

    def unique_values(self, eps: float) -> np.ndarray:
        return self.pref * (self.bess @ (self.base * np.exp(-eps * self.r**2 / 2)))

    def __call__(self, eps: float) -> np.ndarray:
        return self.expand(self.unique_values(eps))

    def expand(self, v) -> np.ndarray:
        return np.asarray(v)[self.inv].reshape(self.shape)

    def roundoff(self) -> np.ndarray:
        """Machine epsilon times the absolute integral, per radius."""
        return self.expand(64 * np.finfo(float).eps * np.abs(self.pref) * (np.abs(self.bess) @ np.abs(self.base)))


def sigma_hat_radial(chi: NormalizingFunction, rho, n: int = 2, quad: QuadratureSpec | None = None):
    """S(rho) with Sigma^(x) = c(x) S(|x|), extrapolated to vanishing regularizer.

    Returns the :class:`OscResult` and a roundoff floor for each rho.
    """
    quad = QuadratureSpec() if quad is None else quad
    hk = HankelIntegrand(chi, rho, n, min(quad.epsilon_sequence))
    res = osc_integral(hk.unique_values, quad)
    res.value = hk.expand(res.value)
    res.error = hk.expand(res.error)
    return res, hk.roundoff()


def _torus_increment(a: TorusElement, x: np.ndarray):
    # alpha_x(a) - a as dense (..., K)
    modes = np.array(a.support(), dtype=np.int64).reshape(-1, a.n)
    coef = np.array([a[mode_key(m)] for m in modes], dtype=complex)
    ph = np.exp(-2j * math.pi * (x @ modes.T)) - 1
    return modes, ph * coef


def commutator_kernel_spec(window=DECAY_WINDOW, h: float = 1.0, n: int = 2) -> GridSpec:
    return GridSpec(n, window[1], h)


def dirac_commutator_kernel(a: TorusElement, chi: NormalizingFunction, spec: GridSpec | None = None,
                            quad: QuadratureSpec | None = None):
    """x -> Sigma^(x)(alpha_x(a) - a), torus tensor Clifford valued.

    Returns the grid function and its noise floor (regularization error
    estimate plus roundoff, maximized over the grid).
    """
    n = a.n
    spec = commutator_kernel_spec(n=n) if spec is None else spec
    x = spec.points()
    rho = np.linalg.norm(x, axis=-1)
    res, floor = sigma_hat_radial(chi, rho, n, quad)
    modes, inc = _torus_increment(a, x)
    sig = np.zeros(spec.shape + (1 << n,), dtype=complex)
    for j in range(n):
        sig[..., 1 << j] = x[..., j] * res.value
    vals = inc[..., :, None] * sig[..., None, :]
    scale = (np.abs(inc).max(axis=-1) if inc.size else 0) * rho
    noise = float(np.max((10 * np.abs(res.error) + floor) * scale)) if vals.size else 0.0
    return GridFunction(spec, vals, "torus*clifford", modes), noise


def defect_symbol(chi: NormalizingFunction, spec: GridSpec) -> GridFunction:
    """xi -> 1 - chi(|xi|)^2 on a xi-grid."""
    return GridFunction(spec, 1 - chi(spec.radii()) ** 2)


def dirac_defect_kernel(a: TorusElement, chi: NormalizingFunction, spec: GridSpec | None = None, R: float = 70.0):
    """Fourier transform of xi -> a (1 - chi(|xi|)^2), torus valued.

    The radial transform 2 pi rho^{1-n/2} int f(r) r^{n/2} J_{n/2-1}(2 pi rho r) dr
    converges absolutely; it is truncated at ``R`` and the tail bound joins
    the roundoff floor in the returned noise level.
    """
    n = a.n
    spec = commutator_kernel_spec((5.0, 50.0), 1.0, n) if spec is None else spec
    rho = spec.radii()
    uniq, inv = np.unique(rho.ravel(), return_inverse=True)
    r, w, chir = _hankel_nodes(chi, float(uniq.max()), R)
    f = 1 - chir**2
    nu = n / 2 - 1
    base = f * r ** (n / 2) * w
    out = np.empty(uniq.size)
    absout = np.empty(uniq.size)
    rows = max(1, _CHUNK // r.size)
    for i in range(0, uniq.size, rows):
        p = uniq[i:i + rows, None]
        safe = np.where(p > 0, p, 1.0)
        jb = special.jv(nu, 2 * math.pi * p * r[None, :]) * safe ** (1 - n / 2)
        if n != 2:
            # rho^{1-n/2} J_{n/2-1}(2 pi rho r) has a finite limit at rho = 0
            lim = (math.pi * r[None, :]) ** nu / math.gamma(nu + 1) if nu >= 0 else None
            jb = np.where(p > 0, jb, lim)
        out[i:i + rows] = 2 * math.pi * (jb @ base)
        absout[i:i + rows] = 2 * math.pi * (np.abs(jb) @ np.abs(base))
    tail = abs(float(f[-1])) * R ** (n + 1)
    noise = float(64 * np.finfo(float).eps * absout.max() + tail)
    radial = out[inv].reshape(rho.shape)
    modes = np.array(a.support(), dtype=np.int64).reshape(-1, n)
    coef = np.array([a[mode_key(m)] for m in modes], dtype=complex)
    vals = radial[..., None] * coef
    return GridFunction(spec, vals, "torus", modes), noise * (np.abs(coef).max() if coef.size else 0.0)


def sigma_hat_grid_oracle(chi: NormalizingFunction, eps: float, L: float = 16.0, h: float = 1 / 16) -> GridFunction:
    """Regularized Sigma^ by a direct 2-D grid transform of Sigma(xi) exp(-eps |xi|^2 / 2).

    Independent of the Hankel reduction; used as a cross-check at fixed eps.
    """
    spec = GridSpec(2, L, h)
    xi = spec.points()
    vals = _sigma_coeffs(chi, xi)[..., 0, :] * np.exp(-eps * np.sum(xi**2, -1) / 2)[..., None]
    return fourier(GridFunction(spec, vals, "clifford"), -1)


# ------------------------------------------------------------- operators


def apply_D(rho: Symbol, u: RnCrossedElement, check: bool = True) -> RnCrossedElement:
    """D_rho(u)(t) = sum_p alpha_{-t}(U_p) F^{-1}[rho_p(-eta) u^(eta)](t).

    ``rho`` is sampled on the dual grid of ``u``. A :class:`ResolutionWarning`
    is raised when the spectrum of u reaches the edge of the dual box, where
    the multiplier cannot be resolved.
    """
    if rho.n != u.action.n:
        raise ValueError("dimension mismatch")
    spec, d = u.spec, u.spec.dim
    c = _clifford_rank(rho.clifford, u.clifford)
    uvals = u.values if u.clifford else u.values[..., None]
    uvals = _lift(uvals, u.clifford, c)
    uhat = fourier(GridFunction(spec, uvals), -1)
    if check:
        edge = _edge_mass(uhat.values, d)
        if edge > 1e-8 * max(np.abs(uhat.values).max(), 1e-300):
            warnings.warn(f"spectrum of u reaches the dual box edge (relative {edge:.2e})", ResolutionWarning, stacklevel=2)
    eta = uhat.spec.points()
    mult = _lift(rho(-eta), rho.clifford, c)  # dual grid + (P, C)
    t = spec.points()
    out_modes = sumset(rho.modes, u.modes)
    index = {mode_key(m): i for i, m in enumerate(out_modes)}
    ph = star_phase_matrix(rho.modes, u.modes, u.action.J)
    out = np.zeros(spec.shape + (len(out_modes), 1 << c), dtype=complex)
    for i, p in enumerate(rho.modes):
        mp = mult[..., i, :]
        if not np.any(mp):
            continue
        # alpha_{-t}(U_p) is the inverse of the alpha-phase at t
        mod = 1 / u.action.phase(t, p[None, :])[..., 0]
        for j, q in enumerate(u.modes):
            v = uhat.values[..., j, :]
            prod_ = multiply_arrays(mp, v, c) if c else mp * v
            back = fourier(GridFunction(uhat.spec, prod_), +1).values
            out[..., index[mode_key(p + q)], :] += ph[i, j] * mod[..., None] * back
    if not (u.clifford or c):
        out = out[..., 0]
    kind = "torus*clifford" if c else "torus"
    return RnCrossedElement(GridFunction(spec, out, kind, out_modes), u.action, c)


def _edge_mass(values: np.ndarray, d: int) -> float:
    m = 0.0
    for ax in range(d):
        first = np.take(values, 0, axis=ax)
        m = max(m, float(np.abs(first).max()))
    return m


def grid_pairing(f: RnCrossedElement, g: RnCrossedElement) -> complex:
    """<f, g> = sum_m int <f_m(x), g_m(x)> dx with the Clifford coefficient inner product."""
    a, b = f._aligned(g)
    return complex(np.sum(np.conj(a.values) * b.values) * a.spec.cell)


def operator_defect(x: RnCrossedElement, y: RnCrossedElement) -> float:
    """Grid L2 norm of x - y."""
    diff = x - y
    return float(np.sqrt(np.sum(np.abs(diff.values) ** 2) * diff.spec.cell))


# ------------------------------------------------------ symbol conditions


@dataclass
class SeminormReport:
    order: float
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r["bounded"] for r in self.rows)


def _sphere_samples(n: int, radii, per_shell: int, seed: int = 7) -> np.ndarray:
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((per_shell, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return np.asarray(radii, dtype=float)[:, None, None] * d[None, :, :]


def symbol_seminorms(rho: Symbol, jmax: int = 2, shells=(1.0, 40.0), count: int = 24, per_shell: int = 8,
                     tol: float = 0.1) -> SeminormReport:
    """sup (1 + |xi|)^{|j| - m} |d^j rho| per shell, for |j| <= jmax.

    A multi-index passes when the weighted envelope does not grow along the
    shells (log-log slope at most ``tol``).
    """
    radii = np.geomspace(shells[0], shells[1], count)
    xi = _sphere_samples(rho.n, radii, per_shell)
    rep = SeminormReport(rho.order)
    for t in range(jmax + 1):
        for k in multi_indices(rho.n, t):
            vals = np.abs(rho.derivative(xi, k)).reshape(count, per_shell, -1).max(axis=(1, 2))
            weighted = (1 + radii) ** (t - rho.order) * vals
            env = np.maximum.accumulate(weighted[::-1])[::-1]
            ok = env > 0
            slope = float(np.polyfit(np.log(radii[ok]), np.log(env[ok]), 1)[0]) if ok.sum() > 1 else 0.0
            rep.rows.append({"j": list(k), "sup": float(weighted.max()), "growth": slope, "bounded": slope <= tol})
    return rep


def principal_part_check(rho: Symbol, rays: int = 8, lambdas=(4.0, 8.0, 16.0), tol: float = 1e-3) -> dict:
    """Cauchy test for lam^{-m} rho(lam omega) along ``rays`` directions."""
    xi = _sphere_samples(rho.n, [1.0], rays)[0]
    seq = [lam ** (-rho.order) * rho(lam * xi) for lam in lambdas]
    steps = [float(np.abs(b - a).max()) for a, b in zip(seq, seq[1:])]
    ok = steps[-1] <= tol and all(s1 <= s0 for s0, s1 in zip(steps, steps[1:]))
    return {"lambdas": list(lambdas), "steps": steps, "pass": bool(ok), "limit": seq[-1]}


def grading_anticommutator(rho: Symbol, xi) -> float:
    """max |eps(rho) v + rho eps(v)| over basis vectors v, pointwise in xi.

    eps is the Clifford grading; zero iff rho(xi) is odd.
    """
    c = rho.clifford
    vals = rho(xi)
    g = np.where(blade_grades(c) % 2, -1.0, 1.0)
    worst = 0.0
    for b in range(1 << c):
        v = np.zeros(1 << c)
        v[b] = 1
        left = g * multiply_arrays(vals, v, c)  # eps(rho v)
        right = multiply_arrays(vals, g * v, c)  # rho eps(v)
        worst = max(worst, float(np.abs(left + right).max()))
    return worst


# ----------------------------------------------------------- G-invariance


def invariant_frame(G: CyclicAction) -> np.ndarray:
    """P with P^T P equal to the invariant Gram matrix of G."""
    return np.linalg.cholesky(G.gram()).T


def sigma_metric(chi: NormalizingFunction, P: np.ndarray, xi) -> np.ndarray:
    """Sigma in the metric P^T P: xi' = P^{-T} xi in orthonormal coordinates."""
    xi = np.asarray(xi, dtype=float)
    xp = xi @ np.linalg.inv(P)  # rows: (P^{-T} xi)^T
    return _sigma_coeffs(chi, xp)[..., 0, :]


def clifford_beta(R: np.ndarray, vec_coeffs: np.ndarray) -> np.ndarray:
    """Action e_j -> sum_i R_ij e_i on the vector part (input (..., 2**n) with only grade one)."""
    n = R.shape[0]
    v = np.stack([vec_coeffs[..., 1 << j] for j in range(n)], axis=-1)
    w = v @ R.T
    out = np.zeros_like(vec_coeffs)
    for i in range(n):
        out[..., 1 << i] = w[..., i]
    return out


def check_D_invariance(chi: NormalizingFunction, G: CyclicAction, samples: int = 100, seed: int = 0,
                       quad: QuadratureSpec | None = None, hat_spec: GridSpec | None = None) -> dict:
    """Defects of beta_g(Sigma(g^T xi)) = Sigma(xi) and Sigma^(g x) = beta_g(Sigma^(x)).

    beta_g acts on the Clifford generators by the orthogonal matrix
    P g P^{-1}; both checks run in the G-invariant metric P^T P.
    """
    rng = np.random.default_rng(seed)
    P = invariant_frame(G)
    Pinv = np.linalg.inv(P)
    xi = rng.uniform(-20, 20, size=(samples, 2))
    base = sigma_metric(chi, P, xi)
    hat_spec = GridSpec(2, 3.0, 0.25) if hat_spec is None else hat_spec
    x = hat_spec.points().reshape(-1, 2)

    def hat_at(points):
        # Sigma_M^(x) = |det P| c(Px) S(|Px|)
        pp = points @ P.T
        S, _ = sigma_hat_radial(chi, np.linalg.norm(pp, axis=-1), 2, quad)
        out = np.zeros(points.shape[:-1] + (4,), dtype=complex)
        for j in range(2):
            out[..., 1 << j] = abs(np.linalg.det(P)) * pp[..., j] * S.value
        return out

    hat_x = hat_at(x)
    rows = []
    for j, g in enumerate(G.elements()):
        R = P @ g @ Pinv
        moved = sigma_metric(chi, P, xi @ g)  # rows of xi @ g are (g^T xi)^T
        d_sym = float(np.abs(clifford_beta(R, moved) - base).max())
        d_hat = float(np.abs(hat_at(x @ g.T) - clifford_beta(R, hat_x)).max())
        rows.append({"element": j, "symbol_defect": d_sym, "transform_defect": d_hat,
                     "orthogonality": float(np.abs(R.T @ R - np.eye(2)).max())})
    return {"group": G.name, "rows": rows, "max_defect": max(max(r["symbol_defect"], r["transform_defect"]) for r in rows)}
