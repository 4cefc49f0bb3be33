"""Uniform box grids standing in for Schwartz functions on R^n.

Fourier conventions use e(s) = exp(2 pi i s) in the exponent, so the
transform needs no 2 pi prefactor and exp(-pi |x|^2) is its own transform.
Frequencies live on the dual grid of a spec: half width 1/(2h), step 1/(2L).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


def e(s):
    """e(s) = exp(2 pi i s)."""
    return np.exp(2j * np.pi * np.asarray(s, dtype=float))


@dataclass(frozen=True)
class GridSpec:
    """Box [-L, L)^dim sampled with step h.

    The number of points per axis, 2L/h, must be an even integer so the
    centered discrete transform is exact on the grid.
    """

    dim: int
    L: float
    h: float

    def __post_init__(self):
        if self.dim < 1 or self.L <= 0 or self.h <= 0:
            raise ValueError(f"invalid grid {self}")
        ratio = 2 * self.L / self.h
        count = round(ratio)
        if abs(ratio - count) > 1e-9 * max(1.0, ratio) or count % 2:
            raise ValueError(f"2L/h = {ratio} is not a positive even integer")

    @property
    def size(self) -> int:
        return round(2 * self.L / self.h)

    @property
    def shape(self) -> tuple:
        return (self.size,) * self.dim

    @property
    def cell(self) -> float:
        return self.h**self.dim

    def axis(self) -> np.ndarray:
        return (np.arange(self.size) - self.size // 2) * self.h

    def points(self) -> np.ndarray:
        """Coordinates with shape ``shape + (dim,)``, indexed 'ij'."""
        axes = np.meshgrid(*([self.axis()] * self.dim), indexing="ij")
        return np.stack(axes, axis=-1)

    def radii(self) -> np.ndarray:
        return np.linalg.norm(self.points(), axis=-1)

    def dual(self) -> "GridSpec":
        return GridSpec(self.dim, 1 / (2 * self.h), 1 / (2 * self.L))

    def refine(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.dim, self.L, self.h / factor)

    def index_of(self, x) -> np.ndarray:
        """Integer grid index of lattice coordinates (no bounds check)."""
        return np.rint(np.asarray(x) / self.h).astype(np.int64) + self.size // 2

    def to_dict(self) -> dict:
        return {"L": self.L, "h": self.h}


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a coefficient-algebra valued function on a grid.

    ``values`` has shape ``spec.shape + value_shape``. ``kind`` names the
    coefficient algebra: "scalar", "clifford", "torus", "matrix" or a
    combination such as "torus*clifford". For torus valued data ``modes`` is
    an integer array with one row per Fourier mode, matching the first value
    axis.
    """

    spec: GridSpec
    values: np.ndarray
    kind: str = "scalar"
    modes: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape[: self.spec.dim] != self.spec.shape:
            raise ValueError(f"values shape {v.shape} does not start with grid shape {self.spec.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function has non-finite values")
        object.__setattr__(self, "values", v)
        if self.modes is not None:
            m = np.asarray(self.modes, dtype=np.int64).reshape(len(self.modes), -1)
            if v.ndim <= self.spec.dim or v.shape[self.spec.dim] != len(m):
                raise ValueError("first value axis must index the modes")
            object.__setattr__(self, "modes", m)

    @property
    def value_shape(self) -> tuple:
        return self.values.shape[self.spec.dim :]

    def pointwise_norm(self) -> np.ndarray:
        flat = self.values.reshape(self.spec.shape + (-1,))
        return np.linalg.norm(flat, axis=-1)

    def replace(self, values=None, spec=None, modes=None) -> "GridFunction":
        return GridFunction(
            self.spec if spec is None else spec,
            self.values if values is None else values,
            self.kind,
            self.modes if modes is None else modes,
        )

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        if other.spec != self.spec or other.value_shape != self.value_shape:
            raise ValueError("grid functions live on different grids or algebras")
        if self.modes is not None and not np.array_equal(self.modes, other.modes):
            raise ValueError("mode sets differ")
        return self.replace(values=self.values - other.values)

    def max_norm(self) -> float:
        return float(self.pointwise_norm().max())

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.spec.cell))

    @classmethod
    def from_callable(cls, spec: GridSpec, fn: Callable, kind="scalar", modes=None):
        return cls(spec, np.asarray(fn(spec.points())), kind, modes)


# ---------------------------------------------------------------- seminorms


def central_difference(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """(f(x+h) - f(x-h)) / 2h; the result is two samples shorter on ``axis``."""
    hi = np.take(values, np.arange(2, values.shape[axis]), axis=axis)
    lo = np.take(values, np.arange(0, values.shape[axis] - 2), axis=axis)
    return (hi - lo) / (2 * h)


def seminorm(f: GridFunction, i: float = 0, j: Sequence[int] | None = None) -> float:
    """sup over the grid of (1 + |x|)^i ||D^j f(x)|| with central differences D."""
    dim = f.spec.dim
    j = tuple(j) if j is not None else (0,) * dim
    if len(j) != dim or any(k < 0 for k in j):
        raise ValueError(f"multi-index {j} does not match dimension {dim}")
    if any(2 * k >= f.spec.size for k in j):
        raise ValueError(f"multi-index {j} too large for {f.spec.size} points per axis")
    vals = f.values
    for axis, k in enumerate(j):
        for _ in range(k):
            vals = central_difference(vals, axis, f.spec.h)
    pts = f.spec.points()[tuple(slice(k, f.spec.size - k) for k in j)]
    weight = (1 + np.linalg.norm(pts, axis=-1)) ** i
    norms = np.linalg.norm(vals.reshape(pts.shape[:-1] + (-1,)), axis=-1)
    return float(np.max(weight * norms))


# ------------------------------------------------------------ decay fitting


@dataclass
class DecayReport:
    """Outcome of a radial decay fit.

    ``order`` is the negated log-log slope of the tail envelope. ``status`` is
    "fit" for an ordinary fit, "truncated" when part of the window sits below
    the noise floor (the order is then a lower bound), and "exceeds measurable
    range" when the whole window is below it (order is inf).
    """

    order: float
    status: str
    radii: np.ndarray
    values: np.ndarray
    residuals: np.ndarray
    window: tuple
    floor: float

    @property
    def measurable(self) -> bool:
        return self.status == "fit"

    def rows(self):
        for r, v, res in zip(self.radii, self.values, self.residuals):
            yield float(r), float(v), float(res)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["radius", "value", "fit_residual"])
            for r, v, res in self.rows():
                w.writerow([f"{r:.12e}", f"{v:.12e}", f"{res:.12e}"])


MIN_SHELLS = 6


def decay_order(
    f: GridFunction,
    window: tuple,
    noise_floor: float = 0.0,
    shell_width: float | None = None,
) -> DecayReport:
    """Polynomial decay rate of ``f`` over radial shells inside ``window``.

    For each shell radius r the envelope is the largest norm of ``f`` at radii
    in [r, window end], which makes the fit insensitive to zeros of
    oscillating tails. The order is minus the least-squares slope of
    log(envelope) against log(r). Shells whose envelope does not exceed
    ``noise_floor`` (or underflows) carry no information and are excluded.
    """
    lo, hi = map(float, window)
    width = f.spec.h if shell_width is None else shell_width
    if lo <= 0 or hi <= lo:
        raise ValueError(f"bad window {window}")
    if hi > f.spec.L + 1e-12:
        raise ValueError(f"window end {hi} lies outside the grid half width {f.spec.L}")
    count = int(math.floor((hi - lo) / width + 1e-9))
    if count < MIN_SHELLS:
        raise ValueError(f"window {window} holds {count} shells of width {width}, need {MIN_SHELLS}")
    r = f.spec.radii().ravel()
    norms = f.pointwise_norm().ravel()
    keep = (r >= lo) & (r <= hi)
    r, norms = r[keep], norms[keep]
    order = np.argsort(r, kind="stable")
    r, norms = r[order], norms[order]
    tail = np.maximum.accumulate(norms[::-1])[::-1]
    edges = lo + width * np.arange(count)
    pos = np.searchsorted(r, edges)
    valid = pos < r.size
    edges, pos = edges[valid], pos[valid]
    env = tail[pos]
    floor = max(noise_floor, np.finfo(float).tiny)
    above = env > floor
    resid = np.full(env.shape, np.nan)
    if not np.any(above):
        return DecayReport(math.inf, "exceeds measurable range", edges, env, resid, (lo, hi), floor)
    x, y = np.log(edges[above]), np.log(env[above])
    if above.sum() >= 2:
        slope, icpt = np.polyfit(x, y, 1)
        resid[above] = y - (slope * x + icpt)
        fitted = -slope
    else:
        fitted = 0.0
    if above.all():
        return DecayReport(float(fitted), "fit", edges, env, resid, (lo, hi), floor)
    # the envelope reaches the floor inside the window: decay at least this fast
    first = np.argmax(above)
    last = np.nonzero(above)[0][-1]
    cut = edges[min(last + 1, edges.size - 1)]
    bound = math.log(env[first] / floor) / math.log(cut / edges[first]) if cut > edges[first] else math.inf
    return DecayReport(float(max(fitted, bound)), "truncated", edges, env, resid, (lo, hi), floor)


# ---------------------------------------------------------------- transforms


def fourier(f: GridFunction, sign: int = -1) -> GridFunction:
    """Integral of f(x) e(sign <x, xi>) dx on the dual grid.

    ``sign=-1`` is the forward transform, ``sign=+1`` the inverse; applying
    one after the other returns the input up to round-off.
    """
    if sign not in (-1, 1):
        raise ValueError("sign must be -1 or +1")
    axes = tuple(range(f.spec.dim))
    shifted = np.fft.ifftshift(f.values, axes=axes)
    if sign == -1:
        out = np.fft.fftn(shifted, axes=axes)
    else:
        out = np.fft.ifftn(shifted, axes=axes) * f.spec.size**f.spec.dim
    out = np.fft.fftshift(out, axes=axes) * f.spec.cell
    return f.replace(values=out, spec=f.spec.dual())


# ------------------------------------------------ regularized oscillatory integrals


@dataclass(frozen=True)
class QuadratureSpec:
    """Gaussian-regularizer strengths for Richardson extrapolation to eps = 0.

    ``nodes`` is the number of quadrature nodes on a half line for the
    compactly supported s-integrals of the normalizing function.
    """

    epsilon_sequence: tuple = (0.2, 0.1, 0.05)
    richardson_order: int = 2
    nodes: int = 8192

    def __post_init__(self):
        eps = tuple(float(x) for x in self.epsilon_sequence)
        object.__setattr__(self, "epsilon_sequence", eps)
        if len(eps) < 2:
            raise ValueError("need at least two regularizer strengths")
        if any(not 0 < x <= 1 for x in eps) or any(a <= b for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilon_sequence must be strictly decreasing within (0, 1]")
        if not 1 <= self.richardson_order <= len(eps) - 1:
            raise ValueError("richardson_order must be between 1 and len(epsilon_sequence) - 1")
        if self.nodes < 16:
            raise ValueError("too few nodes")


@dataclass
class OscResult:
    value: np.ndarray | complex
    error: np.ndarray | float
    converged: bool
    tableau: list = field(repr=False, default_factory=list)
    message: str = ""

    def require(self, tol: float):
        """Return the value, raising if the tableau did not converge to ``tol``."""
        if not self.converged or np.max(self.error) > tol:
            raise RuntimeError(f"oscillatory integral not converged: {self.message or np.max(self.error)}")
        return self.value


def richardson(eps: Sequence[float], values: Sequence, order: int, atol: float = 0.0) -> OscResult:
    """Neville extrapolation of values(eps) to eps = 0 with polynomials of degree ``order``.

    The error estimate is the change produced by the last elimination step.
    The tableau counts as converged when these changes shrink from one
    column to the next, or are already below ``atol``.
    """
    eps = np.asarray(eps, dtype=float)
    vals = [np.asarray(v) for v in values]
    m = len(vals)
    tab = [[vals[i]] for i in range(m)]
    for i in range(1, m):
        for k in range(1, min(i, order) + 1):
            a, b = eps[i - k], eps[i]
            tab[i].append((a * tab[i][k - 1] - b * tab[i - 1][k - 1]) / (a - b))
    last = tab[-1]
    diffs = [np.max(np.abs(last[k] - last[k - 1])) for k in range(1, len(last))]
    err = np.abs(last[-1] - last[-2])
    shrinking = all(d1 <= d0 or d1 <= atol for d0, d1 in zip(diffs, diffs[1:]))
    converged = bool(shrinking or np.max(err) <= atol)
    msg = "" if converged else f"tableau spread grows: {[float(d) for d in diffs]}"
    value = last[-1] if last[-1].ndim else complex(last[-1])
    error = err if err.ndim else float(err)
    return OscResult(value, error, converged, tab, msg)


def osc_integral(integrand, quad: QuadratureSpec, atol: float = 0.0) -> OscResult:
    """Regularized oscillatory integral extrapolated to vanishing regularizer.

    ``integrand`` is called with each regularizer strength eps and must return
    the trapezoidal value of the integral damped by exp(-eps |x|^2 / 2), for
    instance a :class:`SampledIntegrand` or :class:`PairingIntegrand`.
    """
    values = [integrand(eps) for eps in quad.epsilon_sequence]
    return richardson(quad.epsilon_sequence, values, quad.richardson_order, atol)


@dataclass(frozen=True, eq=False)
class SampledIntegrand:
    """amplitude(x) e(phase(x)) on a grid, damped by exp(-eps |x|^2 / 2).

    ``amplitude`` may carry trailing value axes; the result keeps them.
    """

    spec: GridSpec
    amplitude: np.ndarray
    phase: np.ndarray | None = None

    def __call__(self, eps: float):
        r2 = np.sum(self.spec.points() ** 2, axis=-1)
        weight = np.exp(-eps * r2 / 2) * self.spec.cell
        if self.phase is not None:
            weight = weight * e(self.phase)
        extra = self.amplitude.ndim - self.spec.dim
        w = weight.reshape(weight.shape + (1,) * extra)
        return np.sum((self.amplitude * w).reshape((-1,) + self.amplitude.shape[self.spec.dim :]), axis=0)


@dataclass(frozen=True, eq=False)
class PairingIntegrand:
    """Double integral of left(x) right(y) e(sign <x, y>) over R^n x R^n.

    Both factors are damped by exp(-eps |.|^2 / 2). The inner y-integral is a
    grid Fourier transform of ``right`` sampled on ``spec``; ``left`` is a
    callable evaluated on the dual grid.
    """

    spec: GridSpec
    left: Callable[[np.ndarray], np.ndarray]
    right: Callable[[np.ndarray], np.ndarray]
    sign: int = 1

    def __call__(self, eps: float):
        pts = self.spec.points()
        r2 = np.sum(pts**2, axis=-1)
        g = GridFunction(self.spec, self.right(pts) * np.exp(-eps * r2 / 2))
        # integral of right(y) e(sign x.y) dy is the forward transform at -sign x
        ghat = fourier(g, -1)
        xi = ghat.spec.points()
        x = -self.sign * xi
        fx = self.left(x) * np.exp(-eps * np.sum(x**2, axis=-1) / 2)
        return np.sum(fx * ghat.values) * ghat.spec.cell


@dataclass(frozen=True, eq=False)
class ProductIntegrand:
    """Product of independent regularized factors (separable integrands)."""

    factors: tuple

    def __call__(self, eps: float):
        out = 1.0
        for f in self.factors:
            out = out * f(eps)
        return out


# ------------------------------------------------------------- refinement


@dataclass
class RefinementReport:
    """Defects at successively halved steps and their ratios.

    A ratio is accepted when it reaches ``min_ratio``, or when the finer
    defect is already at the round-off floor, where there is nothing left
    to halve.
    """

    steps: list
    defects: list
    min_ratio: float
    floor: float

    @property
    def ratios(self) -> list:
        out = []
        for d0, d1 in zip(self.defects, self.defects[1:]):
            out.append(math.inf if d1 == 0 else d0 / d1)
        return out

    @property
    def passed(self) -> bool:
        return all(
            r >= self.min_ratio or d1 <= self.floor
            for r, d1 in zip(self.ratios, self.defects[1:])
        )

    def to_dict(self) -> dict:
        return {"steps": self.steps, "defects": self.defects, "refinement_ratios": self.ratios,
                "floor": self.floor, "pass": self.passed}


def refinement_study(defect: Callable[[float], float], h0: float, levels: int = 3,
                     min_ratio: float = 1.8, floor: float = 1e-12) -> RefinementReport:
    """Evaluate ``defect(h)`` at h0, h0/2, ... and collect the ratios."""
    steps = [h0 / 2**k for k in range(levels)]
    return RefinementReport(steps, [float(defect(h)) for h in steps], min_ratio, floor)
