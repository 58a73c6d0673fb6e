"""Differential forms in chart coordinates.

Two-forms are antisymmetric matrix fields ``J(x)`` with
``omega(x)(u, v) = u^T J(x) v``; one-forms are covector fields.  Everything is
vectorised over leading axes of the point arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import subspace_angles

from .errors import ArgumentError, NumericalDifferentiationError

Array = np.ndarray

_FD4 = ((-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0))


def _scaled_steps(x: Array, h: float) -> Array:
    return h * np.maximum(1.0, np.abs(x))


def fd_gradient(fun: Callable[[Array], Array], x: Array, h: float = 1e-5) -> Array:
    """Fourth-order central-difference gradient of a scalar field."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    grad = np.zeros(x.shape)
    steps = _scaled_steps(x, h)
    for i in range(d):
        acc = 0.0
        for k, w in _FD4:
            xp = x.copy()
            xp[..., i] += k * steps[..., i]
            acc = acc + w * np.asarray(fun(xp))
        grad[..., i] = acc / steps[..., i]
    if not np.all(np.isfinite(grad)):
        raise NumericalDifferentiationError("non-finite gradient", point=x)
    return grad


def fd_jacobian(fun: Callable[[Array], Array], x: Array, h: float = 1e-5) -> Array:
    """Fourth-order central-difference Jacobian, shape ``(..., m, d)``."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    steps = _scaled_steps(x, h)
    cols = []
    for i in range(d):
        acc = 0.0
        for k, w in _FD4:
            xp = x.copy()
            xp[..., i] += k * steps[..., i]
            acc = acc + w * np.asarray(fun(xp))
        cols.append(acc / steps[..., i][..., None])
    jac = np.stack(cols, axis=-1)
    if not np.all(np.isfinite(jac)):
        raise NumericalDifferentiationError("non-finite Jacobian", point=x)
    return jac


@dataclass(frozen=True)
class PhasePoint:
    """A point with a topology tag per coordinate (``True`` marks a circle of period 1)."""

    coords: Array
    periodic: tuple[bool, ...] = ()

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        per = tuple(self.periodic) or (False,) * c.shape[-1]
        if len(per) != c.shape[-1]:
            raise ArgumentError("periodic mask does not match dimension")
        c[..., list(per)] = np.mod(c[..., list(per)], 1.0)
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "periodic", per)

    @property
    def dim(self) -> int:
        return self.coords.shape[-1]


def reduce_circle(z: Array, periodic: Sequence[bool]) -> Array:
    z = np.array(z, dtype=float)
    mask = np.asarray(periodic, dtype=bool)
    if mask.any():
        z[..., mask] = np.mod(z[..., mask], 1.0)
    return z


def circle_diff(a: Array, b: Array, periodic: Sequence[bool]) -> Array:
    """``a - b`` with circle components wrapped to ``[-1/2, 1/2)``."""
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    mask = np.asarray(periodic, dtype=bool)
    if mask.size and mask.any():
        diff[..., mask] = (diff[..., mask] + 0.5) % 1.0 - 0.5
    return diff


@dataclass(frozen=True)
class TwoForm:
    """Antisymmetric matrix field; antisymmetry is imposed on every evaluation."""

    matrix_fn: Callable[[Array], Array]
    dim: int
    constant: bool = False
    bound: float | None = None

    def matrix(self, x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        m = np.broadcast_to(np.asarray(self.matrix_fn(x), dtype=float), x.shape[:-1] + (self.dim, self.dim))
        return 0.5 * (m - np.swapaxes(m, -1, -2))

    def __call__(self, x: Array, u: Array, v: Array) -> Array:
        j = self.matrix(x)
        iu, ju = np.triu_indices(self.dim, 1)
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        pair = u[..., iu] * v[..., ju] - u[..., ju] * v[..., iu]
        return np.sum(pair * j[..., iu, ju], axis=-1)

    def norm(self, x: Array) -> Array:
        return np.linalg.norm(self.matrix(x), ord=2, axis=(-2, -1))

    @classmethod
    def constant_matrix(cls, j: Array, bound: float | None = None) -> "TwoForm":
        j = np.array(j, dtype=float)
        j = 0.5 * (j - j.T)
        nb = float(np.linalg.norm(j, 2)) if bound is None else bound
        return cls(lambda x, _j=j: _j, j.shape[0], constant=True, bound=nb)

    @classmethod
    def from_pairs(cls, dim: int, pairs: Sequence[tuple[int, int, float]]) -> "TwoForm":
        """Constant form ``sum c * dx_i ^ dx_j``."""
        j = np.zeros((dim, dim))
        for i, k, c in pairs:
            j[i, k] += c
            j[k, i] -= c
        return cls.constant_matrix(j)


@dataclass(frozen=True)
class ActionForm:
    """Covector field ``alpha(x)`` with an optional parameter record."""

    covector_fn: Callable[[Array], Array]
    dim: int
    params: dict = field(default_factory=dict)

    def __call__(self, x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.covector_fn(x), dtype=float), x.shape).copy()

    def derivative_matrix(self, x: Array, h: float = 1e-5) -> Array:
        """Matrix of ``d alpha`` in the ``TwoForm`` convention."""
        jac = fd_jacobian(self, x, h)  # jac[..., i, k] = d alpha_i / d x_k
        return np.swapaxes(jac, -1, -2) - jac

    def plus_gradient(self, gauge: "ScalarField") -> "ActionForm":
        return ActionForm(lambda x: self(x) + gauge.gradient(x), self.dim, dict(self.params, gauge=True))


@dataclass(frozen=True)
class ScalarField:
    """Scalar field with optional analytic gradient."""

    value_fn: Callable[[Array], Array]
    grad_fn: Callable[[Array], Array] | None = None

    def __call__(self, x: Array) -> Array:
        return np.asarray(self.value_fn(np.asarray(x, dtype=float)), dtype=float)

    def gradient(self, x: Array, h: float = 1e-5) -> Array:
        x = np.asarray(x, dtype=float)
        if self.grad_fn is not None:
            return np.broadcast_to(np.asarray(self.grad_fn(x), dtype=float), x.shape).copy()
        return fd_gradient(self, x, h)


@dataclass(frozen=True)
class GaugeFunction(ScalarField):
    """Gauge ``G``; ``normalized`` records that ``G`` vanishes on the invariant manifold."""

    normalized: bool = False


ZERO_FIELD = ScalarField(lambda x: np.zeros(np.shape(x)[:-1]), lambda x: np.zeros(np.shape(x)))


def _jacobian_of(f, x: Array) -> Array:
    if hasattr(f, "jac"):
        return f.jac(x)
    return fd_jacobian(f, x)


def _apply(f, x: Array) -> Array:
    return f.f(x) if hasattr(f, "f") else np.asarray(f(x), dtype=float)


def pullback_matrix(f, omega: TwoForm, x: Array) -> Array:
    """Matrix of ``f^* omega`` at ``x``."""
    x = np.asarray(x, dtype=float)
    df = _jacobian_of(f, x)
    m = np.swapaxes(df, -1, -2) @ omega.matrix(_apply(f, x)) @ df
    return 0.5 * (m - np.swapaxes(m, -1, -2))


def pullback_two_form(f, omega: TwoForm, x: Array, u: Array, v: Array) -> Array:
    """``omega(f(x))(Df(x) u, Df(x) v)``."""
    x = np.asarray(x, dtype=float)
    df = _jacobian_of(f, x)
    fu = np.einsum("...ij,...j->...i", df, np.asarray(u, dtype=float))
    fv = np.einsum("...ij,...j->...i", df, np.asarray(v, dtype=float))
    return omega(_apply(f, x), fu, fv)


def conformality_residual(sys, samples: Array) -> float:
    """max |(f^*omega)(x)(e_i,e_j) - eta omega(x)(e_i,e_j)| / (1 + ||omega(x)||)."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] == 0:
        raise ArgumentError("empty sample set")
    pulled = pullback_matrix(sys, sys.omega, samples)
    base = sys.omega.matrix(samples)
    eta = np.asarray(sys.eta_at(samples))[..., None, None]
    diff = np.abs(pulled - eta * base).max(axis=(-2, -1))
    scale = 1.0 + sys.omega.norm(samples)
    return float(np.max(diff / scale))


def factor_estimates(sys, x: Array, pairs: Sequence[tuple[Array, Array]]) -> Array:
    """Pointwise ratios ``(f^*omega)(u,v) / omega(u,v)`` for several tangent pairs."""
    out = []
    for u, v in pairs:
        out.append(pullback_two_form(sys, sys.omega, x, u, v) / sys.omega(x, u, v))
    return np.array(out)


@dataclass(frozen=True)
class Loop:
    """Closed curve given by a parameterisation of ``[0, 1]``."""

    param: Callable[[Array], Array]
    periodic: tuple[bool, ...]

    def nodes(self, n: int) -> Array:
        t = np.linspace(0.0, 1.0, n + 1)
        return np.asarray(self.param(t), dtype=float)

    def check_closed(self, tol: float = 1e-12) -> None:
        ends = self.nodes(1)
        gap = ends[-1] - ends[0]
        mask = np.asarray(self.periodic, dtype=bool)
        gap[mask] = gap[mask] - np.round(gap[mask])
        if np.max(np.abs(gap)) > tol:
            raise ArgumentError("loop is not closed")

    def concat(self, other: "Loop") -> "Loop":
        def param(t, a=self, b=other):
            t = np.asarray(t, dtype=float)
            first = a.param(np.clip(2.0 * t, 0.0, 1.0))
            end_a = a.param(np.array([1.0]))[0]
            start_b = b.param(np.array([0.0]))[0]
            second = b.param(np.clip(2.0 * t - 1.0, 0.0, 1.0)) - start_b + end_a
            return np.where((t <= 0.5)[:, None], first, second)

        return Loop(param, self.periodic)


def circle_loop(base: Array, index: int, periodic: Sequence[bool]) -> Loop:
    """The loop that winds once around circle coordinate ``index`` from ``base``."""
    base = np.asarray(base, dtype=float)

    def param(t, b=base, i=index):
        pts = np.repeat(b[None, :], len(np.atleast_1d(t)), axis=0)
        pts[:, i] = b[i] + np.asarray(t, dtype=float)
        return pts

    return Loop(param, tuple(periodic))


def polyline_integral(beta: Callable[[Array], Array], nodes: Array) -> float:
    """Trapezoidal integral of a covector field along a polyline."""
    vals = beta(nodes)
    seg = np.diff(nodes, axis=0)
    return float(np.sum(0.5 * np.sum((vals[:-1] + vals[1:]) * seg, axis=-1)))


def loop_period(beta: Callable[[Array], Array], loop: Loop, tol: float = 1e-10, max_nodes: int = 2**20) -> float:
    """Period of ``beta`` over a closed loop, refined by node doubling."""
    loop.check_closed()
    n = 16
    prev = polyline_integral(beta, loop.nodes(n))
    while n < max_nodes:
        n *= 2
        cur = polyline_integral(beta, loop.nodes(n))
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    return prev


def pullback_covector(sys, alpha: ActionForm, x: Array) -> Array:
    """``(f^* alpha)(x) = Df(x)^T alpha(f(x))``."""
    x = np.asarray(x, dtype=float)
    return np.einsum("...ji,...j->...i", sys.jac(x), alpha(sys.f(x)))


@dataclass
class ExactnessReport:
    pointwise: float
    periods: list[float]


def exactness_residual(sys, alpha: ActionForm, primitive: ScalarField | None, samples: Array,
                       loops: Sequence[Loop] = (), tol: float = 1e-10) -> ExactnessReport:
    """Pointwise ``max |f^*alpha - eta alpha - dP|`` and loop periods of ``f^*alpha - eta alpha``."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] == 0:
        raise ArgumentError("empty sample set")
    prim = primitive if primitive is not None else ZERO_FIELD
    eta = np.asarray(sys.eta_at(samples))[..., None]
    res = pullback_covector(sys, alpha, samples) - eta * alpha(samples) - prim.gradient(samples)
    pointwise = float(np.max(np.abs(res)))

    def beta(z):
        return pullback_covector(sys, alpha, z) - np.asarray(sys.eta_at(z))[..., None] * alpha(z)

    periods = [loop_period(beta, lp, tol=tol) for lp in loops]
    return ExactnessReport(pointwise, periods)


def gauge_shift_primitive(primitive: ScalarField, gauge: ScalarField, sys) -> ScalarField:
    """``x -> P(x) + G(f(x)) - eta G(x)``."""

    def value(x):
        return primitive(x) + gauge(sys.f(x)) - sys.eta_at(x) * gauge(x)

    def grad(x):
        g_img = np.einsum("...ji,...j->...i", sys.jac(x), gauge.gradient(sys.f(x)))
        return primitive.gradient(x) + g_img - np.asarray(sys.eta_at(x))[..., None] * gauge.gradient(x)

    return ScalarField(value, grad)


def compose_primitive(pg: ScalarField, pf: ScalarField, eta_f: float, g) -> ScalarField:
    """Primitive of ``f o g``: ``eta_f P^g + P^f o g``."""

    def value(x):
        return eta_f * pg(x) + pf(g.f(x))

    def grad(x):
        return eta_f * pg.gradient(x) + np.einsum("...ji,...j->...i", g.jac(x), pf.gradient(g.f(x)))

    return ScalarField(value, grad)


def inverse_primitive(pf: ScalarField, eta_f: float, f_inv) -> ScalarField:
    """Primitive of ``f^{-1}``: ``-(1/eta_f) P^f o f^{-1}``."""

    def value(x):
        return -pf(f_inv.f(x)) / eta_f

    def grad(x):
        return -np.einsum("...ji,...j->...i", f_inv.jac(x), pf.gradient(f_inv.f(x))) / eta_f

    return ScalarField(value, grad)


def exterior_derivative_value(beta: TwoForm, x: Array, u: Array, v: Array, w: Array, h: float = 1e-4) -> float:
    """``d beta(x)(u, v, w)`` for constant vector fields by central differences."""
    if not 1e-6 <= h <= 1e-2:
        raise ArgumentError("step h must lie in [1e-6, 1e-2]")
    x = np.asarray(x, dtype=float)
    u, v, w = (np.asarray(a, dtype=float) for a in (u, v, w))

    def directional(dirn, a, b):
        acc = 0.0
        for k, c in _FD4:
            acc += c * beta(x + k * h * dirn, a, b)
        return acc / h

    return float(directional(u, v, w) - directional(v, u, w) + directional(w, u, v))


def restricted_matrix(omega: TwoForm, x: Array, basis: Array) -> Array:
    basis = np.asarray(basis, dtype=float)
    return basis.T @ omega.matrix(x) @ basis


def kernel_rank(omega: TwoForm, x: Array, basis: Array, tol: float = 1e-8) -> int:
    """Dimension of the numerical kernel of ``omega`` restricted to ``span(basis)``."""
    if tol <= 0:
        raise ArgumentError("tol must be positive")
    basis = np.asarray(basis, dtype=float)
    if basis.ndim == 1:
        basis = basis[:, None]
    if np.linalg.matrix_rank(basis) < basis.shape[1]:
        raise ArgumentError("basis is not linearly independent")
    q, _ = np.linalg.qr(basis)
    s = np.linalg.svd(restricted_matrix(omega, x, q), compute_uv=False)
    if s[0] == 0.0:
        return basis.shape[1]
    return int(np.sum(s < tol * s[0]))


def principal_angles(a: Array, b: Array) -> Array:
    """Principal angles between column spans, ascending."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    return np.sort(subspace_angles(a, b))


def max_angle_sine(plane: Array, reference: Array) -> float:
    """Sine of the largest principal angle from ``span(plane)`` to ``span(reference)``."""
    q, _ = np.linalg.qr(np.asarray(plane, dtype=float))
    r, _ = np.linalg.qr(np.asarray(reference, dtype=float))
    resid = q - r @ (r.T @ q)
    return float(np.linalg.svd(resid, compute_uv=False)[0])
