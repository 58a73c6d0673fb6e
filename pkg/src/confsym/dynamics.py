"""Map systems, orbits, Jacobian cocycles and the system registry."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from ._backend import mp_ns, np_ns, to_mp
from .errors import ArgumentError, DivergenceError
from .geometry import ActionForm, ScalarField, TwoForm, circle_diff, compose_primitive, fd_jacobian, inverse_primitive

Array = np.ndarray

ITERATION_CAP = 10**6
OVERFLOW_BOUND = 1e12
QR_PERIOD = 20


@dataclass(frozen=True)
class NHIMModel:
    """Declared invariant manifold with its splitting ``T Lambda + E^s + E^u``.

    ``center_idx`` lists the coordinates that parametrise the manifold.  The
    bundle callables map points of the manifold to basis matrices (columns).
    """

    dim: int
    center_idx: tuple[int, ...]
    stable_fn: Callable[[Array], Array]
    unstable_fn: Callable[[Array], Array]
    embed_fn: Callable[[Array], Array] | None = None
    tangent_fn: Callable[[Array], Array] | None = None
    periodic: tuple[bool, ...] = ()
    symplectic: bool = True

    @property
    def normal_idx(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.dim) if i not in self.center_idx)

    def embed(self, c: Array) -> Array:
        c = np.asarray(c, dtype=float)
        if self.embed_fn is not None:
            return np.asarray(self.embed_fn(c), dtype=float)
        z = np.zeros(c.shape[:-1] + (self.dim,))
        z[..., list(self.center_idx)] = c
        return z

    def center(self, z: Array) -> Array:
        return np.asarray(z, dtype=float)[..., list(self.center_idx)]

    def tangent(self, z: Array) -> Array:
        z = np.asarray(z, dtype=float)
        if self.tangent_fn is not None:
            return np.asarray(self.tangent_fn(z), dtype=float)
        t = np.zeros((self.dim, len(self.center_idx)))
        for k, i in enumerate(self.center_idx):
            t[i, k] = 1.0
        return np.broadcast_to(t, z.shape[:-1] + t.shape).copy()

    def stable(self, z: Array) -> Array:
        z = np.asarray(z, dtype=float)
        s = np.asarray(self.stable_fn(z), dtype=float)
        return np.broadcast_to(s, z.shape[:-1] + s.shape[-2:]).copy()

    def unstable(self, z: Array) -> Array:
        z = np.asarray(z, dtype=float)
        u = np.asarray(self.unstable_fn(z), dtype=float)
        return np.broadcast_to(u, z.shape[:-1] + u.shape[-2:]).copy()

    def splitting(self, z: Array) -> tuple[Array, Array, Array]:
        return self.tangent(z), self.stable(z), self.unstable(z)

    def coefficients(self, z: Array, base: Array | None = None) -> tuple[Array, Array, Array]:
        """Coefficients of ``z - base`` in the splitting at ``base`` (default: projection of ``z``)."""
        z = np.asarray(z, dtype=float)
        base = self.project(z) if base is None else np.asarray(base, dtype=float)
        t, s, u = self.splitting(base)
        basis = np.concatenate([t, s, u], axis=-1)
        diff = circle_diff(z, base, self.periodic)
        coef = np.linalg.solve(basis, diff[..., None])[..., 0]
        kt, ks = t.shape[-1], s.shape[-1]
        return coef[..., :kt], coef[..., kt:kt + ks], coef[..., kt + ks:]

    def project(self, z: Array, iters: int = 8) -> Array:
        """Oblique projection onto the manifold along ``E^s + E^u``."""
        z = np.asarray(z, dtype=float)
        c = self.center(z)
        for _ in range(iters):
            base = self.embed(c)
            t, s, u = self.splitting(base)
            basis = np.concatenate([t, s, u], axis=-1)
            coef = np.linalg.solve(basis, circle_diff(z, base, self.periodic)[..., None])[..., 0]
            step = coef[..., : t.shape[-1]]
            c = c + step
            if np.max(np.abs(step), initial=0.0) < 1e-15:
                break
        return self.embed(c)

    def distance(self, z: Array) -> Array:
        z = np.asarray(z, dtype=float)
        return np.linalg.norm(circle_diff(z, self.project(z), self.periodic), axis=-1)


@dataclass(frozen=True)
class MapSystem:
    """Diffeomorphism with Jacobian, inverse, conformal factor and forms.

    ``forward``, ``inverse`` and ``jacobian`` take ``(z, xp)`` where ``xp`` is a
    math namespace; they must work for float arrays and for mpmath object
    arrays.  Circle coordinates are lifted: maps need not reduce them.
    """

    name: str
    dim: int
    forward: Callable
    inverse: Callable
    jacobian: Callable | None = None
    omega: TwoForm | None = None
    eta: float | None = None
    eta_field: Callable[[Array], Array] | None = None
    eta_bounds: tuple[float, float] | None = None
    alpha: ActionForm | None = None
    primitive: ScalarField | None = None
    params: dict = field(default_factory=dict)
    periodic: tuple[bool, ...] = ()
    model: NHIMModel | None = None
    rates: dict | None = None
    domain: tuple[Array, Array] | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.periodic:
            object.__setattr__(self, "periodic", (False,) * self.dim)
        if self.omega is not None and self.eta is None and self.eta_field is None:
            raise ArgumentError("a conformal factor or factor field is required")

    def f(self, z: Array) -> Array:
        return np.asarray(self.forward(np.asarray(z, dtype=float), np_ns), dtype=float)

    def finv(self, z: Array) -> Array:
        return np.asarray(self.inverse(np.asarray(z, dtype=float), np_ns), dtype=float)

    def __call__(self, z: Array) -> Array:
        return self.f(z)

    def jac(self, z: Array) -> Array:
        z = np.asarray(z, dtype=float)
        if self.jacobian is not None:
            j = np.asarray(self.jacobian(z, np_ns), dtype=float)
            return np.broadcast_to(j, z.shape[:-1] + (self.dim, self.dim)).copy()
        return fd_jacobian(self.f, z)

    def jac_inv(self, z: Array) -> Array:
        """Jacobian of the inverse map at ``z``."""
        return np.linalg.inv(self.jac(self.finv(z)))

    def f_mp(self, z: Array) -> Array:
        return self.forward(_as_mp(z), mp_ns)

    def finv_mp(self, z: Array) -> Array:
        return self.inverse(_as_mp(z), mp_ns)

    def jac_mp(self, z: Array) -> Array:
        if self.jacobian is None:
            raise ArgumentError("analytic Jacobian required in extended precision")
        j = self.jacobian(_as_mp(z), mp_ns)
        return np.broadcast_to(np.asarray(j, dtype=object), np.shape(z)[:-1] + (self.dim, self.dim)).copy()

    def eta_at(self, z: Array) -> Array:
        z = np.asarray(z, dtype=float)
        if self.eta_field is not None:
            return np.asarray(self.eta_field(z), dtype=float)
        if self.eta is None:
            raise ArgumentError(f"system {self.name!r} declares no conformal factor")
        return np.full(z.shape[:-1], float(self.eta))

    def reduce(self, z: Array) -> Array:
        z = np.array(z, dtype=float)
        mask = np.asarray(self.periodic, dtype=bool)
        if mask.any():
            z[..., mask] = np.mod(z[..., mask], 1.0)
        return z

    def sample(self, rng: np.random.Generator, n: int) -> Array:
        """Uniform samples from the declared working box."""
        lo, hi = self.domain if self.domain is not None else (-np.ones(self.dim), np.ones(self.dim))
        return rng.uniform(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float), size=(n, self.dim))

    def with_params(self, **changes) -> "MapSystem":
        return replace(self, **changes)


def _as_mp(z: Array) -> Array:
    z = np.asarray(z)
    return z if z.dtype == object else to_mp(z)


@dataclass(frozen=True)
class OrbitSegment:
    base: Array
    n0: int
    n1: int
    points: Array

    def __len__(self) -> int:
        return self.points.shape[0]

    def at(self, k: int) -> Array:
        """Point ``f^k(base)`` for ``k`` between ``n0`` and ``n1``."""
        lo, hi = min(self.n0, self.n1), max(self.n0, self.n1)
        if not lo <= k <= hi:
            raise ArgumentError(f"step {k} outside [{lo}, {hi}]")
        return self.points[abs(k - self.n0)]


def _check_count(n: int, cap: int) -> None:
    if abs(n) > cap:
        raise ArgumentError(f"|n| = {abs(n)} exceeds the iteration cap {cap}")


def iterate(sys: MapSystem, x: Array, n: int, cap: int = ITERATION_CAP, reduce: bool = True) -> OrbitSegment:
    """Orbit ``f^k(x)`` for ``k`` from 0 to ``n`` (backward when ``n < 0``)."""
    _check_count(n, cap)
    x = np.asarray(x, dtype=float)
    step = sys.f if n >= 0 else sys.finv
    pts = [sys.reduce(x) if reduce else x.copy()]
    z = pts[0]
    for k in range(1, abs(n) + 1):
        z = step(z)
        if reduce:
            z = sys.reduce(z)
        if not np.all(np.isfinite(z)) or np.max(np.abs(z)) > OVERFLOW_BOUND:
            raise DivergenceError(f"orbit exceeded {OVERFLOW_BOUND:g} at step {k}", step=k)
        pts.append(z)
    return OrbitSegment(x, 0, n, np.array(pts))


@dataclass
class QRProduct:
    """``q @ r * exp(log_scale)`` with ``q`` orthogonal and ``r`` upper triangular."""

    q: Array
    r: Array
    log_scale: float
    log_diag: Array

    def matrix(self) -> Array:
        return self.q @ self.r * np.exp(self.log_scale)


class Cocycle:
    """Ordered Jacobians ``a_k = Df(f^k x)`` along an orbit segment."""

    def __init__(self, sys: MapSystem, x: Array, n: int, cap: int = ITERATION_CAP):
        _check_count(n, cap)
        self.sys = sys
        self.n = n
        orbit = iterate(sys, x, n, cap=cap)
        self.orbit = orbit
        pts = orbit.points[:-1]
        if n >= 0:
            self.factors = sys.jac(pts) if n else np.zeros((0, sys.dim, sys.dim))
        else:
            self.factors = sys.jac_inv(pts) if n else np.zeros((0, sys.dim, sys.dim))

    def product(self, lo: int = 0, hi: int | None = None) -> Array:
        """``a_{hi-1} ... a_lo``, the derivative over steps ``[lo, hi)``."""
        hi = len(self.factors) if hi is None else hi
        m = np.eye(self.sys.dim)
        for a in self.factors[lo:hi]:
            m = a @ m
        return m

    def qr_product(self, lo: int = 0, hi: int | None = None, period: int = QR_PERIOD) -> QRProduct:
        hi = len(self.factors) if hi is None else hi
        d = self.sys.dim
        q = np.eye(d)
        r_tot = np.eye(d)
        log_scale = 0.0
        log_diag = np.zeros(d)
        block = np.eye(d)
        count = 0
        for a in self.factors[lo:hi]:
            block = a @ block
            count += 1
            if count == period:
                q, r_tot, log_scale, log_diag = _qr_absorb(block, q, r_tot, log_scale, log_diag)
                block = np.eye(d)
                count = 0
        if count:
            q, r_tot, log_scale, log_diag = _qr_absorb(block, q, r_tot, log_scale, log_diag)
        return QRProduct(q, r_tot, log_scale, log_diag)


def _qr_absorb(block, q, r_tot, log_scale, log_diag):
    q_new, r = np.linalg.qr(block @ q)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q_new = q_new * signs
    r = signs[:, None] * r
    log_diag = log_diag + np.log(np.abs(np.diag(r)))
    r_tot = r @ r_tot
    scale = np.max(np.abs(r_tot))
    return q_new, r_tot / scale, log_scale + np.log(scale), log_diag


def cocycle_product(sys: MapSystem, x: Array, n: int, qr: bool = False, cap: int = ITERATION_CAP):
    """``Df^n(x)`` as a matrix, or as a :class:`QRProduct` when ``qr`` is set."""
    cyc = Cocycle(sys, x, n, cap=cap)
    return cyc.qr_product() if qr else cyc.product()


def compose_systems(f: MapSystem, g: MapSystem, name: str | None = None) -> MapSystem:
    """The system ``f o g`` with composed factor and primitive."""
    if f.dim != g.dim:
        raise ArgumentError("dimension mismatch")
    if f.eta is None or g.eta is None:
        raise ArgumentError("composition requires constant factors")

    def fwd(z, xp):
        return f.forward(g.forward(z, xp), xp)

    def inv(z, xp):
        return g.inverse(f.inverse(z, xp), xp)

    def jac(z, xp):
        return f.jacobian(g.forward(z, xp), xp) @ g.jacobian(z, xp)

    prim = None
    if f.primitive is not None and g.primitive is not None:
        prim = compose_primitive(g.primitive, f.primitive, f.eta, g)
    has_jac = f.jacobian is not None and g.jacobian is not None
    return MapSystem(
        name=name or f"{f.name}*{g.name}", dim=f.dim, forward=fwd, inverse=inv,
        jacobian=jac if has_jac else None, omega=f.omega, eta=f.eta * g.eta, alpha=f.alpha,
        primitive=prim, params={"outer": f.params, "inner": g.params}, periodic=f.periodic,
        model=f.model, domain=g.domain,
    )


def inverse_system(sys: MapSystem) -> MapSystem:
    """``f^{-1}`` with factor ``1/eta`` and primitive ``-(1/eta) P o f^{-1}``."""
    if sys.eta is None:
        raise ArgumentError("inverse system requires a constant factor")
    swapped = MapSystem(
        name=f"{sys.name}^-1", dim=sys.dim, forward=sys.inverse, inverse=sys.forward,
        jacobian=None, omega=sys.omega, eta=1.0 / sys.eta, alpha=sys.alpha, primitive=None,
        params=sys.params, periodic=sys.periodic, model=sys.model, domain=sys.domain,
    )
    if sys.jacobian is not None:
        def jac(z, xp, _s=sys):
            if xp is np_ns:
                return np.linalg.inv(_s.jac(_s.finv(z)))
            from ._backend import mp_solve  # noqa: PLC0415
            a = _s.jacobian(_s.inverse(z, xp), xp)
            cols = [mp_solve(a, np.eye(_s.dim)[:, k].astype(object)) for k in range(_s.dim)]
            return np.stack(cols, axis=-1)
        swapped = replace(swapped, jacobian=jac)
    prim = None
    if sys.primitive is not None:
        prim = inverse_primitive(sys.primitive, sys.eta, swapped)
    return replace(swapped, primitive=prim)


def registry_names() -> list[str]:
    from . import systems  # noqa: PLC0415

    return sorted(systems.BUILDERS)


def registry_get(name: str, **params) -> MapSystem:
    """Build a registered system by name."""
    from . import systems  # noqa: PLC0415

    if name not in systems.BUILDERS:
        raise ArgumentError(f"unknown system {name!r}; registry: {', '.join(sorted(systems.BUILDERS))}")
    return systems.BUILDERS[name](**params)
