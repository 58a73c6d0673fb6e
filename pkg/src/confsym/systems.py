"""Built-in example systems and the custom-system constructor."""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from ._backend import matrix_field, np_ns, stack_last
from .dynamics import MapSystem, NHIMModel
from .errors import ArgumentError
from .geometry import ActionForm, ScalarField, TwoForm

Array = np.ndarray

BUILDERS: dict[str, Callable[..., MapSystem]] = {}


def register(name: str):
    def deco(fn):
        BUILDERS[name] = fn
        return fn

    return deco


def _cos_potential(xp):
    """``V = cos(2 pi t)`` with its first two derivatives."""
    two_pi = 2 * xp.pi

    def v0(t):
        return xp.cos(two_pi * t)

    def v1(t):
        return -two_pi * xp.sin(two_pi * t)

    def v2(t):
        return -two_pi * two_pi * xp.cos(two_pi * t)

    return v0, v1, v2


def _unit_columns(d: int, idx) -> Array:
    m = np.zeros((d, len(idx)))
    for k, i in enumerate(idx):
        m[i, k] = 1.0
    return m


def _const_fn(m: Array):
    return lambda z, _m=m: _m


# --------------------------------------------------------------------------
# Dissipative standard map


def dsm_primitive(eta: float, mu: float, eps: float, sigma: float) -> ScalarField:
    """Primitive of ``f^*a - eta a`` for ``a = (I + sigma) d theta``, minus the obstruction term.

    ``f^*a - eta a = dQ + (mu + sigma - eta sigma) d theta``; exact iff the constant vanishes.
    """
    v0, v1, v2 = _cos_potential(np_ns)
    ms = mu + sigma

    def value(z):
        i, t = z[..., 0], z[..., 1]
        w1 = v1(t)
        return (0.5 * eta**2 * i**2 + eps * eta * i * w1 + eta * ms * i + eps * ms * w1
                + eps * v0(t) + 0.5 * eps**2 * w1**2)

    def grad(z):
        i, t = z[..., 0], z[..., 1]
        w1, w2 = v1(t), v2(t)
        gi = eta**2 * i + eps * eta * w1 + eta * ms
        gt = eps * eta * i * w2 + eps * ms * w2 + eps * w1 + eps**2 * w1 * w2
        return np.stack([gi, gt], axis=-1)

    return ScalarField(value, grad)


def dsm_action_form(sigma: float) -> ActionForm:
    return ActionForm(lambda z: np.stack([np.zeros(z.shape[:-1]), z[..., 0] + sigma], axis=-1), 2, {"sigma": sigma})


def dsm_obstruction(eta: float, mu: float, sigma: float) -> float:
    """Period of ``f^*a - eta a`` over one turn of the circle."""
    return mu + sigma - eta * sigma


def critical_shift(eta: float, mu: float) -> float | None:
    """The shift making the map exact, or ``None`` when no shift works."""
    if eta != 1.0:
        return mu / (eta - 1.0)
    return 0.0 if mu == 0.0 else None


@register("dsm")
def dsm(eta: float = 0.8, mu: float = 0.1, eps: float = 0.2, V: str = "cos", sigma: float | None = None) -> MapSystem:
    """Dissipative standard map on the cylinder with ``V = cos(2 pi theta)``."""
    if V != "cos":
        raise ArgumentError("only V = cos is built in; declare other potentials as a custom system")
    if eta <= 0:
        raise ArgumentError("eta must be positive")

    def fwd(z, xp):
        _, v1, _ = _cos_potential(xp)
        i, t = z[..., 0], z[..., 1]
        ip = eta * i + mu + eps * v1(t)
        return stack_last([ip, t + ip])

    def inv(z, xp):
        _, v1, _ = _cos_potential(xp)
        ip, tp = z[..., 0], z[..., 1]
        t = tp - ip
        return stack_last([(ip - mu - eps * v1(t)) / eta, t])

    def jac(z, xp):
        _, _, v2 = _cos_potential(xp)
        w = eps * v2(z[..., 1])
        return matrix_field([[eta + 0 * w, w], [eta + 0 * w, 1 + w]])

    shift = critical_shift(eta, mu) if sigma is None else sigma
    alpha = dsm_action_form(shift if shift is not None else 0.0)
    prim = None
    if shift is not None and abs(dsm_obstruction(eta, mu, shift)) < 1e-15 * max(1.0, abs(shift)):
        prim = dsm_primitive(eta, mu, eps, shift)
    return MapSystem(
        name="dsm", dim=2, forward=fwd, inverse=inv, jacobian=jac,
        omega=TwoForm.from_pairs(2, [(0, 1, 1.0)]), eta=eta, alpha=alpha, primitive=prim,
        params={"eta": eta, "mu": mu, "eps": eps, "V": V, "sigma": shift},
        periodic=(False, True), domain=(np.array([-1.0, 0.0]), np.array([1.0, 1.0])),
    )


# --------------------------------------------------------------------------
# Linear block systems


def _diag_system(name, scale, omega, alpha, model, rates, params, periodic=None, domain=None):
    s = np.asarray(scale, dtype=float)
    d = s.size

    def fwd(z, xp):
        return z * s

    def inv(z, xp):
        return z / s

    def jac(z, xp):
        return np.diag(s)

    prim = ScalarField(lambda z: np.zeros(np.shape(z)[:-1]), lambda z: np.zeros(np.shape(z)))
    eta = params["eta"]
    return MapSystem(
        name=name, dim=d, forward=fwd, inverse=inv, jacobian=jac, omega=omega, eta=eta,
        alpha=alpha, primitive=prim, params=params, periodic=periodic or (False,) * d, model=model,
        rates=rates, domain=domain or (-np.ones(d), np.ones(d)),
    )


def flex_rates(lam, mu, eta) -> dict:
    lam, mu = np.asarray(lam, float), np.asarray(mu, float)
    return {
        "lambda_plus": float(lam.max()),
        "lambda_minus": float(lam.max() / eta),
        "mu_plus": float(max(mu.max(), eta / mu.min())),
        "mu_minus": float(max(1.0 / mu.min(), mu.max() / eta)),
    }


def flex_admissible(lam, mu, eta) -> bool:
    lam, mu = np.asarray(lam, float), np.asarray(mu, float)
    if not (0 < eta <= 1) or np.any(lam <= 0) or np.any(lam >= 1) or np.any(mu <= 0):
        return False
    r = flex_rates(lam, mu, eta)
    return (r["lambda_plus"] * r["mu_minus"] < 1 and r["lambda_minus"] * r["mu_plus"] < 1
            and r["mu_plus"] * r["mu_minus"] >= 1)


@register("flex")
def flex(lam=(0.5, 0.4), mu=(1.2, 1.1), eta: float = 0.9) -> MapSystem:
    """``(A x, eta A^-1 y, M u, eta M^-1 v)`` with diagonal ``A``, ``M``."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if not flex_admissible(lam, mu, eta):
        raise ArgumentError("parameters violate the rate constraints of the flexibility family")
    n, m = lam.size, mu.size
    d = 2 * (n + m)
    xi, yi = list(range(n)), list(range(n, 2 * n))
    ui, vi = list(range(2 * n, 2 * n + m)), list(range(2 * n + m, d))
    pairs = [(yi[k], xi[k], 1.0) for k in range(n)] + [(vi[k], ui[k], 1.0) for k in range(m)]

    def alpha_fn(z):
        out = np.zeros(z.shape)
        out[..., xi] = z[..., yi]
        out[..., ui] = z[..., vi]
        return out

    model = NHIMModel(d, tuple(ui + vi), _const_fn(_unit_columns(d, xi)), _const_fn(_unit_columns(d, yi)))
    scale = np.concatenate([lam, eta / lam, mu, eta / mu])
    return _diag_system(
        "flex", scale, TwoForm.from_pairs(d, pairs), ActionForm(alpha_fn, d), model,
        flex_rates(lam, mu, eta), {"lam": tuple(lam), "mu": tuple(mu), "eta": eta,
                                   "x": xi, "y": yi, "u": ui, "v": vi},
    )


@register("degenerate")
def degenerate(a: float = 0.2, b: float = 0.3, c: float = 0.4, d: float = 0.5, eta: float = 0.8) -> MapSystem:
    """Diagonal map on R^8 whose manifold ``{x1 = y1 = y2 = y3 = 0}`` carries a degenerate form."""
    if not (0 < a < b < c < d < 1 < eta / d):
        raise ArgumentError("require 0 < a < b < c < d < 1 < eta/d")
    scale = [a, b, c, d, eta / a, eta / b, eta / c, eta / d]
    pairs = [(4 + k, k, 1.0) for k in range(4)]

    def alpha_fn(z):
        out = np.zeros(z.shape)
        out[..., :4] = z[..., 4:]
        return out

    model = NHIMModel(8, (1, 2, 3, 7), _const_fn(_unit_columns(8, (0,))),
                      _const_fn(_unit_columns(8, (4, 5, 6))), symplectic=False)
    model0 = NHIMModel(8, (3, 7), _const_fn(_unit_columns(8, (0, 1, 2))),
                       _const_fn(_unit_columns(8, (4, 5, 6))))
    rates = {"lambda_plus": a, "lambda_minus": c / eta, "mu_plus": eta / d, "mu_minus": 1.0 / b}
    rates0 = {"lambda_plus": c, "lambda_minus": c / eta, "mu_plus": eta / d, "mu_minus": 1.0 / d}
    sys = _diag_system("degenerate", scale, TwoForm.from_pairs(8, pairs), ActionForm(alpha_fn, 8), model,
                       rates, {"a": a, "b": b, "c": c, "d": d, "eta": eta})
    sys.extras.update(model0=model0, rates0=rates0)
    return sys


@register("unbounded")
def unbounded(t: float = 0.5) -> MapSystem:
    """``(I + t, theta, 10 e^t y, x / 10)`` with the unbounded form ``e^I dI^dtheta + dy^dx``."""
    if t <= 0:
        raise ArgumentError("t must be positive")
    et = math.exp(t)
    scale = np.array([1.0, 1.0, 10.0 * et, 0.1])

    def fwd(z, xp):
        return stack_last([z[..., 0] + t, z[..., 1], scale[2] * z[..., 2], scale[3] * z[..., 3]])

    def inv(z, xp):
        return stack_last([z[..., 0] - t, z[..., 1], z[..., 2] / scale[2], z[..., 3] / scale[3]])

    def jac(z, xp):
        return np.diag(scale)

    def omega_fn(z):
        j = np.zeros(z.shape[:-1] + (4, 4))
        j[..., 0, 1] = np.exp(z[..., 0])
        j[..., 1, 0] = -j[..., 0, 1]
        j[..., 2, 3] = 1.0
        j[..., 3, 2] = -1.0
        return j

    def alpha_fn(z):
        out = np.zeros(z.shape)
        out[..., 1] = np.exp(z[..., 0])
        out[..., 3] = z[..., 2]
        return out

    model = NHIMModel(4, (0, 1), _const_fn(_unit_columns(4, (3,))), _const_fn(_unit_columns(4, (2,))),
                      periodic=(False, True, False, False))
    rates = {"lambda_plus": 0.1, "lambda_minus": 0.1 / et, "mu_plus": 1.0, "mu_minus": 1.0}
    prim = ScalarField(lambda z: np.zeros(np.shape(z)[:-1]), lambda z: np.zeros(np.shape(z)))
    return MapSystem(
        name="unbounded", dim=4, forward=fwd, inverse=inv, jacobian=jac,
        omega=TwoForm(omega_fn, 4), eta=et, alpha=ActionForm(alpha_fn, 4), primitive=prim,
        params={"t": t, "eta": et}, periodic=(False, True, False, False), model=model, rates=rates,
        domain=(np.array([-1.0, 0.0, -1.0, -1.0]), np.array([1.0, 1.0, 1.0, 1.0])),
    )


# --------------------------------------------------------------------------
# Torus maps


def left_eigen_pair(A: Array, allow_complex: bool = True):
    """Pick eigen-covectors ``w1, w2`` of ``A^T`` whose wedge is scaled by a positive factor.

    Returns ``(w1, w2, eta, kind)``.  A real pair ``l_i l_j > 0`` with ``l_i l_j != 1`` is
    preferred; otherwise a complex pair ``l, conj(l)`` gives the real and imaginary parts
    of one eigenvector and the factor ``|l|^2``.
    """
    from .errors import ConstructionError  # noqa: PLC0415

    vals, vecs = np.linalg.eig(np.asarray(A, dtype=float).T)
    real = [k for k in range(len(vals)) if abs(vals[k].imag) < 1e-12]
    real.sort(key=lambda k: -abs(vals[k].real))
    for p in range(len(real)):
        for q in range(p + 1, len(real)):
            i, j = real[p], real[q]
            prod = vals[i].real * vals[j].real
            if prod > 0 and abs(prod - 1.0) > 1e-8:
                w1 = vecs[:, i].real / np.linalg.norm(vecs[:, i].real)
                w2 = vecs[:, j].real / np.linalg.norm(vecs[:, j].real)
                return w1, w2, float(prod), "real"
    if allow_complex:
        cplx = [k for k in range(len(vals)) if vals[k].imag > 1e-12]
        for k in cplx:
            eta = float(abs(vals[k]) ** 2)
            if abs(eta - 1.0) > 1e-8:
                v = vecs[:, k]
                return v.real / np.linalg.norm(v.real), v.imag / np.linalg.norm(v.imag), eta, "complex"
    raise ConstructionError("matrix has no eigen pair with positive product different from 1")


@register("torus_concrete")
def torus_concrete(A=((0, 1, 0), (0, 0, 1), (1, 1, 0)), eps: float = 0.05, allow_complex: bool = True) -> MapSystem:
    """``(eta A^{-T} I, A theta)`` on ``R^d x T^d`` with ``omega_0 + eps omega_1``."""
    from .topology import TorusAutomorphism  # noqa: PLC0415

    aut = TorusAutomorphism(A)
    a = np.array(aut.matrix, dtype=float)
    d = a.shape[0]
    if abs(eps) > 0.1:
        raise ArgumentError("|eps| must not exceed 0.1")
    w1, w2, eta, kind = left_eigen_pair(a, allow_complex)
    a_inv = np.array(aut.inverse(), dtype=float)
    lin = np.zeros((2 * d, 2 * d))
    lin[:d, :d] = eta * a_inv.T
    lin[d:, d:] = a
    lin_inv = np.linalg.inv(lin)
    lin_inv[d:, d:] = a_inv
    lin_inv[:d, :d] = a.T / eta

    def fwd(z, xp):
        return z @ lin.T

    def inv(z, xp):
        return z @ lin_inv.T

    def jac(z, xp):
        return lin

    j = np.zeros((2 * d, 2 * d))
    j[:d, d:] = np.eye(d)
    j[d:, d:] = eps * np.outer(w1, w2)
    omega = TwoForm.constant_matrix(j - j.T)
    return MapSystem(
        name="torus_concrete", dim=2 * d, forward=fwd, inverse=inv, jacobian=jac, omega=omega, eta=eta,
        params={"A": aut.matrix, "eps": eps, "eta": eta, "pair": kind, "w1": w1, "w2": w2},
        periodic=(False,) * d + (True,) * d,
        domain=(np.concatenate([-np.ones(d), np.zeros(d)]), np.ones(2 * d)),
    )


@register("skew_graph")
def skew_graph(A=((2, 1), (1, 1)), lam_s: float = 0.3, lam_u: float = 0.3, k0=(1, 0),
               amp_s: float = 1.0, amp_u: float = 1.0, K: int | None = None) -> MapSystem:
    """``(A theta, lam_s s + a_s(theta), u / lam_u + a_u(theta))`` with trigonometric forcing."""
    from .manifolds import TrigPoly, solve_invariant_graph  # noqa: PLC0415
    from .topology import TorusAutomorphism  # noqa: PLC0415

    aut = TorusAutomorphism(A)
    a = np.array(aut.matrix, dtype=float)
    a_inv = np.array(aut.inverse(), dtype=float)
    d = a.shape[0]
    if not (0 < lam_s < 1 and 0 < lam_u < 1):
        raise ArgumentError("lam_s and lam_u must lie in (0, 1)")
    k0 = tuple(int(k) for k in k0)
    a_s = TrigPoly.cosine(k0, amp_s)
    a_u = TrigPoly.sine(k0, amp_u)
    gs = solve_invariant_graph(aut.matrix, lam_s, a_s, K=K, side="s")
    gu = solve_invariant_graph(aut.matrix, lam_u, a_u, K=K, side="u")

    def fwd(z, xp):
        th = z[..., :d]
        th_new = th @ a.T
        s = lam_s * z[..., d] + a_s.evaluate(th, xp)
        u = z[..., d + 1] / lam_u + a_u.evaluate(th, xp)
        return np.concatenate([th_new, stack_last([s, u])], axis=-1)

    def inv(z, xp):
        th = z[..., :d] @ a_inv.T
        s = (z[..., d] - a_s.evaluate(th, xp)) / lam_s
        u = lam_u * (z[..., d + 1] - a_u.evaluate(th, xp))
        return np.concatenate([th, stack_last([s, u])], axis=-1)

    def jac(z, xp):
        th = np.asarray(z, dtype=float)[..., :d]
        out = np.zeros(th.shape[:-1] + (d + 2, d + 2))
        out[..., :d, :d] = a
        out[..., d, :d] = a_s.gradient(th)
        out[..., d + 1, :d] = a_u.gradient(th)
        out[..., d, d] = lam_s
        out[..., d + 1, d + 1] = 1.0 / lam_u
        return out

    def embed(c):
        return np.concatenate([c, stack_last([gs.evaluate(c), gu.evaluate(c)])], axis=-1)

    def tangent(z):
        th = z[..., :d]
        t = np.zeros(th.shape[:-1] + (d + 2, d))
        t[..., :d, :] = np.eye(d)
        t[..., d, :] = gs.gradient(th)
        t[..., d + 1, :] = gu.gradient(th)
        return t

    periodic = (True,) * d + (False, False)
    model = NHIMModel(d + 2, tuple(range(d)), _const_fn(_unit_columns(d + 2, (d,))),
                      _const_fn(_unit_columns(d + 2, (d + 1,))), embed_fn=embed, tangent_fn=tangent,
                      periodic=periodic, symplectic=False)
    rho = float(max(abs(np.linalg.eigvals(a))))
    rho_inv = float(max(abs(np.linalg.eigvals(a_inv))))
    rates = {"lambda_plus": lam_s, "lambda_minus": lam_u, "mu_plus": rho, "mu_minus": rho_inv}
    return MapSystem(
        name="skew_graph", dim=d + 2, forward=fwd, inverse=inv, jacobian=jac, omega=None, eta=None,
        params={"A": aut.matrix, "lam_s": lam_s, "lam_u": lam_u, "k0": k0, "amp_s": amp_s, "amp_u": amp_u},
        periodic=periodic, model=model, rates=rates,
        domain=(np.concatenate([np.zeros(d), [-1.0, -1.0]]), np.ones(d + 2)),
        extras={"graph_s": gs, "graph_u": gu, "a_s": a_s, "a_u": a_u},
    )


# --------------------------------------------------------------------------
# Saddle-type test systems


def _coupling(xp):
    """``h(x) = x^3 exp(-x^2)`` and its first two derivatives."""

    def h0(x):
        return x**3 * xp.exp(-x * x)

    def h1(x):
        return (3 * x**2 - 2 * x**4) * xp.exp(-x * x)

    def h2(x):
        return (6 * x - 14 * x**3 + 4 * x**5) * xp.exp(-x * x)

    return h0, h1, h2


def henon_saddle(eta: float, c: float) -> float:
    """Coordinate ``p`` of the saddle ``(p, p)`` of ``(x, y) -> (y, y^2 - c - eta x)``."""
    disc = (1 + eta) ** 2 + 4 * c
    return 0.5 * ((1 + eta) + math.sqrt(disc))


def henon_saddle_data(eta: float, c: float) -> dict:
    """Multipliers and eigenvectors of the centred factor at its saddle."""
    p = henon_saddle(eta, c)
    root = math.sqrt(p * p - eta)
    ws, wu = p - root, p + root
    es = np.array([1.0, ws]) / math.hypot(1.0, ws)
    eu = np.array([1.0, wu]) / math.hypot(1.0, wu)
    return {"p": p, "ws": ws, "wu": wu, "es": es, "eu": eu}


def _henon_primitive_centered(eta: float, p: float):
    def value(z):
        x, y = z[..., 0], z[..., 1]
        return p * y**2 + y**3 / 3.0 - eta * x * y

    def grad(z):
        x, y = z[..., 0], z[..., 1]
        return np.stack([-eta * y, 2 * p * y + y**2 - eta * x], axis=-1)

    return value, grad


@register("henon")
def henon(eta: float = 0.95, c: float = 2.0, centered: bool = False) -> MapSystem:
    """Hénon-type factor ``(x, y) -> (y, y^2 - c - eta x)``, optionally centred at its saddle."""
    if eta <= 0:
        raise ArgumentError("eta must be positive")
    data = henon_saddle_data(eta, c)
    p = data["p"]
    off = 0.0 if centered else p

    def fwd(z, xp):
        x, y = z[..., 0] - off, z[..., 1] - off
        return stack_last([y + off, 2 * p * y + y * y - eta * x + off])

    def inv(z, xp):
        x1, y1 = z[..., 0] - off, z[..., 1] - off
        return stack_last([(2 * p * x1 + x1 * x1 - y1) / eta + off, x1 + off])

    def jac(z, xp):
        y = z[..., 1] - off
        return matrix_field([[0 * y, 1 + 0 * y], [-eta + 0 * y, 2 * p + 2 * y]])

    value, grad = _henon_primitive_centered(eta, p)
    shift = np.array([off, off])
    saddle = shift.copy()
    prim = ScalarField(lambda z: value(np.asarray(z) - shift), lambda z: grad(np.asarray(z) - shift))
    # the centred primitive differs from the raw one by a linear function, so re-gauge the action form
    alpha = ActionForm(lambda z: np.stack([z[..., 1] - off, np.zeros(z.shape[:-1])], axis=-1), 2)
    model = NHIMModel(2, (), _const_fn(data["es"][:, None]), _const_fn(data["eu"][:, None]),
                      embed_fn=lambda cc: np.broadcast_to(saddle, np.shape(cc)[:-1] + (2,)).copy())
    rates = {"lambda_plus": data["ws"], "lambda_minus": 1.0 / data["wu"], "mu_plus": 1.0, "mu_minus": 1.0}
    return MapSystem(
        name="henon", dim=2, forward=fwd, inverse=inv, jacobian=jac,
        omega=TwoForm.from_pairs(2, [(1, 0, 1.0)]), eta=eta, alpha=alpha, primitive=prim,
        params={"eta": eta, "c": c, "centered": centered}, model=model, rates=rates,
        domain=(saddle - 1.0, saddle + 1.0), extras={"saddle": saddle, **data},
    )


@register("coupled_test")
def coupled_test(eta: float = 0.95, c: float = 2.0, eps: float = 1e-3, mu: float = 0.0, k: float = 0.0) -> MapSystem:
    """Dissipative standard map times a centred Hénon factor, composed with a position shear.

    Coordinates ``(I, theta, xi, zeta)`` with ``(xi, zeta)`` measured from the saddle.
    ``f = T o (D x H)`` with ``T(I, theta, xi, zeta) = (I - eps V'(theta) h(xi), theta, xi,
    zeta - eps V(theta) h'(xi))``.
    """
    if not 0 < eta < 1:
        raise ArgumentError("eta must lie in (0, 1)")
    data = henon_saddle_data(eta, c)
    p = data["p"]
    sigma = critical_shift(eta, mu)

    def fwd(z, xp):
        v0, v1, _ = _cos_potential(xp)
        h0, h1, _ = _coupling(xp)
        i, t, x, y = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
        i1 = eta * i + mu + k * v1(t)
        t1 = t + i1
        x1 = y
        y1 = 2 * p * y + y * y - eta * x
        return stack_last([i1 - eps * v1(t1) * h0(x1), t1, x1, y1 - eps * v0(t1) * h1(x1)])

    def inv(z, xp):
        v0, v1, _ = _cos_potential(xp)
        h0, h1, _ = _coupling(xp)
        i2, t2, x2, y2 = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
        i1 = i2 + eps * v1(t2) * h0(x2)
        y1 = y2 + eps * v0(t2) * h1(x2)
        t = t2 - i1
        i = (i1 - mu - k * v1(t)) / eta
        return stack_last([i, t, (2 * p * x2 + x2 * x2 - y1) / eta, x2])

    def jac(z, xp):
        v0, v1, v2 = _cos_potential(xp)
        h0, h1, h2 = _coupling(xp)
        i, t, x, y = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
        zero = 0 * i
        kw = k * v2(t)
        t1 = t + eta * i + mu + k * v1(t)
        x1 = y
        dg = matrix_field([
            [eta + zero, kw, zero, zero],
            [eta + zero, 1 + kw, zero, zero],
            [zero, zero, zero, 1 + zero],
            [zero, zero, -eta + zero, 2 * p + 2 * y],
        ])
        a = -eps * v2(t1) * h0(x1)
        b = -eps * v1(t1) * h1(x1)
        e = -eps * v0(t1) * h2(x1)
        dt = matrix_field([
            [1 + zero, a, b, zero],
            [zero, 1 + zero, zero, zero],
            [zero, zero, 1 + zero, zero],
            [zero, b, e, 1 + zero],
        ])
        return dt @ dg

    pd = dsm_primitive(eta, mu, k, sigma)
    hv, hg = _henon_primitive_centered(eta, p)
    v0n, v1n, v2n = _cos_potential(np_ns)
    h0n, h1n, _ = _coupling(np_ns)

    def prim_value(z):
        i, t, y = z[..., 0], z[..., 1], z[..., 3]
        t1 = t + eta * i + mu + k * v1n(t)
        return pd(z[..., :2]) + hv(z[..., 2:]) - eps * v0n(t1) * h0n(y)

    def prim_grad(z):
        i, t, y = z[..., 0], z[..., 1], z[..., 3]
        t1 = t + eta * i + mu + k * v1n(t)
        g = np.concatenate([pd.gradient(z[..., :2]), hg(z[..., 2:])], axis=-1)
        w = -eps * v1n(t1) * h0n(y)
        g[..., 0] += w * eta
        g[..., 1] += w * (1 + k * v2n(t))
        g[..., 3] += -eps * v0n(t1) * h1n(y)
        return g

    def alpha_fn(z):
        out = np.zeros(z.shape)
        out[..., 1] = z[..., 0] + sigma
        out[..., 2] = z[..., 3]
        return out

    es = np.zeros((4, 1))
    es[2:, 0] = data["es"]
    eu = np.zeros((4, 1))
    eu[2:, 0] = data["eu"]
    periodic = (False, True, False, False)
    model = NHIMModel(4, (0, 1), _const_fn(es), _const_fn(eu), periodic=periodic)
    rates = None
    if k == 0.0:
        rates = {"lambda_plus": data["ws"], "lambda_minus": 1.0 / data["wu"], "mu_plus": 1.0, "mu_minus": 1.0 / eta}
    return MapSystem(
        name="coupled_test", dim=4, forward=fwd, inverse=inv, jacobian=jac,
        omega=TwoForm.from_pairs(4, [(0, 1, 1.0), (3, 2, 1.0)]), eta=eta,
        alpha=ActionForm(alpha_fn, 4, {"sigma": sigma}), primitive=ScalarField(prim_value, prim_grad),
        params={"eta": eta, "c": c, "eps": eps, "mu": mu, "k": k, "sigma": sigma},
        periodic=periodic, model=model, rates=rates,
        domain=(np.array([-1.0, 0.0, -1.0, -1.0]), np.array([1.0, 1.0, 1.0, 1.0])),
        extras=dict(data),
    )


# --------------------------------------------------------------------------
# User-declared systems


def custom_system(variables, forward, inverse=None, params=None, eta: float = 1.0, omega_pairs=(),
                  periodic=None, domain=None, name: str = "custom") -> MapSystem:
    """System given by coordinate-wise expression strings.

    Without ``inverse`` expressions the inverse is solved by Newton's method (double precision only).
    """
    from scipy.optimize import fsolve  # noqa: PLC0415

    from .expr import compile_vector  # noqa: PLC0415

    variables = tuple(variables)
    d = len(variables)
    if len(forward) != d or (inverse is not None and len(inverse) != d):
        raise ArgumentError("one expression per coordinate is required")
    fwd = compile_vector(forward, variables, params)
    if inverse is not None:
        inv = compile_vector(inverse, variables, params)
    else:
        def inv(z, xp):
            z = np.asarray(z, dtype=float)
            flat = z.reshape(-1, d)
            out = np.empty_like(flat)
            for r, target in enumerate(flat):
                out[r] = fsolve(lambda w: fwd(w, np_ns) - target, target, xtol=1e-14)
            return out.reshape(z.shape)
    omega = TwoForm.from_pairs(d, [(int(i), int(j), float(cf)) for i, j, cf in omega_pairs]) if omega_pairs else None
    return MapSystem(
        name=name, dim=d, forward=fwd, inverse=inv, jacobian=None, omega=omega, eta=eta,
        params=dict(params or {}), periodic=tuple(periodic) if periodic else (False,) * d,
        domain=domain,
    )
