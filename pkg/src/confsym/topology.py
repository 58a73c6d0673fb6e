"""Exact integer action on 2-cohomology of R^d x T^d and admissible conformal factors."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np
import sympy
from scipy.optimize import linear_sum_assignment

from .errors import ArgumentError

IntMatrix = tuple[tuple[int, ...], ...]

CERTIFIED_DEGREE = 6


def _as_int_matrix(a) -> IntMatrix:
    rows = [list(r) for r in (a.tolist() if isinstance(a, np.ndarray) else a)]
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise ArgumentError("matrix must be square and non-empty")
    out = []
    for r in rows:
        row = []
        for v in r:
            if isinstance(v, (float, np.floating)):
                if not float(v).is_integer():
                    raise ArgumentError("matrix entries must be integers")
                v = int(v)
            row.append(int(v))
        out.append(tuple(row))
    return tuple(out)


def int_det(a: IntMatrix) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    m = [list(r) for r in a]
    n = len(m)
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def int_matmul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    n, k, m = len(a), len(b), len(b[0])
    return tuple(tuple(sum(a[i][t] * b[t][j] for t in range(k)) for j in range(m)) for i in range(n))


def int_inverse(a: IntMatrix) -> IntMatrix:
    """Inverse of a unimodular integer matrix (Gauss-Jordan over the rationals)."""
    n = len(a)
    m = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise ArgumentError("matrix is singular")
        m[col], m[piv] = m[piv], m[col]
        pv = m[col][col]
        m[col] = [v / pv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                fac = m[r][col]
                m[r] = [x - fac * y for x, y in zip(m[r], m[col])]
    inv = [[m[i][n + j] for j in range(n)] for i in range(n)]
    if any(v.denominator != 1 for row in inv for v in row):
        raise ArgumentError("inverse is not integral")
    return tuple(tuple(int(v) for v in row) for row in inv)


def charpoly(a) -> list[int]:
    """Characteristic polynomial ``det(tI - A)`` by the division-free Berkowitz algorithm.

    Returns integer coefficients from the leading one down to the constant term.
    """
    a = [list(r) for r in a]
    n = len(a)
    poly = [1]
    for k in range(n):
        # leading principal block of size k+1: a[k][k], row r = a[k][:k], column c = a[:k][k]
        r = a[k][:k]
        c = [a[i][k] for i in range(k)]
        sub = [row[:k] for row in a[:k]]
        toeplitz_col = [1, -a[k][k]]
        vec = c[:]
        for _ in range(k):
            toeplitz_col.append(-sum(r[i] * vec[i] for i in range(k)))
            vec = [sum(sub[i][j] * vec[j] for j in range(k)) for i in range(k)]
        new = []
        for i in range(len(poly) + 1):
            s = 0
            for j in range(len(poly)):
                t = i - j
                if 0 <= t < len(toeplitz_col):
                    s += toeplitz_col[t] * poly[j]
            new.append(s)
        poly = new[: k + 2]
    return poly


def poly_factor_degrees(coeffs: list[int]) -> list[tuple[list[int], int, bool]]:
    """Factor an integer polynomial; returns ``(factor coefficients, multiplicity, certified)``."""
    t = sympy.Symbol("t")
    p = sympy.Poly(coeffs, t, domain="ZZ")
    _, factors = sympy.factor_list(p)
    out = []
    for fac, mult in factors:
        fc = [int(v) for v in sympy.Poly(fac, t).all_coeffs()]
        out.append((fc, int(mult), len(fc) - 1 <= CERTIFIED_DEGREE))
    return out


def exact_spectrum(coeffs: list[int], dps: int = 50) -> np.ndarray:
    """Roots of an integer polynomial: exact factorisation, then high-precision roots of each simple factor."""
    import mpmath  # noqa: PLC0415

    roots = []
    with mpmath.workdps(dps):
        for fc, mult, _ in poly_factor_degrees(coeffs):
            if len(fc) < 2:
                continue
            rts = mpmath.polyroots(fc, maxsteps=200, extraprec=2 * dps) if len(fc) > 2 else [mpmath.mpf(-fc[1]) / fc[0]]
            for r in rts:
                roots.extend([complex(r)] * mult)
    return np.array(roots, dtype=complex)


@dataclass(frozen=True)
class TorusAutomorphism:
    """Integer matrix with determinant +-1."""

    matrix: IntMatrix

    def __init__(self, a):
        mat = _as_int_matrix(a)
        if abs(int_det(mat)) != 1:
            raise ArgumentError("matrix is not unimodular")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return len(self.matrix)

    def inverse(self) -> IntMatrix:
        return int_inverse(self.matrix)

    def as_array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=float)


def pair_index(d: int) -> list[tuple[int, int]]:
    return list(combinations(range(d), 2))


@dataclass(frozen=True)
class CohomologyAction:
    """Matrix of the induced map on ``H^2`` in the basis ``dtheta_i ^ dtheta_j`` (``i < j``)."""

    matrix: IntMatrix
    pairs: tuple[tuple[int, int], ...]
    charpoly: tuple[int, ...]
    spectrum: np.ndarray = field(compare=False)

    def as_array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=float)


def wedge_square(a) -> CohomologyAction:
    """Entry at row ``(k, l)``, column ``(i, j)``: ``A_ik A_jl - A_il A_jk``."""
    aut = a if isinstance(a, TorusAutomorphism) else TorusAutomorphism(a)
    m = aut.matrix
    pairs = pair_index(aut.dim)
    mat = tuple(
        tuple(m[i][k] * m[j][l] - m[i][l] * m[j][k] for (i, j) in pairs)
        for (k, l) in pairs
    )
    cp = tuple(charpoly(mat)) if pairs else (1,)
    spec = exact_spectrum(list(cp)) if pairs else np.zeros(0, dtype=complex)
    return CohomologyAction(mat, tuple(pairs), cp, spec)


def compound_square(a) -> IntMatrix:
    """Second compound matrix (transpose of :func:`wedge_square`); multiplicative in the given order."""
    w = wedge_square(a).matrix
    return tuple(zip(*w)) if w else ()


@dataclass
class AdmissibleFactors:
    spectrum: np.ndarray
    positive_real: list[float]
    degrees: list[int]
    factor_degrees: list[int]
    certified: list[bool]
    charpoly: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "spectrum": [[float(z.real), float(z.imag)] for z in self.spectrum],
            "positive_real": self.positive_real,
            "degrees": self.degrees,
            "factor_degrees": self.factor_degrees,
            "certified": self.certified,
            "charpoly": list(self.charpoly),
        }


def _poly_eval(coeffs, z):
    acc = 0
    for cf in coeffs:
        acc = acc * z + cf
    return acc


def admissible_factors(a, tol: float = 1e-9) -> AdmissibleFactors:
    """Candidate conformal factors: positive real eigenvalues of the ``H^2`` action, with algebraic degrees."""
    act = wedge_square(a)
    spec = act.spectrum
    factors = poly_factor_degrees(list(act.charpoly)) if act.pairs else []
    scale = max(1.0, float(np.max(np.abs(spec)))) if spec.size else 1.0
    pos, degs = [], []
    for z in spec:
        if abs(z.imag) <= tol * scale and z.real > 0:
            pos.append(float(z.real))
            vals = [abs(_poly_eval(fc, z.real)) / max(1.0, sum(abs(c) for c in fc)) for fc, _, _ in factors]
            degs.append(len(factors[int(np.argmin(vals))][0]) - 1 if factors else 1)
    order = np.argsort(pos)
    return AdmissibleFactors(
        spectrum=spec, positive_real=[pos[i] for i in order], degrees=[degs[i] for i in order],
        factor_degrees=[len(fc) - 1 for fc, mult, _ in factors for _ in range(mult)],
        certified=[cert for _, mult, cert in factors for _ in range(mult)], charpoly=act.charpoly,
    )


def spectrum_law_residual(a) -> float:
    """Distance between the spectrum of the ``H^2`` action and ``{l_i l_j : i < j}`` under optimal matching."""
    aut = a if isinstance(a, TorusAutomorphism) else TorusAutomorphism(a)
    lam = exact_spectrum(charpoly(aut.matrix))
    prods = np.array([lam[i] * lam[j] for i, j in pair_index(aut.dim)])
    spec = wedge_square(aut).spectrum
    cost = np.abs(prods[:, None] - spec[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols])) if len(rows) else 0.0


def determinant_law_holds(a) -> bool:
    aut = a if isinstance(a, TorusAutomorphism) else TorusAutomorphism(a)
    act = wedge_square(aut)
    if not act.pairs:
        return True
    return int_det(act.matrix) == int_det(aut.matrix) ** (aut.dim - 1)


def multiplicativity_holds(a, b) -> dict:
    """Exact checks: ``W(AB) = W(B) W(A)`` for the pullback matrix and ``C(AB) = C(A) C(B)`` for the compound."""
    ab = int_matmul(_as_int_matrix(a), _as_int_matrix(b))
    wa, wb, wab = wedge_square(a).matrix, wedge_square(b).matrix, wedge_square(ab).matrix
    ca, cb, cab = compound_square(a), compound_square(b), compound_square(ab)
    return {"pullback_order": wab == int_matmul(wb, wa), "compound_order": cab == int_matmul(ca, cb)}


def random_unimodular(d: int, rng: np.random.Generator, steps: int | None = None, bound: int = 2) -> IntMatrix:
    """Random product of elementary integer matrices and signed permutations."""
    m = [[int(i == j) for j in range(d)] for i in range(d)]
    for _ in range(steps or 3 * d):
        i, j = rng.choice(d, size=2, replace=False)
        c = int(rng.integers(-bound, bound + 1))
        for k in range(d):
            m[i][k] += c * m[j][k]
        if rng.random() < 0.3:
            m[i], m[j] = m[j], m[i]
        if rng.random() < 0.2:
            m[i] = [-v for v in m[i]]
    return tuple(tuple(r) for r in m)


def commuting_closure_residual(a, b, powers=((1, 0), (0, 1), (1, 1), (2, 1), (1, -1))) -> float:
    """For commuting ``A``, ``B`` with simple spectra, check that products of paired factors are admissible for ``A^m B^n``.

    Returns the largest distance from a predicted positive factor to the computed admissible set.
    """
    am, bm = TorusAutomorphism(a), TorusAutomorphism(b)
    if int_matmul(am.matrix, bm.matrix) != int_matmul(bm.matrix, am.matrix):
        raise ArgumentError("matrices do not commute")
    lam, vec = np.linalg.eig(am.as_array())
    if np.min(np.abs(lam[:, None] - lam[None, :]) + np.eye(len(lam))) < 1e-8:
        raise ArgumentError("spectrum of A is not simple")
    mu = np.diag(np.linalg.solve(vec, bm.as_array() @ vec))
    worst = 0.0
    for m_pow, n_pow in powers:
        prod = _int_power(am.matrix, m_pow)
        prod = int_matmul(prod, _int_power(bm.matrix, n_pow))
        adm = admissible_factors(prod).positive_real
        for i, j in pair_index(am.dim):
            val = (lam[i] * lam[j]) ** m_pow * (mu[i] * mu[j]) ** n_pow
            if abs(val.imag) < 1e-9 * max(1.0, abs(val)) and val.real > 0:
                gap = min((abs(val.real - x) / max(1.0, abs(x)) for x in adm), default=np.inf)
                worst = max(worst, gap)
    return worst


def _int_power(a: IntMatrix, n: int) -> IntMatrix:
    base = a if n >= 0 else int_inverse(a)
    out = tuple(tuple(int(i == j) for j in range(len(a))) for i in range(len(a)))
    for _ in range(abs(n)):
        out = int_matmul(out, base)
    return out


def verify_concrete_map(a, eps: float = 0.05, samples: int = 1000, seed: int = 0,
                        allow_complex: bool = True) -> float:
    """Conformality residual of the concrete torus map for ``omega_0 + eps omega_1``."""
    from .geometry import conformality_residual  # noqa: PLC0415
    from .systems import torus_concrete  # noqa: PLC0415

    sys = torus_concrete(A=a, eps=eps, allow_complex=allow_complex)
    pts = sys.sample(np.random.default_rng(seed), samples)
    return conformality_residual(sys, pts)


def nondegeneracy_sweep(a, eps_values, allow_complex: bool = True) -> list[float]:
    """Smallest singular value of the form matrix for each ``eps``."""
    from .systems import torus_concrete  # noqa: PLC0415

    out = []
    for eps in eps_values:
        sys = torus_concrete(A=a, eps=float(eps), allow_complex=allow_complex)
        j = sys.omega.matrix(np.zeros(sys.dim))
        out.append(float(np.linalg.svd(j, compute_uv=False)[-1]))
    return out
