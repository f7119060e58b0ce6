"""Gegenbauer polynomials normalized to P_n(1) = 1.

The family P_n^(a) on [-1, 1] satisfies P_0 = 1, P_1 = x and the
multiplication formula

    x P_n = n/(2n+2a+1) P_{n-1} + (n+2a+1)/(2n+2a+1) P_{n+1},

read here as an upward recurrence.  For a >= -1/2 the product of two
family members expands with nonnegative coefficients summing to one,
which is what turns index space N into a hypergroup and drives every
kernel computation in this package.  a = -1/2 recovers the Chebyshev
case P_n(cos t) = cos(n t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from types import MappingProxyType
from typing import Mapping

import numpy as np
from scipy.special import roots_jacobi

from gegwalk.errors import ConsistencyError, QuadratureError

__all__ = [
    "HypergroupIndex",
    "LinearizationRow",
    "eval_poly",
    "eval_poly_table",
    "weight",
    "orthogonality_integral",
    "linearization",
]

_MAX_QUAD_DEGREE = 200


@dataclass(frozen=True)
class HypergroupIndex:
    """Family parameter a >= -1/2 with the shifted form lam = a + 1/2."""

    alpha: float

    def __post_init__(self):
        if not self.alpha >= -0.5:
            raise ValueError("HypergroupIndex: alpha must be >= -1/2")

    @property
    def lam(self) -> float:
        return self.alpha + 0.5


def eval_poly(idx: HypergroupIndex, n: int, x: float) -> float:
    """P_n^(alpha)(x) for |x| <= 1 by the three-term upward recurrence.

    Upward is stable here: all values stay bounded by 1 in modulus.
    """
    if n < 0:
        raise ValueError("eval_poly: n must be >= 0")
    if not -1.0 <= x <= 1.0:
        raise ValueError("eval_poly: x must lie in [-1, 1]")
    a = idx.alpha
    if n == 0:
        return 1.0
    prev, cur = 1.0, x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 2 * a + 1) * x * cur - k * prev) / (k + 2 * a + 1)
    return cur


def eval_poly_table(idx: HypergroupIndex, nmax: int, xs: np.ndarray) -> np.ndarray:
    """All degrees 0..nmax at once on an array of points.

    Returns an array of shape (nmax+1, len(xs)); row n is P_n at xs.
    Same recurrence as eval_poly, vectorized over the points.
    """
    if nmax < 0:
        raise ValueError("eval_poly_table: nmax must be >= 0")
    xs = np.asarray(xs, dtype=float)
    if xs.size and (xs.min() < -1.0 or xs.max() > 1.0):
        raise ValueError("eval_poly_table: points must lie in [-1, 1]")
    a = idx.alpha
    table = np.empty((nmax + 1, xs.size))
    table[0] = 1.0
    if nmax >= 1:
        table[1] = xs
    for k in range(1, nmax):
        table[k + 1] = ((2 * k + 2 * a + 1) * xs * table[k] - k * table[k - 1]) / (
            k + 2 * a + 1
        )
    return table


def weight(idx: HypergroupIndex, n: int) -> float:
    """Orthogonality weight w_n: 1/orthogonality_integral(idx, n, n).

    w_n = (2n+2a+1) Gamma(n+2a+1) / (2^(2a+1) Gamma(n+1) Gamma(a+1)^2)
    for n >= 1.  At n = 0 the prefactor (2a+1)Gamma(2a+1) is rewritten as
    Gamma(2a+2), which also covers a = -1/2 (value 1/pi) by continuity.
    The gamma ratio is evaluated in log space so large n cannot overflow.
    """
    if n < 0:
        raise ValueError("weight: n must be >= 0")
    a = idx.alpha
    denom = 2.0 ** (2 * a + 1) * math.gamma(a + 1.0) ** 2
    if n == 0:
        return math.gamma(2 * a + 2.0) / denom
    log_ratio = math.lgamma(n + 2 * a + 1.0) - math.lgamma(n + 1.0)
    return (2 * n + 2 * a + 1) * math.exp(log_ratio) / denom


def _jacobi_nodes(alpha: float, npoints: int):
    # Gauss nodes for the measure (1-x^2)^alpha dx on [-1, 1]
    return roots_jacobi(npoints, alpha, alpha)


def orthogonality_integral(idx: HypergroupIndex, n: int, m: int) -> float:
    """Integral of P_n P_m against (1-x^2)^alpha dx over [-1, 1].

    Near 0 for n != m and 1/weight(idx, n) on the diagonal.  Uses a
    Gauss rule matched to the endpoint weight; a naive uniform rule would
    fail for alpha in (-1/2, 0).  The rule is exact for the integrand
    degree, and a cross-check at higher node count guards against
    accumulation error; disagreement raises QuadratureError.
    """
    if n < 0 or m < 0:
        raise ValueError("orthogonality_integral: degrees must be >= 0")
    if max(n, m) > _MAX_QUAD_DEGREE:
        raise ValueError(
            f"orthogonality_integral: degrees above {_MAX_QUAD_DEGREE} are outside "
            "the quadrature accuracy envelope"
        )
    npoints = 2 * max(n, m) + 16
    vals = []
    for extra in (0, 8):
        nodes, wts = _jacobi_nodes(idx.alpha, npoints + extra)
        table = eval_poly_table(idx, max(n, m), nodes)
        vals.append(float(np.sum(wts * table[n] * table[m])))
    if abs(vals[0] - vals[1]) > 1e-9 * max(1.0, abs(vals[1])):
        raise QuadratureError(
            f"orthogonality_integral({n},{m}) did not stabilize",
            achieved_tol=abs(vals[0] - vals[1]),
        )
    return vals[1]


@dataclass(frozen=True)
class LinearizationRow:
    """Expansion of a product P_m P_n back into the family.

    ``coeffs`` maps k in {n-m, n-m+2, ..., n+m} to the coefficient of P_k;
    the coefficients are nonnegative and sum to 1, so each row is a
    probability vector on the parity sublattice.
    """

    m: int
    n: int
    coeffs: Mapping[int, float]

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(self.coeffs))

    def __getitem__(self, k: int) -> float:
        return self.coeffs.get(k, 0.0)


def _apply_jacobi(a: float, v: np.ndarray) -> np.ndarray:
    """Multiplication-by-x operator in the P_n coordinate system.

    Column j feeds j/(2j+2a+1) upward into j-1 and (j+2a+1)/(2j+2a+1)
    into j+1; column 0 feeds 1 into index 1 (the a = -1/2 limit of the
    same ratio).  The result is one entry longer than the input.
    """
    j = np.arange(1, v.size)
    denom = 2 * j + 2 * a + 1
    out = np.zeros(v.size + 1)
    out[:-2] += v[1:] * (j / denom)  # down-moves from columns 1..
    out[2:] += v[1:] * ((j + 2 * a + 1) / denom)  # up-moves from columns 1..
    out[1] += v[0]  # column 0 always moves up
    return out


@lru_cache(maxsize=4096)
def _linearization_cached(alpha: float, m: int, n: int) -> LinearizationRow:
    a = alpha
    v_prev = np.zeros(n + 1)
    v_prev[n] = 1.0  # P_0 P_n = P_n
    if m == 0:
        return LinearizationRow(m=0, n=n, coeffs=MappingProxyType({n: 1.0}))
    v_cur = _apply_jacobi(a, v_prev)
    v_prev = np.concatenate((v_prev, [0.0]))
    for j in range(1, m):
        v_next = ((2 * j + 2 * a + 1) * _apply_jacobi(a, v_cur) - j * np.concatenate((v_prev, [0.0]))) / (
            j + 2 * a + 1
        )
        v_prev, v_cur = np.concatenate((v_cur, [0.0])), v_next
    raw = v_cur
    support = range(n - m, n + m + 1, 2)
    neg = raw.min()
    if neg < -1e-14:
        raise ConsistencyError(
            f"linearization({m},{n}) at alpha={a:g}: coefficient {neg:.3e} "
            "below the round-off floor"
        )
    raw = np.maximum(raw, 0.0)
    total = raw.sum()
    if abs(total - 1.0) > 1e-10:
        raise ConsistencyError(
            f"linearization({m},{n}) at alpha={a:g}: row sum {total!r} far from 1"
        )
    raw /= total
    coeffs = {k: float(raw[k]) for k in support if raw[k] != 0.0}
    return LinearizationRow(m=m, n=n, coeffs=MappingProxyType(coeffs))


def linearization(idx: HypergroupIndex, m: int, n: int) -> LinearizationRow:
    """Coefficients of P_m P_n in the basis {P_k}.

    Computed as the m-step polynomial recurrence applied to the
    multiplication-by-x operator acting on the n-th basis vector; only
    the recurrence itself is needed, no closed form.  Rows are cached;
    the cache is guarded by the lru_cache internal lock and results are
    deterministic, so cached and fresh rows are bit-identical.
    """
    if m < 0 or n < 0:
        raise ValueError("linearization: indices must be >= 0")
    if m > n:
        m, n = n, m  # the product is symmetric
    return _linearization_cached(idx.alpha, m, n)
