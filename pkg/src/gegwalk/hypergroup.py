"""Measures on N, the generalized convolution, and exact walk kernels.

The product formula for Gegenbauer polynomials induces a convolution of
point masses, delta_m * delta_n = sum_k c(m,n,k) delta_k, with the
linearization coefficients as weights.  Extended bilinearly this gives a
commutative convolution of probability measures on N, a transition
kernel p(x, .) = delta_x * mu for any step measure mu, and a Fourier
calculus in which mu_hat(theta) = sum mu(n) P_n(cos theta) turns
convolution into pointwise products.

Exact n-step laws are computed by iterating the one-step operator on a
dense coefficient vector; the n-fold convolution route is kept as a slow
cross-check oracle.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal, Mapping, NamedTuple

import numpy as np

from gegwalk.errors import ConsistencyError, QuadratureError, StateCapError
from gegwalk.gegenbauer import (
    HypergroupIndex,
    _apply_jacobi,
    _jacobi_nodes,
    eval_poly,
    eval_poly_table,
    linearization,
    weight,
)

__all__ = [
    "SparseMeasure",
    "GegenbauerKernel",
    "MembershipResult",
    "convolve",
    "kernel_row",
    "n_step",
    "n_step_sequence",
    "n_step_by_convolution",
    "fourier",
    "inverse_fourier",
    "classify",
    "drift_constant",
    "is_gegenbauer_walk",
    "transition_matrix",
]

DEFAULT_STATE_CAP = 1_000_000

# Internal storage switches to a dense buffer when the support fills more
# than a quarter of [0, max_state]; behavior is identical either way.
_DENSE_DENSITY = 0.25


class SparseMeasure:
    """Finitely supported measure on the nonnegative integers.

    The probability variant (default) requires nonnegative masses summing
    to 1 within ``total_tol``.  A signed variant exists only to hold
    quadrature output (inverse Fourier coefficients can go slightly
    negative) and is flagged via ``is_signed``.  Instances are immutable.
    """

    __slots__ = ("_dense", "_map", "_signed")

    def __init__(
        self,
        entries: Mapping[int, float] | Iterable[tuple[int, float]],
        *,
        signed: bool = False,
        total_tol: float = 1e-12,
    ):
        items: dict[int, float] = {}
        pairs = entries.items() if hasattr(entries, "items") else entries
        for s, m in pairs:
            state = int(s)
            mass = float(m)
            if state != s:
                raise ValueError(f"SparseMeasure: non-integer state {s!r}")
            if state < 0:
                raise ValueError(f"SparseMeasure: negative state {state}")
            if mass != 0.0:
                items[state] = items.get(state, 0.0) + mass
        if not signed:
            neg = [s for s, m in items.items() if m < 0.0]
            if neg:
                raise ValueError(f"SparseMeasure: negative mass at states {sorted(neg)}")
            total = math.fsum(items.values())
            if abs(total - 1.0) > total_tol:
                raise ValueError(
                    f"SparseMeasure: total mass {total!r} differs from 1 "
                    f"by more than {total_tol:g}"
                )
        self._signed = bool(signed)
        if items and len(items) > _DENSE_DENSITY * (max(items) + 1):
            dense = np.zeros(max(items) + 1)
            for s, m in items.items():
                dense[s] = m
            dense.setflags(write=False)
            self._dense = dense
            self._map = None
        else:
            self._dense = None
            self._map = items

    @classmethod
    def point(cls, state: int) -> "SparseMeasure":
        """Unit mass at a single state."""
        return cls({state: 1.0})

    @classmethod
    def from_array(cls, masses: np.ndarray, **kwargs) -> "SparseMeasure":
        arr = np.asarray(masses, dtype=float)
        return cls({i: float(v) for i, v in enumerate(arr) if v != 0.0}, **kwargs)

    # -- read access -------------------------------------------------

    @property
    def is_signed(self) -> bool:
        return self._signed

    @property
    def support(self) -> tuple[int, ...]:
        if self._dense is not None:
            return tuple(int(i) for i in np.flatnonzero(self._dense))
        return tuple(sorted(self._map))

    @property
    def max_state(self) -> int:
        sup = self.support
        return sup[-1] if sup else 0

    @property
    def total(self) -> float:
        if self._dense is not None:
            return math.fsum(self._dense[self._dense != 0.0])
        return math.fsum(self._map.values())

    def mass(self, state: int) -> float:
        if state < 0:
            return 0.0
        if self._dense is not None:
            return float(self._dense[state]) if state < self._dense.size else 0.0
        return self._map.get(state, 0.0)

    __getitem__ = mass

    def items(self):
        """(state, mass) pairs in increasing state order."""
        if self._dense is not None:
            for i in np.flatnonzero(self._dense):
                yield int(i), float(self._dense[i])
        else:
            for s in sorted(self._map):
                yield s, self._map[s]

    def as_dict(self) -> dict[int, float]:
        return dict(self.items())

    def as_array(self, length: int | None = None) -> np.ndarray:
        n = (self.max_state + 1) if length is None else length
        out = np.zeros(n)
        for s, m in self.items():
            if s < n:
                out[s] = m
        return out

    def __eq__(self, other):
        if not isinstance(other, SparseMeasure):
            return NotImplemented
        return self._signed == other._signed and self.as_dict() == other.as_dict()

    __hash__ = None

    def __repr__(self):
        kind = "signed" if self._signed else "prob"
        return f"SparseMeasure({self.as_dict()!r}, {kind})"

    # -- serialization -----------------------------------------------

    def to_csv(self) -> str:
        """Two-column text, ``state,mass``, one row per support point.

        Masses use shortest round-trip decimals, so parsing the text
        recovers the exact doubles.
        """
        lines = ["state,mass"]
        lines += [f"{s},{m!r}" for s, m in self.items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, *, signed: bool = False, **kwargs) -> "SparseMeasure":
        rows = [ln for ln in text.splitlines() if ln.strip()]
        if not rows or rows[0].strip() != "state,mass":
            raise ValueError("SparseMeasure.from_csv: expected 'state,mass' header")
        pairs = []
        for ln in rows[1:]:
            s, _, m = ln.partition(",")
            pairs.append((int(s), float(m)))
        return cls(pairs, signed=signed, **kwargs)

    def to_json(self, alpha: float | None = None) -> str:
        """JSON object {alpha, entries:{state: mass}}; keys in state order."""
        doc = {
            "alpha": alpha,
            "entries": {str(s): m for s, m in self.items()},
        }
        if self._signed:
            doc["signed"] = True
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str, **kwargs) -> tuple["SparseMeasure", float | None]:
        """Inverse of to_json; returns the measure and the stored alpha."""
        doc = json.loads(text)
        signed = bool(doc.get("signed", False))
        mu = cls(
            {int(s): float(m) for s, m in doc["entries"].items()},
            signed=signed,
            **kwargs,
        )
        return mu, doc["alpha"]


@dataclass(frozen=True)
class GegenbauerKernel:
    """Transition kernel p(x, .) = delta_x * mu of the walk with step mu.

    ``aperiodic`` records whether the support of mu leaves the even
    sublattice 2N.  Note the edge this convention leaves open: a step
    measure supported only on odd states (the unit step, say) passes this
    flag yet alternates parity deterministically, so its n-step laws
    vanish on alternating parity classes; the parity-refined asymptotics
    handle that case separately.
    """

    idx: HypergroupIndex
    step_measure: SparseMeasure
    aperiodic: bool = field(init=False)

    def __post_init__(self):
        if self.step_measure.is_signed:
            raise ValueError("GegenbauerKernel: step measure must be a probability measure")
        sup = self.step_measure.support
        object.__setattr__(self, "aperiodic", any(s % 2 == 1 for s in sup))


def _step_once(a: float, mu_items: list[tuple[int, float]], v: np.ndarray, smax: int) -> np.ndarray:
    """One transition: dense law v -> v * mu, output len(v) + smax.

    Accumulates mu(s) * P_s(J) v along the three-term recurrence in s, so
    the cost is O(smax * len(v)) regardless of how many atoms mu has.
    """
    out = np.zeros(v.size + smax)
    lookup = dict(mu_items)
    if 0 in lookup:
        out[: v.size] += lookup[0] * v
    if smax == 0:
        return out
    v_prev = v
    v_cur = _apply_jacobi(a, v)
    if 1 in lookup:
        out[: v_cur.size] += lookup[1] * v_cur
    for s in range(1, smax):
        v_next = (
            (2 * s + 2 * a + 1) * _apply_jacobi(a, v_cur)
            - s * np.concatenate((v_prev, np.zeros(2)))
        ) / (s + 2 * a + 1)
        v_prev, v_cur = v_cur, v_next
        w = lookup.get(s + 1)
        if w:
            out[: v_cur.size] += w * v_cur
    return out


def _clamp_roundoff(v: np.ndarray) -> np.ndarray:
    """Floor negative round-off at 0 in a law vector, in place.

    Entries that should vanish by exact cancellation can come out at
    either sign of magnitude ~eps * max; genuinely negative values beyond
    that scale indicate a bug and raise.
    """
    mn = v.min()
    if mn < 0.0:
        if mn < -1e-12 * max(float(v.max()), 0.0):
            raise ConsistencyError(
                f"law vector has negative entry {mn:.3e} beyond round-off scale"
            )
        np.maximum(v, 0.0, out=v)
    return v


def convolve(idx: HypergroupIndex, mu: SparseMeasure, nu: SparseMeasure) -> SparseMeasure:
    """Generalized convolution mu * nu of two probability measures.

    The operands are ordered canonically before the sweep (smaller max
    support drives the Jacobi recurrence), so both argument orders run
    the identical computation and commutativity holds bit for bit.
    """
    if mu.is_signed or nu.is_signed:
        raise ValueError("convolve: inputs must be probability measures")

    def order_key(m: SparseMeasure):
        return (m.max_state, m.support, tuple(v for _, v in m.items()))

    if order_key(mu) > order_key(nu):
        mu, nu = nu, mu
    smax = mu.max_state
    out = _step_once(idx.alpha, list(mu.items()), nu.as_array(), smax)
    return SparseMeasure.from_array(_clamp_roundoff(out), total_tol=1e-10)


def kernel_row(kernel: GegenbauerKernel, x: int) -> SparseMeasure:
    """Row x of the transition kernel: delta_x * mu.

    Assembled atom by atom from cached linearization rows (each of which
    is one Jacobi-recurrence sweep of cost O(x * (x + s))), so the row
    inherits their exact parity supports: for the unit step the row is
    exactly two-point.
    """
    if x < 0:
        raise ValueError("kernel_row: state must be >= 0")
    mu = kernel.step_measure
    if x == 0:
        return mu
    acc: dict[int, float] = {}
    for s, m in mu.items():
        for k, c in linearization(kernel.idx, x, s).coeffs.items():
            acc[k] = acc.get(k, 0.0) + m * c
    return SparseMeasure(acc, total_tol=1e-10)


def _check_cap(kernel: GegenbauerKernel, x: int, n: int, state_cap: int) -> int:
    needed = x + n * kernel.step_measure.max_state + 1
    if needed > state_cap:
        raise StateCapError(
            f"n_step(x={x}, n={n}) exceeds the state cap {state_cap}",
            required=needed,
        )
    return needed


def n_step(
    kernel: GegenbauerKernel, x: int, n: int, *, state_cap: int = DEFAULT_STATE_CAP
) -> SparseMeasure:
    """Exact law of the walk after n steps started at x.

    Applies the one-step operator n times to delta_x.  The support can
    reach x + n * max(support of mu); if that exceeds ``state_cap`` the
    computation refuses loudly rather than truncating, since truncation
    would corrupt the far tail.  Round-off lets the total mass drift from
    1 by O(n * eps); outputs are accepted within 1e-10.
    """
    if x < 0 or n < 0:
        raise ValueError("n_step: x and n must be >= 0")
    _check_cap(kernel, x, n, state_cap)
    a = kernel.idx.alpha
    mu_items = list(kernel.step_measure.items())
    smax = kernel.step_measure.max_state
    v = np.zeros(x + 1)
    v[x] = 1.0
    for _ in range(n):
        v = _clamp_roundoff(_step_once(a, mu_items, v, smax))
    return SparseMeasure.from_array(v, total_tol=1e-10)


def n_step_sequence(
    kernel: GegenbauerKernel,
    x: int,
    checkpoints: Iterable[int],
    *,
    state_cap: int = DEFAULT_STATE_CAP,
) -> dict[int, SparseMeasure]:
    """Exact laws at several horizons from one iteration sweep.

    Equivalent to {n: n_step(kernel, x, n) for n in checkpoints} but runs
    the iteration once up to max(checkpoints).
    """
    ns = sorted(set(int(n) for n in checkpoints))
    if not ns:
        return {}
    if ns[0] < 0:
        raise ValueError("n_step_sequence: horizons must be >= 0")
    _check_cap(kernel, x, ns[-1], state_cap)
    a = kernel.idx.alpha
    mu_items = list(kernel.step_measure.items())
    smax = kernel.step_measure.max_state
    v = np.zeros(x + 1)
    v[x] = 1.0
    out: dict[int, SparseMeasure] = {}
    step = 0
    for target in ns:
        while step < target:
            v = _clamp_roundoff(_step_once(a, mu_items, v, smax))
            step += 1
        out[target] = SparseMeasure.from_array(v, total_tol=1e-10)
    return out


def n_step_by_convolution(kernel: GegenbauerKernel, x: int, n: int) -> SparseMeasure:
    """Oracle route: delta_x * mu^(n) by repeated measure convolution.

    Quadratic in n and kept deliberately independent of the operator
    iteration in n_step; intended for cross-checks at small n.
    """
    if n > 64:
        raise ValueError("n_step_by_convolution: oracle route is limited to n <= 64")
    power = SparseMeasure.point(0)
    for _ in range(n):
        power = convolve(kernel.idx, power, kernel.step_measure)
    return convolve(kernel.idx, SparseMeasure.point(x), power)


def fourier(idx: HypergroupIndex, mu: SparseMeasure, theta: float) -> float:
    """Generalized Fourier transform sum_n mu(n) P_n(cos theta)."""
    if not 0.0 <= theta <= math.pi:
        raise ValueError("fourier: theta must lie in [0, pi]")
    x = math.cos(theta)
    return math.fsum(m * eval_poly(idx, s, x) for s, m in mu.items())


def inverse_fourier(
    idx: HypergroupIndex,
    f: Callable[[float], float],
    n: int,
    *,
    tol: float = 1e-9,
) -> float:
    """Coefficient recovery: w_n * integral of f(theta) P_n(cos theta)
    sin^(2a+1)(theta) dtheta over [0, pi].

    Substituting x = cos(theta) turns the weight into (1-x^2)^alpha, so
    Gauss nodes for that weight apply directly; node counts are doubled
    until two successive levels agree within ``tol``.
    """
    if n < 0:
        raise ValueError("inverse_fourier: n must be >= 0")
    prev = None
    for npoints in (64, 128, 256, 512, 1024, 2048, 4096):
        nodes, wts = _jacobi_nodes(idx.alpha, npoints)
        pn = eval_poly_table(idx, n, nodes)[n]
        fv = np.array([f(math.acos(min(1.0, max(-1.0, t)))) for t in nodes])
        val = weight(idx, n) * float(np.sum(wts * fv * pn))
        if prev is not None and abs(val - prev) <= tol:
            return val
        prev = val
    raise QuadratureError(
        f"inverse_fourier(n={n}) did not stabilize", achieved_tol=abs(val - prev)
    )


def classify(idx: HypergroupIndex) -> Literal["recurrent", "transient"]:
    """Recurrence dichotomy of the walk: recurrent iff alpha <= 0."""
    return "recurrent" if idx.alpha <= 0.0 else "transient"


def drift_constant(idx: HypergroupIndex, mu: SparseMeasure) -> float:
    """Scale constant C = 1/(4(alpha+1)) * sum mu(n) n (n+2 alpha+1).

    Appears in every limit theorem as the time normalization of the walk.
    """
    a = idx.alpha
    return math.fsum(m * s * (s + 2 * a + 1) for s, m in mu.items()) / (4.0 * (a + 1.0))


def transition_matrix(kernel: GegenbauerKernel, nmax: int) -> np.ndarray:
    """Dense kernel rows 0..nmax, columns truncated to 0..nmax.

    Rows near nmax lose the mass their support carries past the edge;
    consumers are expected to ignore the last few rows.
    """
    out = np.zeros((nmax + 1, nmax + 1))
    for x in range(nmax + 1):
        out[x] = kernel_row(kernel, x).as_array(nmax + 1)
    return out


class MembershipResult(NamedTuple):
    """Outcome of the structural test for Gegenbauer-walk kernels."""

    is_member: bool
    max_residual: float
    recovered_step: SparseMeasure


def is_gegenbauer_walk(transition: np.ndarray, lam: float) -> MembershipResult:
    """Test whether a kernel matrix is a Gegenbauer walk with parameter lam.

    Checks, for interior states i and columns j, the cross-relation

        i/(2(i+lam)) p(i-1,j) + (i+2lam)/(2(i+lam)) p(i+1,j)
          = (j+2lam-1)/(2(j+lam-1)) p(i,j-1) + (j+1)/(2(j+lam+1)) p(i,j+1)

    which holds if and only if the kernel is delta_x * mu for some step
    measure mu; that mu is then row 0 and is returned.  Exposed for
    lam in [0, 1/2] as the relation is stated on that range.

    Boundary conventions: at j = 0 the left neighbor term multiplies
    p(i,-1) = 0 and is dropped; at j = 1 with lam = 0 its coefficient is
    the 0/0 limit of (2 lam)/(2 lam) and is taken as 1 by continuity
    (dropping it instead breaks the unit-step chain at alpha = -1/2).
    The last two rows and columns are excluded: truncation makes them
    unreliable for step supports reaching up to 2.
    """
    if not 0.0 <= lam <= 0.5:
        raise ValueError("is_gegenbauer_walk: lam must lie in [0, 1/2]")
    P = np.asarray(transition, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("is_gegenbauer_walk: transition must be a square matrix")
    N = P.shape[0] - 1
    if N < 4:
        raise ValueError("is_gegenbauer_walk: need at least states 0..4")
    body = P[: N - 1]  # rows N-1, N may be truncation-deficient
    if body.min() < -1e-12:
        raise ValueError("is_gegenbauer_walk: negative transition probability")
    sums = body.sum(axis=1)
    if np.abs(sums - 1.0).max() > 1e-8:
        raise ValueError("is_gegenbauer_walk: rows are not probability vectors")

    # center rows i = 1..N-3 so every referenced row stays <= N-2
    i = np.arange(1, N - 2)[:, None].astype(float)
    j_int = np.arange(0, N - 1)
    j = j_int[None, :].astype(float)
    lhs = (i / (2 * (i + lam))) * P[0 : N - 3, 0 : N - 1] + (
        (i + 2 * lam) / (2 * (i + lam))
    ) * P[2 : N - 1, 0 : N - 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        c_left = (j + 2 * lam - 1.0) / (2 * (j + lam - 1.0))
    c_left[:, j_int == 0] = 0.0
    if lam == 0.0:
        c_left[:, j_int == 1] = 1.0
    p_left = np.zeros_like(lhs)
    p_left[:, 1:] = P[1 : N - 2, 0 : N - 2]
    rhs = c_left * p_left + ((j + 1.0) / (2 * (j + lam + 1.0))) * P[1 : N - 2, 1:N]
    residual = float(np.abs(lhs - rhs).max())
    mu = SparseMeasure.from_array(P[0], total_tol=1e-8)
    return MembershipResult(residual <= 1e-10, residual, mu)
