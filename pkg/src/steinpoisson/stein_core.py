"""Univariate Stein machinery for Poisson approximation.

This module is the numerical core shared by the exact laws, the bound
catalogue and the certification harness:

* ``Pmf`` -- a finite pmf table on ``{0, ..., support_max}`` with an explicit
  tail mass, so truncation error is carried through every computation instead
  of being silently dropped.  Exact finite laws carry ``tail == 0``.
* ``poisson_pmf`` -- truncated Poisson reference laws with certified tails.
* ``tv_distance`` -- total variation distance with conservative tail
  handling; the result is an upper bound, tight to within the summed tails.
* ``stein_apply`` / ``stein_inverse`` -- the characterizing operator of the
  Poisson law, ``f(j) -> lam*f(j+1) - j*f(j)``, and its pseudo-inverse on
  centered functions.
* ``pseudo_inverse_bounds`` -- the classical sup / first-difference bounds
  for the pseudo-inverse of ``[0, 1]``-valued test functions.
* ``stein_identity_oracle`` -- an exact-summation check of the
  exchangeable-pair identity on a fully enumerated problem instance.

Function tables ("FnTable" below) are plain 1-D float arrays; index ``j``
holds ``f(j)``.  Where an operator needs one slot past a pmf's support
(`f(W + 1)` must be defined) the table is simply one entry longer.

All operations are pure; ``Pmf`` instances are immutable and safe to share
across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Pmf",
    "SteinParams",
    "EnumeratedPairMeasure",
    "poisson_pmf",
    "poisson_expectation",
    "tv_distance",
    "stein_apply",
    "stein_inverse",
    "pseudo_inverse_bounds",
    "stein_identity_oracle",
]

#: tolerance used when validating that mass + tail sums to one
MASS_TOL = 1e-12


def _as_fn_table(values, name: str = "f", min_len: int = 1) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=float)
    if arr.ndim != 1 or arr.size < min_len:
        raise ValueError(f"{name} must be a 1-D table with at least {min_len} entries")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain finite entries only")
    return arr


@dataclass(frozen=True)
class Pmf:
    """Probability mass function on ``{0, ..., support_max}`` plus tail mass.

    ``mass[j]`` is ``P(W = j)``; ``tail`` is the (certified) probability of
    ``W > support_max``.  The invariant ``sum(mass) + tail == 1`` is enforced
    to within ``MASS_TOL`` at construction.
    """

    mass: np.ndarray
    tail: float = 0.0

    def __post_init__(self):
        arr = np.ascontiguousarray(self.mass, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("mass must be a nonempty 1-D array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("mass must be finite")
        if np.any(arr < 0.0) or np.any(arr > 1.0 + MASS_TOL):
            raise ValueError("mass entries must lie in [0, 1]")
        tail = float(self.tail)
        if not (0.0 <= tail <= 1.0 + MASS_TOL):
            raise ValueError("tail must lie in [0, 1]")
        total = math.fsum(arr.tolist()) + tail
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"mass + tail must sum to 1 (got {total:.17g})")
        arr.flags.writeable = False
        object.__setattr__(self, "mass", arr)
        object.__setattr__(self, "tail", tail)

    @classmethod
    def from_mass(cls, values, tail: float = 0.0) -> "Pmf":
        """Build a Pmf, clipping rounding dust (entries in [-1e-15, 0))."""
        arr = np.ascontiguousarray(values, dtype=float).copy()
        tiny = (arr < 0.0) & (arr > -1e-15)
        arr[tiny] = 0.0
        return cls(arr, tail)

    @property
    def support_max(self) -> int:
        return int(self.mass.size - 1)

    def prob(self, j: int) -> float:
        """P(W = j); zero beyond the stored support."""
        if 0 <= j <= self.support_max:
            return float(self.mass[j])
        return 0.0

    def mean(self) -> float:
        """Mean over the stored support (the tail contributes nothing)."""
        j = np.arange(self.mass.size)
        return float(np.dot(j, self.mass))

    def variance(self) -> float:
        j = np.arange(self.mass.size)
        m = float(np.dot(j, self.mass))
        return max(0.0, float(np.dot(j * j, self.mass)) - m * m)


@dataclass(frozen=True)
class SteinParams:
    """Rate and truncation control for the Poisson reference law."""

    lam: float
    truncation_eps: float = 1e-12

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0.0):
            raise ValueError("lam must be a positive finite real")
        if not (0.0 < self.truncation_eps <= 1e-3):
            raise ValueError("truncation_eps must lie in (0, 1e-3]")


def poisson_pmf(params: SteinParams) -> Pmf:
    """Poisson law truncated at the smallest N whose upper tail is <= eps.

    The ``tail`` field holds the exact remainder ``1 - sum(mass)``, so the
    returned Pmf is a certified representation of the full law.
    """
    lam, eps = params.lam, params.truncation_eps
    p = math.exp(-lam)
    if p == 0.0:
        raise ValueError(f"lam={lam} too large: exp(-lam) underflows")
    terms = [p]
    cum = p
    k = 0
    while 1.0 - cum > eps:
        k += 1
        p *= lam / k
        terms.append(p)
        cum += p
        if k > 100_000:
            raise RuntimeError("Poisson truncation failed to converge")
    tail = max(0.0, 1.0 - math.fsum(terms))
    return Pmf(np.array(terms), tail)


def tv_distance(p: Pmf, q: Pmf) -> float:
    """Total variation distance, half the l1 distance between the tables.

    Tail masses are treated conservatively (|p.tail - q.tail| is replaced by
    ``p.tail + q.tail``), so the result is an upper bound on the true
    distance, tight to within ``p.tail + q.tail``.  Exact for tail-free laws.
    """
    size = max(p.mass.size, q.mass.size)
    a = np.zeros(size)
    b = np.zeros(size)
    a[: p.mass.size] = p.mass
    b[: q.mass.size] = q.mass
    l1 = math.fsum(np.abs(a - b).tolist())
    return 0.5 * (l1 + p.tail + q.tail)


def stein_apply(f, params: SteinParams) -> np.ndarray:
    """Apply the Poisson characterizing operator to a function table.

    Input ``f`` holds values at ``0..L``; the result holds
    ``lam * f(j+1) - j * f(j)`` for ``j = 0..L-1`` (one entry shorter: the
    final slot of ``f`` is consumed by the forward difference).
    """
    arr = _as_fn_table(f, "f", min_len=2)
    j = np.arange(arr.size - 1)
    return params.lam * arr[1:] - j * arr[:-1]


def _poisson_weights(lam: float, length: int) -> np.ndarray:
    w = np.empty(length)
    w[0] = math.exp(-lam)
    for k in range(1, length):
        w[k] = w[k - 1] * lam / k
    if w[-1] < 1e-280:
        raise ValueError(
            f"weight table underflows at index {length - 1} for lam={lam}; "
            "shorten the function table"
        )
    return w


def poisson_expectation(f, params: SteinParams) -> float:
    """Expectation of a table under the Poisson law conditioned to its support.

    ``f`` is treated as defined on ``{0, ..., len(f)-1}``; the reference
    weights are renormalized over that range, which keeps the centering
    constant used by :func:`stein_inverse` exactly consistent and differs
    from the untruncated expectation by at most ``2 * tail * max|f|``.
    """
    arr = _as_fn_table(f, "f")
    w = _poisson_weights(params.lam, arr.size)
    return math.fsum((w * arr).tolist()) / math.fsum(w.tolist())


def stein_inverse(f, params: SteinParams) -> np.ndarray:
    """Pseudo-inverse of the characterizing operator, with ``u(0) = 0``.

    Solves ``lam * u(j+1) - j * u(j) = f(j) - E_o f`` for ``j = 0..L-1``
    where ``L = len(f)``, returning ``u`` on ``0..L``.  Evaluation uses the
    forward recurrence ``u(j+1) = (j/lam) * u(j) + (f(j) - E_o f)/lam``
    regrouped in summed form ``u(j) = P_j / (j * w_j)`` with ``P_j`` the
    cumulative sum of ``w_k * (f(k) - E_o f)`` and ``w`` the Poisson weights.
    The regrouping is algebraically identical but keeps rounding additive
    instead of compounding it through the ``j/lam`` factors, and no factorial
    is ever formed, so long tables cannot overflow.
    """
    arr = _as_fn_table(f, "f")
    lam = params.lam
    size = arr.size
    w = _poisson_weights(lam, size + 1)
    e_f = math.fsum((w[:size] * arr).tolist()) / math.fsum(w[:size].tolist())
    partial = np.concatenate(([0.0], np.cumsum(w[:size] * (arr - e_f))))
    u = np.zeros(size + 1)
    j = np.arange(1, size + 1)
    u[1:] = partial[1:] / (j * w[1:])
    return u


def pseudo_inverse_bounds(params: SteinParams) -> tuple[float, float]:
    """Sup and first-difference bounds for the pseudo-inverse.

    For every ``f`` with ``0 <= f <= 1``: ``|u(j)| <= min(1, 1.4/sqrt(lam))``
    and ``|u(j+1) - u(j)| <= (1 - exp(-lam))/lam``.
    """
    lam = params.lam
    sup_bound = min(1.0, 1.4 / math.sqrt(lam))
    diff_bound = -math.expm1(-lam) / lam
    return sup_bound, diff_bound


@dataclass(frozen=True)
class EnumeratedPairMeasure:
    """A fully enumerated exchangeable-pair instance.

    ``probs[i]`` is the stationary probability of state ``i``, ``w[i]`` its
    statistic value, and ``q_up[i]`` / ``q_down[i]`` the exact one-step
    conditional probabilities of the statistic moving to ``w[i] +- 1``.
    """

    probs: np.ndarray
    w: np.ndarray
    q_up: np.ndarray
    q_down: np.ndarray

    def __post_init__(self):
        probs = np.ascontiguousarray(self.probs, dtype=float)
        w = np.ascontiguousarray(self.w, dtype=np.int64)
        q_up = np.ascontiguousarray(self.q_up, dtype=float)
        q_down = np.ascontiguousarray(self.q_down, dtype=float)
        if not (probs.size == w.size == q_up.size == q_down.size > 0):
            raise ValueError("all arrays must share a common nonzero length")
        if abs(math.fsum(probs.tolist()) - 1.0) > 1e-9:
            raise ValueError("state probabilities must sum to 1")
        if np.any(w < 0):
            raise ValueError("statistic values must be nonnegative integers")
        for name, arr in (("probs", probs), ("q_up", q_up), ("q_down", q_down)):
            if np.any(arr < -1e-15) or np.any(arr > 1 + 1e-12):
                raise ValueError(f"{name} entries must be probabilities")
        for arr in (probs, w, q_up, q_down):
            arr.flags.writeable = False
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "q_up", q_up)
        object.__setattr__(self, "q_down", q_down)

    @property
    def lam(self) -> float:
        """Exact mean of the statistic under the stationary law."""
        return math.fsum((self.probs * self.w).tolist())


def stein_identity_oracle(
    measure: EnumeratedPairMeasure,
    c: float,
    g,
    truncation_eps: float = 1e-12,
) -> tuple[float, float]:
    """Exact-summation check of the exchangeable-pair error identity.

    For a fully enumerated instance, both sides of

        E g(W) - E_o g  ==  E[ lam*u(W+1) - W*u(W)
                               - c*u(W+1)*Q(W'=W+1|state)
                               + c*u(W)*Q(W'=W-1|state) ]

    are computed by exact summation over the state space, with ``u`` the
    pseudo-inverse table of ``g`` and ``lam`` the exact mean of the
    statistic.  The identity holds whenever the pair measure is exchangeable
    and the conditionals are exact, so agreement of ``lhs`` and ``rhs``
    certifies the whole pipeline at once.

    Returns ``(lhs, rhs)``.
    """
    if not (math.isfinite(c) and c > 0.0):
        raise ValueError("c must be a positive real")
    g_arr = _as_fn_table(g, "g")
    lam = measure.lam
    if lam <= 0.0:
        raise ValueError("the enumerated statistic has zero mean; identity is vacuous")
    params = SteinParams(lam, truncation_eps)
    ref = poisson_pmf(params)
    w_max = int(measure.w.max())
    length = max(g_arr.size, ref.mass.size, w_max + 2)
    g_pad = np.zeros(length)
    g_pad[: g_arr.size] = g_arr
    u = stein_inverse(g_pad, params)
    e_g = poisson_expectation(g_pad, params)

    w = measure.w
    lhs = math.fsum((measure.probs * g_pad[w]).tolist()) - e_g
    op = lam * u[w + 1] - w * u[w]
    pair = c * (u[w + 1] * measure.q_up - u[w] * measure.q_down)
    rhs = math.fsum((measure.probs * (op - pair)).tolist())
    return lhs, rhs
