"""Exact reference distributions and moments for the combinatorial problems.

Every law here is ground truth: inclusion-exclusion and rencontres formulas
are evaluated in exact rational arithmetic (or, for very large instances,
high-precision arithmetic with a rigorous truncation certificate), and
dynamic-programming paths use only nonnegative weights, summed in ascending
index order.  Brute-force enumeration oracles live in the test suite, not
here; these functions are the quantities they certify.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .stein_core import Pmf

__all__ = [
    "MatchingSpec",
    "MatchingMoments",
    "OccupancySpec",
    "OccupancyMoments",
    "ColoringSpec",
    "CouponDiagnostics",
    "derangement_numbers",
    "poisson_binomial_pmf",
    "matching_pmf",
    "matching_moments",
    "occupancy_pmf",
    "occupancy_moments",
    "coloring_pmf",
    "coupon_collector_diagnostics",
    "iter_permutation_chunks",
]

#: plain matching uses the rencontres closed form up to this many letters
PLAIN_MATCHING_CAP = 500
#: multiset matching enumerates all n! labeled permutations up to here
MULTISET_ENUMERATION_CAP = 10
#: feasibility cap for allocation DPs: cells * items * statistic states
DP_STATE_CAP = 100_000_000
#: exact-rational empty-box path: max boxes and max digits of n^k
EMPTY_EXACT_BOX_CAP = 400
EMPTY_EXACT_DIGIT_CAP = 20_000
#: certified high-precision empty-box path requires n*exp(-k/n) below this
EMPTY_CERTIFIED_RATIO_CAP = 50.0

OCCUPANCY_STATISTICS = ("pairs", "triples", "empty", "exact_level", "pair_count")


# ---------------------------------------------------------------------------
# specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MatchingSpec:
    """Fixed points of a uniform permutation of ``n`` letters.

    With ``multiplicities`` absent the letters are distinct (plain matching);
    otherwise letter ``i`` occurs ``multiplicities[i]`` times and the entries
    must sum to ``n``.
    """

    n: int
    multiplicities: tuple[int, ...] | None = None

    def __post_init__(self):
        if not (isinstance(self.n, int) and self.n >= 1):
            raise ValueError("n must be a positive integer")
        if self.multiplicities is not None:
            mult = tuple(int(l) for l in self.multiplicities)
            if any(l < 1 for l in mult):
                raise ValueError("multiplicities must be positive integers")
            if sum(mult) != self.n:
                raise ValueError("multiplicities must sum to n")
            object.__setattr__(self, "multiplicities", mult)

    @property
    def is_plain(self) -> bool:
        return self.multiplicities is None or all(l == 1 for l in self.multiplicities)

    def word(self) -> tuple[int, ...]:
        """Letter ids by slot, e.g. multiplicities (2, 2) -> (0, 0, 1, 1)."""
        if self.multiplicities is None:
            return tuple(range(self.n))
        out: list[int] = []
        for i, l in enumerate(self.multiplicities):
            out.extend([i] * l)
        return tuple(out)


@dataclass(frozen=True)
class OccupancySpec:
    """Balls-in-boxes experiment and the statistic whose law is requested.

    statistic:
      * ``"pairs"``      -- number of boxes holding at least two balls
      * ``"triples"``    -- number of ball triples sharing a box
      * ``"empty"``      -- number of empty boxes
      * ``"exact_level"``-- number of boxes holding exactly ``level`` balls
      * ``"pair_count"`` -- number of ball pairs sharing a box
    """

    n_boxes: int
    k_balls: int
    statistic: str
    level: int | None = None

    def __post_init__(self):
        if not (isinstance(self.n_boxes, int) and self.n_boxes >= 1):
            raise ValueError("n_boxes must be a positive integer")
        if not (isinstance(self.k_balls, int) and self.k_balls >= 0):
            raise ValueError("k_balls must be a nonnegative integer")
        if self.statistic not in OCCUPANCY_STATISTICS:
            raise ValueError(f"statistic must be one of {OCCUPANCY_STATISTICS}")
        if self.statistic == "exact_level":
            if self.level is None or self.level < 0:
                raise ValueError("exact_level requires a nonnegative level")
        elif self.level is not None:
            raise ValueError("level is only meaningful for exact_level")


@dataclass(frozen=True)
class ColoringSpec:
    """Uniform independent coloring of ``n_points`` with ``n_colors`` colors;
    the statistic is the number of monochromatic ``tuple_size``-subsets."""

    n_points: int
    tuple_size: int
    n_colors: int

    def __post_init__(self):
        if not (isinstance(self.n_points, int) and self.n_points >= 1):
            raise ValueError("n_points must be a positive integer")
        if not (isinstance(self.tuple_size, int) and 2 <= self.tuple_size <= self.n_points):
            raise ValueError("tuple_size must satisfy 2 <= k <= n_points")
        if not (isinstance(self.n_colors, int) and self.n_colors >= 1):
            raise ValueError("n_colors must be a positive integer")


# ---------------------------------------------------------------------------
# permutations and derangements
# ---------------------------------------------------------------------------


def derangement_numbers(n: int) -> list[int]:
    """D_0..D_n with D_m = (m-1)(D_{m-1} + D_{m-2}), D_0 = 1, D_1 = 0."""
    d = [1, 0]
    for m in range(2, n + 1):
        d.append((m - 1) * (d[m - 1] + d[m - 2]))
    return d[: n + 1]


def iter_permutation_chunks(n: int, chunk_size: int = 200_000):
    """Yield all permutations of range(n) as int8 arrays of shape (m, n)."""
    it = itertools.permutations(range(n))
    while True:
        block = list(itertools.islice(it, chunk_size))
        if not block:
            return
        yield np.array(block, dtype=np.int8)


# ---------------------------------------------------------------------------
# Poisson-binomial
# ---------------------------------------------------------------------------


def poisson_binomial_pmf(p) -> Pmf:
    """Exact law of a sum of independent indicators via one-pass convolution."""
    probs = np.ascontiguousarray(p, dtype=float)
    if probs.ndim != 1 or probs.size == 0:
        raise ValueError("p must be a nonempty 1-D sequence")
    if np.any(probs < 0.0) or np.any(probs > 1.0):
        raise ValueError("each success probability must lie in [0, 1]")
    mass = np.zeros(probs.size + 1)
    mass[0] = 1.0
    for i, pi in enumerate(probs):
        new = np.empty(mass.shape)
        new[0] = mass[0] * (1.0 - pi)
        new[1 : i + 2] = mass[1 : i + 2] * (1.0 - pi) + mass[: i + 1] * pi
        new[i + 2 :] = 0.0
        mass = new
    return Pmf.from_mass(mass)


# ---------------------------------------------------------------------------
# matching
# ---------------------------------------------------------------------------


def matching_pmf(spec: MatchingSpec) -> Pmf:
    """Exact law of the number of fixed points.

    Plain case: rencontres closed form ``P(W = m) = C(n, m) D_{n-m} / n!`` in
    exact rationals (n <= PLAIN_MATCHING_CAP).  Multiset case: exhaustive
    enumeration of all n! labeled permutations (n <= MULTISET_ENUMERATION_CAP),
    which matches the uniform-permutation model directly and avoids any
    multiplicity-weighting subtlety.
    """
    n = spec.n
    if spec.is_plain:
        if n > PLAIN_MATCHING_CAP:
            raise ValueError(f"plain matching capped at n={PLAIN_MATCHING_CAP}")
        d = derangement_numbers(n)
        n_fact = math.factorial(n)
        mass = [
            float(Fraction(math.comb(n, m) * d[n - m], n_fact)) for m in range(n + 1)
        ]
        return Pmf(np.array(mass))
    if n > MULTISET_ENUMERATION_CAP:
        raise ValueError(
            f"multiset matching enumerates n! permutations; capped at "
            f"n={MULTISET_ENUMERATION_CAP} (requested n={n}, about {math.factorial(n):.2e} states)"
        )
    word = np.array(spec.word(), dtype=np.int8)
    counts = np.zeros(n + 1, dtype=np.int64)
    for perms in iter_permutation_chunks(n):
        w = (word[perms] == word[np.newaxis, :]).sum(axis=1)
        counts += np.bincount(w, minlength=n + 1)
    n_fact = math.factorial(n)
    mass = [float(Fraction(int(c), n_fact)) for c in counts]
    return Pmf(np.array(mass))


@dataclass(frozen=True)
class MatchingMoments:
    """Closed-form moments of the fixed-point statistic.

    ``e2a2`` (twice the expected number of 2-cycles) is only defined for the
    plain problem; the per-letter tables follow the multiplicity order.
    """

    lam: float
    ew2: float
    e2a2: float | None
    ewi: tuple[float, ...]
    ewi2: tuple[float, ...]
    ewij_wji: np.ndarray
    cross_term: float


def matching_moments(spec: MatchingSpec) -> MatchingMoments:
    n = spec.n
    if n < 2:
        raise ValueError("moments require n >= 2")
    mult = spec.multiplicities if spec.multiplicities is not None else (1,) * n
    l = np.array(mult, dtype=float)
    lam = float(np.sum(l**2) / n)
    ewi = l**2 / n
    ewi2 = l**2 * (n + l**2 - 2 * l) / (n * (n - 1))
    cross = np.outer(l**2, l**2) / (n * (n - 1))
    np.fill_diagonal(cross, 0.0)
    cross_term = float(cross.sum())
    ew2 = cross_term + float(ewi2.sum())
    e2a2 = 1.0 if spec.is_plain else None
    cross.flags.writeable = False
    return MatchingMoments(
        lam=lam,
        ew2=ew2,
        e2a2=e2a2,
        ewi=tuple(ewi),
        ewi2=tuple(ewi2),
        ewij_wji=cross,
        cross_term=cross_term,
    )


# ---------------------------------------------------------------------------
# occupancy laws
# ---------------------------------------------------------------------------


def _stat_increment(statistic: str, level: int | None):
    if statistic == "pairs":
        return lambda c: 1 if c >= 2 else 0
    if statistic == "triples":
        return lambda c: math.comb(c, 3)
    if statistic == "pair_count":
        return lambda c: math.comb(c, 2)
    if statistic == "exact_level":
        return lambda c: 1 if c == level else 0
    if statistic == "empty":
        return lambda c: 1 if c == 0 else 0
    raise ValueError(statistic)


def _stat_support_max(spec: OccupancySpec) -> int:
    n, k = spec.n_boxes, spec.k_balls
    if spec.statistic == "pairs":
        return min(n, k // 2)
    if spec.statistic == "triples":
        return math.comb(k, 3)
    if spec.statistic == "pair_count":
        return math.comb(k, 2)
    if spec.statistic == "exact_level":
        return n if spec.level == 0 else min(n, k // spec.level)
    return n  # empty


def _sequential_allocation_dp(cells: int, items: int, stat_fn, s_max: int) -> np.ndarray:
    """Law of an additive per-cell statistic under uniform multinomial filling.

    Cells are processed in order; conditioned on ``b`` items already placed,
    cell ``i`` receives ``Binomial(items - b, 1/(cells - i))`` items.  All
    weights are nonnegative, so the recursion is numerically benign; rows are
    combined in ascending index order.
    """
    state = np.zeros((items + 1, s_max + 1))
    state[0, 0] = 1.0
    for i in range(cells):
        remaining_cells = cells - i
        q = 1.0 / remaining_cells
        new = np.zeros_like(state)
        for b in range(items + 1):
            row = state[b]
            if not row.any():
                continue
            r = items - b
            if remaining_cells == 1:
                weights = {r: 1.0}
            else:
                pw = (1.0 - q) ** r
                weights = {}
                for c in range(r + 1):
                    if c > 0:
                        pw *= (r - c + 1) / c * q / (1.0 - q)
                    weights[c] = pw
            for c, pw in weights.items():
                if pw == 0.0:
                    continue
                ds = stat_fn(c)
                if ds == 0:
                    new[b + c] += row * pw
                elif ds <= s_max:
                    new[b + c, ds:] += row[: s_max + 1 - ds] * pw
        state = new
    return state[items]


def _empty_boxes_mass_exact(n: int, k: int) -> list[Fraction]:
    """Inclusion-exclusion law of the empty-box count, exact rationals."""
    pow_table = [b**k for b in range(n + 1)]
    denom = n**k
    mass = []
    for w in range(n + 1):
        r = n - w
        inner = 0
        for j in range(r + 1):
            term = math.comb(r, j) * pow_table[r - j]
            inner += -term if j % 2 else term
        mass.append(Fraction(math.comb(n, w) * inner, denom))
    assert sum(mass) == 1
    return mass


def _empty_boxes_mass_certified(n: int, k: int) -> np.ndarray:
    """Empty-box law by truncated inclusion-exclusion in 60-digit arithmetic.

    Valid in the sparse regime ``r0 = n*exp(-k/n) <= EMPTY_CERTIFIED_RATIO_CAP``
    where the alternating terms decay at rate ``r0/(j+1)``; each truncation
    remainder is bounded geometrically and kept below 1e-30, far inside the
    1e-12 budget the Pmf invariant allows.
    """
    r0 = n * math.exp(-k / n)
    if r0 > EMPTY_CERTIFIED_RATIO_CAP:
        raise ValueError(
            "certified empty-box path needs n*exp(-k/n) <= "
            f"{EMPTY_CERTIFIED_RATIO_CAP}; got {r0:.3g} (n={n}, k={k})"
        )
    with mpmath.workdps(60):
        one = mpmath.mpf(1)
        log_base_cache: dict[int, mpmath.mpf] = {}

        def pow_ratio(b: int) -> mpmath.mpf:
            # (b/n)^k via exp(k*log(b/n)); cached per base
            if b == 0:
                return mpmath.mpf(0) if k > 0 else one
            if b not in log_base_cache:
                log_base_cache[b] = mpmath.exp(k * mpmath.log(mpmath.mpf(b) / n))
            return log_base_cache[b]

        mass = np.zeros(n + 1)
        total = mpmath.mpf(0)
        negligible_run = 0
        rel_eps = mpmath.mpf("1e-42")
        for w in range(n + 1):
            r = n - w
            inner = mpmath.mpf(0)
            peak = mpmath.mpf(0)
            for j in range(r + 1):
                term = mpmath.binomial(r, j) * pow_ratio(r - j)
                inner += -term if j % 2 else term
                peak = max(peak, term)
                # once the term-ratio bound r0/(j+2) is below 1/2 the
                # remainder is geometrically dominated by 2*term; cutting at
                # a threshold relative to the peak term keeps the truncation
                # error of C(n,w)*inner far below the 1e-12 mass budget
                if j >= 2 * r0 and r0 / (j + 2) < 0.5 and term < rel_eps * peak:
                    break
            p_w = mpmath.binomial(n, w) * inner
            p_w = max(p_w, mpmath.mpf(0))
            mass[w] = float(p_w)
            total += p_w
            if p_w < mpmath.mpf("1e-25"):
                negligible_run += 1
                if negligible_run >= 3 and total > 1 - mpmath.mpf("1e-20"):
                    break
            else:
                negligible_run = 0
    return mass


def _empty_boxes_pmf(n: int, k: int) -> Pmf:
    if k == 0:
        mass = np.zeros(n + 1)
        mass[n] = 1.0
        return Pmf(mass)
    digits = k * math.log10(n) if n > 1 else 0.0
    if n <= EMPTY_EXACT_BOX_CAP and digits <= EMPTY_EXACT_DIGIT_CAP:
        mass = np.array([float(x) for x in _empty_boxes_mass_exact(n, k)])
    else:
        r0 = n * math.exp(-k / n)
        if r0 > EMPTY_CERTIFIED_RATIO_CAP:
            raise ValueError(
                "empty-box law infeasible: exact path needs about "
                f"{digits:.0f}-digit integers over {n + 1} support points "
                f"(caps: n<={EMPTY_EXACT_BOX_CAP}, {EMPTY_EXACT_DIGIT_CAP} digits) "
                f"and the certified path needs n*exp(-k/n) <= "
                f"{EMPTY_CERTIFIED_RATIO_CAP} (got {r0:.3g})"
            )
        mass = _empty_boxes_mass_certified(n, k)
    last = int(np.nonzero(mass)[0].max(initial=0))
    return Pmf.from_mass(mass[: last + 1])


def occupancy_pmf(spec: OccupancySpec) -> Pmf:
    """Exact law of the requested occupancy statistic.

    The empty-box count uses the inclusion-exclusion closed form; the other
    statistics run the allocation DP, whose feasibility cap
    ``n_boxes * k_balls * max_statistic <= DP_STATE_CAP`` is checked up front.
    """
    n, k = spec.n_boxes, spec.k_balls
    if spec.statistic == "empty":
        return _empty_boxes_pmf(n, k)
    if k == 0:
        if spec.statistic == "exact_level" and spec.level == 0:
            mass = np.zeros(n + 1)
            mass[n] = 1.0
            return Pmf(mass)
        return Pmf(np.array([1.0]))
    s_max = _stat_support_max(spec)
    states = n * k * max(1, s_max)
    if states > DP_STATE_CAP:
        raise ValueError(
            f"occupancy DP needs ~{states:.2e} states "
            f"(cap {DP_STATE_CAP:.0e}); n={n}, k={k}, statistic={spec.statistic}"
        )
    dist = _sequential_allocation_dp(n, k, _stat_increment(spec.statistic, spec.level), s_max)
    last = int(np.nonzero(dist)[0].max(initial=0))
    return Pmf.from_mass(dist[: last + 1])


@dataclass(frozen=True)
class OccupancyMoments:
    """Closed-form boxes-at-level moments: em[l] = E M_l, em2[l] = E M_l^2."""

    em: dict[int, float]
    em2: dict[int, float]
    ew: float


def occupancy_moments(spec: OccupancySpec, levels=None) -> OccupancyMoments:
    """First and second moments of the level counts, plus E W per statistic.

    ``E M_l = n C(k,l) n^{-l} (1-1/n)^{k-l}`` and
    ``E M_l^2 = E M_l + n(n-1) C(k,l) C(k-l,l) n^{-2l} (1-2/n)^{k-2l}``
    (the joint term vanishes when ``2l > k``).
    """
    n, k = spec.n_boxes, spec.k_balls
    if levels is None:
        levels = range(0, min(k, 6) + 1)
    levels = [int(l) for l in levels]
    if any(l < 0 or l > k for l in levels):
        raise ValueError("levels must lie in [0, k_balls]")
    em: dict[int, float] = {}
    em2: dict[int, float] = {}
    for l in levels:
        m1 = n * math.comb(k, l) * n**-l * (1.0 - 1.0 / n) ** (k - l) if n >= 1 else 0.0
        if n == 1:
            m1 = 1.0 if l == k else 0.0
        joint = 0.0
        if 2 * l <= k and n >= 2:
            joint = (
                n
                * (n - 1)
                * math.comb(k, l)
                * math.comb(k - l, l)
                * float(n) ** (-2 * l)
                * (1.0 - 2.0 / n) ** (k - 2 * l)
            )
        em[l] = m1
        em2[l] = m1 + joint
    if spec.statistic == "triples":
        ew = math.comb(k, 3) / n**2
    elif spec.statistic == "pair_count":
        ew = math.comb(k, 2) / n
    elif spec.statistic == "empty":
        ew = n * (1.0 - 1.0 / n) ** k if n >= 2 else (1.0 if k == 0 else 0.0)
    elif spec.statistic == "pairs":
        m0 = n * (1.0 - 1.0 / n) ** k if n >= 2 else (1.0 if k == 0 else 0.0)
        m1 = n * math.comb(k, 1) * (1.0 / n) * (1.0 - 1.0 / n) ** (k - 1) if k >= 1 else 0.0
        if n == 1:
            m1 = 1.0 if k == 1 else 0.0
        ew = n - m0 - m1
    else:  # exact_level
        l = spec.level
        ew = em.get(l)
        if ew is None:
            ew = occupancy_moments(spec, levels=[l]).em[l] if l <= k else 0.0
    return OccupancyMoments(em=em, em2=em2, ew=float(ew))


# ---------------------------------------------------------------------------
# colorings
# ---------------------------------------------------------------------------


def coloring_pmf(spec: ColoringSpec) -> Pmf:
    """Exact law of the monochromatic tuple count.

    Color class sizes are a uniform multinomial over the colors, so the same
    sequential-allocation DP applies with colors as cells and points as items;
    a class of size m contributes C(m, tuple_size).
    """
    n, k, c = spec.n_points, spec.tuple_size, spec.n_colors
    s_max = math.comb(n, k)
    states = c * n * max(1, s_max)
    if states > DP_STATE_CAP:
        raise ValueError(
            f"coloring DP needs ~{states:.2e} states (cap {DP_STATE_CAP:.0e})"
        )
    dist = _sequential_allocation_dp(c, n, lambda m: math.comb(m, k), s_max)
    last = int(np.nonzero(dist)[0].max(initial=0))
    return Pmf.from_mass(dist[: last + 1])


# ---------------------------------------------------------------------------
# coupon collector diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CouponDiagnostics:
    """Exact empty/singleton-box quantities for k balls in n boxes.

    ``var_n1_exact`` is the textbook indicator-sum variance
    ``n p (1-p) + n(n-1)(rho - p^2)``; ``var_n1_bound`` is the companion
    closed-form upper bound used by the error-chain assembly.
    """

    ew: float
    en1w: float
    p: float
    rho: float
    var_n1_exact: float
    var_n1_bound: float


def coupon_collector_diagnostics(n: int, k: int) -> CouponDiagnostics:
    if not (isinstance(n, int) and n >= 3):
        raise ValueError("n must be an integer >= 3")
    if not (isinstance(k, int) and k >= 0):
        raise ValueError("k must be a nonnegative integer")
    one_minus_1 = 1.0 - 1.0 / n
    one_minus_2 = 1.0 - 2.0 / n
    ew = n * one_minus_1**k
    if k >= 1:
        en1w = n * (n - 1) * (k / n) * one_minus_2 ** (k - 1)
        p = k * (1.0 / n) * one_minus_1 ** (k - 1)
        var_bound = k * one_minus_1 ** (k - 1) + (2.0 * k * k / n) * one_minus_2 ** (k - 2)
    else:
        en1w = 0.0
        p = 0.0
        var_bound = 0.0
    rho = k * (k - 1) / n**2 * one_minus_2 ** (k - 2) if k >= 2 else 0.0
    var_exact = n * p * (1.0 - p) + n * (n - 1) * (rho - p * p)
    var_exact = max(0.0, var_exact)
    return CouponDiagnostics(
        ew=ew,
        en1w=en1w,
        p=p,
        rho=rho,
        var_n1_exact=var_exact,
        var_n1_bound=var_bound,
    )
