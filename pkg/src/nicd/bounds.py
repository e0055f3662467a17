"""Hypercontractive bounds on agreement for large alphabets.

Everything here hangs off Oleszkiewicz's threshold sigma(alpha, p): for
tau <= sigma(1/s, p), ||T_tau f||_2 <= ||f||_p on [s]^n. Choosing p so that
alpha^(2/p - 1) = (1 - eps) e^delta and checking sigma^2 >= 1 - eps yields
M_eps(A) >= (ln(1/(1-eps)) - delta) / ln s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .noise import MAX_TABLE_SIZE


class ExponentRangeError(ValueError):
    """The requested exponent falls outside the range (1, 2]."""


@dataclass(frozen=True)
class HyperQuery:
    alpha: float
    p: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 0.5:
            raise ValueError(f"alpha must lie in (0, 1/2], got {self.alpha!r}")
        if not 1.0 < self.p <= 2.0:
            raise ExponentRangeError(f"p must lie in (1, 2], got {self.p!r}")

    @property
    def beta(self) -> float:
        return 1.0 - self.alpha


@dataclass(frozen=True)
class BoundQuery:
    delta: float
    epsilon: float
    s_max: int = 10**6

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta!r}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        if self.s_max < 2:
            raise ValueError("s_max must be at least 2")


def _sigma_sq(alpha, p):
    """Vectorised sigma^2 for alpha < 1/2 and 1 < p < 2."""
    beta = 1.0 - alpha
    num = beta ** (2.0 - 2.0 / p) - alpha ** (2.0 - 2.0 / p)
    den = alpha ** (1.0 - 2.0 / p) * beta - beta ** (1.0 - 2.0 / p) * alpha
    return num / den


def sigma_squared(alpha: float, p: float) -> float:
    q = HyperQuery(alpha, p)
    if q.p == 2.0:
        return 1.0
    if q.alpha == 0.5:
        # the formula is 0/0 at alpha = beta; its limit is the Bonami constant
        return q.p - 1.0
    return float(_sigma_sq(q.alpha, q.p))


def sigma(alpha: float, p: float) -> float:
    """Largest tau with ||T_tau f||_2 <= ||f||_p on the alphabet with atoms alpha = 1/s."""
    return math.sqrt(sigma_squared(alpha, p))


def solve_p(alpha: float, delta: float, epsilon: float) -> float:
    """The p with alpha^((2/p - 1) - delta/ln alpha) = 1 - epsilon.

    Taking logs gives 2/p - 1 = (ln(1 - eps) + delta) / ln(alpha).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if delta < 0:
        raise ValueError(f"delta must be non-negative, got {delta!r}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    ratio = (math.log1p(-epsilon) + delta) / math.log(alpha)
    if ratio <= -1.0:
        raise ExponentRangeError("delta is so large that no finite exponent solves the equation")
    p = 2.0 / (1.0 + ratio)
    if not 1.0 < p <= 2.0:
        raise ExponentRangeError(f"p = {p:.6g} is outside the hypercontractive range (1, 2]")
    return p


def solve_p_residual(alpha: float, delta: float, epsilon: float, p: float) -> float:
    lhs = alpha ** ((2.0 / p - 1.0) - delta / math.log(alpha))
    return abs(lhs - (1.0 - epsilon))


@dataclass
class AlphabetResult:
    delta: float
    epsilon: float
    S: int | None
    p: float | None
    sigma_sq: float | None
    capped: bool
    trivial: bool
    monotone: bool
    checked_up_to: int
    trace: list[tuple[int, float, float]] = field(default_factory=list, repr=False)


def _condition(s_values: np.ndarray, delta: float, epsilon: float):
    """(holds, p, sigma^2) for each alphabet size; NaN where p is out of range."""
    alpha = 1.0 / s_values.astype(float)
    ratio = (math.log1p(-epsilon) + delta) / np.log(alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = 2.0 / (1.0 + ratio)
        ok_range = (ratio > -1.0) & (p > 1.0) & (p <= 2.0)
        sq = np.where(ok_range, _sigma_sq(alpha, np.where(ok_range, p, 1.5)), np.nan)
    sq = np.where(ok_range & (p == 2.0), 1.0, sq)
    sq = np.where(ok_range & (alpha == 0.5), p - 1.0, sq)
    holds = ok_range & (sq >= 1.0 - epsilon)
    return holds, np.where(ok_range, p, np.nan), sq


def min_alphabet(delta: float, epsilon: float, s_max: int = 10**6, trace: bool = False) -> AlphabetResult:
    """Smallest alphabet size at which the sigma condition certifies the bound.

    Scans s = 2, 3, ... upward. After a hit the condition is re-checked on
    [S, 2S + 100] (capped at s_max) and `monotone` records whether it held.
    When delta >= ln(1/(1-eps)) the bound is <= 0 and holds trivially.
    """
    q = BoundQuery(delta, epsilon, s_max)
    if q.delta >= -math.log1p(-q.epsilon):
        rows = [(2, 1.0, 2.0)] if trace else []
        return AlphabetResult(q.delta, q.epsilon, 2, 2.0, 1.0, False, True, True, 2, rows)
    rows: list[tuple[int, float, float]] = []
    start, chunk = 2, 1024
    found = None
    while start <= q.s_max:
        stop = min(q.s_max, start + chunk - 1)
        s_vals = np.arange(start, stop + 1)
        holds, p, sq = _condition(s_vals, q.delta, q.epsilon)
        hit = np.flatnonzero(holds)
        upto = hit[0] + 1 if hit.size else len(s_vals)
        if trace:
            rows.extend(zip(s_vals[:upto].tolist(), sq[:upto].tolist(), p[:upto].tolist()))
        if hit.size:
            found = int(s_vals[hit[0]])
            p_found, sq_found = float(p[hit[0]]), float(sq[hit[0]])
            break
        start, chunk = stop + 1, chunk * 2
    if found is None:
        return AlphabetResult(q.delta, q.epsilon, None, None, None, True, False, True, q.s_max, rows)
    upper = min(q.s_max, 2 * found + 100)
    holds, _, _ = _condition(np.arange(found, upper + 1), q.delta, q.epsilon)
    return AlphabetResult(
        q.delta, q.epsilon, found, p_found, sq_found, False, False, bool(holds.all()), upper, rows
    )


def certifies(s: int, delta: float, epsilon: float) -> bool:
    """Whether sigma^2(1/s, p) >= 1 - eps holds at this particular s."""
    if delta >= -math.log1p(-epsilon):
        return True
    holds, _, _ = _condition(np.array([s]), delta, epsilon)
    return bool(holds[0])


@dataclass(frozen=True)
class LowerBound:
    value: float
    certified: bool
    S: int | None


def theorem3_lower_bound(s: int, epsilon: float, delta: float, s_max: int = 10**6) -> LowerBound:
    """(ln(1/(1-eps)) - delta) / ln s, flagged certified when s >= S(delta, eps)."""
    if s < 2:
        raise ValueError("alphabet size must be at least 2")
    value = (-math.log1p(-epsilon) - delta) / math.log(s)
    res = min_alphabet(delta, epsilon, s_max=max(s_max, s))
    ok = res.S is not None and s >= res.S and certifies(s, delta, epsilon)
    return LowerBound(value, ok, res.S)


def log_max_success_probability(k: int, epsilon: float, delta: float) -> float:
    return k * (math.log1p(-epsilon) + delta)


def max_success_probability(k: int, epsilon: float, delta: float) -> float:
    """(1 - eps)^k e^(delta k): ceiling on agreement at min-entropy k for s >= S."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return math.exp(log_max_success_probability(k, epsilon, delta))


def trivial_success_probability(k: int, s: int, epsilon: float) -> float:
    return (1.0 - (1.0 - 1.0 / s) * epsilon) ** k


@dataclass(frozen=True)
class SymbolCount:
    count: int
    corrected: int
    inflated: bool


def trivial_symbol_count(k: int, epsilon: float, delta: float) -> SymbolCount:
    """floor(k log(1-eps) / (log(1-eps) + delta)), with a companion count.

    For delta > 0 the literal expression exceeds k (`inflated`). `corrected`
    is floor(k (log(1-eps) + delta) / log(1-eps)), the number of trivial
    symbols whose success (1-eps)^m still matches the ceiling
    (1-eps)^k e^(delta k); it never exceeds k and falls as delta grows.
    """
    log_keep = math.log1p(-epsilon)
    denom = log_keep + delta
    if denom >= 0:
        raise ValueError(f"delta = {delta!r} >= -log(1 - eps); the symbol count is degenerate")
    count = math.floor(k * log_keep / denom + 1e-12)
    corrected = math.floor(k * denom / log_keep + 1e-12)
    return SymbolCount(count, corrected, count > k)


@dataclass
class HyperReport:
    s: int
    n: int
    p: float
    tau: float
    sigma: float
    trials: int
    max_ratio: float
    guaranteed: bool
    tolerance: float = 1e-10

    @property
    def passed(self) -> bool:
        return not self.guaranteed or self.max_ratio <= 1.0 + self.tolerance


def random_nonnegative_tables(s: int, n: int, trials: int, rng) -> np.ndarray:
    """A mix of dense, spiky and 0/1 nonnegative functions, shape (trials, s^n)."""
    size = s**n
    out = np.empty((trials, size))
    kind = np.arange(trials) % 3
    dense = rng.random((trials, size))
    spikes = dense ** rng.uniform(1.0, 12.0, size=(trials, 1))
    sets = (rng.random((trials, size)) < rng.uniform(0.02, 0.6, size=(trials, 1))).astype(float)
    out[kind == 0] = dense[kind == 0]
    out[kind == 1] = spikes[kind == 1]
    out[kind == 2] = sets[kind == 2]
    empty = out.sum(axis=1) == 0
    out[empty, 0] = 1.0
    return out


def batched_noise(values: np.ndarray, s: int, n: int, tau: float) -> np.ndarray:
    """T_tau applied to each row of a (trials, s^n) batch."""
    arr = values.reshape((-1,) + (s,) * n)
    for axis in range(1, n + 1):
        arr = tau * arr + (1.0 - tau) * arr.mean(axis=axis, keepdims=True)
    return arr.reshape(values.shape)


def verify_hypercontractivity(s: int, n: int, p: float, tau: float, trials: int, seed) -> HyperReport:
    """Max of ||T_tau f||_2 / ||f||_p over random nonnegative f on [s]^n."""
    if s**n > MAX_TABLE_SIZE:
        raise ValueError("domain too large to enumerate")
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    sig = sigma(1.0 / s, p)
    rng = np.random.default_rng(seed)
    f = random_nonnegative_tables(s, n, trials, rng)
    lhs = np.sqrt(np.mean(batched_noise(f, s, n, tau) ** 2, axis=1))
    rhs = np.mean(f**p, axis=1) ** (1.0 / p)
    ratio = float(np.max(lhs / rhs))
    return HyperReport(s, n, p, tau, sig, trials, ratio, guaranteed=tau <= sig)
