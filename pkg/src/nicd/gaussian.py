"""Gaussian limits of Hamming-ball agreement.

The number of zero symbols in a uniform string is Binomial(n, 1/s); after
centring and scaling it tends to N(0, 1), and the pair of counts for (X, Y)
tends to a bivariate normal with correlation 1 - eps. A ball of radius
n(s-1)/s - alpha sqrt(n) then has limiting mass Phi(-t) with
t = alpha s / sqrt(s - 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate
from scipy.special import erfc, log_ndtr

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_LOG_INV_SQRT_2PI = math.log(_INV_SQRT_2PI)

# Absolute error budget for the orthant quadrature.
ORTHANT_TOL = 1e-10


class QuadratureError(RuntimeError):
    def __init__(self, message: str, error_bound: float):
        super().__init__(f"{message} (achieved error bound {error_bound:.3g})")
        self.error_bound = error_bound


@dataclass(frozen=True)
class GaussianPair:
    rho: float
    t: float

    def __post_init__(self):
        if not -1.0 < self.rho < 1.0:
            raise ValueError(f"correlation must satisfy |rho| < 1, got {self.rho!r}")
        if not math.isfinite(self.t):
            raise ValueError("threshold must be finite")


def normal_cdf(t):
    """Standard normal CDF through erfc, accurate in the lower tail."""
    val = 0.5 * erfc(-np.asarray(t, dtype=float) / _SQRT2)
    return float(val) if np.ndim(val) == 0 else val


def normal_pdf(z: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * z * z)


def log_bivariate_orthant(t: float, rho: float) -> float:
    """Natural log of P(Z1 <= t, Z2 <= t) for standard normals with correlation rho.

    Conditions on Z1 = z and integrates Phi((t - rho z) / sqrt(1 - rho^2)) phi(z)
    over z <= t. The integrand is rescaled by its peak so deep tails do not
    underflow; the lower limit t - 40 loses nothing representable.
    """
    gp = GaussianPair(rho, t)
    scale = math.sqrt((1.0 - gp.rho) * (1.0 + gp.rho))
    lo = min(gp.t, 0.0) - 40.0

    def log_integrand(z):
        z = np.asarray(z)
        return log_ndtr((gp.t - gp.rho * z) / scale) - 0.5 * np.square(z) + _LOG_INV_SQRT_2PI

    grid = np.linspace(lo, gp.t, 801)
    peak = float(np.max(log_integrand(grid)))
    points = [float(grid[int(np.argmax(log_integrand(grid)))])]
    if gp.rho != 0.0:
        points.append(gp.t / gp.rho)
    points = sorted({p for p in points if lo < p < gp.t})
    val, err, *_ = integrate.quad(
        lambda z: math.exp(float(log_integrand(z)) - peak),
        lo,
        gp.t,
        points=points or None,
        epsabs=0.0,
        epsrel=1e-12,
        limit=500,
        full_output=1,
    )
    if val <= 0.0 or (err * math.exp(peak) > ORTHANT_TOL and err > 1e-8 * val):
        raise QuadratureError("orthant quadrature did not converge", err * math.exp(peak))
    return peak + math.log(val)


def bivariate_orthant(t: float, rho: float) -> float:
    """P(Z1 <= t, Z2 <= t) for standard normals with correlation rho."""
    return min(math.exp(log_bivariate_orthant(t, rho)), 1.0)


def upper_orthant(t: float, rho: float) -> float:
    """P(Z1 >= t, Z2 >= t), equal to the lower orthant at -t by symmetry."""
    return bivariate_orthant(-t, rho)


def hamming_threshold(s: int, alpha: float) -> float:
    return alpha * s / math.sqrt(s - 1)


def _hamming_terms(s: int, alpha: float, epsilon: float) -> tuple[float, float]:
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    if s < 2:
        raise ValueError("alphabet size must be at least 2")
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon!r}")
    t = hamming_threshold(s, alpha)
    return float(log_ndtr(-t)), log_bivariate_orthant(-t, 1.0 - epsilon)


def hamming_limit_conditional(s: int, alpha: float, epsilon: float) -> float:
    """lim_n P_eps(Y in A | X in A) for the ball with offset alpha."""
    log_marginal, log_joint = _hamming_terms(s, alpha, epsilon)
    return math.exp(log_joint - log_marginal)


def hamming_limit_probability(s: int, alpha: float) -> float:
    return normal_cdf(-hamming_threshold(s, alpha))


def hamming_limit_m(s: int, alpha: float, epsilon: float) -> float:
    """lim_n M_eps of the Hamming ball."""
    log_marginal, log_joint = _hamming_terms(s, alpha, epsilon)
    return (log_joint - log_marginal) / log_marginal


class LemmaExponent(NamedTuple):
    exponent: float
    c_eff: float


# "nelson-gross": q = 2 at time tau/2 with e^-tau = 1 - eps, so p = 2 - eps.
# "stated": p = 1 + (1 - eps)^2, which uses time tau instead of tau/2; it is
# kept for comparison and is violated in the tails (t >~ 1).
EXPONENT_FORMS = ("nelson-gross", "stated")


def lemma_exponent(epsilon: float, form: str = "nelson-gross") -> LemmaExponent:
    """Exponent e with P(Z1 >= t, Z2 >= t) <= P(Z >= t)^e, and c_eff = (e - 1)/eps.

    Gaussian hypercontractivity applied to f = 1{x >= t} gives
    e = 2 / (2 - eps) and c_eff = 1 / (2 - eps), so the conditional tail is at
    most P(Z >= t)^(eps / (2 - eps)).
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon!r}")
    rho = 1.0 - epsilon
    if form == "nelson-gross":
        return LemmaExponent(2.0 / (1.0 + rho), 1.0 / (1.0 + rho))
    if form == "stated":
        return LemmaExponent(2.0 / (1.0 + rho * rho), (2.0 - epsilon) / (1.0 + rho * rho))
    raise ValueError(f"unknown exponent form {form!r}; choose from {EXPONENT_FORMS}")


def c_eff_grid_min(points: int = 1000, form: str = "nelson-gross") -> tuple[float, float]:
    """(min c_eff, argmin eps) over the grid eps = 1/points, 2/points, ..., 1."""
    grid = np.linspace(1.0 / points, 1.0, points)
    vals = np.array([lemma_exponent(float(e), form).c_eff for e in grid])
    i = int(np.argmin(vals))
    return float(vals[i]), float(grid[i])


@dataclass
class NormalLemmaReport:
    checked: int
    form: str
    violations: list[tuple[float, float, float, float]] = field(default_factory=list)
    tightest_ratio: float = 0.0
    tightest_at: tuple[float, float] | None = None
    slack: float = 1e-9

    @property
    def passed(self) -> bool:
        return not self.violations


def verify_normal_lemma(t_grid, eps_grid, slack: float = 1e-9, form: str = "nelson-gross") -> NormalLemmaReport:
    """Check P(Z1>=t, Z2>=t) <= P(Z>=t)^e on a grid, with e from lemma_exponent.

    The slack is relative, since both sides are tiny in the tails.
    """
    report = NormalLemmaReport(0, form, slack=slack)
    for t in t_grid:
        if t <= 0:
            raise ValueError("thresholds must be positive")
        tail = normal_cdf(-t)
        for eps in eps_grid:
            lhs = upper_orthant(t, 1.0 - eps)
            rhs = tail ** lemma_exponent(eps, form).exponent
            report.checked += 1
            ratio = lhs / rhs
            if ratio > report.tightest_ratio:
                report.tightest_ratio, report.tightest_at = ratio, (float(t), float(eps))
            if lhs > rhs * (1.0 + slack):
                report.violations.append((float(t), float(eps), lhs, rhs))
    return report
