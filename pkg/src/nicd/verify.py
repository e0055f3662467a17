"""Named invariant suites behind `nicd verify`."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bounds, gaussian
from .noise import FunctionTable, NoiseModel, all_points, apply_noise_operator, correlated_expectation
from .protocol import build_center_set, build_protocol, size_window, verify_protocol
from .sets import (
    Explicit,
    HammingBall,
    best_preimage_set,
    conditional_agreement,
    protocol_agreement,
    set_probability,
)

# Berry-Esseen constant (Shevtsova 2011) for i.i.d. sums.
BERRY_ESSEEN_C = 0.4748


@dataclass
class Check:
    name: str
    tolerance: str
    achieved: str
    passed: bool
    informational: bool = False

    def line(self) -> str:
        if self.informational:
            status = "INFO: holds" if self.passed else "INFO: fails"
        else:
            status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: achieved {self.achieved} (tolerance {self.tolerance})"


def random_table(rng, s: int, n: int) -> FunctionTable:
    return FunctionTable(s, n, rng.normal(size=s**n))


def noise_identity(seed: int = 0, count: int = 200) -> list[Check]:
    rng = np.random.default_rng(seed)
    eps_grid = np.linspace(0.0, 1.0, 10)
    worst = 0.0
    for i in range(count):
        s, n = int(rng.integers(2, 6)), int(rng.integers(1, 4))
        f = random_table(rng, s, n)
        eps = float(eps_grid[i % len(eps_grid)])
        lhs = correlated_expectation(f, f, NoiseModel(s, eps))
        rhs = float(np.mean(apply_noise_operator(f, math.sqrt(1.0 - eps)).values ** 2))
        worst = max(worst, abs(lhs - rhs))
    return [Check("E_eps f(X)f(Y) = E (T_sqrt(1-eps) f)^2", "1e-10", f"{worst:.3e}", worst <= 1e-10)]


def random_protocol_pair(rng, s: int, n: int, k: int) -> tuple[FunctionTable, FunctionTable]:
    """Two label tables on [s]^n whose preimages all have at most s^(n-k) points."""
    cap = s ** (n - k)
    size = s**n

    def partition() -> np.ndarray:
        perm = rng.permutation(size)
        labels = np.empty(size, dtype=np.int64)
        pos, lab = 0, 0
        while pos < size:
            block = int(rng.integers(1, cap + 1)) if rng.random() < 0.5 else cap
            labels[perm[pos : pos + block]] = lab
            pos += block
            lab += 1
        return labels

    f = partition()
    g = f.copy() if rng.random() < 0.3 else partition()
    return FunctionTable(s, n, f), FunctionTable(s, n, g)


def theorem1(seed: int = 0, count: int = 100) -> list[Check]:
    rng = np.random.default_rng(seed)
    violations, margin = 0, math.inf
    for _ in range(count):
        s = int(rng.integers(2, 4))
        n = int(rng.integers(2, 6 if s == 2 else 5))
        k = int(rng.integers(1, n))
        eps = float(rng.uniform(0.05, 0.95))
        model = NoiseModel(s, eps)
        f, g = random_protocol_pair(rng, s, n, k)
        spec, cond = best_preimage_set(f, g, k, model)
        agree = protocol_agreement(f, g, model)
        margin = min(margin, cond - agree)
        violations += (cond < agree - 1e-12) or len(spec) > s ** (n - k)
    return [
        Check(
            "extracted set conditional >= P(f(X) = g(Y))",
            "0 violations",
            f"{violations} violations, min margin {margin:.3e}",
            violations == 0,
        )
    ]


def window_set(s: int, n: int, k: int, seed: int) -> Explicit:
    lo, _ = size_window(s, n, k)
    size = max(1, math.ceil(lo))
    pts = all_points(s, n)
    pick = np.random.default_rng(seed).choice(len(pts), size, replace=False)
    return Explicit(s, n, tuple(map(tuple, pts[np.sort(pick)].tolist())))


def theorem2(seed: int = 0, seeds: int = 50) -> list[Check]:
    checks = []
    for s in (2, 3, 4, 5, 6):
        A = window_set(s, 3, 1, seed + s)
        for eps in (0.1, 0.3, 0.5):
            model = NoiseModel(s, eps)
            ratios, dev = [], 0.0
            for sd in range(seed, seed + seeds):
                rep = verify_protocol(build_protocol(A, build_center_set(s, 3, 1, sd)), A, model)
                dev = max(dev, rep.output_deviation, rep.conditional_deviation)
                ratios.append(rep.ratio)
            mean = float(np.mean(ratios))
            checks.append(Check(f"s={s} eps={eps} uniformity of f(X) and f(X)|agree", "1e-12", f"{dev:.2e}", dev <= 1e-12))
            checks.append(Check(f"s={s} eps={eps} mean agreement ratio", ">= 1/16", f"{mean:.4f}", mean >= 1 / 16))
    return checks


def hypercontractivity(seed: int = 0, trials: int = 200) -> list[Check]:
    worst, where = 0.0, None
    for s in (2, 3, 4, 5):
        for n in (1, 2, 3):
            for p in (1.2, 4 / 3, 1.5, 1.8, 2.0):
                rep = bounds.verify_hypercontractivity(s, n, p, bounds.sigma(1 / s, p), trials, seed)
                if rep.max_ratio > worst:
                    worst, where = rep.max_ratio, (s, n, round(p, 4))
    return [Check(f"||T_sigma f||_2 / ||f||_p (worst at s,n,p={where})", "<= 1 + 1e-10", f"{worst:.12f}", worst <= 1 + 1e-10)]


def normal_lemma(seed: int = 0) -> list[Check]:
    rhos = np.linspace(-0.98, 0.98, 50)
    arc = max(abs(gaussian.bivariate_orthant(0.0, r) - (0.25 + math.asin(r) / (2 * math.pi))) for r in rhos)
    t_grid = np.linspace(0.5, 5.0, 10)
    eps_grid = np.linspace(0.05, 0.95, 19)
    ng = gaussian.verify_normal_lemma(t_grid, eps_grid)
    stated = gaussian.verify_normal_lemma(t_grid, eps_grid, form="stated")
    return [
        Check("orthant at t=0 vs 1/4 + asin(rho)/(2 pi)", "1e-8", f"{arc:.2e}", arc <= 1e-8),
        Check(
            "P(Z1,Z2>=t) <= P(Z>=t)^(2/(2-eps))",
            "0 violations (slack 1e-9)",
            f"{len(ng.violations)} / {ng.checked}, tightest ratio {ng.tightest_ratio:.4f}",
            ng.passed,
        ),
        Check(
            "stated exponent 2/(1+(1-eps)^2)",
            "reported only",
            f"{len(stated.violations)} / {stated.checked} violations, worst ratio {stated.tightest_ratio:.3g}",
            stated.passed,
            informational=True,
        ),
    ]


def berry_esseen_envelope(s: int, n: int) -> float:
    """Bound on |P(A_{s,alpha,n}) - Phi(-t)| from Berry-Esseen plus flooring."""
    q = 1.0 / s
    sd = math.sqrt(q * (1 - q))
    third = q * (1 - q) * (q * q + (1 - q) ** 2)
    return (BERRY_ESSEEN_C * third / sd**3 + 1.0 / (sd * math.sqrt(2 * math.pi))) / math.sqrt(n)


def hamming_convergence(seed: int = 0, ns=(25, 100, 400, 1600)) -> list[Check]:
    checks = []
    for s in (4, 16):
        for alpha in (0.5, 1.0):
            limit_p = gaussian.hamming_limit_probability(s, alpha)
            gaps_p = [abs(set_probability(HammingBall(s, n, alpha)) - limit_p) for n in ns]
            env = [berry_esseen_envelope(s, n) for n in ns]
            ok = all(g <= e for g, e in zip(gaps_p, env))
            checks.append(
                Check(
                    f"s={s} alpha={alpha} |P(A) - Phi(-t)| within Berry-Esseen envelope",
                    "C rho / (sigma^3 sqrt n) + flooring",
                    ", ".join(f"{g:.2e}<={e:.2e}" for g, e in zip(gaps_p, env)),
                    ok,
                )
            )
            for eps in (0.1, 0.3):
                limit = gaussian.hamming_limit_conditional(s, alpha, eps)
                gaps = [abs(conditional_agreement(HammingBall(s, n, alpha), NoiseModel(s, eps)) - limit) for n in ns]
                checks.append(
                    Check(
                        f"s={s} alpha={alpha} eps={eps} conditional gap shrinks from n={ns[0]} to n={ns[-1]}",
                        "last < first",
                        f"{gaps[0]:.3e} -> {gaps[-1]:.3e}",
                        gaps[-1] < gaps[0],
                    )
                )
                mono = all(a > b for a, b in zip(gaps, gaps[1:]))
                checks.append(
                    Check(
                        f"s={s} alpha={alpha} eps={eps} conditional gap strictly monotone",
                        "reported only",
                        " ".join(f"{g:.3e}" for g in gaps),
                        mono,
                        informational=True,
                    )
                )
    return checks


SUITES = {
    "noise-identity": noise_identity,
    "hypercontractivity": hypercontractivity,
    "theorem1": theorem1,
    "theorem2": theorem2,
    "normal-lemma": normal_lemma,
    "hamming-convergence": hamming_convergence,
}


def run_suite(name: str, seed: int = 0) -> list[Check]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITES[name](seed=seed)
