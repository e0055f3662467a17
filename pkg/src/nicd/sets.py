"""Agreement statistics of subsets of [s]^n under the correlated-pair law.

Three set shapes are supported: explicit point lists, cylinders
{x : x_1 = ... = x_k = 0} and Hamming balls around the zero string.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Union

import numpy as np
from scipy.special import logsumexp
from scipy.stats import binom

from .noise import FunctionTable, NoiseModel, all_points, correlated_expectation, point_index

DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"

# Cubic-cost guard for the Hamming-ball dynamic program.
MAX_DP_LENGTH = 2000

# Slack when flooring a real radius, so 1.9999999999 counts as 2.
_FLOOR_SLACK = 1e-9


class DegenerateSetError(ValueError):
    """Raised when a set is empty or full, or M_eps is undefined for it."""


class MinEntropyError(ValueError):
    def __init__(self, label, count: int, limit: float, side: str):
        super().__init__(
            f"label {label!r} of {side} has {count} preimages, more than the min-entropy limit {limit:g}"
        )
        self.label = label
        self.count = count
        self.limit = limit
        self.side = side


@dataclass(frozen=True)
class Explicit:
    s: int
    n: int
    points: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        pts = sorted({tuple(int(v) for v in p) for p in self.points})
        if len(pts) != len(self.points):
            raise ValueError("explicit set contains duplicate points")
        for p in pts:
            if len(p) != self.n or min(p) < 0 or max(p) >= self.s:
                raise ValueError(f"point {p} is not in [{self.s}]^{self.n}")
        object.__setattr__(self, "points", tuple(pts))

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Cylinder:
    """Strings whose first k symbols are all zero."""

    s: int
    n: int
    k: int

    def __post_init__(self):
        if not 0 <= self.k <= self.n:
            raise ValueError(f"cylinder needs 0 <= k <= n, got k={self.k}, n={self.n}")


@dataclass(frozen=True)
class HammingBall:
    """Hamming ball around the zero string.

    variant "nonzero": #{i : x_i != 0} <= n(s-1)/s - alpha sqrt(n)
    variant "zero":    #{i : x_i == 0} <= n/s - alpha sqrt(n)
    The real threshold is floored to an integer count.
    """

    s: int
    n: int
    alpha: float
    variant: str = "nonzero"

    def __post_init__(self):
        if self.variant not in ("nonzero", "zero"):
            raise ValueError(f"unknown Hamming-ball variant {self.variant!r}")
        if self.raw_threshold < 0:
            raise DegenerateSetError(
                f"threshold {self.raw_threshold:.6g} is negative; the ball is empty"
            )

    @property
    def raw_threshold(self) -> float:
        base = self.n * (self.s - 1) / self.s if self.variant == "nonzero" else self.n / self.s
        return base - self.alpha * math.sqrt(self.n)

    @property
    def cutoff(self) -> int:
        return int(math.floor(self.raw_threshold + _FLOOR_SLACK))

    def contains(self, x) -> bool:
        x = np.asarray(x)
        if self.variant == "nonzero":
            return int(np.count_nonzero(x)) <= self.cutoff
        return int(np.count_nonzero(x == 0)) <= self.cutoff


SetSpec = Union[Explicit, Cylinder, HammingBall]


@dataclass
class AgreementReport:
    probability: float
    joint: float
    conditional: float
    m_value: float | None
    method: str
    degenerate: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def membership_mask(spec: SetSpec) -> np.ndarray:
    """Boolean membership over [s]^n in lexicographic order."""
    pts = all_points(spec.s, spec.n)
    if isinstance(spec, Cylinder):
        return np.all(pts[:, : spec.k] == 0, axis=1)
    if isinstance(spec, HammingBall):
        if spec.variant == "nonzero":
            return np.count_nonzero(pts, axis=1) <= spec.cutoff
        return np.count_nonzero(pts == 0, axis=1) <= spec.cutoff
    mask = np.zeros(len(pts), dtype=bool)
    if spec.points:
        mask[point_index(np.array(spec.points), spec.s)] = True
    return mask


def indicator(spec: SetSpec) -> FunctionTable:
    return FunctionTable(spec.s, spec.n, membership_mask(spec).astype(float))


def to_explicit(spec: SetSpec) -> Explicit:
    if isinstance(spec, Explicit):
        return spec
    pts = all_points(spec.s, spec.n)[membership_mask(spec)]
    return Explicit(spec.s, spec.n, tuple(map(tuple, pts.tolist())))


def _ball_log_probability(spec: HammingBall) -> float:
    c = spec.cutoff
    w = np.arange(0, min(c, spec.n) + 1)
    # "nonzero" counts nonzero symbols, "zero" counts zero symbols
    q = 1.0 - 1.0 / spec.s if spec.variant == "nonzero" else 1.0 / spec.s
    return float(logsumexp(binom.logpmf(w, spec.n, q)))


def _is_full(spec: SetSpec) -> bool:
    if isinstance(spec, Cylinder):
        return spec.k == 0
    if isinstance(spec, HammingBall):
        return spec.variant == "nonzero" and spec.cutoff >= spec.n
    return len(spec.points) == spec.s**spec.n


def _check_proper(spec: SetSpec) -> None:
    if isinstance(spec, Explicit) and not spec.points:
        raise DegenerateSetError("set is empty")
    if _is_full(spec):
        raise DegenerateSetError("set is the whole space")


def log_set_probability(spec: SetSpec) -> float:
    if isinstance(spec, Explicit) and not spec.points:
        return -math.inf
    if _is_full(spec):
        return 0.0
    if isinstance(spec, Cylinder):
        return -spec.k * math.log(spec.s)
    if isinstance(spec, HammingBall):
        return _ball_log_probability(spec)
    return math.log(len(spec.points)) - spec.n * math.log(spec.s)


def set_probability(spec: SetSpec) -> float:
    """P(X in A) for X uniform on [s]^n."""
    return math.exp(log_set_probability(spec))


def zero_indicator_law(model: NoiseModel) -> tuple[float, float, float]:
    """(P(X_i=0,Y_i=0), P(X_i=0,Y_i!=0), P(X_i!=0,Y_i!=0)) for one coordinate.

    P(X_i!=0, Y_i=0) equals the middle entry by symmetry.
    """
    s, eps = model.s, model.epsilon
    both = (1.0 - eps + eps / s) / s
    one = (eps * (1.0 - 1.0 / s)) / s
    return both, one, 1.0 - both - 2.0 * one


def ball_joint_dp(spec: HammingBall, model: NoiseModel) -> float:
    """Exact P_eps(X in A, Y in A) for a Hamming ball.

    Membership depends only on how many coordinates of each string are
    zero, so the chain runs over (zero count of X, zero count of Y). For the
    "nonzero" variant the requirement is zero count >= n - cutoff, and counts
    saturate at that level; for "zero" it is zero count <= cutoff, and mass
    leaving the window is dropped.
    """
    if spec.n > MAX_DP_LENGTH:
        raise ValueError(f"n={spec.n} exceeds the dynamic-program guard {MAX_DP_LENGTH}")
    both, one, neither = zero_indicator_law(model)
    saturate = spec.variant == "nonzero"
    top = spec.n - spec.cutoff if saturate else spec.cutoff
    if saturate and top <= 0:
        return 1.0
    size = top + 1
    prob = np.zeros((size, size))
    prob[0, 0] = 1.0

    def bump(arr: np.ndarray, axis: int) -> np.ndarray:
        out = np.zeros_like(arr)
        src = [slice(None)] * 2
        dst = [slice(None)] * 2
        src[axis] = slice(0, size - 1)
        dst[axis] = slice(1, size)
        out[tuple(dst)] = arr[tuple(src)]
        if saturate:
            last = [slice(None)] * 2
            last[axis] = size - 1
            out[tuple(last)] += arr[tuple(last)]
        return out

    for _ in range(spec.n):
        up_x = bump(prob, 0)
        prob = neither * prob + one * (up_x + bump(prob, 1)) + both * bump(up_x, 1)
    return float(prob[top, top]) if saturate else float(prob.sum())


def log_joint_agreement(spec: SetSpec, model: NoiseModel) -> float:
    if model.s != spec.s:
        raise ValueError("noise model alphabet does not match the set")
    if isinstance(spec, Explicit) and not spec.points:
        return -math.inf
    if _is_full(spec):
        return 0.0
    if isinstance(spec, Cylinder):
        return -spec.k * math.log(spec.s) + spec.k * math.log(model.agreement)
    if isinstance(spec, HammingBall):
        val = ball_joint_dp(spec, model)
    else:
        ind = indicator(spec)
        val = correlated_expectation(ind, ind, model)
    return math.log(val) if val > 0 else -math.inf


def joint_agreement(spec: SetSpec, model: NoiseModel) -> float:
    """P_eps(X in A, Y in A)."""
    return math.exp(log_joint_agreement(spec, model))


def conditional_agreement(spec: SetSpec, model: NoiseModel) -> float:
    """P_eps(Y in A | X in A)."""
    if isinstance(spec, Explicit) and not spec.points:
        raise DegenerateSetError("set is empty; the conditional is undefined")
    return math.exp(log_joint_agreement(spec, model) - log_set_probability(spec))


def method_of(spec: SetSpec) -> str:
    if isinstance(spec, Cylinder):
        return "closed-form"
    if isinstance(spec, HammingBall):
        return "dp"
    return "enumeration"


def m_epsilon(spec: SetSpec, model: NoiseModel) -> float:
    """ln P_eps(Y in A | X in A) / ln P(A)."""
    _check_proper(spec)
    log_p = log_set_probability(spec)
    log_cond = log_joint_agreement(spec, model) - log_p
    if log_cond == 0.0 or model.epsilon == 0.0:
        raise DegenerateSetError("conditional agreement is 1; M_eps is degenerate")
    return log_cond / log_p


def evaluate(spec: SetSpec, model: NoiseModel) -> AgreementReport:
    """Full agreement report; degenerate cases are recorded rather than raised."""
    method = method_of(spec)
    if isinstance(spec, Explicit) and not spec.points:
        raise DegenerateSetError("set is empty")
    log_p = log_set_probability(spec)
    log_joint = log_joint_agreement(spec, model)
    log_cond = log_joint - log_p
    m_value, degenerate = None, None
    if log_p == 0.0:
        degenerate = "set is the whole space"
    elif log_cond == 0.0 or model.epsilon == 0.0:
        degenerate = "conditional agreement is 1"
    else:
        m_value = log_cond / log_p
    return AgreementReport(
        probability=math.exp(log_p),
        joint=math.exp(log_joint),
        conditional=math.exp(log_cond),
        m_value=m_value,
        method=method,
        degenerate=degenerate,
    )


def cylinder_m_value(s: int, epsilon: float) -> float:
    """Closed-form M_eps of any cylinder; independent of k and n."""
    return math.log(1.0 / (1.0 - (1.0 - 1.0 / s) * epsilon)) / math.log(s)


def _label_masks(table: FunctionTable) -> dict:
    flat = table.flat()
    labels, inverse = np.unique(flat, return_inverse=True)
    return {lab.item(): inverse == i for i, lab in enumerate(labels)}


def check_min_entropy(table: FunctionTable, k: float, side: str = "f") -> None:
    limit = table.s ** (table.n - k)
    for label, mask in _label_masks(table).items():
        count = int(mask.sum())
        if count > limit * (1 + 1e-12):
            raise MinEntropyError(label, count, limit, side)


def protocol_agreement(f: FunctionTable, g: FunctionTable, model: NoiseModel) -> float:
    """Exact P_eps(f(X) = g(Y)) for label-valued tables."""
    fm = _label_masks(f)
    gm = _label_masks(g)
    total = 0.0
    for label, mask in fm.items():
        if label not in gm:
            continue
        total += correlated_expectation(
            FunctionTable(f.s, f.n, mask.astype(float)),
            FunctionTable(g.s, g.n, gm[label].astype(float)),
            model,
        )
    return total


def best_preimage_set(
    f: FunctionTable, g: FunctionTable, k: float, model: NoiseModel
) -> tuple[Explicit, float]:
    """The preimage f^{-1}(z) with the largest conditional self-agreement.

    With both tables of min-entropy k its conditional agreement is at least
    P_eps(f(X) = g(Y)), and it has at most s^(n-k) points.
    """
    if not f.same_domain(g):
        raise ValueError("f and g must share the same domain")
    check_min_entropy(f, k, "f")
    check_min_entropy(g, k, "g")
    pts = all_points(f.s, f.n)
    best_mask, best_cond = None, -1.0
    for mask in _label_masks(f).values():
        ind = FunctionTable(f.s, f.n, mask.astype(float))
        cond = correlated_expectation(ind, ind, model) / ind.mean()
        if cond > best_cond:
            best_mask, best_cond = mask, cond
    if best_mask.all():
        raise DegenerateSetError("the best preimage is the whole space (P(A) = 1)")
    spec = Explicit(f.s, f.n, tuple(map(tuple, pts[best_mask].tolist())))
    return spec, best_cond


def format_point(point, s: int) -> str:
    if s > len(DIGITS):
        raise ValueError(f"text format supports alphabets up to {len(DIGITS)}")
    return "".join(DIGITS[v] for v in point)


def write_explicit_set(spec: Explicit, path) -> None:
    lines = [f"{spec.s} {spec.n}"] + [format_point(p, spec.s) for p in spec.points]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_explicit_set(text: str) -> Explicit:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ValueError("explicit set file is empty")
    try:
        s, n = (int(v) for v in lines[0].split())
    except ValueError:
        raise ValueError(f"bad header {lines[0]!r}; expected 's n'") from None
    if s > len(DIGITS):
        raise ValueError(f"text format supports alphabets up to {len(DIGITS)}")
    points = []
    for lineno, word in enumerate(lines[1:], start=2):
        if len(word) != n:
            raise ValueError(f"line {lineno}: expected {n} symbols, got {len(word)}")
        try:
            pt = tuple(DIGITS.index(ch.lower()) for ch in word)
        except ValueError:
            raise ValueError(f"line {lineno}: invalid symbol in {word!r}") from None
        if max(pt) >= s:
            raise ValueError(f"line {lineno}: symbol out of range for s={s}")
        points.append(pt)
    return Explicit(s, n, tuple(points))


def read_explicit_set(path) -> Explicit:
    return parse_explicit_set(Path(path).read_text())
