"""Correlated string pairs over [s]^n and the tensorized noise operator.

X is uniform on [s]^n; each Y_i copies X_i with probability 1 - epsilon and
is otherwise resampled uniformly from [s], independently across coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

# Dense tables beyond this many entries are refused.
MAX_TABLE_SIZE = 10**7


@dataclass(frozen=True)
class NoiseModel:
    s: int
    epsilon: float

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 2:
            raise ValueError(f"alphabet size must be an integer >= 2, got {self.s!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon!r}")

    @property
    def rho(self) -> float:
        """Correlation of the per-coordinate copy event, 1 - epsilon."""
        return 1.0 - self.epsilon

    @property
    def agreement(self) -> float:
        """P(X_i = Y_i) for a single coordinate."""
        return 1.0 - (1.0 - 1.0 / self.s) * self.epsilon

    def transition(self) -> np.ndarray:
        """Row-stochastic matrix of P(Y_i = b | X_i = a)."""
        s, eps = self.s, self.epsilon
        return (1.0 - eps) * np.eye(s) + (eps / s) * np.ones((s, s))


def coordinate_kernel(model: NoiseModel) -> np.ndarray:
    """The s x s joint law of one coordinate pair (X_i, Y_i)."""
    s, eps = model.s, model.epsilon
    off = (eps / s) / s
    kern = np.full((s, s), off)
    np.fill_diagonal(kern, (1.0 - eps + eps / s) / s)
    return kern


def _check_string(x, s: int) -> np.ndarray:
    arr = np.asarray(x, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("symbol string must be one-dimensional")
    if arr.size and (arr.min() < 0 or arr.max() >= s):
        raise ValueError(f"symbol out of range [0, {s})")
    return arr


def sample_correlated_pairs(model: NoiseModel, n: int, size: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Draw `size` independent pairs; returns two int arrays of shape (size, n)."""
    if n < 1:
        raise ValueError("string length must be at least 1")
    if size < 0:
        raise ValueError("size must be non-negative")
    rng = np.random.default_rng(seed)
    x = rng.integers(0, model.s, size=(size, n))
    resample = rng.random((size, n)) < model.epsilon
    fresh = rng.integers(0, model.s, size=(size, n))
    y = np.where(resample, fresh, x)
    return x, y


def sample_correlated_pair(model: NoiseModel, n: int, seed) -> tuple[np.ndarray, np.ndarray]:
    x, y = sample_correlated_pairs(model, n, 1, seed)
    return x[0], y[0]


def log_joint_probability(model: NoiseModel, x: Sequence[int], y: Sequence[int]) -> float:
    """Natural log of P_eps(X = x, Y = y); -inf when the pair is impossible."""
    xa = _check_string(x, model.s)
    ya = _check_string(y, model.s)
    if xa.shape != ya.shape:
        raise ValueError(f"length mismatch: {xa.size} vs {ya.size}")
    kern = coordinate_kernel(model)
    same = int(np.count_nonzero(xa == ya))
    diff = xa.size - same
    with np.errstate(divide="ignore"):
        return same * math.log(kern[0, 0]) + (diff * math.log(kern[0, 1]) if diff else 0.0)


def joint_probability(model: NoiseModel, x: Sequence[int], y: Sequence[int]) -> float:
    xa = _check_string(x, model.s)
    ya = _check_string(y, model.s)
    if xa.shape != ya.shape:
        raise ValueError(f"length mismatch: {xa.size} vs {ya.size}")
    if model.epsilon == 0.0 and np.any(xa != ya):
        return 0.0
    return math.exp(log_joint_probability(model, xa, ya))


@dataclass(frozen=True, eq=False)
class FunctionTable:
    """A function [s]^n -> R stored densely with shape (s,) * n.

    Points are indexed lexicographically: coordinate 0 is the most
    significant base-s digit of the flat index.
    """

    s: int
    n: int
    values: np.ndarray

    def __post_init__(self):
        if self.s < 2 or self.n < 1:
            raise ValueError("need s >= 2 and n >= 1")
        if self.s**self.n > MAX_TABLE_SIZE:
            raise ValueError(f"domain size {self.s}^{self.n} exceeds the {MAX_TABLE_SIZE} entry guard")
        vals = np.asarray(self.values)
        if vals.size != self.s**self.n:
            raise ValueError(f"table has {vals.size} entries, expected {self.s ** self.n}")
        object.__setattr__(self, "values", vals.reshape((self.s,) * self.n))

    @classmethod
    def from_callable(cls, s: int, n: int, fn: Callable[[tuple[int, ...]], float], dtype=float):
        pts = all_points(s, n)
        vals = np.array([fn(tuple(int(v) for v in p)) for p in pts], dtype=dtype)
        return cls(s, n, vals)

    @classmethod
    def indicator(cls, s: int, n: int, points) -> "FunctionTable":
        vals = np.zeros((s,) * n)
        for p in points:
            vals[tuple(p)] = 1.0
        return cls(s, n, vals)

    @property
    def size(self) -> int:
        return self.s**self.n

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def mean(self) -> float:
        return float(self.values.mean())

    def norm(self, p: float) -> float:
        """L_p norm under the uniform measure on [s]^n."""
        return float(np.mean(np.abs(self.values) ** p) ** (1.0 / p))

    def same_domain(self, other: "FunctionTable") -> bool:
        return self.s == other.s and self.n == other.n


def all_points(s: int, n: int) -> np.ndarray:
    """All of [s]^n in lexicographic order, as an (s^n, n) int array."""
    if s**n > MAX_TABLE_SIZE:
        raise ValueError(f"domain size {s}^{n} exceeds the enumeration guard")
    idx = np.arange(s**n)
    return np.stack(np.unravel_index(idx, (s,) * n), axis=1).astype(np.int64)


def point_index(points, s: int) -> np.ndarray:
    """Flat lexicographic index of each row of `points`."""
    pts = np.asarray(points, dtype=np.int64)
    n = pts.shape[-1]
    weights = s ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return pts @ weights


def _apply_along_axes(values: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    out = values
    for axis in range(values.ndim):
        out = np.moveaxis(np.tensordot(matrix, out, axes=([1], [axis])), 0, axis)
    return out


def apply_noise_operator(f: FunctionTable, tau: float) -> FunctionTable:
    """T_tau f, applying g -> tau g + (1 - tau) E g along every coordinate."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau!r}")
    out = np.asarray(f.values, dtype=float)
    for axis in range(f.n):
        out = tau * out + (1.0 - tau) * out.mean(axis=axis, keepdims=True)
    return FunctionTable(f.s, f.n, out)


def correlated_expectation(f: FunctionTable, g: FunctionTable, model: NoiseModel) -> float:
    """Exact E_eps f(X) g(Y), one coordinate kernel per axis."""
    if not f.same_domain(g) or f.s != model.s:
        raise ValueError("f, g and the noise model must share the same alphabet and length")
    pushed = _apply_along_axes(np.asarray(g.values, dtype=float), model.transition())
    return float(np.sum(np.asarray(f.values, dtype=float) * pushed) / f.size)
