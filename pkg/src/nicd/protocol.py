"""Turning a good set A into a full protocol by translating it around.

A random coset C of a subgroup of ([s]^n, +) with |C| = s^k serves as the
set of centres. Each party outputs the centre c minimising x - c in an order
that puts every point of A first. Because C is a coset, the output is exactly
uniform on C, both overall and conditioned on agreement.

Z_s splits by CRT into Z_q for the prime powers q = p^j dividing s. The
subgroup is built one prime power at a time: a uniformly random free rank-k
submodule of (Z_q)^n (a k-dimensional subspace when j = 1) plus a uniform
offset.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .noise import (
    MAX_TABLE_SIZE,
    FunctionTable,
    NoiseModel,
    all_points,
    correlated_expectation,
    point_index,
)
from .sets import DIGITS, Explicit, conditional_agreement, format_point

# Largest centre set we are willing to materialise.
MAX_CENTERS = 10**6


def factorize(s: int) -> list[tuple[int, int]]:
    """Prime factorisation as sorted (prime, multiplicity) pairs."""
    if int(s) != s or s < 2:
        raise ValueError(f"cannot factorise {s!r}; need an integer >= 2")
    s = int(s)
    out = []
    d = 2
    while d * d <= s:
        if s % d == 0:
            j = 0
            while s % d == 0:
                s //= d
                j += 1
            out.append((d, j))
        d += 1 if d == 2 else 2
    if s > 1:
        out.append((s, 1))
    return out


@dataclass(frozen=True)
class CrtDecomposition:
    """Additive isomorphism between (Z_s)^n and the product of the (Z_q)^n."""

    s: int
    n: int
    factors: tuple[tuple[int, int], ...]

    @property
    def moduli(self) -> tuple[int, ...]:
        return tuple(p**j for p, j in self.factors)

    @property
    def idempotents(self) -> tuple[int, ...]:
        """e_i with e_i = 1 mod q_i and e_i = 0 mod q_l for l != i."""
        out = []
        for q in self.moduli:
            m = self.s // q
            out.append((m * pow(m, -1, q)) % self.s)
        return tuple(out)

    def to_residues(self, x) -> np.ndarray:
        """Residues of each symbol; appends a trailing axis of length m."""
        x = np.asarray(x, dtype=np.int64)
        return np.stack([x % q for q in self.moduli], axis=-1)

    def from_residues(self, r) -> np.ndarray:
        """Inverse of to_residues (the map called phi)."""
        r = np.asarray(r, dtype=np.int64)
        out = np.zeros(r.shape[:-1], dtype=np.int64)
        for i, e in enumerate(self.idempotents):
            out = (out + e * r[..., i]) % self.s
        return out

    def embed(self, i: int, r) -> np.ndarray:
        """Image under phi of a vector living only in the i-th component."""
        return (self.idempotents[i] * np.asarray(r, dtype=np.int64)) % self.s


def crt_isomorphism(s: int, n: int) -> CrtDecomposition:
    return CrtDecomposition(s, n, tuple(factorize(s)))


def _eliminate(mat: np.ndarray, p: int, q: int) -> tuple[np.ndarray, list[int]]:
    """Row-reduce over Z_q using only unit pivots; returns (matrix, pivot columns)."""
    mat = mat.copy() % q
    rows, cols = mat.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hit = next((i for i in range(r, rows) if mat[i, c] % p), None)
        if hit is None:
            continue
        mat[[r, hit]] = mat[[hit, r]]
        mat[r] = (mat[r] * pow(int(mat[r, c]), -1, q)) % q
        for i in range(rows):
            if i != r and mat[i, c]:
                mat[i] = (mat[i] - mat[i, c] * mat[r]) % q
        pivots.append(c)
        r += 1
    return mat, pivots


@dataclass(frozen=True, eq=False)
class PrimeSubspace:
    """Free rank-k submodule of (Z_q)^n, q = p^power, in canonical echelon form.

    With power = 1 this is an ordinary k-dimensional subspace of F_p^n. The
    basis has an identity block on its pivot columns, which makes it unique
    per submodule.
    """

    p: int
    n: int
    k: int
    basis: np.ndarray
    power: int = 1

    @property
    def q(self) -> int:
        return self.p**self.power

    def key(self) -> tuple:
        return tuple(map(tuple, self.basis.tolist()))

    def elements(self) -> np.ndarray:
        """All q^k members as a (q^k, n) array."""
        if self.k == 0:
            return np.zeros((1, self.n), dtype=np.int64)
        coeffs = np.array(list(itertools.product(range(self.q), repeat=self.k)), dtype=np.int64)
        return (coeffs @ self.basis) % self.q


def random_subspace(p: int, n: int, k: int, seed, power: int = 1) -> PrimeSubspace:
    """Uniformly random free rank-k submodule of (Z_{p^power})^n.

    A uniform k x n matrix conditioned on full rank mod p spans a uniform
    member of the Grassmannian, since GL_n acts transitively and preserves
    the matrix law.
    """
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    if len(factorize(p)) != 1 or factorize(p)[0][1] != 1:
        raise ValueError(f"{p} is not prime")
    q = p**power
    rng = np.random.default_rng(seed)
    if k == 0:
        return PrimeSubspace(p, n, 0, np.zeros((0, n), dtype=np.int64), power)
    while True:
        mat = rng.integers(0, q, size=(k, n))
        reduced, pivots = _eliminate(mat, p, q)
        if len(pivots) == k:
            return PrimeSubspace(p, n, k, reduced.astype(np.int64), power)


@dataclass(eq=False)
class CenterSet:
    s: int
    n: int
    k: int
    crt: CrtDecomposition
    components: list[tuple[PrimeSubspace, np.ndarray]]
    subgroup: np.ndarray = field(repr=False)
    offset: np.ndarray
    centers: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.centers)


def _sumset(parts: list[np.ndarray], s: int) -> np.ndarray:
    acc = np.zeros((1, parts[0].shape[1]), dtype=np.int64)
    for part in parts:
        acc = ((acc[:, None, :] + part[None, :, :]) % s).reshape(-1, acc.shape[1])
    return acc


def assemble_center_set(s: int, n: int, k: int, components) -> CenterSet:
    """Push the per-prime-power cosets through phi and collect the centres."""
    crt = crt_isomorphism(s, n)
    if s**k > MAX_CENTERS:
        raise ValueError(f"s^k = {s ** k} centres exceeds the guard {MAX_CENTERS}")
    group_parts, offset = [], np.zeros(n, dtype=np.int64)
    for i, (sub, off) in enumerate(components):
        group_parts.append(crt.embed(i, sub.elements()))
        offset = (offset + crt.embed(i, off)) % s
    subgroup = _sumset(group_parts, s)
    subgroup = subgroup[np.argsort(point_index(subgroup, s))]
    centers = (subgroup + offset) % s
    centers = centers[np.argsort(point_index(centers, s))]
    return CenterSet(s, n, k, crt, list(components), subgroup, offset, centers)


def build_center_set(s: int, n: int, k: int, seed) -> CenterSet:
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    components = []
    for p, j in factorize(s):
        sub = random_subspace(p, n, k, rng, power=j)
        components.append((sub, rng.integers(0, p**j, size=n).astype(np.int64)))
    return assemble_center_set(s, n, k, components)


@dataclass(eq=False)
class TranslationProtocol:
    A: Explicit
    C: CenterSet
    rank: np.ndarray = field(repr=False)
    decoder: np.ndarray = field(repr=False)  # flat point index -> position in C.centers

    @property
    def s(self) -> int:
        return self.C.s

    @property
    def n(self) -> int:
        return self.C.n

    def __call__(self, x) -> tuple[int, ...]:
        idx = int(point_index(np.asarray(x), self.s))
        return tuple(int(v) for v in self.C.centers[self.decoder[idx]])

    def output_table(self) -> FunctionTable:
        """f_C as a label table: label = position of the centre in C.centers."""
        return FunctionTable(self.s, self.n, self.decoder.copy())


def translation_order(A: Explicit) -> np.ndarray:
    """Rank of every point: A first, then the rest, lexicographic within each."""
    size = A.s**A.n
    in_a = np.zeros(size, dtype=bool)
    in_a[point_index(np.array(A.points), A.s)] = True
    order = np.concatenate([np.flatnonzero(in_a), np.flatnonzero(~in_a)])
    rank = np.empty(size, dtype=np.int64)
    rank[order] = np.arange(size)
    return rank


def build_protocol(A: Explicit, C: CenterSet) -> TranslationProtocol:
    """f_C(x) = argmin over c in C of rank(x - c)."""
    if (A.s, A.n) != (C.s, C.n):
        raise ValueError("set and centre set live in different spaces")
    if not A.points:
        raise ValueError("the set A must be non-empty")
    if A.s**A.n * len(C) > 50 * MAX_TABLE_SIZE:
        raise ValueError("decoder construction exceeds the enumeration guard")
    rank = translation_order(A)
    pts = all_points(A.s, A.n)
    best = np.full(len(pts), np.iinfo(np.int64).max)
    decoder = np.zeros(len(pts), dtype=np.int64)
    for pos, c in enumerate(C.centers):
        r = rank[point_index((pts - c) % A.s, A.s)]
        better = r < best
        best[better] = r[better]
        decoder[better] = pos
    return TranslationProtocol(A, C, rank, decoder)


def equivariance_violations(tp: TranslationProtocol) -> int:
    """Count (x, g) with f_C(x + g) != f_C(x) + g over the generating subgroup."""
    s = tp.s
    pts = all_points(s, tp.n)
    out = tp.C.centers[tp.decoder]
    bad = 0
    for g in tp.C.subgroup:
        moved = tp.decoder[point_index((pts + g) % s, s)]
        bad += int(np.count_nonzero(np.any(tp.C.centers[moved] != (out + g) % s, axis=1)))
    return bad


def size_window(s: int, n: int, k: int) -> tuple[float, float]:
    """Cardinality range s^(n-k)/8 <= |A| <= s^(n-k)/4 for the stability guarantee."""
    base = float(s) ** (n - k)
    return base / 8.0, base / 4.0


@dataclass
class ProtocolReport:
    output_distribution: np.ndarray
    conditional_distribution: np.ndarray
    agreement: float
    set_conditional: float
    ratio: float
    output_deviation: float
    conditional_deviation: float
    in_window: bool
    window: tuple[float, float]
    tolerance: float = 1e-12

    @property
    def uniform_output(self) -> bool:
        return self.output_deviation <= self.tolerance

    @property
    def uniform_given_agreement(self) -> bool:
        return self.conditional_deviation <= self.tolerance

    @property
    def stable(self) -> bool:
        return self.ratio >= 1.0 / 16.0

    def to_dict(self) -> dict:
        return {
            "agreement": self.agreement,
            "set_conditional": self.set_conditional,
            "ratio": self.ratio,
            "ratio_at_least_1_16": self.stable,
            "uniform_output": self.uniform_output,
            "output_max_deviation": self.output_deviation,
            "uniform_given_agreement": self.uniform_given_agreement,
            "conditional_max_deviation": self.conditional_deviation,
            "in_size_window": self.in_window,
            "size_window": list(self.window),
        }


def verify_protocol(
    tp: TranslationProtocol, A: Explicit | None = None, model: NoiseModel | None = None
) -> ProtocolReport:
    """Exact output law, conditional output law and agreement of f_C."""
    A = tp.A if A is None else A
    if model is None:
        raise ValueError("a noise model is required")
    m = len(tp.C)
    counts = np.bincount(tp.decoder, minlength=m)
    dist = counts / counts.sum()
    per_center = np.zeros(m)
    for pos in range(m):
        ind = FunctionTable(tp.s, tp.n, (tp.decoder == pos).astype(float))
        per_center[pos] = correlated_expectation(ind, ind, model)
    agreement = float(per_center.sum())
    cond_dist = per_center / agreement
    if len(A) == A.s**A.n:
        set_cond = 1.0
    else:
        set_cond = conditional_agreement(A, model)
    lo, hi = size_window(tp.s, tp.n, tp.C.k)
    return ProtocolReport(
        output_distribution=dist,
        conditional_distribution=cond_dist,
        agreement=agreement,
        set_conditional=set_cond,
        ratio=agreement / set_cond,
        output_deviation=float(np.max(np.abs(dist - 1.0 / m))),
        conditional_deviation=float(np.max(np.abs(cond_dist - 1.0 / m))),
        in_window=lo <= len(A) <= hi,
        window=(lo, hi),
    )


def pair_coverage(s: int, n: int, k: int, seeds) -> np.ndarray:
    """Empirical P(0, b in C) for every b, flat-indexed, over the given seeds."""
    hits = np.zeros(s**n)
    total = 0
    for seed in seeds:
        C = build_center_set(s, n, k, seed)
        idx = point_index(C.centers, s)
        if 0 in idx:
            hits[idx] += 1
        total += 1
    return hits / max(total, 1)


def protocol_to_dict(tp: TranslationProtocol, seed=None, include_decoder: bool = True) -> dict:
    out = {
        "alphabet": tp.s,
        "n": tp.n,
        "k": tp.C.k,
        "seed": seed,
        "factors": [list(f) for f in tp.C.crt.factors],
        "components": [
            {"p": sub.p, "power": sub.power, "basis": sub.basis.tolist(), "offset": off.tolist()}
            for sub, off in tp.C.components
        ],
        "set": [format_point(p, tp.s) for p in tp.A.points],
    }
    if include_decoder:
        out["decoder"] = tp.decoder.tolist()
    return out


def protocol_from_dict(data: dict) -> TranslationProtocol:
    s, n, k = int(data["alphabet"]), int(data["n"]), int(data["k"])
    components = []
    for comp in data["components"]:
        basis = np.array(comp["basis"], dtype=np.int64).reshape(-1, n)
        sub = PrimeSubspace(int(comp["p"]), n, k, basis, int(comp["power"]))
        components.append((sub, np.array(comp["offset"], dtype=np.int64)))
    A = Explicit(s, n, tuple(tuple(DIGITS.index(ch) for ch in w) for w in data["set"]))
    tp = build_protocol(A, assemble_center_set(s, n, k, components))
    if "decoder" in data and data["decoder"] is not None:
        if not np.array_equal(np.asarray(data["decoder"]), tp.decoder):
            raise ValueError("stored decoder table disagrees with the rebuilt protocol")
    return tp
