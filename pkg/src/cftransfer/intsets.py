"""Integer sets with exact membership, counting and rank queries.

Every set answers:
    contains(m), count(x) = #(S ∩ [1, x]), nth(i) (1-based),
    elements_range(lo, hi) as an int64 array, iter_range(lo, hi) over Python ints.
Analytic sets (naturals, residue classes, Piatetski-Shapiro, square blocks)
work for arbitrarily large integers; sieved sets are bounded by their sieve.
"""
from __future__ import annotations

import json
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterator

import gmpy2
import numpy as np

from .numerics import frac_str, iroot, isqrt, parse_frac

INT64_SAFE = 2**62
SEGMENT = 1 << 22
MAX_SIEVE = 2 * 10**9


class SetError(ValueError):
    pass


class SetTooSmall(SetError):
    pass


class ResourceLimit(RuntimeError):
    """A query would need enumeration beyond the configured limits."""


class IntegerSet:
    spec: dict

    # --- scalar queries -------------------------------------------------
    def contains(self, m: int) -> bool:
        raise NotImplementedError

    def count(self, x: int) -> int:
        raise NotImplementedError

    def nth(self, i: int) -> int:
        if i < 1:
            raise IndexError("rank must be >= 1")
        # smallest x with count(x) >= i, by doubling then bisection
        hi = max(i, 2)
        while self.count(hi) < i:
            hi *= 2
        lo = 1
        while lo < hi:
            mid = (lo + hi) // 2
            if self.count(mid) >= i:
                hi = mid
            else:
                lo = mid + 1
        return lo

    def count_range(self, lo: int, hi: int) -> int:
        if hi < lo:
            return 0
        return self.count(hi) - self.count(max(lo, 1) - 1)

    # --- array queries --------------------------------------------------
    def elements_range(self, lo: int, hi: int) -> np.ndarray:
        lo = max(lo, 1)
        if hi < lo:
            return np.zeros(0, dtype=np.int64)
        if hi >= INT64_SAFE:
            raise ResourceLimit("range exceeds int64")
        return np.array(list(self.iter_range(lo, hi)), dtype=np.int64)

    def elements(self, hi: int) -> np.ndarray:
        return self.elements_range(1, hi)

    def iter_range(self, lo: int, hi: int) -> Iterator[int]:
        lo = max(lo, 1)
        i = self.count(lo - 1) + 1
        while True:
            v = self.nth(i)
            if v > hi:
                return
            yield v
            i += 1

    def contains_array(self, ms: np.ndarray) -> np.ndarray:
        ms = np.asarray(ms, dtype=np.int64)
        if ms.size == 0:
            return np.zeros(0, dtype=bool)
        elems = self.elements(int(ms.max()))
        pos = np.searchsorted(elems, ms)
        pos = np.minimum(pos, max(len(elems) - 1, 0))
        if len(elems) == 0:
            return np.zeros(ms.shape, dtype=bool)
        return elems[pos] == ms

    def count_array(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        if xs.size == 0:
            return np.zeros(0, dtype=np.int64)
        elems = self.elements(max(int(xs.max()), 0))
        return np.searchsorted(elems, xs, side="right").astype(np.int64)

    def nth_array(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size == 0:
            return np.zeros(0, dtype=np.int64)
        top = self.nth(int(idx.max()))
        elems = self.elements(top)
        return elems[idx - 1]

    def to_json(self) -> dict:
        return self.spec

    def __repr__(self) -> str:
        return f"{type(self).__name__}({json.dumps(self.spec)})"


class Naturals(IntegerSet):
    def __init__(self):
        self.spec = {"kind": "naturals", "params": {}}

    def contains(self, m):
        return m >= 1

    def count(self, x):
        return max(int(x), 0)

    def nth(self, i):
        if i < 1:
            raise IndexError("rank must be >= 1")
        return i

    def iter_range(self, lo, hi):
        return iter(range(max(lo, 1), hi + 1))

    def elements_range(self, lo, hi):
        return np.arange(max(lo, 1), hi + 1, dtype=np.int64)

    def contains_array(self, ms):
        return np.asarray(ms) >= 1

    def count_array(self, xs):
        return np.maximum(np.asarray(xs, dtype=np.int64), 0)

    def nth_array(self, idx):
        return np.asarray(idx, dtype=np.int64).copy()


class ResidueClass(IntegerSet):
    """{n >= 1 : n ≡ residue (mod modulus)}."""

    def __init__(self, modulus: int, residue: int):
        if modulus < 1:
            raise SetError("modulus must be positive")
        self.q = modulus
        self.r = residue % modulus
        self.first = self.r if self.r >= 1 else modulus
        self.spec = {"kind": "residue_class", "params": {"modulus": modulus, "residue": self.r}}

    def contains(self, m):
        return m >= 1 and m % self.q == self.r

    def count(self, x):
        return 0 if x < self.first else (x - self.first) // self.q + 1

    def nth(self, i):
        if i < 1:
            raise IndexError("rank must be >= 1")
        return self.first + (i - 1) * self.q

    def iter_range(self, lo, hi):
        i = self.count(max(lo, 1) - 1) + 1
        return iter(range(self.nth(i), hi + 1, self.q))

    def elements_range(self, lo, hi):
        start = self.nth(self.count(max(lo, 1) - 1) + 1)
        return np.arange(start, hi + 1, self.q, dtype=np.int64)

    def contains_array(self, ms):
        ms = np.asarray(ms, dtype=np.int64)
        return (ms >= 1) & (ms % self.q == self.r)

    def count_array(self, xs):
        xs = np.asarray(xs, dtype=np.int64)
        return np.where(xs < self.first, 0, (xs - self.first) // self.q + 1)

    def nth_array(self, idx):
        return self.first + (np.asarray(idx, dtype=np.int64) - 1) * self.q


def ps_value(n: int, alpha) -> int:
    """floor(n**alpha) for rational alpha = p/q, as the integer q-th root of n**p."""
    alpha = parse_frac(alpha)
    if alpha <= 1:
        raise SetError("Piatetski-Shapiro exponent must exceed 1")
    return iroot(n**alpha.numerator, alpha.denominator)


class PiatetskiShapiro(IntegerSet):
    """PS(alpha) = {floor(n^alpha) : n >= 1}, alpha = p/q > 1 rational.

    For alpha > 1 consecutive values differ by at least 1, so the sequence is
    already strictly increasing and the set view needs no de-duplication.
    """

    def __init__(self, alpha):
        alpha = parse_frac(alpha)
        if alpha <= 1:
            raise SetError("Piatetski-Shapiro exponent must exceed 1")
        self.alpha = alpha
        self.p, self.q = alpha.numerator, alpha.denominator
        self.spec = {"kind": "piatetski_shapiro", "params": {"alpha": frac_str(alpha)}}

    def value(self, n: int) -> int:
        return iroot(n**self.p, self.q)

    def contains(self, m):
        if m < 1:
            return False
        n = self.count(m)
        return n >= 1 and self.value(n) == m

    def count(self, x):
        # floor(n^(p/q)) <= x  iff  n^p < (x+1)^q
        if x < 1:
            return 0
        n = iroot((x + 1) ** self.q - 1, self.p)
        return n

    def nth(self, i):
        if i < 1:
            raise IndexError("rank must be >= 1")
        return self.value(i)

    def _values(self, ns) -> np.ndarray:
        p, q = self.p, self.q
        return np.array([int(gmpy2.iroot(gmpy2.mpz(int(n)) ** p, q)[0]) for n in ns], dtype=np.int64)

    def elements_range(self, lo, hi):
        lo = max(lo, 1)
        if hi < lo:
            return np.zeros(0, dtype=np.int64)
        return self._values(range(self.count(lo - 1) + 1, self.count(hi) + 1))

    def iter_range(self, lo, hi):
        for n in range(self.count(max(lo, 1) - 1) + 1, self.count(hi) + 1):
            yield self.value(n)

    def nth_array(self, idx):
        return self._values(np.asarray(idx, dtype=np.int64))


class SquareBlocks(IntegerSet):
    """The union of blocks [n^2, n^2 + floor(sqrt(n))] over n >= 1."""

    def __init__(self):
        self.spec = {"kind": "square_blocks", "params": {}}

    @staticmethod
    def _sum_isqrt(K: int) -> int:
        # sum_{n=1}^{K} floor(sqrt(n))
        if K < 1:
            return 0
        s = isqrt(K)
        full = 2 * (s - 1) * s * (2 * s - 1) // 6 + (s - 1) * s // 2
        return full + s * (K - s * s + 1)

    def contains(self, m):
        if m < 1:
            return False
        n = isqrt(m)
        return m - n * n <= isqrt(n)

    def count(self, x):
        if x < 1:
            return 0
        m = isqrt(x)
        before = self._sum_isqrt(m - 1) + (m - 1)
        return before + min(isqrt(m) + 1, x - m * m + 1)

    def elements_range(self, lo, hi):
        lo = max(lo, 1)
        if hi < lo:
            return np.zeros(0, dtype=np.int64)
        parts = []
        for n in range(max(isqrt(lo) - 1, 1), isqrt(hi) + 1):
            a = n * n
            b = a + isqrt(n)
            a, b = max(a, lo), min(b, hi)
            if a <= b:
                parts.append(np.arange(a, b + 1, dtype=np.int64))
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)

    def iter_range(self, lo, hi):
        lo = max(lo, 1)
        for n in range(max(isqrt(lo) - 1, 1), isqrt(hi) + 1):
            a = n * n
            yield from range(max(a, lo), min(a + isqrt(n), hi) + 1)

    def contains_array(self, ms):
        ms = np.asarray(ms, dtype=np.int64)
        n = np.floor(np.sqrt(ms.astype(np.float64))).astype(np.int64)
        n -= (n * n > ms)
        n += ((n + 1) * (n + 1) <= ms)
        r = np.floor(np.sqrt(np.maximum(n, 0).astype(np.float64))).astype(np.int64)
        return (ms >= 1) & (ms - n * n <= r)


def _simple_sieve(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, isqrt(n) + 1, 2):
        if flags[p]:
            flags[p * p :: 2 * p] = False
    return np.nonzero(flags)[0].astype(np.int64)


def segmented_sieve(hi: int, segment: int = SEGMENT) -> np.ndarray:
    """All primes <= hi, sieving fixed-size segments against base primes up to sqrt(hi)."""
    if hi < 2:
        return np.zeros(0, dtype=np.int64)
    base = _simple_sieve(isqrt(hi))
    if hi <= segment:
        return _simple_sieve(hi)
    parts = [base]
    lo = base[-1] + 1 if len(base) else 2
    while lo <= hi:
        top = min(lo + segment - 1, hi)
        flags = np.ones(top - lo + 1, dtype=bool)
        for p in base:
            p = int(p)
            if p * p > top:
                break
            start = max(p * p, ((lo + p - 1) // p) * p)
            flags[start - lo :: p] = False
        parts.append(np.nonzero(flags)[0].astype(np.int64) + lo)
        lo = top + 1
    return np.concatenate(parts)


class _SievedSet(IntegerSet):
    """Elements cached up to `limit`; grows on demand up to MAX_SIEVE."""

    def __init__(self, limit: int):
        self.limit = 0
        self._elems = np.zeros(0, dtype=np.int64)
        self._grow(max(int(limit), 100))

    def _build(self, hi: int) -> np.ndarray:
        raise NotImplementedError

    def _grow(self, hi: int) -> None:
        if hi <= self.limit:
            return
        if hi > MAX_SIEVE:
            raise ResourceLimit(f"{self.spec['kind']} enumeration beyond {MAX_SIEVE} is not supported")
        hi = min(max(hi, 2 * self.limit), MAX_SIEVE)
        self._elems = self._build(hi)
        self.limit = hi

    def _single(self, m: int) -> bool:
        raise NotImplementedError

    def contains(self, m):
        if m < 1:
            return False
        if m <= self.limit:
            i = np.searchsorted(self._elems, m)
            return bool(i < len(self._elems) and self._elems[i] == m)
        return self._single(m)

    def count(self, x):
        if x < 1:
            return 0
        self._grow(x)
        return int(np.searchsorted(self._elems, x, side="right"))

    def nth(self, i):
        if i < 1:
            raise IndexError("rank must be >= 1")
        while len(self._elems) < i:
            self._grow(2 * self.limit)
        return int(self._elems[i - 1])

    def elements_range(self, lo, hi):
        lo = max(lo, 1)
        if hi < lo:
            return np.zeros(0, dtype=np.int64)
        self._grow(hi)
        a = np.searchsorted(self._elems, lo)
        b = np.searchsorted(self._elems, hi, side="right")
        return self._elems[a:b]

    def iter_range(self, lo, hi):
        if hi <= MAX_SIEVE:
            return iter(int(v) for v in self.elements_range(lo, hi))
        if hi - lo > 10**7:
            raise ResourceLimit("window too wide for direct membership testing")
        return iter(m for m in range(max(lo, 1), hi + 1) if self._single(m))

    def contains_array(self, ms):
        ms = np.asarray(ms, dtype=np.int64)
        if ms.size:
            self._grow(int(ms.max()))
        return super().contains_array(ms)

    def count_array(self, xs):
        xs = np.asarray(xs, dtype=np.int64)
        if xs.size:
            self._grow(int(xs.max()))
        return np.searchsorted(self._elems, xs, side="right").astype(np.int64)

    def nth_array(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size:
            self.nth(int(idx.max()))
        return self._elems[idx - 1]


def is_prime(m: int) -> bool:
    # BPSW has no known counterexample and is proven correct below 2^64
    if m < 4:
        return m in (2, 3)
    return bool(gmpy2.is_bpsw_prp(m))


class Primes(_SievedSet):
    def __init__(self, limit: int = 10**6):
        self.spec = {"kind": "primes", "params": {}}
        super().__init__(limit)

    def _build(self, hi):
        return segmented_sieve(hi)

    def _single(self, m):
        return is_prime(m)


def positive_two_squares(n: int) -> bool:
    """Whether n = x^2 + y^2 with x, y >= 1."""
    x = 1
    while 2 * x * x <= n:
        r = n - x * x
        s = isqrt(r)
        if s * s == r and s >= 1:
            return True
        x += 1
    return False


class P1Primes(_SievedSet):
    """Primes p = x^2 + y^2 + 1 with positive integers x, y."""

    def __init__(self, limit: int = 10**6):
        self.spec = {"kind": "p1_primes", "params": {}}
        super().__init__(limit)

    def _build(self, hi):
        mark = np.zeros(hi + 1, dtype=bool)
        x = 1
        while x * x + 2 <= hi:
            ymax = isqrt(hi - 1 - x * x)
            if ymax >= x:
                ys = np.arange(x, ymax + 1, dtype=np.int64)
                mark[x * x + ys * ys + 1] = True
            x += 1
        primes = segmented_sieve(hi)
        return primes[mark[primes]]

    def _single(self, m):
        return is_prime(m) and positive_two_squares(m - 1)


class ExplicitSet(IntegerSet):
    def __init__(self, values, spec: dict | None = None):
        vals = [int(v) for v in values]
        for i, v in enumerate(vals):
            if v < 1:
                raise SetError(f"non-positive value {v}")
            if i and v <= vals[i - 1]:
                raise SetError(f"values not strictly ascending at entry {i + 1} ({vals[i - 1]}, {v})")
        self.values = vals
        self._arr = np.array(vals, dtype=np.int64) if (not vals or vals[-1] < INT64_SAFE) else None
        self.spec = spec or {"kind": "explicit", "params": {"values": [str(v) if v >= 2**53 else v for v in vals]}}

    def contains(self, m):
        i = bisect_left(self.values, m)
        return i < len(self.values) and self.values[i] == m

    def count(self, x):
        return bisect_right(self.values, x)

    def nth(self, i):
        if i < 1 or i > len(self.values):
            raise SetTooSmall(f"explicit set has {len(self.values)} elements, rank {i} requested")
        return self.values[i - 1]

    def iter_range(self, lo, hi):
        a = bisect_left(self.values, lo)
        b = bisect_right(self.values, hi)
        return iter(self.values[a:b])

    def elements_range(self, lo, hi):
        if self._arr is None:
            return super().elements_range(lo, hi)
        a = bisect_left(self.values, lo)
        b = bisect_right(self.values, hi)
        return self._arr[a:b]

    def count_array(self, xs):
        if self._arr is None:
            raise ResourceLimit("explicit set values exceed int64")
        return np.searchsorted(self._arr, np.asarray(xs, dtype=np.int64), side="right").astype(np.int64)

    def nth_array(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size and (idx.min() < 1 or idx.max() > len(self.values)):
            raise SetTooSmall("rank outside explicit set")
        if self._arr is None:
            raise ResourceLimit("explicit set values exceed int64")
        return self._arr[idx - 1]


def read_set_file(path) -> ExplicitSet:
    vals = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        try:
            vals.append(int(line))
        except ValueError:
            raise SetError(f"{path}:{lineno}: not an integer: {line!r}") from None
    try:
        return ExplicitSet(vals, {"kind": "file", "params": {"path": str(path)}})
    except SetError as exc:
        raise SetError(f"{path}: {exc}") from None


def write_set_file(path, values) -> None:
    with open(path, "w") as fh:
        fh.write("".join(f"{int(v)}\n" for v in values))


class Complement(IntegerSet):
    """ℕ minus the base set."""

    def __init__(self, base: IntegerSet):
        self.base = base
        self.spec = {"kind": "complement_in_naturals", "params": {"of": base.spec}}

    def contains(self, m):
        return m >= 1 and not self.base.contains(m)

    def count(self, x):
        return max(x, 0) - self.base.count(x)

    def nth(self, i):
        if i < 1:
            raise IndexError("rank must be >= 1")
        # x -> i + count_base(x) climbs to its least fixed point, which is the answer
        x = i
        for _ in range(64):
            nxt = i + self.base.count(x)
            if nxt == x:
                return x
            x = nxt
        return super().nth(i)

    def iter_range(self, lo, hi):
        return (m for m in range(max(lo, 1), hi + 1) if not self.base.contains(m))

    def elements_range(self, lo, hi):
        lo = max(lo, 1)
        if hi < lo:
            return np.zeros(0, dtype=np.int64)
        ms = np.arange(lo, hi + 1, dtype=np.int64)
        return ms[~self.base.contains_array(ms)]

    def contains_array(self, ms):
        ms = np.asarray(ms, dtype=np.int64)
        return (ms >= 1) & ~self.base.contains_array(ms)

    def count_array(self, xs):
        xs = np.asarray(xs, dtype=np.int64)
        return np.maximum(xs, 0) - self.base.count_array(xs)


class Intersection(IntegerSet):
    """The base set restricted to the interval [lo, hi]."""

    def __init__(self, base: IntegerSet, lo: int, hi: int):
        self.base, self.lo, self.hi = base, int(lo), int(hi)
        self.spec = {"kind": "intersection", "params": {"of": base.spec, "interval": [self.lo, self.hi]}}
        self._offset = base.count(self.lo - 1)

    def contains(self, m):
        return self.lo <= m <= self.hi and self.base.contains(m)

    def count(self, x):
        if x < self.lo:
            return 0
        return self.base.count(min(x, self.hi)) - self._offset

    def nth(self, i):
        v = self.base.nth(self._offset + i)
        if i < 1 or v > self.hi:
            raise SetTooSmall("rank outside the interval")
        return v

    def iter_range(self, lo, hi):
        return self.base.iter_range(max(lo, self.lo), min(hi, self.hi))

    def elements_range(self, lo, hi):
        return self.base.elements_range(max(lo, self.lo), min(hi, self.hi))


class Difference(IntegerSet):
    """Elements of `base` that are not in `minus`."""

    def __init__(self, base: IntegerSet, minus: IntegerSet):
        self.base, self.minus = base, minus
        self.spec = {"kind": "difference", "params": {"of": base.spec, "minus": minus.spec}}

    def contains(self, m):
        return self.base.contains(m) and not self.minus.contains(m)

    def count(self, x):
        return int(len(self.elements_range(1, x)))

    def iter_range(self, lo, hi):
        return (m for m in self.base.iter_range(lo, hi) if not self.minus.contains(m))

    def elements_range(self, lo, hi):
        e = self.base.elements_range(lo, hi)
        return e[~self.minus.contains_array(e)] if e.size else e

    def contains_array(self, ms):
        return self.base.contains_array(ms) & ~self.minus.contains_array(ms)


class ResidueFilter(IntegerSet):
    """Elements of `base` congruent to residue modulo modulus."""

    def __init__(self, base: IntegerSet, modulus: int, residue: int):
        self.base, self.q, self.r = base, modulus, residue % modulus
        self.spec = {"kind": "residue_in", "params": {"of": base.spec, "modulus": modulus, "residue": self.r}}

    def contains(self, m):
        return m % self.q == self.r and self.base.contains(m)

    def count(self, x):
        return int(len(self.elements_range(1, x)))

    def iter_range(self, lo, hi):
        return (m for m in self.base.iter_range(lo, hi) if m % self.q == self.r)

    def elements_range(self, lo, hi):
        e = self.base.elements_range(lo, hi)
        return e[e % self.q == self.r]

    def contains_array(self, ms):
        ms = np.asarray(ms, dtype=np.int64)
        return (ms % self.q == self.r) & self.base.contains_array(ms)


def build_set(spec: dict, N: int | None = None) -> IntegerSet:
    """Construct a set handle from a {kind, params} description.

    N is an enumeration hint (the initial sieve size for sieved kinds).
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SetError("set spec must be an object with a 'kind' field")
    kind = spec["kind"]
    params = spec.get("params") or {}
    limit = int(N) if N else 10**6
    if kind == "naturals":
        return Naturals()
    if kind == "evens":
        return ResidueClass(2, 0)
    if kind == "residue_class":
        return ResidueClass(int(params["modulus"]), int(params["residue"]))
    if kind == "primes":
        return Primes(limit)
    if kind == "p1_primes":
        return P1Primes(limit)
    if kind == "piatetski_shapiro":
        return PiatetskiShapiro(params["alpha"])
    if kind == "square_blocks":
        return SquareBlocks()
    if kind == "file":
        return read_set_file(params["path"])
    if kind == "explicit":
        return ExplicitSet(params["values"])
    if kind == "complement_in_naturals":
        return Complement(build_set(params["of"], N))
    if kind == "intersection":
        lo, hi = params["interval"]
        return Intersection(build_set(params["of"], N), int(lo), int(hi))
    if kind == "difference":
        return Difference(build_set(params["of"], N), build_set(params["minus"], N))
    if kind == "residue_in":
        return ResidueFilter(build_set(params["of"], N), int(params["modulus"]), int(params["residue"]))
    if kind == "thin":
        from .thinning import ThinSubset

        return ThinSubset(build_set(params["of"], N))
    raise SetError(f"unknown set kind {kind!r}")


@dataclass
class PolyDensityParams:
    alpha: Fraction
    beta: Fraction
    C1: Fraction
    C2: Fraction
    window: tuple[int, int]
    argmin: int = 0
    argmax: int = 0
    exact: bool = True
    max_ratio: Fraction | None = None

    @property
    def ratio_ok(self) -> bool:
        return self.max_ratio is None or self.C2 / self.C1 <= self.max_ratio

    def to_json(self) -> dict:
        return {
            "alpha": frac_str(self.alpha),
            "beta": frac_str(self.beta),
            "C1": frac_str(self.C1),
            "C2": frac_str(self.C2),
            "C1Decimal": f"{float(self.C1):.12g}",
            "C2Decimal": f"{float(self.C2):.12g}",
            "fitWindow": list(self.window),
            "argminN": self.argmin,
            "argmaxN": self.argmax,
            "exact": self.exact,
            "ratioOk": self.ratio_ok,
        }


def fit_poly_density(S: IntegerSet, alpha, beta, window, max_ratio=10) -> PolyDensityParams:
    """Tightest (C1, C2) with C1 N^(1/alpha)/(log N)^beta <= count(N) <= C2 (...) on the window."""
    alpha, beta = parse_frac(alpha), parse_frac(beta)
    lo, hi = int(window[0]), int(window[1])
    if lo < 2 or hi < lo:
        raise SetError("fit window must satisfy 2 <= N_lo <= N_hi")
    if alpha < 1 or beta < 0:
        raise SetError("need alpha >= 1 and beta >= 0")
    ns = np.arange(lo, hi + 1, dtype=np.int64)
    counts = S.count_array(ns)
    if counts[-1] == 0:
        raise SetError("set is empty on the fit window")
    if alpha == 1 and beta == 0:
        # exact: the ratios count/N are rationals; shortlist in float, decide exactly
        r = counts / ns
        i_min = _exact_extreme(counts, ns, r, lowest=True)
        i_max = _exact_extreme(counts, ns, r, lowest=False)
        C1 = Fraction(int(counts[i_min]), int(ns[i_min]))
        C2 = Fraction(int(counts[i_max]), int(ns[i_max]))
        exact = True
    else:
        nf = ns.astype(np.float64)
        scale = nf ** (1.0 / float(alpha)) / np.log(nf) ** float(beta)
        r = counts / scale
        i_min, i_max = int(np.argmin(r)), int(np.argmax(r))
        den = 10**12
        C1 = Fraction(math.floor(r[i_min] * (1 - 1e-12) * den), den)
        C2 = Fraction(math.ceil(r[i_max] * (1 + 1e-12) * den), den)
        exact = False
    if C1 <= 0:
        raise SetError("set is empty at the start of the fit window")
    return PolyDensityParams(alpha, beta, C1, C2, (lo, hi), int(ns[i_min]), int(ns[i_max]), exact,
                             Fraction(max_ratio) if max_ratio is not None else None)


def _exact_extreme(num: np.ndarray, den: np.ndarray, approx: np.ndarray, lowest: bool) -> int:
    """Index of the exact min/max of num/den, ties broken by smallest index."""
    target = approx.min() if lowest else approx.max()
    tol = 1e-12 * max(abs(target), 1e-300)
    cand = np.nonzero(np.abs(approx - target) <= tol)[0]
    best = None
    for i in cand:
        val = Fraction(int(num[i]), int(den[i]))
        if best is None or (val < best[0] if lowest else val > best[0]):
            best = (val, int(i))
    return best[1]
