"""Factorial-block thinning: the index set Q and the thin subset S_* = {a_n : n in Q}.

Q is the union over k >= 2 of {k! + i k : 0 <= i <= k! - 1}.  It has no two
consecutive members, and its counting function is squeezed between
xi/(2 nu(xi)) and 3 xi/nu(xi), where nu(xi) = k for k! <= xi < (k+1)!.
"""
from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .intsets import IntegerSet, SetTooSmall

_FACT = [1, 1]  # _FACT[k] = k!
_QCUM = [0, 0]  # _QCUM[k] = 2! + ... + k! = #(Q ∩ [1, (k+1)!))


def _extend_to(x: int) -> None:
    """Grow the factorial tables until the last factorial exceeds x."""
    while _FACT[-1] <= x:
        k = len(_FACT)
        _FACT.append(_FACT[-1] * k)
        _QCUM.append(_QCUM[-1] + _FACT[k])


def factorial(k: int) -> int:
    while len(_FACT) <= k:
        _extend_to(_FACT[-1])
    return _FACT[k]


# 20! < 2**63 < 21!, so int64 arrays only ever meet blocks k <= 20
_FACT64 = np.array([math.factorial(k) for k in range(1, 21)], dtype=np.int64)


def nu(xi) -> int:
    """k with k! <= xi < (k+1)!, for real xi >= 1."""
    if xi < 1:
        raise ValueError("nu is defined for xi >= 1")
    if not isinstance(xi, int):
        xi = math.floor(Fraction(xi))  # k! <= xi iff k! <= floor(xi)
    _extend_to(xi)
    return bisect_right(_FACT, xi, 1) - 1


def nu_array(xs: np.ndarray) -> np.ndarray:
    return np.searchsorted(_FACT64, xs, side="right")


def in_q(n: int) -> bool:
    if n < 2:
        return False
    k = nu(n)
    return (n - factorial(k)) % k == 0


def in_q_array(ns: np.ndarray) -> np.ndarray:
    ns = np.asarray(ns, dtype=np.int64)
    k = nu_array(ns)
    safe_k = np.maximum(k, 1)
    fk = _FACT64[safe_k - 1]
    return (k >= 2) & ((ns - fk) % safe_k == 0)


def q_count(x: int) -> int:
    """#(Q ∩ [1, x])."""
    if x < 2:
        return 0
    k = nu(x)
    # blocks 2..k-1 are complete
    f = _FACT[k]
    return _QCUM[k - 1] + min(f, (x - f) // k + 1)


def q_count_array(xs: np.ndarray) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.int64)
    total = np.zeros(xs.shape, dtype=np.int64)
    for k in range(2, 21):
        f = math.factorial(k)
        if f > xs.max(initial=0):
            break
        part = np.minimum(f, (xs - f) // k + 1)
        total += np.where(xs >= f, part, 0)
    return total


def q_nth(j: int) -> int:
    """The j-th smallest element of Q (1-based)."""
    if j < 1:
        raise ValueError("rank must be >= 1")
    while _QCUM[-1] < j:
        _extend_to(_FACT[-1])
    k = bisect_left(_QCUM, j, 2)
    return _FACT[k] + (j - _QCUM[k - 1] - 1) * k


def q_nth_array(js: np.ndarray) -> np.ndarray:
    js = np.asarray(js, dtype=np.int64)
    out = np.zeros(js.shape, dtype=np.int64)
    start = 0  # elements of Q in blocks below k
    for k in range(2, 21):
        f = math.factorial(k)
        sel = (js > start) & (js <= start + f)
        out[sel] = f + (js[sel] - start - 1) * k
        start += f
        if start >= js.max(initial=0):
            break
    return out


def q_elements(bound: int) -> np.ndarray:
    """Q ∩ [1, bound] as an ascending int64 array."""
    parts = []
    k = 2
    while factorial(k) <= bound:
        f = factorial(k)
        hi = min(bound, f + (f - 1) * k)
        parts.append(np.arange(f, hi + 1, k, dtype=np.int64))
        k += 1
    if not parts:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(parts)


def sandwich_ok(m: np.ndarray, count: np.ndarray) -> np.ndarray:
    """Whether xi/(2 nu) <= count <= 3 xi/nu holds for every real xi in [m, m+1).

    On [m, m+1) both nu(xi) and the count are constant, so the binding
    cases are xi -> m+1 for the lower bound and xi = m for the upper one.
    """
    k = nu_array(m)
    return (2 * k * count >= m + 1) & (k * count <= 3 * m)


def sandwich_start(bound: int) -> tuple[int, int]:
    """(first xi from which the sandwich holds through bound, number of failures)."""
    m = np.arange(1, bound + 1, dtype=np.int64)
    ok = sandwich_ok(m, q_count_array(m))
    bad = np.nonzero(~ok)[0]
    if len(bad) == 0:
        return 1, 0
    return int(bad[-1]) + 2, len(bad)


class ThinSubset(IntegerSet):
    """S_* = {a_n : n in Q} for an increasing set S = {a_1 < a_2 < ...}."""

    def __init__(self, base: IntegerSet):
        self.base = base
        self.spec = {"kind": "thin", "params": {"of": base.spec}}

    def contains(self, m: int) -> bool:
        return self.base.contains(m) and in_q(self.base.count(m))

    def contains_array(self, ms: np.ndarray) -> np.ndarray:
        return self.base.contains_array(ms) & in_q_array(self.base.count_array(ms))

    def count(self, x: int) -> int:
        return q_count(self.base.count(x))

    def count_array(self, xs: np.ndarray) -> np.ndarray:
        return q_count_array(self.base.count_array(xs))

    def nth(self, i: int) -> int:
        return self.base.nth(q_nth(i))

    def nth_array(self, idx: np.ndarray) -> np.ndarray:
        return self.base.nth_array(q_nth_array(idx))

    def elements_range(self, lo: int, hi: int) -> np.ndarray:
        lo = max(lo, 1)
        if hi < lo:
            return np.zeros(0, dtype=np.int64)
        c_lo = self.base.count(lo - 1)
        c_hi = self.base.count(hi)
        qs = q_elements(c_hi)
        qs = qs[qs > c_lo]
        return self.base.nth_array(qs)


@dataclass
class ThinningResult:
    q_indices: np.ndarray
    values: np.ndarray
    sandwich_from: int
    sandwich_failures_before: int
    bound: int
    nu_table: list[tuple[int, int]] = field(default_factory=list)
    subset: ThinSubset | None = None

    def to_json(self, include_values: bool = True) -> dict:
        out = {
            "bound": self.bound,
            "qCount": int(len(self.q_indices)),
            "sandwichFrom": self.sandwich_from,
            "sandwichConstants": ["1/2", "3"],
            "nuTable": [[x, k] for x, k in self.nu_table],
        }
        if include_values:
            out["qIndices"] = [int(v) for v in self.q_indices]
            out["values"] = [int(v) for v in self.values]
        return out

    def export_set_file(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("".join(f"{int(v)}\n" for v in self.values))


def thin_subset(S: IntegerSet, bound: int) -> ThinningResult:
    """Q ∩ [1, bound], the matching elements of S, and the verified sandwich start."""
    if bound < 1:
        raise ValueError("bound must be >= 1")
    qs = q_elements(bound)
    try:
        values = S.nth_array(qs) if len(qs) else np.zeros(0, dtype=np.int64)
    except (IndexError, SetTooSmall) as exc:
        raise SetTooSmall(f"set has fewer than {bound} enumerable elements") from exc
    if len(qs) > 1:
        assert np.all(np.diff(qs) >= 2), "Q contains consecutive integers"
    if len(values) > 1:
        assert np.all(np.diff(values) >= 2), "thin subset contains consecutive integers"
    start, failures = sandwich_start(bound)
    table = []
    k = 1
    while factorial(k) <= bound:
        table.append((factorial(k), k))
        k += 1
    return ThinningResult(qs, values, start, failures, bound, table, ThinSubset(S))
