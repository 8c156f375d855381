"""Exhaustive witness search for arithmetic, polynomial and graph progressions,
and location of witness values as digit indices inside spliced words.

All searches order witnesses lexicographically by (common difference, base
point), so the first hit is the answer and results do not depend on the
number of worker threads.
"""
from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .intsets import INT64_SAFE, IntegerSet, PiatetskiShapiro, ResourceLimit
from .numerics import frac_str, parse_frac

MAX_ANCHORS = 10**7


class WitnessError(ValueError):
    pass


@dataclass(frozen=True)
class IntPolynomial:
    """h(X) = c_1 X + c_2 X^2 + ... with integer coefficients (so h(0) = 0)."""

    coeffs: tuple[int, ...]  # coeffs[i] multiplies X^(i+1)

    def __post_init__(self):
        c = tuple(int(x) for x in self.coeffs)
        while c and c[-1] == 0:
            c = c[:-1]
        if not c:
            raise ValueError("polynomial must have degree >= 1")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    def __call__(self, m: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc + c) * m
        return acc

    def __str__(self) -> str:
        parts = []
        for e, c in enumerate(self.coeffs, 1):
            if c == 0:
                continue
            mono = "X" if e == 1 else f"X^{e}"
            coef = "" if abs(c) == 1 else str(abs(c))
            sign = "-" if c < 0 else "+"
            parts.append(f"{sign}{coef}{mono}")
        s = "".join(parts)
        return s[1:] if s.startswith("+") else s

    _TERM = re.compile(r"([+-]?)(\d*)\*?(X(?:\^(\d+))?)?", re.IGNORECASE)

    @classmethod
    def parse(cls, text: str) -> "IntPolynomial":
        """Parse forms like "X", "2X", "X^2-3X"; a constant term is rejected."""
        s = text.replace(" ", "")
        if not s:
            raise ValueError("empty polynomial")
        coeffs: dict[int, int] = {}
        pos = 0
        while pos < len(s):
            mt = cls._TERM.match(s, pos)
            if not mt or mt.end() == pos:
                raise ValueError(f"cannot parse polynomial {text!r} at {s[pos:]!r}")
            sign, num, mono, exp = mt.groups()
            if mono is None:
                raise ValueError(f"polynomial {text!r} has a constant term; h(0) must be 0")
            e = int(exp) if exp else 1
            if e < 1:
                raise ValueError("exponents must be >= 1")
            c = int(num) if num else 1
            coeffs[e] = coeffs.get(e, 0) + (-c if sign == "-" else c)
            pos = mt.end()
        top = max(coeffs)
        return cls(tuple(coeffs.get(e, 0) for e in range(1, top + 1)))

    @classmethod
    def coerce(cls, h) -> "IntPolynomial":
        if isinstance(h, IntPolynomial):
            return h
        if isinstance(h, str):
            return cls.parse(h)
        return cls(tuple(h))


@dataclass
class ProgressionWitness:
    kind: str  # ap | poly | graph
    k: int
    m: int
    length: int
    values: list
    polys: list[IntPolynomial] = field(default_factory=list)
    alpha: Fraction | None = None
    m2: int | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "k": self.k, "m": self.m, "length": self.length}
        if self.kind == "graph":
            out["alphaNum"] = self.alpha.numerator
            out["alphaDen"] = self.alpha.denominator
            out["n1"] = self.k
            out["m1"] = self.m
            out["m2"] = self.m2
            out["values"] = [[int(a), int(b)] for a, b in self.values]
        else:
            out["values"] = [str(v) if abs(v) >= 2**53 else int(v) for v in self.values]
        if self.polys:
            out["polys"] = [str(h) for h in self.polys]
        return out


@dataclass
class DigitWitness:
    witness: ProgressionWitness
    indices: list[int]
    blocks: list[int]
    plan_ref: str

    def __post_init__(self):
        assert all(a < b for a, b in zip(self.indices, self.indices[1:])), "digit indices must increase"

    def to_json(self) -> dict:
        return {"witness": self.witness.to_json(), "indices": self.indices, "blocks": self.blocks,
                "planRef": self.plan_ref}


# --------------------------------------------------------------------------- core scan

def _first_base_point(S: IntegerSet, offsets: Sequence[int], k_lo: int, k_hi: int) -> int | None:
    """Smallest k in [k_lo, k_hi] with k + o in S for every offset o."""
    k_lo = max(k_lo, 1 - min(offsets))
    if k_lo > k_hi:
        return None
    o0 = offsets[0]
    rest = offsets[1:]
    a_lo, a_hi = k_lo + o0, k_hi + o0
    top = k_hi + max(offsets)
    if top < INT64_SAFE:
        n_anchor = S.count_range(a_lo, a_hi)
        if n_anchor > MAX_ANCHORS:
            raise ResourceLimit(f"{n_anchor} anchor values in [{a_lo}, {a_hi}]; tighten the bounds")
        anchors = S.elements_range(a_lo, a_hi)
        if len(anchors) == 0:
            return None
        ok = np.ones(len(anchors), dtype=bool)
        for o in rest:
            idx = np.nonzero(ok)[0]
            if len(idx) == 0:
                return None
            ok[idx] = S.contains_array(anchors[idx] + (o - o0))
        hits = np.nonzero(ok)[0]
        return int(anchors[hits[0]]) - o0 if len(hits) else None
    for a in S.iter_range(a_lo, a_hi):
        if all(S.contains(a + (o - o0)) for o in rest):
            return a - o0
    return None


def _search_m(m_bound: int, probe: Callable[[int], object], threads: int):
    """First m in 1..m_bound whose probe is not None; batches keep the answer deterministic."""
    if threads <= 1:
        for m in range(1, m_bound + 1):
            r = probe(m)
            if r is not None:
                return m, r
        return None
    batch = 4 * threads
    with ThreadPoolExecutor(max_workers=threads) as ex:
        for start in range(1, m_bound + 1, batch):
            ms = list(range(start, min(start + batch, m_bound + 1)))
            for m, r in zip(ms, ex.map(probe, ms)):
                if r is not None:
                    return m, r
    return None


# --------------------------------------------------------------------------- searches

def find_ap(S: IntegerSet, ell: int, k_bound: int, m_bound: int, threads: int = 1) -> ProgressionWitness | None:
    """Smallest (m, k) with k+m, k+2m, ..., k+ell*m all in S; |k| <= k_bound, 1 <= m <= m_bound."""
    if ell < 1:
        raise ValueError("progression length must be >= 1")
    if k_bound < 0 or m_bound < 1:
        raise ValueError("bounds must be positive")

    def probe(m):
        return _first_base_point(S, [j * m for j in range(1, ell + 1)], -k_bound, k_bound)

    hit = _search_m(m_bound, probe, threads)
    if hit is None:
        return None
    m, k = hit
    return ProgressionWitness("ap", k, m, ell, [k + j * m for j in range(1, ell + 1)])


def find_poly_progression(S: IntegerSet, polys: Sequence, k_bound: int, m_bound: int, positive_k: bool = False,
                          threads: int = 1) -> ProgressionWitness | None:
    """Smallest (m, k) with k + h_j(m) in S (all values >= 1) for every polynomial h_j.

    k ranges over [-k_bound, k_bound]; with positive_k it is restricted to k >= 1.
    """
    hs = [IntPolynomial.coerce(h) for h in polys]
    if not hs:
        raise ValueError("need at least one polynomial")
    k_lo = 1 if positive_k else -k_bound

    def probe(m):
        return _first_base_point(S, [h(m) for h in hs], k_lo, k_bound)

    hit = _search_m(m_bound, probe, threads)
    if hit is None:
        return None
    m, k = hit
    return ProgressionWitness("poly", k, m, len(hs), [k + h(m) for h in hs], hs)


def find_graph_ap(alpha, ell: int, n_bound: int) -> ProgressionWitness | None:
    """Smallest (m1, n1) with (n1 + j m1, floor(n1^a) + j m2), j < ell, on the graph of floor(n^a)."""
    alpha = parse_frac(alpha)
    if not 1 < alpha < 2:
        raise ValueError("graph progressions need 1 < alpha < 2")
    if ell < 2:
        raise ValueError("progression length must be >= 2")
    if n_bound < ell:
        return None
    F = PiatetskiShapiro(alpha).nth_array(np.arange(1, n_bound + 1, dtype=np.int64))
    F = np.concatenate([[0], F])  # F[n] = floor(n^alpha)
    for m1 in range(1, (n_bound - 1) // (ell - 1) + 1):
        span = (ell - 1) * m1
        n1 = np.arange(1, n_bound - span + 1)
        d = F[n1 + m1] - F[n1]
        ok = np.ones(len(n1), dtype=bool)
        for j in range(2, ell):
            ok &= F[n1 + j * m1] - F[n1 + (j - 1) * m1] == d
        hits = np.nonzero(ok)[0]
        if len(hits):
            i = int(hits[0])
            a, m2 = int(n1[i]), int(d[i])
            pts = [(a + j * m1, int(F[a + j * m1])) for j in range(ell)]
            return ProgressionWitness("graph", a, m1, ell, pts, alpha=alpha, m2=m2)
    return None


# --------------------------------------------------------------------------- location

def locate_in_digits(plan, witness: ProgressionWitness, diagnostics: list | None = None) -> DigitWitness | None:
    """Digit indices of the witness values inside every spliced word of the plan.

    Block digits sit at the same index in every word of the family, so the
    indices are uniform.  Returns None (with a diagnostic appended) when a
    value lies in the base digit set, which is never inserted, or when the
    values do not appear in increasing index order.
    """
    diag = diagnostics if diagnostics is not None else []
    if witness is None or not witness.values:
        raise WitnessError("empty witness")
    if witness.kind == "graph":
        raise WitnessError("graph witnesses are points in the plane, not digit values")
    where: dict[int, tuple[int, int]] = {}
    for k in range(1, plan.depth + 1):
        for idx, w in zip(plan.block_indices(k), plan.blocks[k - 1]):
            where[w] = (idx, k)
    indices, blocks = [], []
    for v in witness.values:
        if v in where:
            idx, k = where[v]
            indices.append(idx)
            blocks.append(k)
            continue
        if plan.base is not None and plan.base.contains(v):
            diag.append(f"value {v} lies in the base digit set (the thin set), which is never inserted")
            return None
        raise WitnessError(f"value {v} is outside all materialized blocks W_1..W_{plan.depth}")
    if any(b <= a for a, b in zip(indices, indices[1:])):
        diag.append(f"values appear at indices {indices}, not in increasing order")
        return None
    return DigitWitness(witness, indices, blocks, plan.digest())


def witness_from_json(data: dict) -> ProgressionWitness:
    kind = data["kind"]
    if kind == "graph":
        alpha = Fraction(data["alphaNum"], data["alphaDen"])
        pts = [tuple(int(x) for x in p) for p in data["values"]]
        return ProgressionWitness("graph", int(data["n1"]), int(data["m1"]), int(data["length"]), pts,
                                  alpha=alpha, m2=int(data["m2"]))
    polys = [IntPolynomial.parse(h) for h in data.get("polys", [])]
    return ProgressionWitness(kind, int(data["k"]), int(data["m"]), int(data["length"]),
                              [int(v) for v in data["values"]], polys)


__all__ = ["IntPolynomial", "ProgressionWitness", "DigitWitness", "WitnessError", "find_ap",
           "find_poly_progression", "find_graph_ap", "locate_in_digits", "witness_from_json", "frac_str"]
