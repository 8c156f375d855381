"""Finite-horizon proxies for upper/lower/Banach/relative density and the convergence exponent.

Every limsup is replaced by a maximum over the tail window [ceil(N/2), N]
(liminf by a minimum); the convention is carried in each report.  Counts are
exact; float64 is only used to shortlist candidates before an exact decision.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from .intsets import IntegerSet, SetError
from .numerics import MP, fmt, frac_str

CHUNK = 1 << 22
TAIL = "tail window [ceil(N/2), N]"


class ContainmentError(SetError):
    pass


@dataclass
class DensityEstimate:
    kind: str
    horizon: int
    value: Any  # Fraction for densities, mpf for the convergence exponent
    convention: str
    profile: list = field(default_factory=list)
    window_spec: list = field(default_factory=list)
    argext: int | None = None

    def __float__(self) -> float:
        return float(self.value)

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "horizon": self.horizon,
            "value": fmt(self.value),
            "convention": self.convention,
        }
        if isinstance(self.value, Fraction):
            out["valueExact"] = frac_str(self.value)
        if self.argext is not None:
            out["attainedAt"] = self.argext
        if self.profile:
            out["profile"] = [[n, round(r, 12)] for n, r in self.profile]
        if self.window_spec:
            out["windowSpec"] = self.window_spec
        return out


def _chunks(S: IntegerSet, lo: int, hi: int):
    """Yield (count(a-1), elements of S in [a, b]) over consecutive value chunks."""
    lo = max(lo, 1)
    before = S.count(lo - 1)
    a = lo
    while a <= hi:
        b = min(a + CHUNK - 1, hi)
        e = S.elements_range(a, b)
        yield before, e
        before += len(e)
        a = b + 1


class _Extreme:
    """Track the exact extreme of num/den over many float-shortlisted candidates."""

    def __init__(self, lowest: bool):
        self.lowest = lowest
        self.best = None  # (Fraction, n)

    def offer(self, num: np.ndarray, den: np.ndarray, ns: np.ndarray) -> None:
        if len(ns) == 0:
            return
        r = num / den
        target = r.min() if self.lowest else r.max()
        cand = np.nonzero(np.abs(r - target) <= 1e-12 * max(abs(target), 1e-300))[0]
        for i in cand:
            self.offer_one(int(num[i]), int(den[i]), int(ns[i]))

    def offer_one(self, num: int, den: int, n: int) -> None:
        if den == 0:
            return
        v = Fraction(num, den)
        if self.best is None:
            self.best = (v, n)
            return
        bv, bn = self.best
        better = v < bv if self.lowest else v > bv
        if better or (v == bv and n < bn):
            self.best = (v, n)


def _profile(S: IntegerSet, lo: int, N: int, points: int = 16, extra: int | None = None, base=None) -> list:
    ns = sorted({lo + (N - lo) * j // points for j in range(points + 1)} | ({extra} if extra else set()))
    out = []
    for n in ns:
        c = S.count(n)
        d = n if base is None else base.count(n)
        if d:
            out.append((n, c / d))
    return out


def upper_density_est(S: IntegerSet, N: int) -> DensityEstimate:
    if N < 2:
        raise ValueError("horizon must be >= 2")
    lo = (N + 1) // 2
    ext = _Extreme(lowest=False)
    ext.offer_one(S.count(lo), lo, lo)
    # between elements the ratio count(n)/n only decreases
    for before, e in _chunks(S, lo, N):
        counts = before + np.arange(1, len(e) + 1, dtype=np.int64)
        ext.offer(counts, e, e)
    value, n = ext.best
    return DensityEstimate("upper", N, value, f"max of count(n)/n over {TAIL}", _profile(S, lo, N, extra=n), argext=n)


def lower_density_est(S: IntegerSet, N: int) -> DensityEstimate:
    if N < 2:
        raise ValueError("horizon must be >= 2")
    lo = (N + 1) // 2
    ext = _Extreme(lowest=True)
    ext.offer_one(S.count(lo), lo, lo)
    ext.offer_one(S.count(N), N, N)
    for before, e in _chunks(S, lo + 1, N):
        # just before each element the ratio is locally minimal
        counts = before + np.arange(0, len(e), dtype=np.int64)
        ext.offer(counts, e - 1, e - 1)
    value, n = ext.best
    return DensityEstimate("lower", N, value, f"min of count(n)/n over {TAIL}", _profile(S, lo, N, extra=n), argext=n)


def _prefix_counts(S: IntegerSet, N: int) -> np.ndarray:
    ind = np.zeros(N + 1, dtype=np.int32)
    for _, e in _chunks(S, 1, N):
        ind[e] = 1
    return np.cumsum(ind, dtype=np.int64)


def banach_density_est(S: IntegerSet, N: int, widths) -> DensityEstimate:
    """Max over windows of w consecutive integers [M, M+w-1] inside [1, N]."""
    widths = sorted({int(w) for w in widths})
    if not widths or widths[0] < 1 or widths[-1] > N:
        raise ValueError("widths must lie in [1, N]")
    cs = _prefix_counts(S, N)
    spec = []
    best_w = None
    for w in widths:
        sums = cs[w:] - cs[:-w]  # sums[M-1] = #(S ∩ [M, M+w-1])
        i = int(np.argmax(sums))
        val = Fraction(int(sums[i]), w)
        spec.append({"width": w, "value": frac_str(val), "offset": i + 1})
        best_w = (val, i + 1)
    upper = upper_density_est(S, N)
    value, at = best_w
    if upper.value > value:
        value, at = upper.value, 1
    conv = f"max over windows [M, M+w-1] of width w = {widths[-1]}, together with prefix windows over {TAIL}"
    return DensityEstimate("banach", N, value, conv, [], spec, at)


def check_containment(A: IntegerSet, S: IntegerSet, N: int) -> None:
    for _, e in _chunks(A, 1, N):
        if len(e) == 0:
            continue
        inside = S.contains_array(e)
        if not inside.all():
            bad = int(e[np.argmin(inside)])
            raise ContainmentError(f"{bad} lies in A but not in S")


def relative_density_est(A: IntegerSet, S: IntegerSet, N: int, check: bool = True) -> DensityEstimate:
    if N < 2:
        raise ValueError("horizon must be >= 2")
    if check:
        check_containment(A, S, N)
    lo = (N + 1) // 2
    if S.count(N) == 0:
        raise SetError("S is empty on the horizon")
    ext = _Extreme(lowest=False)
    ext.offer_one(A.count(lo), S.count(lo), lo)
    for before, e in _chunks(A, lo, N):
        if len(e) == 0:
            continue
        num = before + np.arange(1, len(e) + 1, dtype=np.int64)
        den = S.count_array(e)
        keep = den > 0
        ext.offer(num[keep], den[keep], e[keep])
    value, n = ext.best
    return DensityEstimate("relative", N, value, f"max of count_A(n)/count_S(n) over {TAIL}",
                           _profile(A, lo, N, extra=n, base=S), argext=n)


def convergence_exponent_est(S: IntegerSet, N: int) -> DensityEstimate:
    """max of log i / log a_i over the top half of indices i of S ∩ [1, N]."""
    n = S.count(N)
    if n < 10:
        raise SetError(f"need at least 10 elements up to {N}, found {n}")
    i0 = (n + 1) // 2
    start = S.nth(i0)
    cands: list[tuple[float, int, int]] = []
    best = -1.0
    for before, e in _chunks(S, start, N):
        if len(e) == 0:
            continue
        idx = before + np.arange(1, len(e) + 1, dtype=np.int64)
        r = np.log(idx.astype(np.float64)) / np.log(e.astype(np.float64))
        top = r.max()
        if top >= best - 1e-9:
            best = max(best, top)
            sel = np.nonzero(r >= best - 1e-9)[0]
            cands.extend((float(r[j]), int(idx[j]), int(e[j])) for j in sel[:64])
            cands = [c for c in cands if c[0] >= best - 1e-9]
    value, at = None, None
    for _, i, a in cands:
        v = MP.log(i) / MP.log(a)
        if value is None or v > value:
            value, at = v, a
    profile = []
    for j in range(17):
        i = i0 + (n - i0) * j // 16
        a = S.nth(i)
        profile.append((a, float(MP.log(i) / MP.log(a))))
    return DensityEstimate("convergence_exponent", N, value,
                           "max of log i / log a_i over indices i in [ceil(n/2), n], n = count(N)",
                           profile, argext=at)
