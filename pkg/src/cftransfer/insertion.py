"""Digit insertion: planners for the relative and Banach constructions, splice/eliminate,
the inequality ledger behind the almost-Lipschitz elimination map, and an exact
empirical Hölder check.

Conventions: positions M_1 < M_2 < ... with M_0 = 0; block W_k is inserted right
after the M_k-th seed digit.  Windows are inclusive integer ranges (lo, hi).
"""
from __future__ import annotations

import hashlib
import json
import logging
import random
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import cfcore
from .cfcore import DigitWord
from .density import relative_density_est, banach_density_est, upper_density_est
from .intsets import (Complement, Difference, IntegerSet, PolyDensityParams, ResourceLimit, build_set,
                      fit_poly_density, read_set_file, write_set_file)
from .moran import SeedParams, choose_seed_params
from .numerics import (MP, Check, check_le, check_le_exact, fmt, frac_str, isqrt, log, mpf, parse_frac,
                       vacuous)
from .thinning import ThinSubset

logger = logging.getLogger(__name__)

INLINE_BLOCK_LIMIT = 10**4
_SCAN = 1 << 16
_ANALYTIC = {"naturals", "evens", "residue_class", "piatetski_shapiro", "square_blocks", "explicit", "file"}
_SIEVED = {"primes", "p1_primes"}


class PlanningError(RuntimeError):
    pass


class SeedWindowError(ValueError):
    pass


class StructuralError(ValueError):
    def __init__(self, position: int, message: str):
        super().__init__(f"position {position}: {message}")
        self.position = position


def is_analytic(spec: dict) -> bool:
    """Whether every query on the set works for arbitrarily large integers."""
    kind = spec.get("kind")
    if kind in _ANALYTIC:
        return True
    if kind in _SIEVED:
        return False
    params = spec.get("params") or {}
    subs = [v for k, v in params.items() if k in ("of", "minus")]
    return bool(subs) and all(is_analytic(s) for s in subs)


def default_epsilons(k_max: int) -> list[Fraction]:
    return [Fraction(1, k + 1) for k in range(1, k_max + 2)]


def _tri(m: int) -> int:
    return m * (m + 1) // 2


@dataclass
class InsertionPlan:
    kind: str  # relative | banach | toy
    positions: list[int]
    blocks: list[list[int]]
    epsilons: list[Fraction]
    t: int | None = None
    L: Fraction | None = None
    base: IntegerSet | None = None
    insert_source: IntegerSet | None = None
    windows: list[tuple[int, int]] = field(default_factory=list)
    window_pop: list[int] = field(default_factory=list)
    lengths: list[int] = field(default_factory=list)  # N_k for the Banach kind
    seed: SeedParams | None = None
    S_spec: dict | None = None
    A_spec: dict | None = None
    target: Fraction | None = None
    target_star: Fraction | None = None
    window_tol: list[Fraction] = field(default_factory=list)
    alpha: Fraction = Fraction(1)
    ledger: list[list[Check]] = field(default_factory=list)
    stop: str | None = None
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        if len(self.positions) != len(self.blocks):
            raise ValueError("positions and blocks differ in length")
        prev = 0
        for k, m in enumerate(self.positions, 1):
            if m <= prev:
                raise ValueError(f"positions must be strictly increasing and positive (M_{k} = {m})")
            prev = m
        seen = set()
        for k, blk in enumerate(self.blocks, 1):
            if any(b <= a for a, b in zip(blk, blk[1:])):
                raise ValueError(f"block W_{k} is not strictly ascending")
            if seen.intersection(blk):
                raise ValueError(f"block W_{k} repeats digits of an earlier block")
            seen.update(blk)
            if any(w < 1 for w in blk):
                raise ValueError(f"block W_{k} has a non-positive digit")

    @property
    def depth(self) -> int:
        return len(self.positions)

    def eps(self, k: int) -> Fraction:
        return self.epsilons[k - 1]

    def seed_window(self, n: int) -> tuple[int, int]:
        tn = self.t**n
        return tn, (self.L.numerator * tn) // self.L.denominator

    def offset_before(self, k: int) -> int:
        """Number of inserted digits in blocks 1..k-1."""
        return sum(len(b) for b in self.blocks[: k - 1])

    def block_indices(self, k: int) -> list[int]:
        start = self.positions[k - 1] + self.offset_before(k)
        return [start + j for j in range(1, len(self.blocks[k - 1]) + 1)]

    def ratio(self, k: int) -> Fraction | None:
        if k - 1 >= len(self.window_pop) or self.window_pop[k - 1] == 0:
            return None
        return Fraction(len(self.blocks[k - 1]), self.window_pop[k - 1])

    def inserted_set(self) -> list[int]:
        return sorted(w for blk in self.blocks for w in blk)

    @classmethod
    def toy(cls, positions: Sequence[int], blocks: Sequence[Sequence[int]], epsilons=None, t=None, L=None,
            base: IntegerSet | None = None) -> "InsertionPlan":
        eps = [parse_frac(e) for e in epsilons] if epsilons else default_epsilons(len(positions))
        return cls("toy", list(positions), [sorted(int(w) for w in b) for b in blocks], eps, t,
                   Fraction(L) if L is not None else None, base)

    def digest(self) -> str:
        payload = json.dumps({"kind": self.kind, "t": self.t, "L": frac_str(self.L) if self.L else None,
                              "positions": self.positions, "blocks": [[str(w) for w in b] for b in self.blocks]},
                             sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


# --------------------------------------------------------------------------- splice / eliminate

def check_seed_word(plan: InsertionPlan, y: Sequence[int]) -> None:
    if plan.t is None or plan.L is None:
        return
    for i, d in enumerate(y, 1):
        lo, hi = plan.seed_window(i)
        if not lo <= d <= hi:
            raise SeedWindowError(f"digit {d} at position {i} is outside the seed window [{lo}, {hi}]")
        if plan.base is not None and not plan.base.contains(d):
            raise SeedWindowError(f"digit {d} at position {i} is not in the base digit set")


def canonical_seed_word(plan: InsertionPlan, length: int) -> list[int]:
    """The seed word with the smallest admissible base digit in every window."""
    B = plan.base
    out = []
    for n in range(1, length + 1):
        lo, hi = plan.seed_window(n)
        d = B.nth(B.count(lo - 1) + 1)
        if d > hi:
            raise SeedWindowError(f"seed window {n} = [{lo}, {hi}] has no base digit")
        out.append(d)
    return out


def splice(plan: InsertionPlan, y: DigitWord | Sequence[int], check: bool = True) -> DigitWord:
    digits = list(y.digits if isinstance(y, DigitWord) else y)
    if check:
        check_seed_word(plan, digits)
    if not plan.positions or len(digits) < plan.positions[0]:
        warnings.warn("seed word is shorter than M_1; splice leaves it unchanged", stacklevel=2)
        return DigitWord(tuple(digits))
    at = {m: k for k, m in enumerate(plan.positions)}
    out = []
    for i, d in enumerate(digits, 1):
        out.append(d)
        k = at.get(i)
        if k is not None:
            out.extend(plan.blocks[k])
    return DigitWord(tuple(out))


def eliminate(plan: InsertionPlan, x: DigitWord | Sequence[int]) -> DigitWord:
    digits = list(x.digits if isinstance(x, DigitWord) else x)
    y = []
    j = 0
    k = 0
    while j < len(digits):
        y.append(digits[j])
        j += 1
        if k < len(plan.positions) and len(y) == plan.positions[k]:
            for w in plan.blocks[k]:
                if j >= len(digits):
                    raise StructuralError(j + 1, f"word ends inside block W_{k + 1}")
                if digits[j] != w:
                    raise StructuralError(j + 1, f"expected {w} from block W_{k + 1}, found {digits[j]}")
                j += 1
            k += 1
    return DigitWord(tuple(y))


# --------------------------------------------------------------------------- condition checks

def _g_tail_check(name: str, t: int, eps: Fraction, M: int) -> Check:
    """inf over n >= M of log t (n+1)(eps n - 6) >= log 2.

    The left side is a quadratic in n; its infimum over the tail is at M or at
    the integer neighbours of the vertex (6 - eps)/(2 eps) when they exceed M.
    """
    lt = MP.log(t)
    e = mpf(eps)
    vertex = (6 - eps) / (2 * eps)
    cands = {M} | {n for n in (int(vertex), int(vertex) + 1) if n >= M}
    worst = min(cands, key=lambda n: lt * (n + 1) * (e * n - 6))
    val = lt * (worst + 1) * (e * worst - 6)
    c = check_le(name, MP.log(2), val)
    c.extra = {"worstN": worst}
    return c


def _holder_gen(name: str, block: Sequence[int], t: int, eps: Fraction, m_prev: int, m_k: int) -> Check:
    if not block:
        return vacuous(name, "empty block")
    lhs = sum(2 * MP.log(w + 1) for w in block)
    rhs = 6 * mpf(eps) * MP.log(t) * (_tri(m_k) - _tri(m_prev))
    return check_le(name, lhs, rhs)


def relative_conditions(t: int, L: Fraction, eps: Fraction, m_prev: int, M: int) -> list[Check]:
    """Exact-form conditions for one level that depend only on (M_{k-1}, M_k)."""
    s = isqrt(M)
    P = L * t**m_prev
    lt = MP.log(t)
    out = [check_le_exact("window-gap", P + s, Fraction(t**M), strict=True)]
    lhs = 2 * s * log(P + s + 1)
    out.append(check_le("window-cost", lhs, 2 * mpf(eps) * M * M * lt))
    out.append(check_le_exact("tail-sum", M * M, 3 * (_tri(M) - _tri(m_prev))))
    out.append(_g_tail_check("tail-growth", t, eps, M))
    return out


def _relative_level_checks(plan: InsertionPlan, k: int) -> list[Check]:
    t, L = plan.t, plan.L
    eps = plan.eps(k)
    m_prev = plan.positions[k - 2] if k >= 2 else 0
    M = plan.positions[k - 1]
    block = plan.blocks[k - 1]
    checks = relative_conditions(t, L, eps, m_prev, M)
    checks.append(_holder_gen("block-cost", block, t, eps, m_prev, M))
    checks.append(_g_tail_check("holder-tail", t, eps, M))
    checks.extend(_structure_checks(plan, k))
    s = isqrt(M)
    S = build_set(plan.S_spec) if plan.S_spec else None
    tol = plan.window_tol[k - 1] if k - 1 < len(plan.window_tol) else eps
    # finite proxies of the limit conditions
    if S is not None and plan.target_star is not None and k >= 2:
        A_minus = Difference(build_set(plan.A_spec), plan.base)
        num, den = A_minus.count(s), S.count(s)
        if den:
            val = abs(Fraction(num, den) - plan.target_star)
            checks.append(check_le_exact("subset-density proxy", val, eps, note=f"{num}/{den} vs {fmt(plan.target_star, 6)}"))
    log_mk = MP.log(t) * m_prev - MP.log(max(s, 1)) / mpf(plan.alpha)
    checks.append(check_le("window-growth proxy (log)", log_mk, MP.log(mpf(eps)), required=False,
                           note="asymptotic; reported only"))
    lo, hi = plan.windows[k - 1]
    if hi >= lo:
        checks.append(check_le_exact("window-ratio proxy", Fraction(lo, hi), eps, required=False,
                                     note="asymptotic; reported only"))
    r = plan.ratio(k)
    if k >= 2 and r is not None and plan.target is not None:
        checks.append(check_le_exact("window density proxy", abs(r - plan.target), tol,
                                     note=f"#W/#(S∩I) = {frac_str(r)}"))
    return checks


def _banach_level_checks(plan: InsertionPlan, k: int) -> list[Check]:
    t = plan.t
    eps = plan.eps(k)
    m_prev = plan.positions[k - 2] if k >= 2 else 0
    n_prev = plan.lengths[k - 2] if k >= 2 else 0
    M = plan.positions[k - 1]
    lt = MP.log(t)
    rhs = 6 * mpf(eps) * lt * (_tri(M) - _tri(m_prev))
    checks = []
    if n_prev == 0:
        checks.append(vacuous("previous-window", "N_{k-1} = 0"))
    else:
        checks.append(check_le("previous-window", 2 * n_prev * MP.log(m_prev + n_prev + 1), rhs))
    checks.append(_g_tail_check("holder-tail at M_k", t, eps, M))
    checks.append(_holder_gen("block-cost", plan.blocks[k - 1], t, eps, m_prev, M))
    checks.append(_g_tail_check("holder-tail", t, eps, M))
    if k < len(plan.positions):
        checks.append(check_le_exact("windows disjoint", M + plan.lengths[k - 1], plan.positions[k], strict=True))
    checks.extend(_structure_checks(plan, k))
    r = plan.ratio(k)
    tol = plan.window_tol[k - 1] if k - 1 < len(plan.window_tol) else eps
    if r is not None and plan.target is not None:
        checks.append(check_le_exact("window density proxy", abs(r - plan.target), tol,
                                     note=f"#W/#(N∩I) = {frac_str(r)}"))
    return checks


def _toy_level_checks(plan: InsertionPlan, k: int) -> list[Check]:
    checks = _structure_checks(plan, k)
    if plan.t is None:
        return checks
    m_prev = plan.positions[k - 2] if k >= 2 else 0
    M = plan.positions[k - 1]
    checks.append(_holder_gen("block-cost", plan.blocks[k - 1], plan.t, plan.eps(k), m_prev, M))
    if plan.blocks[k - 1]:
        checks.append(_g_tail_check("holder-tail", plan.t, plan.eps(k), M))
    else:
        checks.append(vacuous("holder-tail", "empty block"))
    return checks


def _structure_checks(plan: InsertionPlan, k: int) -> list[Check]:
    block = plan.blocks[k - 1]
    out = []
    if plan.windows:
        lo, hi = plan.windows[k - 1]
        inside = all(lo <= w <= hi for w in block)
        out.append(Check("W_k inside I_k", "pass" if inside else "fail", exact=True))
        if k < len(plan.windows):
            nlo, nhi = plan.windows[k]
            if hi >= lo and nhi >= nlo:
                out.append(check_le_exact("I_k below I_(k+1)", hi, nlo, strict=True))
    if plan.base is not None:
        clash = [w for w in block if plan.base.contains(w)]
        out.append(Check("W_k disjoint from base digits", "fail" if clash else "pass", exact=True,
                         note=f"colliding {clash[:5]}" if clash else ""))
    return out


@dataclass
class VerificationLedger:
    per_level: list[list[Check]]

    @property
    def passed(self) -> bool:
        return all(c.passed for lvl in self.per_level for c in lvl if c.required)

    def level_passed(self, k: int) -> bool:
        return all(c.passed for c in self.per_level[k - 1] if c.required)

    def get(self, k: int, name: str) -> Check:
        for c in self.per_level[k - 1]:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "levels": [{"k": k, "passed": self.level_passed(k), "checks": [c.to_json() for c in lvl]}
                       for k, lvl in enumerate(self.per_level, 1)],
        }


def verify_plan(plan: InsertionPlan) -> VerificationLedger:
    fn = {"relative": _relative_level_checks, "banach": _banach_level_checks, "toy": _toy_level_checks}[plan.kind]
    per = [fn(plan, k) for k in range(1, plan.depth + 1)]
    plan.ledger = per
    return VerificationLedger(per)


# --------------------------------------------------------------------------- planners

def _materialize(source: IntegerSet, base: IntegerSet, lo: int, hi: int) -> list[int]:
    return [m for m in range(lo, hi + 1) if source.contains(m) and not base.contains(m)]


def _population(S: IntegerSet, lo: int, hi: int, analytic: bool) -> int:
    if hi < lo:
        return 0
    if analytic:
        return S.count_range(lo, hi)
    return sum(1 for m in range(lo, hi + 1) if S.contains(m))


def _first_true(pred, lo: int, cap: int) -> int | None:
    """Smallest n in [lo, cap] with pred(n), assuming pred is monotone: doubling probe then bisection."""
    if pred(lo):
        return lo
    step = 1
    prev = lo
    while True:
        hi = min(lo + step, cap)
        if pred(hi):
            break
        if hi == cap:
            return None
        prev = hi
        step *= 2
    a, b = prev + 1, hi
    while a < b:
        mid = (a + b) // 2
        if pred(mid):
            b = mid
        else:
            a = mid + 1
    return a


def plan_relative(S: IntegerSet, A: IntegerSet, fit: PolyDensityParams, epsilons=None, k_max: int = 3,
                  horizon: int = 10**6, window_tol=None, max_position: int = 10**7, max_window: int = 10**5,
                  seed: SeedParams | None = None, seed_horizon: int = 60) -> InsertionPlan:
    """Greedy-minimal positions M_k for inserting (A minus S_*) ∩ I_k after the M_k-th digit."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    eps = [parse_frac(e) for e in epsilons] if epsilons else default_epsilons(k_max)
    if len(eps) < k_max:
        raise ValueError("need one epsilon per level")
    if any(b >= a for a, b in zip(eps, eps[1:])) or eps[-1] <= 0:
        raise ValueError("epsilons must be positive and strictly decreasing")
    if window_tol is None:
        wtol = list(eps)
    elif isinstance(window_tol, (list, tuple)):
        wtol = [parse_frac(w) for w in window_tol]
    else:
        wtol = [parse_frac(window_tol)] * len(eps)

    target = relative_density_est(A, S, horizon)
    if target.value == 0:
        raise PlanningError("relative density of A in S is zero on the horizon")
    B = ThinSubset(S)
    params = seed or choose_seed_params(fit, S, n_max=seed_horizon)
    t, L = params.t, params.L
    A_minus = Difference(A, B)
    target_star = relative_density_est(A_minus, S, horizon, check=False).value
    analytic = is_analytic(S.spec) and is_analytic(A.spec)

    plan = InsertionPlan("relative", [], [], eps, t, L, B, A_minus, seed=params, S_spec=S.spec, A_spec=A.spec,
                         target=target.value, target_star=target_star, window_tol=wtol, alpha=fit.alpha)
    m_prev = 0
    for k in range(1, k_max + 1):
        P = L * t**m_prev
        if not analytic and P >= 2**64:
            plan.stop = f"level {k}: window start {fmt(P, 6)} exceeds 64 bits for a sieved set"
            break
        e = eps[k - 1]

        def exact_ok(M, e=e, m_prev=m_prev):
            return all(c.passed for c in relative_conditions(t, L, e, m_prev, M))

        M = _first_true(exact_ok, max(m_prev + 1, 2), max_position)
        if M is None:
            if k == 1:
                raise PlanningError(f"no admissible M_1 below {max_position}")
            plan.stop = f"level {k}: no admissible M_k below {max_position}"
            break
        chosen = None
        while M <= max_position:
            s = isqrt(M)
            if s > max_window:
                break
            lo = -((-(P + 1).numerator) // P.denominator)  # ceil(P + 1)
            hi = (P.numerator + s * P.denominator) // P.denominator  # floor(P + s)
            try:
                block = _materialize(A_minus, B, lo, hi)
                pop = _population(S, lo, hi, analytic)
            except ResourceLimit as exc:
                plan.stop = f"level {k}: {exc}"
                break
            ok = exact_ok(M) and _holder_gen("g", block, t, e, m_prev, M).passed
            if ok and k >= 2:
                num, den = A_minus.count(s), S.count(s)
                if den and abs(Fraction(num, den) - target_star) > e:
                    ok = False
                if ok and pop and abs(Fraction(len(block), pop) - target.value) > wtol[k - 1]:
                    ok = False
            if ok:
                chosen = (M, (lo, hi), block, pop)
                break
            M = max(M + 1, (s + 1) ** 2)
        if chosen is None:
            if plan.stop is None:
                plan.stop = f"level {k}: no admissible M_k below {max_position}"
            if k == 1:
                raise PlanningError(plan.stop)
            break
        M, win, block, pop = chosen
        if not block:
            plan.notes.append(f"W_{k} is empty")
        plan.positions.append(M)
        plan.windows.append(win)
        plan.blocks.append(block)
        plan.window_pop.append(pop)
        m_prev = M
    if plan.stop:
        logger.info("relative plan stopped: %s", plan.stop)
    return plan


def plan_banach(S: IntegerSet, epsilons=None, k_max: int = 3, horizon: int = 10**6, widths=None,
                window_tol=None, fit_window=(10, 10**4), max_position: int = 10**7,
                seed_horizon: int = 60) -> InsertionPlan:
    """Windows I_k = [M_{k-1}, M_{k-1}+N_{k-1}] inside S of near-maximal density, W_k = S ∩ I_k."""
    eps = [parse_frac(e) for e in epsilons] if epsilons else default_epsilons(k_max + 1)
    if len(eps) < k_max + 1:
        eps = eps + [eps[-1] / (i + 2) for i in range(k_max + 1 - len(eps))]
    widths = widths or [w for w in (8, 16, 32, 64) if w <= horizon]
    dB = banach_density_est(S, horizon, widths)
    if dB.value == 0:
        raise PlanningError("Banach density estimate is zero on the horizon")
    notes = []
    upper = upper_density_est(S, horizon).value
    if upper > 0 and abs(dB.value - upper) <= Fraction(1, 20):
        notes.append("upper density is comparable to the Banach density; plan_relative is the intended route")
    if window_tol is None:
        wtol = list(eps[1:]) + [eps[-1]]
    elif isinstance(window_tol, (list, tuple)):
        wtol = [parse_frac(w) for w in window_tol]
    else:
        wtol = [parse_frac(window_tol)] * (k_max + 1)

    comp = Complement(S)
    fit = fit_poly_density(comp, 1, 0, fit_window)
    params = choose_seed_params(fit, comp, n_max=seed_horizon)
    B = ThinSubset(comp)
    t = params.t
    plan = InsertionPlan("banach", [], [], eps, t, params.L, B, S, seed=params, S_spec=S.spec,
                         target=dB.value, window_tol=wtol, notes=notes)
    m_prev, n_prev = 0, 0
    lt = MP.log(t)
    for k in range(1, k_max + 1):
        e = eps[k - 1]
        window = (m_prev, m_prev + n_prev)
        block = [m for m in range(max(window[0], 1), window[1] + 1) if S.contains(m)]
        pop = window[1] - max(window[0], 1) + 1 if window[1] >= 1 else 0

        def exact_ok(M, e=e, m_prev=m_prev, n_prev=n_prev, block=block):
            rhs = 6 * mpf(e) * lt * (_tri(M) - _tri(m_prev))
            if n_prev and not check_le("previous-window", 2 * n_prev * MP.log(m_prev + n_prev + 1), rhs).passed:
                return False
            return _g_tail_check("holder-tail at M_k", t, e, M).passed and _holder_gen("g", block, t, e, m_prev, M).passed

        start = max(m_prev + n_prev + 1, 1)
        M = _first_true(exact_ok, start, max_position)
        if M is None:
            if k == 1:
                raise PlanningError(f"no admissible M_1 below {max_position}")
            plan.stop = f"level {k}: no admissible M_k below {max_position}"
            break
        N = n_prev + 1
        tol = wtol[k] if k < len(wtol) else wtol[-1]
        found = None
        # exact_ok is monotone in M, so only the window density needs scanning
        lo_gap, hi_gap = dB.value - tol, dB.value + tol
        while M <= max_position and found is None:
            ms = np.arange(M, min(M + _SCAN, max_position + 1), dtype=np.int64)
            got = S.count_array(ms + N) - S.count_array(ms - 1)
            good = (got * lo_gap.denominator >= lo_gap.numerator * (N + 1)) & \
                   (got * hi_gap.denominator <= hi_gap.numerator * (N + 1))
            hits = np.nonzero(good)[0]
            if len(hits):
                found = int(ms[hits[0]])
            M = int(ms[-1]) + 1
        if found is None:
            plan.stop = f"level {k}: no window of width {N + 1} below {max_position}"
            if k == 1:
                raise PlanningError(plan.stop)
            break
        plan.positions.append(found)
        plan.lengths.append(N)
        plan.windows.append(window)
        plan.blocks.append(block)
        plan.window_pop.append(pop)
        m_prev, n_prev = found, N
    return plan


# --------------------------------------------------------------------------- empirical Hölder

@dataclass
class HolderReport:
    k: int
    log_D: object
    log_C: object
    gamma: Fraction
    samples: int
    worst_margin: object
    pairs: list
    n_range: tuple[int, int]

    @property
    def passed(self) -> bool:
        return self.worst_margin >= 0

    def to_json(self, max_pairs: int = 20) -> dict:
        return {
            "k": self.k,
            "logD": fmt(self.log_D),
            "logC": fmt(self.log_C),
            "gamma": frac_str(self.gamma),
            "samples": self.samples,
            "differingPositions": list(self.n_range),
            "worstMargin": fmt(self.worst_margin),
            "passed": self.passed,
            "pairs": self.pairs[:max_pairs],
        }


def holder_constant(plan: InsertionPlan, k: int):
    """(log D_k, log C_k, gamma) with C_k = D_k^(-gamma), gamma = 1/(1 + 4 eps_k)."""
    lt = MP.log(plan.t)
    log_D = MP.mpf(0)
    prev = 0
    for j in range(1, k + 1):
        M = plan.positions[j - 1]
        log_D -= 6 * mpf(plan.eps(j)) * lt * (_tri(M) - _tri(prev))
        prev = M
    gamma = 1 / (1 + 4 * plan.eps(k))
    return log_D, -mpf(gamma) * log_D, gamma


def empirical_holder(plan: InsertionPlan, k: int, samples: int = 1000, seed: int = 0, span: int | None = None,
                     threads: int = 1) -> HolderReport:
    """Check |f(x1) - f(x2)| <= C_k |x1 - x2|^gamma on random cylinder pairs, exactly.

    Seed words share a prefix of length n-1 and differ at position n >= M_k.
    For each pair, the gap between the spliced x-cylinders bounds |x1 - x2|
    from below and the hull of the seed y-cylinders bounds |y1 - y2| above.
    """
    if k < 1 or k > plan.depth:
        raise ValueError(f"level {k} is outside the plan (depth {plan.depth})")
    if plan.base is None or plan.t is None:
        raise ValueError("empirical Hölder needs a plan with seed windows")
    Mk = plan.positions[k - 1]
    if span is None:
        span = 64
    n_hi = Mk + span
    if k < plan.depth:
        n_hi = min(n_hi, plan.positions[k] - 1)
    log_D, log_C, gamma = holder_constant(plan, k)
    g = mpf(gamma)
    B = plan.base

    ranks: dict[int, tuple[int, int]] = {}

    def rank_range(i):
        if i not in ranks:
            lo, hi = plan.seed_window(i)
            ranks[i] = (B.count(lo - 1) + 1, B.count(hi))
        return ranks[i]

    for i in range(1, n_hi + 1):
        a, b = rank_range(i)
        if b - a + 1 < (2 if i >= Mk else 1):
            raise PlanningError(f"sampling impossible: seed window {i} has {b - a + 1} base digits")

    rng = random.Random(seed)
    jobs = []
    for _ in range(samples):
        n = rng.randint(Mk, n_hi)
        prefix_ranks = [rng.randint(*rank_range(i)) for i in range(1, n)]
        a, b = rank_range(n)
        r1 = rng.randint(a, b)
        r2 = rng.randint(a, b - 1)
        if r2 >= r1:
            r2 += 1
        jobs.append((n, prefix_ranks, r1, r2))

    at = {m: j for j, m in enumerate(plan.positions)}

    def run(job):
        n, prefix_ranks, r1, r2 = job
        prefix = [B.nth(r) for r in prefix_ranks]
        d1, d2 = B.nth(r1), B.nth(r2)
        y_state = cfcore.cf_state(prefix)
        x_digits = []
        for i, d in enumerate(prefix, 1):
            x_digits.append(d)
            if i in at:
                x_digits.extend(plan.blocks[at[i]])
        x_state = cfcore.cf_state(x_digits)
        tail = plan.blocks[at[n]] if n in at else []
        log_gx, _ = cfcore.sibling_log_gap_hull(x_state, cfcore.tail_interval(d1, tail),
                                                cfcore.tail_interval(d2, tail))
        _, log_hy = cfcore.sibling_log_gap_hull(y_state, cfcore.tail_interval(d1), cfcore.tail_interval(d2))
        margin = MP.ninf if log_gx is None else log_C + g * log_gx - log_hy
        return n, d1, d2, log_gx, log_hy, margin

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run, jobs))
    else:
        results = [run(j) for j in jobs]

    worst = min(r[5] for r in results)
    order = sorted(range(len(results)), key=lambda i: results[i][5])
    pairs = []
    for i in order[:20]:
        n, d1, d2, lgx, lhy, margin = results[i]
        pairs.append({"n": n, "digits": [str(d1), str(d2)], "logGapX": fmt(lgx) if lgx is not None else "-inf",
                      "logHullY": fmt(lhy), "margin": fmt(margin)})
    return HolderReport(k, log_D, log_C, gamma, samples, worst, pairs, (Mk, n_hi))


def spliced_mass_estimate(plan: InsertionPlan, seed_levels) -> object:
    """Mass-lemma levels of the spliced family: forced single children across blocks.

    Each inserted digit w shrinks the gap bound by (w+1)^-2 and adds a level
    with one child; seed levels keep their child counts.
    """
    from .moran import MoranLevel, MoranLevels, mass_dimension_estimate

    at = {m: j for j, m in enumerate(plan.positions)}
    out = []
    extra = MP.mpf(0)
    n = 0
    for lv in seed_levels.levels:
        n += 1
        out.append(MoranLevel(n, lv.r, lv.log_delta + extra))
        if lv.n in at:
            for w in plan.blocks[at[lv.n]]:
                extra -= 2 * MP.log(w + 1)
                n += 1
                out.append(MoranLevel(n, 1, lv.log_delta + extra))
    return mass_dimension_estimate(MoranLevels(out[: seed_levels.depth]))


# --------------------------------------------------------------------------- serialization

def plan_to_json(plan: InsertionPlan, out_dir=None, ledger: VerificationLedger | None = None) -> dict:
    blocks = []
    for k, blk in enumerate(plan.blocks, 1):
        if len(blk) <= INLINE_BLOCK_LIMIT or out_dir is None:
            blocks.append([str(w) for w in blk])
        else:
            name = f"W_{k}.txt"
            write_set_file(Path(out_dir) / name, blk)
            blocks.append({"file": name, "size": len(blk)})
    out = {
        "kind": plan.kind,
        "digest": plan.digest(),
        "t": plan.t,
        "L": frac_str(plan.L) if plan.L is not None else None,
        "epsilons": [frac_str(e) for e in plan.epsilons[: max(plan.depth, 1)]],
        "positions": plan.positions,
        "windows": [[str(a), str(b)] for a, b in plan.windows],
        "blocks": blocks,
        "blockSizes": [len(b) for b in plan.blocks],
        "windowPopulation": [str(p) for p in plan.window_pop],
        "ratios": [frac_str(r) if (r := plan.ratio(k)) is not None else None for k in range(1, plan.depth + 1)],
        "base": plan.base.spec if plan.base is not None else None,
        "S": plan.S_spec,
        "A": plan.A_spec,
        "stop": plan.stop,
        "notes": plan.notes,
    }
    if plan.kind == "banach":
        out["lengths"] = plan.lengths
    if plan.target is not None:
        out["target"] = frac_str(plan.target)
    if plan.target_star is not None:
        out["targetWithoutThin"] = frac_str(plan.target_star)
    if plan.window_tol:
        out["windowTolerance"] = [frac_str(w) for w in plan.window_tol[: plan.depth]]
    if plan.seed is not None:
        out["seed"] = plan.seed.to_json()
    if ledger is not None:
        out["verification"] = ledger.to_json()
    return out


def plan_from_json(data: dict, base_dir=".") -> InsertionPlan:
    blocks = []
    for blk in data["blocks"]:
        if isinstance(blk, dict):
            blocks.append(read_set_file(Path(base_dir) / blk["file"]).values)
        else:
            blocks.append([int(w) for w in blk])
    base = build_set(data["base"]) if data.get("base") else None
    plan = InsertionPlan(
        data.get("kind", "toy"), [int(m) for m in data["positions"]], blocks,
        [parse_frac(e) for e in data.get("epsilons") or default_epsilons(len(blocks))],
        data.get("t"), parse_frac(data["L"]) if data.get("L") else None, base,
        windows=[(int(a), int(b)) for a, b in data.get("windows", [])],
        window_pop=[int(p) for p in data.get("windowPopulation", [])],
        lengths=data.get("lengths", []),
        S_spec=data.get("S"), A_spec=data.get("A"),
        target=parse_frac(data["target"]) if data.get("target") else None,
        target_star=parse_frac(data["targetWithoutThin"]) if data.get("targetWithoutThin") else None,
        window_tol=[parse_frac(w) for w in data.get("windowTolerance", [])],
    )
    if data.get("seed"):
        plan.alpha = parse_frac(data["seed"]["alpha"])
    if data.get("A") and data.get("base"):
        plan.insert_source = Difference(build_set(data["A"]), base)
    return plan
