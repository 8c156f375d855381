"""Seed sets R_{t,L}(K): parameter choice, level enumeration, and mass-lemma dimension estimates."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from .density import DensityEstimate, convergence_exponent_est
from .intsets import IntegerSet, PolyDensityParams
from .numerics import MP, ceil_root_frac, check_le, check_le_exact, fmt, frac_str, log, mpf
from .thinning import ThinSubset, nu

LAMBDA_GRID = (Fraction(101, 100), Fraction(11, 10), Fraction(5, 4), Fraction(3, 2), Fraction(2))


class ParameterSearchError(RuntimeError):
    pass


class MoranError(RuntimeError):
    pass


@dataclass
class SeedParams:
    L: Fraction
    t: int
    alpha: Fraction
    beta: Fraction
    C1: Fraction
    C2: Fraction
    lam: Fraction
    rho: Fraction
    horizon: int
    seed_eq2_from: int | None = None
    notes: list = field(default_factory=list)

    def window(self, n: int) -> tuple[int, int]:
        tn = self.t**n
        return tn, (self.L.numerator * tn) // self.L.denominator

    def to_json(self) -> dict:
        return {
            "L": frac_str(self.L),
            "LDecimal": fmt(self.L),
            "t": self.t,
            "alpha": frac_str(self.alpha),
            "beta": frac_str(self.beta),
            "C1": frac_str(self.C1),
            "C2": frac_str(self.C2),
            "lambda": frac_str(self.lam),
            "rho": frac_str(self.rho),
            "checkedUpTo": self.horizon,
            "seedEq2From": self.seed_eq2_from,
            "notes": self.notes,
        }


def seed_L(fit: PolyDensityParams) -> Fraction:
    """(12 C2/C1 2^beta)^alpha, rounded up to a rational when alpha is not an integer."""
    if fit.beta.denominator != 1:
        # 2^beta irrational: bound it above by a rational first
        two_beta = ceil_root_frac(Fraction(2), fit.beta.numerator, fit.beta.denominator)
    else:
        two_beta = Fraction(2) ** int(fit.beta)
    base = 12 * fit.C2 / fit.C1 * two_beta
    return ceil_root_frac(base, fit.alpha.numerator, fit.alpha.denominator)


def _bracket_checks(fit: PolyDensityParams, S: IntegerSet, L: Fraction, t: int, n_max: int):
    """Yield (n, check_lo, check_hi) for the seed bracket on count(t^n)/count(L t^n)."""
    exact = fit.alpha == 1 and fit.beta.denominator == 1
    spread = fit.C2 / fit.C1 * Fraction(2) ** int(fit.beta) if exact else None
    log_spread = log(fit.C2) - log(fit.C1) + fit.beta * MP.log(2)
    log_Lpow = log(L) / mpf(fit.alpha)
    for n in range(1, n_max + 1):
        tn = t**n
        c_lo = S.count(tn)
        c_hi = S.count((L.numerator * tn) // L.denominator)
        if c_lo == 0 or c_hi == 0:
            yield n, None, None
            continue
        if exact:
            ratio = Fraction(c_lo, c_hi)
            mid = 1 / L
            yield n, check_le_exact("seed-ratio lower", mid / spread, ratio), check_le_exact("seed-ratio upper", ratio, mid * spread)
        else:
            lr = log(c_lo) - log(c_hi)
            yield n, check_le("seed-ratio lower", -log_spread - log_Lpow, lr), check_le("seed-ratio upper", lr, log_spread - log_Lpow)


def choose_seed_params(fit: PolyDensityParams, S: IntegerSet, n_max: int = 60, t_ceiling: int = 10**4,
                       lam_grid: Sequence[Fraction] = LAMBDA_GRID) -> SeedParams:
    L = seed_L(fit)
    t = int(max(L, Fraction(3))) + 1
    failures = []
    while t <= t_ceiling:
        reason = None
        if nu(max(S.count(t), 1)) < 2:
            reason = f"nu(count(t)) < 2"
        else:
            for n, c1, c2 in _bracket_checks(fit, S, L, t, n_max):
                if c1 is None:
                    reason = f"empty count at n={n}"
                    break
                if not (c1.passed and c2.passed):
                    reason = f"bracket fails at n={n}"
                    break
        if reason is None:
            break
        if len(failures) < 20:
            failures.append(f"t={t}: {reason}")
        t += 1
    else:
        raise ParameterSearchError(f"no admissible t up to {t_ceiling}; first failures: {failures}")

    lt = MP.log(t)
    lam = None
    for cand in lam_grid:
        ok = all(
            check_le("lambda", MP.log(nu(t**n)), mpf(cand) * MP.log(n * lt)).passed for n in range(1, n_max + 1)
        )
        if ok:
            lam = Fraction(cand)
            break
    if lam is None:
        raise ParameterSearchError(f"no lambda on the grid {[str(x) for x in lam_grid]} works for t={t}")

    # measured start of the range where 0 <= nu(count(L t^n)) - nu(count(t^n)) <= 1
    eq2_from = None
    for n in range(1, n_max + 1):
        lo, hi = t**n, (L.numerator * t**n) // L.denominator
        c_lo, c_hi = S.count(lo), S.count(hi)
        good = c_lo >= 1 and 0 <= nu(c_hi) - nu(c_lo) <= 1
        if good and eq2_from is None:
            eq2_from = n
        elif not good:
            eq2_from = None
    notes = failures[:5]
    return SeedParams(L, t, fit.alpha, fit.beta, fit.C1, fit.C2, lam, fit.beta + lam, n_max, eq2_from, notes)


@dataclass
class MoranLevel:
    n: int
    r: int
    log_delta: Any
    window: tuple[int, int] | None = None
    delta: tuple[int, int] | None = None  # exact (numerator, denominator), not necessarily reduced
    low_estimate_ok: bool | None = None

    def to_json(self) -> dict:
        out = {"n": self.n, "childCount": str(self.r), "deltaLog": fmt(self.log_delta)}
        if self.window is not None:
            out["window"] = [str(self.window[0]), str(self.window[1])]
        if self.delta is not None:
            s = f"{self.delta[0]}/{self.delta[1]}"
            out["delta"] = s if len(s) <= 4096 else f"(1/2)*prod_(i=1..{self.n}) (L t^(i+1))^-2"
        if self.low_estimate_ok is not None:
            out["lowEstimateOk"] = self.low_estimate_ok
        return out


@dataclass
class MoranLevels:
    levels: list[MoranLevel]
    low_estimate_from: int | None = None
    notes: list = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.levels)

    @classmethod
    def from_sequences(cls, rs: Sequence[int], deltas: Sequence) -> "MoranLevels":
        levels = []
        for n, (r, d) in enumerate(zip(rs, deltas), 1):
            d = Fraction(d)
            levels.append(MoranLevel(n, int(r), log(d), None, (d.numerator, d.denominator)))
        return cls(levels)

    @classmethod
    def geometric(cls, r: int, base: Fraction, depth: int) -> "MoranLevels":
        """Constant child count r and gap bound delta_n = base^n."""
        lb = log(Fraction(base))
        return cls([MoranLevel(n, r, n * lb) for n in range(1, depth + 1)])

    def to_json(self, max_levels: int | None = None) -> dict:
        lv = self.levels if max_levels is None else self.levels[:max_levels]
        return {
            "depth": self.depth,
            "lowEstimateFrom": self.low_estimate_from,
            "perLevel": [x.to_json() for x in lv],
            "notes": self.notes,
        }


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def seed_moran_levels(K: IntegerSet, params: SeedParams, depth: int, threads: int = 1) -> MoranLevels:
    """Child counts r_n = #(K ∩ [t^n, L t^n]) and gap bounds delta_n = (1/2) prod_{i<=n} (L t^(i+1))^-2."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    t, L = params.t, params.L

    def count(n):
        lo, hi = params.window(n)
        return lo, hi, K.count(hi) - K.count(lo - 1)

    counts = _map(count, range(1, depth + 1), threads)
    lt, lL = MP.log(t), log(L)
    rho, alpha = mpf(params.rho), mpf(params.alpha)
    levels = []
    num, den = 1, 2
    log_delta = -MP.log(2)
    ok_from = None
    for n, (lo, hi, r) in enumerate(counts, 1):
        if r < 2:
            raise MoranError(f"level {n}: window [{lo}, {hi}] has {r} children (need >= 2)")
        step = L.numerator * t ** (n + 1)
        num *= L.denominator**2
        den *= step**2
        log_delta -= 2 * (lL + (n + 1) * lt)
        # r_n >= floor(X) with X = t^(n/alpha)/(n log t)^rho  iff  r_n + 1 > X
        log_x = n * lt / alpha - rho * MP.log(n * lt)
        low_ok = check_le("low-estimate", log_x, MP.log(r + 1)).passed
        if low_ok and ok_from is None:
            ok_from = n
        elif not low_ok:
            ok_from = None
        levels.append(MoranLevel(n, r, log_delta, (lo, hi), (num, den), low_ok))
    return MoranLevels(levels, ok_from)


@dataclass
class MassEstimate:
    values: list  # d_n for n = 1..depth (None when the denominator is not positive)
    tail_min: Any
    tail_from: int

    @property
    def last(self):
        return self.values[-1]

    def to_json(self, stride: int = 1) -> dict:
        depth = len(self.values)
        keep = sorted(set(range(1, depth + 1, stride)) | {depth})
        return {
            "depth": depth,
            "last": fmt(self.last),
            "liminfProxy": fmt(self.tail_min),
            "tailWindow": [self.tail_from, depth],
            "convention": "min of d_n over the last half of the levels",
            "sequence": [[n, fmt(self.values[n - 1]) if self.values[n - 1] is not None else None] for n in keep],
        }


def mass_dimension_estimate(levels: MoranLevels) -> MassEstimate:
    """d_n = log(r_1 ... r_{n-1}) / (-log(r_n delta_n)), with a tail-window minimum."""
    vals = []
    acc = MP.mpf(0)
    for lv in levels.levels:
        den = -(MP.log(lv.r) + lv.log_delta)
        vals.append(acc / den if den > 0 else None)
        acc += MP.log(lv.r)
    depth = len(vals)
    tail_from = depth // 2 + 1
    tail = [v for v in vals[tail_from - 1:] if v is not None]
    return MassEstimate(vals, min(tail) if tail else None, tail_from)


@dataclass
class DimensionReport:
    params: SeedParams
    levels: MoranLevels
    mass: MassEstimate
    tau: DensityEstimate
    tolerance: float
    consistent: bool

    @property
    def upper(self):
        return self.tau.value / 2

    @property
    def lower(self):
        return self.mass.tail_min

    def to_json(self) -> dict:
        return {
            "seed": self.params.to_json(),
            "lowerBound": {"liminfProxy": fmt(self.mass.tail_min), "last": fmt(self.mass.last)},
            "upperBound": fmt(self.upper),
            "tau": self.tau.to_json(),
            "tolerance": self.tolerance,
            "consistent": self.consistent,
            "mass": self.mass.to_json(stride=max(1, self.mass.tail_from // 8)),
            "lowEstimateFrom": self.levels.low_estimate_from,
        }


def dimension_report(S: IntegerSet, params: SeedParams, depth: int, horizon: int = 10**6,
                     tolerance: float = 0.02, K: IntegerSet | None = None, threads: int = 1) -> DimensionReport:
    """Mass-lemma lower bound for the seed on K = S_* next to the tau/2 upper bound for S."""
    K = K if K is not None else ThinSubset(S)
    levels = seed_moran_levels(K, params, depth, threads)
    mass = mass_dimension_estimate(levels)
    tau = convergence_exponent_est(S, horizon)
    consistent = mass.tail_min is not None and mass.tail_min <= tau.value / 2 + tolerance
    return DimensionReport(params, levels, mass, tau, tolerance, bool(consistent))
