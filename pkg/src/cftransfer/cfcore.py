"""Exact continued-fraction arithmetic: convergents and fundamental intervals.

Everything here is rational; no floating point is used.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence


class InvalidWord(ValueError):
    pass


@dataclass(frozen=True)
class DigitWord:
    digits: tuple[int, ...]
    signs: tuple[int, ...] | None = None

    def __post_init__(self):
        digits = tuple(int(d) for d in self.digits)
        object.__setattr__(self, "digits", digits)
        if not digits:
            raise InvalidWord("empty digit word")
        for i, d in enumerate(digits):
            if d < 1:
                raise InvalidWord(f"digit {d} at position {i + 1} is not a positive integer")
        if self.signs is not None:
            signs = tuple(int(s) for s in self.signs)
            object.__setattr__(self, "signs", signs)
            if len(signs) != len(digits):
                raise InvalidWord("sign word and digit word differ in length")
            for i, (a, s) in enumerate(zip(digits, signs)):
                if s not in (-1, 1):
                    raise InvalidWord(f"sign {s} at position {i + 1} is not +1 or -1")
                # x -> 1/(a + s x) must map [0, 1] into [0, 1]
                if a + s < 1:
                    raise InvalidWord(f"digit {a} with sign -1 at position {i + 1} is not admissible")

    def __len__(self) -> int:
        return len(self.digits)

    @property
    def regular(self) -> bool:
        return self.signs is None or all(s == 1 for s in self.signs)

    def extend(self, *digits: int) -> "DigitWord":
        if self.signs is not None:
            raise InvalidWord("extend() is for regular words")
        return DigitWord(self.digits + tuple(digits))


def as_word(w: DigitWord | Iterable[int]) -> DigitWord:
    return w if isinstance(w, DigitWord) else DigitWord(tuple(w))


@dataclass(frozen=True)
class Convergent:
    p: int
    q: int
    index: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)


@dataclass(frozen=True)
class SandwichRecord:
    lower: Fraction
    upper: Fraction
    diameter: Fraction

    @property
    def holds(self) -> bool:
        return self.lower <= self.diameter <= self.upper


@dataclass(frozen=True)
class FundamentalInterval:
    lo: Fraction
    hi: Fraction
    lo_closed: bool
    hi_closed: bool
    depth: int
    word: DigitWord
    sandwich: SandwichRecord | None = None
    constant_observed: Fraction | None = None
    constant_ok: bool | None = None

    @property
    def diameter(self) -> Fraction:
        return self.hi - self.lo

    def contains_interval(self, other: "FundamentalInterval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def to_json(self) -> dict:
        out = {
            "lo": _fs(self.lo),
            "hi": _fs(self.hi),
            "loClosed": self.lo_closed,
            "hiClosed": self.hi_closed,
            "depth": self.depth,
            "diameter": _fs(self.diameter),
        }
        if self.sandwich is not None:
            out["sandwich"] = {
                "lower": _fs(self.sandwich.lower),
                "upper": _fs(self.sandwich.upper),
                "holds": self.sandwich.holds,
            }
        if self.constant_observed is not None:
            out["constantObserved"] = _fs(self.constant_observed)
            out["constantOk"] = self.constant_ok
        return out


def _fs(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _require_regular(word: DigitWord) -> None:
    if word.signs is not None and not word.regular:
        raise InvalidWord("operation needs a regular word (no -1 signs)")


def convergents(word: DigitWord | Sequence[int]) -> list[Convergent]:
    word = as_word(word)
    _require_regular(word)
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    out = []
    for i, a in enumerate(word.digits, 1):
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        out.append(Convergent(p, q, i))
    return out


def cf_state(digits: Iterable[int], state: tuple[int, int, int, int] = (1, 0, 0, 1)) -> tuple[int, int, int, int]:
    """Fold digits into (p_{n-1}, p_n, q_{n-1}, q_n); the default is the empty word."""
    p_prev, p, q_prev, q = state
    for a in digits:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
    return p_prev, p, q_prev, q


def interval_from_state(state: tuple[int, int, int, int]) -> tuple[Fraction, Fraction]:
    """Sorted endpoints of the fundamental interval for a convergent state."""
    p_prev, p, q_prev, q = state
    a = Fraction(p, q)
    b = Fraction(p + p_prev, q + q_prev)
    return (a, b) if a < b else (b, a)


def tail_interval(d: int, tail: Sequence[int] = ()) -> tuple[Fraction, Fraction]:
    """Range of z = [d; tail, ...] over all continuations, as a sorted pair."""
    if not tail:
        return Fraction(d), Fraction(d + 1)
    lo, hi = interval_from_state(cf_state(tail))
    return d + lo, d + hi


def sibling_log_gap_hull(state: tuple[int, int, int, int], z1: tuple, z2: tuple) -> tuple:
    """(log gap, log hull diameter) of the images of two disjoint z-intervals.

    Under a prefix with convergent state (p', p, q', q) a point is
    (p z + p')/(q z + q'), so two images differ by |z1 - z2|/((q z1 + q')(q z2 + q')).
    Only small rationals and log q are touched, never the huge endpoints.
    """
    from .numerics import MP

    _, _, q_prev, q = state
    (a_lo, a_hi), (b_lo, b_hi) = sorted([tuple(z1), tuple(z2)])
    lq = MP.log(q)
    ratio = MP.mpf(q_prev) / q

    def log_den(z):
        return lq + MP.log(MP.mpf(z.numerator) / z.denominator + ratio)

    def log_dist(u, v):
        return MP.log(MP.mpf((v - u).numerator) / (v - u).denominator) - log_den(u) - log_den(v)

    log_hull = log_dist(a_lo, b_hi)
    if b_lo <= a_hi:
        return None, log_hull
    return log_dist(a_hi, b_lo), log_hull


def fundamental_interval(word: DigitWord | Sequence[int]) -> FundamentalInterval:
    word = as_word(word)
    _require_regular(word)
    n = len(word)
    p_prev, p, q_prev, q = cf_state(word.digits)
    closed_end = Fraction(p, q)
    open_end = Fraction(p + p_prev, q + q_prev)
    diameter = Fraction(1, q * (q + q_prev))

    lower_den = 2
    upper_den = 1
    for a in word.digits:
        lower_den *= (a + 1) ** 2
        upper_den *= a * a
    sandwich = SandwichRecord(Fraction(1, lower_den), Fraction(1, upper_den), diameter)
    if not sandwich.holds:
        raise AssertionError(f"diameter sandwich violated for {word.digits}")

    if n % 2 == 0:
        iv = FundamentalInterval(closed_end, open_end, True, False, n, word, sandwich)
    else:
        iv = FundamentalInterval(open_end, closed_end, False, True, n, word, sandwich)
    assert iv.diameter == diameter
    return iv


def semi_regular_interval(word: DigitWord, C: Fraction | int | None = None) -> FundamentalInterval:
    """Image of [0, 1] under the composition of x -> 1/(a_i + s_i x).

    When every digit is at least 3 the observed best constant of the
    diameter sandwich C^-1 prod (a+1)^-2 <= diam <= C prod (a-1)^-2 is
    reported, and compared with C when one is given.
    """
    signs = word.signs if word.signs is not None else (1,) * len(word)
    # matrix [[a, b], [c, d]] acting as x -> (a x + b)/(c x + d)
    ma, mb, mc, md = 1, 0, 0, 1
    for a, s in zip(word.digits, signs):
        # multiply on the right by [[0, 1], [s, a]]
        ma, mb, mc, md = mb * s, ma + mb * a, md * s, mc + md * a
    at0 = Fraction(mb, md)
    at1 = Fraction(ma + mb, mc + md)
    if at0 < at1:
        lo, hi, lo_closed, hi_closed = at0, at1, True, False
    else:
        lo, hi, lo_closed, hi_closed = at1, at0, False, True

    observed = None
    ok = None
    if all(a >= 3 for a in word.digits):
        diam = hi - lo
        plus = 1
        minus = 1
        for a in word.digits:
            plus *= (a + 1) ** 2
            minus *= (a - 1) ** 2
        observed = max(Fraction(1, plus) / diam, diam * minus)
        if C is not None:
            ok = observed <= Fraction(C)
    return FundamentalInterval(lo, hi, lo_closed, hi_closed, len(word), word, None, observed, ok)


def gap(i1: FundamentalInterval | tuple, i2: FundamentalInterval | tuple) -> Fraction:
    """Distance between two intervals (zero when they touch or overlap)."""
    a_lo, a_hi = _ends(i1)
    b_lo, b_hi = _ends(i2)
    return max(Fraction(0), b_lo - a_hi, a_lo - b_hi)


def hull_diameter(i1: FundamentalInterval | tuple, i2: FundamentalInterval | tuple) -> Fraction:
    a_lo, a_hi = _ends(i1)
    b_lo, b_hi = _ends(i2)
    return max(a_hi, b_hi) - min(a_lo, b_lo)


def _ends(iv) -> tuple[Fraction, Fraction]:
    if isinstance(iv, FundamentalInterval):
        return iv.lo, iv.hi
    return iv[0], iv[1]


def format_word(word: DigitWord) -> str:
    if word.signs is None:
        lines = [str(d) for d in word.digits]
    else:
        lines = [("+" if s > 0 else "-") + str(d) for d, s in zip(word.digits, word.signs)]
    return "\n".join(lines) + "\n"


def parse_word(text: str) -> DigitWord:
    digits, signs = [], []
    signed = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        has_sign = line[0] in "+-"
        if signed is None:
            signed = has_sign
        elif signed != has_sign:
            raise InvalidWord(f"line {lineno}: mixed signed and unsigned digits")
        try:
            val = int(line)
        except ValueError:
            raise InvalidWord(f"line {lineno}: not an integer: {line!r}") from None
        if has_sign:
            signs.append(1 if line[0] == "+" else -1)
            digits.append(abs(val))
        else:
            digits.append(val)
    return DigitWord(tuple(digits), tuple(signs) if signed else None)
