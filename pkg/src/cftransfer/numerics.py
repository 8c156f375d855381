"""High-precision logs, exact roots, and guarded comparisons shared by all modules."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import gmpy2
from mpmath.ctx_mp import MPContext

# A private context so callers changing mpmath.mp.prec cannot affect results.
MP = MPContext()
MP.prec = 128

GUARD = 1e-9


def iroot(n: int, k: int) -> int:
    """Floor of the k-th root of a non-negative integer."""
    if n < 0:
        raise ValueError("iroot of a negative integer")
    return int(gmpy2.iroot(n, k)[0])


def isqrt(n: int) -> int:
    return int(gmpy2.isqrt(n))


def mpf(x: Any):
    if isinstance(x, Fraction):
        return MP.mpf(x.numerator) / x.denominator
    return MP.mpf(x)


def log(x: Any):
    """Natural log of a positive int, Fraction or real, at 128-bit precision."""
    if isinstance(x, Fraction):
        if x <= 0:
            raise ValueError("log of a non-positive rational")
        return MP.log(x.numerator) - MP.log(x.denominator)
    if isinstance(x, int) and x <= 0:
        raise ValueError("log of a non-positive integer")
    return MP.log(x)


def fmt(x: Any, digits: int = 12) -> str:
    """Decimal rendering used in every JSON report."""
    return MP.nstr(mpf(x), digits, strip_zeros=False)


def frac_str(x: Fraction | int) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_frac(s: Any) -> Fraction:
    if isinstance(s, Fraction):
        return s
    if isinstance(s, float):
        return Fraction(s).limit_denominator(10**12)
    return Fraction(str(s).strip())


def ceil_root_frac(x: Fraction, num: int, den: int, scale: int = 10**6) -> Fraction:
    """Rational upper bound, with denominator `scale`, for x**(num/den)."""
    if den == 1:
        return x**num
    y = x**num
    # ceil(scale * y**(1/den)) = ceil of the den-th root of scale**den * y
    target = Fraction(scale**den) * y
    r = iroot(target.numerator // target.denominator, den)
    while Fraction(r**den) < target:
        r += 1
    return Fraction(r, scale)


@dataclass
class Check:
    """Outcome of one inequality check, lhs <= rhs unless stated otherwise."""

    name: str
    status: str  # pass | marginal | fail
    margin: Any = None
    exact: bool = False
    lhs: Any = None
    rhs: Any = None
    required: bool = True
    note: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "status": self.status,
            "exact": self.exact,
            "required": self.required,
        }
        for key in ("margin", "lhs", "rhs"):
            val = getattr(self, key)
            if val is None:
                continue
            if isinstance(val, Fraction):
                out[key] = frac_str(val)
            elif isinstance(val, int) and not isinstance(val, bool):
                out[key] = str(val)
            else:
                out[key] = fmt(val)
        if self.note:
            out["note"] = self.note
        if self.extra:
            out["extra"] = self.extra
        return out


def check_le(name: str, lhs, rhs, required: bool = True, note: str = "") -> Check:
    """lhs <= rhs in the log domain, with the relative guard band."""
    lhs, rhs = mpf(lhs), mpf(rhs)
    margin = rhs - lhs
    scale = max(abs(lhs), abs(rhs))
    if scale == 0:
        status = "pass"
    elif margin > GUARD * scale:
        status = "pass"
    elif margin >= -GUARD * scale:
        status = "marginal"
    else:
        status = "fail"
    return Check(name, status, margin, False, lhs, rhs, required, note)


def check_le_exact(name: str, lhs, rhs, strict: bool = False, required: bool = True, note: str = "") -> Check:
    """Exact rational/integer comparison lhs <= rhs (or < when strict)."""
    ok = lhs < rhs if strict else lhs <= rhs
    margin = Fraction(rhs) - Fraction(lhs)
    return Check(name, "pass" if ok else "fail", margin, True, lhs, rhs, required, note)


def vacuous(name: str, note: str, required: bool = True) -> Check:
    return Check(name, "pass", None, True, None, None, required, note)
