"""Exact products of rational powers, c * prod p^e_p with p prime and e_p rational.

Equality is decided symbolically through unique factorisation; strict order
is decided by outward-rounded interval logarithms at increasing precision,
which always terminates because the two sides are known to differ. When the
cleared integers are small the comparison is done in plain integers instead.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

from mpmath import iv
from sympy import factorint

from .numeric import fmt, frac

FACTOR_LIMIT = 2**80
CLEAR_BITS = 200_000
MAX_PREC = 1 << 20


@lru_cache(maxsize=4096)
def _factor(n: int) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(factorint(n).items()))


def _interval(q: Fraction):
    return iv.mpf(q.numerator) / iv.mpf(q.denominator)


class RationalPow:
    __slots__ = ("coef", "exps")

    def __init__(self, base=1, exp=1):
        base, exp = frac(base), frac(exp)
        if base <= 0:
            raise ValueError("base must be positive")
        self.coef = Fraction(1)
        self.exps: dict[int, Fraction] = {}
        if base == 1 or exp == 0:
            return
        small = base.numerator < FACTOR_LIMIT and base.denominator < FACTOR_LIMIT
        if not small:
            # pull out powers of two before giving up on factorisation
            num, den = base.numerator, base.denominator
            t = (num & -num).bit_length() - 1 - ((den & -den).bit_length() - 1)
            num >>= (num & -num).bit_length() - 1
            den >>= (den & -den).bit_length() - 1
            if num < FACTOR_LIMIT and den < FACTOR_LIMIT:
                other = RationalPow(Fraction(num, den), exp)
                self.coef = other.coef
                self.exps = dict(other.exps)
                if t:
                    self.exps[2] = self.exps.get(2, Fraction(0)) + t * exp
                return
            if exp.denominator != 1:
                raise ValueError("cannot take a fractional power of a large unfactored rational")
            self.coef = base ** int(exp)
            return
        for n, sgn in ((base.numerator, 1), (base.denominator, -1)):
            for p, m in _factor(n):
                self.exps[p] = self.exps.get(p, Fraction(0)) + sgn * m * exp

    @classmethod
    def _make(cls, coef: Fraction, exps: dict) -> "RationalPow":
        r = cls.__new__(cls)
        r.coef = coef
        r.exps = {p: e for p, e in exps.items() if e != 0}
        return r

    @staticmethod
    def lift(x) -> "RationalPow":
        return x if isinstance(x, RationalPow) else RationalPow(x)

    # arithmetic
    def __mul__(self, other):
        o = RationalPow.lift(other)
        exps = dict(self.exps)
        for p, e in o.exps.items():
            exps[p] = exps.get(p, Fraction(0)) + e
        return RationalPow._make(self.coef * o.coef, exps)

    __rmul__ = __mul__

    def inverse(self) -> "RationalPow":
        return RationalPow._make(1 / self.coef, {p: -e for p, e in self.exps.items()})

    def __truediv__(self, other):
        return self * RationalPow.lift(other).inverse()

    def __rtruediv__(self, other):
        return RationalPow.lift(other) * self.inverse()

    def __pow__(self, e):
        e = frac(e)
        if e.denominator == 1:
            coef = self.coef ** int(e)
            extra = {}
        else:
            extra = RationalPow(self.coef, e).exps
            coef = Fraction(1)
        exps = {p: x * e for p, x in self.exps.items()}
        for p, x in extra.items():
            exps[p] = exps.get(p, Fraction(0)) + x
        return RationalPow._make(coef, exps)

    # inspection
    def is_rational(self) -> bool:
        return all(e.denominator == 1 for e in self.exps.values())

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError("not a rational number")
        out = self.coef
        for p, e in self.exps.items():
            out *= Fraction(p) ** int(e)
        return out

    def log2_size(self) -> float:
        """Rough |log2| used only to choose a comparison strategy."""
        s = abs(math.log2(self.coef.numerator) - math.log2(self.coef.denominator))
        return s + sum(abs(float(e)) * math.log2(p) for p, e in self.exps.items())

    def log_interval(self, prec: int):
        old = iv.prec
        iv.prec = prec
        try:
            acc = iv.log(iv.mpf(self.coef.numerator)) - iv.log(iv.mpf(self.coef.denominator))
            for p, e in self.exps.items():
                acc += _interval(e) * iv.log(iv.mpf(p))
            return acc
        finally:
            iv.prec = old

    def approx(self) -> float:
        try:
            return float(math.exp(float(self.log_interval(64).mid)))
        except OverflowError:
            return math.inf

    def log_approx(self) -> float:
        return float(self.log_interval(64).mid)

    def sign_log(self) -> int:
        """Sign of log(self), that is, the order of self against 1."""
        if not self.exps:
            return (self.coef > 1) - (self.coef < 1)
        if self.is_rational():
            prime_bits = sum(abs(float(e)) * math.log2(p) for p, e in self.exps.items())
            coef_bits = max(self.coef.numerator.bit_length(), self.coef.denominator.bit_length())
            if prime_bits > coef_bits + 2 and prime_bits > 4096:
                # too far from 1 to be equal to it; the interval sign is certain
                return _interval_sign(self)
            v = self.to_fraction()
            return (v > 1) - (v < 1)
        # a non-integral exponent on a prime makes the value irrational, hence != 1
        L = math.lcm(*(e.denominator for e in self.exps.values()))
        if L * self.log2_size() < CLEAR_BITS:
            num, den = self.coef.numerator ** L, self.coef.denominator ** L
            for p, e in self.exps.items():
                m = int(e * L)
                if m > 0:
                    num *= p ** m
                else:
                    den *= p ** (-m)
            return (num > den) - (num < den)
        return _interval_sign(self)

    def cmp(self, other) -> int:
        if not isinstance(other, RationalPow) and frac(other) <= 0:
            return 1        # values are always positive
        return (self / RationalPow.lift(other)).sign_log()

    def __lt__(self, o): return self.cmp(o) < 0
    def __le__(self, o): return self.cmp(o) <= 0
    def __gt__(self, o): return self.cmp(o) > 0
    def __ge__(self, o): return self.cmp(o) >= 0

    def __eq__(self, o):
        try:
            return self.cmp(o) == 0
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash((self.coef, tuple(sorted(self.exps.items()))))

    def floor(self) -> int:
        """Exact floor."""
        if self.is_rational():
            return math.floor(self.to_fraction())
        guess = math.floor(self.approx()) if self.log2_size() < 1000 else None
        if guess is None:
            lg = self.log_interval(max(128, int(self.log2_size()) + 128))
            old = iv.prec
            iv.prec = int(self.log2_size()) + 128
            try:
                guess = int(iv.exp(lg).a)
            finally:
                iv.prec = old
        # adjust so that guess <= self < guess + 1
        while self.cmp(guess) < 0:
            guess -= 1
        while self.cmp(guess + 1) >= 0:
            guess += 1
        return guess

    def to_json(self):
        return {"coef": fmt(self.coef),
                "factors": [{"base": str(p), "exp_num": str(e.numerator), "exp_den": str(e.denominator)}
                            for p, e in sorted(self.exps.items())]}

    @classmethod
    def from_json(cls, obj) -> "RationalPow":
        exps = {int(f["base"]): Fraction(int(f["exp_num"]), int(f["exp_den"])) for f in obj["factors"]}
        return cls._make(frac(obj["coef"]), exps)

    def __repr__(self):
        parts = [] if self.coef == 1 else [fmt(self.coef)]
        parts += [f"{p}^({fmt(e)})" for p, e in sorted(self.exps.items())]
        return "RationalPow(" + (" * ".join(parts) or "1") + ")"


def _interval_sign(x: RationalPow) -> int:
    prec = 128
    while prec <= MAX_PREC:
        lg = x.log_interval(prec)
        if lg.a > 0:
            return 1
        if lg.b < 0:
            return -1
        prec *= 4
    raise ArithmeticError("comparison not resolved at maximum precision")


class LogRatio:
    """The real number s * log(x)/log(R) + t, with exact rational s, t."""

    __slots__ = ("x", "R", "s", "t")

    def __init__(self, x: RationalPow, R: RationalPow, s=1, t=0):
        self.x, self.R, self.s, self.t = RationalPow.lift(x), RationalPow.lift(R), frac(s), frac(t)
        if self.R.sign_log() <= 0:
            raise ValueError("log base must exceed 1")

    def __mul__(self, c):
        c = frac(c)
        return LogRatio(self.x, self.R, self.s * c, self.t * c)

    __rmul__ = __mul__

    def __add__(self, c):
        return LogRatio(self.x, self.R, self.s, self.t + frac(c))

    __radd__ = __add__

    def __sub__(self, c):
        return self + (-frac(c))

    def __neg__(self):
        return self * -1

    def exact(self) -> Fraction | None:
        """The value when log(x)/log(R) is rational, else None."""
        if self.s == 0 or self.x.cmp(1) == 0:
            return self.t
        if self.x.coef != 1 or self.R.coef != 1:
            return None
        keys = set(self.x.exps) | set(self.R.exps)
        ratio = None
        for p in keys:
            a, b = self.x.exps.get(p, Fraction(0)), self.R.exps.get(p, Fraction(0))
            if b == 0:
                return None
            r = a / b
            if ratio is None:
                ratio = r
            elif r != ratio:
                return None
        return self.s * ratio + self.t

    def cmp(self, c) -> int:
        """Order against the rational c."""
        c = frac(c)
        ex = self.exact()
        if ex is not None:
            return (ex > c) - (ex < c)
        # s log x / log R + t vs c  <=>  x^s vs R^(c - t)   (log R > 0)
        return (self.x ** self.s).cmp(self.R ** (c - self.t))

    def approx(self) -> float:
        return float(self.s) * self.x.log_approx() / self.R.log_approx() + float(self.t)

    def floor(self) -> int:
        ex = self.exact()
        if ex is not None:
            return math.floor(ex)
        g = math.floor(self.approx())
        while self.cmp(g) < 0:
            g -= 1
        while self.cmp(g + 1) >= 0:
            g += 1
        return g

    def ceil(self) -> int:
        f = self.floor()
        return f if self.cmp(f) == 0 else f + 1
