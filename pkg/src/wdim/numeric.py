"""Exact rational substrate: weighted quasi-norms, boxes, affine planes."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath

DEFAULT_BUDGET = 10**8

Vec = tuple[Fraction, ...]


class BudgetExceeded(RuntimeError):
    """Enumeration would exceed the configured number of elementary tests."""


_CHUNK = 1000


def int_str(n: int) -> str:
    """Decimal form of n without tripping the interpreter's digit limit for huge integers."""
    try:
        return str(n)
    except ValueError:
        pass
    sign, n = ("-", -n) if n < 0 else ("", n)
    parts = []
    base = 10**_CHUNK
    while n:
        n, r = divmod(n, base)
        parts.append(r)
    head = str(parts[-1])
    return sign + head + "".join(str(r).zfill(_CHUNK) for r in reversed(parts[:-1]))


def str_int(text: str) -> int:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        if not text.lstrip("+-").isdigit():
            raise
    neg = text.startswith("-")
    digits = text.lstrip("+-")
    n = 0
    for j in range(0, len(digits), _CHUNK):
        chunk = digits[j:j + _CHUNK]
        n = n * 10 ** len(chunk) + int(chunk)
    return -n if neg else n


def frac(x) -> Fraction:
    """Coerce ints, Fractions and "a/b" strings to Fraction; reject floats."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        x = x.strip()
        if len(x) > 4000 and "." not in x and "e" not in x.lower():
            num, _, den = x.partition("/")
            return Fraction(str_int(num), str_int(den) if den else 1)
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


def vec(xs: Iterable) -> Vec:
    return tuple(frac(x) for x in xs)


def fmt(x: Fraction) -> str:
    """Render a rational as "num/den" (or "num" when integral)."""
    x = Fraction(x)
    if x.denominator == 1:
        return int_str(x.numerator)
    return f"{int_str(x.numerator)}/{int_str(x.denominator)}"


def cmp(a, b) -> int:
    return (a > b) - (a < b)


def pow_cmp(x: Fraction, u: Fraction, c: Fraction) -> int:
    """Sign of x - c**u for x >= 0, c > 0 and rational u > 0, decided exactly.

    With u = a/b both sides are raised to the b-th power.
    """
    if x < 0 or c <= 0 or u <= 0:
        raise ValueError("pow_cmp needs x >= 0, c > 0, u > 0")
    return cmp(x ** u.denominator, c ** u.numerator)


def _check_weights(u: Sequence) -> Vec:
    u = vec(u)
    for ui in u:
        if not 0 < ui <= 1:
            raise ValueError(f"weight {ui} outside (0,1]")
    return u


def weighted_norm_cmp(x: Sequence, u: Sequence, c) -> str:
    """Order of max_i |x_i|^(1/u_i) against c: "less", "equal" or "greater"."""
    x, u, c = vec(x), _check_weights(u), frac(c)
    if len(x) != len(u):
        raise ValueError("dimension mismatch")
    if c <= 0:
        raise ValueError("c must be positive")
    best = -1
    for xi, ui in zip(x, u):
        # |x_i|^(1/u_i) vs c  <=>  |x_i| vs c^u_i
        best = max(best, pow_cmp(abs(xi), ui, c))
    return ("less", "equal", "greater")[best + 1]


def weighted_norm_approx(x: Sequence, u: Sequence, precision: int = 30) -> mpmath.mpf:
    """The quasi-norm to within 10^-precision."""
    x, u = vec(x), _check_weights(u)
    with mpmath.workdps(precision + 15):
        vals = [
            mpmath.mpf(0) if xi == 0
            else mpmath.power(mpmath.mpf(abs(xi).numerator) / abs(xi).denominator,
                              mpmath.mpf(ui.denominator) / ui.numerator)
            for xi, ui in zip(x, u)
        ]
        return +max(vals) if vals else mpmath.mpf(0)


@dataclass(frozen=True)
class RationalVector:
    p: tuple[int, ...]
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be positive")

    def point(self) -> Vec:
        return tuple(Fraction(pi, self.q) for pi in self.p)


@dataclass(frozen=True)
class Box:
    lo: Vec
    hi: Vec

    def __post_init__(self):
        object.__setattr__(self, "lo", vec(self.lo))
        object.__setattr__(self, "hi", vec(self.hi))
        if len(self.lo) != len(self.hi):
            raise ValueError("dimension mismatch")
        if any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ValueError("box needs lo < hi on every axis")

    @classmethod
    def from_center(cls, center: Sequence, radii: Sequence) -> "Box":
        return cls(tuple(c - r for c, r in zip(center, radii)),
                   tuple(c + r for c, r in zip(center, radii)))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def side(self) -> Vec:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    @property
    def center(self) -> Vec:
        return tuple((a + b) / 2 for a, b in zip(self.lo, self.hi))

    @property
    def radii(self) -> Vec:
        return tuple((b - a) / 2 for a, b in zip(self.lo, self.hi))

    def volume(self) -> Fraction:
        return math.prod(self.side, start=Fraction(1))

    def contains_point(self, z: Sequence) -> bool:
        return all(a <= zi <= b for a, zi, b in zip(self.lo, z, self.hi))

    def contains_box(self, other: "Box") -> bool:
        return all(a <= c and d <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def meets(self, other: "Box") -> bool:
        """Closed boxes intersect (touching faces count)."""
        return all(a <= d and c <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def meets_interior(self, other: "Box") -> bool:
        return all(a < d and c < b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def corners(self):
        return itertools.product(*zip(self.lo, self.hi))

    def to_json(self):
        return {"lo": [fmt(v) for v in self.lo], "hi": [fmt(v) for v in self.hi]}


@dataclass(frozen=True)
class AffinePlane:
    """The locus a.z = b."""
    a: Vec
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", vec(self.a))
        object.__setattr__(self, "b", frac(self.b))
        if all(ai == 0 for ai in self.a):
            raise ValueError("plane normal must be non-zero")

    def value(self, z: Sequence) -> Fraction:
        return sum((ai * zi for ai, zi in zip(self.a, z)), Fraction(0)) - self.b

    def contains(self, z: Sequence) -> bool:
        return self.value(z) == 0


def _interval_gap(lo: Fraction, hi: Fraction, r: int) -> Fraction:
    return max(Fraction(0), lo - r, r - hi)


_FLOAT_SLACK = 1e-9


def _scan(E: Box, s_lo: int, s_hi: int, radius_ok, radius_f, reach, budget: int) -> list[RationalVector]:
    """r/s with s_lo <= s < s_hi whose per-axis gap to s*E passes radius_ok(s, i, gap).

    radius_f(s, i) approximates the admissible gap as a float; only gaps within
    a relative 1e-9 of it are decided by the exact test.
    reach(s) is an integer upper bound on every admissible gap.
    """
    if not 1 <= s_lo < s_hi:
        raise ValueError("need 1 <= s_lo < s_hi")
    cost = 0
    for s in range(s_lo, s_hi):
        per = 0
        for w in E.side:
            per += math.floor(s * w) + 2 * reach(s) + 2
        cost += per
        if cost > budget:
            raise BudgetExceeded(f"scale too large: more than {budget} tests")
    # per axis, lo = a/D and hi = c/D with integers, so gaps are integers over D
    axes_int = []
    for lo, hi in zip(E.lo, E.hi):
        D = lo.denominator * hi.denominator // math.gcd(lo.denominator, hi.denominator)
        axes_int.append((lo.numerator * (D // lo.denominator), hi.numerator * (D // hi.denominator), D))
    out = []
    for s in range(s_lo, s_hi):
        b = reach(s)
        axes = []
        for i, (a, c, D) in enumerate(axes_int):
            sa, sc = s * a, s * c
            bf = radius_f(s, i)
            cands = []
            for r in range(sa // D - b, -(-sc // D) + b + 1):
                num = max(0, sa - r * D, r * D - sc)
                if num == 0:
                    cands.append(r)
                    continue
                g = num / D
                if g > bf * (1 + _FLOAT_SLACK):
                    continue
                if g < bf * (1 - _FLOAT_SLACK) or radius_ok(s, i, Fraction(num, D)):
                    cands.append(r)
            if not cands:
                break
            axes.append(cands)
        else:
            out.extend(RationalVector(tuple(r), s) for r in itertools.product(*axes))
    return out


def dangerous_rationals(E: Box, s_lo: int, s_hi: int, u: Sequence, eps,
                        budget: int = DEFAULT_BUDGET) -> list[RationalVector]:
    """All r/s with s_lo <= s < s_hi such that some x in E has
    |s x_i - r_i| <= (eps/s)^u_i on every axis, sorted by (s, r)."""
    u, eps = _check_weights(u), frac(eps)
    if len(u) != E.dim:
        raise ValueError("dimension mismatch")
    ef = float(eps)
    return _scan(E, s_lo, s_hi,
                 lambda s, i, gap: pow_cmp(gap, u[i], eps / s) <= 0,
                 lambda s, i: (ef / s) ** float(u[i]),
                 lambda s: max(1, math.ceil(eps / s)), budget)


def tau_rationals(E: Box, s_lo: int, s_hi: int, w: Sequence, tau,
                  budget: int = DEFAULT_BUDGET) -> list[RationalVector]:
    """All r/s with s_lo <= s < s_hi such that some x in E has
    |s x_i - r_i| <= s^(-tau w_i) on every axis, i.e. ||s x - r||_w <= s^-tau."""
    w, tau = _check_weights(w), frac(tau)
    if len(w) != E.dim:
        raise ValueError("dimension mismatch")
    exps = [tau * wi for wi in w]

    def ok(s, i, gap):
        e = exps[i]
        # gap <= s^(-a/b)  <=>  gap^b * s^a <= 1
        return gap ** e.denominator * Fraction(s) ** e.numerator <= 1

    return _scan(E, s_lo, s_hi, ok, lambda s, i: float(s) ** -float(exps[i]), lambda s: 1, budget)


def _rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    m = [list(r) for r in rows]
    pivots = []
    row = 0
    ncols = len(m[0]) if m else 0
    for col in range(ncols):
        piv = next((i for i in range(row, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        pv = m[row][col]
        m[row] = [v / pv for v in m[row]]
        for i in range(len(m)):
            if i != row and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[row])]
        pivots.append(col)
        row += 1
        if row == len(m):
            break
    return m[:row], pivots


def matrix_rank(rows: Sequence[Sequence]) -> int:
    rows = [list(vec(r)) for r in rows]
    if not rows:
        return 0
    return len(_rref(rows)[1])


def _kernel_vector(rows: list[list[Fraction]], d: int) -> Vec:
    """A primitive integer vector orthogonal to rows (which have rank d-1)."""
    red, pivots = _rref(rows)
    free = next(j for j in range(d) if j not in pivots)
    v = [Fraction(0)] * d
    v[free] = Fraction(1)
    for r, pc in zip(red, pivots):
        v[pc] = -r[free]
    den = math.lcm(*(x.denominator for x in v))
    ints = [int(x * den) for x in v]
    g = math.gcd(*ints)
    ints = [i // g for i in ints]
    if next(i for i in ints if i != 0) < 0:
        ints = [-i for i in ints]
    return tuple(Fraction(i) for i in ints)


def affine_hull(points: Sequence[Sequence], d: int | None = None) -> tuple[int, AffinePlane | None]:
    """Affine rank of the points and, when it is below d, a plane through all of them."""
    pts = [vec(p) for p in points]
    if d is None:
        if not pts:
            raise ValueError("dimension needed for an empty point set")
        d = len(pts[0])
    if not pts:
        return 0, AffinePlane((1,) + (0,) * (d - 1), 0)
    base = pts[0]
    diffs = [[a - b for a, b in zip(p, base)] for p in pts[1:]]
    red, _ = _rref(diffs) if diffs else ([], [])
    rank = len(red)
    if rank >= d:
        return rank, None
    span = list(red)
    for j in range(d):
        if len(span) == d - 1:
            break
        e = [Fraction(int(i == j)) for i in range(d)]
        if matrix_rank(span + [e]) > len(span):
            span.append(e)
    if d == 1:
        a = (Fraction(1),)
    else:
        a = _kernel_vector(span, d)
    b = sum((ai * zi for ai, zi in zip(a, base)), Fraction(0))
    return rank, AffinePlane(a, b)


def plane_meets_box(plane: AffinePlane, center: Sequence, radii: Sequence) -> bool:
    """Whether {x : |x_i - c_i| <= r_i} meets the plane."""
    center, radii = vec(center), vec(radii)
    if any(r < 0 for r in radii):
        raise ValueError("radii must be non-negative")
    slack = sum((abs(ai) * ri for ai, ri in zip(plane.a, radii)), Fraction(0))
    return abs(plane.value(center)) <= slack


def subdivide(E: Box, side: Sequence, anchor: Sequence[str] | str = "lo") -> tuple[list[Box], list[Box]]:
    """Grid of boxes with the given sides anchored at a corner of E, plus remainder boxes."""
    side = vec(side)
    if any(s <= 0 for s in side):
        raise ValueError("side lengths must be positive")
    if isinstance(anchor, str):
        anchor = [anchor] * E.dim
    full_iv, rem_iv = [], []
    for lo, hi, s, an in zip(E.lo, E.hi, side, anchor):
        if s > hi - lo:
            raise ValueError("side exceeds box width")
        m = math.floor((hi - lo) / s)
        if an == "lo":
            full = [(lo + j * s, lo + (j + 1) * s) for j in range(m)]
            rem = [(lo + m * s, hi)] if lo + m * s < hi else []
        elif an == "hi":
            full = [(hi - (j + 1) * s, hi - j * s) for j in reversed(range(m))]
            rem = [(lo, hi - m * s)] if hi - m * s > lo else []
        else:
            raise ValueError(f"bad anchor {an!r}")
        full_iv.append(full)
        rem_iv.append(rem)
    full_boxes = [Box(tuple(i[0] for i in c), tuple(i[1] for i in c))
                  for c in itertools.product(*full_iv)]
    both = [[(iv, False) for iv in f] + [(iv, True) for iv in r] for f, r in zip(full_iv, rem_iv)]
    rem_boxes = [Box(tuple(i[0][0] for i in c), tuple(i[0][1] for i in c))
                 for c in itertools.product(*both) if any(i[1] for i in c)]
    return full_boxes, rem_boxes
