"""Geometry of numbers at small dimension: successive minima by enumeration,
Minkowski bounds, the simplex-lemma certificate and intermediate approximations."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .powers import RationalPow
from .numeric import (DEFAULT_BUDGET, Box, BudgetExceeded, RationalVector, Vec,
                      _rref, affine_hull, dangerous_rationals, frac, matrix_rank, pow_cmp, vec,
                      weighted_norm_cmp)

MAX_DIM = 4


@dataclass(frozen=True)
class LatticeBasis:
    """Columns of `basis` generate the lattice; stored row-major."""
    basis: tuple[Vec, ...]

    @property
    def n(self) -> int:
        return len(self.basis)

    def column(self, j: int) -> Vec:
        return tuple(row[j] for row in self.basis)

    def apply(self, z: Sequence[int]) -> Vec:
        return tuple(sum((a * zj for a, zj in zip(row, z)), Fraction(0)) for row in self.basis)

    def det(self) -> Fraction:
        return determinant(self.basis)

    def inverse(self) -> tuple[Vec, ...]:
        n = self.n
        aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(self.basis)]
        red, piv = _rref(aug)
        if piv[:n] != list(range(n)):
            raise ValueError("singular basis")
        return tuple(tuple(r[n:]) for r in red)


def determinant(m: Sequence[Sequence[Fraction]]) -> Fraction:
    a = [list(vec(r)) for r in m]
    n = len(a)
    det = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if a[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            a[c], a[p] = a[p], a[c]
            det = -det
        det *= a[c][c]
        for i in range(c + 1, n):
            f = a[i][c] / a[c][c]
            a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return det


def shear_lattice(x: Sequence, convention: str = "lambda") -> LatticeBasis:
    """(I x; 0 1), or with convention="u_y" the matrix (-I y; 0 1) sending (r, s) to (s y - r, s)."""
    x = vec(x)
    d = len(x)
    sign = {"lambda": 1, "u_y": -1}[convention]
    rows = [tuple(Fraction(sign * int(i == j)) for j in range(d)) + (x[i],) for i in range(d)]
    rows.append((Fraction(0),) * d + (Fraction(1),))
    return LatticeBasis(tuple(rows))


@dataclass(frozen=True)
class SymmetricBox:
    radii: Vec

    def __post_init__(self):
        object.__setattr__(self, "radii", vec(self.radii))
        if any(r <= 0 for r in self.radii):
            raise ValueError("radii must be positive")

    def gauge(self, v: Sequence) -> Fraction:
        return max(abs(vi) / ri for vi, ri in zip(v, self.radii))

    def volume(self) -> Fraction:
        return math.prod((2 * r for r in self.radii), start=Fraction(1))


@dataclass(frozen=True)
class MinimaReport:
    lam: Vec
    witnesses: tuple[Vec, ...]


def lattice_points(K: SymmetricBox, L: LatticeBasis, scale: Fraction,
                   budget: int = 10**6) -> list[Vec]:
    """All non-zero lattice vectors with gauge <= scale."""
    inv = L.inverse()
    bounds = []
    for row in inv:
        b = sum((abs(a) * scale * r for a, r in zip(row, K.radii)), Fraction(0))
        bounds.append(math.floor(b))
    if math.prod(2 * b + 1 for b in bounds) > budget:
        raise BudgetExceeded("too many lattice points to enumerate")
    out = []
    for z in itertools.product(*(range(-b, b + 1) for b in bounds)):
        if any(z):
            v = L.apply(z)
            if K.gauge(v) <= scale:
                out.append(v)
    return out


def successive_minima(K: SymmetricBox, L: LatticeBasis, budget: int = 10**6) -> MinimaReport:
    n = L.n
    if n > MAX_DIM:
        raise ValueError(f"dimension {n} exceeds enumeration limit {MAX_DIM}")
    if len(K.radii) != n:
        raise ValueError("dimension mismatch")
    # the basis columns are independent, so lambda_n is at most their largest gauge
    top = max(K.gauge(L.column(j)) for j in range(n))
    scale = top / 1024
    while True:
        scale = min(2 * scale, top)
        # every vector of gauge <= scale is listed, so a full-rank greedy pick is exact
        pts = sorted(lattice_points(K, L, scale, budget), key=lambda v: (K.gauge(v), v))
        lam, wit = [], []
        for v in pts:
            if matrix_rank(wit + [v]) > len(wit):
                wit.append(v)
                lam.append(K.gauge(v))
                if len(wit) == n:
                    return MinimaReport(tuple(lam), tuple(wit))
        if scale == top:
            raise AssertionError("basis columns should give full rank at the top scale")


def minkowski_check(K: SymmetricBox, L: LatticeBasis) -> dict:
    if abs(L.det()) != 1:
        raise ValueError("lattice not unimodular")
    rep = successive_minima(K, L)
    n = L.n
    product = K.volume() * math.prod(rep.lam, start=Fraction(1))
    lower, upper = Fraction(2**n, math.factorial(n)), Fraction(2**n)
    return {"product": product, "lower": lower, "upper": upper,
            "pass": lower <= product <= upper, "lambda": rep.lam}


def simplex_rho0(R: Fraction, ui: Fraction, d: int) -> RationalPow:
    return RationalPow(R, -(1 + ui)) * Fraction(1, math.factorial(d + 1))


def simplex_hypothesis(E: Box, n: int, R, u: Sequence, eps) -> bool:
    """side_i <= R^-(1+u_i)(n+1)/(d+1)! and eps < R^-1 (d+1)!^(-1/u_1), exactly."""
    R, u, eps = frac(R), vec(u), frac(eps)
    d = E.dim
    fact = math.factorial(d + 1)
    for side, ui in zip(E.side, u):
        bound = RationalPow(R, -(1 + ui) * (n + 1)) * Fraction(1, fact)
        if bound.cmp(side) < 0:
            return False
    # eps < R^-1 fact^(-1/u_1)  <=>  (eps R)^(u_1) < 1/fact, compared via pow_cmp
    return pow_cmp(Fraction(1, fact), u[0], eps * R) > 0


def simplex_certificate(E: Box, n: int, R, u: Sequence, eps, budget: int = DEFAULT_BUDGET) -> dict:
    R, u, eps = frac(R), vec(u), frac(eps)
    if R.denominator != 1:
        raise ValueError("R must be an integer here")
    R = int(R)
    ok = simplex_hypothesis(E, n, R, u, eps)
    pts = dangerous_rationals(E, R**n, R**(n + 1), u, eps, budget)
    rank, plane = affine_hull([p.point() for p in pts], E.dim)
    if ok and rank > E.dim - 1:
        raise AssertionError(f"coplanarity fails under its hypothesis: rank {rank}")
    return {"points": pts, "rank": rank, "plane": plane, "hypothesis_ok": ok}


class PreconditionError(ValueError):
    pass


def bad_violation(x: Sequence, M, u: Sequence, eps) -> RationalVector | None:
    """First r/s with 1 <= s < M and ||s x - r||_u < eps/s, or None."""
    x, M, u, eps = vec(x), frac(M), vec(u), frac(eps)
    s = 1
    while s < M:
        r = tuple(round(s * xi) for xi in x)
        gap = tuple(s * xi - ri for xi, ri in zip(x, r))
        if weighted_norm_cmp(gap, u, eps / s) == "less":
            return RationalVector(r, s)
        s += 1
    return None


def approx_bound_ok(x: Sequence, p: Sequence[int], q: int, M: Fraction, beta: Fraction, u: Sequence) -> bool:
    """|x_i - p_i/q| <= M^-(1+u_i) beta^-u_i on every axis."""
    for xi, pi, ui in zip(x, p, u):
        err = abs(xi - Fraction(pi, q))
        # err <= M^-1 (M beta)^-u  <=>  (err M)^b <= (M beta)^-a
        if pow_cmp(err * M, ui, 1 / (M * beta)) > 0:
            return False
    return True


def intermediate_approximation(x: Sequence, M, beta, u: Sequence, eps,
                               budget: int = DEFAULT_BUDGET, check_bad: bool = True) -> RationalVector:
    x, M, beta, u, eps = vec(x), frac(M), frac(beta), vec(u), frac(eps)
    if M <= 1:
        raise PreconditionError("M must exceed 1")
    if not beta > 1 / eps:
        raise PreconditionError("beta must exceed 1/eps")
    if check_bad:
        if M > budget:
            raise BudgetExceeded("bad-approximability scan too long")
        v = bad_violation(x, M, u, eps)
        if v is not None:
            raise PreconditionError(f"x is too well approximated by {v.p}/{v.q}")
    qmax = math.floor(M * beta)
    if qmax - math.ceil(M) > budget:
        raise BudgetExceeded("scale too large for the q-scan")
    for q in range(math.ceil(M), qmax + 1):
        p = tuple(round(q * xi) for xi in x)
        if approx_bound_ok(x, p, q, M, beta, u):
            return RationalVector(p, q)
    raise AssertionError("no intermediate approximation found in [M, M beta]")
