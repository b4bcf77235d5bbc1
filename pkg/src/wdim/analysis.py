"""The piecewise-linear profile f, its exact minimum, local-dimension records and box counting."""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .numeric import Box, fmt, frac, vec
from .powers import RationalPow
from .schedule import ParameterSchedule
from .weights import AuxiliaryWeights


@dataclass(frozen=True)
class PiecewiseLinearProfile:
    d: int
    ratios: tuple[Fraction, ...]     # log rho_i / log rho_1 = (1+w~_i)/(1+w~_1)
    zeta: tuple[Fraction, ...]       # (1+tau w_i)/(1+w~_i)
    I_breaks: tuple[Fraction, ...]   # 1/ratio_h for h = 1..d, descending from 1
    J_breaks: tuple[Fraction, ...]   # 1/(zeta_k ratio_k) for k = 1..d, descending

    def to_json(self):
        return {"d": self.d, "ratios": [fmt(x) for x in self.ratios], "zeta": [fmt(x) for x in self.zeta],
                "I_breaks": [fmt(x) for x in self.I_breaks], "J_breaks": [fmt(x) for x in self.J_breaks]}


def profile_from(w: Sequence, tau, wt: Sequence) -> PiecewiseLinearProfile:
    w, tau, wt = vec(w), frac(tau), vec(wt)
    d = len(w)
    ratios = tuple((1 + x) / (1 + wt[0]) for x in wt)
    zeta = tuple((1 + tau * wi) / (1 + wti) for wi, wti in zip(w, wt))
    if any(a > b for a, b in zip(ratios, ratios[1:])) or any(z <= 1 for z in zeta):
        raise ValueError("profile needs ascending ratios and zeta_i > 1")
    return PiecewiseLinearProfile(d, ratios, zeta, tuple(1 / r for r in ratios),
                                  tuple(1 / (z * r) for z, r in zip(zeta, ratios)))


def make_profile(s: ParameterSchedule | tuple) -> PiecewiseLinearProfile:
    """Profile of a schedule, or of a (w, tau, aux) triple."""
    if isinstance(s, ParameterSchedule):
        return profile_from(s.w, s.tau, s.wt)
    w, tau, aux = s
    return profile_from(w, tau, aux.wtilde if isinstance(aux, AuxiliaryWeights) else aux)


def f_eval(p: PiecewiseLinearProfile, x) -> Fraction:
    x = frac(x)
    if not 0 <= x <= 1:
        raise ValueError("x must lie in [0,1]")
    return sum((min(r * x, Fraction(1)) + max(1 - z * r * x, Fraction(0))
                for r, z in zip(p.ratios, p.zeta)), Fraction(0))


def slope(p: PiecewiseLinearProfile, h: int, k: int) -> Fraction:
    return sum(p.ratios[:h], Fraction(0)) - sum((z * r for z, r in zip(p.zeta[:k], p.ratios[:k])), Fraction(0))


def f_hk(p: PiecewiseLinearProfile, h: int, k: int, x) -> Fraction:
    return k + p.d - h + slope(p, h, k) * frac(x)


def locate(p: PiecewiseLinearProfile, x) -> tuple[int, int]:
    """(h, k) with x in I_h and x in J_k, for x in (0,1]."""
    x = frac(x)
    if not 0 < x <= 1:
        raise ValueError("x must lie in (0,1]")
    h = max(j for j in range(1, p.d + 1) if x <= p.I_breaks[j - 1])
    k = max((j for j in range(1, p.d + 1) if x <= p.J_breaks[j - 1]), default=0)
    return h, k


def slopes_monotone(p: PiecewiseLinearProfile) -> bool:
    return all(slope(p, h, k) <= slope(p, h + 1, k) for k in range(p.d + 1) for h in range(1, p.d))


def prop_min(p: PiecewiseLinearProfile) -> tuple[Fraction, int, Fraction]:
    """Minimum of f over the candidate points 1/(zeta_k ratio_k); ties go to the smallest k."""
    if not slopes_monotone(p):
        raise AssertionError("segment slopes are not ordered")
    best = None
    for k in range(1, p.d + 1):
        x = p.J_breaks[k - 1]
        v = f_eval(p, x)
        if best is None or v < best[0]:
            best = (v, k, x)
    return best


def max_abs_slope(p: PiecewiseLinearProfile) -> Fraction:
    return max(abs(slope(p, h, k)) for h in range(1, p.d + 1) for k in range(p.d + 1))


def grid_min(p: PiecewiseLinearProfile, points: int = 10**4) -> Fraction:
    return min(f_eval(p, Fraction(j, points)) for j in range(points + 1))


# local dimension

@dataclass
class LocalDimRecord:
    box_id: int
    side: Fraction
    n: int
    n_B: int
    k: int
    count: int
    total: int
    mu_bound: Fraction         # count / #E_{n_B}
    mu_mass: Fraction          # exact mass of the boxes meeting B
    log_ell_mu: float          # log_ell of mu_bound
    lower: float               # the two main terms from tree counts
    f_main: float
    residual: float


def _find_n(rho1: RationalPow, ell: Fraction) -> int:
    n = 0
    while rho1 ** -(n + 1) > RationalPow(ell):
        n += 1
        if n > 10**4:
            raise ValueError("box side too small")
    return n


def local_dimension(t, trial_boxes: Sequence[Box]) -> list[LocalDimRecord]:
    s: ParameterSchedule = t.schedule
    rho1 = s.rho_i(1)
    log_rho1 = rho1.log_approx()
    prof = make_profile(s)
    out = []
    for j, B in enumerate(trial_boxes):
        ell = max(B.side)
        if not 0 < ell < 1:
            raise ValueError("box side out of range")
        n = _find_n(rho1, ell)
        if n < 1:
            raise ValueError(f"box side {fmt(ell)} is too large (need ell < 1/rho_1)")
        k = 0
        while k < s.k_max and s.level(k + 1).n < n:
            k += 1
        n_k = s.level(k).n if k else 0
        n_B = max(n, s.nd(k) + 1)
        if n_B > t.depth:
            raise ValueError(f"box side {fmt(ell)} needs level {n_B} beyond depth {t.depth}")
        level = t.levels[n_B]
        hit = [x for x in level if x.box.meets(B)]
        count, total = len(hit), len(level)
        mu_bound = Fraction(count, total)
        log_ell = math.log(ell.numerator) - math.log(ell.denominator)
        lower = math.log(total) / ((n + 1) * log_rho1) - math.log(count) / (n * log_rho1)
        f_main = float(f_eval(prof, Fraction(n_k, n)))
        out.append(LocalDimRecord(j, ell, n, n_B, k, count, total, mu_bound,
                                  sum((x.mu for x in hit), Fraction(0)),
                                  (math.log(count) - math.log(total)) / log_ell,
                                  lower, f_main, lower - f_main))
    return out


def local_dimension_csv(records: Sequence[LocalDimRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["box_id", "ell", "n", "n_B", "mu_bound", "log_ell_mu_approx", "f_main_term_approx",
                "residual_approx"])
    for r in records:
        w.writerow([r.box_id, fmt(r.side), r.n, r.n_B, fmt(r.mu_bound), f"{r.log_ell_mu:.12g}",
                    f"{r.f_main:.12g}", f"{r.residual:.12g}"])
    return buf.getvalue()


# box counting

def box_count(points: Sequence[Sequence], ell) -> int:
    ell = frac(ell)
    return len({tuple(math.floor(frac(c) / ell) for c in p) for p in points})


def box_counting(points: Sequence[Sequence], scales: Sequence) -> float:
    """Least-squares slope of log N(ell) against -log ell."""
    scales = sorted({frac(x) for x in scales})
    if len(scales) < 2 or any(x <= 0 for x in scales):
        raise ValueError("need at least two distinct positive scales")
    if not points:
        raise ValueError("no points")
    xs = [-(math.log(e.numerator) - math.log(e.denominator)) for e in scales]
    ys = [math.log(box_count(points, e)) for e in scales]
    return statistics.linear_regression(xs, ys).slope
