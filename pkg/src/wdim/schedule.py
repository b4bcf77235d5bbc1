"""Construction constants and the level sequences n_k, n_k^(i), eps_k, c_k."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .numeric import fmt, frac, vec
from .powers import LogRatio, RationalPow
from .weights import (AuxiliaryWeights, WeightVector, auxiliary_weights,
                      validate_weights)

MAX_R_DOUBLINGS = 64


class ScheduleError(ValueError):
    pass


@dataclass
class Level:
    n: int
    n_i: tuple[int, ...]
    eps: RationalPow          # eps_k
    c: Fraction               # c_k


@dataclass
class ParameterSchedule:
    w: WeightVector
    tau: Fraction
    delta: Fraction
    aux: AuxiliaryWeights
    R: Fraction
    xi: int
    xi0: Fraction
    alpha: Fraction
    alpha_prime: Fraction
    eps0: RationalPow
    levels: list[Level] = field(default_factory=list)
    mode: str = "faithful"
    eps_branch: Fraction | None = None
    rho0_override: tuple[Fraction, ...] | None = None
    horizon: int | None = None    # n_{k_max+1}, the last Case 1 level, when known

    @property
    def d(self) -> int:
        return self.w.d

    @property
    def wt(self):
        return self.aux.wtilde

    def rho0(self, i: int) -> RationalPow:
        """rho_0^(i) for 1-based i."""
        if self.rho0_override is not None:
            return RationalPow(self.rho0_override[i - 1])
        return RationalPow(self.R, -(1 + self.wt[i - 1])) / math.factorial(self.d + 1)

    def rho_i(self, i: int) -> RationalPow:
        return RationalPow(self.R, 1 + self.wt[i - 1])

    def rho_floor(self, i: int) -> int:
        return self.rho_i(i).floor()

    @property
    def rho(self) -> int:
        return math.prod(self.rho_floor(i) for i in range(1, self.d + 1))

    def Rp(self, e) -> RationalPow:
        return RationalPow(self.R, e)

    def eps(self, k: int) -> RationalPow:
        """eps_k for k >= 0."""
        return self.eps0 if k == 0 else self.levels[k - 1].eps

    def level(self, k: int) -> Level:
        return self.levels[k - 1]

    @property
    def k_max(self) -> int:
        return len(self.levels)

    def nd(self, k: int) -> int:
        """n_k^(d), with n_0^(d) = 0."""
        return 0 if k == 0 else self.level(k).n_i[-1]


def alpha_of(w, tau, wt) -> Fraction:
    return max(tau * wi / wti for wi, wti in zip(w, wt))


def alpha_prime_of(w) -> Fraction:
    diffs = [wk - w[0] for wk in w if wk != w[0]]
    return min(diffs) if diffs else Fraction(1)


def xi_of(xi0: Fraction) -> int:
    c = math.ceil(xi0)
    return c + 1 if c == xi0 else c


def minimal_R(d: int, wt1: Fraction) -> int:
    """Smallest power of two with R^(1+w~_1) > 8 (d+1)!."""
    bound = 8 * math.factorial(d + 1)
    R = 2
    while RationalPow(R, 1 + wt1).cmp(bound) <= 0:
        R *= 2
    return R


def eps0_of(R, d: int, wt1: Fraction) -> RationalPow:
    return RationalPow(R, -2 * (1 + 1 / wt1)) * RationalPow(math.factorial(d + 1), -1 / wt1)


def base_constants(w, tau, delta, R=None) -> ParameterSchedule:
    w = w if isinstance(w, WeightVector) else validate_weights(w)
    tau, delta = frac(tau), frac(delta)
    aux = auxiliary_weights(w, tau, delta)
    wt = aux.wtilde
    d = w.d
    xi0 = (1 + tau * w[d - 1]) / (1 + wt[0]) + 1
    R = frac(R) if R is not None else Fraction(minimal_R(d, wt[0]))
    return ParameterSchedule(w=w, tau=tau, delta=delta, aux=aux, R=R, xi=xi_of(xi0), xi0=xi0,
                             alpha=alpha_of(w, tau, wt), alpha_prime=alpha_prime_of(w),
                             eps0=eps0_of(R, d, wt[0]))


def nk_bracket(s: ParameterSchedule) -> Fraction:
    """The max of the three bracketed terms bounding n_k."""
    tau, w, wt, d = s.tau, s.w, s.wt, s.d
    first = (2 * (1 + tau * w[0]) / (1 + wt[0]) + d + 1) / (
        s.alpha_prime * (tau * w[0] - wt[0]) * (1 - 1 / (1 + wt[0])))
    return max(first, Fraction(4), 2 / (tau - 1))


def log_R(s: ParameterSchedule, x: RationalPow) -> LogRatio:
    return LogRatio(x, RationalPow(s.R))


def n_i_of(s: ParameterSchedule, n: int, eps_prev: RationalPow) -> tuple[int, ...]:
    """floor((1+tau w_i)/(1+w~_i) (n - 2 log_R eps_prev)) + 1 for each i."""
    base = log_R(s, eps_prev) * -2 + n
    return tuple((base * ((1 + s.tau * wi) / (1 + wti))).floor() + 1 for wi, wti in zip(s.w, s.wt))


def eps_next(s: ParameterSchedule, n: int, nd: int) -> RationalPow:
    return RationalPow(2, -1 / (s.w[0] * s.wt[0])) * s.Rp(-(s.alpha * (nd + 1) - n))


def c_of(eps_prev: RationalPow) -> Fraction:
    """1 - c_k is 2 eps_{k-1} rounded up to a power of two, unless that drops c_k to 3/4 or below."""
    j = LogRatio(eps_prev, RationalPow(2)).ceil() + 1
    c = 1 - Fraction(2) ** j
    return c if c > Fraction(3, 4) else Fraction(7, 8)


def build_faithful(s: ParameterSchedule, k_max: int) -> ParameterSchedule:
    s.levels = []
    s.mode = "faithful"
    M = nk_bracket(s)
    for k in range(1, k_max + 1):
        eps_prev = s.eps(k - 1)
        n = max((log_R(s, eps_prev) * -M).ceil(), s.xi * s.nd(k - 1) + 1, 1)
        n_i = n_i_of(s, n, eps_prev)
        s.levels.append(Level(n, n_i, eps_next(s, n, n_i[-1]), c_of(eps_prev)))
    return s


def build_toy(s: ParameterSchedule, k_max: int, overrides: dict) -> ParameterSchedule:
    """Toy schedule: n, eps, c, R, xi and optionally n_i taken from overrides."""
    s.mode = "toy"
    if "R" in overrides:
        s.R = frac(overrides["R"])
    if "xi" in overrides:
        s.xi = int(overrides["xi"])
    eps_list = [frac(e) for e in overrides.get("eps", [])]
    s.eps0 = RationalPow(eps_list[0]) if eps_list else eps0_of(s.R, s.d, s.wt[0])
    ns = [int(n) for n in overrides["n"]]
    n_is = overrides.get("n_i")
    cs = overrides.get("c")
    s.levels = []
    for k in range(1, k_max + 1):
        n = ns[k - 1]
        eps_prev = s.eps(k - 1)
        n_i = tuple(int(v) for v in n_is[k - 1]) if n_is else n_i_of(s, n, eps_prev)
        if any(a > b for a, b in zip(n_i, n_i[1:])):
            raise ScheduleError(f"n_{k}^(i) not ascending: {n_i}")
        eps_k = RationalPow(eps_list[k]) if len(eps_list) > k else eps_next(s, n, n_i[-1])
        c = frac(cs[k - 1]) if cs else c_of(eps_prev)
        if not 0 < c < 1:
            raise ScheduleError(f"c_{k} = {c} outside (0,1)")
        s.levels.append(Level(n, n_i, eps_k, c))
    if "eps_branch" in overrides:
        s.eps_branch = frac(overrides["eps_branch"])
    if "rho0" in overrides:
        s.rho0_override = vec(overrides["rho0"])
        if len(s.rho0_override) != s.d or not all(0 < r <= 1 for r in s.rho0_override):
            raise ScheduleError("rho0 override needs d entries in (0,1]")
    if len(ns) > k_max:
        s.horizon = ns[k_max]
        if s.horizon <= s.xi * s.nd(k_max):
            raise ScheduleError("horizon must exceed xi n_k^(d) of the last epoch")
    return s


# branching displays

def alpha_k(s: ParameterSchedule, k: int) -> int:
    return s.xi * s.nd(k) - s.nd(k) - 1


def branch_first(s: ParameterSchedule, k: int, eps) -> tuple[RationalPow, RationalPow]:
    d, ak = s.d, alpha_k(s, k)
    lv = s.level(k)
    lhs = RationalPow(s.rho, -ak * (1 - frac(eps)))
    rhs = (RationalPow(2, -(3 * d + 1)) * s.rho0(1)
           * s.Rp((s.tau * s.w[0] - s.wt[0]) * lv.n_i[0]) * s.Rp(-(d + 1) * ak))
    return lhs, rhs


def branch_second(s: ParameterSchedule, k: int, eps) -> tuple[RationalPow, RationalPow]:
    return RationalPow(s.rho, -alpha_k(s, k) * frac(eps) / 2), RationalPow(Fraction(1, 2))


def choose_eps_branch(s: ParameterSchedule, steps: int = 60) -> Fraction | None:
    """Largest dyadic eps (to 2^-steps) in (0,1) meeting the first display for all k, by bisection."""
    def ok(e):
        return all(branch_first(s, k, e)[0] <= branch_first(s, k, e)[1] for k in range(1, s.k_max + 1))
    if not ok(Fraction(0)):
        return None
    lo, hi = Fraction(0), Fraction(1)
    for _ in range(steps):
        mid = (lo + hi) / 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo if lo > 0 else None


def branch_second_ok(s: ParameterSchedule, eps) -> bool:
    return all(a <= b for a, b in (branch_second(s, k, eps) for k in range(1, s.k_max + 1)))


def build_schedule(w, tau, delta, k_max: int, mode: str = "faithful", toy_overrides: dict | None = None,
                   R=None) -> ParameterSchedule:
    if mode == "toy":
        s = base_constants(w, tau, delta, R=(toy_overrides or {}).get("R", R))
        return build_toy(s, k_max, toy_overrides or {})
    if mode != "faithful":
        raise ScheduleError(f"unknown mode {mode!r}")
    s = base_constants(w, tau, delta, R)
    for _ in range(MAX_R_DOUBLINGS):
        build_faithful(s, k_max)
        e = choose_eps_branch(s)
        if e is not None and branch_second_ok(s, e):
            s.eps_branch = e
            return s
        # the second display wants R large: move to the next power of two and rebuild
        s = base_constants(w, tau, delta, 2 * s.R)
    raise ScheduleError("no R found satisfying both branching displays")


# verification

@dataclass
class Check:
    name: str
    k: int
    ok: bool
    lhs: object = None
    rhs: object = None

    def to_json(self):
        out = {"name": self.name, "k": self.k, "pass": self.ok}
        for key, v in (("lhs", self.lhs), ("rhs", self.rhs)):
            if isinstance(v, RationalPow):
                out[key] = v.to_json()
                out[key + "_log_approx"] = v.log_approx()
            elif isinstance(v, (Fraction, int)):
                out[key] = fmt(Fraction(v))
        if isinstance(self.lhs, RationalPow) and isinstance(self.rhs, RationalPow):
            out["log_margin_approx"] = (self.rhs / self.lhs).log_approx()
        return out


@dataclass
class ScheduleReport:
    checks: list[Check]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]

    def to_json(self):
        return {"pass": self.ok, "checks": [c.to_json() for c in self.checks]}


def _le(name, k, lhs, rhs) -> Check:
    return Check(name, k, RationalPow.lift(lhs).cmp(rhs) <= 0, lhs, rhs)


def _lt(name, k, lhs, rhs) -> Check:
    return Check(name, k, RationalPow.lift(lhs).cmp(rhs) < 0, lhs, rhs)


def volnpi_terms(s: ParameterSchedule, k: int, n: int) -> list[RationalPow]:
    lv = s.level(k)
    return [s.Rp(-(1 + s.tau * s.w[j]) * n) / (s.rho0(j + 1) * s.Rp(-(1 + s.wt[j]) * max(n, lv.n_i[j])))
            for j in range(s.d)]


def verify_schedule(s: ParameterSchedule) -> ScheduleReport:
    checks: list[Check] = []
    tau, w, wt, d, R = s.tau, s.w, s.wt, s.d, s.R
    add = checks.append
    if s.mode == "faithful":
        add(Check("R_bound", 0, RationalPow(R, 1 + wt[0]).cmp(8 * math.factorial(d + 1)) > 0,
                  RationalPow(R, 1 + wt[0]), Fraction(8 * math.factorial(d + 1))))
    add(Check("alpha_ge_1", 0, s.alpha >= 1, s.alpha, Fraction(1)))
    add(Check("xi_ge_xi0", 0, s.xi >= s.xi0, Fraction(s.xi), s.xi0))
    M = nk_bracket(s)
    for k in range(1, s.k_max + 1):
        lv = s.level(k)
        ep = s.eps(k - 1)
        chain = [lv.n, *lv.n_i]
        add(Check("order_n_ni", k, all(a <= b for a, b in zip(chain, chain[1:]))))
        add(Check("order_xi", k, lv.n_i[-1] < s.xi * lv.n_i[-1]))
        if k < s.k_max:
            add(Check("order_next", k, s.xi * lv.n_i[-1] < s.level(k + 1).n))
        if s.mode == "faithful":
            add(Check("nk", k, (log_R(s, ep) * -M).cmp(lv.n) <= 0))
            add(Check("nki", k, lv.n_i == n_i_of(s, lv.n, ep)))
        add(Check("ck_range", k, Fraction(3, 4) < lv.c < 1, lv.c))
        add(_lt("ck_gap", k, ep, 1 - lv.c))
        if k > 1 or s.mode == "faithful":
            add(_lt("eps_decreasing", k, lv.eps, ep))
        add(_le("wave", k, s.Rp(lv.n_i[0]), s.Rp((1 + tau * w[0] - wt[0]) * lv.n) * ep ** d))
        for i in range(d):
            add(_le(f"ckcond[{i + 1}]", k, s.Rp(-(1 + wt[i]) * lv.n_i[i]),
                    (1 - lv.c) * ep ** (1 + tau * w[i]) / s.Rp(lv.n * (1 + tau * w[i]))))
        add(Check("nkdup", k, lv.n_i[-1] <= 2 * (1 + tau * w[-1]) / (1 + wt[-1]) * lv.n,
                  Fraction(lv.n_i[-1]), 2 * (1 + tau * w[-1]) / (1 + wt[-1]) * lv.n))
        for n in sorted({lv.n_i[0], *lv.n_i, lv.n_i[-1] + 1}):
            terms = volnpi_terms(s, k, n)
            worst = max(range(d), key=lambda j: (terms[j].cmp(terms[0]), -j))
            add(_le(f"volnpi[n={n}]", k, terms[worst], terms[0]))
        add(_lt("tail_gap", k, s.rho0(1) * s.Rp(-(1 + wt[0]) * s.xi * lv.n_i[-1]),
                s.Rp(-(1 + tau * w[-1]) * (lv.n_i[-1] + 1))))
        if s.eps_branch is not None:
            add(_le("branch_first", k, *branch_first(s, k, s.eps_branch)))
            add(_le("branch_second", k, *branch_second(s, k, s.eps_branch)))
    return ScheduleReport(checks)


# serialisation

def schedule_to_json(s: ParameterSchedule) -> dict:
    return {
        "schema": "wdim.schedule/1",
        "mode": s.mode,
        "w": [fmt(x) for x in s.w],
        "tau": fmt(s.tau),
        "delta": fmt(s.delta),
        "aux": {"wtilde": [fmt(x) for x in s.wt], "K": s.aux.K, "delta0": fmt(s.aux.delta0)},
        "R": fmt(s.R),
        "xi": s.xi,
        "xi0": fmt(s.xi0),
        "alpha": fmt(s.alpha),
        "alpha_prime": fmt(s.alpha_prime),
        "eps0": s.eps0.to_json(),
        "eps_branch": None if s.eps_branch is None else fmt(s.eps_branch),
        "rho0": [s.rho0(i).to_json() for i in range(1, s.d + 1)],
        "rho_i": [s.rho_i(i).to_json() for i in range(1, s.d + 1)],
        "rho": str(s.rho),
        "rho0_override": None if s.rho0_override is None else [fmt(x) for x in s.rho0_override],
        "horizon": s.horizon,
        "levels": [{"k": k, "n": str(lv.n), "n_i": [str(v) for v in lv.n_i],
                    "eps": lv.eps.to_json(), "c": fmt(lv.c)}
                   for k, lv in enumerate(s.levels, start=1)],
    }


def schedule_from_json(obj: dict) -> ParameterSchedule:
    w = validate_weights(obj["w"])
    aux = AuxiliaryWeights(vec(obj["aux"]["wtilde"]), int(obj["aux"]["K"]), frac(obj["delta"]),
                           frac(obj["aux"]["delta0"]))
    tau = frac(obj["tau"])
    s = ParameterSchedule(w=w, tau=tau, delta=frac(obj["delta"]), aux=aux, R=frac(obj["R"]),
                          xi=int(obj["xi"]), xi0=frac(obj["xi0"]), alpha=frac(obj["alpha"]),
                          alpha_prime=frac(obj["alpha_prime"]), eps0=RationalPow.from_json(obj["eps0"]),
                          mode=obj["mode"],
                          eps_branch=None if obj["eps_branch"] is None else frac(obj["eps_branch"]),
                          rho0_override=None if obj.get("rho0_override") is None
                          else vec(obj["rho0_override"]),
                          horizon=obj.get("horizon"))
    s.levels = [Level(int(lv["n"]), tuple(int(v) for v in lv["n_i"]), RationalPow.from_json(lv["eps"]),
                      frac(lv["c"])) for lv in obj["levels"]]
    return s


def dumps(s: ParameterSchedule) -> str:
    return json.dumps(schedule_to_json(s), indent=2, sort_keys=True)
