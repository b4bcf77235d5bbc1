"""Toy-mode Cantor construction: nested box collections, danger regions, measure and brute-force checks."""

from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .lattice import PreconditionError, intermediate_approximation, simplex_hypothesis
from .numeric import (DEFAULT_BUDGET, AffinePlane, Box, BudgetExceeded, RationalVector, affine_hull,
                      dangerous_rationals, fmt, frac, plane_meets_box, subdivide, tau_rationals, vec)
from .powers import RationalPow
from .schedule import ParameterSchedule, schedule_from_json, schedule_to_json, verify_schedule

DEFAULT_MAX_BOXES = 10**6


class CantorError(RuntimeError):
    def __init__(self, msg: str, level: int | None = None, node: int | None = None):
        where = "" if level is None else f" (level {level}" + ("" if node is None else f", node {node}") + ")"
        super().__init__(msg + where)
        self.level, self.node = level, node


@dataclass(frozen=True)
class Approx:
    k: int
    p: tuple[int, ...]
    q: int
    y: tuple[Fraction, ...]
    c: Fraction
    bad_ok: bool          # the centre met the bad-approximability hypothesis

    def to_json(self):
        return {"k": self.k, "p": list(self.p), "q": self.q, "y": [fmt(v) for v in self.y],
                "c": fmt(self.c), "bad_ok": self.bad_ok}

    @classmethod
    def from_json(cls, o):
        return cls(o["k"], tuple(o["p"]), o["q"], vec(o["y"]), frac(o["c"]), o["bad_ok"])


@dataclass
class Node:
    box: Box
    parent: int
    approx: Approx | None = None
    anchor: int | None = None     # index of the level n_k^(d) ancestor inside Cases 3 and 4
    mu: Fraction = Fraction(0)
    children: list[int] = field(default_factory=list)


@dataclass
class LevelInfo:
    level: int
    k: int
    case: str
    candidates: int = 0
    removed_plane: int = 0
    removed_danger: int = 0
    fallback: int = 0             # parents whose dangerous set was not coplanar
    hypothesis_failed: int = 0    # parents where the simplex-lemma side bound fails
    coplanarity_violations: int = 0    # hypothesis held yet points spanned full rank
    bad_failed: int = 0           # Case 2 centres violating bad-approximability
    pruned: int = 0


@dataclass
class DangerPiece:
    n: int
    cell: Box
    plane: AffinePlane | None
    points: tuple[tuple[Fraction, ...], ...]
    thick: tuple[Fraction, ...]


@dataclass
class DangerRegion:
    k: int
    anchor: int
    pieces: list[DangerPiece]
    boxes: list[Box]              # the J-boxes of the collection A_k(E)
    hypothesis_failed: int = 0


@dataclass
class CantorTree:
    schedule: ParameterSchedule
    levels: list[list[Node]]
    info: list[LevelInfo]
    danger: dict[int, list[DangerRegion]] = field(default_factory=dict)
    corrupted: list[dict] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def count(self, l: int) -> int:
        return len(self.levels[l])

    def ancestor(self, l: int, idx: int, target: int) -> int:
        while l > target:
            idx = self.levels[l][idx].parent
            l -= 1
        return idx


# regimes and side lengths

def _rat(x: RationalPow, what: str) -> Fraction:
    if not x.is_rational():
        raise CantorError(f"toy-infeasible: {what} is irrational")
    return x.to_fraction()


def check_structure(s: ParameterSchedule) -> None:
    if s.xi < 2:
        raise CantorError("xi must be at least 2")
    prev = 0
    for k in range(1, s.k_max + 1):
        lv = s.level(k)
        if not prev < lv.n <= lv.n_i[0]:
            raise CantorError(f"need xi n_{k - 1}^(d) < n_{k} <= n_{k}^(1)")
        if any(a > b for a, b in zip(lv.n_i, lv.n_i[1:])):
            raise CantorError(f"n_{k}^(i) not ascending")
        prev = s.xi * lv.n_i[-1]


def level_regime(s: ParameterSchedule, l: int) -> tuple[int, str]:
    if l < 0:
        raise CantorError("negative level")
    if l == 0:
        return 0, "root"
    for k in range(0, s.k_max + 1):
        if k >= 1:
            n, nd = s.level(k).n, s.nd(k)
            if n < l <= nd:
                return k, "case2"
            if l == nd + 1:
                return k, "case3"
            if nd + 2 <= l <= s.xi * nd:
                return k, "case4"
        n_next = s.level(k + 1).n if k < s.k_max else s.horizon
        if n_next is None:
            break
        if l <= n_next:
            return k, "case1"
    raise CantorError(f"level {l} beyond the schedule horizon")


def horizon(s: ParameterSchedule) -> int:
    return s.horizon if s.horizon is not None else s.xi * s.nd(s.k_max)


def side_powers(s: ParameterSchedule, l: int) -> list[RationalPow]:
    k, case = level_regime(s, l)
    out = []
    for i in range(1, s.d + 1):
        m = min(l, s.level(k).n_i[i - 1]) if case == "case2" else l
        out.append(s.rho0(i) * s.Rp(-(1 + s.wt[i - 1]) * m))
    return out


def side_lengths(s: ParameterSchedule, l: int) -> tuple[Fraction, ...]:
    return tuple(_rat(x, f"side length at level {l}") for x in side_powers(s, l))


def _R_ceil(s: ParameterSchedule, e: int) -> int:
    return math.ceil(s.R ** e)


# refinement

def init_level0(s: ParameterSchedule, max_boxes: int = DEFAULT_MAX_BOXES) -> list[Node]:
    side = side_lengths(s, 0)
    count = math.prod(math.floor(1 / x) for x in side)
    if count > max_boxes:
        raise BudgetExceeded(f"level 0 would hold {count} boxes")
    unit = Box((0,) * s.d, (1,) * s.d)
    full, _ = subdivide(unit, side)
    mu = Fraction(1, len(full))
    return [Node(b, -1, mu=mu) for b in full]


def _thick_meets(center, radii, thick, plane, points) -> bool:
    r = tuple(a + b for a, b in zip(radii, thick))
    if plane is not None:
        return plane_meets_box(plane, center, r)
    return any(all(abs(c - z) <= ri for c, z, ri in zip(center, p, r)) for p in points)


def plane_removal(s: ParameterSchedule, E: Box, children: list[Box], l: int, info: LevelInfo,
                  budget: int = DEFAULT_BUDGET) -> list[Box]:
    """Children of E meeting the thickened plane through the eps0-dangerous r/s with R^(l-1) <= s < R^l."""
    eps0 = _rat(s.eps0, "eps0")
    s_lo, s_hi = _R_ceil(s, l - 1), _R_ceil(s, l)
    if s_lo >= s_hi:
        return []
    pts = dangerous_rationals(E, s_lo, s_hi, s.wt, eps0, budget)
    if not pts:
        return []
    points = [p.point() for p in pts]
    rank, plane = affine_hull(points, s.d)
    hyp = simplex_hypothesis(E, l - 1, s.R, s.wt, eps0)
    info.hypothesis_failed += not hyp
    if plane is None:
        info.fallback += 1
        info.coplanarity_violations += hyp
    thick = tuple(_rat(RationalPow(eps0) ** wi * s.Rp(-(l - 1) * (1 + wi)), "plane thickness")
                  for wi in s.wt)
    return [F for F in children if _thick_meets(F.center, F.radii, thick, plane, points)]


def _grid_child(E: Box, side: Sequence[Fraction], y: Sequence[Fraction]) -> Box:
    lo = []
    for a, b, sd, yi in zip(E.lo, E.hi, side, y):
        m = math.floor((b - a) / sd)
        j = math.floor((yi - a) / sd)
        if j > 0 and yi - a == j * sd:
            j -= 1                     # ties go to the lower box
        lo.append(b - sd if j >= m else a + j * sd)
    return Box(tuple(lo), tuple(x + sd for x, sd in zip(lo, side)))


def case2_start(s: ParameterSchedule, E: Box, k: int, budget: int = DEFAULT_BUDGET) -> Approx:
    lv = s.level(k)
    eps = _rat(s.eps(k - 1), f"eps_{k - 1}")
    M = s.R ** lv.n
    beta = 1 / eps + 1
    z = E.center
    bad_ok = True
    try:
        pq = intermediate_approximation(z, M, beta, s.wt, eps, budget)
    except PreconditionError:
        bad_ok = False
        pq = intermediate_approximation(z, M, beta, s.wt, eps, budget, check_bad=False)
    y = []
    for i, (zi, pi) in enumerate(zip(z, pq.p)):
        base = Fraction(pi, pq.q)
        off = lv.c * _rat(RationalPow(pq.q, -(1 + s.tau * s.w[i])), "q^-(1+tau w_i)")
        first = 1 if zi >= base else -1
        for sign in (first, -first):
            yi = base + sign * off
            if E.lo[i] <= yi <= E.hi[i]:
                y.append(yi)
                break
        else:
            raise CantorError(f"no point y in E at distance c_k/q^(1+tau w_{i + 1}) from p/q")
    return Approx(k, pq.p, pq.q, tuple(y), lv.c, bad_ok)


def case2_child(s: ParameterSchedule, E: Box, l: int, a: Approx) -> Box:
    return _grid_child(E, side_lengths(s, l), a.y)


def build_danger_region(s: ParameterSchedule, E: Box, k: int, anchor: int,
                        budget: int = DEFAULT_BUDGET) -> DangerRegion:
    lv = s.level(k)
    nd = lv.n_i[-1]
    eps_hyp = s.Rp(-lv.n * (s.tau - 1))
    eps_hyp = eps_hyp.to_fraction() if eps_hyp.is_rational() else None
    pieces, hyp_failed = [], 0
    for n in range(lv.n_i[0], nd + 2):
        side = tuple(_rat(s.rho0(i) * s.Rp(-(1 + s.wt[i - 1]) * max(n, lv.n_i[i - 1])), "cell side")
                     for i in range(1, s.d + 1))
        thick = tuple(_rat(s.Rp(-(1 + s.tau * wi) * n), "tau thickness") for wi in s.w)
        s_lo, s_hi = _R_ceil(s, n), _R_ceil(s, n + 1)
        if s_lo >= s_hi:
            continue
        full, rem = subdivide(E, side)
        for I in full + rem:
            pts = tau_rationals(I, s_lo, s_hi, s.w, s.tau, budget)
            if not pts:
                continue
            points = tuple(p.point() for p in pts)
            _, plane = affine_hull(points, s.d)
            if eps_hyp is None or not simplex_hypothesis(I, n, s.R, s.w, eps_hyp):
                hyp_failed += 1
            pieces.append(DangerPiece(n, I, plane, points if plane is None else (), thick))
    J = [E]
    for l in range(nd + 1, s.xi * nd + 1):
        side = side_lengths(s, l)
        J = [c for B in J for c in subdivide(B, side)[0]]
    marked = [Jb for Jb in J if any(_piece_meets(p, Jb) for p in pieces)]
    return DangerRegion(k, anchor, pieces, marked, hyp_failed)


def _piece_meets(p: DangerPiece, J: Box) -> bool:
    if not p.cell.meets(J):
        return False
    lo = tuple(max(a, b) for a, b in zip(p.cell.lo, J.lo))
    hi = tuple(min(a, b) for a, b in zip(p.cell.hi, J.hi))
    center = tuple((a + b) / 2 for a, b in zip(lo, hi))
    radii = tuple((b - a) / 2 for a, b in zip(lo, hi))
    return _thick_meets(center, radii, p.thick, p.plane, p.points)


def danger_threshold(s: ParameterSchedule, k: int, l: int) -> RationalPow:
    if s.eps_branch is None:
        raise CantorError("eps_branch must be configured for Cases 3 and 4")
    return RationalPow(s.rho, (s.xi * s.nd(k) - l) * (1 - s.eps_branch / 2))


def danger_removal(s: ParameterSchedule, region: DangerRegion, children: list[Box], k: int, l: int) -> list[Box]:
    thr = danger_threshold(s, k, l)
    out = []
    for F in children:
        m = sum(1 for J in region.boxes if F.contains_box(J))
        if m and thr.cmp(m) <= 0:
            out.append(F)
    return out


def build_tree(s: ParameterSchedule, depth: int | None = None, budget: int = DEFAULT_BUDGET,
               max_boxes: int = DEFAULT_MAX_BOXES, corrupt_level: int | None = None,
               prune: bool = True) -> CantorTree:
    """Levels 0..depth by regime dispatch.

    corrupt_level is a negative control: one box that should be removed at that level is kept, and
    its descendants skip every later removal test.
    """
    if s.mode != "toy":
        raise CantorError("trees are only materialised for toy schedules")
    check_structure(s)
    depth = horizon(s) if depth is None else depth
    level_regime(s, depth)
    t = CantorTree(s, [init_level0(s, max_boxes)], [LevelInfo(0, 0, "root")])
    t.info[0].candidates = len(t.levels[0])
    tainted: set[int] = set()       # descendants of a corrupted box are never re-tested
    for l in range(1, depth + 1):
        k, case = level_regime(s, l)
        info = LevelInfo(l, k, case)
        prev, cur = t.levels[l - 1], []
        now_tainted: set[int] = set()
        side = side_lengths(s, l)
        if case == "case3":
            t.danger[k] = [build_danger_region(s, E.box, k, idx, budget) for idx, E in enumerate(prev)]
        for idx, E in enumerate(prev):
            try:
                if case == "case2":
                    if E.approx is not None and E.approx.k == k:
                        a = E.approx
                    else:
                        a = case2_start(s, E.box, k, budget)
                        info.bad_failed += not a.bad_ok
                    info.candidates += 1
                    if idx in tainted:
                        now_tainted.add(len(cur))
                    cur.append(Node(case2_child(s, E.box, l, a), idx, approx=a))
                    continue
                kids, _ = subdivide(E.box, side)
                info.candidates += len(kids)
                removed: set[Box] = set()
                if case in ("case1", "case4"):
                    rp = plane_removal(s, E.box, kids, l, info, budget)
                    info.removed_plane += len(rp)
                    removed.update(rp)
                anchor = None
                if case in ("case3", "case4"):
                    anchor = idx if case == "case3" else E.anchor
                    region = t.danger[k][anchor]
                    rd = [F for F in danger_removal(s, region, kids, k, l) if F not in removed]
                    info.removed_danger += len(rd)
                    removed.update(rd)
                keep = None
                if idx in tainted:
                    removed = set()
                elif corrupt_level == l and removed and not t.corrupted:
                    keep = _corruption_target(s, k, sorted(removed, key=lambda b: b.lo))
                    if keep is not None:
                        removed.discard(keep)
                        t.corrupted.append({"level": l, "parent": idx, "box": keep.to_json()})
                for F in kids:
                    if F not in removed:
                        if idx in tainted or F == keep:
                            now_tainted.add(len(cur))
                        cur.append(Node(F, idx, anchor=anchor))
            except (CantorError, BudgetExceeded, PreconditionError, ValueError) as e:
                raise CantorError(f"{type(e).__name__}: {e}", l, idx) from e
            if len(cur) > max_boxes:
                raise BudgetExceeded(f"level {l} exceeds {max_boxes} boxes")
        if case == "case4" and l == s.xi * s.nd(k) and not t.corrupted:
            marked = {J for region in t.danger[k] for J in region.boxes}
            hit = [n.box for n in cur if n.box in marked]
            if hit:
                raise CantorError(f"surviving box {hit[0].to_json()} lies in the danger collection", l)
        t.levels.append(cur)
        t.info.append(info)
        tainted = now_tainted
        if not cur:
            raise CantorError("every box was removed", l)
    if prune:
        _prune(t)
    _assign_mu(t)
    return t


def _corruption_target(s: ParameterSchedule, k: int, removed: list[Box]) -> Box | None:
    """A removed box that visibly breaks the P3 scan if kept, or None."""
    if k < 1:
        return None
    lv = s.level(k)
    s_lo, s_hi = _R_ceil(s, lv.n_i[0]), _R_ceil(s, lv.n_i[-1] + 1)
    for F in removed:
        if s_lo < s_hi and tau_rationals(F, s_lo, s_hi, s.w, s.tau):
            return F
    return None


def _prune(t: CantorTree) -> None:
    """Drop boxes with no descendant at the final level and reindex."""
    for l in range(t.depth - 1, -1, -1):
        alive = {n.parent for n in t.levels[l + 1]}
        keep = [i for i in range(len(t.levels[l])) if i in alive]
        t.info[l].pruned += len(t.levels[l]) - len(keep)
        if len(keep) == len(t.levels[l]):
            continue
        remap = {old: new for new, old in enumerate(keep)}
        t.levels[l] = [t.levels[l][i] for i in keep]
        for n in t.levels[l + 1]:
            n.parent = remap[n.parent]
        if t.info[l + 1].case == "case3":
            k = t.info[l + 1].k
            t.danger[k] = [t.danger[k][i] for i in keep]
            for j, r in enumerate(t.danger[k]):
                r.anchor = j
            for lv in range(l + 1, t.depth + 1):
                if t.info[lv].k == k and t.info[lv].case in ("case3", "case4"):
                    for n in t.levels[lv]:
                        n.anchor = remap[n.anchor]


def _assign_mu(t: CantorTree) -> None:
    for level in t.levels:
        for n in level:
            n.children = []
    for l in range(1, t.depth + 1):
        for idx, n in enumerate(t.levels[l]):
            t.levels[l - 1][n.parent].children.append(idx)
    root = t.levels[0]
    for n in root:
        n.mu = Fraction(1, len(root))
    for l in range(1, t.depth + 1):
        for n in t.levels[l]:
            par = t.levels[l - 1][n.parent]
            n.mu = par.mu / len(par.children)


def sample_point(t: CantorTree, seed=None) -> tuple[Fraction, ...]:
    """Centre of a deepest box drawn from mu (uniform among siblings at every step)."""
    if not t.levels or not t.levels[0]:
        raise CantorError("empty tree")
    rng = random.Random(seed)
    idx = rng.randrange(len(t.levels[0]))
    for l in range(1, t.depth + 1):
        idx = rng.choice(t.levels[l - 1][idx].children)
    return t.levels[t.depth][idx].box.center


# verification

@dataclass
class PropertyResult:
    prop: str
    level: int
    node: int
    ok: bool | None               # None when the scan was skipped
    precondition_ok: bool
    witness: dict | None = None
    detail: str = ""

    def to_json(self):
        return {"prop": self.prop, "level": self.level, "node": self.node, "ok": self.ok,
                "precondition_ok": self.precondition_ok, "witness": self.witness, "detail": self.detail}


def _clamp_point(F: Box, r: RationalVector) -> list[str]:
    return [fmt(min(max(Fraction(ri, r.q), a), b)) for ri, a, b in zip(r.p, F.lo, F.hi)]


def _witness(F: Box, hits: list[RationalVector]) -> dict:
    r = hits[0]
    return {"s": r.q, "r": list(r.p), "x": _clamp_point(F, r), "count": len(hits)}


def _schedule_flags(s: ParameterSchedule) -> dict[int, dict[str, bool]]:
    rep = verify_schedule(s)
    flags: dict[int, dict[str, bool]] = {}
    for c in rep.checks:
        key = c.name.split("[")[0]
        d = flags.setdefault(c.k, {})
        d[key] = d.get(key, True) and c.ok
    return flags


def _p1_uniqueness_pre(s: ParameterSchedule, k: int, flags) -> bool:
    """The inequalities the uniqueness half of P1 rests on, for epoch k."""
    lv, d = s.level(k), s.d
    ep = s.eps(k - 1)
    big = s.Rp((s.tau * s.w[0] - s.wt[0]) * lv.n).cmp(ep ** -(d + 1)) >= 0
    small = (ep * math.factorial(d + 1)).cmp(1) < 0
    return flags.get(k, {}).get("wave", False) and big and small


DIAGNOSTIC_SCAN_LIMIT = 10**5


def check_p1(t: CantorTree, l: int, flags=None, scan_limit: int = DIAGNOSTIC_SCAN_LIMIT) -> list[PropertyResult]:
    """P1 at l = n_k^(d). The uniqueness scan is skipped when its preconditions fail
    and it would cover more than scan_limit denominators."""
    s = t.schedule
    k, _ = level_regime(s, l)
    if k < 1 or l != s.nd(k):
        return []
    flags = _schedule_flags(s) if flags is None else flags
    lv = s.level(k)
    ckcond = flags.get(k, {}).get("ckcond", False)
    uniq_pre = _p1_uniqueness_pre(s, k, flags)
    out = []
    for idx, node in enumerate(t.levels[l]):
        F, a = node.box, node.approx
        q, p = a.q, a.p
        Rn = s.Rp(lv.n)
        p11 = Rn.cmp(q) <= 0 and (s.eps(k - 1) * q).cmp(Rn) <= 0
        out.append(PropertyResult("P1.q_range", l, idx, p11, True, {"q": q}))
        upper = lower = True
        lower_any = False
        for i in range(s.d):
            e = s.tau * s.w[i]
            gaps = [abs(q * F.lo[i] - p[i]), abs(q * F.hi[i] - p[i])]
            straddle = F.lo[i] * q <= p[i] <= F.hi[i] * q
            gmax, gmin = max(gaps), (Fraction(0) if straddle else min(gaps))
            upper &= RationalPow(q, -e).cmp(gmax) > 0
            lb = RationalPow(2 * a.c - 1, s.w[i] / s.w[0]) * RationalPow(q, -e)
            lower_any |= gmin > 0 and lb.cmp(gmin) <= 0
        lower = lower_any
        pre = ckcond and p11
        out.append(PropertyResult("P1.upper", l, idx, upper, pre, None if upper else {"q": q, "p": list(p)}))
        out.append(PropertyResult("P1.lower", l, idx, lower, pre, None if lower else {"q": q, "p": list(p)}))
        s_lo, s_hi = _R_ceil(s, lv.n), _R_ceil(s, lv.n_i[0])
        pre_u = uniq_pre and a.bad_ok
        if not pre_u and s_hi - s_lo > scan_limit:
            out.append(PropertyResult("P1.unique", l, idx, None, False,
                                      detail=f"skipped: {s_hi - s_lo} denominators, preconditions unmet"))
            continue
        hits = []
        if s_lo < s_hi:
            target = tuple(Fraction(pi, q) for pi in p)
            hits = [r for r in tau_rationals(F, s_lo, s_hi, s.w, s.tau) if r.point() != target]
        out.append(PropertyResult("P1.unique", l, idx, not hits, pre_u, _witness(F, hits) if hits else None))
    return out


def check_p2(t: CantorTree, l: int) -> list[PropertyResult]:
    s = t.schedule
    k, case = level_regime(s, l)
    if case != "case1" and case != "case4":
        return []
    nd = s.nd(k)
    if not nd + 1 < l:
        return []
    eps0 = _rat(s.eps0, "eps0")
    s_lo, s_hi = _R_ceil(s, nd + 1), _R_ceil(s, l)
    if s_lo >= s_hi:
        return []
    out = []
    for idx, node in enumerate(t.levels[l]):
        hits = dangerous_rationals(node.box, s_lo, s_hi, s.wt, eps0)
        out.append(PropertyResult("P2", l, idx, not hits, True, _witness(node.box, hits) if hits else None))
    return out


def check_p3(t: CantorTree, l: int) -> list[PropertyResult]:
    s = t.schedule
    k, _ = level_regime(s, l)
    if k < 1 or l != s.xi * s.nd(k):
        return []
    lv = s.level(k)
    s_lo, s_hi = _R_ceil(s, lv.n_i[0]), _R_ceil(s, lv.n_i[-1] + 1)
    out = []
    for idx, node in enumerate(t.levels[l]):
        hits = tau_rationals(node.box, s_lo, s_hi, s.w, s.tau) if s_lo < s_hi else []
        out.append(PropertyResult("P3", l, idx, not hits, True, _witness(node.box, hits) if hits else None))
    return out


def _sep_chain(s: ParameterSchedule, k: int) -> bool:
    """R^(-tau w_i (n^(d)+1)) >= eps_k^(w~_i) R^(-n_k w~_i) for every i."""
    lv = s.level(k)
    return all(s.Rp(-s.tau * wi * (lv.n_i[-1] + 1)).cmp(lv.eps ** wti * s.Rp(-lv.n * wti)) >= 0
               for wi, wti in zip(s.w, s.wt))


def check_epoch_sep(t: CantorTree, l: int, earlier: dict | None = None) -> list[PropertyResult]:
    """At l = n_{k+1}: ||s x - r||_w~ > eps_k/s for R^(n_k) <= s < R^(n_{k+1})."""
    s = t.schedule
    k = next((k for k in range(0, s.k_max + 1)
              if (s.level(k + 1).n if k < s.k_max else s.horizon) == l), None)
    if k is None:
        return []
    n_k = s.level(k).n if k >= 1 else 0
    eps = _rat(s.eps(k), f"eps_{k}")
    s_lo, s_hi = _R_ceil(s, n_k), _R_ceil(s, l)
    chain = k == 0 or _sep_chain(s, k)
    earlier = earlier or {}
    out = []
    for idx, node in enumerate(t.levels[l]):
        pre = chain
        if k >= 1:
            for lev in (s.nd(k), s.xi * s.nd(k)):
                anc = t.ancestor(l, idx, lev)
                pre &= all(r.ok is True for r in earlier.get((lev, anc), []))
        hits = dangerous_rationals(node.box, s_lo, s_hi, s.wt, eps) if s_lo < s_hi else []
        out.append(PropertyResult("epoch_sep", l, idx, not hits, pre, _witness(node.box, hits) if hits else None))
    return out


def check_sides(t: CantorTree) -> list[PropertyResult]:
    out = []
    for l, level in enumerate(t.levels):
        side = side_lengths(t.schedule, l)
        tag = "D2" if level_regime(t.schedule, l)[1] == "case2" else "D1"
        for idx, n in enumerate(level):
            ok = n.box.side == side
            if l:
                par = t.levels[l - 1][n.parent].box
                ok &= par.contains_box(n.box)
            out.append(PropertyResult(tag, l, idx, ok, True))
    return out


def verify_pointwise(t: CantorTree, levels: Sequence[int] | None = None) -> list[PropertyResult]:
    levels = range(t.depth + 1) if levels is None else levels
    flags = _schedule_flags(t.schedule)
    results: list[PropertyResult] = []
    by_node: dict[tuple[int, int], list[PropertyResult]] = {}
    for l in sorted(levels):
        batch = check_p1(t, l, flags) + check_p2(t, l) + check_p3(t, l)
        for r in batch:
            by_node.setdefault((r.level, r.node), []).append(r)
        batch += check_epoch_sep(t, l, by_node)
        results += batch
    return results


def summarize(results: Sequence[PropertyResult]) -> dict:
    out: dict[str, dict] = {}
    for r in results:
        e = out.setdefault(r.prop, {"checked": 0, "passed": 0, "skipped": 0, "with_precondition": 0,
                                    "failed_with_precondition": 0, "failed_without": 0, "witness": None})
        if r.ok is None:
            e["skipped"] += 1
            continue
        e["checked"] += 1
        e["passed"] += r.ok
        e["with_precondition"] += r.precondition_ok
        if not r.ok:
            key = "failed_with_precondition" if r.precondition_ok else "failed_without"
            e[key] += 1
            if e["witness"] is None:
                e["witness"] = {"level": r.level, "node": r.node, **(r.witness or {})}
    return out


# counting

def _regime_k(s: ParameterSchedule, n: int) -> int:
    """k with n_k < n <= n_{k+1}, taking n_0 = 0."""
    k = 0
    while k < s.k_max and s.level(k + 1).n < n:
        k += 1
    return k


def cover_bound(s: ParameterSchedule, ell: Fraction, n: int, factor: int = 2) -> RationalPow:
    """Upper bound on the level-n boxes meeting a cube of side ell. The stated per-axis factor is 2;
    the covering argument behind it only gives 3 (ell/side + 2 cells can meet an interval)."""
    k = _regime_k(s, n)
    n_k = s.level(k).n if k else 0
    n_i = s.level(k).n_i if k else (0,) * s.d
    nd = n_i[-1]
    ell = RationalPow(ell)
    total = RationalPow(1)
    for i in range(1, s.d + 1):
        r0, ri = s.rho0(i), s.rho_i(i)
        first = max(ell / (r0 * ri ** -n_k), RationalPow(1))
        if n_k < n <= nd:
            h = RationalPow(1)
        else:
            ni = n_i[i - 1]
            h = (min(ell / (r0 * ri ** -ni), RationalPow(1))
                 * max(ri ** (n - ni), r0 * ri ** -ni / ell))
        total = total * factor * first * h
    return total


def _child_bound_ok(s: ParameterSchedule, k: int, case: str, c: int) -> bool:
    """Per-parent lower bounds for each case (one child in Case 2)."""
    if case == "case2":
        return c == 1
    if case == "case3":
        lv = s.level(k)
        full = math.prod((s.rho_i(i) ** (lv.n_i[-1] + 1 - lv.n_i[i - 1])).floor() for i in range(1, s.d + 1))
        return 2 * c >= full
    rho = s.rho
    gap = rho - Fraction(rho * 2 ** s.d, s.rho_floor(1)) - c      # case 1: c >= rho (1 - 2^d/floor(rho_1))
    if case == "case1":
        return gap <= 0
    # case 4 subtracts a further rho^(1 - eps/2)
    return gap <= 0 or RationalPow(rho, 1 - s.eps_branch / 2).cmp(gap) >= 0


def verify_counts(t: CantorTree, trial_boxes: Sequence[Box]) -> dict:
    s = t.schedule
    nodes = []
    for l in range(1, t.depth + 1):
        case = t.info[l].case
        counts = [len(n.children) for n in t.levels[l - 1]]
        ok = all(_child_bound_ok(s, t.info[l].k, case, c) for c in counts)
        nodes.append({"level": l, "case": case, "min_children": min(counts), "max_children": max(counts),
                      "ok": ok})
    boxes = []
    for B in trial_boxes:
        ell = max(B.side)
        for n in range(1, t.depth + 1):
            level = t.levels[n]
            hit = [x for x in level if x.box.meets(B)]
            cnt = len(hit)
            bound = cover_bound(s, ell, n)
            bound3 = cover_bound(s, ell, n, factor=3)
            mass = sum((x.mu for x in hit), Fraction(0))
            boxes.append({"box": B.to_json(), "level": n, "count": cnt,
                          "cover_ok": bound.cmp(cnt) >= 0, "cover_bound": bound.approx(),
                          "cover3_ok": bound3.cmp(cnt) >= 0,
                          "mass_bound_ok": mass <= Fraction(cnt, len(level)), "mass": fmt(mass),
                          "ratio": fmt(Fraction(cnt, len(level)))})
    return {"nodes": nodes, "boxes": boxes,
            "cover_ok": all(b["cover_ok"] for b in boxes),
            "cover3_ok": all(b["cover3_ok"] for b in boxes),
            "mass_bound_ok": all(b["mass_bound_ok"] for b in boxes)}


def random_trial_boxes(t: CantorTree, count: int, seed=0) -> list[Box]:
    """Cubes centred on sampled points of the tree, with sides spread over the tree's scales."""
    rng = random.Random(seed)
    smallest = min(t.levels[t.depth][0].box.side)
    out = []
    for j in range(count):
        c = sample_point(t, rng.randrange(2**32))
        side = smallest * Fraction(rng.randrange(1, 4)) * Fraction(3, 2) ** rng.randrange(0, 3 * t.depth + 1)
        side = min(side, Fraction(1))
        out.append(Box.from_center(c, (side / 2,) * t.schedule.d))
    return out


# serialisation

def tree_to_json(t: CantorTree) -> dict:
    return {
        "schema": "wdim.tree/1",
        "schedule": schedule_to_json(t.schedule),
        "corrupted": t.corrupted,
        "levels": [{"level": l, "k": t.info[l].k, "case": t.info[l].case,
                    "info": {k: v for k, v in t.info[l].__dict__.items() if k not in ("level", "k", "case")},
                    "nodes": [{"box": n.box.to_json(), "parent": n.parent, "mu": fmt(n.mu),
                               "anchor": n.anchor,
                               "approx": None if n.approx is None else n.approx.to_json()}
                              for n in level]}
                   for l, level in enumerate(t.levels)],
    }


def tree_from_json(obj: dict) -> CantorTree:
    if obj.get("schema") != "wdim.tree/1":
        raise ValueError("not a wdim tree document")
    s = schedule_from_json(obj["schedule"])
    levels, info = [], []
    for lv in obj["levels"]:
        info.append(LevelInfo(lv["level"], lv["k"], lv["case"], **lv["info"]))
        levels.append([Node(Box(vec(n["box"]["lo"]), vec(n["box"]["hi"])), n["parent"],
                            None if n["approx"] is None else Approx.from_json(n["approx"]),
                            n["anchor"], frac(n["mu"])) for n in lv["nodes"]])
    t = CantorTree(s, levels, info, corrupted=obj.get("corrupted", []))
    for l in range(1, len(levels)):
        for idx, n in enumerate(levels[l]):
            levels[l - 1][n.parent].children.append(idx)
    return t


def level_csv(t: CantorTree) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level", "k", "case", "boxes", "removed_plane", "removed_danger", "fallback",
                "pruned", "mu_min", "mu_max"])
    for l, level in enumerate(t.levels):
        i = t.info[l]
        mus = [n.mu for n in level]
        w.writerow([l, i.k, i.case, len(level), i.removed_plane, i.removed_danger, i.fallback,
                    i.pruned, fmt(min(mus)), fmt(max(mus))])
    return buf.getvalue()


# documented toy configurations: weights, tau, delta, k_max and the schedule overrides

TOY_PRESETS = {
    # one full epoch: Case 1, Case 2, Case 3, Case 4 and a closing Case 1 level
    "epoch": {"w": "1/2,1/2", "tau": "4", "delta": "1/10", "k_max": 1,
              "overrides": {"R": "9/4", "xi": 2, "rho0": ["1/3", "1/3"], "eps": ["1/4096", "1/1048576"],
                            "n": [1, 5], "n_i": [[2, 2]], "c": ["7/8"], "eps_branch": "1/2"}},
    # a long Case 2 run whose side lengths meet the c_k condition, so P1 is asserted
    "case2-probe": {"w": "1/2,1/2", "tau": "4", "delta": "1/10", "k_max": 1, "depth": 16,
                    "overrides": {"R": "9/4", "xi": 2, "rho0": ["1/3", "1/3"], "eps": ["1/121", "1/1000000"],
                                  "n": [1], "n_i": [[16, 16]], "c": ["7/8"], "eps_branch": "1/2"}},
}


def preset_schedule(name: str) -> tuple[ParameterSchedule, int | None]:
    from .schedule import build_schedule
    cfg = TOY_PRESETS[name]
    s = build_schedule(vec(cfg["w"].split(",")), cfg["tau"], cfg["delta"], cfg["k_max"], mode="toy",
                       toy_overrides=cfg["overrides"])
    return s, cfg.get("depth")
