"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import itertools
import json
import math
import random
import time
from fractions import Fraction as F

import sympy

from wdim import analysis, cantor, lattice, schedule, weights
from wdim.cli import run
from wdim.numeric import Box, pow_cmp
from wdim.powers import RationalPow


def report(num: int, title: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} criterion {num} ({title}): {detail}")
    assert ok, detail


def random_weights(rng: random.Random, d: int) -> tuple[F, ...]:
    parts = sorted(rng.randint(1, 30) for _ in range(d))
    return tuple(F(p, sum(parts)) for p in parts)


def random_tau(rng: random.Random) -> F:
    return F(rng.randint(11, 60), 10)


def random_admissible(rng: random.Random, dims=(2, 3)):
    w = random_weights(rng, rng.choice(dims))
    tau = random_tau(rng)
    delta = weights.delta0_bound(w, tau) * F(rng.randint(1, 1000), 1000)
    return w, tau, delta


# 1

def test_c01_dimension_formula_exact(capsys):
    cases = [(["-d", "1"], "3", F(1, 2)), (["-w", "1/2,1/2"], "2", F(3, 2)), (["-w", "1/3,2/3"], "3", F(4, 3))]
    t0 = time.perf_counter()
    got = []
    for flags, tau, want in cases:
        code = run(["dim", *flags, "--tau", tau])
        out = json.loads(capsys.readouterr().out)
        # independent per-k evaluation with sympy rationals
        w = [sympy.Rational(1)] if flags[0] == "-d" else [sympy.Rational(x) for x in flags[1].split(",")]
        T = sympy.Rational(tau)
        d = len(w)
        oracle = min((d + 1 + sum(T * w[k] - T * w[i] for i in range(k + 1))) / (1 + T * w[k]) for k in range(d))
        got.append((code, F(out["value"]), want, F(str(oracle))))
    elapsed = time.perf_counter() - t0
    ok = all(c == 0 and v == want == o for c, v, want, o in got) and elapsed < 1
    report(1, "dimension formula exactness", ok,
           f"values {[str(v) for _, v, _, _ in got]} vs expected {[str(w) for _, _, w, _ in got]}, {elapsed:.3f}s")


# 2

def test_c02_auxiliary_weights_suite():
    rng = random.Random(2)
    t0 = time.perf_counter()
    bad = []
    for _ in range(200):
        w, tau, delta = random_admissible(rng)
        aux = weights.auxiliary_weights(w, tau, delta)
        wt, K, d = aux.wtilde, aux.K, len(w)
        sh = [tau * wi - delta * (1 + tau * wi) for wi in w]
        t1 = all(wt[i] == sh[i] for i in range(K))
        t2 = (K == 0 or wt[K - 1] <= wt[K]) and len(set(wt[K:])) == 1 and wt[K] < sh[K]
        t3 = sum(wt) == 1
        if not (t1 and t2 and t3 and 0 <= K < d and weights.check_aux(w, tau, aux) == []):
            bad.append((w, tau, delta))
    elapsed = time.perf_counter() - t0
    report(2, "auxiliary weights (tau1)-(tau3)", not bad and elapsed < 10,
           f"200 instances, {len(bad)} violations, {elapsed:.2f}s")


# 3

def test_c03_cross_pipeline_identity():
    rng = random.Random(3)
    t0 = time.perf_counter()
    bad = []
    for _ in range(50):
        w, tau, delta = random_admissible(rng)
        aux = weights.auxiliary_weights(w, tau, delta)
        v_prop = analysis.prop_min(analysis.make_profile((w, tau, aux)))[0]
        v_final = weights.final_lower_bound(w, tau, delta)[0]
        r = weights.rynne_dimension(w, tau).value
        band = delta * (len(w) + tau)
        if not (v_prop == v_final and abs(v_prop - r) <= band and abs(v_final - r) <= band):
            bad.append((w, tau, delta, v_prop, v_final, r))
    elapsed = time.perf_counter() - t0
    report(3, "profile minimum = final bound, within delta(d+tau) of the formula", not bad and elapsed < 30,
           f"50 instances, {len(bad)} mismatches, {elapsed:.2f}s")


# 4

def test_c04_profile_minimum_vs_grid():
    rng = random.Random(4)
    t0 = time.perf_counter()
    worst, bad = F(0), []
    for _ in range(100):
        w, tau, delta = random_admissible(rng)
        p = analysis.make_profile((w, tau, weights.auxiliary_weights(w, tau, delta)))
        v = analysis.prop_min(p)[0]
        g = analysis.grid_min(p, 10**4)
        tol = analysis.max_abs_slope(p) * F(1, 10**4)
        worst = max(worst, abs(v - g) / tol if tol else F(0))
        if abs(v - g) > tol:
            bad.append((w, tau, delta))
    elapsed = time.perf_counter() - t0
    report(4, "exact minimum vs 10^4-point grid", not bad and elapsed < 60,
           f"100 profiles, {len(bad)} outside maxslope*1e-4 (worst ratio {float(worst):.3f}), {elapsed:.2f}s")


# 5

def test_c05_minkowski_suite():
    rng = random.Random(5)
    t0 = time.perf_counter()
    bad = []
    for j in range(100):
        n = 2 + j % 2
        x = [F(rng.randrange(q), q) for q in (rng.randint(1, 999) for _ in range(n - 1))]
        L = lattice.shear_lattice(x)
        radii = [F(rng.randint(4, 64), 16) for _ in range(n)]
        K = lattice.SymmetricBox(radii)
        rep = lattice.successive_minima(K, L)
        # independent replay: witnesses are lattice vectors, independent, with the reported gauges
        inv = L.inverse()
        coords = [[sum(a * v for a, v in zip(row, wv)) for row in inv] for wv in rep.witnesses]
        integral = all(c.denominator == 1 for cs in coords for c in cs)
        indep = sympy.Matrix([[sympy.Rational(c.numerator, c.denominator) for c in wv]
                              for wv in rep.witnesses]).rank() == n
        gauges = [K.gauge(wv) for wv in rep.witnesses] == list(rep.lam)
        product = K.volume() * math.prod(rep.lam, start=F(1))
        inside = F(2**n, math.factorial(n)) <= product <= 2**n
        if not (integral and indep and gauges and inside and L.det() == 1):
            bad.append((x, radii))
    elapsed = time.perf_counter() - t0
    report(5, "Minkowski second theorem bounds", not bad and elapsed < 60,
           f"100 lattices, {len(bad)} violations, {elapsed:.2f}s")


# 6

def _brute_dangerous(E, s_lo, s_hi, u, eps):
    out = []
    for s in range(s_lo, s_hi):
        axes = []
        for lo, hi, ui in zip(E.lo, E.hi, u):
            axes.append([r for r in range(math.floor(s * lo) - 1, math.ceil(s * hi) + 2)
                         if pow_cmp(max(F(0), s * lo - r, r - s * hi), ui, eps / s) <= 0])
        out += [(r, s) for r in itertools.product(*axes)]
    return out


def _affine_rank(points):
    if len(points) <= 1:
        return 0
    base = points[0]
    M = sympy.Matrix([[sympy.Rational(p[i] - base[i]) for i in range(len(base))] for p in points[1:]])
    return M.rank()


def test_c06_simplex_lemma_suite():
    rng = random.Random(6)
    R, d = 4, 2
    t0 = time.perf_counter()
    done, bad, nonempty, sizes = 0, [], 0, []
    while done < 50:
        u = rng.choice([(F(1, 2), F(1, 2)), (F(1, 3), F(2, 3)), (F(1, 4), F(3, 4))])
        n = rng.choice([1, 2])
        sides = []
        for ui in u:
            bound = RationalPow(R, -(1 + ui) * (n + 1)) / math.factorial(d + 1)
            sides.append(F(math.floor(bound.approx() * 10**9 * rng.uniform(0.3, 0.999)), 10**9))
        eps_max = F(1, R) * RationalPow(math.factorial(d + 1), -1 / u[0]).to_fraction()
        eps = eps_max * F(rng.randint(1, 999), 1000)
        if rng.random() < 0.7:
            # centre at a rational of the right height so the set is not empty
            s0 = rng.randrange(R**n, R**(n + 1))
            centre = (F(rng.randrange(s0), s0), F(rng.randrange(s0), s0))
        else:
            centre = (F(rng.randrange(10**6), 10**6), F(rng.randrange(10**6), 10**6))
        E = Box.from_center(centre, (sides[0] / 2, sides[1] / 2))
        if not lattice.simplex_hypothesis(E, n, R, u, eps):
            continue
        done += 1
        pts = _brute_dangerous(E, R**n, R**(n + 1), u, eps)
        cert = lattice.simplex_certificate(E, n, R, u, eps)
        same = sorted((p.p, p.q) for p in cert["points"]) == sorted(pts)
        rank = _affine_rank([tuple(F(ri, s) for ri in r) for r, s in pts])
        nonempty += bool(pts)
        sizes.append(len(pts))
        if not (same and rank <= d - 1):
            bad.append((E, n, eps, rank))
    elapsed = time.perf_counter() - t0
    report(6, "simplex lemma coplanarity", not bad and elapsed < 120,
           f"50 instances ({nonempty} with non-empty sets, max size {max(sizes)}), {len(bad)} violations, "
           f"{elapsed:.2f}s")


# 7

def test_c07_intermediate_approximation_suite():
    rng = random.Random(7)
    t0 = time.perf_counter()
    done, bad = 0, []
    while done < 50:
        d = rng.choice([1, 2])
        u = (F(1),) if d == 1 else rng.choice([(F(1, 2), F(1, 2)), (F(1, 3), F(2, 3))])
        x = tuple(F(rng.randrange(10**7), 10**7 - 1) for _ in range(d))
        M = F(rng.randint(2, 60))
        eps = F(1, rng.randint(5, 60))
        beta = 1 / eps + F(rng.randint(1, 10), 10)
        if lattice.bad_violation(x, M, u, eps) is not None:
            continue
        done += 1
        pq = lattice.intermediate_approximation(x, M, beta, u, eps)
        c1 = M <= pq.q <= M * beta
        c2 = all(RationalPow(abs(xi - F(pi, pq.q))).cmp(RationalPow(M, -(1 + ui)) * RationalPow(beta, -ui)) <= 0
                 if xi * pq.q != pi else True for xi, pi, ui in zip(x, pq.p, u))
        if not (c1 and c2):
            bad.append((x, M, beta, pq))
    elapsed = time.perf_counter() - t0
    report(7, "intermediate approximation conclusions", not bad and elapsed < 60,
           f"50 instances with verified precondition, {len(bad)} violations, {elapsed:.2f}s")


# 8

def test_c08_faithful_schedule_verification():
    # d = 1 has the single weight vector (1); two delta values stand in for the second vector
    grid = []
    for tau in (F(3, 2), F(2), F(3)):
        grid += [((F(1),), tau, F(1)), ((F(1),), tau, F(1, 2))]
        grid += [((F(1, 2), F(1, 2)), tau, F(1)), ((F(1, 3), F(2, 3)), tau, F(1))]
    t0 = time.perf_counter()
    failures = []
    for w, tau, frac_of_d0 in grid:
        s = schedule.build_schedule(w, tau, weights.delta0_bound(w, tau) * frac_of_d0, 2)
        rep = schedule.verify_schedule(s)
        if not rep.ok:
            failures.append((w, tau, [c.name for c in rep.failures()]))
    elapsed = time.perf_counter() - t0
    report(8, "faithful schedule inequalities", not failures and elapsed < 120,
           f"{len(grid)} schedules with k_max=2, {len(failures)} with failing checks, {elapsed:.2f}s")


# 9

def test_c09_toy_cantor_build(epoch_tree, probe_tree):
    t0 = time.perf_counter()
    parts = {}
    notes = []
    for name, t in (("epoch", epoch_tree), ("case2-probe", probe_tree)):
        sides = cantor.check_sides(t)
        parts[f"{name}: D1/D2"] = bool(sides) and all(r.ok for r in sides)
        parts[f"{name}: mu sums to 1"] = all(sum(n.mu for n in lv) == 1 for lv in t.levels)
        summary = cantor.summarize(cantor.verify_pointwise(t))
        bad = {k: v["failed_with_precondition"] for k, v in summary.items() if v["failed_with_precondition"]}
        parts[f"{name}: P1-P3 and epoch separation where preconditions hold"] = not bad
        covered = sorted(k for k, v in summary.items() if v["with_precondition"])
        notes.append(f"{name} checks with preconditions met: {covered}")
    cases = [i.case for i in epoch_tree.info]
    parts["epoch covers Cases 1-4"] = {"case1", "case2", "case3", "case4"} <= set(cases) and cases[-1] == "case1"
    boxes = cantor.random_trial_boxes(epoch_tree, 100, seed=9)
    counts = cantor.verify_counts(epoch_tree, boxes)
    mass_fail = [b for b in counts["boxes"] if not b["mass_bound_ok"]]
    cover_fail = [b for b in counts["boxes"] if not b["cover_ok"]]
    parts["mass bound on 100 trial boxes"] = counts["mass_bound_ok"]
    parts["cover bound on 100 trial boxes"] = counts["cover_ok"]
    elapsed = time.perf_counter() - t0
    parts["under 10 min"] = elapsed < 600
    for k, v in parts.items():
        print(f"  {'ok  ' if v else 'FAIL'} {k}")
    for n in notes:
        print("  " + n)
    if mass_fail:
        b = mass_fail[0]
        print(f"  mass bound counterexample: level {b['level']}, mass {b['mass']} > count/#E_n = {b['ratio']}"
              f" ({len(mass_fail)} of {len(counts['boxes'])} box-levels)")
    if cover_fail:
        b = cover_fail[0]
        print(f"  cover bound counterexample: level {b['level']}, {b['count']} boxes met, bound "
              f"{b['cover_bound']:.4g} ({len(cover_fail)} of {len(counts['boxes'])} box-levels);"
              f" with the covering argument's factor 3 per axis: {'holds' if counts['cover3_ok'] else 'fails'}")
    failed = [k for k, v in parts.items() if not v]
    report(9, "toy Cantor build end to end", not failed,
           f"levels {[len(l) for l in epoch_tree.levels]}, failed parts {failed}, {elapsed:.1f}s")


# 10

def test_c10_negative_controls(tmp_path):
    s, _ = cantor.preset_schedule("epoch")
    bad_tree = cantor.build_tree(s, 4, corrupt_level=3)
    fails = [r for r in cantor.check_p3(bad_tree, 4) if r.ok is False]
    witness = fails[0].witness if fails else None
    has_witness = bool(witness) and "s" in witness and "r" in witness
    w = (F(1, 2), F(1, 2))
    try:
        weights.auxiliary_weights(w, 2, weights.delta0_bound(w, 2) * 2)
        rejected = False
    except weights.WeightError:
        rejected = True
    codes = {}
    sink = str(tmp_path / "out.json")
    codes["dim ok"] = run(["dim", "-w", "1/2,1/2", "--tau", "2", "--out", sink])
    codes["aux inadmissible delta"] = run(["aux", "-w", "1/2,1/2", "--tau", "2", "--delta", "1/2"])
    codes["unknown config key"] = run(["dim", "--config", str(_cfg(tmp_path))])
    tree = tmp_path / "bad.json"
    codes["build corrupted"] = run(["build", "--preset", "epoch", "--depth", "4", "--corrupt-level", "3",
                                    "--tree-out", str(tree), "--out", sink])
    verify_json = tmp_path / "verify.json"
    codes["verify corrupted"] = run(["verify", "--tree", str(tree), "--boxes", "0", "--out", str(verify_json)])
    cli_witness = json.loads(verify_json.read_text())["properties"]["P3"]["witness"]
    want = {"dim ok": 0, "aux inadmissible delta": 2, "unknown config key": 2, "build corrupted": 0,
            "verify corrupted": 1}
    ok = has_witness and rejected and codes == want and cli_witness is not None
    report(10, "negative controls", ok,
           f"P3 witness s={witness and witness['s']} r={witness and witness['r']}, inadmissible delta rejected="
           f"{rejected}, exit codes {codes}")


def _cfg(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("w = 1/2,1/2\ntau = 2\nflavour = 3\n")
    return p


# 11

def test_c11_box_counting_sanity():
    t0 = time.perf_counter()
    m = 64
    grid2 = [(F(2 * i + 1, 2 * m), F(2 * j + 1, 2 * m)) for i in range(m) for j in range(m)]
    m3 = 32
    grid3 = [(F(2 * i + 1, 2 * m3), F(2 * j + 1, 2 * m3), F(2 * k + 1, 2 * m3))
             for i in range(m3) for j in range(m3) for k in range(m3)]
    seg = [(F(j, 4096), F(j, 8192) + F(1, 7)) for j in range(4096)]
    s2 = analysis.box_counting(grid2, [F(1, 2**e) for e in range(1, 6)])
    s3 = analysis.box_counting(grid3, [F(1, 2**e) for e in range(1, 5)])
    s1 = analysis.box_counting(seg, [F(1, 2**e) for e in range(2, 9)])
    elapsed = time.perf_counter() - t0
    ok = abs(s2 - 2) <= 0.1 and abs(s3 - 3) <= 0.1 and abs(s1 - 1) <= 0.15 and elapsed < 30
    report(11, "box-counting sanity", ok,
           f"grid d=2 slope {s2:.4f}, grid d=3 slope {s3:.4f}, segment slope {s1:.4f}, {elapsed:.2f}s")
