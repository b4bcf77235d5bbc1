"""Command-line front end. Exit codes: 0 all checks pass, 1 a check failed, 2 usage or config error."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Sequence

from . import analysis, cantor, schedule, weights
from .numeric import fmt, frac

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# parsing helpers

def rational(text: str) -> Fraction:
    try:
        return frac(text)
    except (ValueError, ZeroDivisionError, TypeError):
        raise argparse.ArgumentTypeError(f"not an exact rational: {text!r}")


def rational_list(text: str) -> list[Fraction]:
    return [rational(t) for t in str(text).split(",") if t.strip()]


def int_list(text: str) -> list[int]:
    return [int(t) for t in str(text).split(",") if t.strip()]


def int_matrix(text: str) -> list[list[int]]:
    """Rows separated by ';', entries by ','."""
    return [int_list(row) for row in str(text).split(";") if row.strip()]


def read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for num, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{num}: expected key=value")
            key, value = (x.strip() for x in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def emit(obj: dict, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _weights(args) -> weights.WeightVector:
    if args.w is None:
        if args.d is None:
            raise UsageError("give -w or -d")
        return weights.validate_weights([Fraction(1, args.d)] * args.d)
    w = weights.validate_weights(args.w)
    if args.d is not None and args.d != w.d:
        raise UsageError(f"-d {args.d} does not match {w.d} weights")
    return w


def _toy_overrides(args) -> dict:
    ov = {}
    for key in ("R", "xi", "eps_branch"):
        if getattr(args, key) is not None:
            ov[key] = getattr(args, key)
    for key in ("rho0", "eps", "n", "c", "n_i"):
        if getattr(args, key) is not None:
            ov[key] = getattr(args, key)
    return ov


def _schedule_from_args(args) -> tuple[schedule.ParameterSchedule, int | None]:
    if getattr(args, "preset", None):
        return cantor.preset_schedule(args.preset)
    w = _weights(args)
    if args.tau is None or args.delta is None:
        raise UsageError("--tau and --delta are required")
    mode = "faithful" if getattr(args, "faithful", False) else "toy"
    ov = _toy_overrides(args)
    if mode == "toy" and "n" not in ov:
        raise UsageError("toy schedules need --n (or use --faithful / --preset)")
    return schedule.build_schedule(w, args.tau, args.delta, args.k, mode=mode, toy_overrides=ov), None


# subcommands

def cmd_dim(args) -> int:
    w = _weights(args)
    rep = weights.rynne_dimension(w, args.tau)
    delta = args.delta if args.delta is not None else weights.delta0_bound(w, args.tau)
    aux = weights.auxiliary_weights(w, args.tau, delta)
    lower, (h, k), above_K = weights.final_lower_bound(w, args.tau, delta)
    pm = analysis.prop_min(analysis.make_profile((w, args.tau, aux)))
    gap_ok = rep.value - delta * (w.d + args.tau) <= lower <= rep.value
    ok = pm[0] == lower and gap_ok
    emit({"schema": "wdim.dim/1", "value": fmt(rep.value), "argmin_k": rep.argmin_k,
          "per_k": [fmt(v) for v in rep.per_k_values],
          "cross_check": {"delta": fmt(delta), "wtilde": [fmt(x) for x in aux.wtilde], "K": aux.K,
                          "final_lower_bound": fmt(lower), "minimiser": [h, k], "beyond_K": above_K,
                          "prop_min": fmt(pm[0]), "prop_min_k": pm[1], "x_star": fmt(pm[2]),
                          "identity_ok": pm[0] == lower, "within_delta_band": gap_ok},
          "ok": ok}, args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_aux(args) -> int:
    w = _weights(args)
    aux = weights.auxiliary_weights(w, args.tau, args.delta)
    bad = weights.check_aux(w, args.tau, aux)
    emit({"schema": "wdim.aux/1", "K": aux.K, "wtilde": [fmt(x) for x in aux.wtilde],
          "delta": fmt(aux.delta), "delta0": fmt(aux.delta0), "violations": bad}, args.out)
    return EXIT_OK if not bad else EXIT_FAIL


def cmd_schedule(args) -> int:
    s, _ = _schedule_from_args(args)
    rep = schedule.verify_schedule(s)
    emit({"schema": "wdim.schedule-report/1", "schedule": schedule.schedule_to_json(s),
          "report": rep.to_json(), "ok": rep.ok}, args.out)
    return EXIT_OK if rep.ok or s.mode == "toy" and not args.strict else EXIT_FAIL


def cmd_build(args) -> int:
    s, depth = _schedule_from_args(args)
    depth = args.depth if args.depth is not None else depth
    t = cantor.build_tree(s, depth, budget=args.budget, max_boxes=args.max_boxes,
                          corrupt_level=args.corrupt_level)
    sides = cantor.check_sides(t)
    sides_ok = all(r.ok for r in sides)
    mass_ok = all(sum((n.mu for n in lv), Fraction(0)) == 1 for lv in t.levels)
    doc = cantor.tree_to_json(t)
    if args.tree_out:
        with open(args.tree_out, "w") as fh:
            json.dump(doc, fh, sort_keys=True)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(cantor.level_csv(t))
    emit({"schema": "wdim.build/1", "depth": t.depth, "boxes": [len(lv) for lv in t.levels],
          "cases": [i.case for i in t.info], "sides_ok": sides_ok, "mass_ok": mass_ok,
          "corrupted": t.corrupted, "tree": args.tree_out}, args.out)
    return EXIT_OK if sides_ok and mass_ok else EXIT_FAIL


def _load_tree(path: str) -> cantor.CantorTree:
    with open(path) as fh:
        return cantor.tree_from_json(json.load(fh))


def cmd_verify(args) -> int:
    t = _load_tree(args.tree)
    results = cantor.verify_pointwise(t) + cantor.check_sides(t)
    summary = cantor.summarize(results)
    failed = [r for r in results if r.ok is False and r.precondition_ok]
    boxes = cantor.random_trial_boxes(t, args.boxes, args.seed) if args.boxes else []
    counts = cantor.verify_counts(t, boxes)
    counts_ok = counts["cover_ok"] and counts["mass_bound_ok"]
    report = {"schema": "wdim.verify/1", "properties": summary,
              "failures": [r.to_json() for r in failed[:20]],
              "counts": {"cover_ok": counts["cover_ok"], "mass_bound_ok": counts["mass_bound_ok"],
                         "cover3_ok": counts["cover3_ok"],
                         "nodes": counts["nodes"],
                         "box_failures": [b for b in counts["boxes"]
                                          if not (b["cover_ok"] and b["mass_bound_ok"])][:20]},
              "ok": not failed and counts_ok}
    emit(report, args.out)
    return EXIT_OK if report["ok"] else EXIT_FAIL


def cmd_analyze(args) -> int:
    t = _load_tree(args.tree)
    boxes = cantor.random_trial_boxes(t, args.boxes, args.seed)
    usable = []
    rho1 = t.schedule.rho_i(1)
    for B in boxes:
        ell = max(B.side)
        if rho1 ** -1 > ell:
            usable.append(B)
    recs = []
    for j, B in enumerate(usable):
        try:
            rec = analysis.local_dimension(t, [B])[0]
        except ValueError:      # side too small for the built depth
            continue
        rec.box_id = j
        recs.append(rec)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(analysis.local_dimension_csv(recs))
    pts = [n.box.center for n in t.levels[t.depth]]
    finest = min(t.levels[t.depth][0].box.side)
    scales = [finest * 2**j for j in range(1, args.scales + 1)]
    slope = analysis.box_counting(pts, scales)
    prof = analysis.make_profile(t.schedule)
    pm = analysis.prop_min(prof)
    emit({"schema": "wdim.analyze/1", "records": len(recs),
          "local_dim_min_approx": min((r.lower for r in recs), default=None),
          "residual_max_approx": max((abs(r.residual) for r in recs), default=None),
          "box_counting_slope_approx": slope, "scales": [fmt(x) for x in scales],
          "prop_min": fmt(pm[0]), "csv": args.csv}, args.out)
    return EXIT_OK


def cmd_approx(args) -> int:
    w = _weights(args)
    x = args.point
    if len(x) != w.d:
        raise UsageError("point dimension does not match the weights")
    hits = []
    for q in range(1, args.Q + 1):
        p = [round(q * xi) for xi in x]
        gap = [q * xi - pi for xi, pi in zip(x, p)]
        # ||q x - p||_w < c q^-tau  <=>  |gap_i| < (c q^-tau)^(w_i) on every axis
        if _below(gap, w, args.c, q, args.tau):
            hits.append({"q": q, "p": p})
    emit({"schema": "wdim.approx/1", "point": [fmt(v) for v in x], "c": fmt(args.c), "tau": fmt(args.tau),
          "Q": args.Q, "hits": hits, "count": len(hits)}, args.out)
    return EXIT_OK


def _below(gap, w, c, q, tau) -> bool:
    from .powers import RationalPow
    for g, wi in zip(gap, w):
        bound = RationalPow(c, wi) * RationalPow(q, -tau * wi)
        if g != 0 and bound.cmp(abs(g)) <= 0:
            return False
    return True


# parser

def _common(p: argparse.ArgumentParser, need_tau=True):
    p.add_argument("-d", type=int)
    p.add_argument("-w", type=rational_list, help="weights, e.g. 1/3,2/3")
    p.add_argument("--tau", type=rational, required=False)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.add_argument("--config", help="flat key=value file mirroring the flags")


def _toy_flags(p: argparse.ArgumentParser):
    p.add_argument("--delta", type=rational)
    p.add_argument("-k", type=int, default=1, help="number of epochs")
    p.add_argument("--faithful", action="store_true")
    p.add_argument("--preset", choices=sorted(cantor.TOY_PRESETS))
    p.add_argument("--R", type=rational)
    p.add_argument("--xi", type=int)
    p.add_argument("--rho0", type=rational_list)
    p.add_argument("--eps", type=rational_list, help="eps_0, eps_1, ...")
    p.add_argument("--n", type=int_list, help="n_1, n_2, ...; one extra entry sets the last Case 1 level")
    p.add_argument("--n-i", dest="n_i", type=int_matrix, help="rows n_k^(1..d) separated by ';'")
    p.add_argument("--c", type=rational_list)
    p.add_argument("--eps-branch", dest="eps_branch", type=rational)


def make_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="wdim", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dim", help="dimension formula with cross-checks")
    _common(p)
    p.add_argument("--delta", type=rational, help="delta for the cross-check (default: a safe value)")
    p.set_defaults(func=cmd_dim)

    p = sub.add_parser("aux", help="auxiliary weights")
    _common(p)
    p.add_argument("--delta", type=rational)
    p.set_defaults(func=cmd_aux)

    p = sub.add_parser("schedule", help="build and verify a parameter schedule")
    _common(p)
    _toy_flags(p)
    p.add_argument("--strict", action="store_true", help="fail on toy schedules that violate an inequality")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("build", help="build a toy Cantor tree")
    _common(p)
    _toy_flags(p)
    p.add_argument("--depth", type=int)
    p.add_argument("--budget", type=int, default=cantor.DEFAULT_BUDGET, help="max rational tests per scan")
    p.add_argument("--max-boxes", dest="max_boxes", type=int, default=cantor.DEFAULT_MAX_BOXES)
    p.add_argument("--corrupt-level", dest="corrupt_level", type=int,
                   help="keep one removed box at this level (negative control)")
    p.add_argument("--tree-out", dest="tree_out")
    p.add_argument("--csv", help="per-level summary CSV")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("verify", help="pointwise and counting checks on a saved tree")
    p.add_argument("--tree", required=True)
    p.add_argument("--boxes", type=int, default=100, help="random trial boxes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("analyze", help="local dimension and box counting on a saved tree")
    p.add_argument("--tree", required=True)
    p.add_argument("--boxes", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scales", type=int, default=4)
    p.add_argument("--csv")
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("approx", help="scan q <= Q for ||q x - p||_w < c q^-tau")
    _common(p)
    p.add_argument("--point", type=rational_list, required=True)
    p.add_argument("--c", type=rational, default=Fraction(1))
    p.add_argument("--Q", type=int, default=1000)
    p.set_defaults(func=cmd_approx)
    return top


_CONVERTERS = {"w": rational_list, "rho0": rational_list, "eps": rational_list, "c": rational_list,
               "point": rational_list, "n": int_list, "n_i": int_matrix}


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    cfg = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in cfg.items():
        if key not in actions or key in ("help", "config"):
            raise UsageError(f"unknown config key {key!r}")
        act = actions[key]
        if key in _CONVERTERS:
            defaults[key] = _CONVERTERS[key](raw)
        elif isinstance(act, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes")
        elif act.type is not None:
            defaults[key] = act.type(raw)
        else:
            defaults[key] = raw
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def run(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    except (UsageError, argparse.ArgumentTypeError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if args.command in ("dim", "aux", "approx") and args.tau is None:
        print("error: --tau is required", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "aux" and args.delta is None:
        print("error: --delta is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, weights.WeightError, schedule.ScheduleError, argparse.ArgumentTypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except cantor.CantorError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


def main() -> None:
    sys.exit(run())
