"""Command-line front end: simulate, verify, emit-lp, gen, bench.

Exit codes are a stable contract: 0 success/feasible certificate,
1 infeasible certificate, 2 I/O or parse problem, 3 precondition violation
(bad instance shape, family preconditions, size caps). All randomness flows
from explicit --seed arguments. Relative output paths honor the
BAGSCHED_OUT_DIR environment variable.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

from .duals import (
    build_general_duals,
    build_single_job_duals,
    build_weaker_duals,
    certified_ratio,
)
from .gen import gen_lower_bound, gen_random_ica, gen_raw_speeds
from .instances import (
    InstanceError,
    instance_from_dict,
    instance_to_dict,
    preprocess_raw_speeds,
    make_instance,
    with_speedup,
)
from .lp import LpError, check_lp_solution, emit_lp, parse_lp_solution, solution_objective
from .numutil import from_json_number
from .rates import RateError
from .report import AnalysisError
from .sim import realize_slice, simulate, write_trace

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_IO = 2
EXIT_PRECONDITION = 3

FAMILIES = {
    "weaker": build_weaker_duals,
    "single": build_single_job_duals,
    "general": build_general_duals,
}


def _out_path(path):
    if path in (None, "-"):
        return path
    base = os.environ.get("BAGSCHED_OUT_DIR")
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _open_out(path):
    path = _out_path(path)
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def _load_any(path, exact=False):
    """Load an instance from an instance JSON or a trace JSONL file.

    Returns (instance, gamma_from_file or None).
    """
    with open(path, "r", encoding="utf-8") as fh:
        head = fh.read(1)
        fh.seek(0)
        if head == "":
            raise InstanceError(f"{path}: empty file")
        first_line = fh.readline()
        try:
            first = json.loads(first_line)
        except json.JSONDecodeError:
            first = None  # multi-line JSON: an instance document
        if isinstance(first, dict) and first.get("type") == "meta":
            if "instance" not in first:
                raise InstanceError(
                    f"{path}: trace lacks an embedded instance record"
                )
            inst = instance_from_dict(first["instance"], exact=exact)
            return inst, from_json_number(first["gamma"], exact)
        fh.seek(0)
        return instance_from_dict(json.load(fh), exact=exact), None


def cmd_simulate(args) -> int:
    instance, file_gamma = _load_any(args.instance, exact=args.exact)
    if args.preprocess:
        m = instance.machine_count()
        if m > 1_000_000:
            raise InstanceError(f"preprocess: too many machines to expand ({m})")
        raw = [instance.machine_speed(i) for i in range(1, m + 1)]
        classes, provenance = preprocess_raw_speeds(raw)
        instance = make_instance(
            classes=[(c.speed, c.count) for c in classes],
            jobs=instance.jobs,
            speedup=instance.speedup,
            exact=instance.exact,
            provenance=provenance,
        )
    gamma = args.gamma if args.gamma is not None else file_gamma
    if gamma is not None:
        instance = with_speedup(instance, gamma)
    trace = simulate(instance)
    if args.realize:
        checked = 0
        for iv in trace.intervals:
            sl = realize_slice(iv.profile, instance, iv)
            for j in iv.jobs:
                want = j.rate * iv.length()
                got = sl.work.get(j.job_id, 0)
                assert abs(float(got) - float(want)) <= 1e-6 * max(1.0, float(want)), (
                    f"interval {checked}: job {j.job_id} work {got} != {want}"
                )
            checked += 1
        print(f"realized {checked} intervals")
    if args.out:
        fh, close_it = _open_out(args.out)
        write_trace(trace, fh)
        if close_it:
            fh.close()
    print(f"objective={float(trace.objective)!r} makespan={float(trace.makespan)!r}")
    return EXIT_OK


def cmd_verify(args) -> int:
    instance, file_gamma = _load_any(args.input, exact=args.exact)
    gamma = args.gamma if args.gamma is not None else file_gamma
    if gamma is not None:
        instance = with_speedup(instance, gamma)
    trace = simulate(instance)
    cert = FAMILIES[args.family](trace, instance)

    print(f"family={cert.family} gamma={float(cert.gamma)!r} "
          f"required={cert.gamma_required!r} gamma_ok={cert.gamma_ok}")
    if not cert.gamma_ok:
        print("warning: speedup below the family's threshold; "
              "violations are expected", file=sys.stderr)
    print(f"alpha_total={float(cert.alpha_total)!r} "
          f"beta_total={float(cert.beta_total)!r} "
          f"objective={float(cert.objective)!r}")
    for name, slack, witness in cert.min_slack_table():
        print(f"  check {name}: min_slack={slack!r} at {witness}")
    bad = cert.violations()
    for v in bad[:10]:
        print(f"  violation {v.check} at {v.witness}: "
              f"lhs={v.lhs!r} rhs={v.rhs!r}", file=sys.stderr)
    if len(bad) > 10:
        print(f"  ... {len(bad)} violations total", file=sys.stderr)
    if cert.feasible and cert.objective > 0:
        print(f"certified_ratio={float(certified_ratio(cert, trace))!r}")
    print(f"feasible={cert.feasible}")
    if args.out:
        fh, close_it = _open_out(args.out)
        json.dump(cert.to_dict(), fh, indent=2)
        fh.write("\n")
        if close_it:
            fh.close()
    return EXIT_OK if cert.feasible else EXIT_INFEASIBLE


def cmd_emit_lp(args) -> int:
    instance, _ = _load_any(args.instance, exact=args.exact)
    text = emit_lp(instance, args.horizon)
    fh, close_it = _open_out(args.out)
    fh.write(text)
    if close_it:
        fh.close()
    if args.solution:
        try:
            with open(args.solution, "r", encoding="utf-8") as sfh:
                values = parse_lp_solution(sfh.read())
        except LpError as exc:
            print(f"solution parse error: {exc}", file=sys.stderr)
            return EXIT_IO
        bad = check_lp_solution(instance, values, args.horizon)
        value = solution_objective(instance, values, args.horizon)
        print(f"solution objective={value!r} violations={len(bad)}")
        for name, lhs, rhs in bad[:10]:
            print(f"  {name}: lhs={lhs!r} rhs={rhs!r}", file=sys.stderr)
        if bad:
            return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.family == "lower":
        instance = gen_lower_bound(args.k)
        payload = instance_to_dict(instance)
    elif args.family == "random":
        instance = gen_random_ica(args.k, args.jobs, args.max_tasks, args.seed)
        payload = instance_to_dict(instance)
    else:
        speeds = gen_raw_speeds(args.profile, args.seed, count=args.count)
        payload = {
            "profile": args.profile,
            "seed": args.seed,
            "speeds": speeds,
        }
    fh, close_it = _open_out(args.out)
    json.dump(payload, fh, indent=2)
    fh.write("\n")
    if close_it:
        fh.close()
    return EXIT_OK


def _bench_row(instance, gamma, builder, k, n, seed):
    instance = with_speedup(instance, gamma)
    trace = simulate(instance)
    row = {
        "K": k,
        "n": n,
        "seed": seed,
        "gamma": float(gamma),
        "makespan": float(trace.makespan),
        "objective": float(trace.objective),
        "lp_lb": "",
        "dual_lb": "",
        "ratio": "",
    }
    try:
        cert = builder(trace, instance)
    except AnalysisError:
        return row
    if cert.feasible and cert.objective > 0:
        dual = float(cert.objective)
        row["dual_lb"] = dual
        row["lp_lb"] = dual / 2
        row["ratio"] = float(certified_ratio(cert, trace))
    return row


def cmd_bench(args) -> int:
    seeds = [int(s) for s in args.seeds.split(",") if s.strip() != ""] \
        if args.seeds else []
    rows = []
    if args.family in ("lower", "both"):
        for k in range(args.k_min, args.k_max + 1):
            instance = gen_lower_bound(k)
            rows.append(_bench_row(
                instance, 2 * k, build_single_job_duals,
                k, instance.task_count(), "",
            ))
    if args.family in ("random", "both"):
        for k in range(args.k_min, args.k_max + 1):
            for seed in seeds:
                instance = gen_random_ica(k, args.jobs, args.max_tasks, seed)
                n = instance.task_count()
                gamma = 2 * max(k, math.log2(n) if n > 1 else 1)
                rows.append(_bench_row(
                    instance, gamma, build_weaker_duals, k, n, seed,
                ))
    rows.sort(key=lambda r: (r["K"], str(r["seed"])))
    fh, close_it = _open_out(args.out)
    writer = csv.DictWriter(
        fh, fieldnames=["K", "n", "seed", "gamma", "makespan", "objective",
                        "lp_lb", "dual_lb", "ratio"],
    )
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    if close_it:
        fh.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bagsched",
        description="Water-filling scheduler for bags of tasks on related "
                    "machines, with dual-fitting certificates.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="run the scheduler on an instance")
    ps.add_argument("instance", help="instance JSON (or trace JSONL) path")
    ps.add_argument("--gamma", type=float, default=None,
                    help="override the speedup")
    ps.add_argument("--preprocess", action="store_true",
                    help="round speeds and reselect classes first")
    ps.add_argument("--realize", action="store_true",
                    help="realize every interval and check delivered work")
    ps.add_argument("--exact", action="store_true",
                    help="rational arithmetic")
    ps.add_argument("--out", default=None, help="write trace JSONL here")
    ps.set_defaults(func=cmd_simulate)

    pv = sub.add_parser("verify", help="build a dual certificate for a run")
    pv.add_argument("input", help="instance JSON or trace JSONL path")
    pv.add_argument("--family", choices=sorted(FAMILIES), required=True)
    pv.add_argument("--gamma", type=float, default=None,
                    help="override the speedup (thresholds re-checked)")
    pv.add_argument("--exact", action="store_true")
    pv.add_argument("--out", default=None, help="write certificate JSON here")
    pv.set_defaults(func=cmd_verify)

    pl = sub.add_parser("emit-lp", help="emit the completion-time LP")
    pl.add_argument("instance")
    pl.add_argument("--horizon", type=int, required=True,
                    help="unit slots to model")
    pl.add_argument("--solution", default=None,
                    help="check a name/value solution file against the LP")
    pl.add_argument("--exact", action="store_true")
    pl.add_argument("--out", default=None)
    pl.set_defaults(func=cmd_emit_lp)

    pg = sub.add_parser("gen", help="generate instances or raw speeds")
    pg.add_argument("family", choices=["lower", "random", "speeds"])
    pg.add_argument("--k", type=int, default=2)
    pg.add_argument("--jobs", type=int, default=3)
    pg.add_argument("--max-tasks", type=int, default=4)
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--profile", choices=["uniform", "geometric", "clustered"],
                    default="uniform")
    pg.add_argument("--count", type=int, default=5)
    pg.add_argument("--out", default=None)
    pg.set_defaults(func=cmd_gen)

    pb = sub.add_parser("bench", help="sweep generators, write a CSV")
    pb.add_argument("--family", choices=["lower", "random", "both"],
                    default="both")
    pb.add_argument("--k-min", type=int, default=1)
    pb.add_argument("--k-max", type=int, default=3)
    pb.add_argument("--seeds", default="",
                    help="comma-separated seeds for the random family")
    pb.add_argument("--jobs", type=int, default=3)
    pb.add_argument("--max-tasks", type=int, default=4)
    pb.add_argument("--out", default=None)
    pb.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InstanceError, AnalysisError, RateError, LpError) as exc:
        print(f"precondition: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
