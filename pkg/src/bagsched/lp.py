"""Primal LP bridge: emit the completion-time LP, embed realized schedules
as feasible primal solutions, and brute-force tiny optima.

The LP over unit slots [t, t+1), machines i, tasks v (globally numbered),
jobs j:

    min   sum_j w_j C_j + sum_{j,t} w_j U_{j,t}
    s.t.  U_{j,t} >= sum_{t' >= t} sum_i x_{ivt'} / p_v     (remaining)
          C_j >= sum_{t,i} x_{ivt} / s_i                    (proc time)
          sum_{i,t} x_{ivt} / p_v >= 1                      (demand)
          sum_v x_{ivt} / s_i <= 1                          (capacity)

Any schedule embeds with objective in [cost, 2*cost]; the emitted file uses
the original machine speeds (the bound is about the adversary's machines),
while schedule embedding uses the speeds that actually ran the schedule.
The "LP lower bound" reported elsewhere is (feasible dual value)/2, since
the objective double-counts completion time.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from fractions import Fraction

from .instances import Instance
from .sim import realize_slice

MAX_EMIT_CELLS = 200_000      # machines * tasks * horizon guard for emit_lp
MAX_PRIMAL_ENTRIES = 2_000_000

BRUTE_MAX_MACHINES = 3
BRUTE_MAX_TASKS = 5
BRUTE_MAX_SIZE = 4
BRUTE_MAX_GRID = 4


class LpError(ValueError):
    """Raised for inputs outside the LP bridge's supported shapes."""


def task_table(instance: Instance):
    """Global task numbering: (task_id, job_id, size), 1-based, in job
    order with each job's groups in descending size order."""
    table = []
    tid = 0
    for job in instance.jobs:
        for g in job.groups:
            for _ in range(g.count):
                tid += 1
                table.append((tid, job.job_id, g.size))
    return table


# ---------------------------------------------------------------------------
# LP text emission and solution ingestion
# ---------------------------------------------------------------------------

def emit_lp(instance: Instance, horizon: int) -> str:
    """Emit the LP over `horizon` unit slots in LP text format.

    Variables are named x_{i}_{v}_{t}, U_{j}_{t}, C_{j}. Machine speeds are
    the original sigma values (no speedup). Zero-size tasks get no
    variables or constraints. A comment flags a horizon that cannot cover
    even the fluid lower bound total_work / total_capacity.
    """
    if horizon < 1:
        raise LpError(f"horizon must be >= 1, got {horizon}")
    m = instance.machine_count()
    tasks = [(v, j, p) for (v, j, p) in task_table(instance) if p > 0]
    if m * len(tasks) * horizon > MAX_EMIT_CELLS:
        raise LpError(
            f"LP too large: {m} machines x {len(tasks)} tasks x {horizon} slots"
        )
    speeds = [instance.machine_speed(i) for i in range(1, m + 1)]
    total_work = sum(p for _, _, p in tasks)
    total_cap = sum(speeds)

    lines = ["\\ completion-time LP for a bag-of-tasks instance"]
    if total_cap > 0 and total_work > horizon * total_cap:
        lines.append(
            "\\ warning: horizon {} below fluid makespan bound {:.6g}".format(
                horizon, float(total_work / total_cap)
            )
        )
    lines.append("Minimize")
    terms = []
    for job in instance.jobs:
        terms.append(f"{_num(job.weight)} C_{job.job_id}")
        for t in range(horizon):
            terms.append(f"{_num(job.weight)} U_{job.job_id}_{t}")
    lines.append(" obj: " + _wrap(" + ".join(terms)))
    lines.append("Subject To")

    for v, j, p in tasks:
        for t in range(horizon):
            parts = [f"U_{j}_{t}"]
            for tp in range(t, horizon):
                for i in range(1, m + 1):
                    parts.append(f"- {_num(1 / p)} x_{i}_{v}_{tp}")
            lines.append(f" rem_{j}_{v}_{t}: " + _wrap(" ".join(parts) + " >= 0"))
        parts = [f"C_{j}"]
        for t in range(horizon):
            for i in range(1, m + 1):
                parts.append(f"- {_num(1 / speeds[i - 1])} x_{i}_{v}_{t}")
        lines.append(f" time_{j}_{v}: " + _wrap(" ".join(parts) + " >= 0"))
        parts = []
        for t in range(horizon):
            for i in range(1, m + 1):
                parts.append(f"{_num(1 / p)} x_{i}_{v}_{t}")
        lines.append(f" done_{j}_{v}: " + _wrap(" + ".join(parts) + " >= 1"))
    for i in range(1, m + 1):
        for t in range(horizon):
            parts = [
                f"{_num(1 / speeds[i - 1])} x_{i}_{v}_{t}" for v, _, _ in tasks
            ]
            lines.append(f" cap_{i}_{t}: " + _wrap(" + ".join(parts) + " <= 1"))

    lines.append("Bounds")
    for job in instance.jobs:
        for t in range(horizon):
            lines.append(f" 0 <= U_{job.job_id}_{t} <= 1")
    lines.append("End")
    return "\n".join(lines) + "\n"


def _num(x) -> str:
    return repr(float(x))


def _wrap(s: str, width: int = 500) -> str:
    if len(s) <= width:
        return s
    out = []
    line = ""
    for tok in s.split(" "):
        if line and len(line) + 1 + len(tok) > width:
            out.append(line)
            line = "   " + tok
        else:
            line = tok if not line else line + " " + tok
    out.append(line)
    return "\n".join(out)


def parse_lp_solution(text: str) -> dict:
    """Parse whitespace-separated name/value pairs into a dict.

    Lines starting with # or \\ are comments; blank lines are skipped.

    >>> parse_lp_solution("x_1_1_0 1.0\\nC_1 1.0\\n")
    {'x_1_1_0': 1.0, 'C_1': 1.0}
    """
    values = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("\\"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise LpError(f"bad solution line: {line!r}")
        values[parts[0]] = float(parts[1])
    return values


def solution_objective(instance: Instance, values: dict, horizon: int) -> float:
    """Objective of an ingested LP solution (missing variables are 0)."""
    total = 0.0
    for job in instance.jobs:
        total += float(job.weight) * values.get(f"C_{job.job_id}", 0.0)
        for t in range(horizon):
            total += float(job.weight) * values.get(f"U_{job.job_id}_{t}", 0.0)
    return total


def check_lp_solution(instance: Instance, values: dict, horizon: int,
                      rel: float = 1e-6) -> list:
    """Re-evaluate the emitted LP's constraints on an ingested solution.

    Returns a list of (constraint_name, lhs, rhs) violations beyond `rel`
    relative slack. Uses the same original speeds as emit_lp.
    """
    m = instance.machine_count()
    tasks = [(v, j, p) for (v, j, p) in task_table(instance) if p > 0]
    speeds = [instance.machine_speed(i) for i in range(1, m + 1)]
    bad = []

    def x(i, v, t):
        return values.get(f"x_{i}_{v}_{t}", 0.0)

    for v, j, p in tasks:
        suffix = 0.0
        for t in range(horizon - 1, -1, -1):
            suffix += sum(x(i, v, t) for i in range(1, m + 1)) / float(p)
            u = values.get(f"U_{j}_{t}", 0.0)
            if u < suffix - rel * max(1.0, suffix):
                bad.append((f"rem_{j}_{v}_{t}", u, suffix))
        spent = sum(
            x(i, v, t) / float(speeds[i - 1])
            for t in range(horizon)
            for i in range(1, m + 1)
        )
        c = values.get(f"C_{j}", 0.0)
        if c < spent - rel * max(1.0, spent):
            bad.append((f"time_{j}_{v}", c, spent))
        done = sum(
            x(i, v, t) / float(p)
            for t in range(horizon)
            for i in range(1, m + 1)
        )
        if done < 1 - rel:
            bad.append((f"done_{j}_{v}", done, 1.0))
    for i in range(1, m + 1):
        for t in range(horizon):
            load = sum(x(i, v, t) for v, _, _ in tasks) / float(speeds[i - 1])
            if load > 1 + rel:
                bad.append((f"cap_{i}_{t}", load, 1.0))
    return bad


# ---------------------------------------------------------------------------
# schedule embedding
# ---------------------------------------------------------------------------

@dataclass
class PrimalSolution:
    """A feasible point of the LP, on a grid of `slot`-length slots.

    x maps (machine, task, slot) to processing amount; U maps (job, slot)
    to the remaining fraction bound; C maps job to completion time. The
    slot scales the capacity constraint (sum_v x/s_i <= slot) and the
    U-term of the objective (cost_u = slot * sum w_j U_{j,t}).
    """

    slot: object
    gamma: object
    x: dict
    U: dict
    C: dict
    cost: object        # sum_j w_j C_j of the embedded schedule
    objective: object   # cost + slot * sum w U


def schedule_to_primal(source, instance: Instance, slot=None) -> PrimalSolution:
    """Embed a realized schedule as an LP solution with objective <= 2*cost.

    `source` is a Trace (each interval gets realized) or a list of
    ScheduleSlices covering [0, makespan). x spreads each rate pool
    uniformly over its machine span; U is the minimal feasible remaining
    fraction; the slot defaults to half the smallest per-job gap between
    completion time and the area under its U curve, which keeps the
    left-Riemann U sum below C_j per job. All four constraint families and
    both objective bounds are asserted before returning.
    """
    if hasattr(source, "intervals"):
        slices = [
            realize_slice(iv.profile, instance, iv) for iv in source.intervals
        ]
        gamma = source.gamma()
    else:
        slices = list(source)
        gamma = instance.speedup
    table = task_table(instance)
    job_tasks = {}
    for v, j, p in table:
        job_tasks.setdefault(j, []).append((v, p))
    weights = {j.job_id: j.weight for j in instance.jobs}
    zero = instance.speedup - instance.speedup  # typed zero

    # flatten to (start, end, placement) in time order
    segments = []
    for sl in slices:
        for seg in sl.segments:
            if seg.end > seg.start:
                segments.append(seg)
    segments.sort(key=lambda s: float(s.start))

    # pass A: completion times, per-job work curves, and alive snapshots
    remaining = {v: p for v, _, p in table}
    completion = {j.job_id: zero for j in instance.jobs}
    work_curve = {j.job_id: [(zero, zero)] for j in instance.jobs}  # (time, W)
    cum_work = {j.job_id: zero for j in instance.jobs}
    seg_alive = {}  # (segment index, job_id) -> task ids served
    for si, seg in enumerate(segments):
        length = seg.end - seg.start
        for pl in seg.placements:
            rate = pl.per_task_rate
            if rate == 0:
                continue
            for job_id, cnt in pl.members:
                assert (si, job_id) not in seg_alive, (
                    f"job {job_id} split across pools in one segment"
                )
                alive = [
                    (v, p) for v, p in job_tasks[job_id] if remaining[v] > 0
                ]
                assert len(alive) == cnt, (
                    f"pool of job {job_id} covers {cnt} tasks, "
                    f"{len(alive)} alive"
                )
                seg_alive[(si, job_id)] = [v for v, _ in alive]
                for v, p in alive:
                    got = rate * length
                    # roundoff slack so a task whose quota exactly spans
                    # the segment still completes inside it
                    slack = 0 if instance.exact else 1e-9 * float(p or 1)
                    if float(got) >= float(remaining[v]) - slack:
                        t_done = seg.start + min(remaining[v] / rate, length)
                        remaining[v] = zero
                        if t_done > completion[job_id]:
                            completion[job_id] = t_done
                    else:
                        remaining[v] = remaining[v] - got
                curve = work_curve[job_id]
                if curve[-1][0] < seg.start:  # idle gap: keep W flat
                    curve.append((seg.start, cum_work[job_id]))
                cum_work[job_id] = cum_work[job_id] + rate * length
                curve.append((seg.end, cum_work[job_id]))
    for v, j, p in table:
        assert remaining[v] <= (0 if instance.exact else 1e-9 * float(p or 1)), (
            f"task {v} not finished by the given schedule"
        )
    if hasattr(source, "completions"):
        for j, c in source.completions.items():
            assert abs(float(c) - float(completion[j])) <= 1e-9 * max(
                1.0, float(c)
            ), f"job {j}: derived completion {completion[j]} vs trace {c}"

    cost = sum(weights[j] * completion[j] for j in weights) if weights else zero

    # slot: half the smallest gap C_j - integral(U_j); U_j(t) = 1 - W/p_max
    if slot is None:
        gap = None
        for job in instance.jobs:
            p_max = max((p for _, p in job_tasks[job.job_id]), default=0)
            if p_max == 0:
                continue
            area = zero
            curve = work_curve[job.job_id]
            for (t0, w0), (t1, w1) in zip(curve, curve[1:]):
                u0 = max(zero, 1 - w0 / p_max)
                u1 = max(zero, 1 - w1 / p_max)
                area = area + (t1 - t0) * (u0 + u1) / 2
            g = completion[job.job_id] - area
            assert g > 0, f"job {job.job_id}: U area reaches completion time"
            gap = g if gap is None else min(gap, g)
        if gap is None:  # all tasks zero-size
            slot = 1
        else:
            slot = gap / 2

    # pass B: bin x over the slot grid
    x = {}
    for si, seg in enumerate(segments):
        for pl in seg.placements:
            if pl.per_task_rate == 0 or pl.machine_lo > pl.machine_hi:
                continue
            alive_of = {
                job_id: seg_alive[(si, job_id)] for job_id, _ in pl.members
            }
            t0, t1 = seg.start, seg.end
            s = int(t0 / slot)
            while t0 < t1:
                edge = (s + 1) * slot
                hi = edge if edge < t1 else t1
                d = hi - t0
                if d > 0:
                    share = d / pl.count
                    for i in range(pl.machine_lo, pl.machine_hi + 1):
                        amount = share * gamma * instance.machine_speed(i)
                        for job_id in alive_of:
                            for v in alive_of[job_id]:
                                key = (i, v, s)
                                x[key] = x.get(key, zero) + amount
                assert len(x) <= MAX_PRIMAL_ENTRIES, "primal embedding too large"
                t0 = hi
                s += 1

    # minimal U from suffix sums of x, per job per slot
    sizes = {v: p for v, _, p in table}
    by_vt = {}
    for (i, v, s), amt in x.items():
        key = (v, s)
        by_vt[key] = by_vt.get(key, zero) + amt
    max_slot = max((s for _, s in by_vt), default=-1)
    U = {}
    suffix = {}
    for s in range(max_slot, -1, -1):
        for v, j, p in table:
            if p == 0:
                continue
            suffix[v] = suffix.get(v, zero) + by_vt.get((v, s), zero)
            frac = suffix[v] / p
            key = (j, s)
            if key not in U or U[key] < frac:
                U[key] = frac

    u_cost = slot * sum(weights[j] * u for (j, _), u in U.items()) if U else zero
    objective = cost + u_cost
    primal = PrimalSolution(
        slot=slot, gamma=gamma, x=x, U=U, C=dict(completion),
        cost=cost, objective=objective,
    )
    check_primal(primal, instance)
    return primal


def check_primal(primal: PrimalSolution, instance: Instance,
                 rel: float = 1e-9) -> None:
    """Assert the four constraint families and the objective sandwich."""
    table = task_table(instance)
    weights = {j.job_id: j.weight for j in instance.jobs}
    tol = 0 if instance.exact else rel

    done = {}
    spent = {}
    load = {}
    for (i, v, s), amt in primal.x.items():
        done[v] = done.get(v, 0) + amt
        speed = primal.gamma * instance.machine_speed(i)
        spent[v] = spent.get(v, 0) + amt / speed
        key = (i, s)
        load[key] = load.get(key, 0) + amt / speed
    for v, j, p in table:
        if p == 0:
            continue
        d = done.get(v, 0) / p
        assert d >= 1 - tol, f"task {v}: processed fraction {float(d)} < 1"
        c = primal.C[j]
        sp = spent.get(v, 0)
        assert float(sp) <= float(c) * (1 + tol) + tol, (
            f"task {v}: processing time {float(sp)} exceeds C_{j}={float(c)}"
        )
    for (i, s), ld in load.items():
        assert float(ld) <= float(primal.slot) * (1 + tol) + tol, (
            f"machine {i} slot {s}: load {float(ld)} exceeds slot {primal.slot}"
        )
    # U dominates every task's remaining fraction per slot (by construction
    # U is the max; re-derive and compare)
    suffix = {}
    max_slot = max((s for (_, s) in primal.U), default=-1)
    by_vt = {}
    for (i, v, s), amt in primal.x.items():
        by_vt[(v, s)] = by_vt.get((v, s), 0) + amt
    for s in range(max_slot, -1, -1):
        for v, j, p in table:
            if p == 0:
                continue
            suffix[v] = suffix.get(v, 0) + by_vt.get((v, s), 0)
            frac = suffix[v] / p
            u = primal.U.get((j, s), 0)
            assert float(u) >= float(frac) * (1 - tol) - tol, (
                f"U_{j}_{s}={float(u)} below remaining fraction {float(frac)}"
            )
            assert float(u) <= 1 + tol, f"U_{j}_{s} exceeds 1"
    # per-job Riemann bound and the global sandwich
    for job in instance.jobs:
        usum = primal.slot * sum(
            u for (j, _), u in primal.U.items() if j == job.job_id
        )
        c = primal.C[job.job_id]
        if c > 0:
            assert float(usum) <= float(c) * (1 + tol) + tol, (
                f"job {job.job_id}: U sum {float(usum)} exceeds C {float(c)}"
            )
    assert float(primal.objective) >= float(primal.cost) * (1 - tol)
    assert float(primal.objective) <= 2 * float(primal.cost) * (1 + tol) + tol


def primal_to_solution_values(primal: PrimalSolution) -> dict:
    """Flatten a unit-slot PrimalSolution into LP solution values.

    Requires slot == 1 so the names line up with emit_lp's unit grid.
    """
    if float(primal.slot) != 1.0:
        raise LpError(f"solution export needs unit slots, got {primal.slot}")
    values = {}
    for (i, v, s), amt in primal.x.items():
        values[f"x_{i}_{v}_{s}"] = values.get(f"x_{i}_{v}_{s}", 0.0) + float(amt)
    for (j, s), u in primal.U.items():
        values[f"U_{j}_{s}"] = float(u)
    for j, c in primal.C.items():
        values[f"C_{j}"] = float(c)
    return values


# ---------------------------------------------------------------------------
# brute-force optimum for tiny instances
# ---------------------------------------------------------------------------

def brute_force_opt(instance: Instance, grid: int = 2):
    """Minimal weighted completion time on a 1/grid time lattice.

    Exhaustive search over per-quantum injective assignments of alive tasks
    to the fastest machines, memoized on the remaining-size state. The
    result upper-bounds the true optimum and converges to it as grid grows.
    Restricted to tiny inputs: <= 3 machines, <= 5 tasks, integer sizes
    <= 4, grid <= 4.
    """
    m = instance.machine_count()
    if m > BRUTE_MAX_MACHINES:
        raise LpError(f"brute force capped at {BRUTE_MAX_MACHINES} machines, got {m}")
    if not 1 <= grid <= BRUTE_MAX_GRID:
        raise LpError(f"grid must be in 1..{BRUTE_MAX_GRID}, got {grid}")
    table = task_table(instance)
    if len(table) > BRUTE_MAX_TASKS:
        raise LpError(f"brute force capped at {BRUTE_MAX_TASKS} tasks, got {len(table)}")
    for _, _, p in table:
        if p != int(p) or p > BRUTE_MAX_SIZE or p < 0:
            raise LpError(f"brute force needs integer sizes <= {BRUTE_MAX_SIZE}, got {p}")
    if instance.has_releases():
        raise LpError("brute force handles release time 0 only")

    speeds = sorted(
        (Fraction(int(instance.machine_speed(i))) if float(instance.machine_speed(i)).is_integer()
         else Fraction(float(instance.machine_speed(i)))
         for i in range(1, m + 1)),
        reverse=True,
    )
    quantum = Fraction(1, grid)
    weights = {j.job_id: float(j.weight) for j in instance.jobs}
    job_ids = sorted(weights)
    start = tuple(
        tuple(sorted(
            (Fraction(int(p)) for v, jj, p in table if jj == j and p > 0),
            reverse=True,
        ))
        for j in job_ids
    )

    @functools.lru_cache(maxsize=None)
    def solve(state):
        alive_jobs = [k for k, rem in enumerate(state) if rem]
        if not alive_jobs:
            return 0.0
        w_alive = sum(weights[job_ids[k]] for k in alive_jobs)
        tasks = [
            (k, ti) for k in alive_jobs for ti in range(len(state[k]))
        ]
        slots = min(len(speeds), len(tasks))
        best = None
        for chosen in _injections(tasks, slots):
            nxt = [list(rem) for rem in state]
            for slot_i, (k, ti) in enumerate(chosen):
                nxt[k][ti] = max(
                    Fraction(0), nxt[k][ti] - quantum * speeds[slot_i]
                )
            key = tuple(
                tuple(sorted((r for r in rem if r > 0), reverse=True))
                for rem in nxt
            )
            val = solve(key)
            if best is None or val < best:
                best = val
        return float(quantum) * w_alive + best

    def _injections(tasks, slots):
        # ordered selections: machine slot s gets tasks[selection[s]]
        if slots == 0:
            yield ()
            return
        for combo in itertools.permutations(range(len(tasks)), slots):
            yield tuple(tasks[c] for c in combo)

    return solve(start)
