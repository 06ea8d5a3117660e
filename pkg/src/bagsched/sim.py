"""Event-driven execution of the water-filling policy, plus slice realization.

The simulator never touches individual tasks. All alive tasks of a job carry
the same cumulative depletion, so per job it tracks one number and the count
of leading task groups still alive (groups are sorted by descending size, and
tasks die in ascending size order, so the alive groups always form a prefix).
Events are group completions and job releases; rates are constant in between.

realize_slice turns one interval's fluid rates into an explicit schedule:
tasks sorted by remaining quota occupy machines in that order, ties pool
their machines and deplete together. This yields piecewise-constant segments
whose breakpoints are quota merges and quota exhaustions, at most two per
pooled entry.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .instances import Instance, instance_to_dict
from .numutil import close, json_number, leq
from .rates import AliveJob, RateProfile, assign_rates, star_witness

EVENT_REL = 1e-12  # relative slack for batching simultaneous events


class LivelockError(RuntimeError):
    """All alive tasks have rate zero while work remains."""


class InfeasibleSliceError(RuntimeError):
    """A slice's quotas cannot be met by its machines.

    Carries the offending prefix: k tasks whose combined quota exceeds the
    capacity of the k fastest machines over the slice.
    """

    def __init__(self, prefix_count, quota_sum, capacity):
        self.prefix_count = prefix_count
        self.quota_sum = quota_sum
        self.capacity = capacity
        super().__init__(
            f"top {prefix_count} quotas sum to {quota_sum}, capacity {capacity}"
        )


@dataclass(frozen=True)
class IntervalJob:
    job_id: int
    weight: object
    count: int          # alive tasks
    rate: object        # per-task rate
    alive_groups: int   # leading groups of the job still alive


@dataclass(frozen=True)
class Interval:
    start: object
    end: object
    profile: RateProfile
    jobs: tuple  # IntervalJob, ascending job_id

    def length(self):
        return self.end - self.start

    def alive_weight(self):
        return sum(j.weight for j in self.jobs)

    def job(self, job_id: int) -> IntervalJob:
        for j in self.jobs:
            if j.job_id == job_id:
                return j
        raise KeyError(job_id)


@dataclass
class Trace:
    instance: Instance
    intervals: list
    completions: dict        # job_id -> completion time
    group_completions: dict  # (job_id, group_index) -> completion time
    objective: object        # sum w_j C_j
    makespan: object
    has_releases: bool

    def gamma(self):
        return self.instance.speedup

    def alive_weight_integral(self):
        return sum(iv.alive_weight() * iv.length() for iv in self.intervals)


def simulate(instance: Instance) -> Trace:
    """Run the policy to completion and record every constant-rate interval."""
    exact = instance.exact
    zero = instance.speedup - instance.speedup
    depleted = {}
    alive_groups = {}
    completions = {}
    group_completions = {}
    released = set()
    pending = sorted(instance.jobs, key=lambda j: (j.release, j.job_id))
    pending_idx = 0
    has_releases = instance.has_releases()

    t = zero
    intervals = []

    def admit(upto):
        nonlocal pending_idx
        out = False
        while pending_idx < len(pending) and leq(pending[pending_idx].release, upto, rel=EVENT_REL):
            job = pending[pending_idx]
            pending_idx += 1
            released.add(job.job_id)
            depleted[job.job_id] = zero
            g = len(job.groups)
            # zero-size tasks finish the moment they appear
            while g > 0 and job.groups[g - 1].size == 0:
                g -= 1
                group_completions[(job.job_id, g)] = job.release
            alive_groups[job.job_id] = g
            if g == 0:
                completions[job.job_id] = job.release
            out = True
        return out

    admit(t)
    while True:
        alive = [
            AliveJob(
                job_id=j.job_id,
                weight=j.weight,
                count=sum(g.count for g in j.groups[: alive_groups[j.job_id]]),
            )
            for j in instance.jobs
            if j.job_id in released and alive_groups[j.job_id] > 0
        ]
        if not alive:
            if pending_idx >= len(pending):
                break
            t = pending[pending_idx].release
            admit(t)
            continue
        profile = assign_rates(alive, instance)
        if all(profile.rate_of(a.job_id) <= 0 for a in alive):
            raise LivelockError(f"no progress at t={t} with {len(alive)} jobs alive")

        # next completion per job: its smallest alive size
        dts = []
        for a in alive:
            job = instance.jobs[a.job_id - 1]
            rate = profile.rate_of(a.job_id)
            smallest = job.groups[alive_groups[a.job_id] - 1].size
            dts.append(((smallest - depleted[a.job_id]) / rate, a.job_id))
        dt = min(d for d, _ in dts)
        assert dt > 0, "completion event must advance time"
        if pending_idx < len(pending):
            gap = pending[pending_idx].release - t
            if gap < dt:
                dt = gap
                dts = []  # release only; nobody completes

        end = t + dt
        intervals.append(
            Interval(
                start=t,
                end=end,
                profile=profile,
                jobs=tuple(
                    IntervalJob(
                        job_id=a.job_id,
                        weight=a.weight,
                        count=a.count,
                        rate=profile.rate_of(a.job_id),
                        alive_groups=alive_groups[a.job_id],
                    )
                    for a in sorted(alive, key=lambda x: x.job_id)
                ),
            )
        )

        if exact:
            completers = {j for d, j in dts if d == dt}
        else:
            completers = {j for d, j in dts if d <= dt * (1 + EVENT_REL)}
        for a in alive:
            rate = profile.rate_of(a.job_id)
            if a.job_id in completers:
                g = alive_groups[a.job_id] - 1
                job = instance.jobs[a.job_id - 1]
                depleted[a.job_id] = job.groups[g].size  # snap to the boundary
                alive_groups[a.job_id] = g
                group_completions[(a.job_id, g)] = end
                if g == 0:
                    completions[a.job_id] = end
            else:
                depleted[a.job_id] = depleted[a.job_id] + rate * dt
        t = end
        admit(t)

    objective = sum(
        instance.jobs[j - 1].weight * c for j, c in sorted(completions.items())
    )
    makespan = max(completions.values(), default=zero)
    return Trace(
        instance=instance,
        intervals=intervals,
        completions=completions,
        group_completions=group_completions,
        objective=objective,
        makespan=makespan,
        has_releases=has_releases,
    )


def hall_feasibility(profile: RateProfile, instance: Instance, rel: float = 1e-9) -> bool:
    """Can some schedule give every task its profile rate on these machines?

    Holds iff every prefix of the sorted rates fits the same-size prefix of
    machine capacity, which is exactly what star_witness checks.
    """
    ok, _ = star_witness(profile, instance, rel=rel)
    return ok


# ---------------------------------------------------------------------------
# Slice realization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Placement:
    members: tuple       # (job_id, task_count) pairs sharing this pool
    count: int           # total tasks in the pool
    position_lo: int     # tasks ahead of this pool in quota order
    machine_lo: int      # 1-based, inclusive; lo > hi means no machines
    machine_hi: int
    per_task_rate: object


@dataclass(frozen=True)
class Segment:
    start: object
    end: object
    placements: tuple


@dataclass
class ScheduleSlice:
    start: object
    end: object
    segments: list
    work: dict  # job_id -> per-task work delivered in this slice


def realize_slice(profile: RateProfile, instance: Instance, interval) -> ScheduleSlice:
    """Realize one interval of fluid rates as machine segments.

    `interval` is an (start, end) pair or any object with start/end. Raises
    InfeasibleSliceError when the quotas cannot fit (never for profiles that
    pass the prefix-capacity check).
    """
    if hasattr(interval, "start"):
        start, end = interval.start, interval.end
    else:
        start, end = interval
    length = end - start
    assert length > 0
    gamma = profile.gamma
    m = instance.machine_count()

    # entries: [quota_left, count, members dict job->count]; quota descending
    entries = []
    for mem in profile.members():
        quota = mem.rate * length
        if quota == 0:
            continue
        if entries and entries[-1][0] == quota:
            entries[-1][1] += mem.count
            entries[-1][2][mem.job_id] = entries[-1][2].get(mem.job_id, 0) + mem.count
        else:
            entries.append([quota, mem.count, {mem.job_id: mem.count}])
    quota_scale = entries[0][0] if entries else 0
    tol = 0 if instance.exact else 1e-12 * float(quota_scale or 1)

    work = {}
    for mem in profile.members():
        work[mem.job_id] = profile.gamma - profile.gamma  # typed zero

    def pooled_rate(pos, count):
        lo = min(pos, m)
        hi = min(pos + count, m)
        return gamma * (instance.capacity_prefix(hi) - instance.capacity_prefix(lo)) / count

    t = start
    segments = []
    guard = 0
    while entries:
        guard += 1
        assert guard <= 4 * len(profile.blocks) + 4 * sum(1 for _ in profile.members()) + 8, \
            "realization failed to terminate"
        pos = 0
        rates = []
        placements = []
        for quota, count, members in entries:
            r = pooled_rate(pos, count)
            rates.append(r)
            placements.append(
                Placement(
                    members=tuple(sorted(members.items())),
                    count=count,
                    position_lo=pos,
                    machine_lo=min(pos, m) + 1,
                    machine_hi=min(pos + count, m),
                    per_task_rate=r,
                )
            )
            pos += count
        # next event: an entry drains, or a faster entry catches the next one
        dt = end - t
        for (quota, count, _), r in zip(entries, rates):
            if r > 0 and quota / r < dt:
                dt = quota / r
        for i in range(len(entries) - 1):
            # per-block rounding can leave adjacent quotas inverted by an
            # ulp; a non-positive gap is not a catch event
            gap = entries[i][0] - entries[i + 1][0]
            speed_gap = rates[i] - rates[i + 1]
            if speed_gap > 0 and gap > 0 and gap / speed_gap < dt:
                dt = gap / speed_gap
        if dt <= 0:
            break
        seg_end = t + dt
        segments.append(Segment(start=t, end=seg_end, placements=tuple(placements)))
        for entry, r in zip(entries, rates):
            entry[0] = entry[0] - r * dt
            for job, cnt in entry[2].items():
                work[job] = work[job] + r * dt
        t = seg_end
        # drop drained entries, then merge equalized neighbours
        entries = [e for e in entries if e[0] > tol]
        merged = []
        for e in entries:
            if merged and abs(merged[-1][0] - e[0]) <= tol:
                merged[-1][1] += e[1]
                for job, cnt in e[2].items():
                    merged[-1][2][job] = merged[-1][2].get(job, 0) + cnt
            else:
                merged.append(e)
        entries = merged
        if close(t, end, rel=EVENT_REL) or t >= end:
            break

    slack = 0 if instance.exact else 1e-9 * float(quota_scale or 1)
    leftover = [e for e in entries if e[0] > slack]
    if leftover:
        witness = _overfull_prefix(profile, instance, length)
        assert witness is not None, "leftover quota without an overfull prefix"
        raise InfeasibleSliceError(*witness)
    return ScheduleSlice(start=start, end=end, segments=segments, work=work)


def _overfull_prefix(profile, instance, length):
    total = 0
    quota = 0
    for mem in profile.members():
        total += mem.count
        quota = quota + mem.rate * length * mem.count
        cap = profile.gamma * instance.capacity_prefix(total) * length
        if not leq(quota, cap, rel=1e-9):
            return total, quota, cap
    return None


# ---------------------------------------------------------------------------
# Trace serialization (JSON lines)
# ---------------------------------------------------------------------------

def write_trace(trace: Trace, fh) -> None:
    meta = {
        "type": "meta",
        "gamma": json_number(trace.gamma()),
        "classes": [[json_number(c.speed), c.count] for c in trace.instance.classes],
        "jobs": len(trace.instance.jobs),
        "has_releases": trace.has_releases,
        "instance": instance_to_dict(trace.instance),
    }
    fh.write(json.dumps(meta) + "\n")
    for iv in trace.intervals:
        rec = {
            "type": "interval",
            "start": json_number(iv.start),
            "end": json_number(iv.end),
            "alive": [
                {
                    "job": j.job_id,
                    "count": j.count,
                    "rate": json_number(j.rate),
                    "weight": json_number(j.weight),
                }
                for j in iv.jobs
            ],
        }
        fh.write(json.dumps(rec) + "\n")
    summary = {
        "type": "summary",
        "objective": json_number(trace.objective),
        "makespan": json_number(trace.makespan),
        "completions": {str(j): json_number(c) for j, c in sorted(trace.completions.items())},
        "group_completions": [
            [j, g, json_number(c)] for (j, g), c in sorted(trace.group_completions.items())
        ],
    }
    fh.write(json.dumps(summary) + "\n")


def read_trace_records(fh):
    """Parse trace lines back into dicts (format check helper)."""
    return [json.loads(line) for line in fh if line.strip()]
