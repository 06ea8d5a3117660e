"""Problem instances: machine speed classes, multi-task jobs, validation.

Machines are given as speed classes (speed, count) with strictly decreasing
speeds; individual machine ids are 1..m in that order. Jobs own bags of
tasks; equal-size tasks are stored as groups since every alive task of a job
is always driven at the same rate and equal sizes finish together. Group
counts may be huge (1e9), so nothing here ever expands groups.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .numutil import coerce, from_json_number, geq, json_number, leq

SPEED_BASE = 64  # speed rounding base; only this value is certified


class InstanceError(ValueError):
    """Raised for malformed or unsupported instance data."""


@dataclass(frozen=True)
class SpeedClass:
    speed: object  # sigma_l, strictly decreasing across classes
    count: int     # m_l >= 1

    def capacity(self):
        return self.speed * self.count


@dataclass(frozen=True)
class TaskGroup:
    size: object  # processing requirement of each task, >= 0
    count: int    # number of identical tasks, >= 1


@dataclass(frozen=True)
class Job:
    job_id: int            # 1-based, contiguous
    weight: object         # > 0
    release: object        # stored; certificates require 0
    groups: tuple          # TaskGroup, strictly descending size

    def task_count(self) -> int:
        return sum(g.count for g in self.groups)

    def total_size(self):
        return sum(g.size * g.count for g in self.groups)


@dataclass(frozen=True)
class IcaBoundary:
    index: int          # boundary between class index and index+1 (1-based)
    speed_ratio_ok: bool
    capacity_ok: bool


@dataclass(frozen=True)
class IcaReport:
    ok: bool
    boundaries: tuple


@dataclass(frozen=True)
class ClassThresholds:
    """Derived machine-count thresholds for one class boundary l | l+1."""

    index: int      # l, 1-based
    m_blend: object  # (sum_{i<=l} m_i sigma_i) / sigma_{l+1}
    m_prefix: int    # sum_{i<=l} m_i
    m_reach: object  # m_prefix + m_blend


@dataclass(frozen=True)
class Instance:
    classes: tuple          # SpeedClass, speeds strictly decreasing
    jobs: tuple             # Job
    speedup: object         # gamma >= 1 multiplying every machine speed
    exact: bool = False
    provenance: dict = field(default_factory=dict, compare=False)

    # ---- machine helpers -------------------------------------------------
    def machine_count(self) -> int:
        return sum(c.count for c in self.classes)

    def class_count(self) -> int:
        return len(self.classes)

    def class_prefix_counts(self) -> tuple:
        """Cumulative machine counts (M_0=0, M_1, .., M_K)."""
        out = [0]
        for c in self.classes:
            out.append(out[-1] + c.count)
        return tuple(out)

    def class_prefix_capacities(self) -> tuple:
        zero = Fraction(0) if self.exact else 0.0
        out = [zero]
        for c in self.classes:
            out.append(out[-1] + c.capacity())
        return tuple(out)

    def capacity_prefix(self, k: int):
        """Total speed of the k fastest machines (flat beyond the last one).

        The speedup factor is not applied here.
        """
        assert k >= 0
        counts = self.class_prefix_counts()
        caps = self.class_prefix_capacities()
        if k >= counts[-1]:
            return caps[-1]
        # locate the class containing machine index k
        for li in range(len(self.classes)):
            if k <= counts[li + 1]:
                return caps[li] + (k - counts[li]) * self.classes[li].speed
        raise AssertionError("unreachable")

    def machine_speed(self, index: int):
        """Speed of machine `index` (1-based), without the speedup factor."""
        assert 1 <= index <= self.machine_count()
        counts = self.class_prefix_counts()
        for li, c in enumerate(self.classes):
            if index <= counts[li + 1]:
                return c.speed
        raise AssertionError("unreachable")

    def task_count(self) -> int:
        return sum(j.task_count() for j in self.jobs)

    def total_weight(self):
        return sum(j.weight for j in self.jobs)

    def has_releases(self) -> bool:
        return any(j.release != 0 for j in self.jobs)


def _group_sizes(job_id, weight, release, size_counts, exact):
    if weight <= 0:
        raise InstanceError(f"job {job_id}: weight must be positive, got {weight}")
    merged = {}
    for size, count in size_counts:
        if size < 0:
            raise InstanceError(f"job {job_id}: negative task size {size}")
        if count < 1 or count != int(count):
            raise InstanceError(f"job {job_id}: bad task count {count}")
        merged[size] = merged.get(size, 0) + int(count)
    if not merged:
        raise InstanceError(f"job {job_id}: needs at least one task")
    groups = tuple(
        TaskGroup(size=s, count=c) for s, c in sorted(merged.items(), reverse=True)
    )
    return Job(job_id=job_id, weight=weight, release=release, groups=groups)


def make_job(job_id, weight, sizes, release=0, exact=False):
    """Build a job from a flat size list or (size, count) pairs."""
    weight = coerce(weight, exact)
    release = coerce(release, exact)
    pairs = []
    for entry in sizes:
        if isinstance(entry, tuple):
            size, count = entry
            pairs.append((coerce(size, exact), count))
        else:
            pairs.append((coerce(entry, exact), 1))
    return _group_sizes(job_id, weight, release, pairs, exact)


def make_instance(classes, jobs, speedup=1, exact=False, provenance=None):
    pairs = [
        (c.speed, c.count) if isinstance(c, SpeedClass) else c for c in classes
    ]
    cls = tuple(
        SpeedClass(speed=coerce(s, exact), count=int(c)) for s, c in pairs
    )
    if not cls:
        raise InstanceError("instance needs at least one speed class")
    for c in cls:
        if c.speed <= 0:
            raise InstanceError(f"speed must be positive, got {c.speed}")
        if c.count < 1:
            raise InstanceError(f"class count must be >= 1, got {c.count}")
    for a, b in zip(cls, cls[1:]):
        if not a.speed > b.speed:
            raise InstanceError("class speeds must be strictly decreasing")
    return Instance(
        classes=cls,
        jobs=tuple(jobs),
        speedup=coerce(speedup, exact),
        exact=exact,
        provenance=dict(provenance or {}),
    )


def with_speedup(instance: Instance, gamma) -> Instance:
    return replace(instance, speedup=coerce(gamma, instance.exact))


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def instance_to_dict(instance: Instance) -> dict:
    jobs = []
    for j in instance.jobs:
        sizes = []
        for g in j.groups:
            if g.count == 1:
                sizes.append(json_number(g.size))
            else:
                sizes.append({"size": json_number(g.size), "count": g.count})
        jobs.append(
            {
                "weight": json_number(j.weight),
                "release": json_number(j.release),
                "sizes": sizes,
            }
        )
    return {
        "classes": [
            {"sigma": json_number(c.speed), "count": c.count} for c in instance.classes
        ],
        "jobs": jobs,
        "speedup": json_number(instance.speedup),
    }


def instance_from_dict(data: dict, exact: bool = False) -> Instance:
    try:
        classes = [
            (from_json_number(c["sigma"], exact), int(c["count"]))
            for c in data["classes"]
        ]
        jobs = []
        for idx, j in enumerate(data.get("jobs", []), start=1):
            pairs = []
            for entry in j["sizes"]:
                if isinstance(entry, dict) and "size" in entry:
                    pairs.append(
                        (from_json_number(entry["size"], exact), int(entry["count"]))
                    )
                else:
                    pairs.append((from_json_number(entry, exact), 1))
            jobs.append(
                make_job(
                    idx,
                    from_json_number(j["weight"], exact),
                    pairs,
                    release=from_json_number(j.get("release", 0), exact),
                    exact=exact,
                )
            )
        speedup = from_json_number(data.get("speedup", 1), exact)
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"malformed instance JSON: {exc}") from exc
    return make_instance(classes, jobs, speedup=speedup, exact=exact)


def load_instance(path, exact: bool = False) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return instance_from_dict(json.load(fh), exact=exact)


def dump_instance(instance: Instance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(instance), fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Preprocessing: rounding and capacity-based class selection
# ---------------------------------------------------------------------------

def round_speeds(raw_speeds, base: int = SPEED_BASE):
    """Round each speed down to the largest power of `base` not above it.

    Returns merged SpeedClass entries sorted by decreasing speed.

    >>> [(c.speed, c.count) for c in round_speeds([5000, 64, 3, 0.9])]
    [(4096, 1), (64, 1), (1, 1), (0.015625, 1)]
    """
    speeds = list(raw_speeds)
    if not speeds:
        raise InstanceError("round_speeds: empty speed list")
    counts = {}
    for s in speeds:
        if s <= 0:
            raise InstanceError(f"round_speeds: non-positive speed {s}")
        k = 0
        while base ** (k + 1) <= s:
            k += 1
        while base ** k > s:
            k -= 1
        counts[k] = counts.get(k, 0) + 1
    return [
        SpeedClass(speed=base ** k, count=n)
        for k, n in sorted(counts.items(), reverse=True)
    ]


def select_capacity_classes(classes, base: int = SPEED_BASE):
    """Greedy subset whose class capacities grow by at least 2*base.

    Scans from the fastest class; a class is kept when its capacity is at
    least 2*base times the capacity of the previously kept class. Kept
    counts are then inflated by the number K of kept classes, which
    restores the cumulative capacity condition.

    Returns (kept_indices, inflated_classes); indices are 1-based positions
    into the input list.

    >>> cl = [SpeedClass(10, 1), SpeedClass(1281, 1), SpeedClass(200000, 1)]
    >>> kept, out = select_capacity_classes(sorted(cl, key=lambda c: -c.speed))
    >>> kept
    (1, 2, 3)
    """
    classes = list(classes)
    if not classes:
        raise InstanceError("select_capacity_classes: no classes")
    for a, b in zip(classes, classes[1:]):
        if not a.speed > b.speed:
            raise InstanceError("select_capacity_classes: speeds must decrease")
    kept = [0]
    for idx in range(1, len(classes)):
        if classes[idx].capacity() >= 2 * base * classes[kept[-1]].capacity():
            kept.append(idx)
    k = len(kept)
    inflated = [
        SpeedClass(speed=classes[i].speed, count=classes[i].count * k) for i in kept
    ]
    return tuple(i + 1 for i in kept), inflated


def preprocess_raw_speeds(raw_speeds, base: int = SPEED_BASE):
    """Full pipeline: round speeds, select classes, inflate counts.

    Returns (classes, provenance) where provenance records what happened.
    """
    raw = list(raw_speeds)
    rounded = round_speeds(raw, base=base)
    kept, inflated = select_capacity_classes(rounded, base=base)
    provenance = {
        "raw_count": len(raw),
        "rounded": [(float(c.speed), c.count) for c in rounded],
        "kept_indices": list(kept),
        "inflation": len(kept),
    }
    return inflated, provenance


# ---------------------------------------------------------------------------
# Capacity validation and thresholds
# ---------------------------------------------------------------------------

def validate_ica(instance: Instance, base: int = SPEED_BASE) -> IcaReport:
    """Check the capacity growth conditions at every class boundary.

    Boundary l (between class l and l+1) requires
      sigma_l / sigma_{l+1} >= base, and
      m_{l+1} sigma_{l+1} >= 2 * sum_{l' <= l} m_{l'} sigma_{l'}.
    """
    boundaries = []
    ok = True
    cum = None
    for li, c in enumerate(instance.classes):
        if cum is None:
            cum = c.capacity()
            continue
        prev = instance.classes[li - 1]
        ratio_ok = bool(geq(prev.speed, base * c.speed))
        cap_ok = bool(geq(c.capacity(), 2 * cum))
        boundaries.append(
            IcaBoundary(index=li, speed_ratio_ok=ratio_ok, capacity_ok=cap_ok)
        )
        ok = ok and ratio_ok and cap_ok
        cum = cum + c.capacity()
    return IcaReport(ok=ok, boundaries=tuple(boundaries))


def thresholds(instance: Instance):
    """Machine-count thresholds per class boundary, used by certificates.

    For l = 1..K-1:
      m_blend_l  = (sum_{i<=l} m_i sigma_i) / sigma_{l+1}
      m_prefix_l = sum_{i<=l} m_i
      m_reach_l  = m_prefix_l + m_blend_l
    Requires the capacity conditions; asserts the derived facts
      2*m_blend_l <= m_{l+1},  m_reach_l >= 2*m_prefix_l,
      m_l sigma_l >= m_blend_l sigma_{l+1} / 2,  m_blend_l >= 2*m_l.
    """
    report = validate_ica(instance)
    if not report.ok:
        raise InstanceError("thresholds require the capacity growth conditions")
    out = []
    cum_cap = instance.classes[0].capacity()
    cum_cnt = instance.classes[0].count
    for li in range(len(instance.classes) - 1):
        cur = instance.classes[li]
        nxt = instance.classes[li + 1]
        m_blend = cum_cap / nxt.speed
        m_prefix = cum_cnt
        m_reach = m_prefix + m_blend
        assert leq(2 * m_blend, nxt.count), (
            f"boundary {li + 1}: 2*{m_blend} > m_{li + 2} = {nxt.count}"
        )
        assert geq(m_reach, 2 * m_prefix)
        assert geq(cur.capacity(), m_blend * nxt.speed / 2)
        assert geq(m_blend, 2 * cur.count)
        out.append(
            ClassThresholds(
                index=li + 1, m_blend=m_blend, m_prefix=m_prefix, m_reach=m_reach
            )
        )
        cum_cap = cum_cap + nxt.capacity()
        cum_cnt = cum_cnt + nxt.count
    return out
