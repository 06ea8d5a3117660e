"""Per-interval taxonomy of water-filling blocks.

Each interval of a trace partitions the alive tasks into blocks of machines
with a common water level. Blocks are labeled, in this priority order:

  simple  the average task rate s(B)/|B| lands in [gamma*sigma_l/2,
          2*gamma*sigma_l] for some class l (at most one, since class speeds
          are far apart)
  cheap   non-simple with w(B) < w(A^t)/(10K)
  long    non-simple, non-cheap, and for some class l the block covers at
          least half of the class-l machines but not all of class l+1
          (vacuous for the last class); a block can be long with respect to
          several classes and its label records the smallest
  short   everything else

The classification also scans structural facts the certificates rely on:
shape bounds for long blocks, the cheap-block budget, that short blocks
straddle exactly two consecutive classes and are dominated by the weight
frozen to their left, and the final gate that simple plus long blocks carry
at least w(A^t)/90.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .instances import Instance, thresholds, validate_ica
from .numutil import geq, leq
from .report import AnalysisError, CheckRecord

CHEAP_FRACTION = 10      # cheap: w(B) < w(A)/(CHEAP_FRACTION * K)
SHORT_CHARGE = 8         # short block weight vs weight frozen to its left
ALIVE_SPLIT = 90         # w(A) <= ALIVE_SPLIT * (simple + long weight)
SIMPLE_JOB_WINDOW = 64   # job simple wrt l: rate in gamma*sigma_l*[1/64, 64]
SIMPLE_BLOCK_WINDOW = 2  # block simple wrt l: avg in gamma*sigma_l*[1/2, 2]
SIMPLE_BLOCK_RATIO = 5   # diagnostic: w(B) vs weight of its simple jobs


@dataclass(frozen=True)
class BlockView:
    index: int                  # position within the interval, left to right
    label: str                  # simple | cheap | long | short
    label_class: int            # class for simple, smallest for long, else 0
    long_classes: tuple         # all classes the block is long with respect to
    weight: object              # total weight of member jobs
    task_count: int
    speed: object               # s(B), speedup included
    machine_lo: int             # first machine (1-based)
    machine_hi: int             # last machine (1-based, clamped)
    spans_beyond: bool          # tasks extend past the machine pool
    class_machine_counts: tuple  # machines of each class inside the span
    job_ids: tuple

    def average(self):
        return self.speed / self.task_count


@dataclass(frozen=True)
class IntervalBlocks:
    index: int
    start: object
    end: object
    alive_weight: object
    blocks: tuple
    job_block: dict             # job_id -> index into blocks

    def length(self):
        return self.end - self.start

    def weight_of(self, label: str):
        return sum(b.weight for b in self.blocks if b.label == label)

    def block_for_job(self, job_id: int) -> BlockView:
        return self.blocks[self.job_block[job_id]]


@dataclass
class BlockClassification:
    intervals: list
    checks: list
    flags: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.checks if not r.diagnostic)


def simple_job_classes(rate, gamma, classes, rel=1e-9):
    """Classes l with rate in [gamma*sigma_l/64, 64*gamma*sigma_l].

    Windows of adjacent classes overlap (speeds drop by >= 64), so a rate
    can qualify for two consecutive classes.
    """
    out = []
    for li, c in enumerate(classes, start=1):
        center = gamma * c.speed
        if geq(rate, center / SIMPLE_JOB_WINDOW, rel=rel) and leq(
            rate, center * SIMPLE_JOB_WINDOW, rel=rel
        ):
            out.append(li)
    return tuple(out)


def nearest_simple_class(rate, gamma, classes):
    """The qualifying class whose speed is nearest to rate in log scale.

    Ties (rate exactly between two class speeds) go to the faster class.
    Returns 0 when no class qualifies.
    """
    qualifying = simple_job_classes(rate, gamma, classes)
    if not qualifying:
        return 0
    best = 0
    best_gap = math.inf
    for li in qualifying:
        gap = abs(math.log(float(rate)) - math.log(float(gamma * classes[li - 1].speed)))
        if gap < best_gap - 1e-12 or (abs(gap - best_gap) <= 1e-12 and li < best):
            best, best_gap = li, gap
    return best


def _classify_block(block, instance, gamma, alive_weight, k):
    counts = instance.class_prefix_counts()
    m = counts[-1]
    lo_c = min(block.lo, m)
    hi_c = min(block.hi, m)
    per_class = tuple(
        max(0, min(hi_c, counts[li]) - max(lo_c, counts[li - 1]))
        for li in range(1, k + 1)
    )
    weight = block.weight()
    n_tasks = block.task_count()
    avg = block.speed / n_tasks

    simple_class = 0
    for li in range(1, k + 1):
        center = gamma * instance.classes[li - 1].speed
        if geq(avg, center / SIMPLE_BLOCK_WINDOW) and leq(
            avg, center * SIMPLE_BLOCK_WINDOW
        ):
            simple_class = li
            break

    long_classes = []
    for li in range(1, k + 1):
        covers_half = 2 * per_class[li - 1] >= instance.classes[li - 1].count
        full_next = li < k and per_class[li] >= instance.classes[li].count
        if covers_half and not full_next:
            long_classes.append(li)

    if simple_class:
        label, label_class = "simple", simple_class
        long_classes = []
    elif not geq(weight * CHEAP_FRACTION * k, alive_weight):
        label, label_class = "cheap", 0
        long_classes = []
    elif long_classes:
        label, label_class = "long", long_classes[0]
    else:
        label, label_class = "short", 0

    return BlockView(
        index=block.index,
        label=label,
        label_class=label_class,
        long_classes=tuple(long_classes),
        weight=weight,
        task_count=n_tasks,
        speed=block.speed,
        machine_lo=lo_c + 1,
        machine_hi=hi_c,
        spans_beyond=block.hi > m,
        class_machine_counts=per_class,
        job_ids=tuple(mb.job_id for mb in block.members),
    )


def classify_blocks(trace, instance: Instance) -> BlockClassification:
    """Label every block of every trace interval and scan the block facts.

    Requires the capacity growth conditions (the taxonomy is meaningless
    without them). Hard checks cover long-block shape, the cheap budget,
    short-block structure and charging, and the 1/90 alive-weight split;
    the simple-block job-weight comparison is recorded as a diagnostic.
    """
    if not validate_ica(instance).ok:
        raise AnalysisError("block classification requires the capacity growth conditions")
    k = len(instance.classes)
    gamma = trace.gamma()
    bounds = thresholds(instance)  # boundaries 1..K-1

    long_shape = CheckRecord("long-block-shape")
    cheap_budget = CheckRecord("cheap-block-budget")
    short_two = CheckRecord("short-block-two-classes")
    short_charge = CheckRecord("short-block-left-charge")
    alive_split = CheckRecord("alive-weight-split")
    simple_jobs = CheckRecord("simple-block-job-weight", diagnostic=True)

    intervals = []
    long_wrt_last = 0
    worst_simple_ratio = 0.0

    for t_idx, iv in enumerate(trace.intervals):
        alive_weight = iv.alive_weight()
        views = tuple(
            _classify_block(b, instance, gamma, alive_weight, k)
            for b in iv.profile.blocks
        )
        job_block = {}
        for v in views:
            for jid in v.job_ids:
                job_block[jid] = v.index
        intervals.append(
            IntervalBlocks(
                index=t_idx,
                start=iv.start,
                end=iv.end,
                alive_weight=alive_weight,
                blocks=views,
                job_block=job_block,
            )
        )

        # long-block shape facts: |B| <= m_blend_l and s(B) close to the
        # class capacity; for the last class only the speed lower bound
        # applies (there is no faster boundary to cap the block)
        for v in views:
            for li in v.long_classes:
                cls = instance.classes[li - 1]
                cap = gamma * cls.capacity()
                long_shape.require_leq(cap / 2, v.speed, (t_idx, v.index, li, "speed-lo"))
                if li < k:
                    long_shape.require_leq(
                        v.speed, 4 * cap, (t_idx, v.index, li, "speed-hi")
                    )
                    long_shape.require_leq(
                        v.task_count, bounds[li - 1].m_blend, (t_idx, v.index, li, "size")
                    )
                else:
                    long_wrt_last += 1

        cheap_views = [v for v in views if v.label == "cheap"]
        cheap_budget.require_leq(len(cheap_views), k, (t_idx, "count"))
        cheap_budget.require_leq(
            sum(v.weight for v in cheap_views),
            alive_weight / CHEAP_FRACTION,
            (t_idx, "weight"),
        )

        acc = None  # weight since the previous short block; None until a block
        for v in views:
            if v.label == "short":
                present = [li for li in range(1, k + 1) if v.class_machine_counts[li - 1]]
                short_two.require(
                    len(present) == 2 and present[1] == present[0] + 1,
                    (t_idx, v.index, tuple(present)),
                )
                left = acc if acc is not None else 0
                short_charge.require(
                    left > 0, (t_idx, v.index, "left-weight"), lhs=0.0, rhs=float(left)
                )
                short_charge.require_leq(
                    v.weight, SHORT_CHARGE * left, (t_idx, v.index, "charge")
                )
                acc = 0
            else:
                acc = (acc or 0) + v.weight

        anchored = sum(v.weight for v in views if v.label in ("simple", "long"))
        alive_split.require_leq(alive_weight, ALIVE_SPLIT * anchored, (t_idx,))

        # diagnostic: weight of a simple block vs its simple member jobs
        for v in views:
            if v.label != "simple":
                continue
            simple_weight = 0
            for mb in iv.profile.blocks[v.index].members:
                if v.label_class in simple_job_classes(mb.rate, gamma, instance.classes):
                    simple_weight += mb.share * mb.count
            simple_jobs.require_leq(
                v.weight, SIMPLE_BLOCK_RATIO * simple_weight, (t_idx, v.index)
            )
            if simple_weight > 0:
                worst_simple_ratio = max(
                    worst_simple_ratio, float(v.weight) / float(simple_weight)
                )
            else:
                worst_simple_ratio = math.inf

    return BlockClassification(
        intervals=intervals,
        checks=[long_shape, cheap_budget, short_two, short_charge, alive_split, simple_jobs],
        flags={
            "long_wrt_last_class": long_wrt_last,
            "worst_simple_block_ratio": worst_simple_ratio,
        },
    )
