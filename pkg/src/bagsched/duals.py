"""Dual-fitting certificates for traces of the water-filling scheduler.

Three certificate families, each taking a release-free trace and producing a
DualCertificate whose checks exhaustively scan the dual LP constraints:

  weaker      works for any instance; needs speedup >= 2*max(K, log2 n).
              Task credits decay by halves along the descending-size order,
              alpha spreads each alive job's weight uniformly, and the
              machine credit is w(A^t)/(m_l * gamma) per class-l machine.
  single_job  one job of weight 1 on a capacity-validated instance; needs
              speedup >= 2K. Task credits follow rank bands derived from
              the blended machine-count thresholds; the certificate value
              is exactly half the makespan.
  general     any capacity-validated instance; needs speedup
              >= 1024*K*log2(K). Splits credits into a rate-simple half
              (driven by last-simple times) and a long-block half (driven
              by block visits with running-max weights), on top of the
              block taxonomy from classify_blocks.

Constraint conventions shared by all families: the machine index collapses
to the K speed classes; the two-time quantifier (alpha at t', machine credit
at any t <= t') collapses to a running minimum of the alive weight, which
for release-free traces equals the current value (asserted); per-task
quantifiers run over position spans in each job's descending-size order,
scanning every span boundary, which is exact because all credit functions
are constant on the spans. Speeds sigma_l in constraints are the original
(un-sped) speeds; task rates come from the trace and include the speedup.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

from .blocks import classify_blocks, simple_job_classes, nearest_simple_class
from .instances import Instance, thresholds, validate_ica
from .numutil import coerce
from .report import AnalysisError, CheckRecord, DualCertificate
from .report import certified_ratio  # noqa: F401  (re-exported)

__all__ = [
    "CONSTANTS",
    "FittingConstants",
    "RankBands",
    "build_general_duals",
    "build_single_job_duals",
    "build_weaker_duals",
    "certified_ratio",
    "halving_group",
    "halving_spans",
    "rank_bands",
]


@dataclass(frozen=True)
class FittingConstants:
    """Named constants of the certificate constructions, in one place so
    tests can assert the exact values the analysis promises."""

    job_window: int = 64        # rate-simple window: gamma*sigma_l*[1/64, 64]
    weaker_margin: int = 2      # gamma >= 2*max(K, log2 n)
    single_margin: int = 2      # gamma >= 2K; credit denominators 2K*...
    general_base: int = 1024    # gamma >= 1024*K*log2 K
    simple_alpha_div: int = 4   # alpha' = w/(4K n)
    long_delta_div: int = 96    # delta'' = max visit weight/(96 K logK mtilde)
    long_alpha_div: int = 12    # alpha'' = L w(B)/(12 K logK s(B))
    long_cover_delta: int = 32  # alpha'' <= K beta L/(6 g s) + 32 delta'' L/(g s)
    long_cover_beta_div: int = 6
    long_cover_stated: int = 8  # the looser coefficient checked as diagnostic
    root_charge: int = 6        # visit charge: w(B)/mtilde_l <= 6 w_j/n_t(j)
    alpha_floor: int = 1800     # sum alpha >= cost/(1800 K logK)
    beta_scale: int = 1         # beta = w(A^t)/(beta_scale K^2 logK m_l)
    cheap_fraction: int = 10
    short_charge: int = 8
    alive_split: int = 90
    simple_block_ratio: int = 5


CONSTANTS = FittingConstants()


# ---------------------------------------------------------------------------
# position-span helpers
# ---------------------------------------------------------------------------

def _span_value(spans, starts, q):
    """Value at position q in disjoint, sorted spans [(lo, hi, val)]."""
    i = bisect_right(starts, q) - 1
    if i >= 0:
        lo, hi, val = spans[i]
        if lo <= q < hi:
            return val
    return 0


def _merge_sum(span_lists, upto, zero):
    """Disjoint spans covering [0, upto) whose value at q is the sum over
    all input spans (possibly overlapping) containing q."""
    cuts = {0, upto}
    for sl in span_lists:
        for lo, hi, _ in sl:
            if lo < upto:
                cuts.add(lo)
                cuts.add(min(hi, upto))
    cuts = sorted(cuts)
    out = []
    for a, b in zip(cuts, cuts[1:]):
        val = zero
        for sl in span_lists:
            for lo, hi, v in sl:
                if lo <= a and b <= hi:
                    val = val + v
        out.append((a, b, val))
    return out


def _assert_nonincreasing(spans, what):
    for (_, _, v1), (_, _, v2) in zip(spans, spans[1:]):
        assert v2 <= v1 or math.isclose(float(v1), float(v2), rel_tol=1e-9), (
            f"{what}: span values must not increase along positions"
        )


def _reject_releases(trace, family):
    if trace.has_releases:
        raise AnalysisError(
            f"{family} certificate requires a release-free trace; "
            "jobs arriving after time 0 are not certified"
        )


def _job_index(instance):
    return {j.job_id: j for j in instance.jobs}


# ---------------------------------------------------------------------------
# family 1: weight spread + halving task credits
# ---------------------------------------------------------------------------

def halving_group(position: int) -> int:
    """Group index h of a task at 0-based descending-size position.

    Groups have sizes 1, 2, 4, ...; group h covers positions
    [2^(h-1) - 1, 2^h - 1).

    >>> [halving_group(q) for q in range(7)]
    [1, 2, 2, 3, 3, 3, 3]
    """
    assert position >= 0
    return (position + 1).bit_length()


def halving_spans(weight, task_count, gamma):
    """Task-credit spans w/(2^(h-1)*gamma) over descending-size positions.

    The group sizes are exact powers of two; the trailing group may be
    partial (conceptually completed by zero-size padding tasks, which carry
    credits but never enter any constraint).
    """
    spans = []
    h = 1
    while (1 << (h - 1)) - 1 < task_count:
        lo = (1 << (h - 1)) - 1
        hi = min((1 << h) - 1, task_count)
        spans.append((lo, hi, weight / ((1 << (h - 1)) * gamma)))
        h += 1
    return spans


def build_weaker_duals(trace, instance: Instance) -> DualCertificate:
    """Certificate feasible at speedup >= 2*max(K, log2 n) for any instance.

    alpha spreads each alive job's weight uniformly over its alive tasks,
    task credits halve along descending-size groups, and each class-l
    machine carries w(A^t)/(m_l*gamma). The dual objective is
    (1 - K/gamma) * (total weighted completion time).
    """
    _reject_releases(trace, "weaker")
    k = len(instance.classes)
    gamma = trace.gamma()
    n_real = instance.task_count()
    required = CONSTANTS.weaker_margin * max(k, math.log2(n_real) if n_real > 1 else 0)
    gamma_ok = float(gamma) >= required * (1 - 1e-12)
    zero = coerce(0, instance.exact)

    d_budget = CheckRecord("task-credit-budget")
    a_budget = CheckRecord("alpha-budget")
    cover = CheckRecord("rate-cover")
    monotone = CheckRecord("alive-weight-monotone")
    cost_id = CheckRecord("alpha-equals-cost", diagnostic=True)

    delta = {}
    starts = {}
    for job in instance.jobs:
        spans = halving_spans(job.weight, job.task_count(), gamma)
        delta[job.job_id] = spans
        starts[job.job_id] = [s[0] for s in spans]
        total = sum((hi - lo) * v for lo, hi, v in spans)
        d_budget.require_leq(total, job.weight, (job.job_id,))

    sigmas = [c.speed for c in instance.classes]
    counts = [c.count for c in instance.classes]
    alpha_total = zero
    weighted_time = zero
    prev_w = None
    w_min = None
    for t, iv in enumerate(trace.intervals):
        w_alive = iv.alive_weight()
        length = iv.length()
        if prev_w is not None:
            monotone.require_leq(w_alive, prev_w, (t,))
        prev_w = w_alive
        w_min = w_alive if w_min is None else min(w_min, w_alive)
        weighted_time = weighted_time + length * w_alive
        betas = [w_min / (counts[li] * gamma) for li in range(k)]
        for ij in iv.jobs:
            aval = ij.weight / ij.count
            a_budget.require_leq(ij.count * aval, ij.weight, (t, ij.job_id))
            alpha_total = alpha_total + length * ij.count * aval
            rate = ij.rate
            for lo, hi, dval in delta[ij.job_id]:
                if lo >= ij.count:
                    break
                for li in range(k):
                    cover.require_leq(
                        aval,
                        (betas[li] + dval) * rate / sigmas[li],
                        (t, ij.job_id, lo, li + 1),
                    )

    beta_total = k * weighted_time / gamma
    cost_id.require_leq(alpha_total, trace.objective, ("sum",))
    cost_id.require_leq(trace.objective, alpha_total, ("sum",))

    return DualCertificate(
        family="weaker",
        gamma=gamma,
        gamma_required=float(required),
        gamma_ok=gamma_ok,
        alpha_total=alpha_total,
        beta_total=beta_total,
        checks=[d_budget, a_budget, cover, monotone, cost_id],
        flags={"task_count": n_real, "class_count": k},
    )


# ---------------------------------------------------------------------------
# family 2: single job, rank bands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RankBands:
    """Completion-rank bands of the single-job certificate.

    Positions are 0-based in descending task size (position 0 finishes
    last). Band l covers positions [prefix[l], reach[l]) with f[l] slots
    and the tail band covers [reach[l], prefix[l+1]) with f_tail[l] slots;
    positions before prefix[1] reuse the first band's credit and positions
    at or past prefix[K] carry none.
    """

    prefix: tuple      # (0, M_1, .., M_K) cumulative machine counts
    reach: tuple       # M_l + mtilde_l per boundary l = 1..K-1
    band: tuple        # f_l = mtilde_l
    tail: tuple        # ftilde_l = m_{l+1} - mtilde_l
    break_times: tuple  # first time alive count <= M_l, per l = 1..K
    reach_times: tuple  # first time alive count <= reach_l, per l = 1..K-1


def rank_bands(instance: Instance) -> RankBands:
    """Derive the rank-band structure (without break times) of an instance.

    Requires capacity validation and integral blended machine counts, since
    band cardinalities count whole tasks.
    """
    if not validate_ica(instance).ok:
        raise AnalysisError("rank bands require the capacity growth conditions")
    bounds = thresholds(instance)
    band = []
    for b in bounds:
        blend = b.m_blend
        if blend != int(blend):
            raise AnalysisError(
                f"boundary {b.index}: blended machine count {blend} is not "
                "integral; rank bands need whole task counts"
            )
        band.append(int(blend))
    prefix = instance.class_prefix_counts()
    reach = tuple(prefix[li + 1] + band[li] for li in range(len(band)))
    tail = tuple(
        instance.classes[li + 1].count - band[li] for li in range(len(band))
    )
    return RankBands(
        prefix=prefix,
        reach=reach,
        band=tuple(band),
        tail=tail,
        break_times=(),
        reach_times=(),
    )


def build_single_job_duals(trace, instance: Instance) -> DualCertificate:
    """Certificate for one weight-1 job; feasible at speedup >= 2K.

    Task credits follow the rank bands, each class-l machine carries
    1/(2K*m_l) while work remains, and alpha either spreads uniformly over
    alive tasks or concentrates on band l's positions depending on where
    the alive count sits. The objective is exactly half the makespan.
    """
    _reject_releases(trace, "single_job")
    if len(instance.jobs) != 1:
        raise AnalysisError(
            f"single_job certificate needs exactly one job, got {len(instance.jobs)}"
        )
    job = instance.jobs[0]
    if job.weight != 1:
        raise AnalysisError("single_job certificate needs job weight exactly 1")
    if not validate_ica(instance).ok:
        raise AnalysisError("single_job certificate requires the capacity growth conditions")

    k = len(instance.classes)
    gamma = trace.gamma()
    required = float(CONSTANTS.single_margin * k)
    gamma_ok = float(gamma) >= required * (1 - 1e-12)
    exact = instance.exact
    one = coerce(1, exact)
    half = one / 2

    bands = rank_bands(instance)
    prefix, reach = bands.prefix, bands.reach
    n_total = job.task_count()

    band_order = CheckRecord("rank-band-order")
    for li in range(k - 2):
        band_order.require_leq(bands.band[li], bands.tail[li], (li + 1, "band-vs-tail"))
        band_order.require_leq(bands.tail[li], bands.band[li + 1], (li + 1, "tail-vs-next"))
    if k >= 2:
        band_order.require_leq(bands.band[k - 2], bands.tail[k - 2], (k - 1, "band-vs-tail"))

    # task-credit spans over 0-based positions; head positions reuse band 1
    dspans = []
    if k >= 2:
        head_hi = min(prefix[1], n_total)
        if head_hi > 0:
            dspans.append((0, head_hi, one / (2 * k * bands.band[0])))
        for li in range(k - 1):
            lo, hi = prefix[li + 1], min(reach[li], n_total)
            if lo < hi:
                dspans.append((lo, hi, one / (2 * k * bands.band[li])))
            lo, hi = reach[li], min(prefix[li + 2], n_total)
            if lo < hi:
                dspans.append((lo, hi, one / (2 * k * bands.tail[li])))
    _assert_nonincreasing(dspans, "rank-band credits")
    dstarts = [s[0] for s in dspans]

    d_budget = CheckRecord("task-credit-budget")
    d_budget.require_leq(
        sum((hi - lo) * v for lo, hi, v in dspans), one, (job.job_id,)
    )

    a_budget = CheckRecord("alpha-budget")
    cover = CheckRecord("rate-cover")
    spread_cover = CheckRecord("spread-case-cover")
    band_cover = CheckRecord("band-case-cover")
    n_monotone = CheckRecord("alive-count-monotone")
    beta_half = CheckRecord("machine-credit-half", diagnostic=True)
    epoch_strict = CheckRecord("epoch-strict-order", diagnostic=True)
    obj_half = CheckRecord("objective-half-makespan", diagnostic=True)

    sigmas = [c.speed for c in instance.classes]
    counts = [c.count for c in instance.classes]
    betas = [one / (2 * k * counts[li]) for li in range(k)]
    beta_per_time = sum(counts[li] * betas[li] for li in range(k))
    beta_half.require_leq(beta_per_time, half, ("per-time",))
    beta_half.require_leq(half, beta_per_time, ("per-time",))

    zero = coerce(0, exact)
    alpha_total = zero
    beta_total = zero
    head_spread = False
    prev_n = None
    break_times = [None] * (k + 1)   # index l: first time alive <= prefix[l]
    reach_times = [None] * (k - 1) if k >= 1 else []

    for t, iv in enumerate(trace.intervals):
        ij = iv.jobs[0]
        n_t, rate, length = ij.count, ij.rate, iv.length()
        if prev_n is not None:
            n_monotone.require_leq(n_t, prev_n, (t,))
        prev_n = n_t
        for li in range(1, k + 1):
            if break_times[li] is None and n_t <= prefix[li]:
                break_times[li] = iv.start
        for li in range(k - 1):
            if reach_times[li] is None and n_t <= reach[li]:
                reach_times[li] = iv.start

        # resolve the alpha case from the alive count
        lstar = 0
        concentrated = False
        if n_t >= prefix[k] or n_t < prefix[1]:
            head_spread = head_spread or n_t < prefix[1]
        else:
            for li in range(1, k):
                if prefix[li] <= n_t < reach[li - 1]:
                    lstar = li
                    break
                if reach[li - 1] <= n_t < prefix[li + 1]:
                    lstar = li
                    concentrated = True
                    break
            assert lstar, f"alive count {n_t} escaped the rank bands"

        if concentrated:
            aspans = [(prefix[lstar], reach[lstar - 1], one / bands.band[lstar - 1])]
        else:
            aspans = [(0, n_t, one / n_t)]
        a_sum = sum((hi - lo) * v for lo, hi, v in aspans)
        a_budget.require_leq(a_sum, one, (t,))
        alpha_total = alpha_total + length * a_sum
        beta_total = beta_total + length * beta_per_time

        # the dual rate constraint, exhaustively over band segments
        for alo, ahi, aval in aspans:
            seams = sorted(
                {alo, ahi, *[b for b in dstarts if alo < b < ahi],
                 *[s[1] for s in dspans if alo < s[1] < ahi]}
            )
            for qlo, qhi in zip(seams, seams[1:]):
                if qlo >= qhi:
                    continue
                dval = _span_value(dspans, dstarts, qlo)
                for li in range(k):
                    cover.require_leq(
                        aval,
                        (betas[li] + dval) * rate / sigmas[li],
                        (t, qlo, li + 1),
                    )

        # the two named per-case inequalities
        if lstar and not concentrated:
            dmin = one / (2 * k * bands.band[lstar - 1])
            for li in range(k):
                spread_cover.require_leq(
                    one / n_t,
                    (rate / sigmas[li]) * (betas[li] + dmin),
                    (t, li + 1, lstar),
                )
        if concentrated:
            dval = one / (2 * k * bands.band[lstar - 1])
            for li in range(k):
                band_cover.require_leq(
                    one / bands.band[lstar - 1],
                    (gamma * sigmas[lstar] / sigmas[li]) * (betas[li] + dval),
                    (t, li + 1, lstar),
                )

    makespan = trace.makespan
    if break_times and break_times[0] is None:
        break_times[0] = zero
    break_times = [makespan if bt is None else bt for bt in break_times]
    reach_times = [makespan if rt is None else rt for rt in reach_times]
    for li in range(1, k - 1):
        # strictly interleaved breakpoints fail when whole size groups
        # finish together, hence diagnostic
        epoch_strict.require(
            break_times[li + 1] < reach_times[li - 1] < break_times[li],
            (li,),
            lhs=float(break_times[li + 1]),
            rhs=float(break_times[li]),
        )

    obj_half.require_leq(alpha_total, makespan, ("alpha",))
    obj_half.require_leq(makespan, alpha_total, ("alpha",))
    obj_half.require_leq(beta_total, makespan / 2, ("beta",))
    obj_half.require_leq(makespan / 2, beta_total, ("beta",))

    bands = RankBands(
        prefix=bands.prefix,
        reach=bands.reach,
        band=bands.band,
        tail=bands.tail,
        break_times=tuple(break_times[1:]),
        reach_times=tuple(reach_times),
    )
    return DualCertificate(
        family="single_job",
        gamma=gamma,
        gamma_required=required,
        gamma_ok=gamma_ok,
        alpha_total=alpha_total,
        beta_total=beta_total,
        checks=[
            band_order, d_budget, a_budget, cover, spread_cover, band_cover,
            n_monotone, beta_half, epoch_strict, obj_half,
        ],
        flags={
            "head_spread_used": head_spread,
            "bands": {
                "prefix": [int(x) for x in bands.prefix],
                "reach": [int(x) for x in bands.reach],
                "band": [int(x) for x in bands.band],
                "tail": [int(x) for x in bands.tail],
                "break_times": [float(x) for x in bands.break_times],
                "reach_times": [float(x) for x in bands.reach_times],
            },
        },
    )


# ---------------------------------------------------------------------------
# family 3: general instances, simple + long split
# ---------------------------------------------------------------------------

def _log_scale(k: int, exact: bool):
    """max(log2 K, 1), kept rational when it is integral."""
    val = max(math.log2(k), 1.0)
    if exact and val == int(val):
        return Fraction(int(val))
    return val


def _running_max_spans(visits, coef):
    """Credit spans from long-block visits [(interval, alive, weight)].

    A position alive through the first k visits is credited the running
    maximum of those weights times coef; alive counts only shrink, so the
    spans are the prefixes [0, alive_k) with prefix-max values.
    """
    prefix_max = []
    cur = None
    for _, alive, weight in visits:
        cur = weight if cur is None or weight > cur else cur
        prefix_max.append((alive, cur))
    # alive counts shrink over time, so walking the visits backward emits
    # spans in ascending position order with non-increasing running maxima
    out = []
    lo = 0
    for idx in range(len(prefix_max) - 1, -1, -1):
        alive, val = prefix_max[idx]
        if alive > lo:
            out.append((lo, alive, val * coef))
            lo = alive
    _assert_nonincreasing(out, "long-visit credits")
    return out


def build_general_duals(trace, instance: Instance) -> DualCertificate:
    """Certificate for many jobs at speedup >= 1024*K*log2(K).

    Combines a rate-simple half (credits at the last interval each job ran
    near a class speed) and a long-block half (credits from block visits),
    with machine credits w(A^t)/(K^2 log2(K) m_l). Merges in the block
    taxonomy checks from classify_blocks.
    """
    _reject_releases(trace, "general")
    if not validate_ica(instance).ok:
        raise AnalysisError("general certificate requires the capacity growth conditions")
    k = len(instance.classes)
    gamma = trace.gamma()
    exact = instance.exact
    logk = _log_scale(k, exact)
    required = CONSTANTS.general_base * k * max(math.log2(k), 1.0)
    gamma_ok = float(gamma) >= required * (1 - 1e-12)
    zero = coerce(0, exact)

    classification = classify_blocks(trace, instance)
    bounds = thresholds(instance)
    jobs = _job_index(instance)
    sigmas = [c.speed for c in instance.classes]
    counts = [c.count for c in instance.classes]

    # ---- pass 1: last-simple intervals and long-block visits -------------
    last_simple = {}   # (job_id, class) -> alive count at the last simple interval
    chosen = {}        # (interval, job_id) -> class the job is simple wrt, or 0
    visits = {}        # (job_id, class) -> [(interval, alive, block weight)]
    long_at = {}       # (interval, job_id) -> BlockView of its long block
    for t, iv in enumerate(trace.intervals):
        cls_iv = classification.intervals[t]
        for ij in iv.jobs:
            qual = simple_job_classes(ij.rate, gamma, instance.classes)
            for li in qual:
                last_simple[(ij.job_id, li)] = ij.count
            chosen[(t, ij.job_id)] = (
                nearest_simple_class(ij.rate, gamma, instance.classes) if qual else 0
            )
            view = cls_iv.block_for_job(ij.job_id)
            if view.label == "long":
                long_at[(t, ij.job_id)] = view
                for li in view.long_classes:
                    if li < k:  # no blended count exists past the last class
                        visits.setdefault((ij.job_id, li), []).append(
                            (t, ij.count, view.weight)
                        )

    # ---- static per-job credit spans --------------------------------------
    simple_budget = CheckRecord("simple-credit-budget")
    long_budget = CheckRecord("long-credit-budget")
    total_budget = CheckRecord("task-credit-budget")
    root_charge = CheckRecord("long-visit-charge")
    doubling = CheckRecord("long-visit-doubling")

    dprime = {}
    ddouble = {}
    for job in instance.jobs:
        jid = job.job_id
        n_j = job.task_count()
        raw = []
        for li in range(1, k + 1):
            n_tau = last_simple.get((jid, li))
            if n_tau:
                raw.append([(0, n_tau, job.weight / (2 * k * n_tau))])
        merged = _merge_sum(raw, n_j, zero) if raw else []
        merged = [s for s in merged if s[2] != 0]
        _assert_nonincreasing(merged, "last-simple credits")
        dprime[jid] = (merged, [s[0] for s in merged])
        simple_budget.require_leq(
            sum((hi - lo) * v for lo, hi, v in merged), job.weight / 2, (jid,)
        )

        raw2 = []
        for li in range(1, k):
            vlist = visits.get((jid, li))
            if not vlist:
                continue
            coef = 1 / (CONSTANTS.long_delta_div * k * logk * bounds[li - 1].m_blend)
            raw2.append(_running_max_spans(vlist, coef))
            # greedy doubling chain along the visit weights
            chain = 1
            anchor = vlist[0][2]
            for _, _, wb in vlist[1:]:
                if wb >= 2 * anchor:
                    chain += 1
                    anchor = wb
            doubling.require_leq(chain, 1 + math.log2(10 * k), (jid, li))
        merged2 = _merge_sum(raw2, n_j, zero) if raw2 else []
        merged2 = [s for s in merged2 if s[2] != 0]
        _assert_nonincreasing(merged2, "long-visit credits")
        ddouble[jid] = (merged2, [s[0] for s in merged2])
        long_budget.require_leq(
            sum((hi - lo) * v for lo, hi, v in merged2), job.weight / 2, (jid,)
        )
        total_budget.require_leq(
            sum((hi - lo) * v for lo, hi, v in merged)
            + sum((hi - lo) * v for lo, hi, v in merged2),
            job.weight,
            (jid,),
        )

    for (jid, li), vlist in visits.items():
        blend = bounds[li - 1].m_blend
        for t, alive, wb in vlist:
            root_charge.require_leq(
                wb / blend,
                CONSTANTS.root_charge * jobs[jid].weight / alive,
                (t, jid, li),
            )

    # ---- pass 2: per-interval constraint scan ------------------------------
    a_budget = CheckRecord("alpha-budget")
    sa_budget = CheckRecord("simple-alpha-budget")
    la_budget = CheckRecord("long-alpha-budget")
    la_identity = CheckRecord("long-alpha-identity", diagnostic=True)
    cover = CheckRecord("rate-cover")
    cover_simple = CheckRecord("rate-cover-simple-half")
    cover_long = CheckRecord("rate-cover-long-half")
    cover_simple_half = CheckRecord("simple-cover-bound")
    cover_long_half = CheckRecord("long-cover-bound")
    cover_long_tight = CheckRecord("long-cover-tight", diagnostic=True)
    monotone = CheckRecord("alive-weight-monotone")
    beta_identity = CheckRecord("machine-credit-cost-identity")
    alpha_floor = CheckRecord("alpha-cost-floor")

    beta_div = CONSTANTS.beta_scale * k * k * logk
    alpha_total = zero
    beta_total = zero
    prev_w = None
    w_min = None
    for t, iv in enumerate(trace.intervals):
        w_alive = iv.alive_weight()
        length = iv.length()
        if prev_w is not None:
            monotone.require_leq(w_alive, prev_w, (t,))
        prev_w = w_alive
        w_min = w_alive if w_min is None else min(w_min, w_alive)
        beta_total = beta_total + length * w_alive / (k * logk)
        beta_min = [w_min / (beta_div * counts[li]) for li in range(k)]
        beta_now = [w_alive / (beta_div * counts[li]) for li in range(k)]

        for ij in iv.jobs:
            jid, n_t, rate, w_j = ij.job_id, ij.count, ij.rate, ij.weight
            lstar = chosen[(t, jid)]
            if lstar:
                n1 = last_simple[(jid, lstar)]
                a1 = w_j / (4 * k * n1)
            else:
                n1, a1 = 0, zero
            view = long_at.get((t, jid))
            if view is not None:
                a2 = rate * view.weight / (CONSTANTS.long_alpha_div * k * logk * view.speed)
            else:
                a2 = zero

            s_sum = n1 * a1
            l_sum = n_t * a2
            if lstar:
                sa_budget.require_leq(s_sum, w_j / 2, (t, jid))
            if view is not None:
                la_budget.require_leq(l_sum, w_j / 2, (t, jid))
                expected = w_j / (CONSTANTS.long_alpha_div * k * logk)
                la_identity.require_leq(l_sum, expected, (t, jid))
                la_identity.require_leq(expected, l_sum, (t, jid))
            if lstar or view is not None:
                a_budget.require_leq(s_sum + l_sum, w_j, (t, jid))
            alpha_total = alpha_total + length * (s_sum + l_sum)
            if not lstar and view is None:
                continue

            # credits never increase along positions, so each constraint
            # family binds at the end of an alpha regime: position n1-1
            # (both alphas active) and n_t-1 (only the long alpha)
            sp, sp_starts = dprime[jid]
            dp, dp_starts = ddouble[jid]
            probes = []
            if lstar:
                probes.append((n1 - 1, a1, a2))
            if not lstar or n1 < n_t:
                probes.append((n_t - 1, zero, a2))
            for q, a1q, a2q in probes:
                d1 = _span_value(sp, sp_starts, q)
                d2 = _span_value(dp, dp_starts, q)
                for li in range(k):
                    ls = rate / sigmas[li]
                    cover.require_leq(
                        a1q + a2q,
                        (beta_min[li] + d1 + d2) * ls,
                        (t, jid, q, li + 1),
                    )
                    cover_simple.require_leq(
                        a1q, (beta_min[li] / 2 + d1) * ls, (t, jid, q, li + 1)
                    )
                    cover_long.require_leq(
                        a2q, (beta_min[li] / 2 + d2) * ls, (t, jid, q, li + 1)
                    )
                    if lstar and a1q:
                        cover_simple_half.require_leq(
                            a1q,
                            CONSTANTS.general_base * w_alive * rate
                            / (k * gamma * counts[li] * sigmas[li])
                            + d1 * rate / (gamma * sigmas[li]),
                            (t, jid, q, li + 1),
                        )
                    if view is not None and a2q:
                        cover_long_half.require_leq(
                            a2q,
                            k * beta_now[li] * rate
                            / (CONSTANTS.long_cover_beta_div * gamma * sigmas[li])
                            + CONSTANTS.long_cover_delta * d2 * rate
                            / (gamma * sigmas[li]),
                            (t, jid, q, li + 1),
                        )
                        cover_long_tight.require_leq(
                            a2q,
                            k * beta_now[li] * rate
                            / (CONSTANTS.long_cover_beta_div * gamma * sigmas[li])
                            + CONSTANTS.long_cover_stated * d2 * rate
                            / (gamma * sigmas[li]),
                            (t, jid, q, li + 1),
                        )

    cost = trace.objective
    beta_identity.require_leq(beta_total, cost / (k * logk), ("total",))
    beta_identity.require_leq(cost / (k * logk), beta_total, ("total",))
    alpha_floor.require_leq(
        cost / (CONSTANTS.alpha_floor * k * logk), alpha_total, ("total",)
    )

    flags = dict(classification.flags)
    flags.update(
        {
            "simple_job_intervals": sum(1 for v in chosen.values() if v),
            "long_job_intervals": len(long_at),
            "class_count": k,
        }
    )
    return DualCertificate(
        family="general",
        gamma=gamma,
        gamma_required=float(required),
        gamma_ok=gamma_ok,
        alpha_total=alpha_total,
        beta_total=beta_total,
        checks=classification.checks
        + [
            simple_budget, long_budget, total_budget, root_charge, doubling,
            a_budget, sa_budget, la_budget, la_identity, cover, cover_simple,
            cover_long, cover_simple_half, cover_long_half, cover_long_tight, monotone,
            beta_identity, alpha_floor,
        ],
        flags=flags,
    )
