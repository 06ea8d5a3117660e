"""Independent reference routines used to cross-check the package.

Everything in this file recomputes results from first principles with its
own arithmetic: no imports from bagsched. The implementations favour
directness over speed (bisection, brute-force subset scans, fixed-step
time discretization) so that agreement with the production code is
evidence rather than tautology.

Conventions match the package: machine classes are (speed, count) pairs
sorted by strictly decreasing speed, alive jobs are (job_id, weight,
task_count) triples, and a speedup factor scales every machine.
"""

import itertools
from fractions import Fraction

TIGHT_REL = 1e-9


def prefix_capacity(classes, k):
    """Total speed of the k fastest machines, flat once machines run out.

    >>> prefix_capacity([(4, 1), (1, 2)], 2)
    5
    >>> prefix_capacity([(4, 1), (1, 2)], 99)
    6
    """
    total = 0
    left = k
    for speed, count in classes:
        take = min(left, count)
        total += take * speed
        left -= take
        if left <= 0:
            break
    return total


def expand_speeds(classes, limit):
    """First `limit` individual machine speeds, fastest first."""
    out = []
    for speed, count in classes:
        for _ in range(min(count, limit - len(out))):
            out.append(speed)
        if len(out) >= limit:
            break
    return out


def sweep_rates(alive, classes, gamma, iters=200):
    """Water-level rate assignment recomputed by bisection.

    Jobs are split into equal-share runs (a run moves as a unit).  The
    level tau is the largest uniform scaling of shares such that every
    run prefix fits into the speedup-scaled capacity it can reach; the
    maximal tight prefix is then frozen at rate share * tau and the
    sweep recurses on the remainder with the consumed machines removed.

    Returns {job_id: per-task rate}.
    """
    shares = []
    for job_id, weight, count in alive:
        assert count > 0 and weight > 0
        shares.append((weight / count, job_id, count))
    shares.sort(key=lambda item: (-item[0], item[1]))

    # group exactly equal shares into atomic runs
    runs = []
    for share, job_id, count in shares:
        if runs and runs[-1][0] == share:
            runs[-1][1] += count
            runs[-1][2].append((job_id, count))
        else:
            runs.append([share, count, [(job_id, count)]])

    rates = {}
    base = 0
    while runs:
        def fits(tau):
            cum_tasks = 0
            cum_share = 0.0
            for share, count, _ in runs:
                cum_tasks += count
                cum_share += share * count
                room = gamma * (prefix_capacity(classes, base + cum_tasks)
                                - prefix_capacity(classes, base))
                if tau * cum_share > room * (1 + 1e-15):
                    return False
            return True

        hi = 1.0
        while fits(hi):
            hi *= 2.0
            assert hi < 1e300, "capacity should bound the level"
        lo = 0.0
        for _ in range(iters):
            mid = (lo + hi) / 2
            if fits(mid):
                lo = mid
            else:
                hi = mid
        tau = lo

        cum_tasks = 0
        cum_share = 0.0
        cut = None
        for idx, (share, count, _) in enumerate(runs):
            cum_tasks += count
            cum_share += share * count
            room = gamma * (prefix_capacity(classes, base + cum_tasks)
                            - prefix_capacity(classes, base))
            if tau * cum_share >= room * (1 - TIGHT_REL):
                cut = idx
        assert cut is not None, "level must leave some prefix tight"

        frozen = 0
        for share, count, members in runs[: cut + 1]:
            for job_id, job_count in members:
                rates[job_id] = share * tau
            frozen += count
        base += frozen
        runs = runs[cut + 1:]
    return rates


def subsets_feasible(task_rates, classes, gamma, rel=1e-9):
    """Check every subset of tasks fits the speedup-scaled capacity.

    task_rates is a flat list of per-task rates.  Exponential in the
    task count; callers keep it at a dozen tasks or so.
    """
    n = len(task_rates)
    for size in range(1, n + 1):
        cap = gamma * prefix_capacity(classes, size)
        for combo in itertools.combinations(task_rates, size):
            if sum(combo) > cap * (1 + rel):
                return False
    return True


def step_realize(quotas, classes, gamma, length, steps=4000):
    """Deliver per-task work quotas by discrete greedy time steps.

    Every dt the tasks are ranked by remaining quota (largest first,
    ties by key) and the i-th task runs on the i-th fastest machine.
    Returns {task_key: delivered work}.  The discretization error is
    on the order of dt * gamma * fastest speed per task.
    """
    remaining = dict(quotas)
    delivered = {key: 0.0 for key in remaining}
    speeds = expand_speeds(classes, len(remaining))
    dt = length / steps
    for _ in range(steps):
        ranked = sorted(remaining, key=lambda key: (-remaining[key], key))
        for key, speed in zip(ranked, speeds):
            if remaining[key] <= 0:
                continue
            grab = dt * gamma * speed
            delivered[key] += grab
            remaining[key] -= grab
    return delivered


def doubling_counts(k, base=64):
    """Machine counts (1, m_2, ...) with each class doubling the
    capacity accumulated so far, for speeds base**(k-l).

    >>> doubling_counts(2)
    [1, 128]
    >>> doubling_counts(3)
    [1, 128, 24576]
    """
    speeds = [base ** (k - l) for l in range(1, k + 1)]
    counts = [1]
    cum = speeds[0]
    for l in range(1, k):
        need = 2 * cum
        assert need % speeds[l] == 0
        counts.append(need // speeds[l])
        cum += counts[l] * speeds[l]
    return counts


def staircase_makespan(k, gamma, base=64):
    """Exact makespan of the equal-rate fluid run on the doubling
    staircase: a single job with one task sized to each class speed
    count times.

    All tasks start at the same per-task rate; the smallest class
    finishes first, and each phase q the alive prefix (N_q tasks)
    shares the capacity C_q of the machines it occupies:

        sum_q N_q * (speed_q - speed_{q+1}) / (gamma * C_q)

    >>> staircase_makespan(2, 1)
    Fraction(53, 32)
    """
    gamma = Fraction(gamma)
    speeds = [Fraction(base) ** (k - l) for l in range(1, k + 1)]
    counts = doubling_counts(k, base)
    total = Fraction(0)
    tasks = cap = 0
    for q in range(k):
        tasks += counts[q]
        cap += counts[q] * speeds[q]
        nxt = speeds[q + 1] if q + 1 < k else 0
        total += tasks * (speeds[q] - nxt) / (gamma * cap)
    return total


def wspt_cost(jobs):
    """Optimal weighted completion time on one unit-speed machine for
    single-task jobs: run in nondecreasing size/weight order.

    >>> wspt_cost([(2, 1), (1, 2)])
    5.0
    """
    order = sorted(jobs, key=lambda job: (job[1] / job[0], job[1]))
    t = 0.0
    cost = 0.0
    for weight, size in order:
        t += size
        cost += weight * t
    return cost


if __name__ == "__main__":
    import doctest

    failures, _ = doctest.testmod()
    raise SystemExit(1 if failures else 0)
