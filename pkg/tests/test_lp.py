"""LP bridge: emission, ingestion, schedule embedding, brute-force oracle."""

import math
import random

import pytest

from bagsched import (
    brute_force_opt,
    build_weaker_duals,
    check_lp_solution,
    emit_lp,
    gen_lower_bound,
    make_instance,
    make_job,
    parse_lp_solution,
    schedule_to_primal,
    simulate,
    solution_objective,
    task_table,
    with_speedup,
)
from bagsched.lp import LpError, check_primal, primal_to_solution_values
from bagsched.sim import Placement, ScheduleSlice, Segment

from oracles import wspt_cost
from support import (
    random_lp_instance,
    single_machine_chain_instance,
    weaker_gamma,
)


def unit_instance():
    return make_instance([(1, 1)], [make_job(1, 1.0, [1])])


def test_emit_unit_example():
    text = emit_lp(unit_instance(), horizon=2)
    assert text.count("x_1_1_0") >= 1 and text.count("x_1_1_1") >= 1
    assert "x_1_1_2" not in text
    values = parse_lp_solution("x_1_1_0 1\nC_1 1\nU_1_0 1\n")
    assert check_lp_solution(unit_instance(), values, horizon=2) == []
    assert solution_objective(unit_instance(), values, horizon=2) == (
        pytest.approx(2.0))


def test_ingestion_catches_violations():
    inst = unit_instance()
    # half the demand is missing and C understates the busy machine time
    values = {"x_1_1_0": 0.5, "C_1": 0.25, "U_1_0": 1.0}
    names = {name for name, lhs, rhs in check_lp_solution(inst, values, 2)}
    assert any(n.startswith("demand") or n.startswith("done") for n in names)
    assert any(n.startswith("time") for n in names)


def test_parse_solution_format():
    values = parse_lp_solution("# comment\nx_1_1_0 0.5\n\nC_1 2.5\n")
    assert values == {"x_1_1_0": 0.5, "C_1": 2.5}
    with pytest.raises(LpError):
        parse_lp_solution("x_1_1_0\n")


def test_zero_size_task_skipped():
    inst = make_instance([(1, 1)], [make_job(1, 1.0, [2, 0])])
    text = emit_lp(inst, horizon=4)
    assert "done_1_1" in text
    assert "done_1_2" not in text


def test_matched_offline_staircase_embedding():
    # every task on its own matching machine finishes at time 1; the
    # embedded value 2 certifies LP optimum <= 2 * offline cost
    inst = gen_lower_bound(2)
    inst = make_instance(
        [(c.speed, c.count) for c in inst.classes],
        [make_job(1, 1.0, [(64, 1), (1, 128)])])
    horizon = 4
    values = {"C_1": 1.0, "U_1_0": 1.0}
    for tid, job_id, size in task_table(inst):
        values[f"x_{tid}_{tid}_0"] = float(size)  # machine i runs task i
    assert check_lp_solution(inst, values, horizon) == []
    assert solution_objective(inst, values, horizon) == pytest.approx(2.0)


def test_schedule_embedding_single_task():
    inst = make_instance([(1, 1)], [make_job(1, 1.0, [4])])
    primal = schedule_to_primal(simulate(inst), inst)
    assert primal.cost == pytest.approx(4.0)
    assert 4.0 - 1e-9 <= primal.objective <= 8.0 + 1e-9
    # U stays 1 for slots fully before completion
    full_slots = int(4.0 / primal.slot) if primal.slot else 0
    ones = [s for (j, s), u in primal.U.items() if u == pytest.approx(1.0)]
    assert ones, "remaining fraction must start at 1"


def test_schedule_embedding_random_sandwich():
    rng = random.Random(14)
    for _ in range(60):
        inst = random_lp_instance(rng)
        trace = simulate(inst)
        primal = schedule_to_primal(trace, inst)
        cost = float(trace.objective)
        assert cost - 1e-9 <= primal.objective <= 2 * cost + 1e-9
        check_primal(primal, inst)


def test_solution_roundtrip_slot_one():
    inst = make_instance(
        [(1, 1)], [make_job(1, 1.0, [4]), make_job(2, 2.0, [3])])
    trace = simulate(inst)
    primal = schedule_to_primal(trace, inst, slot=1)
    values = primal_to_solution_values(primal)
    horizon = max(s for (_, _, s) in primal.x) + 1
    assert check_lp_solution(inst, values, horizon) == []
    assert solution_objective(inst, values, horizon) == pytest.approx(
        primal.objective, rel=1e-9)


def wspt_slices(order, speed=1.0):
    """Sequential single-machine schedule as hand-built slices."""
    slices = []
    t = 0.0
    for job_id, size in order:
        end = t + size / speed
        pl = Placement(members=((job_id, 1),), count=1, position_lo=0,
                       machine_lo=1, machine_hi=1, per_task_rate=speed)
        slices.append(ScheduleSlice(
            start=t, end=end, segments=[Segment(start=t, end=end,
                                                placements=(pl,))],
            work={job_id: size}))
        t = end
    return slices


def test_brute_force_examples():
    two = make_instance(
        [(1, 1)], [make_job(1, 1.0, [1]), make_job(2, 2.0, [1])])
    assert brute_force_opt(two, grid=1) == pytest.approx(4.0)

    sym = make_instance([(1, 2)], [make_job(1, 1.0, [1, 1])])
    assert brute_force_opt(sym, grid=1) == pytest.approx(1.0)

    assert brute_force_opt(gen_lower_bound(1), grid=1) == pytest.approx(1.0)


def test_brute_force_caps():
    big_m = make_instance([(1, 4)], [make_job(1, 1.0, [1])])
    with pytest.raises(LpError):
        brute_force_opt(big_m)
    many = make_instance([(1, 1)], [make_job(1, 1.0, [1] * 6)])
    with pytest.raises(LpError):
        brute_force_opt(many)
    huge = make_instance([(1, 1)], [make_job(1, 1.0, [5])])
    with pytest.raises(LpError):
        brute_force_opt(huge)
    ok = make_instance([(1, 1)], [make_job(1, 1.0, [1])])
    with pytest.raises(LpError):
        brute_force_opt(ok, grid=5)
    released = make_instance([(1, 1)], [make_job(1, 1.0, [1], release=1.0)])
    with pytest.raises(LpError):
        brute_force_opt(released)


def test_brute_force_matches_chain_oracle():
    rng = random.Random(23)
    for _ in range(20):
        inst = single_machine_chain_instance(rng)
        want = wspt_cost([(float(j.weight), float(j.groups[0].size))
                          for j in inst.jobs])
        assert brute_force_opt(inst, grid=1) == pytest.approx(want)


def test_dual_lp_brute_dominance_chain():
    # dual objective <= embedded-optimum LP value <= 2 * brute optimum
    rng = random.Random(77)
    for _ in range(10):
        inst = single_machine_chain_instance(rng)
        jobs = [(j.job_id, float(j.weight), float(j.groups[0].size))
                for j in inst.jobs]
        order = sorted(jobs, key=lambda x: (x[2] / x[1], x[2]))
        opt_cost = 0.0
        t = 0.0
        for _, w, p in order:
            t += p
            opt_cost += w * t
        brute = brute_force_opt(inst, grid=1)
        assert brute == pytest.approx(opt_cost)

        slices = wspt_slices([(j, p) for j, _, p in order])
        primal = schedule_to_primal(slices, inst)
        assert primal.cost == pytest.approx(opt_cost, rel=1e-9)
        assert primal.objective <= 2 * brute + 1e-9

        sped = with_speedup(inst, weaker_gamma(inst))
        cert = build_weaker_duals(simulate(sped), sped)
        assert cert.feasible
        assert cert.objective <= primal.objective + 1e-9
