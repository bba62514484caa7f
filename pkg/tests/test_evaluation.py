import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import random_instance, simulate_events
from wrsn.evaluation import (ChargingSchedule, Evaluator, PathObjective, _fitness, _score, charging_budget,
                             check_feasibility, evaluate_schedule, greedy_time_assignment, travel_time)
from wrsn.model import ChargerConfig, NetworkInstance, SensorNode


def one_sensor(e_init=600.0, p=1.0, T=3600.0, alpha=0.5):
    s = SensorNode(1, 250.0, 300.0, e_init, p, 10800.0, 540.0)
    return NetworkInstance(500.0, (250.0, 250.0), (s,), ChargerConfig(U=5.0, v=5.0), T, alpha)


def two_far_sensors(T=10_000.0):
    # legs 500 + 1000 + 500 m at 5 m/s: a 400 s tour
    sensors = (SensorNode(1, 500.0, 0.0, 6000.0, 6.0), SensorNode(2, 500.0, 1000.0, 6000.0, 6.0))
    return NetworkInstance(1000.0, (500.0, 500.0), sensors, ChargerConfig(), T)


def test_travel_time_round_trip():
    s = SensorNode(1, 250.0, 350.0, 5000.0, 1.0)
    inst = NetworkInstance(500.0, (250.0, 250.0), (s,), ChargerConfig(v=5.0), 3600.0)
    assert travel_time([1], inst) == pytest.approx(40.0)


def test_travel_time_zero_when_colocated():
    s = SensorNode(1, 250.0, 250.0, 5000.0, 1.0)
    inst = NetworkInstance(500.0, (250.0, 250.0), (s,), ChargerConfig(), 3600.0)
    assert travel_time([1], inst) == 0.0


def test_budget_network_bound_branch():
    inst = two_far_sensors()
    assert travel_time([1, 2], inst) == pytest.approx(400.0)
    expected = min((108000 - 400) / 5, (12000 - 1080 - 400 * 12) / (12 - 5))
    assert expected == pytest.approx(874.2857, abs=1e-4)
    assert charging_budget([1, 2], inst, period_cap=False) == pytest.approx(expected)


def test_budget_balanced_rates_uses_charger_bound():
    inst = two_far_sensors().with_charger(U=12.0)
    assert charging_budget([1, 2], inst, period_cap=False) == pytest.approx((108000 - 400) / 12)


def test_budget_clamped_when_tour_drains_charger():
    inst = two_far_sensors().with_charger(E_MC=100.0)
    assert charging_budget([1, 2], inst, period_cap=False) == 0.0


def test_budget_capped_by_period():
    inst = two_far_sensors(T=600.0)
    assert charging_budget([1, 2], inst) == pytest.approx(200.0)


def test_single_sensor_dies_after_visit():
    inst = one_sensor(alpha=0.3)
    rep = evaluate_schedule(ChargingSchedule([1], [0.0]), inst)
    assert rep.arrival[0] == pytest.approx(10.0)
    assert rep.e_at_arrival[0] == pytest.approx(590.0)
    assert rep.z[0] and rep.delta[0] == 0.0
    assert rep.dead_ratio == 1.0
    assert rep.objective == pytest.approx(0.3)


def test_single_sensor_saved_by_long_dwell():
    inst = one_sensor()
    rep = evaluate_schedule(ChargingSchedule([1], [800.0]), inst)
    assert rep.e_at_depot[0] == pytest.approx(1000.0)
    assert not rep.z[0]
    assert rep.delta[0] == 0.0
    assert rep.objective == 0.0


def test_exact_replenishment_scores_zero():
    rng = np.random.default_rng(0)
    inst = random_instance(rng, 6, T=3000.0, charger=ChargerConfig(U=20.0))
    inst = _with(inst, e_init=8000.0)
    path = np.arange(1, 7)
    taus = inst.T * inst.p / inst.charger.U  # e_dep == e_init
    assert evaluate_schedule(ChargingSchedule(path, taus), inst).objective == pytest.approx(0.0, abs=1e-12)


def _with(inst, **fields):
    from dataclasses import replace
    return replace(inst, sensors=tuple(replace(s, **fields) for s in inst.sensors))


def test_zero_times_feasible_on_short_tour():
    inst = one_sensor()
    assert check_feasibility(ChargingSchedule([1], [0.0]), inst) == []


def test_charger_energy_violation_slack():
    inst = one_sensor(T=1e6)
    tau = (inst.charger.E_MC + 1 - 20 * inst.charger.P_M) / inst.charger.U
    viol = check_feasibility(ChargingSchedule([1], [tau]), inst)
    c3 = [v for v in viol if v.constraint == "3"]
    assert len(c3) == 1 and c3[0].slack == pytest.approx(-1.0)


def test_battery_overflow_violation():
    inst = one_sensor(e_init=6000.0, T=1e6)
    tau = (10800 + 10 - 6000) / (5 - 1)
    viol = check_feasibility(ChargingSchedule([1], [tau]), inst)
    c11 = [v for v in viol if v.constraint == "11"]
    assert [(v.sensor, round(v.slack, 9)) for v in c11] == [(1, -10.0)]


def test_negative_time_and_period_violations():
    inst = one_sensor(T=15.0)
    kinds = {v.constraint for v in check_feasibility(ChargingSchedule([1], [-1.0]), inst)}
    assert kinds == {"4", "12"}


def test_greedy_weights_go_to_the_needy_sensor():
    sensors = (SensorNode(1, 100.0, 100.0, 1000.0, 2.0), SensorNode(2, 400.0, 400.0, 2000.0, 1.0))
    inst = NetworkInstance(500.0, (250.0, 250.0), sensors, ChargerConfig(), 20000.0)
    sched = greedy_time_assignment([1, 2], inst)
    budget = charging_budget([1, 2], inst)
    assert sched.times[1] == 0.0
    assert sched.times[0] == pytest.approx(min(budget, (10800 - 1000) / 3))


def test_greedy_equal_split_for_identical_sensors():
    sensors = tuple(SensorNode(i, 50.0 * i, 50.0, 3000.0, 1.0) for i in range(1, 5))
    inst = NetworkInstance(500.0, (250.0, 250.0), sensors, ChargerConfig(), 20000.0)
    sched = greedy_time_assignment([1, 2, 3, 4], inst)
    cap = (10800 - 3000) / (5 - 1)
    assert np.allclose(sched.times, min(charging_budget([1, 2, 3, 4], inst) / 4, cap))


def test_ratio_split_before_capping():
    sensors = (SensorNode(1, 100.0, 100.0, 600.0, 1.0), SensorNode(2, 400.0, 400.0, 600.0, 1.0))
    inst = NetworkInstance(500.0, (250.0, 250.0), sensors, ChargerConfig(), 20000.0)
    ev = Evaluator(inst)
    path = np.array([1, 2])
    assert np.allclose(ev.allocate(path, np.array([0.2, 0.8]), 100.0), [20.0, 80.0])
    assert np.allclose(ev.allocate(path, np.array([0.0, 0.0]), 100.0), [50.0, 50.0])


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 10), scale=st.floats(0, 3))
def test_matches_event_simulation(seed, n, scale):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n)
    path = rng.permutation(n) + 1
    times = rng.random(n) * scale * inst.T / n
    rep = evaluate_schedule(ChargingSchedule(path, times), inst)
    ref = simulate_events(inst, path, times)
    assert np.allclose(rep.arrival, ref["arrival"], rtol=0, atol=1e-9)
    assert np.allclose(rep.e_at_arrival, ref["e_arr"], rtol=0, atol=1e-9)
    assert np.allclose(rep.e_at_depot, ref["e_dep"], rtol=0, atol=1e-9)
    assert rep.z.tolist() == ref["z"]
    assert rep.objective == pytest.approx(ref["f"], abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 12))
def test_greedy_output_respects_capacity(seed, n):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n)
    sched = greedy_time_assignment(rng.permutation(n) + 1, inst)
    bad = [v for v in check_feasibility(sched, inst) if v.constraint in ("11", "12")]
    assert bad == []
    assert sched.times.sum() <= charging_budget(sched.path, inst) + 1e-9


@pytest.mark.parametrize("literal", [False, True])
def test_fast_fitness_is_bit_identical(literal):
    rng = np.random.default_rng(11)
    for _ in range(300):
        n = int(rng.integers(1, 15))
        m = int(rng.integers(1, 6))
        args = (rng.random((m, n)) * 2000, np.cumsum(rng.random(n) * 100), rng.uniform(0.8, 2, n),
                rng.uniform(540, 10800, n), np.full(n, 540.0), np.full(n, 10260.0), 5.0,
                rng.uniform(0.8, 2, n) * 5000, 0.5, literal)
        assert np.array_equal(_fitness(*args), _score(*args)[-1])


def test_batched_objective_agrees_with_reports():
    rng = np.random.default_rng(4)
    inst = random_instance(rng, 9)
    ev = Evaluator(inst)
    paths = np.stack([rng.permutation(9) + 1 for _ in range(3)])
    ratios = rng.random((3, 5, 9))
    obj = PathObjective(ev, paths)
    f = obj(ratios)
    times = obj.times(ratios)
    for t in range(3):
        for j in range(5):
            rep = ev.report(ChargingSchedule(paths[t], times[t, j]))
            assert f[t, j] == pytest.approx(rep.objective + ev.penalty(rep.T_travel))
    single = PathObjective(ev, paths[0])
    assert np.array_equal(single(ratios[0]), f[0])
    assert single.times(ratios[0, 0]).shape == (9,)


def test_overlong_tour_is_penalised_in_search_only():
    inst = one_sensor(T=15.0)  # 20 s round trip
    ev = Evaluator(inst)
    f, *_ = ev.greedy_eval(np.array([1]))
    assert f >= 1.0
    assert ev.penalty(20.0) == pytest.approx(1 + 5 / 15)
    assert ev.penalty(10.0) == 0.0


def test_literal_depot_ignores_charging():
    inst = one_sensor()
    rep = evaluate_schedule(ChargingSchedule([1], [800.0]), inst, literal_depot=True)
    assert rep.e_at_depot[0] == pytest.approx(600 - 3600)
    assert rep.z[0]


def test_rejects_non_permutation():
    inst = one_sensor()
    with pytest.raises(ValueError):
        evaluate_schedule(ChargingSchedule([2], [0.0]), inst)
