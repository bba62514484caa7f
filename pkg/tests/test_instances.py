import numpy as np
import pytest

from wrsn.instances import (GeneratorSpec, benchmark_suite, derive_consumption_rates, generate_instance,
                            routing_rates, truncate)
from wrsn.model import instance_to_dict
from wrsn.evaluation import charging_budget, travel_time
from wrsn.pathops import nearest_neighbor_tour


def test_same_seed_same_instance():
    a = instance_to_dict(generate_instance(GeneratorSpec("grid", 30, 7)))
    b = instance_to_dict(generate_instance(GeneratorSpec("grid", 30, 7)))
    assert a == b


def test_different_seed_differs():
    a = generate_instance(GeneratorSpec("uniform", 10, 1))
    b = generate_instance(GeneratorSpec("uniform", 10, 2))
    assert not np.allclose(a.coords, b.coords)


def test_suite_size_and_names():
    suite = benchmark_suite(sizes=(25, 50, 75, 100), ords=range(1, 11))
    assert len(suite) == 120
    names = {inst.name for inst in suite}
    assert len(names) == 120
    assert {"r_25_1", "n_50_10", "g_100_3"} <= names


@pytest.mark.parametrize("dist", ["uniform", "normal", "grid"])
def test_points_inside_field(dist):
    inst = generate_instance(GeneratorSpec(dist, 100, 5))
    xy = inst.coords[1:]
    assert xy.min() >= 0 and xy.max() <= inst.field_width


def test_default_period_leaves_the_whole_budget_spendable():
    inst = generate_instance(GeneratorSpec("uniform", 25, 3))
    tour = nearest_neighbor_tour(inst)
    uncapped = charging_budget(tour, inst, period_cap=False)
    assert inst.T == pytest.approx(travel_time(tour, inst) + uncapped)
    assert charging_budget(tour, inst) == pytest.approx(uncapped)


def test_explicit_period():
    inst = generate_instance(GeneratorSpec(n=5, T_policy=1234.0))
    assert inst.T == 1234.0


def test_rates_within_band():
    inst = generate_instance(GeneratorSpec(n=60, seed=2))
    assert inst.p.min() >= 0.8 and inst.p.max() <= 2.0


def test_routing_single_sensor_next_to_base():
    p = routing_rates(np.array([[260.0, 250.0]]), (250.0, 250.0), 100.0, l=1.0, rate=1.0)
    assert p[0] == pytest.approx(1.05)


def test_routing_relay_costs_more_than_leaf():
    # base -> a -> b on a line, equal 10 m hops, range 15 m
    coords = np.array([[260.0, 250.0], [270.0, 250.0]])
    p = routing_rates(coords, (250.0, 250.0), 15.0, l=1.0, rate=1.0)
    assert p[0] > p[1]
    assert p[0] == pytest.approx(p[1] + 0.05)


def test_routing_policy_clamped():
    inst = generate_instance(GeneratorSpec(n=40, seed=3, p_policy="routing", comm_range=200.0))
    assert inst.p.min() >= 0.8 and inst.p.max() <= 2.0
    raw = derive_consumption_rates(inst, comm_range=200.0, clamp=(0.8, 2.0))
    assert raw.shape == (40,)


def test_truncate_keeps_prefix():
    inst = generate_instance(GeneratorSpec(n=20, seed=1))
    sub = truncate(inst, 5)
    assert sub.n == 5
    assert sub.sensors == inst.sensors[:5]
    with pytest.raises(ValueError):
        truncate(inst, 21)


def test_unknown_distribution():
    with pytest.raises(ValueError):
        GeneratorSpec("hexagonal")


def test_disconnected_sensor_is_reported():
    from wrsn.instances import InstanceGenerationError
    with pytest.raises(InstanceGenerationError, match="cannot reach"):
        routing_rates(np.array([[490.0, 490.0]]), (0.0, 0.0), 10.0, l=1.0, rate=1.0)
