from dataclasses import replace

import numpy as np
import pytest

from wrsn.evaluation import ChargingSchedule, Evaluator, PathObjective, check_feasibility, greedy_time_assignment
from wrsn.evo import greedy_chromosome
from wrsn.instances import GeneratorSpec, generate_instance
from wrsn.model import ChargerConfig, NetworkInstance, SensorNode
from wrsn.pathops import knn_construct, ls_optimize, random_k
from wrsn.solvers import (ALGORITHMS, SolverConfig, _child_rng, default_tasks, greedy_baseline, mcmaes_run,
                          mlsga_run, mtbcs_run, solve, time_ga_optimize)

SMALL = SolverConfig(path_evals=300, time_evals=300, pop_path=20, pop_time=20)


@pytest.fixture(scope="module")
def inst():
    return generate_instance(GeneratorSpec("uniform", 15, 2))


def test_task_count_default():
    assert default_tasks(100, 100) == 6


def test_time_ga_init_only_returns_greedy_or_better(inst):
    path = knn_construct(inst, 1)
    cfg = replace(SMALL, time_evals=20, pop_time=20)
    sched, f, evals = time_ga_optimize(path, inst, cfg, seed=0)
    greedy_f = Evaluator(inst).greedy_eval(path)[0]
    assert evals == 20 and f <= greedy_f


def test_time_ga_beats_random_chromosomes():
    inst = generate_instance(GeneratorSpec("uniform", 6, 3))
    path = knn_construct(inst, 1)
    obj = PathObjective(Evaluator(inst), path)
    best_random = obj(np.random.default_rng(0).random((100_000, 6))).min()
    _, f, _ = time_ga_optimize(path, inst, SolverConfig(time_evals=5000), seed=1)
    assert f <= best_random + 1e-12


def test_time_ga_keeps_budget_exact(inst):
    path = knn_construct(inst, 1)
    _, _, evals = time_ga_optimize(path, inst, replace(SMALL, time_evals=537), seed=2)
    assert evals == 537


def test_greedy_baseline_is_the_nn_tour(inst):
    res = greedy_baseline(inst)
    expected = greedy_time_assignment(knn_construct(inst, 1), inst)
    assert np.array_equal(res.schedule.path, expected.path)
    assert np.allclose(res.schedule.times, expected.times)
    assert res.evals_path == 1 and res.evals_time == 0


@pytest.mark.parametrize("algo", ALGORITHMS)
def test_budgets_feasibility_and_monotone_history(inst, algo):
    res = solve(algo, inst, SMALL, seed=3)
    assert res.evals_path <= SMALL.path_evals
    assert check_feasibility(res.schedule, inst) == []
    fs = [f for _, f in res.history]
    assert all(b <= a for a, b in zip(fs, fs[1:]))
    assert res.objective == pytest.approx(fs[-1])
    assert 0.0 <= res.report.dead_ratio <= 1.0


@pytest.mark.parametrize("algo", ALGORITHMS)
def test_same_seed_same_result(inst, algo):
    a = solve(algo, inst, SMALL, seed=4)
    b = solve(algo, inst, SMALL, seed=4)
    assert np.array_equal(a.schedule.path, b.schedule.path)
    assert np.array_equal(a.schedule.times, b.schedule.times)
    assert a.history == b.history


def test_mlsga_single_restart_matches_manual(inst):
    cfg = replace(SMALL, path_evals=1)
    res = mlsga_run(inst, cfg, seed=5)
    rng = _child_rng(np.random.SeedSequence(5))
    start = knn_construct(inst, random_k(inst.n, rng), rng)
    ls = ls_optimize(start, inst, 1, cfg.patience, rng)
    sched, f, _ = time_ga_optimize(ls.path, inst, cfg, rng)
    assert np.array_equal(res.schedule.path, sched.path)
    assert res.objective <= f + 1e-12
    assert res.evals_path == 1 and res.evals_time == cfg.time_evals


def test_mlsga_counts_time_evals_per_restart(inst):
    res = mlsga_run(inst, SMALL, seed=6)
    assert res.evals_time % SMALL.time_evals == 0 and res.evals_time >= SMALL.time_evals


def test_mtbcs_time_budget_per_generation(inst):
    res = mtbcs_run(inst, SMALL, seed=7)
    assert res.evals_path == SMALL.path_evals
    assert res.evals_time > 0


def test_mtbcs_variants_run(inst):
    for cfg in (replace(SMALL, init="random"), replace(SMALL, transfer=False)):
        res = mtbcs_run(inst, cfg, seed=8)
        assert check_feasibility(res.schedule, inst) == []


def test_single_sensor_gets_everything():
    s = SensorNode(1, 250.0, 300.0, 3000.0, 1.0)
    inst = NetworkInstance(500.0, (250.0, 250.0), (s,), ChargerConfig(), 3600.0)
    for algo in ALGORITHMS:
        res = solve(algo, inst, SMALL, seed=1)
        assert res.schedule.path.tolist() == [1]
        assert res.schedule.times[0] == pytest.approx(min(3600 - 20, (10800 - 3000) / 4))


def test_mcmaes_run_improves_on_greedy(inst):
    rng = np.random.default_rng(9)
    paths = [knn_construct(inst, 3, rng) for _ in range(3)]
    ev = Evaluator(inst)
    out = mcmaes_run(paths, inst, 400, seed=10)
    for p, (sched, f) in zip(paths, out):
        assert f <= ev.greedy_eval(p)[0]
        assert np.array_equal(sched.path, p)


def test_alpha_override(inst):
    res = solve("greedy", inst, replace(SMALL, alpha=1.0))
    assert res.objective == pytest.approx(res.report.dead_ratio)


def test_unknown_algorithm(inst):
    with pytest.raises(ValueError):
        solve("tabu", inst)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(path_evals=0)
    with pytest.raises(ValueError):
        SolverConfig(init="zigzag")
    assert SolverConfig().digest() == SolverConfig().digest()
    assert SolverConfig().digest() != SMALL.digest()


@pytest.mark.slow
def test_head_to_head_on_small_instances():
    cfg = SolverConfig(path_evals=2000, time_evals=2000)
    dead = {a: [] for a in ALGORITHMS}
    for seed in range(1, 11):
        inst = generate_instance(GeneratorSpec("uniform", 25, seed))
        for a in ALGORITHMS:
            dead[a].append(solve(a, inst, cfg, seed=seed).report.dead_ratio)
    med = {a: float(np.median(v)) for a, v in dead.items()}
    assert med["mlsga"] <= med["greedy"]
    assert med["mtbcs"] <= med["mlsga"]
