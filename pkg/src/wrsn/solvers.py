"""End-to-end charging-scheme solvers.

* ``mlsga_run``: multi-start local search over paths, a real-coded GA for
  the dwell times of each local optimum.
* ``mtbcs_run``: memetic permutation GA over paths; each generation the
  population is clustered and the best path of every cluster gets its
  dwell times from multitask CMA-ES.
* ``greedy_baseline``: nearest-neighbour tour with the greedy time split.

Every evaluation request is charged to a budget, including memoized ones.
"""
from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from .cluster import distance_matrix, pam, representatives
from .cmaes import default_lambda, mcmaes_minimize
from .evaluation import ChargingSchedule, EvaluationReport, Evaluator, PathObjective
from .evo import (greedy_chromosome, pm_rate, pmx_crossover, poly_mutation, sbx_crossover,
                  swap_mutation, tournament_select)
from .model import NetworkInstance
from .pathops import knn_construct, ls_optimize, nearest_neighbor_tour, random_k

ALGORITHMS = ("mlsga", "mtbcs", "greedy")


class InvariantError(RuntimeError):
    """A solver produced an output that breaks a model invariant."""


@dataclass(frozen=True)
class SolverConfig:
    path_evals: int = 25000
    time_evals: int = 25000
    pop_path: int = 100
    pop_time: int = 100
    crossover_rate: float = 0.9
    mutation_rate: float = 0.05
    sbx_eta: float = 2.0
    pm_eta: float = 5.0
    patience: int = 50
    sigma0: float = 0.3
    init: str = "greedy"  # MTBCS upper-level start: "greedy" | "random"
    transfer: bool = True
    alpha: float | None = None  # overrides the instance's alpha
    literal_depot: bool = False

    def __post_init__(self):
        if self.path_evals < 1 or self.time_evals < 1:
            raise ValueError("budgets must be >= 1")
        if not (0 <= self.crossover_rate <= 1 and 0 <= self.mutation_rate <= 1):
            raise ValueError("rates must lie in [0, 1]")
        if self.init not in ("greedy", "random"):
            raise ValueError(f"unknown init {self.init!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class SolveResult:
    algorithm: str
    schedule: ChargingSchedule
    report: EvaluationReport
    history: list[tuple[int, float]]
    runtime_s: float
    evals_path: int
    evals_time: int

    @property
    def objective(self) -> float:
        return self.report.objective


class _Tracker:
    """Budget counters and the best schedule seen across both levels."""

    def __init__(self):
        self.path_evals = 0
        self.time_evals = 0
        self.best_f = math.inf
        self.best: tuple[np.ndarray, np.ndarray] | None = None
        self.history: list[tuple[int, float]] = []

    @property
    def total(self) -> int:
        return self.path_evals + self.time_evals

    def offer(self, path, times, f: float) -> None:
        if f < self.best_f:
            self.best_f = float(f)
            self.best = (np.array(path), np.array(times))
            self.history.append((self.total, self.best_f))

    def path_hook(self, path, times, f) -> None:
        self.path_evals += 1
        self.offer(path, times, f)


def _prepare(instance: NetworkInstance, config: SolverConfig) -> tuple[NetworkInstance, Evaluator]:
    if config.alpha is not None:
        instance = replace(instance, alpha=config.alpha)
    return instance, Evaluator(instance, literal_depot=config.literal_depot)


def _finish(name: str, tracker: _Tracker, ev: Evaluator, started: float) -> SolveResult:
    path, times = tracker.best
    schedule = ChargingSchedule(path, times)
    report = ev.report(schedule)
    if report.violations:
        raise InvariantError(f"{name}: infeasible output {report.violations}")
    if tracker.history and tracker.history[-1][0] != tracker.total:
        tracker.history.append((tracker.total, tracker.best_f))
    return SolveResult(name, schedule, report, tracker.history, time.perf_counter() - started,
                       tracker.path_evals, tracker.time_evals)


def _child_rng(ss: np.random.SeedSequence) -> np.random.Generator:
    return np.random.default_rng(ss.spawn(1)[0])


# -- lower level: dwell-time optimizers ---------------------------------------

def _time_objective(paths, ev: Evaluator, tracker: _Tracker | None) -> PathObjective:
    """Batched ratio objective that charges every row to ``tracker`` and offers its best."""
    obj = PathObjective(ev, paths)
    if tracker is None:
        return obj

    def counted(rhos: np.ndarray) -> np.ndarray:
        f = obj(rhos)
        tracker.time_evals += f.size
        j = np.unravel_index(int(np.argmin(f)), f.shape)
        if f[j] < tracker.best_f:
            task = 0 if obj.single else j[0]
            times = obj.times(rhos)[j]
            tracker.offer(obj.paths[task], times, f[j])
        return f

    counted.times = obj.times
    counted.paths = obj.paths
    return counted


def time_ga_optimize(path, instance: NetworkInstance, config: SolverConfig = SolverConfig(), seed=None,
                     evaluator: Evaluator | None = None, tracker: _Tracker | None = None):
    """Real-coded GA over charging-time ratios for a fixed path.

    Returns ``(schedule, f, evals)``.  The initial population holds the
    greedy split, so the result is never worse than it.
    """
    rng = np.random.default_rng(seed)
    ev = evaluator or Evaluator(instance)
    path = np.asarray(path, dtype=np.int64)
    n = path.size
    budget = config.time_evals
    objective = _time_objective(path, ev, tracker)
    N = max(1, min(config.pop_time, budget))
    pop = rng.random((N, n))
    pop[0] = greedy_chromosome(path, ev)
    fit = objective(pop)
    evals = N
    rate = pm_rate(config.mutation_rate, n)
    while evals < budget:
        m = min(N, budget - evals)
        pairs = (m + 1) // 2
        a = pop[tournament_select(fit, rng, size=pairs)]
        b = pop[tournament_select(fit, rng, size=pairs)]
        c1, c2 = sbx_crossover(a, b, config.sbx_eta, config.crossover_rate, rng)
        kids = poly_mutation(np.concatenate([c1, c2])[:m], config.pm_eta, rate, rng)
        kf = objective(kids)
        evals += m
        allp = np.concatenate([pop, kids])
        allf = np.concatenate([fit, kf])
        keep = np.argsort(allf, kind="stable")[:N]
        pop, fit = allp[keep], allf[keep]
    return ChargingSchedule(path, objective.times(pop[0])), float(fit[0]), evals


def mcmaes_times(paths, ev: Evaluator, budget_per_task: int, seed=None, transfer: bool = True,
                 sigma0: float = 0.3, tracker: _Tracker | None = None):
    """Jointly optimize dwell times for several paths; returns [(schedule, f)]."""
    paths = [np.asarray(p, dtype=np.int64) for p in paths]
    objective = _time_objective(np.stack(paths), ev, tracker)
    x0s = np.stack([greedy_chromosome(p, ev) for p in paths])
    start_f = objective(x0s[:, None, :])[:, 0]
    outcomes = mcmaes_minimize(objective, x0s, budget_per_task, seed=seed, transfer=transfer,
                               sigma0=sigma0, start_f=start_f)
    best = np.stack([o.best_x for o in outcomes])[:, None, :]
    times = objective.times(best)[:, 0]
    return [(ChargingSchedule(p, t), o.best_f) for p, t, o in zip(paths, times, outcomes)]


def mcmaes_run(paths, instance: NetworkInstance, budget_per_task: int, seed=None, transfer: bool = True,
               sigma0: float = 0.3):
    return mcmaes_times(paths, Evaluator(instance), budget_per_task, seed, transfer, sigma0)


# -- solvers -------------------------------------------------------------------

def greedy_baseline(instance: NetworkInstance, seed=None, config: SolverConfig = SolverConfig()) -> SolveResult:
    started = time.perf_counter()
    instance, ev = _prepare(instance, config)
    tracker = _Tracker()
    path = nearest_neighbor_tour(instance)
    f, times, *_ = ev.greedy_eval(path)
    tracker.path_hook(path, times, f)
    return _finish("greedy", tracker, ev, started)


def mlsga_run(instance: NetworkInstance, config: SolverConfig = SolverConfig(), seed=None) -> SolveResult:
    started = time.perf_counter()
    instance, ev = _prepare(instance, config)
    ss = np.random.SeedSequence(seed)
    tracker = _Tracker()
    n = instance.n
    while tracker.path_evals < config.path_evals:
        rng = _child_rng(ss)
        start = knn_construct(instance, random_k(n, rng), rng)
        ls = ls_optimize(start, instance, config.path_evals - tracker.path_evals, config.patience, rng,
                         evaluator=ev, on_eval=tracker.path_hook)
        time_ga_optimize(ls.path, instance, config, rng, evaluator=ev, tracker=tracker)
    return _finish("mlsga", tracker, ev, started)


def default_tasks(pop_time: int, n: int) -> int:
    return math.ceil(pop_time / default_lambda(max(n, 1)))


def mtbcs_run(instance: NetworkInstance, config: SolverConfig = SolverConfig(), seed=None) -> SolveResult:
    started = time.perf_counter()
    instance, ev = _prepare(instance, config)
    ss = np.random.SeedSequence(seed)
    rng = _child_rng(ss)
    tracker = _Tracker()
    n = instance.n
    cache: dict[bytes, float] = {}

    def evaluate(path: np.ndarray) -> float:
        key = path.tobytes()
        f = cache.get(key)
        if f is None:
            f, times, *_ = ev.greedy_eval(path)
            cache[key] = f
            tracker.path_hook(path, times, f)
        else:
            tracker.path_evals += 1
        return f

    budget = config.path_evals
    N = max(2, min(config.pop_path, budget))
    if config.init == "greedy":
        pop = [knn_construct(instance, random_k(n, rng), rng) for _ in range(N)]
    else:
        pop = [rng.permutation(n) + 1 for _ in range(N)]
    fit = []
    for p in pop:
        if tracker.path_evals >= budget:
            break
        fit.append(evaluate(p))
    pop = pop[: len(fit)]
    fit = np.array(fit)
    k = max(1, min(default_tasks(config.pop_time, n), len(pop)))

    while tracker.path_evals < budget:
        kids, kid_f = [], []
        while len(kids) < N and tracker.path_evals < budget:
            i1 = tournament_select(fit, rng)
            i2 = tournament_select(fit, rng)
            if rng.random() < config.crossover_rate:
                c1, c2 = pmx_crossover(pop[i1], pop[i2], rng)
            else:
                c1, c2 = pop[i1].copy(), pop[i2].copy()
            for c in (c1, c2):
                if tracker.path_evals >= budget:
                    break
                c = swap_mutation(c, config.mutation_rate, rng)
                fc = evaluate(c)
                remaining = budget - tracker.path_evals
                if fc < fit[i1] and fc < fit[i2] and remaining > 0:
                    res = ls_optimize(c, instance, remaining, config.patience, rng, evaluator=ev, f0=fc,
                                      on_eval=tracker.path_hook)
                    c, fc = res.path, res.f
                kids.append(c)
                kid_f.append(fc)
        merged = pop + kids
        merged_f = np.concatenate([fit, np.array(kid_f)])
        keep = np.argsort(merged_f, kind="stable")[:N]
        pop = [merged[i] for i in keep]
        fit = merged_f[keep]

        clusters = pam(distance_matrix(pop), k)
        reps = representatives(fit, clusters.labels, k)
        mcmaes_times([pop[i] for i in reps], ev, max(1, config.time_evals // k), seed=_child_rng(ss).integers(2**63),
                     transfer=config.transfer, sigma0=config.sigma0, tracker=tracker)
    return _finish("mtbcs", tracker, ev, started)


def solve(algorithm: str, instance: NetworkInstance, config: SolverConfig = SolverConfig(), seed=None) -> SolveResult:
    if algorithm == "mlsga":
        return mlsga_run(instance, config, seed)
    if algorithm == "mtbcs":
        return mtbcs_run(instance, config, seed)
    if algorithm == "greedy":
        return greedy_baseline(instance, seed, config)
    raise ValueError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
