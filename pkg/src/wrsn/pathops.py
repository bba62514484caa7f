"""Charging-path construction, the dead-node-aware neighbourhood and path similarity."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluation import ChargingSchedule, EvaluationReport, Evaluator, as_path
from .model import NetworkInstance, SensorNode


def knn_construct(instance: NetworkInstance, k: int, rng=None) -> np.ndarray:
    """Randomised nearest-neighbour tour: each step picks uniformly among the
    ``k`` closest unvisited sensors (distance ties broken by lower id)."""
    n = instance.n
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    rng = np.random.default_rng(rng)
    dist = instance.dist
    unvisited = np.arange(1, n + 1)
    cur = 0
    path = np.empty(n, dtype=np.int64)
    for step in range(n):
        d = dist[cur, unvisited]
        m = min(k, unvisited.size)
        order = np.argsort(d, kind="stable")[:m]
        pick = order[0] if m == 1 else order[rng.integers(m)]
        cur = unvisited[pick]
        path[step] = cur
        unvisited = np.delete(unvisited, pick)
    return path


def nearest_neighbor_tour(instance: NetworkInstance) -> np.ndarray:
    return knn_construct(instance, 1)


def random_k(n: int, rng) -> int:
    return 1 if n < 2 else int(rng.integers(2, n + 1))


@dataclass(frozen=True)
class DeadSets:
    before: frozenset[int]  # died waiting for the charger
    after: frozenset[int]  # charged, still below e_min at cycle end


def dead_sets(report: EvaluationReport, instance: NetworkInstance) -> DeadSets:
    emin = instance.e_min[report.path - 1]
    db = report.e_at_arrival < emin
    da = (report.e_at_depot < emin) & ~db
    return DeadSets(frozenset(report.path[db].tolist()), frozenset(report.path[da].tolist()))


def sensor_lifetime(sensor: SensorNode) -> float:
    """Seconds until ``e_min`` without any charging."""
    return (sensor.e_init - sensor.e_min) / sensor.p


def lifetimes(instance: NetworkInstance) -> np.ndarray:
    return (instance.e_init - instance.e_min) / instance.p


def tau_max_at(position: int, schedule: ChargingSchedule, instance: NetworkInstance) -> float:
    """Longest dwell at ``position`` (0-based) before the battery would overflow,
    given the arrival time implied by ``schedule``."""
    ev = Evaluator(instance)
    sid = int(schedule.path[position])
    p = instance.p[sid - 1]
    U = instance.charger.U
    if U == p:
        raise ZeroDivisionError(f"sensor {sid}: U equals p, dwell unbounded by capacity")
    legs = ev.legs(schedule.path)
    a = legs[: position + 1].sum() + schedule.times[:position].sum()
    return (instance.e_max[sid - 1] - instance.e_init[sid - 1] + a * p) / (U - p)


def _move(path: np.ndarray, i: int, t: int, rng) -> np.ndarray:
    """Two-exchange or relocate (equal odds) the element at ``i`` to position ``t``."""
    out = path.copy()
    if i == t:
        return out
    if rng.random() < 0.5:
        out[i], out[t] = out[t], out[i]
    else:
        item = out[i]
        out = np.insert(np.delete(out, i), t, item)
    return out


def ls_neighbor(schedule: ChargingSchedule, report: EvaluationReport, instance: NetworkInstance,
                rng=None) -> np.ndarray:
    """One move of the local-search operator; positions here are 0-based.

    Dead-before sensors move forward to a slot the charger reaches within
    their lifetime; dead-after sensors move backward so they can absorb a
    longer dwell.
    """
    rng = np.random.default_rng(rng)
    path = schedule.path
    n = path.size
    emin = instance.e_min[path - 1]
    db = np.flatnonzero(report.e_at_arrival < emin)
    da = np.flatnonzero((report.e_at_depot < emin) & (report.e_at_arrival >= emin))
    ns1, ns2 = db.size, da.size
    if n < 2:
        return path.copy()
    if ns1 + ns2 == 0:
        i = int(rng.integers(n))
        t = int(rng.integers(n - 1))
        t += t >= i
        return _move(path, i, t, rng)
    life = lifetimes(instance)
    a = report.arrival
    if ns2 == 0 or rng.random() <= ns1 / (ns1 + ns2):
        i = int(db[rng.integers(ns1)])
        ok = np.flatnonzero(a[:i] <= life[path[i] - 1])
        j = int(ok[-1]) if ok.size else 0
        t = int(rng.integers(j + 1))
    else:
        i = int(da[rng.integers(ns2)])
        ok = np.flatnonzero(a[i + 1:] <= life[path[i] - 1]) + i + 1
        if ok.size:
            t = int(rng.integers(i + 1, ok[-1] + 1))
        else:
            t = n - 1
    return _move(path, i, t, rng)


@dataclass
class LocalSearchResult:
    path: np.ndarray
    f: float
    evals: int


def ls_optimize(path, instance: NetworkInstance, budget: int, patience: int = 50, rng=None,
                evaluator: Evaluator | None = None, f0: float | None = None, on_eval=None) -> LocalSearchResult:
    """Stochastic first-improvement hill climbing under the greedy time split.

    Stops after ``patience`` consecutive rejected neighbours or ``budget``
    evaluations.  ``f0`` skips re-evaluating a start path already scored;
    ``on_eval(path, times, f)`` observes every evaluation.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    rng = np.random.default_rng(rng)
    ev = evaluator or Evaluator(instance)
    cur = as_path(path, instance.n).copy()
    evals = 0
    f, times, arrival, e_arr, e_dep = ev.greedy_eval(cur)
    if f0 is None:
        evals += 1
        if on_eval:
            on_eval(cur, times, f)
    else:
        f = f0
    fails = 0
    while evals < budget and fails < patience and f > 0:
        rep = _light_report(cur, times, arrival, e_arr, e_dep)
        cand = ls_neighbor(ChargingSchedule(cur, times), rep, instance, rng)
        fc, tc, ac, ea, ed = ev.greedy_eval(cand)
        evals += 1
        if on_eval:
            on_eval(cand, tc, fc)
        if fc < f:
            cur, f, times, arrival, e_arr, e_dep = cand, fc, tc, ac, ea, ed
            fails = 0
        else:
            fails += 1
    return LocalSearchResult(cur, float(f), evals)


def _light_report(path, times, arrival, e_arr, e_dep) -> EvaluationReport:
    return EvaluationReport(path=path, times=times, arrival=arrival, e_at_arrival=e_arr,
                            e_at_depot=e_dep, z=None, delta=None, objective=float("nan"),
                            dead_ratio=float("nan"), T_travel=float("nan"), T_charge=float("nan"),
                            E_move=float("nan"), E_charge=float("nan"))


def path_similarity(P, Q) -> int:
    """Number of sensor pairs visited in the same relative order by both paths."""
    P = np.asarray(P, dtype=np.int64)
    Q = np.asarray(Q, dtype=np.int64)
    if P.shape != Q.shape or not np.array_equal(np.sort(P), np.sort(Q)):
        raise ValueError("paths must cover the same sensor ids")
    n = P.size
    # relabel so ids are 1..n whatever the input alphabet
    lut = {int(s): k + 1 for k, s in enumerate(np.sort(P))}
    P = np.array([lut[int(s)] for s in P])
    Q = np.array([lut[int(s)] for s in Q])
    # concordant = pairs - inversions of Q's positions read in P's order
    inv = _inversions(np.argsort(Q)[P - 1])
    return n * (n - 1) // 2 - inv


def _inversions(seq: np.ndarray) -> int:
    seq = list(seq)
    tree = [0] * (len(seq) + 1)
    inv = 0
    for seen, v in enumerate(seq):
        # count earlier elements greater than v
        k, le = v + 1, 0
        while k > 0:
            le += tree[k]
            k -= k & -k
        inv += seen - le
        k = v + 1
        while k <= len(seq):
            tree[k] += 1
            k += k & -k
    return inv
