"""Deterministic scoring of a charging schedule over one charging cycle."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .model import NetworkInstance

FEAS_TOL = 1e-9


def as_path(path, n: int) -> np.ndarray:
    """Validate a charging path (sensor ids in visiting order)."""
    arr = np.asarray(path, dtype=np.int64)
    if arr.shape != (n,) or not np.array_equal(np.sort(arr), np.arange(1, n + 1)):
        raise ValueError(f"path must be a permutation of 1..{n}")
    return arr


@dataclass
class ChargingSchedule:
    path: np.ndarray  # sensor ids, visiting order
    times: np.ndarray  # dwell time per path position (s)

    def __post_init__(self):
        self.path = np.asarray(self.path, dtype=np.int64)
        self.times = np.asarray(self.times, dtype=float)
        if self.path.shape != self.times.shape:
            raise ValueError("path and times must have equal length")

    def times_by_sensor(self) -> np.ndarray:
        out = np.empty_like(self.times)
        out[self.path - 1] = self.times
        return out


class Violation(NamedTuple):
    constraint: str  # "3" MC energy, "4" period, "11" battery capacity, "12" non-negative time
    slack: float
    sensor: int | None = None


@dataclass
class EvaluationReport:
    path: np.ndarray
    times: np.ndarray
    arrival: np.ndarray
    e_at_arrival: np.ndarray
    e_at_depot: np.ndarray
    z: np.ndarray
    delta: np.ndarray
    objective: float
    dead_ratio: float
    T_travel: float
    T_charge: float
    E_move: float
    E_charge: float
    violations: list[Violation] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.violations

    @property
    def dead_count(self) -> int:
        return int(self.z.sum())


class Evaluator:
    """Precomputed per-instance arrays shared by every schedule evaluation.

    ``literal_depot=True`` uses ``e_init - T*p`` for the end-of-cycle energy
    (charged energy ignored) instead of the balanced ``e_init + tau*U - T*p``.
    """

    def __init__(self, instance: NetworkInstance, literal_depot: bool = False):
        self.instance = instance
        self.literal_depot = literal_depot
        self.n = instance.n
        ch = instance.charger
        self.U, self.P_M, self.v = ch.U, ch.P_M, ch.v
        self.E_MC = ch.E_MC
        self.T = instance.T
        self.alpha = instance.alpha
        self.p = instance.p
        self.e_init = instance.e_init
        self.e_max = instance.e_max
        self.e_min = instance.e_min
        self.span = self.e_max - self.e_min
        self.sum_p = float(self.p.sum())
        self.sum_e = float(self.e_init.sum())
        self.sum_emin = float(self.e_min.sum())
        self.sum_emax = float(self.e_max.sum())
        self.dist = instance.dist
        self.share = greedy_shares(instance)
        with np.errstate(divide="ignore"):
            self.cap = np.where(self.U > self.p, (self.e_max - self.e_init) / (self.U - self.p), np.inf)

    def legs(self, path: np.ndarray) -> np.ndarray:
        nodes = np.concatenate(([0], path, [0]))
        return self.dist[nodes[:-1], nodes[1:]] / self.v

    def budget(self, T_travel: float, period_cap: bool = True) -> float:
        U, sp = self.U, self.sum_p
        by_mc = (self.E_MC - T_travel * self.P_M) / U
        if U < sp:
            tc = min(by_mc, (self.sum_e - self.sum_emin - T_travel * sp) / (sp - U))
        elif U > sp:
            tc = min(by_mc, (self.sum_emax - self.sum_e + T_travel * sp) / (U - sp))
        else:
            tc = by_mc
        if period_cap:
            tc = min(tc, self.T - T_travel)
        return max(0.0, tc)

    def penalty(self, T_travel: float) -> float:
        """Search-fitness surcharge for paths whose tour alone breaks the period or the
        charger battery; at least 1, so any executable schedule ranks ahead."""
        over_T = max(0.0, T_travel - self.T) / self.T
        over_E = max(0.0, T_travel * self.P_M - self.E_MC) / self.E_MC
        return 1.0 + over_T + over_E if over_T > 0 or over_E > 0 else 0.0

    def allocate(self, path: np.ndarray, ratios: np.ndarray, T_charge: float) -> np.ndarray:
        """Split ``T_charge`` proportionally to ``ratios`` (..., n), then cap by battery capacity."""
        return _split(np.asarray(ratios, dtype=float), T_charge, self.cap[path - 1])

    def greedy_times(self, path: np.ndarray, T_travel: float | None = None) -> np.ndarray:
        if T_travel is None:
            T_travel = float(self.legs(path).sum())
        return self.allocate(path, self.share[path - 1], self.budget(T_travel))

    def simulate(self, path: np.ndarray, times: np.ndarray, legs: np.ndarray | None = None):
        """Vectorized over leading axes of ``times``; returns the per-position arrays and f."""
        if legs is None:
            legs = self.legs(path)
        idx = path - 1
        return _score(times, np.cumsum(legs[:-1]), self.p[idx], self.e_init[idx], self.e_min[idx],
                      self.span[idx], self.U, self.T * self.p[idx], self.alpha, self.literal_depot)

    def objective(self, path: np.ndarray, times: np.ndarray, legs: np.ndarray | None = None):
        return self.simulate(path, times, legs)[-1]

    def greedy_eval(self, path: np.ndarray):
        """(fitness, times, arrival, e_arr, e_dep) for the greedy time split on ``path``.

        The fitness is f plus :meth:`penalty` of the tour.
        """
        legs = self.legs(path)
        T_travel = float(legs.sum())
        times = self.greedy_times(path, T_travel)
        arrival, e_arr, e_dep, z, _, f = self.simulate(path, times, legs)
        return float(f) + self.penalty(T_travel), times, arrival, e_arr, e_dep

    def report(self, schedule: ChargingSchedule) -> EvaluationReport:
        path, times = schedule.path, schedule.times
        legs = self.legs(path)
        arrival, e_arr, e_dep, z, delta, f = self.simulate(path, times, legs)
        T_travel = float(legs.sum())
        T_charge = float(times.sum())
        return EvaluationReport(
            path=path.copy(),
            times=times.copy(),
            arrival=arrival,
            e_at_arrival=e_arr,
            e_at_depot=np.array(e_dep),
            z=z,
            delta=delta,
            objective=float(f),
            dead_ratio=float(z.mean()),
            T_travel=T_travel,
            T_charge=T_charge,
            E_move=T_travel * self.P_M,
            E_charge=T_charge * self.U,
            violations=self.violations(path, times, T_travel),
        )

    def violations(self, path: np.ndarray, times: np.ndarray, T_travel: float | None = None) -> list[Violation]:
        if T_travel is None:
            T_travel = float(self.legs(path).sum())
        out = []
        total = float(times.sum())
        slack3 = self.E_MC - (T_travel * self.P_M + total * self.U)
        if slack3 < -FEAS_TOL:
            out.append(Violation("3", slack3))
        slack4 = self.T - (T_travel + total)
        if slack4 < -FEAS_TOL:
            out.append(Violation("4", slack4))
        idx = path - 1
        slack11 = self.e_max[idx] - (self.e_init[idx] + times * (self.U - self.p[idx]))
        for pos in np.flatnonzero(slack11 < -FEAS_TOL):
            out.append(Violation("11", float(slack11[pos]), int(path[pos])))
        for pos in np.flatnonzero(times < 0):
            out.append(Violation("12", float(times[pos]), int(path[pos])))
        return out


def _split(ratios: np.ndarray, T_charge, cap: np.ndarray) -> np.ndarray:
    total = ratios.sum(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(total > 0, ratios / np.where(total > 0, total, 1.0), 1.0 / ratios.shape[-1])
    return np.minimum(T_charge * frac, cap)


def _fitness(times, travel_to, p, e0, emin, span, U, Tp, alpha, literal_depot):
    """f alone, bit-identical to ``_score(...)[-1]`` with fewer temporaries."""
    waited = np.zeros_like(times)
    np.cumsum(times[..., :-1], axis=-1, out=waited[..., 1:])
    waited += travel_to
    waited *= p
    z = (e0 - waited) < emin
    if literal_depot:
        e_dep = np.broadcast_to(e0 - Tp, times.shape).copy()
    else:
        e_dep = times * U
        e_dep += e0
        e_dep -= Tp
    z |= e_dep < emin
    drop = np.subtract(e0, e_dep, out=e_dep)
    drop[z] = 0.0
    drop /= span
    worst = np.maximum(drop.max(axis=-1), 0.0)
    return alpha * z.mean(axis=-1) + (1 - alpha) * worst


def _score(times, travel_to, p, e0, emin, span, U, Tp, alpha, literal_depot):
    waited = np.zeros_like(times)
    np.cumsum(times[..., :-1], axis=-1, out=waited[..., 1:])
    arrival = travel_to + waited
    e_arr = e0 - arrival * p
    if literal_depot:
        e_dep = np.broadcast_to(e0 - Tp, times.shape)
    else:
        e_dep = e0 + times * U - Tp
    z = (e_arr < emin) | (e_dep < emin)
    delta = np.where(~z & (e0 > e_dep), e0 - e_dep, 0.0)
    f = alpha * z.mean(axis=-1) + (1 - alpha) * (delta / span).max(axis=-1)
    return arrival, e_arr, e_dep, z, delta, f


class PathObjective:
    """Objective of dwell-time ratio vectors on a fixed stack of paths.

    Path-ordered sensor arrays and each path's charging budget are computed
    once.  Values include the tour penalty of :meth:`Evaluator.penalty`.
    Calls take ratios of shape (k, m, n) for k paths, or (m, n) when built
    from a single path, and return shape (k, m) or (m,).
    """

    def __init__(self, evaluator: "Evaluator", paths):
        paths = np.asarray(paths, dtype=np.int64)
        self.single = paths.ndim == 1
        self.paths = np.atleast_2d(paths)
        ev = self.ev = evaluator
        legs = np.stack([ev.legs(p) for p in self.paths])
        idx = self.paths - 1
        self.T_charge = np.array([ev.budget(float(l.sum())) for l in legs])
        self.penalty = np.array([ev.penalty(float(l.sum())) for l in legs])[:, None]
        self._args = (np.cumsum(legs[:, :-1], axis=1)[:, None], ev.p[idx][:, None], ev.e_init[idx][:, None],
                      ev.e_min[idx][:, None], ev.span[idx][:, None], ev.U, (ev.T * ev.p[idx])[:, None],
                      ev.alpha, ev.literal_depot)
        self._cap = ev.cap[idx][:, None]

    def times(self, ratios: np.ndarray) -> np.ndarray:
        ratios = np.asarray(ratios, dtype=float)
        if self.single:
            return _split(ratios, self.T_charge[0], self._cap[0, 0])
        return _split(ratios, self.T_charge[:, None, None], self._cap)

    def __call__(self, ratios: np.ndarray) -> np.ndarray:
        ratios = np.asarray(ratios, dtype=float)
        r = ratios[None] if self.single else ratios
        f = _fitness(_split(r, self.T_charge[:, None, None], self._cap), *self._args) + self.penalty
        return f[0] if self.single else f


def greedy_shares(instance: NetworkInstance) -> np.ndarray:
    """Per-sensor weight max(0, p/sum p - e_init/sum e_init), indexed by id-1."""
    p, e = instance.p, instance.e_init
    return np.maximum(0.0, p / p.sum() - e / e.sum())


def travel_time(path, instance: NetworkInstance) -> float:
    ev = Evaluator(instance)
    return float(ev.legs(as_path(path, instance.n)).sum())


def charging_budget(path, instance: NetworkInstance, period_cap: bool = True) -> float:
    """Total dwell time available on ``path``.

    Energy-balance bound on the whole network, capped by the charger battery;
    with ``period_cap`` it is also cut to ``T - T_travel`` so the tour fits
    in the cycle.  Never negative.
    """
    ev = Evaluator(instance)
    T_travel = float(ev.legs(as_path(path, instance.n)).sum())
    return ev.budget(T_travel, period_cap=period_cap)


def evaluate_schedule(schedule: ChargingSchedule, instance: NetworkInstance,
                      literal_depot: bool = False) -> EvaluationReport:
    as_path(schedule.path, instance.n)
    return Evaluator(instance, literal_depot).report(schedule)


def check_feasibility(schedule: ChargingSchedule, instance: NetworkInstance) -> list[Violation]:
    path = as_path(schedule.path, instance.n)
    return Evaluator(instance).violations(path, schedule.times)


def greedy_time_assignment(path, instance: NetworkInstance) -> ChargingSchedule:
    path = as_path(path, instance.n)
    return ChargingSchedule(path, Evaluator(instance).greedy_times(path))
