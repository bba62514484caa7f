"""Batch runs over instances x algorithms x seeds x parameter overrides.

Overridden instances are renamed ``<name>@<key>=<value>`` so the results
CSV stays self-describing; the resolved solver configuration is written
next to it as JSON.
"""
from __future__ import annotations

import csv
import json
import os
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from statistics import mean
from typing import Iterable, Sequence

from .instances import truncate
from .model import NetworkInstance, ResultRow, SchemaError, instance_to_dict
from .solvers import ALGORITHMS, SolveResult, SolverConfig, solve

SWEEP_KEYS = ("U", "E_MC", "P_M", "v", "p", "n", "alpha", "T")


def parse_sweep(text: str) -> tuple[str, list[float]]:
    """``"U=2,5,10"`` -> ``("U", [2.0, 5.0, 10.0])``."""
    key, sep, values = text.partition("=")
    key = key.strip()
    if not sep or key not in SWEEP_KEYS:
        raise ValueError(f"sweep must look like KEY=v1,v2 with KEY in {', '.join(SWEEP_KEYS)}; got {text!r}")
    try:
        vals = [float(v) for v in values.split(",") if v.strip()]
    except ValueError as exc:
        raise ValueError(f"non-numeric sweep value in {text!r}") from exc
    if not vals:
        raise ValueError(f"sweep {key!r} has no values")
    return key, vals


def _fmt(value: float) -> str:
    return f"{value:g}"


def apply_override(instance: NetworkInstance, key: str, value: float) -> NetworkInstance:
    """Copy of ``instance`` with one parameter changed.

    Charger fields and ``alpha``/``T`` are set directly; ``p`` rescales
    every consumption rate to the given mean; ``n`` keeps the first ``n``
    sensors and recomputes the period.
    """
    if key in ("U", "E_MC", "P_M", "v"):
        out = instance.with_charger(**{key: float(value)})
    elif key == "p":
        out = instance.with_mean_rate(float(value))
    elif key == "n":
        if value != int(value):
            raise ValueError(f"n must be an integer, got {value}")
        out = truncate(instance, int(value))
    elif key == "alpha":
        out = replace(instance, alpha=float(value))
    elif key == "T":
        out = replace(instance, T=float(value))
    else:
        raise ValueError(f"unknown override {key!r}")
    return replace(out, name=f"{instance.name}@{key}={_fmt(value)}")


@dataclass(frozen=True, order=True)
class RunKey:
    instance: str
    algorithm: str
    seed: int


def result_row(res: SolveResult, instance: NetworkInstance, seed: int) -> ResultRow:
    return ResultRow(instance.name, res.algorithm, int(seed), res.evals_path, res.evals_time,
                     100.0 * res.report.dead_ratio, res.report.objective, res.runtime_s)


def expand(instances: Sequence[NetworkInstance], sweeps: Sequence[tuple[str, Sequence[float]]] = ()):
    """Base instances when no sweep is given, otherwise every override of every instance."""
    if not sweeps:
        return list(instances)
    return [apply_override(inst, key, v) for inst in instances for key, vals in sweeps for v in vals]


def worker_count() -> int:
    raw = os.environ.get("WRSN_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"WRSN_THREADS must be an integer, got {raw!r}") from None


def run_bench(instances: Sequence[NetworkInstance], algorithms: Sequence[str], seeds: Sequence[int],
              config: SolverConfig = SolverConfig(), sweeps: Sequence[tuple[str, Sequence[float]]] = (),
              threads: int | None = None) -> list[ResultRow]:
    """Run every combination and return rows sorted by (instance, algorithm, seed)."""
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}")
    runs = {}
    for inst in expand(instances, sweeps):
        for a in algorithms:
            for s in seeds:
                key = RunKey(inst.name, a, int(s))
                if key in runs:
                    raise ValueError(f"duplicate run {key}")
                runs[key] = inst
    keys = sorted(runs)

    def one(key: RunKey) -> ResultRow:
        inst = runs[key]
        return result_row(solve(key.algorithm, inst, config, key.seed), inst, key.seed)

    workers = threads or worker_count()
    if workers == 1:
        rows = [one(k) for k in keys]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, keys))
    return rows


def write_meta(path, config: SolverConfig, sweeps, instances: Iterable[NetworkInstance]) -> Path:
    """Sidecar JSON holding everything needed to rerun a results file."""
    path = Path(path)
    doc = {
        "config": config.to_dict(),
        "config_digest": config.digest(),
        "sweeps": [[k, list(v)] for k, v in sweeps],
        "instances": {inst.name: instance_to_dict(inst) for inst in instances},
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def write_trace(history, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eval_count", "best_f"])
        for evals, f in history:
            w.writerow([evals, f"{f:.12g}"])
    return path


# -- aggregation ---------------------------------------------------------------

def split_name(name: str) -> tuple[str, str | None, float | None]:
    """``"r_50_1@U=5"`` -> ``("r_50_1", "U", 5.0)``; plain names give ``(name, None, None)``."""
    base, sep, rest = name.partition("@")
    if not sep:
        return name, None, None
    key, eq, value = rest.partition("=")
    try:
        return base, key, float(value)
    except ValueError:
        raise SchemaError(f"malformed override suffix in instance name {name!r}") from None


@dataclass(frozen=True)
class TrendPoint:
    sweep: str
    value: float
    algorithm: str
    runs: int
    mean_dead_ratio: float
    mean_objective: float


def aggregate(rows: Iterable[ResultRow]) -> list[TrendPoint]:
    """Mean dead ratio (percent) and objective per (sweep key, value, algorithm).

    Rows without an override are grouped under sweep ``"-"``.
    """
    groups = defaultdict(list)
    for r in rows:
        _, key, value = split_name(r.instance)
        groups[(key or "-", 0.0 if value is None else value, r.algorithm)].append(r)
    return [TrendPoint(k, v, a, len(g), mean(x.dead_ratio for x in g), mean(x.objective for x in g))
            for (k, v, a), g in sorted(groups.items())]


def write_report(points: Sequence[TrendPoint], path=None) -> str:
    lines = ["sweep,value,algorithm,runs,mean_dead_ratio,mean_objective"]
    lines += [f"{p.sweep},{_fmt(p.value)},{p.algorithm},{p.runs},{p.mean_dead_ratio:.2f},{p.mean_objective:.6f}"
              for p in points]
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
