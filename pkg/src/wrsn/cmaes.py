"""Box-bounded CMA-ES with rank-mu update, and the multitask variant that
injects other tasks' incumbents into each task's offspring pool.

Several searches of equal dimension are advanced together by
:class:`CmaesBatch` so that the linear algebra runs on stacked arrays.
The covariance is factored as ``C = A A^T`` (Cholesky); ``A`` samples and
``A^-1`` whitens the step-size path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import lapack

BatchObjective = Callable[[np.ndarray], np.ndarray]

MAX_CONDITION = 1e14


def default_lambda(n: int) -> int:
    return int(math.floor(4 + 3 * math.log(n)))


class CmaesBatch:
    """k independent searches N(mean_i, sigma_i^2 C_i) over [0, 1]^n.

    Task ``i`` draws its samples from ``rngs[i]`` only, so a task's
    trajectory does not depend on how many tasks share the batch.  Normal
    deviates are drawn ``block`` generations at a time; the stream, and so
    the trajectory, is the same for every block size.
    """

    def __init__(self, x0s, sigma0: float = 0.3, lam: int | None = None, rngs=None, block: int = 1):
        x0s = np.clip(np.atleast_2d(np.asarray(x0s, dtype=float)), 0.0, 1.0)
        self.k, self.n = k, n = x0s.shape
        if n < 1:
            raise ValueError("dimension must be >= 1")
        self.lam = lam or default_lambda(max(n, 1))
        if self.lam < 2:
            raise ValueError("lambda must be >= 2")
        self.mu = self.lam // 2
        w = math.log((self.lam + 1) / 2) - np.log(np.arange(1, self.mu + 1))
        self.weights = w / w.sum()
        self.mueff = mueff = 1.0 / float((self.weights**2).sum())
        self.cs = (mueff + 2) / (n + mueff + 5)
        self.ds = 1 + 2 * max(0.0, math.sqrt((mueff - 1) / (n + 1)) - 1) + self.cs
        self.cc = (4 + mueff / n) / (n + 4 + 2 * mueff / n)
        self.c1 = 2 / ((n + 1.3) ** 2 + mueff)
        self.cmu = min(1 - self.c1, 2 * (mueff - 2 + 1 / mueff) / ((n + 2) ** 2 + mueff))
        self.chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n**2))
        self.inject_limit = math.sqrt(n) + 2 * n / (n + 2)
        # refactor C once the accumulated update weight since the last factoring is large enough
        self.lazy_gap = 0.5 / (n * (self.c1 + self.cmu))

        if rngs is None:
            rngs = [np.random.default_rng() for _ in range(k)]
        if len(rngs) != k:
            raise ValueError("need one generator per task")
        self.rngs = list(rngs)
        self.block = max(1, int(block))
        self._buffer = None
        self._buffered = 0
        eye = np.broadcast_to(np.eye(n), (k, n, n))
        self.mean = x0s.copy()
        self.sigma = np.full(k, float(sigma0))
        self._C = eye.copy()
        self._pending: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        self.A = eye.copy()
        self.A_inv = eye.copy()
        self.A32 = self.A.astype(np.float32)
        self.A_inv32 = self.A32.copy()
        self.p_sigma = np.zeros((k, n))
        self.p_c = np.zeros((k, n))
        self.generation = np.zeros(k, dtype=np.int64)
        self.factor_generation = np.zeros(k, dtype=np.int64)
        self.eval_count = np.zeros(k, dtype=np.int64)
        self.best_x = x0s.copy()
        self.best_f = np.full(k, math.inf)

    def _normals(self) -> np.ndarray:
        if self._buffered == 0:
            self._buffer = np.stack([r.standard_normal((self.block, self.lam, self.n), dtype=np.float32)
                                     for r in self.rngs], axis=1)
            self._buffered = self.block
        Z = self._buffer[self.block - self._buffered]
        self._buffered -= 1
        return Z

    def ask(self) -> np.ndarray:
        """(k, lam, n) candidates, clamped to the unit box."""
        Z = self._normals()
        # sampling and whitening run in single precision; candidates are scored in double
        X = (Z @ self.A32.transpose(0, 2, 1)).astype(float)
        X *= self.sigma[:, None, None]
        X += self.mean[:, None, :]
        return np.clip(X, 0.0, 1.0, out=X)

    def offer(self, i: int, x, f: float) -> None:
        """Record an evaluated point as incumbent candidate of task ``i``."""
        self.eval_count[i] += 1
        if f < self.best_f[i]:
            self.best_f[i] = float(f)
            self.best_x[i] = np.asarray(x, dtype=float)

    def tell(self, X, F, injected=None) -> None:
        """Update every task from its ``lam`` evaluated rows; NaN rows are ignored."""
        X = np.asarray(X, dtype=float)
        F = np.asarray(F, dtype=float)
        k, lam, n = self.k, self.lam, self.n
        if X.shape != (k, lam, n) or F.shape != (k, lam):
            raise ValueError(f"expected arrays of shape ({k}, {lam}, {n}) and ({k}, {lam})")
        self.eval_count += lam
        self.generation += 1
        W = np.zeros((k, lam))
        nan = np.isnan(F)
        if nan.any():
            for i in range(k):
                valid = np.flatnonzero(~nan[i])
                if valid.size:
                    order = valid[np.argsort(F[i, valid], kind="stable")][: self.mu]
                    W[i, order] = self.weights[: order.size] / self.weights[: order.size].sum()
        else:
            order = np.argsort(F, axis=1, kind="stable")[:, : self.mu]
            np.put_along_axis(W, order, self.weights[None, :], axis=1)
        Fm = np.where(nan, np.inf, F)
        top = np.argmin(Fm, axis=1)
        improved = np.flatnonzero(Fm[np.arange(k), top] < self.best_f)
        self.best_f[improved] = Fm[improved, top[improved]]
        self.best_x[improved] = X[improved, top[improved]]
        a = np.flatnonzero(W.sum(axis=1) > 0)
        if a.size == 0:
            return
        if a.size == k:
            a = slice(None)
        Wa = W[a]
        sig = self.sigma[a]
        Y = (X[a] - self.mean[a, None, :]) / sig[:, None, None]
        white = (Y.astype(np.float32) @ self.A_inv32[a].transpose(0, 2, 1)).astype(float)
        if injected is not None:
            inj = np.asarray(injected, dtype=bool)[a] & (Wa > 0)
            if inj.any():
                # injected rows were not drawn from this distribution; bound their step length
                scale = np.minimum(1.0, self.inject_limit / np.maximum(np.linalg.norm(white, axis=-1), 1e-300))
                scale = np.where(inj, scale, 1.0)[..., None]
                Y = Y * scale
                white = white * scale
        yw = np.einsum("kl,kln->kn", Wa, Y)
        self.mean[a] = self.mean[a] + sig[:, None] * yw

        cs, cc, c1, cmu = self.cs, self.cc, self.c1, self.cmu
        ps = (1 - cs) * self.p_sigma[a] + math.sqrt(cs * (2 - cs) * self.mueff) * np.einsum("kl,kln->kn", Wa, white)
        ps_norm = np.linalg.norm(ps, axis=1)
        h = ps_norm / np.sqrt(1 - (1 - cs) ** (2 * self.generation[a])) < (1.4 + 2 / (n + 1)) * self.chi_n
        pc = (1 - cc) * self.p_c[a] + (h * math.sqrt(cc * (2 - cc) * self.mueff))[:, None] * yw
        # rank-one and rank-mu terms, C <- decay C + V^T diag(w) V, applied lazily
        V = np.zeros((k, lam + 1, n))
        w = np.zeros((k, lam + 1))
        decay = np.ones(k)
        V[a, 0] = pc
        V[a, 1:] = Y
        w[a, 0] = c1
        w[a, 1:] = cmu * Wa
        decay[a] = 1 - c1 - cmu + (~h) * c1 * cc * (2 - cc)
        self._pending.append((decay, w, V))
        self.p_sigma[a] = ps
        self.p_c[a] = pc
        self.sigma[a] = sig * np.exp(np.minimum(1.0, (cs / self.ds) * (ps_norm / self.chi_n - 1)))
        stale = np.flatnonzero(self.generation - self.factor_generation > self.lazy_gap)
        if stale.size:
            self._factor(slice(None) if stale.size == k else stale)

    @property
    def C(self) -> np.ndarray:
        self._flush()
        return self._C

    def _flush(self) -> None:
        if not self._pending:
            return
        decays, ws, Vs = zip(*self._pending)
        self._pending = []
        later = np.ones(self.k)
        scaled = []
        for d, w in zip(reversed(decays), reversed(ws)):
            scaled.append(w * later[:, None])
            later = later * d
        V = np.concatenate(Vs, axis=1)
        w = np.concatenate(scaled[::-1], axis=1)
        self._C *= later[:, None, None]
        self._C += (V * w[..., None]).transpose(0, 2, 1) @ V

    def _factor(self, idx) -> None:
        self._flush()
        C = self._C[idx]
        try:
            L = np.linalg.cholesky(C)
            d = np.diagonal(L, axis1=1, axis2=2)
            bad = ~((d.min(axis=1) > 0) & ((d.max(axis=1) / d.min(axis=1)) ** 2 <= MAX_CONDITION))
        except np.linalg.LinAlgError:
            L = np.empty_like(C)
            bad = np.ones(L.shape[0], dtype=bool)
        for j in np.flatnonzero(bad):
            C[j] = _repair(C[j])
            L[j] = np.linalg.cholesky(C[j])
        if bad.any():
            self._C[idx] = C
        self.A[idx] = L
        self.A_inv[idx] = np.stack([lapack.dtrtri(Lj, lower=1)[0] for Lj in L])
        self.A32 = self.A.astype(np.float32)
        self.A_inv32 = self.A_inv.astype(np.float32)
        self.factor_generation[idx] = self.generation[idx]


def _repair(C: np.ndarray) -> np.ndarray:
    """Symmetrize from the lower triangle and lift the spectrum to a bounded condition number."""
    C = np.tril(C) + np.tril(C, -1).T
    vals = np.linalg.eigvalsh(C)
    top = max(vals.max(), 1e-300)
    shift = top / MAX_CONDITION - min(vals.min(), 0.0)
    return C + max(shift, 0.0) * np.eye(C.shape[0])


class CmaesState:
    """Single search over [0, 1]^n; a one-task view of :class:`CmaesBatch`.

    The state owns its random generator so trajectories are reproducible
    and checkpointable via :meth:`to_dict`.
    """

    def __init__(self, x0, sigma0: float = 0.3, lam: int | None = None, rng=None):
        self.batch = CmaesBatch(np.asarray(x0, dtype=float)[None, :], sigma0, lam,
                                [np.random.default_rng(rng)])

    n = property(lambda self: self.batch.n)
    lam = property(lambda self: self.batch.lam)
    rng = property(lambda self: self.batch.rngs[0])
    mean = property(lambda self: self.batch.mean[0])
    sigma = property(lambda self: float(self.batch.sigma[0]))
    C = property(lambda self: self.batch.C[0])
    generation = property(lambda self: int(self.batch.generation[0]))
    eval_count = property(lambda self: int(self.batch.eval_count[0]))
    best_x = property(lambda self: self.batch.best_x[0])
    best_f = property(lambda self: float(self.batch.best_f[0]))

    def ask(self) -> np.ndarray:
        return self.batch.ask()[0]

    def offer(self, x, f: float) -> None:
        self.batch.offer(0, x, f)

    def tell(self, X, fitness, injected=None) -> None:
        self.batch.tell(np.asarray(X)[None], np.asarray(fitness)[None],
                        None if injected is None else np.asarray(injected)[None])

    _ARRAYS = ("mean", "sigma", "C", "A", "A_inv", "p_sigma", "p_c", "best_x", "best_f")

    def to_dict(self) -> dict:
        b = self.batch
        d = {"n": b.n, "lam": b.lam, "generation": self.generation, "eval_count": self.eval_count,
             "factor_generation": int(b.factor_generation[0]),
             "rng": b.rngs[0].bit_generator.state}
        for key in self._ARRAYS:
            val = getattr(b, key)[0]
            d[key] = val.tolist() if isinstance(val, np.ndarray) else float(val)
        if not math.isfinite(d["best_f"]):
            d["best_f"] = None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CmaesState":
        st = cls(np.asarray(d["mean"]), d["sigma"], lam=d["lam"])
        b = st.batch
        b.rngs[0].bit_generator.state = d["rng"]
        for key in cls._ARRAYS:
            val = d[key]
            getattr(b, key)[0] = math.inf if val is None else np.asarray(val, dtype=float)
        b.generation[0] = d["generation"]
        b.factor_generation[0] = d["factor_generation"]
        b.eval_count[0] = d["eval_count"]
        b.A32 = b.A.astype(np.float32)
        b.A_inv32 = b.A_inv.astype(np.float32)
        return st


def cmaes_minimize(objective: BatchObjective, x0, budget: int, sigma0: float = 0.3,
                   lam: int | None = None, rng=None, target: float = -math.inf) -> CmaesState:
    """Plain CMA-ES loop; ``objective`` maps a (lam, n) batch to lam values."""
    st = CmaesState(x0, sigma0, lam, rng)
    while st.eval_count + st.lam <= budget and st.best_f > target:
        X = st.ask()
        st.tell(X, objective(X))
    return st


@dataclass
class TaskOutcome:
    best_x: np.ndarray
    best_f: float
    evals: int
    history: list[tuple[int, float]] = field(default_factory=list)


def task_rngs(seed, k: int) -> tuple[list[np.random.Generator], np.random.Generator]:
    """Independent sampling streams per task plus one stream for transfer choices."""
    ss = np.random.SeedSequence(seed)
    kids = ss.spawn(k + 1)
    return [np.random.default_rng(s) for s in kids[:k]], np.random.default_rng(kids[k])


def mcmaes_minimize(objectives, x0s: Sequence[np.ndarray], budget_per_task: int, seed=None,
                    transfer: bool = True, sigma0: float = 0.3, lam: int | None = None,
                    start_f: Sequence[float] | None = None) -> list[TaskOutcome]:
    """k CMA-ES tasks advancing in lockstep.

    ``objectives`` is either one callable per task mapping (lam, n) to lam
    values, or a single callable mapping (k, lam, n) to (k, lam).

    Each generation, task i's freshly sampled pool has min(k-1, lam-1)
    uniformly chosen rows replaced by other tasks' incumbents, taken from a
    snapshot at the start of the generation.  ``start_f`` gives the known
    objective of each start point, charged as one evaluation.
    """
    x0s = np.atleast_2d(np.asarray(x0s, dtype=float))
    k = x0s.shape[0]
    if k < 1:
        raise ValueError("need at least one task")
    if callable(objectives):
        joint = objectives
    else:
        if len(objectives) != k:
            raise ValueError("one objective per start point required")
        joint = lambda X: np.stack([obj(x) for obj, x in zip(objectives, X)])  # noqa: E731
    rngs, transfer_rng = task_rngs(seed, k)
    batch = CmaesBatch(x0s, sigma0, lam, rngs, block=16)
    histories: list[list[tuple[int, float]]] = [[] for _ in range(k)]
    if start_f is not None:
        for i in range(k):
            batch.offer(i, batch.mean[i], start_f[i])
            histories[i].append((int(batch.eval_count[i]), float(batch.best_f[i])))
    lam_ = batch.lam
    n_inject = min(k - 1, lam_ - 1) if transfer else 0
    # row i lists every task except i
    others_all = np.array([[j for j in range(k) if j != i] for i in range(k)], dtype=np.int64).reshape(k, k - 1)
    while np.all(batch.eval_count + lam_ <= budget_per_task):
        snap_x, snap_f = batch.best_x.copy(), batch.best_f.copy()
        X = batch.ask()
        injected = np.zeros((k, lam_), dtype=bool)
        if n_inject:
            rows = np.argsort(transfer_rng.random((k, lam_)), axis=1)[:, :n_inject]
            if n_inject == k - 1 and np.isfinite(snap_f).all():
                X[np.arange(k)[:, None], rows] = snap_x[others_all]
                injected[np.arange(k)[:, None], rows] = True
            else:
                for i in range(k):
                    others = [j for j in range(k) if j != i and math.isfinite(snap_f[j])]
                    if len(others) > n_inject:
                        others = list(transfer_rng.choice(others, size=n_inject, replace=False))
                    r = rows[i, : len(others)]
                    X[i, r] = snap_x[others]
                    injected[i, r] = True
        before = batch.best_f.copy()
        batch.tell(X, joint(X), injected)
        for i in np.flatnonzero(batch.best_f < before):
            histories[i].append((int(batch.eval_count[i]), float(batch.best_f[i])))
    return [TaskOutcome(batch.best_x[i].copy(), float(batch.best_f[i]), int(batch.eval_count[i]), histories[i])
            for i in range(k)]
