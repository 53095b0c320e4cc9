"""Partition search: heat-bath MCMC, Kernighan-Lin local moves, heuristics.

The chain is used as a stochastic maximizer: every sampler tracks and
returns the best-objective state it ever visited rather than its final
state.  All randomness comes from caller-supplied seeds, and per-run
seeds are derived as seed + run index, so results are reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Degrees, Graph, Partition, degrees
from .likelihoods import ModelSpec
from .objective import ObjectiveState, objective_value

_REFRESH_EVERY = 10_000
_RNG_CHUNK = 1 << 14


@dataclass
class InferenceConfig:
    """Settings for one inference job."""

    k: int
    model: ModelSpec
    mcmc_steps: int = 1_000_000
    runs: int = 1
    init: str | Partition = "random"
    use_kl: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.mcmc_steps < 0:
            raise ValueError("mcmc_steps must be >= 0")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if isinstance(self.init, str) and self.init not in ("random", "nh"):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass
class InferenceResult:
    best_partition: Partition
    best_objective: float
    per_run: list[tuple[int, float]] = field(default_factory=list)
    seed: int = 0


def naive_heuristic(deg: Degrees, rng) -> Partition:
    """Two-block labeling from degree imbalance.

    Block 0 if out-degree exceeds in-degree, block 1 if the reverse;
    ties are broken by a fair coin from rng.
    """
    if deg.d_out is None or deg.d_in is None:
        raise ValueError("naive heuristic needs directed degrees")
    g = np.where(deg.d_out > deg.d_in, 0, 1).astype(np.int64)
    ties = np.flatnonzero(deg.d_out == deg.d_in)
    if ties.size:
        g[ties] = rng.integers(0, 2, size=ties.size)
    return Partition(k=2, g=g)


def heat_bath_conditional(state: ObjectiveState, v: int) -> np.ndarray:
    """Exact conditional distribution of vertex v's label given the rest."""
    d = state.deltas_all(v)
    w = np.exp(d - d.max())
    return w / w.sum()


def heat_bath_mcmc(graph: Graph, model: ModelSpec, partition: Partition,
                   steps: int, rng, state: ObjectiveState | None = None,
                   ) -> tuple[Partition, np.ndarray]:
    """Single-vertex heat-bath updates; returns the best state visited.

    Each step picks a vertex uniformly, computes the conditional
    distribution of its label proportional to exp(objective delta), and
    resamples the label.  The returned trace holds the running objective
    after every step.
    """
    if state is None:
        state = ObjectiveState(graph, model, partition)
    n, k = state.n, state.k
    trace = np.empty(steps)
    best_obj = state.objective
    best_g = state.g.copy()
    if n == 0 or k == 1 or steps == 0:
        trace[:] = best_obj
        return Partition(k=k, g=best_g), trace
    done = 0
    while done < steps:
        chunk = min(_RNG_CHUNK, steps - done)
        vs = rng.integers(0, n, size=chunk)
        us = rng.random(chunk)
        for i in range(chunk):
            v = int(vs[i])
            d = state.deltas_all(v)
            w = np.exp(d - d.max())
            cum = np.cumsum(w)
            t = int(np.searchsorted(cum, us[i] * cum[-1], side="right"))
            if t >= k:  # us[i] ~ 1.0 edge case
                t = k - 1
            if t != state.g[v]:
                state.apply(v, t)
            step = done + i
            if (step + 1) % _REFRESH_EVERY == 0:
                state.refresh()
            cur = state.objective
            trace[step] = cur
            if cur > best_obj:
                best_obj = cur
                best_g = state.g.copy()
        done += chunk
    return Partition(k=k, g=best_g), trace


def kl_heuristic(graph: Graph, model: ModelSpec, partition: Partition,
                 state: ObjectiveState | None = None) -> Partition:
    """Greedy local search with single-use moves and rollback.

    Each pass moves every vertex exactly once to its best alternative
    block, always taking the currently-best move among unmoved vertices
    even when negative, then rolls back to the best intermediate state.
    Passes repeat until one yields no improvement; the result admits no
    improving single-vertex move.
    """
    if state is None:
        state = ObjectiveState(graph, model, partition)
    n, k = state.n, state.k
    if n == 0 or k == 1:
        return state.partition()
    while True:
        start_obj = state.objective
        best_obj = start_obj
        best_g = state.g.copy()
        avail = np.ones(n, dtype=bool)
        for _ in range(n):
            D = state.batch_deltas(avail)
            D[~avail] = -np.inf
            D[np.arange(n), state.g] = -np.inf
            flat = int(np.argmax(D))
            v, t = divmod(flat, k)
            state.apply(v, t)
            avail[v] = False
            cur = state.objective
            if cur > best_obj:
                best_obj = cur
                best_g = state.g.copy()
        state.reset_partition(best_g)
        if best_obj <= start_obj + 1e-9 * (1.0 + abs(start_obj)):
            break
    return state.partition()


def _build_init(graph: Graph, config: InferenceConfig, rng) -> Partition:
    if isinstance(config.init, Partition):
        p = config.init
        if p.n != graph.n or p.k != config.k:
            raise ValueError("given partition does not match graph/k")
        return p
    if config.init == "nh":
        if not graph.directed:
            raise ValueError("nh init needs a directed graph")
        if config.k != 2:
            raise ValueError("nh init needs k = 2")
        return naive_heuristic(degrees(graph), rng)
    return Partition(k=config.k, g=rng.integers(0, config.k, size=graph.n))


def run_inference(graph: Graph, config: InferenceConfig) -> InferenceResult:
    """Multi-run KL + MCMC maximization; returns the best run's best state."""
    if graph.n == 0:
        raise ValueError("empty graph")
    best_p = None
    best_obj = -np.inf
    per_run = []
    for run in range(config.runs):
        rng = np.random.default_rng(config.seed + run)
        p = _build_init(graph, config, rng)
        state = ObjectiveState(graph, config.model, p)
        if config.use_kl:
            p = kl_heuristic(graph, config.model, p, state=state)
            state.reset_partition(p.g)
        p, _ = heat_bath_mcmc(graph, config.model, p, config.mcmc_steps, rng, state=state)
        obj = objective_value(config.model, graph, p)
        per_run.append((run, obj))
        if obj > best_obj:
            best_obj = obj
            best_p = p
    return InferenceResult(
        best_partition=best_p, best_objective=best_obj,
        per_run=per_run, seed=config.seed,
    )
