"""Model objectives over partitions, with fast single-vertex-move deltas.

The full objective of a partition is the family profile log-likelihood
plus, for degree-generated models, the log-probability of the observed
degrees under the per-block priors.  ObjectiveState maintains the block
sufficient statistics, per-vertex block-neighbor profiles, and per-block
degree censuses so that the change from moving one vertex costs O(K^2)
arithmetic instead of a full O(M) recomputation.
"""
from __future__ import annotations

import numpy as np
from scipy.special import gammaln, xlogy

from . import degree_priors as dp
from .graph import BlockStats, Graph, Partition, block_stats, degrees, undirected_projection
from .likelihoods import ModelSpec, loglik


def working_graph(model: ModelSpec, graph: Graph) -> Graph:
    """Graph actually scored by the model: sbm/dc project directed input."""
    family = model.family if isinstance(model, ModelSpec) else model
    if family in ("ddc", "odc") and not graph.directed:
        raise ValueError(f"{family} requires a directed graph")
    if family in ("sbm", "dc") and graph.directed:
        return undirected_projection(graph)
    return graph


def objective_value(model: ModelSpec, graph: Graph, partition: Partition) -> float:
    """Full objective recomputed from scratch; the reference for all deltas."""
    graph = working_graph(model, graph)
    stats = block_stats(graph, partition)
    if model.degree_generated is not None:
        if model.family == "sbm":
            raise ValueError("sbm has no propensities to degree-generate")
        return dp.dg_objective(model, stats, degrees(graph), partition)
    return loglik(model.family, stats)


def _safe_log(x):
    return np.log(np.where(x > 0, x, 1.0))


class ObjectiveState:
    """Mutable (partition, sufficient statistics) pair for one model.

    Owned by a single inference chain; not thread-safe.  The underlying
    counts are integers, so the cached family value is exact; only the
    degree-census log sums can accumulate float drift, which refresh()
    clears by rebuilding everything from the graph.
    """

    def __init__(self, graph: Graph, model: ModelSpec, partition: Partition):
        self.model = model
        self.graph = working_graph(model, graph)
        if partition.n != self.graph.n:
            raise ValueError("partition size mismatch")
        self.k = partition.k
        self.n = self.graph.n
        self.directed = self.graph.directed
        self.g = partition.g.copy()
        deg = degrees(self.graph)
        self.d_total = deg.d_total
        self.d_out = deg.d_out
        self.d_in = deg.d_in
        csr = self.graph._csr
        if self.directed:
            (self.out_ptr, self.out_nbr, self.out_cnt,
             self.in_ptr, self.in_nbr, self.in_cnt) = csr
        else:
            self.ptr, self.nbr, self.cnt = csr
        self._setup_dg()
        self._rebuild()

    # -- construction / full rebuild ------------------------------------

    def _setup_dg(self):
        prior = self.model.degree_generated
        self._dg = []
        if prior is None:
            return
        if self.model.family == "sbm":
            raise ValueError("sbm has no propensities to degree-generate")
        if self.model.family == "ddc":
            dirs = [(self.d_out, prior.out_priors()), (self.d_in, prior.in_priors())]
        else:
            dirs = [(self.d_total, prior.total_priors())]
        for dvals, priors in dirs:
            if len(priors) != self.k:
                raise ValueError("prior has wrong number of blocks")
            d = dvals.astype(np.float64)
            self._dg.append({
                "priors": priors,
                "d": d,
                "iszero": (d == 0).astype(np.float64),
                "logd": np.where(d > 0, np.log(np.maximum(d, 1.0)), 0.0),
                "lgam": gammaln(d + 1.0),
            })

    def _rebuild(self):
        k, g = self.k, self.g
        m = np.zeros((k, k), dtype=np.int64)
        if self.directed:
            gs, gd = g[self.graph.src], g[self.graph.dst]
            np.add.at(m, (gs, gd), self.graph.cnt)
            self.kout = np.bincount(g, weights=self.d_out, minlength=k)
            self.kin = np.bincount(g, weights=self.d_in, minlength=k)
            self.ktot = self.kout + self.kin
        else:
            gs, gd = g[self.graph.src], g[self.graph.dst]
            np.add.at(m, (gs, gd), self.graph.cnt)
            np.add.at(m, (gd, gs), self.graph.cnt)
            self.ktot = np.bincount(g, weights=self.d_total, minlength=k)
        self.m = m.astype(np.float64)
        self.nr = np.bincount(g, minlength=k).astype(np.float64)
        self._rebuild_profiles()
        for cache in self._dg:
            cache["z"] = np.bincount(g, weights=cache["iszero"], minlength=k)
            cache["S"] = np.bincount(g, weights=cache["logd"], minlength=k)
            cache["D"] = np.bincount(g, weights=cache["d"], minlength=k)
            cache["L"] = np.bincount(g, weights=cache["lgam"], minlength=k)
            cache["pen"] = np.array([
                dp.block_penalty(
                    cache["priors"][r], self.nr[r], cache["z"][r],
                    cache["S"][r], cache["D"][r], cache["L"][r],
                )
                for r in range(k)
            ])
        self._family = self._family_value(self.m, self.nr, *self._kappas())
        self._pen = sum(float(c["pen"].sum()) for c in self._dg)

    def _rebuild_profiles(self):
        """Per-vertex edge multiplicities into each block."""
        k, g = self.k, self.g
        if self.directed:
            self.P_out = self._profile(self.out_ptr, self.out_nbr, self.out_cnt, g, k)
            self.P_in = self._profile(self.in_ptr, self.in_nbr, self.in_cnt, g, k)
        else:
            self.P = self._profile(self.ptr, self.nbr, self.cnt, g, k)

    @staticmethod
    def _profile(ptr, nbr, cnt, g, k):
        P = np.zeros((g.size, k))
        if nbr.size:
            rows = np.repeat(np.arange(g.size), np.diff(ptr))
            np.add.at(P, (rows, g[nbr]), cnt)
        return P

    def _kappas(self):
        if self.directed:
            return self.kout, self.kin, self.ktot
        return None, None, self.ktot

    # -- objective bookkeeping -------------------------------------------

    def _family_value(self, m, nr, kout, kin, ktot) -> float:
        family = self.model.family
        if family == "ddc":
            denom = np.multiply.outer(kout, kin)
            half = 1.0
        elif family == "odc":
            denom = np.multiply.outer(ktot, ktot)
            half = 1.0
        elif family == "dc":
            denom = np.multiply.outer(ktot, ktot)
            half = 0.5
        else:
            denom = np.multiply.outer(nr, nr)
            half = 0.5
        return half * float(np.sum(xlogy(m, m) - m * _safe_log(denom)))

    @property
    def objective(self) -> float:
        return self._family + self._pen

    def partition(self) -> Partition:
        return Partition(k=self.k, g=self.g.copy())

    def refresh(self) -> float:
        """Rebuild every cache from the graph; returns the exact objective."""
        self._rebuild()
        return self.objective

    def reset_partition(self, g_new: np.ndarray) -> None:
        self.g = np.asarray(g_new, dtype=np.int64).copy()
        self._rebuild()

    # -- single-move deltas ----------------------------------------------

    def _moved_arrays(self, v: int, r: int, t: int):
        """Copies of m and block vectors after moving v from r to t."""
        m2 = self.m.copy()
        nr2 = self.nr.copy()
        nr2[r] -= 1.0
        nr2[t] += 1.0
        if self.directed:
            po, pi = self.P_out[v], self.P_in[v]
            m2[r] -= po
            m2[t] += po
            m2[:, r] -= pi
            m2[:, t] += pi
            kout2 = self.kout.copy()
            kin2 = self.kin.copy()
            dout, din = self.d_out[v], self.d_in[v]
            kout2[r] -= dout
            kout2[t] += dout
            kin2[r] -= din
            kin2[t] += din
            return m2, nr2, kout2, kin2, kout2 + kin2
        p = self.P[v]
        m2[r] -= p
        m2[t] += p
        m2[:, r] -= p
        m2[:, t] += p
        ktot2 = self.ktot.copy()
        d = self.d_total[v]
        ktot2[r] -= d
        ktot2[t] += d
        return m2, nr2, None, None, ktot2

    def _pen_delta(self, v: int, r: int, t: int) -> float:
        dpen = 0.0
        for c in self._dg:
            zr, zt = c["z"][r] - c["iszero"][v], c["z"][t] + c["iszero"][v]
            sr, st = c["S"][r] - c["logd"][v], c["S"][t] + c["logd"][v]
            dr, dt = c["D"][r] - c["d"][v], c["D"][t] + c["d"][v]
            lr, lt = c["L"][r] - c["lgam"][v], c["L"][t] + c["lgam"][v]
            pr = dp.block_penalty(c["priors"][r], self.nr[r] - 1.0, zr, sr, dr, lr)
            pt = dp.block_penalty(c["priors"][t], self.nr[t] + 1.0, zt, st, dt, lt)
            dpen += pr + pt - c["pen"][r] - c["pen"][t]
        return dpen

    def delta(self, v: int, t: int) -> float:
        """Objective change if vertex v moved to block t; state unchanged."""
        r = int(self.g[v])
        if t == r:
            return 0.0
        m2, nr2, kout2, kin2, ktot2 = self._moved_arrays(v, r, t)
        d = self._family_value(m2, nr2, kout2, kin2, ktot2) - self._family
        if self._dg:
            d += self._pen_delta(v, r, t)
        return d

    def deltas_all(self, v: int) -> np.ndarray:
        """Deltas for moving v to every block; zero at its current block."""
        out = np.zeros(self.k)
        for t in range(self.k):
            if t != self.g[v]:
                out[t] = self.delta(v, t)
        return out

    def apply(self, v: int, t: int) -> None:
        """Move vertex v to block t and update all caches."""
        r = int(self.g[v])
        if t == r:
            return
        if self.directed:
            po, pi = self.P_out[v], self.P_in[v]
            self.m[r] -= po
            self.m[t] += po
            self.m[:, r] -= pi
            self.m[:, t] += pi
            dout, din = self.d_out[v], self.d_in[v]
            self.kout[r] -= dout
            self.kout[t] += dout
            self.kin[r] -= din
            self.kin[t] += din
            self.ktot[r] = self.kout[r] + self.kin[r]
            self.ktot[t] = self.kout[t] + self.kin[t]
            lo, hi = self.out_ptr[v], self.out_ptr[v + 1]
            ys, cs = self.out_nbr[lo:hi], self.out_cnt[lo:hi]
            self.P_in[ys, r] -= cs
            self.P_in[ys, t] += cs
            lo, hi = self.in_ptr[v], self.in_ptr[v + 1]
            xs, cs = self.in_nbr[lo:hi], self.in_cnt[lo:hi]
            self.P_out[xs, r] -= cs
            self.P_out[xs, t] += cs
        else:
            p = self.P[v]
            self.m[r] -= p
            self.m[t] += p
            self.m[:, r] -= p
            self.m[:, t] += p
            d = self.d_total[v]
            self.ktot[r] -= d
            self.ktot[t] += d
            lo, hi = self.ptr[v], self.ptr[v + 1]
            xs, cs = self.nbr[lo:hi], self.cnt[lo:hi]
            self.P[xs, r] -= cs
            self.P[xs, t] += cs
        self.nr[r] -= 1.0
        self.nr[t] += 1.0
        self.g[v] = t
        for c in self._dg:
            c["z"][r] -= c["iszero"][v]
            c["z"][t] += c["iszero"][v]
            c["S"][r] -= c["logd"][v]
            c["S"][t] += c["logd"][v]
            c["D"][r] -= c["d"][v]
            c["D"][t] += c["d"][v]
            c["L"][r] -= c["lgam"][v]
            c["L"][t] += c["lgam"][v]
            for b in (r, t):
                c["pen"][b] = dp.block_penalty(
                    c["priors"][b], self.nr[b], c["z"][b], c["S"][b], c["D"][b], c["L"][b]
                )
        self._family = self._family_value(self.m, self.nr, *self._kappas())
        self._pen = sum(float(c["pen"].sum()) for c in self._dg)

    # -- vectorized deltas over many vertices ------------------------------

    def batch_deltas(self, mask: np.ndarray | None = None) -> np.ndarray:
        """Delta matrix D[v, t] for all vertices (0 at the current block).

        Rows where mask is False are left at 0.  Used by local search to
        scan every candidate single-vertex move at once.
        """
        k = self.k
        D = np.zeros((self.n, k))
        for r in range(k):
            sel = self.g == r
            if mask is not None:
                sel &= mask
            idx = np.flatnonzero(sel)
            if idx.size == 0:
                continue
            for t in range(k):
                if t == r:
                    continue
                D[idx, t] = self._batch_delta_group(idx, r, t)
        return D

    def _batch_delta_group(self, idx: np.ndarray, r: int, t: int) -> np.ndarray:
        B = idx.size
        k = self.k
        m2 = np.repeat(self.m[None, :, :], B, axis=0)
        nr2 = np.repeat(self.nr[None, :], B, axis=0)
        nr2[:, r] -= 1.0
        nr2[:, t] += 1.0
        if self.directed:
            po, pi = self.P_out[idx], self.P_in[idx]
            m2[:, r, :] -= po
            m2[:, t, :] += po
            m2[:, :, r] -= pi
            m2[:, :, t] += pi
            kout2 = np.repeat(self.kout[None, :], B, axis=0)
            kin2 = np.repeat(self.kin[None, :], B, axis=0)
            do, di = self.d_out[idx], self.d_in[idx]
            kout2[:, r] -= do
            kout2[:, t] += do
            kin2[:, r] -= di
            kin2[:, t] += di
            ktot2 = kout2 + kin2
        else:
            p = self.P[idx]
            m2[:, r, :] -= p
            m2[:, t, :] += p
            m2[:, :, r] -= p
            m2[:, :, t] += p
            d = self.d_total[idx]
            ktot2 = np.repeat(self.ktot[None, :], B, axis=0)
            ktot2[:, r] -= d
            ktot2[:, t] += d
            kout2 = kin2 = None
        family = self.model.family
        if family == "ddc":
            denom = kout2[:, :, None] * kin2[:, None, :]
            half = 1.0
        elif family == "odc":
            denom = ktot2[:, :, None] * ktot2[:, None, :]
            half = 1.0
        elif family == "dc":
            denom = ktot2[:, :, None] * ktot2[:, None, :]
            half = 0.5
        else:
            denom = nr2[:, :, None] * nr2[:, None, :]
            half = 0.5
        vals = half * np.sum(xlogy(m2, m2) - m2 * _safe_log(denom), axis=(1, 2))
        out = vals - self._family
        for c in self._dg:
            zr, zt = c["z"][r] - c["iszero"][idx], c["z"][t] + c["iszero"][idx]
            sr, st = c["S"][r] - c["logd"][idx], c["S"][t] + c["logd"][idx]
            dr, dt = c["D"][r] - c["d"][idx], c["D"][t] + c["d"][idx]
            lr, lt = c["L"][r] - c["lgam"][idx], c["L"][t] + c["lgam"][idx]
            pr = dp.block_penalty_vec(c["priors"][r], self.nr[r] - 1.0, zr, sr, dr, lr)
            pt = dp.block_penalty_vec(c["priors"][t], self.nr[t] + 1.0, zt, st, dt, lt)
            out += pr + pt - c["pen"][r] - c["pen"][t]
        return out


def delta_loglik(model: ModelSpec, graph: Graph, partition: Partition,
                 vertex: int, from_block: int, to_block: int) -> float:
    """Objective change from moving one vertex, as a one-shot call.

    Builds a transient ObjectiveState, so repeated use is O(M) per call;
    inference loops keep a persistent state instead.
    """
    if int(partition.g[vertex]) != from_block:
        raise ValueError(f"vertex {vertex} is not in block {from_block}")
    if from_block == to_block:
        return 0.0
    return ObjectiveState(graph, model, partition).delta(vertex, to_block)
