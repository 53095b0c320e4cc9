"""Integer-weighted multigraphs, partitions, and block sufficient statistics.

Graphs are either directed or undirected, store aggregated edge
multiplicities, and never contain self-loops.  Vertex ids are dense
integers in [0, n); external labels are handled by a separate label map.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


class ParseError(ValueError):
    """Malformed edge-list or partition input."""


class SelfLoopError(ValueError):
    """Self-loop edge rejected at ingestion."""


@dataclass(frozen=True)
class Graph:
    """Multigraph with aggregated edge multiplicities.

    Directed graphs store ordered pairs (src, dst); undirected graphs
    store each unordered pair once with src < dst.  Multiplicities are
    strictly positive and self-loops are rejected.
    """

    n: int
    directed: bool
    src: np.ndarray
    dst: np.ndarray
    cnt: np.ndarray

    def __post_init__(self):
        for arr in (self.src, self.dst, self.cnt):
            arr.setflags(write=False)
        if self.src.size:
            if int(self.src.min()) < 0 or int(max(self.src.max(), self.dst.max())) >= self.n:
                raise ValueError("vertex id out of range")
            if np.any(self.src == self.dst):
                raise SelfLoopError("self-loops are not allowed")
            if int(self.cnt.min()) <= 0:
                raise ValueError("edge multiplicities must be positive")

    @property
    def num_edges(self) -> int:
        """Total edge count M, multiplicities included."""
        return int(self.cnt.sum())

    @cached_property
    def _csr(self):
        """Adjacency in CSR-like arrays.

        Directed: (out_ptr, out_nbr, out_cnt, in_ptr, in_nbr, in_cnt).
        Undirected: (ptr, nbr, cnt) with every edge listed from both ends.
        """
        if self.directed:
            out = _build_csr(self.n, self.src, self.dst, self.cnt)
            inn = _build_csr(self.n, self.dst, self.src, self.cnt)
            return (*out, *inn)
        both_src = np.concatenate([self.src, self.dst])
        both_dst = np.concatenate([self.dst, self.src])
        both_cnt = np.concatenate([self.cnt, self.cnt])
        return _build_csr(self.n, both_src, both_dst, both_cnt)


def _build_csr(n, src, dst, cnt):
    order = np.argsort(src, kind="stable")
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(ptr, src + 1, 1)
    np.cumsum(ptr, out=ptr)
    return ptr, dst[order], cnt[order]


@dataclass(frozen=True)
class Degrees:
    """Per-vertex degrees; d_out/d_in are None for undirected graphs."""

    d_total: np.ndarray
    d_out: np.ndarray | None = None
    d_in: np.ndarray | None = None

    def __post_init__(self):
        for arr in (self.d_total, self.d_out, self.d_in):
            if arr is not None:
                arr.setflags(write=False)


@dataclass(frozen=True)
class Partition:
    """Assignment of each vertex to one of k blocks."""

    k: int
    g: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "g", np.asarray(self.g, dtype=np.int64))
        self.g.setflags(write=False)
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.g.size and (int(self.g.min()) < 0 or int(self.g.max()) >= self.k):
            raise ValueError("block label out of range")

    @property
    def n(self) -> int:
        return int(self.g.size)


@dataclass(frozen=True)
class BlockStats:
    """Sufficient statistics of a (graph, partition) pair.

    m[r, s] counts edges from block r to block s.  For undirected graphs
    m is symmetric and within-block edges are counted twice, so m[r, r]
    is even and m.sum() == 2M; for directed graphs m.sum() == M.
    """

    directed: bool
    m: np.ndarray
    n_r: np.ndarray
    kappa_total: np.ndarray
    kappa_out: np.ndarray | None = None
    kappa_in: np.ndarray | None = None

    def __post_init__(self):
        for arr in (self.m, self.n_r, self.kappa_total, self.kappa_out, self.kappa_in):
            if arr is not None:
                arr.setflags(write=False)

    @property
    def k(self) -> int:
        return int(self.n_r.size)


def from_edge_list(edges, directed: bool) -> Graph:
    """Build a Graph from (u, v) or (u, v, count) tuples.

    Duplicate entries are aggregated; for undirected graphs (u, v) and
    (v, u) refer to the same edge.  Self-loops raise SelfLoopError.
    """
    agg: dict[tuple[int, int], int] = {}
    top = -1
    for e in edges:
        if len(e) == 2:
            u, v = e
            c = 1
        else:
            u, v, c = e
        u, v, c = int(u), int(v), int(c)
        if u < 0 or v < 0:
            raise ValueError(f"negative vertex id in edge ({u}, {v})")
        if c <= 0:
            raise ValueError(f"non-positive count {c} for edge ({u}, {v})")
        if u == v:
            raise SelfLoopError(f"self-loop ({u}, {v}) rejected")
        if not directed and u > v:
            u, v = v, u
        agg[(u, v)] = agg.get((u, v), 0) + c
        top = max(top, u, v)
    n = top + 1
    if not agg:
        e = np.empty(0, dtype=np.int64)
        return Graph(n=n, directed=directed, src=e, dst=e.copy(), cnt=e.copy())
    keys = sorted(agg)
    src = np.array([u for u, _ in keys], dtype=np.int64)
    dst = np.array([v for _, v in keys], dtype=np.int64)
    cnt = np.array([agg[k] for k in keys], dtype=np.int64)
    return Graph(n=n, directed=directed, src=src, dst=dst, cnt=cnt)


def parse_edge_lines(lines, directed: bool) -> Graph:
    """Parse `src<TAB>dst[<TAB>count]` lines; '#' starts a comment line."""
    edges = []
    for i, line in enumerate(lines, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) not in (2, 3):
            raise ParseError(f"line {i}: expected 2 or 3 fields, got {len(parts)}")
        try:
            tup = tuple(int(p) for p in parts)
        except ValueError as exc:
            raise ParseError(f"line {i}: {exc}") from None
        if tup[0] == tup[1]:
            raise SelfLoopError(f"line {i}: self-loop ({tup[0]}, {tup[1]}) rejected")
        if tup[0] < 0 or tup[1] < 0 or (len(tup) == 3 and tup[2] <= 0):
            raise ParseError(f"line {i}: invalid edge {tup}")
        edges.append(tup)
    return from_edge_list(edges, directed)


def read_edge_list(path, directed: bool) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_lines(fh, directed)


def write_edge_list(path, graph: Graph) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u, v, c in zip(graph.src, graph.dst, graph.cnt):
            fh.write(f"{u}\t{v}\t{c}\n")


def read_partition(path) -> Partition:
    """Read a `vertex<TAB>block` file covering every vertex 0..n-1."""
    entries = {}
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) != 2:
                raise ParseError(f"line {i}: expected 2 fields")
            try:
                v, b = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise ParseError(f"line {i}: {exc}") from None
            if v in entries:
                raise ParseError(f"line {i}: duplicate vertex {v}")
            entries[v] = b
    if not entries:
        return Partition(k=1, g=np.empty(0, dtype=np.int64))
    n = max(entries) + 1
    if len(entries) != n:
        raise ParseError("partition file does not cover vertices 0..n-1")
    g = np.array([entries[v] for v in range(n)], dtype=np.int64)
    return Partition(k=int(g.max()) + 1, g=g)


def write_partition(path, partition: Partition) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v, b in enumerate(partition.g):
            fh.write(f"{v}\t{b}\n")


def write_label_map(path, labels) -> None:
    """Write `label<TAB>internal_id` lines, one per vertex."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, lab in enumerate(labels):
            fh.write(f"{lab}\t{i}\n")


def read_label_map(path) -> list[str]:
    labels = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            s = line.rstrip("\n")
            if not s:
                continue
            lab, _, idx = s.rpartition("\t")
            labels[int(idx)] = lab
    return [labels[i] for i in range(len(labels))]


def undirected_projection(g: Graph) -> Graph:
    """Erase edge orientations: the projection has multiplicity A_uv + A_vu."""
    if not g.directed:
        raise ValueError("graph is already undirected")
    u = np.minimum(g.src, g.dst)
    v = np.maximum(g.src, g.dst)
    order = np.lexsort((v, u))
    u, v, c = u[order], v[order], g.cnt[order]
    if u.size:
        key_change = np.empty(u.size, dtype=bool)
        key_change[0] = True
        key_change[1:] = (u[1:] != u[:-1]) | (v[1:] != v[:-1])
        idx = np.cumsum(key_change) - 1
        cnt = np.zeros(int(idx[-1]) + 1, dtype=np.int64)
        np.add.at(cnt, idx, c)
        u, v = u[key_change], v[key_change]
    else:
        cnt = c
    return Graph(n=g.n, directed=False, src=u, dst=v, cnt=cnt)


def degrees(g: Graph) -> Degrees:
    """Exact degree vectors including multiplicities."""
    if g.directed:
        d_out = np.zeros(g.n, dtype=np.int64)
        d_in = np.zeros(g.n, dtype=np.int64)
        np.add.at(d_out, g.src, g.cnt)
        np.add.at(d_in, g.dst, g.cnt)
        return Degrees(d_total=d_out + d_in, d_out=d_out, d_in=d_in)
    d = np.zeros(g.n, dtype=np.int64)
    np.add.at(d, g.src, g.cnt)
    np.add.at(d, g.dst, g.cnt)
    return Degrees(d_total=d)


def induced_subgraph(g: Graph, keep: np.ndarray) -> tuple[Graph, np.ndarray]:
    """Subgraph on the sorted vertex set `keep`; returns (graph, new_of_old).

    new_of_old maps original ids to new dense ids, -1 for dropped vertices.
    """
    keep = np.asarray(sorted(keep), dtype=np.int64)
    new_of_old = np.full(g.n, -1, dtype=np.int64)
    new_of_old[keep] = np.arange(keep.size)
    mask = (new_of_old[g.src] >= 0) & (new_of_old[g.dst] >= 0)
    sub = Graph(
        n=int(keep.size),
        directed=g.directed,
        src=new_of_old[g.src[mask]],
        dst=new_of_old[g.dst[mask]],
        cnt=g.cnt[mask].copy(),
    )
    return sub, new_of_old


def _component_labels(n, src, dst):
    adj = coo_matrix((np.ones(src.size), (src, dst)), shape=(n, n))
    ncomp, labels = connected_components(adj, directed=False)
    return ncomp, labels


def _largest_component(n, labels, ncomp, members=None):
    """Largest component; ties broken by smallest minimum original id."""
    verts = np.arange(n) if members is None else np.asarray(members)
    labs = labels[verts]
    sizes = np.bincount(labs, minlength=ncomp)
    min_id = np.full(ncomp, n, dtype=np.int64)
    np.minimum.at(min_id, labs, verts)
    best = max(
        (c for c in range(ncomp) if sizes[c] > 0),
        key=lambda c: (sizes[c], -min_id[c]),
    )
    return verts[labs == best]


def giant_component(
    g: Graph, mode: str = "weak", partition: Partition | None = None
) -> tuple[Graph, np.ndarray]:
    """Restrict to the largest weakly-connected component.

    mode="weak" keeps one giant component; mode="per-block" keeps the
    largest component inside each ground-truth block (cross-block edges
    between kept vertices survive).  Isolated vertices never survive.
    Returns (subgraph, new_of_old map with -1 for dropped vertices).
    """
    if mode not in ("weak", "per-block"):
        raise ValueError(f"unknown mode {mode!r}")
    if g.n == 0:
        return g, np.empty(0, dtype=np.int64)
    if mode == "weak":
        ncomp, labels = _component_labels(g.n, g.src, g.dst)
        keep = _largest_component(g.n, labels, ncomp)
        if keep.size <= 1 and g.num_edges == 0:
            keep = keep[:0]
        return induced_subgraph(g, keep)
    if partition is None:
        raise ValueError("per-block mode requires a partition")
    if partition.n != g.n:
        raise ValueError("partition size mismatch")
    internal = partition.g[g.src] == partition.g[g.dst]
    ncomp, labels = _component_labels(g.n, g.src[internal], g.dst[internal])
    keep_parts = []
    for r in range(partition.k):
        members = np.flatnonzero(partition.g == r)
        if members.size == 0:
            continue
        comp = _largest_component(g.n, labels, ncomp, members)
        if comp.size > 1:
            keep_parts.append(comp)
    keep = np.concatenate(keep_parts) if keep_parts else np.empty(0, dtype=np.int64)
    return induced_subgraph(g, keep)


def block_stats(g: Graph, p: Partition) -> BlockStats:
    """Edge counts m_rs, block degree sums, and block sizes."""
    if p.n != g.n:
        raise ValueError(f"partition covers {p.n} vertices, graph has {g.n}")
    k = p.k
    m = np.zeros((k, k), dtype=np.int64)
    gs, gd = p.g[g.src], p.g[g.dst]
    np.add.at(m, (gs, gd), g.cnt)
    n_r = np.bincount(p.g, minlength=k).astype(np.int64)
    deg = degrees(g)
    if g.directed:
        kout = np.zeros(k, dtype=np.int64)
        kin = np.zeros(k, dtype=np.int64)
        np.add.at(kout, p.g, deg.d_out)
        np.add.at(kin, p.g, deg.d_in)
        return BlockStats(
            directed=True, m=m, n_r=n_r,
            kappa_total=kout + kin, kappa_out=kout, kappa_in=kin,
        )
    np.add.at(m, (gd, gs), g.cnt)
    ktot = np.zeros(k, dtype=np.int64)
    np.add.at(ktot, p.g, deg.d_total)
    return BlockStats(directed=False, m=m, n_r=n_r, kappa_total=ktot)
