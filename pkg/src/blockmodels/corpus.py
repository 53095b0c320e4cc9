"""Word-adjacency networks from a part-of-speech tagged token stream.

A record is a (token, tag) pair; None marks a document boundary, which
breaks adjacency.  The vocabulary is the set of case-folded words whose
adjective/noun-tagged occurrences reach the frequency threshold; each
vocabulary word gets a directed edge to the word immediately following
it.  Every word is labeled adjective (block 0) or noun (block 1) by the
majority of its tagged occurrences, ties going to noun.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .graph import Graph, Partition, giant_component

ADJECTIVE, NOUN = 0, 1

# Penn-style defaults; Brown-corpus tag subsets differ and are configurable.
DEFAULT_ADJECTIVE_TAGS = frozenset({"JJ", "JJR", "JJS", "ADJ"})
DEFAULT_NOUN_TAGS = frozenset({"NN", "NNS", "NOUN"})


@dataclass(frozen=True)
class IngestConfig:
    adjective_tags: frozenset = DEFAULT_ADJECTIVE_TAGS
    noun_tags: frozenset = DEFAULT_NOUN_TAGS
    min_count: int = 1
    multigraph: bool = True
    restrict_to_giant: bool = False
    # When set, tokens outside the vocabulary are skipped instead of
    # breaking adjacency, so edges can span intervening words.
    bridge_nonvocab: bool = False

    def __post_init__(self):
        object.__setattr__(self, "adjective_tags", frozenset(self.adjective_tags))
        object.__setattr__(self, "noun_tags", frozenset(self.noun_tags))
        if self.adjective_tags & self.noun_tags:
            raise ValueError("adjective and noun tag sets must be disjoint")
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")


def read_tagged_stream(path):
    """Read `token<TAB>tag` lines; a blank line is a document separator."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            s = line.rstrip("\n")
            if not s.strip():
                records.append(None)
                continue
            parts = s.split("\t") if "\t" in s else s.split()
            if len(parts) < 2:
                raise ValueError(f"bad tagged line: {s!r}")
            records.append((parts[0], parts[1]))
    return records


def build_network(stream, cfg: IngestConfig) -> tuple[Graph, Partition, list[str]]:
    """Directed word-adjacency network with adjective/noun ground truth.

    Returns (graph, truth partition, word labels in vertex order).  In
    simple mode repeated pairs collapse to multiplicity 1; self-pairs
    (the same word twice in a row) are always dropped.
    """
    records = list(stream)
    relevant = cfg.adjective_tags | cfg.noun_tags
    freq: Counter = Counter()
    adj_count: Counter = Counter()
    for rec in records:
        if rec is None:
            continue
        word = rec[0].lower()
        tag = rec[1]
        if tag not in relevant:
            continue
        freq[word] += 1
        if tag in cfg.adjective_tags:
            adj_count[word] += 1
    vocab = sorted(w for w, c in freq.items() if c >= cfg.min_count)
    if not vocab:
        raise ValueError("empty vocabulary: no word meets the frequency threshold")
    index = {w: i for i, w in enumerate(vocab)}
    # majority tag class; ties go to noun
    labels = np.array(
        [ADJECTIVE if 2 * adj_count[w] > freq[w] else NOUN for w in vocab],
        dtype=np.int64,
    )

    edges: Counter = Counter()
    prev = None
    for rec in records:
        if rec is None:
            prev = None
            continue
        word = rec[0].lower()
        if word not in index:
            if not cfg.bridge_nonvocab:
                prev = None
            continue
        if prev is not None and prev != word:
            edges[(index[prev], index[word])] += 1
        prev = word

    if edges:
        keys = sorted(edges)
        src = np.array([u for u, _ in keys], dtype=np.int64)
        dst = np.array([v for _, v in keys], dtype=np.int64)
        if cfg.multigraph:
            cnt = np.array([edges[k] for k in keys], dtype=np.int64)
        else:
            cnt = np.ones(len(keys), dtype=np.int64)
    else:
        src = dst = cnt = np.empty(0, dtype=np.int64)
    graph = Graph(n=len(vocab), directed=True, src=src, dst=dst, cnt=cnt)
    truth = Partition(k=2, g=labels)

    if cfg.restrict_to_giant:
        graph, new_of_old = giant_component(graph, mode="weak")
        old_ids = np.flatnonzero(new_of_old >= 0)
        truth = Partition(k=2, g=labels[old_ids])
        vocab = [vocab[i] for i in old_ids]
    return graph, truth, list(vocab)


def network_summary(graph: Graph, truth: Partition) -> tuple[int, int, int, int]:
    """(words, adjectives, nouns, edges) as reported for word networks."""
    n_adj = int(np.count_nonzero(truth.g == ADJECTIVE))
    return graph.n, n_adj, graph.n - n_adj, graph.num_edges
