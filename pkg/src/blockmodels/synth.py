"""Synthetic planted-partition benchmarks with expected-degree propensities.

Networks are generated from two blocks: per-vertex propensities are drawn
from each block's prior (truncated power law or Poisson), a mixing matrix
interpolates between a degree-preserving random graph and a fully planted
one, and edge multiplicities are independent Poisson draws.  Degrees vary
around their expectations; they are not matched exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .degree_priors import BlockPrior, sample_power_law, solve_theta_min
from .graph import Graph, Partition, giant_component


@dataclass(frozen=True)
class SynthSpec:
    """Two-block benchmark description with concrete generation priors."""

    n: int
    lam: float
    directed: bool
    priors: tuple[BlockPrior, BlockPrior]
    block_fractions: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must be in [0, 1]")
        if len(self.priors) != 2 or len(self.block_fractions) != 2:
            raise ValueError("exactly two blocks are supported")
        if not math.isclose(sum(self.block_fractions), 1.0, rel_tol=1e-9):
            raise ValueError("block fractions must sum to 1")
        if min(self.block_fractions) < 0:
            raise ValueError("block fractions must be non-negative")


def omega_interpolate(kappa, M: float, lam: float, directed: bool) -> np.ndarray:
    """Mixing matrix lam * planted + (1 - lam) * random for two blocks.

    Entries are expected edge counts between blocks (within-block counted
    twice in the undirected case).  The random matrix preserves expected
    degrees; the planted one separates the blocks completely, and in the
    directed case makes all cross-block edges point from block 0 to 1.
    """
    kappa = np.asarray(kappa, dtype=np.float64)
    if kappa.size != 2:
        raise ValueError("two blocks required")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must be in [0, 1]")
    if M <= 0:
        return np.zeros((2, 2))
    if directed:
        random = np.multiply.outer(kappa, kappa) / (4.0 * M)
        w12 = min(kappa[0], kappa[1]) / 2.0
        planted = np.array([
            [(kappa[0] - w12) / 2.0, w12],
            [0.0, (kappa[1] - w12) / 2.0],
        ])
    else:
        random = np.multiply.outer(kappa, kappa) / (2.0 * M)
        planted = np.diag(kappa)
    return lam * planted + (1.0 - lam) * random


def _draw_thetas(prior: BlockPrior, size: int, rng) -> np.ndarray:
    if prior.family == "poisson":
        if prior.mean is None:
            raise ValueError("poisson generation prior needs a mean")
        return rng.poisson(prior.mean, size).astype(np.float64)
    if prior.alpha is None:
        raise ValueError("power-law generation prior needs alpha")
    return sample_power_law(
        rng, prior.alpha, prior.theta_min, prior.theta_max,
        beta=prior.beta or 0.0, size=size,
    )


def generate(spec: SynthSpec, rng) -> tuple[Graph, Partition, dict]:
    """Draw a benchmark network, its planted partition, and the propensities.

    Propensities are normalized within each block, so the block degree
    sums used to build the mixing matrix are the realized draws and the
    expected degree of each vertex tracks its propensity.
    """
    n0 = int(round(spec.n * spec.block_fractions[0]))
    sizes = (n0, spec.n - n0)
    g = np.repeat(np.arange(2), sizes)
    truth = Partition(k=2, g=g)
    if spec.directed:
        th_out = np.concatenate([_draw_thetas(spec.priors[r], sizes[r], rng) for r in range(2)])
        th_in = np.concatenate([_draw_thetas(spec.priors[r], sizes[r], rng) for r in range(2)])
        sum_out = np.array([th_out[g == r].sum() for r in range(2)])
        sum_in = np.array([th_in[g == r].sum() for r in range(2)])
        kappa = sum_out + sum_in
        thetas = {"out": th_out, "in": th_in}
    else:
        th = np.concatenate([_draw_thetas(spec.priors[r], sizes[r], rng) for r in range(2)])
        kappa = np.array([th[g == r].sum() for r in range(2)])
        thetas = {"total": th}
    M = kappa.sum() / 2.0
    if M <= 0:
        e = np.empty(0, dtype=np.int64)
        return Graph(n=spec.n, directed=spec.directed, src=e, dst=e.copy(), cnt=e.copy()), truth, thetas
    omega = omega_interpolate(kappa, M, spec.lam, spec.directed)
    if spec.directed:
        sc_out = np.where(sum_out[g] > 0, th_out / np.where(sum_out[g] > 0, sum_out[g], 1.0), 0.0)
        sc_in = np.where(sum_in[g] > 0, th_in / np.where(sum_in[g] > 0, sum_in[g], 1.0), 0.0)
        rates = np.multiply.outer(sc_out, sc_in) * omega[np.ix_(g, g)]
        np.fill_diagonal(rates, 0.0)
        a = rng.poisson(rates)
        src, dst = np.nonzero(a)
    else:
        sc = np.where(kappa[g] > 0, th / np.where(kappa[g] > 0, kappa[g], 1.0), 0.0)
        rates = np.multiply.outer(sc, sc) * omega[np.ix_(g, g)]
        iu = np.triu_indices(spec.n, k=1)
        a = np.zeros((spec.n, spec.n), dtype=np.int64)
        a[iu] = rng.poisson(rates[iu])
        src, dst = np.nonzero(a)
    cnt = a[src, dst]
    graph = Graph(
        n=spec.n, directed=spec.directed,
        src=src.astype(np.int64), dst=dst.astype(np.int64), cnt=cnt.astype(np.int64),
    )
    return graph, truth, thetas


def postprocess(graph: Graph, truth: Partition, lam: float) -> tuple[Graph, Partition]:
    """Drop isolated vertices and restrict to the giant component.

    At lam = 1 the planted structure separates the blocks, so the largest
    component within each block is kept instead of a single global one.
    The truth labels are remapped consistently.
    """
    if lam == 1.0:
        sub, new_of_old = giant_component(graph, mode="per-block", partition=truth)
    else:
        sub, new_of_old = giant_component(graph, mode="weak")
    old_ids = np.flatnonzero(new_of_old >= 0)
    return sub, Partition(k=truth.k, g=truth.g[old_ids])


# ---------------------------------------------------------------------------
# Spec files and manifests (keyed text, `key = value` per line).
# ---------------------------------------------------------------------------

def parse_synth_spec(lines) -> SynthSpec:
    """Parse a benchmark spec file.

    Top-level keys: n, lambda, directed, block_fractions.  Per-block keys
    block.<r>.<field> describe the propensity prior; a power-law block
    given `mean` instead of `theta_min` gets its lower cutoff solved so
    the truncated mean matches.
    """
    top: dict[str, str] = {}
    blocks: dict[int, dict] = {}
    for i, raw in enumerate(lines, start=1):
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ValueError(f"line {i}: expected key = value")
        key, val = (p.strip() for p in s.split("=", 1))
        if key.startswith("block."):
            parts = key.split(".")
            if len(parts) != 3:
                raise ValueError(f"line {i}: bad key {key!r}")
            try:
                r = int(parts[1])
            except ValueError:
                raise ValueError(f"line {i}: bad block index") from None
            blocks.setdefault(r, {})[parts[2]] = val
        else:
            top[key] = val
    try:
        n = int(top["n"])
        lam = float(top["lambda"])
    except KeyError as exc:
        raise ValueError(f"missing required key {exc}") from None
    directed = top.get("directed", "false").lower() in ("1", "true", "yes")
    fracs = (0.5, 0.5)
    if "block_fractions" in top:
        parts = top["block_fractions"].replace(",", " ").split()
        fracs = tuple(float(p) for p in parts)
    if sorted(blocks) != [0, 1]:
        raise ValueError("spec must define block.0 and block.1")
    priors = tuple(_build_generation_prior(blocks[r]) for r in (0, 1))
    return SynthSpec(n=n, lam=lam, directed=directed, priors=priors, block_fractions=fracs)


def _build_generation_prior(fields: dict) -> BlockPrior:
    family = fields.get("family", "powerlaw")
    getf = lambda k: None if k not in fields else (
        math.inf if fields[k].lower() in ("inf", "infinity") else float(fields[k])
    )
    if family == "poisson":
        mean = getf("mean")
        if mean is None:
            raise ValueError("poisson block needs mean")
        return BlockPrior(family="poisson", mean=mean)
    alpha = getf("alpha")
    if alpha is None:
        raise ValueError("powerlaw block needs alpha")
    theta_max = getf("theta_max") or math.inf
    beta = getf("beta") or 0.0
    theta_min = getf("theta_min")
    mean = getf("mean")
    if theta_min is None:
        if mean is None:
            theta_min = 1.0
        else:
            theta_min = solve_theta_min(alpha, theta_max, mean)
    return BlockPrior(
        family="powerlaw", alpha=alpha, beta=beta,
        theta_min=theta_min, theta_max=theta_max,
    )


def read_synth_spec(path) -> SynthSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_synth_spec(fh)


def spec_manifest(spec: SynthSpec) -> dict:
    """Flat key=value view of a spec for output manifests."""
    out = {
        "n": spec.n,
        "lambda": spec.lam,
        "directed": spec.directed,
        "block_fractions": " ".join(str(f) for f in spec.block_fractions),
    }
    for r, bp in enumerate(spec.priors):
        out[f"block.{r}.family"] = bp.family
        if bp.family == "poisson":
            out[f"block.{r}.mean"] = bp.mean
        else:
            out[f"block.{r}.alpha"] = bp.alpha
            out[f"block.{r}.beta"] = bp.beta
            out[f"block.{r}.theta_min"] = bp.theta_min
            out[f"block.{r}.theta_max"] = bp.theta_max
    return out


def write_manifest(path, entries: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, val in entries.items():
            fh.write(f"{key} = {val}\n")


def read_manifest(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            s = line.split("#", 1)[0].strip()
            if not s or "=" not in s:
                continue
            key, val = (p.strip() for p in s.split("=", 1))
            out[key] = val
    return out
