"""Command-line front end: generate / ingest / infer / score / sweep.

Every command is deterministic given its full flag set including the
seed, writes a manifest next to its outputs, and exits 0 only when all
outputs were written.
"""
from __future__ import annotations

import argparse
import hashlib
import sys
import time
from pathlib import Path

import numpy as np

from . import corpus, graph as graph_io, synth
from .degree_priors import read_prior_config
from .experiments import build_model, resolve_jobs, run_sweep
from .graph import read_edge_list, read_partition, write_edge_list, write_label_map, write_partition
from .inference import InferenceConfig, run_inference
from .likelihoods import MODEL_NAMES
from .metrics import best_match_accuracy, nmi


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict, inputs, outputs, started: float):
    entries = {"command": command}
    entries.update(config)
    for p in inputs:
        entries[f"input.{Path(p).name}.sha256"] = _digest(p)
    entries["elapsed_seconds"] = f"{time.time() - started:.3f}"
    for p in outputs:
        entries[f"output.{Path(p).name}"] = str(p)
    synth.write_manifest(out_dir / "manifest.txt", entries)


def _cmd_generate(args) -> int:
    started = time.time()
    spec = synth.read_synth_spec(args.spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    g, truth, thetas = synth.generate(spec, rng)
    n_raw, m_raw = g.n, g.num_edges
    if not args.no_postprocess:
        g, truth = synth.postprocess(g, truth, spec.lam)
    edges_path = out / "edges.tsv"
    truth_path = out / "truth.tsv"
    write_edge_list(edges_path, g)
    write_partition(truth_path, truth)
    config = dict(synth.spec_manifest(spec))
    config["seed"] = args.seed
    config["postprocess"] = not args.no_postprocess
    config["n_generated"] = n_raw
    config["edges_generated"] = m_raw
    config["n_kept"] = g.n
    config["edges_kept"] = g.num_edges
    config.update(_realized_kappa(spec, thetas))
    _write_manifest(out, "generate", config, [args.spec], [edges_path, truth_path], started)
    print(f"wrote {edges_path} ({g.num_edges} edges, {g.n} vertices)")
    return 0


def _realized_kappa(spec, thetas) -> dict:
    n0 = int(round(spec.n * spec.block_fractions[0]))
    out = {}
    for name, th in thetas.items():
        out[f"realized_theta_sum.{name}.block0"] = float(th[:n0].sum())
        out[f"realized_theta_sum.{name}.block1"] = float(th[n0:].sum())
    return out


def _cmd_ingest(args) -> int:
    started = time.time()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = corpus.IngestConfig(
        adjective_tags=frozenset(args.adjective_tags.split(",")),
        noun_tags=frozenset(args.noun_tags.split(",")),
        min_count=args.min_count,
        multigraph=not args.simple,
        restrict_to_giant=args.giant,
        bridge_nonvocab=args.bridge_nonvocab,
    )
    stream = corpus.read_tagged_stream(args.tokens)
    g, truth, labels = corpus.build_network(stream, cfg)
    edges_path, truth_path, labels_path = out / "edges.tsv", out / "truth.tsv", out / "labels.tsv"
    write_edge_list(edges_path, g)
    write_partition(truth_path, truth)
    write_label_map(labels_path, labels)
    n, n_adj, n_noun, m = corpus.network_summary(g, truth)
    config = {
        "min_count": args.min_count, "multigraph": not args.simple,
        "restrict_to_giant": args.giant, "bridge_nonvocab": args.bridge_nonvocab,
        "adjective_tags": args.adjective_tags, "noun_tags": args.noun_tags,
        "words": n, "adjectives": n_adj, "nouns": n_noun, "edges": m,
    }
    _write_manifest(out, "ingest", config, [args.tokens],
                    [edges_path, truth_path, labels_path], started)
    print(f"words\t{n}\nadjectives\t{n_adj}\nnouns\t{n_noun}\nedges\t{m}")
    return 0


def _parse_init(value: str, parser):
    if value in ("random", "nh"):
        return value
    if value.startswith("file:"):
        return read_partition(value[5:])
    parser.error(f"bad --init {value!r}: expected random, nh, or file:<path>")


def _cmd_infer(args, parser) -> int:
    started = time.time()
    directed = not args.undirected
    g = read_edge_list(args.edges, directed=directed)
    init = _parse_init(args.init, parser)
    if init == "nh" and not directed:
        parser.error("--init nh needs a directed edge list")
    if args.model in ("dc", "sbm", "dg-dc") and directed:
        print(f"warning: {args.model} scores the undirected projection of a "
              "directed graph", file=sys.stderr)
    prior = None
    if args.model.startswith("dg-"):
        if args.prior:
            prior = read_prior_config(args.prior)
        # absent: generic power-law blocks, hyperparameters refit on the fly
    model = build_model(args.model, prior=prior, k=args.k)
    result = run_inference(g, InferenceConfig(
        k=args.k, model=model, mcmc_steps=args.steps, runs=args.runs,
        init=init, use_kl=args.kl, seed=args.seed,
    ))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    part_path = out / "best_partition.tsv"
    write_partition(part_path, result.best_partition)
    result_path = out / "result.txt"
    with open(result_path, "w", encoding="utf-8") as fh:
        fh.write(f"model = {args.model}\nk = {args.k}\nseed = {args.seed}\n")
        fh.write(f"runs = {args.runs}\nsteps = {args.steps}\nkl = {args.kl}\n")
        fh.write(f"best_objective = {result.best_objective!r}\n")
        for run, obj in result.per_run:
            fh.write(f"run.{run}.objective = {obj!r}\n")
    config = {
        "model": args.model, "k": args.k, "runs": args.runs, "steps": args.steps,
        "init": args.init, "kl": args.kl, "seed": args.seed, "directed": directed,
    }
    inputs = [args.edges] + ([args.prior] if args.prior else [])
    _write_manifest(out, "infer", config, inputs, [part_path, result_path], started)
    print(f"best_objective\t{result.best_objective!r}")
    return 0


def _cmd_score(args) -> int:
    a = read_partition(args.partition_a)
    b = read_partition(args.partition_b)
    if a.n != b.n:
        print(f"error: partitions cover {a.n} and {b.n} vertices", file=sys.stderr)
        return 1
    print(f"nmi\t{nmi(a, b):.6f}")
    try:
        print(f"accuracy\t{best_match_accuracy(a, b):.6f}")
    except ValueError:
        print("accuracy\tnan")
    return 0


def _cmd_sweep(args, parser) -> int:
    started = time.time()
    spec = synth.read_synth_spec(args.spec)
    lambdas = [float(x) for x in args.lambdas.split(",") if x.strip() != ""]
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    if not models:
        parser.error("--models must list at least one model")
    if not lambdas:
        parser.error("--lambdas must list at least one value")
    for name in models:
        if name not in MODEL_NAMES:
            parser.error(f"unknown model {name!r}; expected one of {', '.join(MODEL_NAMES)}")
    rows = run_sweep(
        spec, lambdas, models, networks=args.networks, runs=args.runs,
        steps=args.steps, seed=args.seed, use_kl=args.kl,
        n_jobs=resolve_jobs(),
    )
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("lambda\tmodel\tnetwork\tnmi\tobjective\n")
        for row in rows:
            fh.write(f"{row['lambda']}\t{row['model']}\t{row['network']}\t"
                     f"{row['nmi']:.6f}\t{row['objective']!r}\n")
    config = {
        "lambdas": args.lambdas, "models": args.models, "networks": args.networks,
        "runs": args.runs, "steps": args.steps, "seed": args.seed, "kl": args.kl,
    }
    config.update(synth.spec_manifest(spec))
    entries = {"command": "sweep"}
    entries.update(config)
    entries[f"input.{Path(args.spec).name}.sha256"] = _digest(args.spec)
    entries["elapsed_seconds"] = f"{time.time() - started:.3f}"
    entries["output.table"] = str(out)
    synth.write_manifest(str(out) + ".manifest", entries)
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockmodel",
        description="Poisson block models: benchmark generation, inference, and scoring",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic benchmark bundle")
    p.add_argument("--spec", required=True, help="benchmark spec file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-postprocess", action="store_true",
                   help="keep isolated vertices and minor components")

    p = sub.add_parser("ingest", help="build a word-adjacency network from tagged text")
    p.add_argument("--tokens", required=True, help="token<TAB>tag file, blank line = document break")
    p.add_argument("--out", required=True)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--simple", action="store_true", help="collapse multiplicities to 1")
    p.add_argument("--giant", action="store_true", help="restrict to the giant component")
    p.add_argument("--bridge-nonvocab", action="store_true",
                   help="skip non-vocabulary tokens instead of breaking adjacency")
    p.add_argument("--adjective-tags", default=",".join(sorted(corpus.DEFAULT_ADJECTIVE_TAGS)))
    p.add_argument("--noun-tags", default=",".join(sorted(corpus.DEFAULT_NOUN_TAGS)))

    p = sub.add_parser("infer", help="fit a block model to an edge list")
    p.add_argument("--edges", required=True)
    p.add_argument("--model", required=True, choices=MODEL_NAMES)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--steps", type=int, default=1_000_000)
    p.add_argument("--init", default="random", help="random, nh, or file:<path>")
    p.add_argument("--kl", default=True, action=argparse.BooleanOptionalAction)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--prior", help="prior config for dg-* models; absent = fit on the fly")
    p.add_argument("--undirected", action="store_true",
                   help="read the edge list as undirected")

    p = sub.add_parser("score", help="NMI and best-match accuracy of two partition files")
    p.add_argument("partition_a")
    p.add_argument("partition_b")

    p = sub.add_parser("sweep", help="lambda grid of benchmarks scored by NMI")
    p.add_argument("--spec", required=True)
    p.add_argument("--lambdas", required=True, help="comma-separated values in [0,1]")
    p.add_argument("--models", required=True, help="comma-separated model names")
    p.add_argument("--networks", type=int, default=5)
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kl", default=True, action=argparse.BooleanOptionalAction)
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "ingest":
            return _cmd_ingest(args)
        if args.command == "infer":
            return _cmd_infer(args, parser)
        if args.command == "score":
            return _cmd_score(args)
        if args.command == "sweep":
            return _cmd_sweep(args, parser)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
