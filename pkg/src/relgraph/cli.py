"""``relgraph`` command line: build graph, embed, make dataset, evaluate, predict.

Every subcommand writes ``<main output>.manifest.json`` with its arguments,
format versions and SHA-256 checksums; ``relgraph replay`` re-runs a manifest
and checks the artifacts come out identical.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, seeding
from .dataset import (
    DatasetError,
    as_arrays,
    featurize_many,
    make_folds,
    positive_pairs,
    read_dataset,
    sample_negatives,
    write_dataset,
)
from .graph import (
    GRAPH_CACHE_VERSION,
    GraphError,
    NodeKind,
    RelationKind,
    format_stats,
    graph_stats,
    load_graph,
    load_graph_cache,
    save_graph_cache,
)
from .metrics import MetricError, cross_validate, write_roc
from .mlp import MLP_VERSION, MlpConfig, MlpError, load_mlp, predict_proba, save_mlp, train_mlp
from .pipeline import default_negative_count, embedding_configs
from .contexts import sample_contexts
from .skipgram import (
    DETERMINISTIC,
    EMB_VERSION,
    PARALLEL,
    EmbeddingError,
    TrainingDiverged,
    init_embeddings,
    load_embeddings,
    nearest,
    save_embeddings,
    train,
)
from .synthetic import SyntheticConfig, write_synthetic


class CliError(Exception):
    def __init__(self, kind, message):
        super().__init__(message)
        self.kind = kind


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _jsonable(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, RelationKind):
        return value.name.lower()
    return value


def _write_manifest(path, args, outputs, inputs=(), extra=None, started=None):
    manifest = {
        "relgraph_version": __version__,
        "command": args.command,
        "args": {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k != "func"},
        "formats": {"graph_cache": GRAPH_CACHE_VERSION, "embeddings": EMB_VERSION, "mlp": MLP_VERSION},
        "started": started,
        "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {str(p): _sha256(p) for p in outputs},
    }
    if extra:
        manifest.update(extra)
    Path(path).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def _manifest_path(output):
    return Path(str(output) + ".manifest.json")


def _parse_edge_arg(text):
    kind, sep, path = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected RELATION=PATH, got {text!r}")
    try:
        return Path(path), RelationKind.parse(kind)
    except GraphError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _load_cache(path):
    if not Path(path).is_file():
        raise CliError("missing-file", f"{path}: no such file")
    return load_graph_cache(path)


def _load_table(args):
    path = Path(args.embeddings)
    if not path.is_file():
        raise CliError("missing-file", f"{path}: no such file")
    table = load_embeddings(path)
    if getattr(args, "graph", None):
        graph = _load_cache(args.graph)
        if table.num_nodes != graph.num_nodes:
            raise CliError("dimension", f"embedding table has {table.num_nodes} rows but the graph "
                                        f"has {graph.num_nodes} nodes")
        if table.names is not None and table.names != graph.names:
            raise CliError("dimension", "embedding row names do not match the graph node order")
        table.with_graph(graph)
        return table, graph
    if table.names is None:
        raise CliError("usage", "binary embeddings carry no node names; pass --graph")
    return table, None


def _lookup(table):
    index = {n: i for i, n in enumerate(table.names)}

    def find(name):
        try:
            return index[name]
        except KeyError:
            raise CliError("unknown-id", f"unknown identifier {name!r}") from None
    return find


def _mlp_config(args):
    return MlpConfig(hidden=args.hidden, epochs=args.mlp_epochs, batch_size=args.batch_size,
                     lr=args.mlp_lr, seed=seeding.int_seed(args.seed, "mlp"))


# -- subcommands ---------------------------------------------------------------------

def cmd_build_graph(args):
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    for path, _ in args.edges:
        if not path.is_file():
            raise CliError("missing-file", f"{path}: no such file")
    if args.nodes and not Path(args.nodes).is_file():
        raise CliError("missing-file", f"{args.nodes}: no such file")
    graph = load_graph(args.edges, args.nodes)
    save_graph_cache(graph, args.output)
    stats = graph_stats(graph)
    stats_path = Path(str(args.output) + ".stats.txt")
    stats_path.write_text(format_stats(stats), encoding="utf-8")
    inputs = [p for p, _ in args.edges] + ([args.nodes] if args.nodes else [])
    _write_manifest(_manifest_path(args.output), args, [args.output, stats_path], inputs,
                    {"load_info": graph.load_info}, started)
    sys.stdout.write(format_stats(stats))


def cmd_embed(args):
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    graph = _load_cache(args.graph)
    mode = DETERMINISTIC if args.deterministic or args.threads <= 1 else PARALLEL
    try:
        sampler, trainer = embedding_configs(
            args.method, args.seed, dim=args.dim, window=args.window, epochs=args.epochs, lr=args.lr,
            negatives=args.neg_samples, k=args.group_size, n=args.permutations,
            num_walks=args.walks, walk_length=args.walk_length, p=args.p, q=args.q,
            mode=mode, threads=1 if mode == DETERMINISTIC else args.threads)
    except (TypeError, ValueError) as exc:
        raise CliError("invalid-hyperparameter", str(exc)) from None
    corpus = sample_contexts(graph, sampler)
    if len(corpus) == 0:
        raise CliError("empty-corpus", "the graph produced no training contexts")
    table = init_embeddings(graph.num_nodes, trainer.dim, seeding.int_seed(args.seed, "init"))
    table = train(corpus, trainer, table).with_graph(graph)
    out = Path(args.output)
    text = out.with_suffix(".txt")
    save_embeddings(table, out, "binary")
    save_embeddings(table, text, "text")
    outputs = [out, text]
    if args.dump_corpus:
        corpus.dump(args.dump_corpus)
        outputs.append(Path(args.dump_corpus))
    _write_manifest(_manifest_path(out), args, outputs, [args.graph],
                    {"config": {"sampler": asdict(sampler), "trainer": asdict(trainer)},
                     "corpus": {"groups": len(corpus), "tokens": int(len(corpus.flat))}}, started)
    print(f"method\t{args.method}\nwindow\t{trainer.window}\ndim\t{trainer.dim}\n"
          f"groups\t{len(corpus)}\nembeddings\t{out}\ntext\t{text}")


def cmd_make_dataset(args):
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    graph = _load_cache(args.graph)
    pos = positive_pairs(graph)
    count = args.negatives if args.negatives is not None else default_negative_count(graph, len(pos))
    if count < 1:
        raise CliError("invalid-argument", "need at least one negative example (AUROC is undefined otherwise)")
    neg = sample_negatives(graph, count, seeding.int_seed(args.seed, "negatives"))
    examples = make_folds(pos, neg, args.folds, seeding.int_seed(args.seed, "folds"))
    write_dataset(examples, args.output, graph.names)
    _write_manifest(_manifest_path(args.output), args, [args.output], [args.graph],
                    {"counts": {"positives": len(pos), "negatives": count, "folds": args.folds}}, started)
    print(f"positives\t{len(pos)}\nnegatives\t{count}\nfolds\t{args.folds}\nrows\t{len(examples)}")


def cmd_evaluate(args):
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    table, _ = _load_table(args)
    if not Path(args.dataset).is_file():
        raise CliError("missing-file", f"{args.dataset}: no such file")
    examples = read_dataset(args.dataset, _lookup(table))
    config = _mlp_config(args)
    report = cross_validate(examples, table, config)
    report_path = Path(args.report)
    report.write(report_path)
    outputs = [report_path]
    for f, roc in enumerate(report.rocs):
        p = report_path.with_name(f"{report_path.stem}.fold{f}.roc.csv")
        write_roc(roc, p)
        outputs.append(p)
    if args.model_out:
        drugs, diseases, labels, _ = as_arrays(examples)
        model = train_mlp(featurize_many(table, drugs, diseases), labels, config)
        save_mlp(model, args.model_out)
        outputs.append(Path(args.model_out))
    _write_manifest(_manifest_path(report_path), args, outputs, [args.embeddings, args.dataset],
                    {"mean_auroc": report.mean}, started)
    for f, a in enumerate(report.fold_auroc):
        print(f"fold{f}\t{a:.6f}")
    print(f"mean_auroc\t{report.mean:.6f}\nstd_auroc\t{report.std:.6f}")


def cmd_predict(args):
    table, graph = _load_table(args)
    model = load_mlp(args.model)
    find = _lookup(table)
    drug = find(args.drug)
    if args.disease:
        diseases = [find(args.disease)]
    else:
        kinds = table.kinds
        if kinds is None:
            raise CliError("usage", "--top-k needs --graph to enumerate diseases")
        diseases = list(np.flatnonzero(kinds == NodeKind.DISEASE))
    try:
        x = featurize_many(table, [drug] * len(diseases), diseases)
    except DatasetError as exc:
        raise CliError("wrong-kind", str(exc)) from None
    probs = np.atleast_1d(predict_proba(model, x))
    known = set()
    if graph is not None:
        known = set(int(d) for d in graph.neighbors(drug) if graph.kinds[d] == NodeKind.DISEASE)
    order = sorted(range(len(diseases)), key=lambda i: (-probs[i], diseases[i]))
    if not args.disease:
        order = order[:args.top_k]
    print("drug\tdisease\tprobability\tknown")
    for i in order:
        d = int(diseases[i])
        print(f"{table.names[drug]}\t{table.names[d]}\t{probs[i]:.6f}\t{int(d in known)}")


def cmd_neighbors(args):
    table, _ = _load_table(args)
    node = _lookup(table)(args.node)
    for i, score in nearest(table, node, args.top_k, args.metric):
        print(f"{table.names[i]}\t{score:.6f}")


def cmd_gen_synthetic(args):
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    cfg = SyntheticConfig(drugs=args.drugs, diseases=args.diseases, proteins=args.proteins,
                          communities=args.communities, noise=args.noise,
                          seed=seeding.int_seed(args.seed, "synthetic"))
    try:
        paths = write_synthetic(cfg, args.output)
    except ValueError as exc:
        raise CliError("invalid-argument", str(exc)) from None
    _write_manifest(Path(args.output) / "run.manifest.json", args, sorted(paths.values()), (), None, started)
    for k, p in sorted(paths.items()):
        print(f"{k}\t{p}")


def cmd_benchmark(args):
    """Synthetic graph -> every embedding method -> 5-fold AUROC, one CSV."""
    from .pipeline import build_dataset, embed_graph
    from .synthetic import synthetic_graph

    cfg = SyntheticConfig(seed=seeding.int_seed(args.seed, "synthetic"))
    graph, _ = synthetic_graph(cfg)
    dataset = build_dataset(graph, None, args.folds, args.seed)
    rows = []
    for method in args.methods:
        t0 = time.perf_counter()
        table, _ = embed_graph(graph, method, args.seed, dim=args.dim, epochs=args.epochs)
        report = cross_validate(dataset, table, MlpConfig(seed=seeding.int_seed(args.seed, "mlp")))
        rows.append((method, report, time.perf_counter() - t0))
        print(f"{method}\tmean_auroc\t{report.mean:.6f}\tstd\t{report.std:.6f}\tseconds\t{rows[-1][2]:.1f}")
    with open(args.report, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "fold", "auroc"])
        for method, report, _ in rows:
            for f, a in enumerate(report.fold_auroc):
                w.writerow([method, f, repr(float(a))])
            w.writerow([method, "mean", repr(report.mean)])


def cmd_replay(args):
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    argv = _argv_from_manifest(manifest)
    code = main(argv)
    if code != 0:
        return code
    mismatched = [p for p, digest in manifest["outputs"].items() if _sha256(p) != digest]
    if mismatched:
        raise CliError("replay-mismatch", "artifacts differ from manifest: " + ", ".join(mismatched))
    print(f"replay\tok\t{len(manifest['outputs'])} artifacts identical")
    return 0


def _argv_from_manifest(manifest):
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices[manifest["command"]]
    values = manifest["args"]
    argv = [manifest["command"]]
    for action in sub._actions:
        if not action.option_strings or action.dest not in values:
            continue
        value = values[action.dest]
        flag = action.option_strings[-1]
        if isinstance(action, argparse._StoreTrueAction):
            if value:
                argv.append(flag)
        elif value is None:
            continue
        elif action.dest == "edges":
            for path, rel in value:
                argv += [flag, f"{rel}={path}"]
        elif isinstance(value, list):
            argv += [flag, *map(str, value)]
        else:
            argv += [flag, str(value)]
    return argv


# -- parser ----------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="relgraph", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = subs.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=None,
                       help=f"master seed (default: ${seeding.SEED_ENV} or {seeding.DEFAULT_SEED})")
        return p

    p = add("build-graph", cmd_build_graph, "load edge TSVs into a binary graph cache")
    p.add_argument("--edges", type=_parse_edge_arg, action="append", required=True,
                   metavar="RELATION=PATH", help="drug_protein|drug_disease|protein_protein=file.tsv")
    p.add_argument("--nodes", type=Path, help="optional id<TAB>kind<TAB>display_name file")
    p.add_argument("--output", "-o", type=Path, required=True)

    p = add("embed", cmd_embed, "learn node embeddings")
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--method", choices=["nbne", "deepwalk", "node2vec"], default="nbne")
    p.add_argument("--dim", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--permutations", type=int)
    p.add_argument("--group-size", type=int)
    p.add_argument("--walks", type=int)
    p.add_argument("--walk-length", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--neg-samples", type=int, help="noise nodes per positive pair")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--dump-corpus", type=Path, help="also write the training contexts")
    p.add_argument("--output", "-o", type=Path, required=True,
                   help="binary embedding file; the text copy goes next to it as .txt")

    p = add("make-dataset", cmd_make_dataset, "positives, complement negatives and folds")
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--negatives", type=int, help="default: the reference ratio 30196:2836, capped by the complement")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--output", "-o", type=Path, required=True)

    def mlp_flags(p):
        p.add_argument("--hidden", type=int, default=64)
        p.add_argument("--mlp-epochs", type=int, default=50)
        p.add_argument("--batch-size", type=int, default=128)
        p.add_argument("--mlp-lr", type=float, default=0.01)

    p = add("evaluate", cmd_evaluate, "k-fold cross-validated AUROC")
    p.add_argument("--embeddings", type=Path, required=True)
    p.add_argument("--graph", type=Path)
    p.add_argument("--dataset", type=Path, required=True)
    mlp_flags(p)
    p.add_argument("--report", type=Path, required=True)
    p.add_argument("--model-out", type=Path, help="also fit a model on every example and save it")
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--threads", type=int, default=1)

    p = add("predict", cmd_predict, "link probabilities for a drug")
    p.add_argument("--embeddings", type=Path, required=True)
    p.add_argument("--graph", type=Path)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--drug", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--disease")
    g.add_argument("--top-k", type=int)

    p = add("neighbors", cmd_neighbors, "nearest nodes in embedding space")
    p.add_argument("--embeddings", type=Path, required=True)
    p.add_argument("--graph", type=Path)
    p.add_argument("--node", required=True)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--metric", choices=["cosine", "euclidean"], default="cosine")

    p = add("gen-synthetic", cmd_gen_synthetic, "planted-community benchmark graph")
    p.add_argument("--drugs", type=int, default=60)
    p.add_argument("--diseases", type=int, default=50)
    p.add_argument("--proteins", type=int, default=300)
    p.add_argument("--communities", type=int, default=4)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--output", "-o", type=Path, required=True)

    p = add("benchmark", cmd_benchmark, "synthetic AUROC comparison of all methods")
    p.add_argument("--methods", nargs="+", default=["nbne", "deepwalk", "node2vec"],
                   choices=["nbne", "deepwalk", "node2vec"])
    p.add_argument("--dim", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--report", type=Path, required=True)

    p = subs.add_parser("replay", help="re-run a manifest and verify artifact checksums")
    p.set_defaults(func=cmd_replay)
    p.add_argument("manifest", type=Path)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "seed"):
        args.seed = seeding.resolve_seed(args.seed)
    try:
        return args.func(args) or 0
    except CliError as exc:
        kind, msg = exc.kind, str(exc)
    except (GraphError, EmbeddingError, DatasetError, MlpError, MetricError) as exc:
        kind, msg = type(exc).__name__, str(exc)
    except TrainingDiverged as exc:
        kind, msg = "diverged", str(exc)
    except FileNotFoundError as exc:
        kind, msg = "missing-file", f"{exc.filename}: no such file"
    print(f"relgraph: error: {kind}: {' '.join(msg.split())}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
