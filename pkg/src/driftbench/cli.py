"""Command-line interface: the full pipeline as reproducible subcommands.

Exit codes are a stable contract for scripting: 0 success, 1 usage error,
2 data error, 3 numerical failure. Every run emits a manifest (next to the
output file, or on stderr for stdout output); runs with equal manifests
minus the timestamp produce identical outputs. Seed-dependent subcommands
require an explicit --seed rather than defaulting to a random one.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import graph as graph_mod
from .corpus import (
    TokenStream,
    build_vocabulary,
    corpus_stats,
    load_stoplist,
    read_corpus,
    remove_stopwords,
    tokenize_document,
)
from .count_model import (
    WindowConfig,
    augment_counts,
    count_cooccurrences,
    load_cooc,
    ppmi_transform,
    save_cooc,
)
from .errors import DataError, DriftbenchError, MissingInputError, NumericalError
from .manifest import RunManifest, build_manifest
from .stability import (
    apply_alignment,
    cross_seed_stability,
    procrustes_align,
    random_rotation,
    stability_report,
)
from .synthetic import synthetic_corpus
from .trainer import (
    TrainingConfig,
    load_embedding_text,
    parse_objective,
    save_checkpoint,
    save_embedding_text,
    train_cbow,
    train_skipgram,
)
from .vector_space import VectorSpace, nearest_neighbors

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; our contract reserves 2 for data."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def _objective(text: str) -> str:
    try:
        parse_objective(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text


# ---------------------------------------------------------------------------
# shared plumbing


def _corpus_streams(path: str, stoplist_path: str | None = None) -> list[TokenStream]:
    corpus = Path(path)
    if not corpus.exists():
        raise MissingInputError([str(corpus)])
    docs = read_corpus(corpus)
    streams = [tokenize_document(d) for d in docs]
    if stoplist_path:
        stoplist = load_stoplist(stoplist_path)
        streams = [remove_stopwords(s, stoplist) for s in streams]
    return streams


def _load_space(path: str, ppmi: bool = False) -> VectorSpace:
    """Load a model file, sniffing COOC v1 vs embedding text format."""
    p = Path(path)
    if not p.exists():
        raise MissingInputError([str(p)])
    with open(p, "r", encoding="utf-8") as fh:
        head = fh.readline()
    if head.startswith("COOC"):
        matrix = load_cooc(p)
        return ppmi_transform(matrix) if ppmi else matrix.to_space()
    if ppmi:
        raise DataError(f"{path}: --ppmi applies to count models only")
    return load_embedding_text(p)


def _load_dense(path: str) -> VectorSpace:
    space = _load_space(path)
    if space.is_sparse:
        raise DataError(
            f"{path}: this operation needs a dense embedding model, not a count matrix"
        )
    return space


def _emit(out: str | None, payload: str) -> None:
    if out:
        Path(out).write_text(payload, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(payload)


def _emit_manifest(out: str | None, manifest: RunManifest) -> None:
    if out:
        Path(str(out) + ".manifest.json").write_text(
            manifest.to_json(), encoding="utf-8", newline="\n"
        )
    else:
        sys.stderr.write(manifest.to_json())


def _note(message: str) -> None:
    print(message, file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommand handlers


def cmd_stats(args) -> int:
    streams = _corpus_streams(args.corpus, args.stoplist)
    stats = corpus_stats(streams)
    manifest = build_manifest(
        "stats",
        {"corpus": args.corpus, "stoplist": args.stoplist},
        [args.corpus] + ([args.stoplist] if args.stoplist else []),
    )
    _emit(args.out, json.dumps(stats.to_dict(), indent=2) + "\n")
    _emit_manifest(args.out, manifest)
    return EXIT_OK


def cmd_build_count(args) -> int:
    streams = _corpus_streams(args.corpus, args.stoplist)
    vocab = build_vocabulary(streams, min_count=args.min_count, max_size=args.max_size)
    matrix = count_cooccurrences(streams, vocab, WindowConfig(radius=args.window))
    save_cooc(matrix, args.out)
    manifest = build_manifest(
        "build-count",
        {
            "corpus": args.corpus,
            "window": args.window,
            "min_count": args.min_count,
            "max_size": args.max_size,
            "stoplist": args.stoplist,
        },
        [args.corpus] + ([args.stoplist] if args.stoplist else []),
    )
    _emit_manifest(args.out, manifest)
    _note(
        f"wrote {args.out}: {len(vocab)} words, {matrix.counts.nnz} nonzero cells"
    )
    return EXIT_OK


def cmd_neighbors(args) -> int:
    space = _load_space(args.model, ppmi=args.ppmi)
    result = nearest_neighbors(space, args.word, args.k, args.metric)
    payload = result.to_json() + "\n" if args.format == "json" else result.to_tsv()
    manifest = build_manifest(
        "neighbors",
        {
            "model": args.model,
            "word": args.word,
            "k": args.k,
            "metric": args.metric,
            "ppmi": args.ppmi,
        },
        [args.model],
    )
    _emit(args.out, payload)
    _emit_manifest(args.out, manifest)
    return EXIT_OK


def cmd_diff(args) -> int:
    space_a = _load_space(args.model_a, ppmi=args.ppmi)
    space_b = _load_space(args.model_b, ppmi=args.ppmi)
    words = None
    if args.words and args.words != "all":
        words = [w for w in args.words.split(",") if w]
    report = stability_report(space_a, space_b, k=args.k, metric=args.metric, words=words)
    if args.format == "csv":
        payload = report.to_csv()
    else:
        payload = json.dumps(report.to_json_dict(), indent=2, ensure_ascii=False) + "\n"
    manifest = build_manifest(
        "diff",
        {
            "model_a": args.model_a,
            "model_b": args.model_b,
            "k": args.k,
            "metric": args.metric,
            "words": args.words,
            "ppmi": args.ppmi,
        },
        [args.model_a, args.model_b],
    )
    _emit(args.out, payload)
    _emit_manifest(args.out, manifest)
    return EXIT_OK


def _training_config(args) -> TrainingConfig:
    return TrainingConfig(
        seed=args.seed,
        dimension=args.dim,
        window_radius=args.window,
        epochs=args.epochs,
        learning_rate=args.lr,
        min_count=args.min_count,
        objective=args.objective,
    )


def cmd_train(args) -> int:
    streams = _corpus_streams(args.corpus, args.stoplist)
    config = _training_config(args)
    train = train_skipgram if args.skipgram else train_cbow
    space = train(streams, config)
    text_path = f"{args.out}.txt"
    ckpt_path = f"{args.out}.npz"
    save_embedding_text(space, text_path)
    save_checkpoint(space, ckpt_path)
    manifest = build_manifest(
        "train",
        {
            "corpus": args.corpus,
            "architecture": "skipgram" if args.skipgram else "cbow",
            "dim": args.dim,
            "window": args.window,
            "epochs": args.epochs,
            "lr": args.lr,
            "min_count": args.min_count,
            "objective": args.objective,
            "stoplist": args.stoplist,
        },
        [args.corpus] + ([args.stoplist] if args.stoplist else []),
        seed=args.seed,
    )
    _emit_manifest(args.out, manifest)
    for i, loss in enumerate(space.provenance["epoch_losses"], start=1):
        _note(f"epoch {i}/{args.epochs}: mean loss {loss:.6f}")
    _note(f"wrote {text_path} and {ckpt_path}")
    return EXIT_OK


def cmd_rotate(args) -> int:
    space = _load_dense(args.model)
    rotated = random_rotation(space, seed=args.seed, style=args.style)
    save_embedding_text(rotated, args.out)
    manifest = build_manifest(
        "rotate",
        {"model": args.model, "style": args.style},
        [args.model],
        seed=args.seed,
    )
    _emit_manifest(args.out, manifest)
    _note(f"wrote {args.out}")
    return EXIT_OK


def cmd_align(args) -> int:
    space_x = _load_dense(args.model_a)
    space_y = _load_dense(args.model_b)
    result = procrustes_align(space_x, space_y)
    if args.apply_to:
        aligned = apply_alignment(space_x, result)
        save_embedding_text(aligned, args.apply_to)
    payload = (
        json.dumps(
            {
                "residual": result.residual,
                "shared_vocab_size": len(result.shared_vocab),
                "underdetermined": result.underdetermined,
                "rotation": [list(row) for row in result.rotation],
            },
            indent=2,
        )
        + "\n"
    )
    manifest = build_manifest(
        "align",
        {
            "model_a": args.model_a,
            "model_b": args.model_b,
            "apply_to": args.apply_to,
        },
        [args.model_a, args.model_b],
    )
    _emit(args.out, payload)
    _emit_manifest(args.out, manifest)
    return EXIT_OK


def cmd_graph(args) -> int:
    p = Path(args.model)
    if not p.exists():
        raise MissingInputError([str(p)])
    matrix = load_cooc(p)
    g = graph_mod.from_counts(matrix, min_weight=args.min_weight)
    payload = graph_mod.export_graphml(g) if args.graphml else graph_mod.export_edge_list(g)
    manifest = build_manifest(
        "graph",
        {"model": args.model, "min_weight": args.min_weight, "graphml": args.graphml},
        [args.model],
    )
    _emit(args.out, payload)
    _emit_manifest(args.out, manifest)
    return EXIT_OK


def cmd_intersect(args) -> int:
    graphs = []
    for path in (args.graph_a, args.graph_b):
        p = Path(path)
        if not p.exists():
            raise MissingInputError([str(p)])
        graphs.append(graph_mod.import_edge_list(p.read_text(encoding="utf-8")))
    combined = graph_mod.intersection(graphs[0], graphs[1])
    manifest = build_manifest(
        "intersect",
        {"graph_a": args.graph_a, "graph_b": args.graph_b},
        [args.graph_a, args.graph_b],
    )
    _emit(args.out, graph_mod.export_edge_list(combined))
    _emit_manifest(args.out, manifest)
    return EXIT_OK


# ---------------------------------------------------------------------------
# experiments


def _require_inputs(paths: dict[str, str]) -> None:
    missing = [f"{label}: {path}" for label, path in paths.items() if not Path(path).exists()]
    if missing:
        raise MissingInputError(missing)


def _write_report(outdir: Path, name: str, report) -> None:
    (outdir / f"{name}.json").write_text(
        json.dumps(report.to_json_dict(), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
        newline="\n",
    )
    (outdir / f"{name}.csv").write_text(report.to_csv(), encoding="utf-8", newline="\n")


def experiment_stein_hemingway(args) -> int:
    """Count-model corpus-augmentation study: base novel plus a short addition."""
    _require_inputs({"base corpus": args.base, "addition corpus": args.addition})
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    base_streams = _corpus_streams(args.base, args.stoplist)
    add_streams = _corpus_streams(args.addition, args.stoplist)
    vocab = build_vocabulary(base_streams, min_count=args.min_count)
    window = WindowConfig(radius=args.window)
    base_matrix = count_cooccurrences(base_streams, vocab, window)
    augmented = augment_counts(base_matrix, add_streams)
    save_cooc(base_matrix, outdir / "base.cooc")
    save_cooc(augmented, outdir / "augmented.cooc")
    space_a, space_b = base_matrix.to_space(), augmented.to_space()
    report = stability_report(space_a, space_b, k=args.k, metric=args.metric)
    _write_report(outdir, "report", report)

    tracked = {}
    for word in [w for w in args.words.split(",") if w]:
        if word not in space_a or word not in space_b:
            tracked[word] = {"missing": True}
            continue
        la = nearest_neighbors(space_a, word, args.k, args.metric)
        lb = nearest_neighbors(space_b, word, args.k, args.metric)
        (outdir / f"{word}.base.tsv").write_text(la.to_tsv(), encoding="utf-8", newline="\n")
        (outdir / f"{word}.augmented.tsv").write_text(lb.to_tsv(), encoding="utf-8", newline="\n")
        tracked[word] = {
            "overlap_at_k": report.diffs[word].overlap_at_k,
            "exact_order": report.diffs[word].exact_order,
            "base_top": list(la.tokens()),
            "augmented_top": list(lb.tokens()),
        }
    (outdir / "tracked.json").write_text(
        json.dumps(tracked, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
        newline="\n",
    )
    manifest = build_manifest(
        "experiment.stein_hemingway",
        {
            "base": args.base,
            "addition": args.addition,
            "window": args.window,
            "k": args.k,
            "metric": args.metric,
            "min_count": args.min_count,
            "words": args.words,
            "stoplist": args.stoplist,
        },
        [args.base, args.addition] + ([args.stoplist] if args.stoplist else []),
    )
    (outdir / "manifest.json").write_text(manifest.to_json(), encoding="utf-8", newline="\n")
    _note(f"report bundle in {outdir}")
    return EXIT_OK


def experiment_wiki_sep_style(args) -> int:
    """Embedding-based corpus-augmentation study at whatever scale the inputs allow."""
    _require_inputs({"base corpus": args.base, "addition corpus": args.addition})
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    base_streams = _corpus_streams(args.base, args.stoplist)
    add_streams = _corpus_streams(args.addition, args.stoplist)
    config = _training_config(args)
    train = train_skipgram if args.skipgram else train_cbow
    space_a = train(base_streams, config)
    space_b = train(base_streams + add_streams, config)
    save_embedding_text(space_a, outdir / "base.txt")
    save_embedding_text(space_b, outdir / "augmented.txt")
    report = stability_report(space_a, space_b, k=args.k, metric=args.metric)
    _write_report(outdir, "report", report)
    manifest = build_manifest(
        "experiment.wiki_sep_style",
        {
            "base": args.base,
            "addition": args.addition,
            "dim": args.dim,
            "window": args.window,
            "epochs": args.epochs,
            "lr": args.lr,
            "min_count": args.min_count,
            "objective": args.objective,
            "k": args.k,
            "metric": args.metric,
            "architecture": "skipgram" if args.skipgram else "cbow",
        },
        [args.base, args.addition],
        seed=args.seed,
    )
    (outdir / "manifest.json").write_text(manifest.to_json(), encoding="utf-8", newline="\n")
    _note(f"report bundle in {outdir}")
    return EXIT_OK


def experiment_seed_stability(args) -> int:
    """Cross-seed neighbor stability at several synthetic corpus sizes.

    Words are ranked only when they clear a relative frequency floor
    (min-rel-freq of the corpus), so every corpus size covers the same
    slice of the language and the overlap values are comparable.
    """
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    sizes = [int(s) for s in args.sizes.split(",") if s]
    if not sizes:
        raise DataError("no corpus sizes given")
    config = _training_config(args)
    seeds = [args.seed + i for i in range(args.num_seeds)]
    rows = []
    per_size = {}
    architecture = "skipgram" if args.skipgram else "cbow"
    for size in sizes:
        min_count = max(args.min_count, round(args.min_rel_freq * size))
        stream = synthetic_corpus(size, seed=args.seed)
        result = cross_seed_stability(
            [stream],
            replace(config, min_count=min_count),
            seeds,
            k=args.k,
            metric=args.metric,
            architecture=architecture,
        )
        per_size[str(size)] = result.to_json_dict()
        rows.append((size, result.mean_overlap))
        _note(f"size {size}: mean overlap@{args.k} = {result.mean_overlap:.4f}")
    (outdir / "seed_stability.json").write_text(
        json.dumps({"sizes": per_size}, indent=2) + "\n",
        encoding="utf-8",
        newline="\n",
    )
    csv_lines = ["size,mean_overlap"] + [f"{s},{o:.10f}" for s, o in rows]
    (outdir / "seed_stability.csv").write_text(
        "\n".join(csv_lines) + "\n", encoding="utf-8", newline="\n"
    )
    manifest = build_manifest(
        "experiment.seed_stability",
        {
            "sizes": args.sizes,
            "num_seeds": args.num_seeds,
            "dim": args.dim,
            "window": args.window,
            "epochs": args.epochs,
            "lr": args.lr,
            "k": args.k,
            "metric": args.metric,
            "objective": args.objective,
            "min_count": args.min_count,
        },
        [],
        seed=args.seed,
    )
    (outdir / "manifest.json").write_text(manifest.to_json(), encoding="utf-8", newline="\n")
    _note(f"report bundle in {outdir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser assembly


def _add_metric(p, default="cosine"):
    p.add_argument(
        "--metric", choices=["cosine", "euclidean", "cityblock"], default=default
    )


def _add_training_flags(p):
    p.add_argument("--dim", type=_positive_int, default=300)
    p.add_argument("--window", type=_positive_int, default=5)
    p.add_argument("--epochs", type=_positive_int, default=5)
    p.add_argument("--lr", type=_positive_float, default=0.025)
    p.add_argument("--min-count", type=_positive_int, default=1)
    p.add_argument("--objective", type=_objective, default="auto")
    p.add_argument("--stoplist", default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--skipgram", action="store_true")


def build_parser() -> _Parser:
    parser = _Parser(prog="driftbench", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("stats", help="token/type counts for a corpus")
    p.add_argument("corpus")
    p.add_argument("--stoplist", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("build-count", help="build a co-occurrence matrix")
    p.add_argument("corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=_positive_int, default=10)
    p.add_argument("--min-count", type=_positive_int, default=1)
    p.add_argument("--max-size", type=_positive_int, default=None)
    p.add_argument("--stoplist", default=None)
    p.set_defaults(handler=cmd_build_count)

    p = sub.add_parser("neighbors", help="nearest neighbors of a word")
    p.add_argument("model")
    p.add_argument("word")
    p.add_argument("--k", type=_positive_int, default=10)
    _add_metric(p)
    p.add_argument("--ppmi", action="store_true")
    p.add_argument("--format", choices=["tsv", "json"], default="tsv")
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_neighbors)

    p = sub.add_parser("diff", help="stability report between two models")
    p.add_argument("model_a")
    p.add_argument("model_b")
    p.add_argument("--k", type=_positive_int, default=10)
    _add_metric(p)
    p.add_argument("--words", default="all", help="comma-separated words, or 'all'")
    p.add_argument("--ppmi", action="store_true")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_diff)

    p = sub.add_parser("train", help="train CBOW (or skip-gram) embeddings")
    p.add_argument("corpus")
    p.add_argument("--out", required=True, help="output prefix (.txt and .npz)")
    _add_training_flags(p)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("rotate", help="rigidly rotate an embedding model")
    p.add_argument("model")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument(
        "--style", choices=["signed_permutation", "haar"], default="signed_permutation"
    )
    p.set_defaults(handler=cmd_rotate)

    p = sub.add_parser("align", help="orthogonal least-squares alignment")
    p.add_argument("model_a")
    p.add_argument("model_b")
    p.add_argument("--apply-to", default=None, help="write rotated model A here")
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_align)

    p = sub.add_parser("graph", help="export a count model as a word network")
    p.add_argument("model")
    p.add_argument("--out", default=None)
    p.add_argument("--min-weight", type=_positive_int, default=1)
    p.add_argument("--graphml", action="store_true")
    p.set_defaults(handler=cmd_graph)

    p = sub.add_parser("intersect", help="intersection of two word networks")
    p.add_argument("graph_a")
    p.add_argument("graph_b")
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_intersect)

    p = sub.add_parser("experiment", help="end-to-end experiment bundles")
    exp = p.add_subparsers(dest="experiment", required=True)

    e = exp.add_parser("stein_hemingway", help="count model before/after augmentation")
    e.add_argument("--base", required=True)
    e.add_argument("--addition", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--window", type=_positive_int, default=10)
    e.add_argument("--k", type=_positive_int, default=10)
    e.add_argument("--min-count", type=_positive_int, default=1)
    e.add_argument("--words", default="know,glass")
    e.add_argument("--stoplist", default=None)
    _add_metric(e)
    e.set_defaults(handler=experiment_stein_hemingway)

    e = exp.add_parser("wiki_sep_style", help="embeddings before/after augmentation")
    e.add_argument("--base", required=True)
    e.add_argument("--addition", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--k", type=_positive_int, default=10)
    _add_metric(e)
    _add_training_flags(e)
    e.set_defaults(handler=experiment_wiki_sep_style)

    e = exp.add_parser("seed_stability", help="cross-seed overlap vs corpus size")
    e.add_argument("--out", required=True)
    e.add_argument("--sizes", default="2000,20000")
    e.add_argument("--num-seeds", type=_positive_int, default=5)
    e.add_argument("--k", type=_positive_int, default=10)
    e.add_argument("--min-rel-freq", type=_positive_float, default=1.5e-3)
    _add_metric(e)
    _add_training_flags(e)
    e.set_defaults(handler=experiment_seed_stability, dim=25, window=2, epochs=5, lr=0.05)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except NumericalError as exc:
        print(f"driftbench: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DriftbenchError as exc:
        print(f"driftbench: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"driftbench: i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
