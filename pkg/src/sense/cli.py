"""Command-line entry point: ``sense train | encode | decode | eval``.

Errors go to standard error as one line starting with a stable code:
E_USAGE (bad flags), E_CONFIG (invalid settings), E_INPUT (malformed or
inconsistent input data), E_IO (files that cannot be read or written).
"""
from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import logging
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .codec import EmbeddingTable, SequenceVector, decode_position, encode, fixed_axis_variance
from .codec import isotropic_variance, independent_dot_stats, shifted_dot_stats
from .evaluation import (
    L2_GRID,
    DecodeExperiment,
    SequenceSource,
    SplitSpec,
    decoding_sweep,
    link_prediction,
    train_ovr_classifier,
    write_error_csv,
    write_sweep_csv,
)
from .graph import Graph, load_edge_list, load_labels, load_node_texts
from .io import read_embeddings, read_sequence_vector, write_embeddings, write_sequence_vector
from .model import TrainConfig, Variant, node_embeddings, train
from .sampler import Mode, WalkConfig
from .vocab import build_vocab


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@contextlib.contextmanager
def failing_as(code: str):
    """Re-raise value/lookup errors from the block under ``code``."""
    try:
        yield
    except CliError:
        raise
    except OSError as exc:
        raise CliError("E_IO", f"{exc.filename or ''}: {exc.strerror or exc}".lstrip(": ")) from exc
    except (ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        raise CliError(code, str(msg)) from exc


def sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    version: str = __version__

    def add_input(self, path: str | Path | None) -> None:
        if path is not None:
            with failing_as("E_IO"):
                self.inputs[str(path)] = sha256(path)

    @contextlib.contextmanager
    def timed(self, stage: str):
        t0 = time.perf_counter()
        yield
        self.timings[stage] = round(time.perf_counter() - t0, 6)

    def write(self, path: str | Path) -> None:
        with failing_as("E_IO"):
            Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _manifest_for(args, command: str) -> RunManifest:
    skip = ("func", "manifest", "verbose", "command", "protocol")
    config = {k: v for k, v in vars(args).items() if k not in skip}
    return RunManifest(command, config, getattr(args, "seed", None))


def _finish(args, manifest: RunManifest, default_base: str | None) -> None:
    path = args.manifest or (default_base + ".manifest.json" if default_base else None)
    if path:
        manifest.write(path)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return values


def _split(text: str) -> str:
    try:
        SplitSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text


def _sequence(text: str) -> list[str]:
    ids = [x.strip() for x in text.split(",") if x.strip()]
    if not ids:
        raise argparse.ArgumentTypeError("sequence must contain at least one node id")
    return ids


# ---------------------------------------------------------------- training


def _add_training_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--edges", required=True, help="edge list: one 'src<TAB>dst' per line")
    p.add_argument("--texts", help="node texts: 'node_id<TAB>text' per line")
    p.add_argument("--directed", action="store_true", help="treat edges as arcs (default: undirected)")
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--variant", choices=[v.value for v in Variant], default="add")
    p.add_argument("--mode", choices=[m.value for m in Mode], default="joint")
    p.add_argument("--walks-per-node", type=int, default=10)
    p.add_argument("--walk-length", type=int, default=80)
    p.add_argument("--text-window", type=int, default=5)
    p.add_argument("--node-window", type=int, default=10)
    p.add_argument("--p", type=float, default=1.0, help="return parameter")
    p.add_argument("--q", type=float, default=1.0, help="in-out parameter")
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--beta1", type=float, default=0.025, help="learning rate for graph pairs")
    p.add_argument("--beta2", type=float, default=0.0125, help="learning rate for text pairs")
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--subsample", type=float, default=1e-4)
    p.add_argument("--char-limit", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)


def _configs(args) -> tuple[WalkConfig, TrainConfig, Mode]:
    with failing_as("E_CONFIG"):
        walk_cfg = WalkConfig(args.walks_per_node, args.walk_length, args.p, args.q,
                              args.node_window, args.text_window)
        train_cfg = TrainConfig(dim=args.dim, epochs=args.epochs, negatives=args.negatives,
                                beta1=args.beta1, beta2=args.beta2, seed=args.seed,
                                variant=Variant(args.variant), threads=args.threads)
        mode = Mode(args.mode)
        if mode is not Mode.GRAPH_ONLY and not args.texts:
            raise ValueError(f"--texts is required for --mode {mode.value}")
        if args.min_count < 1 or args.subsample <= 0 or args.char_limit < 1:
            raise ValueError("--min-count and --char-limit must be >= 1 and --subsample > 0")
    if args.threads > 1:
        print(f"warning: --threads {args.threads} trains lock-free; results are not reproducible",
              file=sys.stderr)
    return walk_cfg, train_cfg, mode


def _load_corpus(args, manifest: RunManifest):
    manifest.add_input(args.edges)
    manifest.add_input(args.texts)
    with failing_as("E_INPUT"):
        graph = load_edge_list(args.edges, directed=args.directed)
        docs = vocab = None
        if args.texts and args.mode != Mode.GRAPH_ONLY.value:
            docs = load_node_texts(args.texts, graph, args.char_limit)
            vocab = build_vocab(docs, args.min_count, args.subsample)
    return graph, docs, vocab


def _fit(graph, docs, vocab, walk_cfg, train_cfg, mode):
    with failing_as("E_INPUT"), warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return train(graph, docs, vocab, walk_cfg, train_cfg, mode)


def cmd_train(args) -> int:
    manifest = _manifest_for(args, "train")
    walk_cfg, train_cfg, mode = _configs(args)
    with manifest.timed("load"):
        graph, docs, vocab = _load_corpus(args, manifest)
        labels = None
        if args.labels:
            manifest.add_input(args.labels)
            with failing_as("E_INPUT"):
                labels = load_labels(args.labels, graph)
    with manifest.timed("train"):
        result = _fit(graph, docs, vocab, walk_cfg, train_cfg, mode)
    with manifest.timed("write"), failing_as("E_IO"):
        write_embeddings(args.out, graph.node_ids, node_embeddings(result.model))
        manifest.outputs.append(args.out)
        if args.words_out:
            if vocab is None:
                raise CliError("E_CONFIG", "--words-out needs node texts")
            write_embeddings(args.words_out, vocab.tokens, result.model.word_in)
            manifest.outputs.append(args.words_out)
    if labels is not None:
        with manifest.timed("classify"), failing_as("E_INPUT"):
            feats = node_embeddings(result.model, normalize=True)
            report = train_ovr_classifier(feats, labels, SplitSpec.parse(args.split, args.seed))
            path = args.out + ".classify.csv"
            write_error_csv(path, report.errors)
            manifest.outputs.append(path)
    manifest.config["epoch_losses"] = result.epoch_losses
    _finish(args, manifest, args.out)
    return 0


# ---------------------------------------------------------------- codec


def _load_table(path: str, manifest: RunManifest, assume_normalized: bool = False) -> EmbeddingTable:
    manifest.add_input(path)
    with failing_as("E_INPUT"):
        ids, matrix = read_embeddings(path)
        if assume_normalized:
            return EmbeddingTable(tuple(ids), matrix)
        return EmbeddingTable.from_matrix(ids, matrix)


def cmd_encode(args) -> int:
    manifest = _manifest_for(args, "encode")
    table = _load_table(args.embeddings, manifest, args.assume_normalized)
    with failing_as("E_INPUT"):
        seq = encode(args.sequence, table)
    with failing_as("E_IO"):
        write_sequence_vector(args.out, seq.values, seq.length)
    manifest.outputs.append(args.out)
    _finish(args, manifest, args.out)
    return 0


def cmd_decode(args) -> int:
    manifest = _manifest_for(args, "decode")
    table = _load_table(args.embeddings, manifest, args.assume_normalized)
    manifest.add_input(args.seqvec)
    with failing_as("E_INPUT"):
        values, q = read_sequence_vector(args.seqvec)
        if values.size != table.d:
            raise ValueError(f"sequence dimension {values.size} does not match table dimension {table.d}")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            seq = SequenceVector(values, q)
    print("position,node_id,score")
    for k in range(1, q + 1):
        node, s = decode_position(seq, k, table)
        print(f"{k},{node},{s:.6f}")
    _finish(args, manifest, None)
    return 0


# ---------------------------------------------------------------- evaluation


def cmd_classify(args) -> int:
    manifest = _manifest_for(args, "eval classify")
    manifest.add_input(args.embeddings)
    manifest.add_input(args.labels)
    with failing_as("E_INPUT"):
        ids, matrix = read_embeddings(args.embeddings)
        labels = load_labels(args.labels, Graph.from_edges([], node_ids=ids))
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        feats = np.divide(matrix, norms, out=np.zeros_like(matrix), where=norms > 0)
    with manifest.timed("classify"), failing_as("E_INPUT"):
        report = train_ovr_classifier(feats, labels, SplitSpec.parse(args.split, args.seed))
    with failing_as("E_IO"):
        write_error_csv(args.out, report.errors)
    manifest.config["chosen_l2"] = report.l2
    manifest.config["excluded_labels"] = report.excluded_labels
    manifest.outputs.append(args.out)
    _finish(args, manifest, args.out)
    return 0


def cmd_linkpred(args) -> int:
    manifest = _manifest_for(args, "eval linkpred")
    walk_cfg, train_cfg, mode = _configs(args)
    graph, docs, vocab = _load_corpus(args, manifest)

    def embed(residual: Graph) -> np.ndarray:
        with manifest.timed("train"):
            result = _fit(residual, docs, vocab, walk_cfg, train_cfg, mode)
        return node_embeddings(result.model, normalize=True)

    with failing_as("E_INPUT"):
        report = link_prediction(graph, embed, args.holdout, SplitSpec.parse(args.split, args.seed),
                                 seed=args.seed, l2_grid=L2_GRID)
    with failing_as("E_IO"):
        write_error_csv(args.out, report.errors)
    manifest.config["chosen_l2"] = report.l2
    manifest.config["positives"] = int(len(report.positives))
    manifest.outputs.append(args.out)
    _finish(args, manifest, args.out)
    return 0


def cmd_decode_sweep(args) -> int:
    manifest = _manifest_for(args, "eval decode-sweep")
    source = SequenceSource(args.source)
    with failing_as("E_CONFIG"):
        exp = DecodeExperiment(source, args.dims, args.lengths, args.trials, args.seed)
    tables = graph = None
    if source is SequenceSource.RANDOM_WALK:
        if not args.edges or not args.embeddings or "{dim}" not in args.embeddings:
            raise CliError("E_USAGE", "random-walk sweeps need --edges and --embeddings containing '{dim}'")
        manifest.add_input(args.edges)
        with failing_as("E_INPUT"):
            graph = load_edge_list(args.edges, directed=args.directed)
        tables = {}
        for dim in args.dims:
            table = _load_table(args.embeddings.format(dim=dim), manifest)
            if [graph.index.get(i) for i in table.ids] != list(range(graph.node_count)):
                raise CliError("E_INPUT", f"embedding ids for dim {dim} do not match the graph node order")
            tables[dim] = table
    with manifest.timed("sweep"), failing_as("E_INPUT"):
        rows = decoding_sweep(exp, n_nodes=args.n_nodes, tables=tables, graph=graph)
    with failing_as("E_IO"):
        write_sweep_csv(args.out, rows)
    manifest.outputs.append(args.out)
    _finish(args, manifest, args.out)
    return 0


def cmd_theorem_check(args) -> int:
    manifest = _manifest_for(args, "eval theorem-check")
    rng = np.random.default_rng(args.seed)
    with manifest.timed("sample"), failing_as("E_CONFIG"):
        if args.pairs == "independent":
            mean, var = independent_dot_stats(args.n, args.samples, rng)
            stats = {"mean": mean, "variance": var, "target": 1.0 / args.n}
        else:
            mean, var = shifted_dot_stats(args.n, args.c, args.m, args.samples, rng, args.construction)
            stats = {"mean": mean, "variance": var, "target": fixed_axis_variance(args.n, args.c)}
            if args.construction == "isotropic":
                stats["isotropic_exact"] = isotropic_variance(args.n, args.c, args.m)
    lines = [f"{k},{v:.9g}" for k, v in stats.items()]
    print("statistic,value")
    print("\n".join(lines))
    if args.out:
        with failing_as("E_IO"):
            Path(args.out).write_text("statistic,value\n" + "\n".join(lines) + "\n", encoding="utf-8")
        manifest.outputs.append(args.out)
    manifest.config["results"] = stats
    _finish(args, manifest, args.out)
    return 0


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("E_USAGE", f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sense", description="Joint text/graph node embeddings and sequence codec.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_manifest(p):
        p.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
        return p

    p = with_manifest(sub.add_parser("train", help="learn node embeddings"))
    _add_training_flags(p)
    p.add_argument("--labels", help="node labels; adds a classification report <out>.classify.csv")
    p.add_argument("--split", type=_split, default="60,20,20")
    p.add_argument("--words-out", help="also write word vectors here")
    p.add_argument("--out", required=True, help="node embedding file")
    p.set_defaults(func=cmd_train)

    p = with_manifest(sub.add_parser("encode", help="embed a node sequence into one vector"))
    p.add_argument("--embeddings", required=True)
    p.add_argument("--sequence", required=True, type=_sequence, help="comma-separated node ids")
    p.add_argument("--assume-normalized", action="store_true", help="skip row normalization")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = with_manifest(sub.add_parser("decode", help="recover node ids from a sequence vector"))
    p.add_argument("--embeddings", required=True)
    p.add_argument("--seqvec", required=True)
    p.add_argument("--assume-normalized", action="store_true")
    p.set_defaults(func=cmd_decode)

    ev = sub.add_parser("eval", help="evaluation protocols")
    evsub = ev.add_subparsers(dest="protocol", required=True, parser_class=_Parser)

    p = with_manifest(evsub.add_parser("classify", help="one-vs-rest node classification"))
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--split", type=_split, default="60,20,20")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_classify)

    p = with_manifest(evsub.add_parser("linkpred", help="held-out link prediction"))
    _add_training_flags(p)
    p.add_argument("--holdout", type=float, default=0.01)
    p.add_argument("--split", type=_split, default="60,20,20")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_linkpred)

    p = with_manifest(evsub.add_parser("decode-sweep", help="recovery rate per (dim, length)"))
    p.add_argument("--source", choices=[s.value for s in SequenceSource], default="random-nodes")
    p.add_argument("--dims", type=_int_list, default=(128, 256, 512, 1024))
    p.add_argument("--lengths", type=_int_list, default=(1, 2, 5, 10, 20, 50))
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--n-nodes", type=int, default=4604, help="table size for random-node sweeps")
    p.add_argument("--edges", help="graph for random-walk sweeps")
    p.add_argument("--directed", action="store_true")
    p.add_argument("--embeddings", help="embedding path pattern with '{dim}' for random-walk sweeps")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decode_sweep)

    p = with_manifest(evsub.add_parser("theorem-check", help="Monte-Carlo orthogonality statistics"))
    p.add_argument("--pairs", choices=("independent", "shifted"), default="independent",
                   help="independent unit vectors, or x against shifted y with x.y = c")
    p.add_argument("--n", type=int, default=128, help="dimension")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--c", type=float, default=0.0, help="dot product of the shifted pair")
    p.add_argument("--m", type=int, default=1, help="shift applied to y")
    p.add_argument("--construction", choices=("isotropic", "fixed-axis"), default="isotropic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_theorem_check)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        return args.func(args)
    except CliError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 2 if exc.code == "E_USAGE" else 1


if __name__ == "__main__":
    sys.exit(main())
