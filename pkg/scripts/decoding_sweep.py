"""Exact-recovery rate of sequence vectors over (dimension, length).

Two sources: random unit vectors (any table size), and walk prefixes on a
planted-partition graph decoded with trained GRAPH_ONLY embeddings, where
node vectors are strongly correlated within a community.

    python3 scripts/decoding_sweep.py --out-dir results/
"""
import argparse
import time
from pathlib import Path

from sense.codec import EmbeddingTable
from sense.evaluation import DecodeExperiment, SequenceSource, decoding_sweep, write_sweep_csv
from sense.model import TrainConfig, node_embeddings, train
from sense.sampler import Mode, WalkConfig
from sense.synthetic import planted_partition


def print_grid(rows, title):
    dims = sorted({r.dim for r in rows})
    lengths = sorted({r.length for r in rows})
    acc = {(r.dim, r.length): r.accuracy for r in rows}
    print(f"\n{title}")
    print("dim \\ q " + "".join(f"{q:>7d}" for q in lengths))
    for d in dims:
        cells = "".join(f"{acc[(d, q)]:7.3f}" if (d, q) in acc else "      -" for q in lengths)
        print(f"{d:7d} {cells}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", default="128,256,512,1024")
    ap.add_argument("--lengths", default="1,2,3,5,8,10,20,50")
    ap.add_argument("--n-nodes", type=int, default=4604)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--skip-trained", action="store_true", help="only the random-vector sweep")
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--out-dir", default=".")
    args = ap.parse_args()
    dims = tuple(int(x) for x in args.dims.split(","))
    lengths = tuple(int(x) for x in args.lengths.split(","))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    exp = DecodeExperiment(SequenceSource.RANDOM_NODES, dims, lengths, args.trials, args.seed)
    rows = decoding_sweep(exp, n_nodes=args.n_nodes)
    write_sweep_csv(out / "sweep_random.csv", rows)
    print_grid(rows, f"random unit vectors, n={args.n_nodes} ({time.perf_counter() - t0:.0f}s)")

    if args.skip_trained:
        return
    graph, _ = planted_partition((50,) * 10, 0.2, 0.005, seed=args.seed)
    walk_cfg = WalkConfig(walks_per_node=10, walk_length=40, node_window=5)
    tables = {}
    for d in dims:
        t0 = time.perf_counter()
        res = train(graph, None, None, walk_cfg, TrainConfig(dim=d, epochs=args.epochs, seed=args.seed),
                    Mode.GRAPH_ONLY)
        tables[d] = EmbeddingTable.from_matrix(graph.node_ids, node_embeddings(res.model))
        print(f"trained d={d} in {time.perf_counter() - t0:.0f}s")
    exp = DecodeExperiment(SequenceSource.RANDOM_WALK, dims, lengths, args.trials, args.seed)
    rows = decoding_sweep(exp, tables=tables, graph=graph)
    write_sweep_csv(out / "sweep_walks.csv", rows)
    print_grid(rows, "walk prefixes on a 500-node planted partition, trained embeddings")


if __name__ == "__main__":
    main()
