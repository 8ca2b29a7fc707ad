"""Compare JOINT, GRAPH_ONLY and TEXT_ONLY training on a synthetic corpus
where both the graph and the texts carry partial community signal.

Reports one-vs-rest node classification error and link-prediction error
per mode, averaged over seeds.
"""
import argparse
import time
import warnings

import numpy as np

from sense.evaluation import SplitSpec, link_prediction, train_ovr_classifier
from sense.model import TrainConfig, Variant, node_embeddings, train
from sense.sampler import Mode, WalkConfig
from sense.synthetic import community_text_fixture
from sense.vocab import build_vocab


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--dim", type=int, default=64)
    ap.add_argument("--epochs", type=int, default=3)
    ap.add_argument("--variant", choices=[v.value for v in Variant], default="add")
    ap.add_argument("--communities", type=int, default=5)
    ap.add_argument("--p-out", type=float, default=0.03, help="noisier graph as this grows")
    ap.add_argument("--shared-frac", type=float, default=0.8, help="noisier text as this grows")
    ap.add_argument("--holdout", type=float, default=0.2)
    args = ap.parse_args()
    warnings.simplefilter("ignore", RuntimeWarning)
    walk_cfg = WalkConfig(walk_length=40)

    results = {m: {"classify": [], "linkpred": []} for m in Mode}
    for seed in range(args.seeds):
        fx = community_text_fixture(sizes=(40,) * args.communities, p_in=0.15, p_out=args.p_out,
                                    shared_frac=args.shared_frac, seed=seed)
        vocab = build_vocab(fx.docs, min_count=1, subsample_t=1e-2)
        cfg = TrainConfig(dim=args.dim, epochs=args.epochs, seed=seed, variant=Variant(args.variant))
        for mode in Mode:
            t0 = time.perf_counter()
            res = train(fx.graph, fx.docs, vocab, walk_cfg, cfg, mode)
            emb = node_embeddings(res.model, normalize=True)
            rep = train_ovr_classifier(emb, fx.labels, SplitSpec(seed=seed))
            results[mode]["classify"].append(rep.errors["test"])

            def embed(residual, mode=mode):
                r = train(residual, fx.docs, vocab, walk_cfg, cfg, mode)
                return node_embeddings(r.model, normalize=True)

            lp = link_prediction(fx.graph, embed, args.holdout, SplitSpec(seed=seed), seed=seed)
            results[mode]["linkpred"].append(lp.errors["test"])
            print(f"seed {seed} {mode.value:>10}: classify {rep.errors['test']:.3f}  "
                  f"linkpred {lp.errors['test']:.3f}  ({time.perf_counter() - t0:.0f}s)")

    print(f"\n{'mode':>10} {'classify':>14} {'linkpred':>14}")
    for mode, r in results.items():
        c, lp = np.array(r["classify"]), np.array(r["linkpred"])
        print(f"{mode.value:>10} {c.mean():7.3f}±{c.std():.3f} {lp.mean():7.3f}±{lp.std():.3f}")


if __name__ == "__main__":
    main()
