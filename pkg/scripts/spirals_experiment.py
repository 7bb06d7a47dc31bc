#!/usr/bin/env python3
"""Two-spirals comparison: per-layer rationals vs one shared rational vs a
fixed leaky-ReLU baseline, followed by a sharing suggestion for the
per-layer network based on the learned activation distances.
"""

import argparse

import numpy as np

from ratnet.datasets import make_two_spirals
from ratnet.distance import DistanceConfig
from ratnet.network import (TrainConfig, build_dense_network,
                            pairwise_layer_distances, suggest_sharing,
                            train_classifier)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--epochs", type=int, default=150)
    ap.add_argument("--hidden", default="24,24")
    ap.add_argument("--lr", type=float, default=0.01)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threshold", type=float, default=0.05,
                    help="distance below which adjacent layers share")
    args = ap.parse_args()

    dataset = make_two_spirals(n_per_class=args.samples, noise=0.03,
                               seed=args.seed)
    hidden = [int(t) for t in args.hidden.split(",")]
    sizes = [2, *hidden, 2]
    cfg = TrainConfig(learning_rate=args.lr, optimizer="adam",
                      epochs=args.epochs, seed=args.seed)

    nets = {}
    for activation in ("rational", "shared-rational", "lrelu"):
        net = build_dense_network(sizes, activation=activation, init="lrelu",
                                  seed=args.seed, track_inputs=True)
        net, history = train_classifier(net, dataset, cfg)
        nets[activation] = net
        print(f"{activation:16s} final train accuracy "
              f"{history['train_accuracy'][-1]:.3f} "
              f"(best {max(history['train_accuracy']):.3f})")

    print("\npairwise activation distances of the per-layer rational net:")
    dist = pairwise_layer_distances(nets["rational"], DistanceConfig())
    print(np.array_str(dist, precision=4, suppress_small=True))
    groups = suggest_sharing(dist, args.threshold)
    print(f"suggested sharing at threshold {args.threshold}: {groups}")


if __name__ == "__main__":
    main()
