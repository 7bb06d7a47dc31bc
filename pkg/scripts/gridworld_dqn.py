#!/usr/bin/env python3
"""Gridworld DQN comparison across activation configurations.

Trains one agent per activation and reports raw and normalized scores, with
the value-iteration optimum as the baseline and a seeded random policy as
the floor.
"""

import argparse

import numpy as np

from ratnet.network import build_dense_network
from ratnet.rl import (DqnConfig, GridWorld, ScoreReport, dqn_train,
                       greedy_return, optimal_return, random_return)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--activations",
                    default="rational,shared-rational,lrelu,silu")
    ap.add_argument("--steps", type=int, default=30000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--size", type=int, default=5)
    args = ap.parse_args()

    env = GridWorld(width=args.size, height=args.size,
                    goal=(args.size - 1, args.size - 1))
    baseline = optimal_return(env)
    floor = random_return(env, np.random.default_rng(args.seed + 1))
    print(f"value-iteration optimum {baseline:.2f}, random policy {floor:.2f}\n")

    print(f"{'activation':18s} {'return':>8s} {'normalized':>11s}")
    for activation in args.activations.split(","):
        activation = activation.strip()
        env = GridWorld(width=args.size, height=args.size,
                        goal=(args.size - 1, args.size - 1))
        net = build_dense_network([env.n_states, 64, 64, env.n_actions],
                                  activation=activation, init="lrelu",
                                  seed=args.seed, track_inputs=True)
        cfg = DqnConfig(train_steps=args.steps, seed=args.seed)
        net, _ = dqn_train(env, net, cfg)
        agent = greedy_return(env, net)
        report = ScoreReport(agent, floor, baseline)
        print(f"{activation:18s} {agent:8.2f} {report.normalized:10.1f}%")


if __name__ == "__main__":
    main()
