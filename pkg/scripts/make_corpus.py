#!/usr/bin/env python3
"""Write a seeded synthetic test corpus (gradient/texture/portrait/checker
cards) as PNGs, ready for the metrics and experiment commands."""

import argparse

from memlab import synth


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir")
    parser.add_argument("--n", type=int, default=20)
    parser.add_argument("--size", type=int, default=128)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    paths = synth.write_corpus(args.out_dir, n=args.n, size=args.size,
                               seed=args.seed)
    print(f"wrote {len(paths)} cards to {args.out_dir}")


if __name__ == "__main__":
    main()
