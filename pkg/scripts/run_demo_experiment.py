#!/usr/bin/env python3
"""End-to-end demo on synthetic data: corpus -> face prep -> stub scores ->
three-class binning -> per-class statistics -> all-nine-operator experiment.

Everything is seeded, so repeated runs produce byte-identical artifacts.
"""

import argparse
from pathlib import Path

from memlab import analysis, cli, synth


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir")
    parser.add_argument("--n", type=int, default=50)
    parser.add_argument("--workers", type=int, default=4)
    args = parser.parse_args()

    out = Path(args.out_dir)
    raw = out / "raw"
    synth.write_corpus(raw, n=args.n, size=160, seed=7)
    print(f"[1/5] synthetic corpus: {args.n} cards -> {raw}")

    prep = out / "prepared"
    assert cli.main(["prep", "--in", str(raw), "--out", str(prep)]) == 0
    print(f"[2/5] oval-masked 128x128 set -> {prep}")

    scores = out / "scores.csv"
    assert cli.main(["predict", "--images", str(prep / "manifest.csv"),
                     "--predictor", "stub", "--out", str(scores),
                     "--workers", str(args.workers)]) == 0
    labels_csv = out / "labels.csv"
    assert cli.main(["bin", "--scores", str(scores), "--out", str(labels_csv),
                     "--low-frac", "0.1", "--high-frac", "0.1"]) == 0
    print(f"[3/5] stub scores and low/med/high labels -> {labels_csv}")

    classes = out / "class_analysis"
    assert cli.main(["class-analysis", "--labels", str(labels_csv),
                     "--images", str(prep), "--out", str(classes)]) == 0
    print(f"[4/5] per-class descriptor means -> {classes}")

    run = out / "experiment"
    assert cli.main(["experiment", "--images", str(prep / "manifest.csv"),
                     "--recipes", "defaults", "--predictor", "stub",
                     "--out", str(run), "--workers", str(args.workers)]) == 0
    print(f"[5/5] nine-operator delta report -> {run}")
    print((run / "summary.csv").read_text())


if __name__ == "__main__":
    main()
