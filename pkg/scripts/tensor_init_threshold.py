"""Brute-force survey of tensor-init span quality; writes the acceptance fixture.

Runs many batches of 20 teachers (d=10, k=2, n=20000) on a root seed that the
acceptance suite never uses, and records the distribution of batch medians of
the largest principal angle.
"""

import argparse
import json

import numpy as np

from reluam.datagen import RngSeed, make_dataset, one_hidden_teacher
from reluam.initializers import init_tensor
from reluam.metrics import subspace_angle


def batch_median(root: int, batch: int, n: int, d: int = 10, k: int = 2, trials: int = 20) -> float:
    angles = []
    for t in range(trials):
        seed = RngSeed(root, t, key=(batch, d, k, n))
        teacher = one_hidden_teacher(d, k, seed.child(0))
        data = make_dataset(teacher, n, seed.child(1))
        angles.append(subspace_angle(init_tensor(data.X, data.y, k), teacher.W1))
    return float(np.median(angles))


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--root", type=int, default=424242)
    p.add_argument("--batches", type=int, default=50)
    p.add_argument("--threshold", type=float, default=0.2)
    p.add_argument("--out", default="tests/fixtures/tensor_init_threshold.json")
    args = p.parse_args()
    medians = np.array([batch_median(args.root, b, 20000) for b in range(args.batches)])
    record = {
        "d": 10,
        "k": 2,
        "n": 20000,
        "trials_per_batch": 20,
        "survey_root_seed": args.root,
        "batches": args.batches,
        "batch_median_mean": float(medians.mean()),
        "batch_median_max": float(medians.max()),
        "batch_median_q95": float(np.quantile(medians, 0.95)),
        "threshold_rad": args.threshold,
        "batches_below_threshold": int(np.sum(medians < args.threshold)),
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2)
        fh.write("\n")
    print(json.dumps(record, indent=2))


if __name__ == "__main__":
    main()
