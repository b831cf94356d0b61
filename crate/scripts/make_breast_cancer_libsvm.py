"""Write the Wisconsin breast cancer data (scikit-learn copy) in LIBSVM format.

Features are min-max scaled to [-1, 1]; labels are +1 (benign) / -1 (malignant).
Zero-valued features are omitted, as usual for the format.
"""

import sys

import numpy as np
from sklearn.datasets import load_breast_cancer


def main(path: str) -> None:
    data = load_breast_cancer()
    x = data.data
    lo, hi = x.min(axis=0), x.max(axis=0)
    x = 2.0 * (x - lo) / (hi - lo) - 1.0
    y = np.where(data.target == 1, 1, -1)
    with open(path, "w") as out:
        for label, row in zip(y, x):
            feats = " ".join(f"{j + 1}:{v:.6g}" for j, v in enumerate(row) if v != 0.0)
            out.write(f"{label:+d} {feats}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/cli/data/breast_cancer.libsvm")
