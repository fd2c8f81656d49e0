#!/usr/bin/env python3
"""Reproduce the per-epoch device-call counts analytically and empirically.

The analytic counts for one epoch with T training and V validation images
on an L-layer, Q-qubit circuit:

    backprop     T + V
    finite-diff  T + V + T*L*Q
    param-shift  T + V + 2*T*L*Q

The empirical half trains a real model for one epoch on synthetic data and
checks that the ledger agrees exactly.
"""

import argparse
import sys

import numpy as np

from qcrack.autodiff import GradMethod, ledger_predict
from qcrack.circuit import CircuitSpec
from qcrack.data import FeatureSample
from qcrack.model import HybridModel, train

METHODS = [GradMethod.backprop(), GradMethod.finite_diff(),
           GradMethod.param_shift()]


def random_samples(n: int, dim: int, seed: int) -> list[FeatureSample]:
    rng = np.random.default_rng(seed)
    return [FeatureSample(id=f"s{i:04d}",
                          label="crack" if i % 2 else "no_crack",
                          values=rng.normal(size=dim),
                          source="random")
            for i in range(n)]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--train", type=int, default=856, metavar="T")
    ap.add_argument("--val", type=int, default=184, metavar="V")
    ap.add_argument("--qubits", type=int, default=4)
    ap.add_argument("--q-depth", type=int, default=1)
    ap.add_argument("--skip-empirical", action="store_true",
                    help="only print the analytic table")
    args = ap.parse_args()

    spec = CircuitSpec(num_qubits=args.qubits, q_depth=args.q_depth)
    T, V, L, Q = args.train, args.val, spec.num_layers, spec.num_qubits
    print(f"T={T} V={V} L={L} Q={Q}")
    print(f"{'method':<12} {'predicted':>10} {'measured':>10}")
    ok = True
    for method in METHODS:
        predicted = ledger_predict(T, V, L, Q, method)
        if args.skip_empirical:
            print(f"{method.kind:<12} {predicted:>10,}")
            continue
        tr = random_samples(T, 16, seed=1)
        va = random_samples(V, 16, seed=2)
        model = HybridModel.init(16, spec, seed=3)
        _, _, ledger = train(model, tr, va, 1, method, seed=4)
        mark = "" if ledger.n_calls == predicted else "  MISMATCH"
        ok = ok and ledger.n_calls == predicted
        print(f"{method.kind:<12} {predicted:>10,} {ledger.n_calls:>10,}"
              f"{mark}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
