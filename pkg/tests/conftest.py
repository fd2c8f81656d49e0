import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qcrack.statevector import Gate


def random_gate(rng: np.random.Generator, num_qubits: int) -> Gate:
    kinds = ["x", "h", "ry"] if num_qubits == 1 else ["x", "h", "ry", "cx", "cry"]
    kind = kinds[rng.integers(len(kinds))]
    target = int(rng.integers(num_qubits))
    theta = float(rng.uniform(-np.pi, np.pi))
    if kind in ("cx", "cry"):
        control = int(rng.integers(num_qubits - 1))
        if control >= target:
            control += 1
        return Gate(kind, target, control=control, theta=theta)
    return Gate(kind, target, theta=theta)


def random_gate_sequence(rng, num_qubits, length):
    return [random_gate(rng, num_qubits) for _ in range(length)]


@pytest.fixture(scope="session")
def synthetic_features():
    """Features for the full 723-crack/500-clean synthetic dataset.

    Session-scoped: generation plus extraction takes a few seconds and is
    shared by the split, training, and acceptance tests.
    """
    from qcrack.data import extract_features, generate_synthetic

    patches = generate_synthetic(723, 500, seed=20230624)
    return [extract_features(p) for p in patches]
