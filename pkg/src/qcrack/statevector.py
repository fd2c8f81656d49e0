"""Exact complex-amplitude simulation of small qubit registers.

Conventions:
  * Little-endian basis ordering: qubit 0 is the least-significant bit of
    the basis index, so index 6 = 0b110 means qubit0=0, qubit1=1, qubit2=1.
  * Bitstrings are printed most-significant qubit first ("b_{Q-1}...b_0"),
    matching ket notation, so the two-qubit index 2 prints as "10".
  * Sampling uses numpy's PCG64 generator seeded explicitly per call;
    independent streams are derived via numpy.random.SeedSequence so
    results are reproducible across platforms.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, DataError

MAX_QUBITS = 20

_SQRT_HALF = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class Gate:
    """One gate in a circuit: X, H, Ry(theta), CX, or CRy(theta)."""

    kind: str  # "x" | "h" | "ry" | "cx" | "cry"
    target: int
    control: int | None = None
    theta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("x", "h", "ry", "cx", "cry"):
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind in ("cx", "cry"):
            if self.control is None:
                raise ValueError(f"{self.kind} gate needs a control qubit")
            if self.control == self.target:
                raise ValueError("control and target must be distinct")
        elif self.control is not None:
            raise ValueError(f"{self.kind} gate takes no control qubit")

    def local_matrix(self) -> np.ndarray:
        """The 2x2 matrix applied to the target qubit."""
        if self.kind in ("x", "cx"):
            return np.array([[0, 1], [1, 0]], dtype=complex)
        if self.kind == "h":
            return np.array([[_SQRT_HALF, _SQRT_HALF],
                             [_SQRT_HALF, -_SQRT_HALF]], dtype=complex)
        # ry / cry
        c, s = math.cos(self.theta / 2), math.sin(self.theta / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)

    def describe(self) -> str:
        if self.kind == "cx":
            return f"CX(control={self.control}, target={self.target})"
        if self.kind == "cry":
            return f"CRy({self.theta:.6g}, control={self.control}, target={self.target})"
        if self.kind == "ry":
            return f"Ry({self.theta:.6g}, qubit={self.target})"
        return f"{self.kind.upper()}(qubit={self.target})"


class StateVector:
    """Mutable register of `num_qubits` qubits holding 2^Q complex amplitudes."""

    __slots__ = ("num_qubits", "amps")

    def __init__(self, num_qubits: int, amps: np.ndarray | None = None):
        if not 1 <= num_qubits <= MAX_QUBITS:
            raise CapacityError(
                f"num_qubits must be in [1, {MAX_QUBITS}], got {num_qubits}"
            )
        self.num_qubits = num_qubits
        dim = 1 << num_qubits
        if amps is None:
            amps = np.zeros(dim, dtype=complex)
            amps[0] = 1.0
        else:
            amps = np.asarray(amps, dtype=complex)
            if amps.shape != (dim,):
                raise ValueError(f"expected {dim} amplitudes, got {amps.shape}")
        self.amps = amps

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amps.copy())

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def to_json(self) -> str:
        return json.dumps({
            "num_qubits": self.num_qubits,
            "amps": [[a.real, a.imag] for a in self.amps],
        })

    @classmethod
    def from_json(cls, text: str) -> "StateVector":
        doc = json.loads(text)
        amps = np.array([complex(re, im) for re, im in doc["amps"]])
        return cls(doc["num_qubits"], amps)

    def __repr__(self):
        return f"StateVector(num_qubits={self.num_qubits}, amps={self.amps!r})"


def zero_state(num_qubits: int) -> StateVector:
    """|0...0> on the given number of qubits."""
    return StateVector(num_qubits)


# Index caches for strided gate application, keyed by
# (num_qubits, target, control). Small circuits hit these constantly.
_PAIR_CACHE: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}


def _pair_indices(num_qubits: int, target: int, control: int | None):
    key = (num_qubits, target, control)
    cached = _PAIR_CACHE.get(key)
    if cached is not None:
        return cached
    idx = np.arange(1 << num_qubits)
    lo = idx[(idx >> target) & 1 == 0]
    if control is not None:
        lo = lo[(lo >> control) & 1 == 1]
    hi = lo | (1 << target)
    _PAIR_CACHE[key] = (lo, hi)
    return lo, hi


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Apply `gate` in place via stride iteration; returns the same register."""
    n = state.num_qubits
    for q in (gate.target, gate.control):
        if q is not None and not 0 <= q < n:
            raise ValueError(f"qubit index {q} out of range for {n}-qubit state")
    lo, hi = _pair_indices(n, gate.target, gate.control)
    amps = state.amps
    a0 = amps[lo]
    a1 = amps[hi]
    kind = gate.kind
    if kind == "x" or kind == "cx":
        amps[lo] = a1
        amps[hi] = a0
    elif kind == "h":
        amps[lo] = _SQRT_HALF * (a0 + a1)
        amps[hi] = _SQRT_HALF * (a0 - a1)
    else:  # ry / cry
        c, s = math.cos(gate.theta / 2), math.sin(gate.theta / 2)
        amps[lo] = c * a0 - s * a1
        amps[hi] = s * a0 + c * a1
    return state


def apply_gates(state: StateVector, gates) -> StateVector:
    for gate in gates:
        apply_gate(state, gate)
    return state


_SIGN_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _z_signs(num_qubits: int, qubit: int) -> np.ndarray:
    key = (num_qubits, qubit)
    signs = _SIGN_CACHE.get(key)
    if signs is None:
        signs = 1 - 2 * ((np.arange(1 << num_qubits) >> qubit) & 1)
        _SIGN_CACHE[key] = signs
    return signs


def z_expectation(state: StateVector, qubit: int) -> float:
    """<Z> on one qubit: P(bit=0) - P(bit=1)."""
    if not 0 <= qubit < state.num_qubits:
        raise ValueError(f"qubit index {qubit} out of range")
    amps = state.amps
    probs = amps.real * amps.real + amps.imag * amps.imag
    return float(np.dot(probs, _z_signs(state.num_qubits, qubit)))


def z_expectations(state: StateVector) -> np.ndarray:
    """<Z> for every qubit of the register."""
    return np.array([z_expectation(state, q) for q in range(state.num_qubits)])


@dataclass
class ShotCounts:
    shots: int
    counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be >= 1")


def sample(state: StateVector, shots: int, seed: int) -> ShotCounts:
    """Draw `shots` basis-state measurements with an explicit PCG64 seed."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = state.probabilities()
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    raw = rng.multinomial(shots, probs)
    n = state.num_qubits
    counts = {format(i, f"0{n}b"): int(c) for i, c in enumerate(raw) if c > 0}
    return ShotCounts(shots=shots, counts=counts)


def estimate_z_from_counts(counts: ShotCounts, qubit: int) -> float:
    """(n0 - n1)/shots for one qubit position from measured bitstrings."""
    if not counts.counts:
        raise DataError("empty shot counts")
    n0 = 0
    n1 = 0
    for bitstring, c in counts.counts.items():
        if not bitstring or any(ch not in "01" for ch in bitstring):
            raise DataError(f"malformed bitstring {bitstring!r}")
        if qubit >= len(bitstring):
            raise DataError(
                f"qubit {qubit} out of range for bitstring {bitstring!r}"
            )
        # qubit 0 is the least-significant (rightmost) character
        if bitstring[len(bitstring) - 1 - qubit] == "0":
            n0 += c
        else:
            n1 += c
    return (n0 - n1) / counts.shots


@dataclass(frozen=True)
class BlochCoords:
    theta: float  # [0, pi]
    phi: float    # [0, 2*pi)


def bloch_coords(state: StateVector) -> BlochCoords:
    """Bloch-sphere angles of a single-qubit state, global phase removed."""
    if state.num_qubits != 1:
        raise ValueError("bloch_coords requires a single-qubit state")
    alpha, beta = state.amps
    theta = 2.0 * math.acos(min(1.0, abs(alpha)))
    if math.sin(theta / 2) < 1e-12 or abs(alpha) < 1e-12 or abs(beta) < 1e-12:
        # at either pole the relative phase is undefined; pin it to 0
        phi = 0.0
    else:
        # canonicalize so alpha is real and nonnegative
        beta = beta * (abs(alpha) / alpha)
        phi = cmath.phase(beta) % (2.0 * math.pi)
    return BlochCoords(theta=theta, phi=phi)
