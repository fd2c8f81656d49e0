import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dense_oracle import apply_dense
from conftest import random_gate_sequence
from qcrack.errors import CapacityError, DataError
from qcrack.statevector import (Gate, ShotCounts, StateVector, apply_gate,
                                apply_gates, bloch_coords,
                                estimate_z_from_counts, sample, z_expectation,
                                zero_state)


def plus_state():
    return apply_gate(zero_state(1), Gate("h", 0))


class TestZeroState:
    def test_single_qubit(self):
        assert np.allclose(zero_state(1).amps, [1, 0])

    def test_two_qubits(self):
        assert np.allclose(zero_state(2).amps, [1, 0, 0, 0])

    def test_four_qubits(self):
        s = zero_state(4)
        assert s.amps.size == 16
        assert s.amps[0] == 1 and np.all(s.amps[1:] == 0)

    @pytest.mark.parametrize("n", [0, -1, 21])
    def test_capacity(self, n):
        with pytest.raises(CapacityError):
            zero_state(n)


class TestApplyGate:
    def test_cx_on_10(self):
        # |10>: control qubit (value 1) is qubit 1, target is qubit 0
        s = StateVector(2, np.array([0, 0, 1, 0], dtype=complex))
        apply_gate(s, Gate("cx", target=0, control=1))
        assert np.array_equal(s.amps, np.array([0, 0, 0, 1], dtype=complex))

    def test_hadamard(self):
        s = plus_state()
        assert np.allclose(s.amps, [1 / math.sqrt(2), 1 / math.sqrt(2)])

    def test_ry_half_pi(self):
        s = apply_gate(zero_state(1), Gate("ry", 0, theta=math.pi / 2))
        assert np.allclose(s.amps, [math.cos(math.pi / 4), math.sin(math.pi / 4)])

    def test_cx_leaves_plus_plus_invariant(self):
        s = zero_state(2)
        apply_gates(s, [Gate("h", 0), Gate("h", 1)])
        expected = apply_dense(s.amps, [Gate("cx", target=1, control=0)], 2)
        apply_gate(s, Gate("cx", target=1, control=0))
        assert np.allclose(s.amps, expected, atol=1e-12)
        assert np.allclose(s.amps, 0.5)

    def test_index_out_of_range(self):
        with pytest.raises(ValueError):
            apply_gate(zero_state(2), Gate("x", 2))

    def test_dense_oracle_equivalence(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(1, 4))
            gates = random_gate_sequence(rng, n, int(rng.integers(1, 30)))
            s = zero_state(n)
            expected = apply_dense(s.amps, gates, n)
            apply_gates(s, gates)
            assert np.max(np.abs(s.amps - expected)) <= 1e-12

    def test_norm_preserved_long_sequences(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(1, 7))
            s = zero_state(n)
            apply_gates(s, random_gate_sequence(rng, n, 100))
            assert abs(s.norm() - 1.0) <= 1e-12

    @pytest.mark.parametrize("gate", [
        Gate("x", 1), Gate("h", 0), Gate("cx", target=0, control=2),
    ])
    def test_involutions(self, gate):
        rng = np.random.default_rng(3)
        amps = rng.normal(size=8) + 1j * rng.normal(size=8)
        amps /= np.linalg.norm(amps)
        s = StateVector(3, amps.copy())
        apply_gate(s, gate)
        apply_gate(s, gate)
        assert np.max(np.abs(s.amps - amps)) <= 1e-12

    @given(a=st.floats(-7, 7), b=st.floats(-7, 7))
    def test_ry_composition(self, a, b):
        s1 = apply_gates(plus_state(), [Gate("ry", 0, theta=a),
                                        Gate("ry", 0, theta=b)])
        s2 = apply_gate(plus_state(), Gate("ry", 0, theta=a + b))
        assert np.max(np.abs(s1.amps - s2.amps)) <= 1e-12

    def test_gate_matrices_unitary(self):
        for gate in [Gate("x", 0), Gate("h", 0), Gate("ry", 0, theta=0.7),
                     Gate("cx", 0, control=1), Gate("cry", 0, control=1, theta=1.2)]:
            u = gate.local_matrix()
            assert np.max(np.abs(u.conj().T @ u - np.eye(2))) <= 1e-12

    def test_gate_validation(self):
        with pytest.raises(ValueError):
            Gate("cx", target=1, control=1)
        with pytest.raises(ValueError):
            Gate("zz", 0)
        with pytest.raises(ValueError):
            Gate("h", 0, control=1)


class TestZExpectation:
    def test_zero_state(self):
        assert z_expectation(zero_state(1), 0) == 1.0

    def test_plus_state(self):
        assert abs(z_expectation(plus_state(), 0)) <= 1e-12

    def test_ry_angle(self):
        s = apply_gate(zero_state(1), Gate("ry", 0, theta=0.3))
        # analytic: cos^2(a/2) - sin^2(a/2) = cos(a)
        assert z_expectation(s, 0) == pytest.approx(math.cos(0.3), abs=1e-12)

    def test_index_error(self):
        with pytest.raises(ValueError):
            z_expectation(zero_state(2), 2)


class TestSample:
    def test_deterministic_state(self):
        assert sample(zero_state(1), 1000, 99).counts == {"0": 1000}

    def test_hadamard_frequencies(self):
        counts = sample(plus_state(), 10 ** 6, seed=7)
        assert abs(counts.counts["0"] / 1e6 - 0.5) <= 0.002

    def test_basis_state_11(self):
        s = StateVector(2, np.array([0, 0, 0, 1], dtype=complex))
        assert sample(s, 5, seed=1).counts == {"11": 5}

    def test_seed_reproducible(self):
        s = apply_gate(zero_state(3), Gate("h", 1))
        assert sample(s, 5000, 42).counts == sample(s, 5000, 42).counts

    def test_shots_validation(self):
        with pytest.raises(ValueError):
            sample(zero_state(1), 0, 1)


class TestEstimateZFromCounts:
    def test_arithmetic(self):
        counts = ShotCounts(shots=1000, counts={"0": 600, "1": 400})
        assert estimate_z_from_counts(counts, 0) == pytest.approx(0.2)

    def test_symmetry(self):
        counts = ShotCounts(shots=1000, counts={
            "00": 250, "01": 250, "10": 250, "11": 250})
        assert estimate_z_from_counts(counts, 1) == 0.0

    def test_consistent_with_expectation(self):
        s = apply_gate(zero_state(1), Gate("ry", 0, theta=0.3))
        counts = sample(s, 10 ** 4, seed=13)
        est = estimate_z_from_counts(counts, 0)
        assert abs(est - math.cos(0.3)) <= 0.05

    def test_sampling_convergence_all_qubits(self):
        rng = np.random.default_rng(21)
        s = zero_state(3)
        apply_gates(s, random_gate_sequence(rng, 3, 20))
        counts = sample(s, 10 ** 6, seed=5)
        for q in range(3):
            est = estimate_z_from_counts(counts, q)
            assert abs(est - z_expectation(s, q)) <= 0.005

    def test_malformed_bitstring(self):
        with pytest.raises(DataError):
            estimate_z_from_counts(ShotCounts(shots=5, counts={"2x": 5}), 0)

    def test_empty_counts(self):
        with pytest.raises(DataError):
            estimate_z_from_counts(ShotCounts(shots=5, counts={}), 0)


class TestBlochCoords:
    def test_north_pole(self):
        c = bloch_coords(zero_state(1))
        assert c.theta == 0.0 and c.phi == 0.0

    def test_plus_state(self):
        c = bloch_coords(plus_state())
        assert c.theta == pytest.approx(math.pi / 2, abs=1e-12)
        assert c.phi == 0.0

    def test_i_state(self):
        s = StateVector(1, np.array([1, 1j]) / math.sqrt(2))
        c = bloch_coords(s)
        assert c.theta == pytest.approx(math.pi / 2, abs=1e-10)
        assert c.phi == pytest.approx(math.pi / 2, abs=1e-10)

    def test_multi_qubit_rejected(self):
        with pytest.raises(ValueError):
            bloch_coords(zero_state(2))

    @given(xi=st.floats(0, 2 * math.pi), seed=st.integers(0, 10 ** 6))
    @settings(max_examples=60)
    def test_global_phase_invariance(self, xi, seed):
        rng = np.random.default_rng(seed)
        amps = rng.normal(size=2) + 1j * rng.normal(size=2)
        amps /= np.linalg.norm(amps)
        c1 = bloch_coords(StateVector(1, amps))
        c2 = bloch_coords(StateVector(1, np.exp(1j * xi) * amps))
        assert c1.theta == pytest.approx(c2.theta, abs=1e-10)
        assert c1.phi == pytest.approx(c2.phi, abs=1e-8) or \
            abs(abs(c1.phi - c2.phi) - 2 * math.pi) <= 1e-8

    def test_reconstruction(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            amps = rng.normal(size=2) + 1j * rng.normal(size=2)
            amps /= np.linalg.norm(amps)
            c = bloch_coords(StateVector(1, amps))
            rebuilt = np.array([
                math.cos(c.theta / 2),
                np.exp(1j * c.phi) * math.sin(c.theta / 2),
            ])
            # match up to global phase
            overlap = abs(np.vdot(rebuilt, amps))
            assert overlap == pytest.approx(1.0, abs=1e-10)


class TestJsonDump:
    def test_round_trip(self):
        s = apply_gates(zero_state(2), [Gate("h", 0), Gate("ry", 1, theta=0.4)])
        doc = json.loads(s.to_json())
        assert doc["num_qubits"] == 2
        assert len(doc["amps"]) == 4
        s2 = StateVector.from_json(s.to_json())
        assert np.allclose(s.amps, s2.amps)
