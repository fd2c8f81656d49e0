"""Gradients of the quantum node by three interchangeable methods, plus
exact bookkeeping of simulated device calls.

All three methods differentiate with respect to the L*Q shiftable angles:
the Q encoding angles (post-scaling) and the q_depth*Q variational
parameters. Every method also produces the forward value, charged as one
forward call, so that one training image costs exactly one forward call
plus the method's backward calls.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .circuit import CircuitSpec, QNodeInput, Shots, build_from_angles
from .circuit import encode_features, evaluate_angles
from .errors import CapabilityError, ReconciliationError
from .statevector import Gate, StateVector, apply_gate

BACKPROP = "backprop"
FINITE_DIFF = "finite-diff"
PARAM_SHIFT = "param-shift"


@dataclass(frozen=True)
class GradMethod:
    kind: str
    fd_delta: float = 1e-4
    fd_variant: str = "forward"  # "forward" | "central"
    shift: float = math.pi / 2
    shift_coeff: float = 0.5

    def __post_init__(self):
        if self.kind not in (BACKPROP, FINITE_DIFF, PARAM_SHIFT):
            raise ValueError(f"unknown gradient method {self.kind!r}")
        if self.fd_delta <= 0:
            raise ValueError("fd_delta must be positive")
        if self.fd_variant not in ("forward", "central"):
            raise ValueError(f"unknown finite-difference variant {self.fd_variant!r}")
        if not 0 < self.shift <= math.pi:
            raise ValueError("shift must be in (0, pi]")
        if self.shift_coeff <= 0:
            raise ValueError("shift_coeff must be positive")

    @classmethod
    def backprop(cls) -> "GradMethod":
        return cls(BACKPROP)

    @classmethod
    def finite_diff(cls, delta: float = 1e-4,
                    variant: str = "forward") -> "GradMethod":
        return cls(FINITE_DIFF, fd_delta=delta, fd_variant=variant)

    @classmethod
    def param_shift(cls) -> "GradMethod":
        return cls(PARAM_SHIFT)

    @classmethod
    def parse(cls, name: str, fd_delta: float = 1e-4,
              fd_variant: str = "forward") -> "GradMethod":
        if name == BACKPROP:
            return cls.backprop()
        if name == PARAM_SHIFT:
            return cls.param_shift()
        if name == FINITE_DIFF:
            return cls.finite_diff(fd_delta, fd_variant)
        raise ValueError(f"unknown gradient method {name!r}")


class CallLedger:
    """Thread-safe counter of quantum-circuit executions."""

    def __init__(self, T: int = 0, V: int = 0, L: int = 0, Q: int = 0):
        self.context = {"T": T, "V": V, "L": L, "Q": Q}
        self._lock = threading.Lock()
        self._forward = 0
        self._backward = 0

    def add_forward(self, n: int = 1):
        with self._lock:
            self._forward += n

    def add_backward(self, n: int = 1):
        with self._lock:
            self._backward += n

    @property
    def n_forward(self) -> int:
        return self._forward

    @property
    def n_backward(self) -> int:
        return self._backward

    @property
    def n_calls(self) -> int:
        return self._forward + self._backward

    def snapshot(self) -> tuple[int, int]:
        with self._lock:
            return self._forward, self._backward

    def to_dict(self, epoch: int | None = None, method: str | None = None,
                predicted: int | None = None) -> dict:
        doc = {
            "n_forward": self.n_forward,
            "n_backward": self.n_backward,
            "n_calls": self.n_calls,
        }
        if epoch is not None:
            doc["epoch"] = epoch
        if method is not None:
            doc["method"] = method
        if predicted is not None:
            doc["predicted"] = predicted
        return doc


@dataclass
class QNodeJacobian:
    d_params: np.ndarray  # (Q outputs, q_depth*Q params)
    d_inputs: np.ndarray  # (Q outputs, Q encoding angles)


_RY_SHIFT = math.pi  # Ry(theta)' = 0.5 * Ry(theta + pi)


def _adjoint_jacobian(spec: CircuitSpec, angles: np.ndarray,
                      params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reverse-mode pass through the stored statevector.

    Returns (z, d) where d has one column per shiftable angle in circuit
    order: Q encoding columns first, then layer-major variational columns.
    For psi = U_N..U_1|0> and f_k = <psi|Z_k|psi>,
    df_k/dtheta_j = 2 Re( <psi| Z_k U_N..U_{j+1} (dU_j) U_{j-1}..U_1 |0> ).
    """
    q = spec.num_qubits
    gates = build_from_angles(spec, angles, params)
    state = StateVector(q)
    for gate in gates:
        apply_gate(state, gate)

    probs = state.probabilities()
    bits = np.array([(np.arange(probs.size) >> k) & 1 for k in range(q)])
    z = np.array([float(np.sum(probs * (1 - 2 * b))) for b in bits])

    # bras[k] = Z_k |psi>, evolved backwards alongside |psi>
    signs = 1 - 2 * bits  # (Q, dim)
    bras = [StateVector(q, s * state.amps) for s in signs]
    scratch = StateVector(q, state.amps.copy())

    n_angles = q * spec.num_layers
    deriv = np.zeros((q, n_angles))
    col = n_angles - 1
    for gate in reversed(gates):
        inv = Gate(gate.kind, gate.target, control=gate.control,
                   theta=-gate.theta)
        apply_gate(state, inv)  # now the ket before this gate
        if gate.kind == "ry":
            # d/dtheta Ry(theta) applied to the pre-gate ket
            scratch.amps[:] = state.amps
            apply_gate(scratch, Gate("ry", gate.target,
                                     theta=gate.theta + _RY_SHIFT))
            deriv[:, col] = [
                float(np.real(np.vdot(b.amps, scratch.amps))) for b in bras
            ]
            col -= 1
        for b in bras:
            apply_gate(b, inv)
    # the 0.5 from Ry' and the 2 from 2*Re(<bra|dU|ket>) cancel
    return z, deriv


def _split_seed(base: int, index: int) -> int:
    seq = np.random.SeedSequence(entropy=[int(base), int(index)])
    return int(seq.generate_state(1)[0])


def _shifted_mode(mode: Shots | None, index: int) -> Shots | None:
    if mode is None:
        return None
    return Shots(mode.shots, _split_seed(mode.seed, index))


def value_and_jacobian(spec: CircuitSpec, qinput: QNodeInput,
                       method: GradMethod, ledger: CallLedger,
                       mode: Shots | None = None
                       ) -> tuple[np.ndarray, QNodeJacobian]:
    """Forward value plus Jacobian of the quantum node.

    Call accounting per training image: 1 forward call for the base value,
    plus backward calls of 2*L*Q (param-shift), L*Q (forward finite
    differences), 2*L*Q (central finite differences), or none (backprop,
    which reuses the stored forward sweep).
    """
    angles = encode_features(qinput.features)
    params = qinput.params
    q = spec.num_qubits
    all_angles = np.concatenate([angles, params])

    if method.kind == BACKPROP:
        if mode is not None:
            raise CapabilityError(
                "backprop needs exact statevector access; not available in shots mode"
            )
        ledger.add_forward(1)
        z, deriv = _adjoint_jacobian(spec, angles, params)
        return z, QNodeJacobian(d_params=deriv[:, q:], d_inputs=deriv[:, :q])

    def eval_at(vec: np.ndarray, call_index: int) -> np.ndarray:
        return evaluate_angles(spec, vec[:q], vec[q:],
                               _shifted_mode(mode, call_index))

    base = eval_at(all_angles, 0)
    ledger.add_forward(1)
    deriv = np.zeros((q, all_angles.size))

    if method.kind == PARAM_SHIFT:
        for j in range(all_angles.size):
            plus = all_angles.copy()
            plus[j] += method.shift
            minus = all_angles.copy()
            minus[j] -= method.shift
            f_plus = eval_at(plus, 2 * j + 1)
            f_minus = eval_at(minus, 2 * j + 2)
            ledger.add_backward(2)
            deriv[:, j] = method.shift_coeff * (f_plus - f_minus)
    elif method.fd_variant == "forward":
        for j in range(all_angles.size):
            plus = all_angles.copy()
            plus[j] += method.fd_delta
            f_plus = eval_at(plus, j + 1)
            ledger.add_backward(1)
            deriv[:, j] = (f_plus - base) / method.fd_delta
    else:  # central
        for j in range(all_angles.size):
            plus = all_angles.copy()
            plus[j] += method.fd_delta
            minus = all_angles.copy()
            minus[j] -= method.fd_delta
            f_plus = eval_at(plus, 2 * j + 1)
            f_minus = eval_at(minus, 2 * j + 2)
            ledger.add_backward(2)
            deriv[:, j] = (f_plus - f_minus) / (2.0 * method.fd_delta)

    return base, QNodeJacobian(d_params=deriv[:, q:], d_inputs=deriv[:, :q])


def jacobian(spec: CircuitSpec, qinput: QNodeInput, method: GradMethod,
             ledger: CallLedger, mode: Shots | None = None) -> QNodeJacobian:
    _, jac = value_and_jacobian(spec, qinput, method, ledger, mode)
    return jac


def ledger_predict(T: int, V: int, L: int, Q: int, method: GradMethod) -> int:
    """Predicted device calls for one epoch: forward T+V plus backward work."""
    for name, v in (("T", T), ("V", V), ("L", L), ("Q", Q)):
        if v < 0:
            raise ValueError(f"{name} must be nonnegative")
    if method.kind == BACKPROP:
        return T + V
    if method.kind == PARAM_SHIFT:
        return T + V + 2 * T * L * Q
    if method.fd_variant == "forward":
        return T + V + T * L * Q
    return T + V + 2 * T * L * Q  # central differences: two evals per angle


def ledger_reconcile(ledger: CallLedger, predicted: int) -> dict:
    """Check measured calls against a prediction; raise on mismatch."""
    n_forward, n_backward = ledger.snapshot()
    report = {
        "measured": n_forward + n_backward,
        "predicted": predicted,
        "n_forward": n_forward,
        "n_backward": n_backward,
        "ok": n_forward + n_backward == predicted,
    }
    if not report["ok"]:
        raise ReconciliationError(report)
    return report
