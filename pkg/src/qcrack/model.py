"""Hybrid classifier: linear(F -> Q), quantum node, linear(Q -> 2),
softmax cross-entropy, per-sample Adam steps.

Labels: 1 = crack (positive class), 0 = no crack. Logit index 1 scores the
crack class.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .autodiff import CallLedger, GradMethod, value_and_jacobian
from .circuit import CircuitSpec, QNodeInput, Shots, encode_features, evaluate_angles
from .errors import DataError

LABELS = ("no_crack", "crack")


def label_index(label: str) -> int:
    if label not in LABELS:
        raise DataError(f"label must be one of {LABELS}, got {label!r}")
    return LABELS.index(label)


@dataclass
class LinearLayer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray     # (out,)

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.weights @ x + self.bias

    @classmethod
    def init(cls, in_dim: int, out_dim: int, rng: np.random.Generator
             ) -> "LinearLayer":
        scale = 1.0 / math.sqrt(in_dim)
        return cls(
            weights=rng.uniform(-scale, scale, size=(out_dim, in_dim)),
            bias=np.zeros(out_dim),
        )


@dataclass
class HybridModel:
    pre: LinearLayer
    qspec: CircuitSpec
    qparams: np.ndarray
    post: LinearLayer

    def __post_init__(self):
        q = self.qspec.num_qubits
        if self.pre.out_dim != q or self.post.in_dim != q:
            raise ValueError("linear layers must match the qubit count")
        if self.qparams.shape != (self.qspec.num_params,):
            raise ValueError(
                f"expected {self.qspec.num_params} quantum params, "
                f"got {self.qparams.shape}"
            )

    @classmethod
    def init(cls, n_features: int, qspec: CircuitSpec, seed: int
             ) -> "HybridModel":
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC0DE]))
        return cls(
            pre=LinearLayer.init(n_features, qspec.num_qubits, rng),
            qspec=qspec,
            qparams=rng.uniform(-0.1, 0.1, size=qspec.num_params),
            post=LinearLayer.init(qspec.num_qubits, 2, rng),
        )

    def forward(self, features: np.ndarray, ledger: CallLedger | None = None,
                mode: Shots | None = None) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        if features.shape != (self.pre.in_dim,):
            raise ValueError(
                f"expected {self.pre.in_dim} features, got {features.shape}"
            )
        angles = encode_features(self.pre.apply(features))
        z = evaluate_angles(self.qspec, angles, self.qparams, mode)
        if ledger is not None:
            ledger.add_forward(1)
        return self.post.apply(z)

    def parameters(self) -> dict[str, np.ndarray]:
        return {
            "pre_w": self.pre.weights, "pre_b": self.pre.bias,
            "theta": self.qparams,
            "post_w": self.post.weights, "post_b": self.post.bias,
        }


def softmax(logits: np.ndarray) -> np.ndarray:
    e = np.exp(logits - np.max(logits))
    return e / e.sum()


def cross_entropy(logits: np.ndarray, label: int) -> float:
    shifted = logits - np.max(logits)
    return float(np.log(np.sum(np.exp(shifted))) - shifted[label])


def loss_and_grad(model: HybridModel, batch: list[tuple[np.ndarray, int]],
                  method: GradMethod, ledger: CallLedger,
                  mode: Shots | None = None
                  ) -> tuple[float, dict[str, np.ndarray], np.ndarray]:
    """Mean cross-entropy, gradients for every parameter, and the logits.

    The gradient chain: d(loss)/d(logits) -> post layer -> quantum outputs
    -> quantum Jacobian (method-dependent) -> encoding angles -> tanh
    scaling -> pre layer. Only quantum-node executions touch the ledger.
    """
    if not batch:
        raise ValueError("batch must be nonempty")
    grads = {k: np.zeros_like(v) for k, v in model.parameters().items()}
    total_loss = 0.0
    logits_out = np.zeros((len(batch), 2))
    for i, (features, label) in enumerate(batch):
        if label not in (0, 1):
            raise DataError(f"label must be 0 or 1, got {label!r}")
        features = np.asarray(features, dtype=float)
        u = model.pre.apply(features)
        qinput = QNodeInput(features=u, params=model.qparams)
        z, jac = value_and_jacobian(model.qspec, qinput, method, ledger, mode)
        logits = model.post.apply(z)
        logits_out[i] = logits
        total_loss += cross_entropy(logits, label)

        g_logits = softmax(logits)
        g_logits[label] -= 1.0
        grads["post_w"] += np.outer(g_logits, z)
        grads["post_b"] += g_logits
        g_z = model.post.weights.T @ g_logits
        grads["theta"] += jac.d_params.T @ g_z
        g_angles = jac.d_inputs.T @ g_z
        g_u = g_angles * (math.pi / 2.0) * (1.0 - np.tanh(u) ** 2)
        grads["pre_w"] += np.outer(g_u, features)
        grads["pre_b"] += g_u

    n = len(batch)
    for g in grads.values():
        g /= n
    return total_loss / n, grads, logits_out


@dataclass
class OptimizerState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], **hyper
                   ) -> "OptimizerState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            **hyper,
        )


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: OptimizerState) -> None:
    """Bias-corrected Adam update, in place."""
    state.step += 1
    t = state.step
    for k, p in params.items():
        g = grads[k]
        state.m[k] = state.beta1 * state.m[k] + (1 - state.beta1) * g
        state.v[k] = state.beta2 * state.v[k] + (1 - state.beta2) * g * g
        m_hat = state.m[k] / (1 - state.beta1 ** t)
        v_hat = state.v[k] / (1 - state.beta2 ** t)
        p -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float
    n_calls: int
    elapsed_ms: float

    CSV_HEADER = "epoch,train_loss,train_acc,val_loss,val_acc,n_calls,elapsed_ms"

    def csv_row(self) -> str:
        return (f"{self.epoch},{self.train_loss:.10g},{self.train_acc:.10g},"
                f"{self.val_loss:.10g},{self.val_acc:.10g},{self.n_calls},"
                f"{self.elapsed_ms:.3f}")


def _eval_split(model: HybridModel, samples, ledger: CallLedger | None,
                mode: Shots | None, seed_tag: int) -> tuple[float, float]:
    loss = 0.0
    correct = 0
    for i, s in enumerate(samples):
        m = mode
        if mode is not None:
            m = Shots(mode.shots, _sample_seed(mode.seed, seed_tag, i))
        logits = model.forward(s.values, ledger, m)
        y = label_index(s.label)
        loss += cross_entropy(logits, y)
        correct += int(np.argmax(logits) == y)
    n = len(samples)
    return loss / n, correct / n


def _sample_seed(base: int, *keys: int) -> int:
    seq = np.random.SeedSequence(entropy=[int(base), *map(int, keys)])
    return int(seq.generate_state(1)[0])


def train(model: HybridModel, train_set, val_set, epochs: int,
          method: GradMethod, seed: int, mode: Shots | None = None,
          batch_size: int = 1
          ) -> tuple[HybridModel, list[EpochMetrics], CallLedger]:
    """Seeded shuffling, per-sample (or mini-batch) Adam steps, one
    validation forward pass per image per epoch."""
    if epochs and not train_set:
        raise ValueError("training split is empty")
    ledger = CallLedger(T=len(train_set), V=len(val_set),
                        L=model.qspec.num_layers, Q=model.qspec.num_qubits)
    params = model.parameters()
    opt = OptimizerState.for_params(params)
    shuffle_rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5F]))
    metrics: list[EpochMetrics] = []

    for epoch in range(epochs):
        t0 = time.perf_counter()
        calls_before = ledger.n_calls
        order = shuffle_rng.permutation(len(train_set))
        train_loss = 0.0
        train_correct = 0
        for start in range(0, len(order), batch_size):
            chunk = order[start:start + batch_size]
            batch = []
            for j, idx in enumerate(chunk):
                s = train_set[idx]
                batch.append((s.values, label_index(s.label)))
            m = mode
            if mode is not None:
                m = Shots(mode.shots, _sample_seed(mode.seed, epoch, start))
            loss, grads, logits = loss_and_grad(model, batch, method, ledger, m)
            adam_step(params, grads, opt)
            train_loss += loss * len(batch)
            labels = np.array([b[1] for b in batch])
            train_correct += int(np.sum(np.argmax(logits, axis=1) == labels))
        if val_set:
            val_loss, val_acc = _eval_split(model, val_set, ledger, mode,
                                            seed_tag=epoch + 1_000_000)
        else:
            val_loss, val_acc = float("nan"), float("nan")
        metrics.append(EpochMetrics(
            epoch=epoch,
            train_loss=train_loss / len(train_set),
            train_acc=train_correct / len(train_set),
            val_loss=val_loss,
            val_acc=val_acc,
            n_calls=ledger.n_calls - calls_before,
            elapsed_ms=(time.perf_counter() - t0) * 1000.0,
        ))
    return model, metrics, ledger


@dataclass
class TestReport:
    loss: float
    accuracy: float
    confusion: dict[str, int]  # tp, fp, fn, tn; "crack" is positive
    misclassified: list[str]

    def to_dict(self) -> dict:
        return {
            "test_loss": self.loss,
            "test_accuracy": self.accuracy,
            "confusion_matrix": self.confusion,
            "misclassified_ids": self.misclassified,
        }


def evaluate_test(model: HybridModel, test_set,
                  mode: Shots | None = None) -> TestReport:
    if not test_set:
        raise ValueError("test split is empty")
    conf = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    loss = 0.0
    wrong: list[str] = []
    for i, s in enumerate(test_set):
        m = mode
        if mode is not None:
            m = Shots(mode.shots, _sample_seed(mode.seed, 0xE7A1, i))
        logits = model.forward(s.values, None, m)
        y = label_index(s.label)
        pred = int(np.argmax(logits))
        loss += cross_entropy(logits, y)
        if pred == 1 and y == 1:
            conf["tp"] += 1
        elif pred == 1 and y == 0:
            conf["fp"] += 1
        elif pred == 0 and y == 1:
            conf["fn"] += 1
        else:
            conf["tn"] += 1
        if pred != y:
            wrong.append(s.id)
    n = len(test_set)
    return TestReport(
        loss=loss / n,
        accuracy=(conf["tp"] + conf["tn"]) / n,
        confusion=conf,
        misclassified=wrong,
    )


def save_checkpoint(path, model: HybridModel, opt: OptimizerState | None,
                    seed: int) -> None:
    doc = {
        "seed": seed,
        "circuit": json.loads(model.qspec.to_json()),
        "pre": {"weights": model.pre.weights.tolist(),
                "bias": model.pre.bias.tolist()},
        "qparams": model.qparams.tolist(),
        "post": {"weights": model.post.weights.tolist(),
                 "bias": model.post.bias.tolist()},
    }
    if opt is not None:
        doc["optimizer"] = {
            "lr": opt.lr, "beta1": opt.beta1, "beta2": opt.beta2,
            "eps": opt.eps, "step": opt.step,
            "m": {k: v.tolist() for k, v in opt.m.items()},
            "v": {k: v.tolist() for k, v in opt.v.items()},
        }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path) -> tuple[HybridModel, OptimizerState | None, int]:
    with open(path) as fh:
        doc = json.load(fh)
    model = HybridModel(
        pre=LinearLayer(np.array(doc["pre"]["weights"]),
                        np.array(doc["pre"]["bias"])),
        qspec=CircuitSpec.from_dict(doc["circuit"]),
        qparams=np.array(doc["qparams"]),
        post=LinearLayer(np.array(doc["post"]["weights"]),
                         np.array(doc["post"]["bias"])),
    )
    opt = None
    if "optimizer" in doc:
        o = doc["optimizer"]
        opt = OptimizerState(
            lr=o["lr"], beta1=o["beta1"], beta2=o["beta2"], eps=o["eps"],
            step=o["step"],
            m={k: np.array(v) for k, v in o["m"].items()},
            v={k: np.array(v) for k, v in o["v"].items()},
        )
    return model, opt, doc["seed"]
