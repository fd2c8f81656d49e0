"""Command-line surface: gen, train, eval, gradcheck, ledger, estimate.

Exit codes: 0 success, 1 runtime failure, 2 config/usage error. Every run
artifact is written atomically (temp file + rename) together with the exact
configuration that produced it.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import data as data_mod
from .autodiff import CallLedger, GradMethod, jacobian, ledger_predict
from .backends import BackendProfile, estimate_runtime, load_profile
from .circuit import CircuitSpec, QNodeInput, Shots
from .errors import ConfigError
from .model import (HybridModel, evaluate_test, load_checkpoint,
                    save_checkpoint, train)


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.rename(path)


# ---------------------------------------------------------------------------
# Run configuration

_METHODS = ("backprop", "finite-diff", "param-shift")
_SOURCES = ("synthetic", "dir", "features")


@dataclass
class RunConfig:
    circuit: CircuitSpec
    method: GradMethod
    method_name: str
    epochs: int
    seed: int
    shots: int | None
    ratios: tuple[float, float, float]
    data: dict
    out_dir: Path

    def to_dict(self) -> dict:
        return {
            "circuit": json.loads(self.circuit.to_json()),
            "method": self.method_name,
            "fd_delta": self.method.fd_delta,
            "fd_variant": self.method.fd_variant,
            "epochs": self.epochs,
            "seed": self.seed,
            "shots": self.shots,
            "split": list(self.ratios),
            "data": self.data,
            "out_dir": str(self.out_dir),
        }


def parse_run_config(doc: dict) -> RunConfig:
    """Validate a train config document before any work starts."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    known = {"circuit", "method", "fd_delta", "fd_variant", "epochs", "seed",
             "shots", "split", "data", "out_dir"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        circuit = CircuitSpec.from_dict(doc.get("circuit", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"circuit: {exc}") from exc
    method_name = doc.get("method", "backprop")
    if method_name not in _METHODS:
        raise ConfigError(f"method must be one of {_METHODS}")
    try:
        method = GradMethod.parse(method_name,
                                  fd_delta=doc.get("fd_delta", 1e-4),
                                  fd_variant=doc.get("fd_variant", "forward"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    epochs = doc.get("epochs", 1)
    if not isinstance(epochs, int) or epochs < 0:
        raise ConfigError("epochs must be a nonnegative integer")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a nonnegative integer")
    shots = doc.get("shots")
    if shots is not None and (not isinstance(shots, int) or shots < 1):
        raise ConfigError("shots must be null or a positive integer")
    if shots is not None and method_name == "backprop":
        raise ConfigError("backprop is not available in shots mode")
    ratios = tuple(doc.get("split", (0.7, 0.15, 0.15)))
    if len(ratios) != 3 or any(r < 0 for r in ratios) \
            or abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError("split must be three nonnegative ratios summing to 1")
    data = doc.get("data", {"source": "synthetic", "n_crack": 50, "n_clean": 50})
    if not isinstance(data, dict) or data.get("source") not in _SOURCES:
        raise ConfigError(f"data.source must be one of {_SOURCES}")
    if data["source"] == "synthetic":
        for key in ("n_crack", "n_clean"):
            if not isinstance(data.get(key), int) or data[key] < 0:
                raise ConfigError(f"data.{key} must be a nonnegative integer")
    elif data["source"] == "dir":
        for key in ("path", "manifest"):
            if not isinstance(data.get(key), str):
                raise ConfigError(f"data.{key} must be a path string")
    else:
        if not isinstance(data.get("path"), str):
            raise ConfigError("data.path must be a path string")
    out_dir = Path(doc.get("out_dir", "runs/run"))
    return RunConfig(circuit=circuit, method=method, method_name=method_name,
                     epochs=epochs, seed=seed, shots=shots, ratios=ratios,
                     data=data, out_dir=out_dir)


def _load_samples(data: dict) -> list:
    source = data["source"]
    if source == "synthetic":
        patches = data_mod.generate_synthetic(
            data["n_crack"], data["n_clean"], data.get("gen_seed", 1234))
        return [data_mod.extract_features(p) for p in patches]
    if source == "dir":
        patches = data_mod.load_dataset(data["path"], data["manifest"])
        return [data_mod.extract_features(p) for p in patches]
    return data_mod.import_features(data["path"])


# ---------------------------------------------------------------------------
# Subcommands

def cmd_train(args) -> int:
    doc = json.loads(Path(args.config).read_text())
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.out is not None:
        doc["out_dir"] = args.out
    cfg = parse_run_config(doc)

    samples = _load_samples(cfg.data)
    split_cfg = data_mod.SplitConfig(ratios=cfg.ratios, seed=cfg.seed)
    train_set, val_set, test_set = data_mod.split(samples, split_cfg)
    n_features = len(samples[0].values) if samples else 0
    if not train_set:
        raise ConfigError("training split is empty")

    model = HybridModel.init(n_features, cfg.circuit, cfg.seed)
    mode = Shots(cfg.shots, cfg.seed) if cfg.shots else None
    t0 = time.perf_counter()
    model, metrics, ledger = train(model, train_set, val_set, cfg.epochs,
                                   cfg.method, cfg.seed, mode)
    report = evaluate_test(model, test_set, mode) if test_set else None
    wall_s = time.perf_counter() - t0

    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    _write_atomic(out / "run_config.json", json.dumps(cfg.to_dict(), indent=2))
    _write_atomic(out / "split.json",
                  data_mod.split_record((train_set, val_set, test_set), split_cfg))
    rows = [type(metrics[0]).CSV_HEADER if metrics else
            "epoch,train_loss,train_acc,val_loss,val_acc,n_calls,elapsed_ms"]
    rows += [m.csv_row() for m in metrics]
    _write_atomic(out / "metrics.csv", "\n".join(rows) + "\n")
    save_checkpoint(out / "checkpoint.json", model, None, cfg.seed)

    predicted = cfg.epochs * ledger_predict(
        len(train_set), len(val_set), cfg.circuit.num_layers,
        cfg.circuit.num_qubits, cfg.method)
    doc_out = {
        "config": cfg.to_dict(),
        "ledger": ledger.to_dict(method=cfg.method_name, predicted=predicted),
        "wall_seconds": wall_s,
        "splits": {"train": len(train_set), "val": len(val_set),
                   "test": len(test_set)},
    }
    if report is not None:
        doc_out.update(report.to_dict())
    _write_atomic(out / "report.json", json.dumps(doc_out, indent=2))

    if args.json:
        print(json.dumps(doc_out))
    else:
        print(f"trained {cfg.epochs} epochs with {cfg.method_name} "
              f"(T={len(train_set)}, V={len(val_set)}, "
              f"L={cfg.circuit.num_layers}, Q={cfg.circuit.num_qubits})")
        if report is not None:
            print(f"test loss {report.loss:.4f}  "
                  f"test accuracy {report.accuracy:.4f}")
        print(f"calls: measured {ledger.n_calls}  predicted {predicted}")
        print(f"artifacts written to {out}")
    return 0


def cmd_eval(args) -> int:
    model, _, seed = load_checkpoint(args.checkpoint)
    samples = _load_samples(_eval_data_source(args))
    if samples and len(samples[0].values) != model.pre.in_dim:
        print(f"error: checkpoint expects {model.pre.in_dim} features, "
              f"data has {len(samples[0].values)}", file=sys.stderr)
        return 2
    mode = Shots(args.shots, args.seed if args.seed is not None else seed) \
        if args.shots else None
    report = evaluate_test(model, samples, mode)
    doc = report.to_dict()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_atomic(out / "eval_report.json", json.dumps(doc, indent=2))
    if args.json:
        print(json.dumps(doc))
    else:
        c = report.confusion
        print(f"loss {report.loss:.4f}  accuracy {report.accuracy:.4f}")
        print(f"confusion: tp={c['tp']} fp={c['fp']} fn={c['fn']} tn={c['tn']}")
        if report.misclassified:
            print(f"misclassified: {', '.join(report.misclassified)}")
    return 0


def _eval_data_source(args) -> dict:
    if args.features:
        return {"source": "features", "path": args.features}
    if args.data_dir:
        if not args.manifest:
            raise ConfigError("--data-dir requires --manifest")
        return {"source": "dir", "path": args.data_dir,
                "manifest": args.manifest}
    raise ConfigError("eval needs --features or --data-dir/--manifest")


def cmd_gradcheck(args) -> int:
    spec = CircuitSpec(num_qubits=args.qubits, q_depth=args.q_depth)
    rng = np.random.default_rng(args.seed if args.seed is not None else 7)
    max_shift = 0.0
    max_fd = 0.0
    fd = GradMethod.finite_diff(args.fd_delta, args.fd_variant)
    for _ in range(args.trials):
        qinput = QNodeInput(
            features=rng.normal(0.0, 1.0, spec.num_qubits),
            params=rng.uniform(-np.pi, np.pi, spec.num_params),
        )
        ledger = CallLedger()
        j_bp = jacobian(spec, qinput, GradMethod.backprop(), ledger)
        j_ps = jacobian(spec, qinput, GradMethod.param_shift(), ledger)
        j_fd = jacobian(spec, qinput, fd, ledger)
        for a, b in ((j_ps, j_bp),):
            max_shift = max(max_shift,
                            float(np.max(np.abs(a.d_params - b.d_params))),
                            float(np.max(np.abs(a.d_inputs - b.d_inputs))))
        max_fd = max(max_fd,
                     float(np.max(np.abs(j_fd.d_params - j_bp.d_params))),
                     float(np.max(np.abs(j_fd.d_inputs - j_bp.d_inputs))))
    ok_shift = max_shift <= args.tol_shift
    ok_fd = max_fd <= args.tol_fd
    doc = {
        "trials": args.trials,
        "qubits": args.qubits,
        "q_depth": args.q_depth,
        "max_dev_param_shift_vs_backprop": max_shift,
        "tol_shift": args.tol_shift,
        "max_dev_finite_diff_vs_backprop": max_fd,
        "tol_fd": args.tol_fd,
        "pass": ok_shift and ok_fd,
    }
    if args.json:
        print(json.dumps(doc))
    else:
        print(f"param-shift vs backprop: max dev {max_shift:.3e} "
              f"(tol {args.tol_shift:.0e}) {'pass' if ok_shift else 'FAIL'}")
        print(f"finite-diff ({args.fd_variant}, d={args.fd_delta:g}) vs "
              f"backprop: max dev {max_fd:.3e} "
              f"(tol {args.tol_fd:.0e}) {'pass' if ok_fd else 'FAIL'}")
    return 0 if doc["pass"] else 1


def cmd_ledger(args) -> int:
    rows = [
        ("backprop", ledger_predict(args.T, args.V, args.L, args.Q,
                                    GradMethod.backprop())),
        ("finite-diff", ledger_predict(args.T, args.V, args.L, args.Q,
                                       GradMethod.finite_diff())),
        ("param-shift", ledger_predict(args.T, args.V, args.L, args.Q,
                                       GradMethod.param_shift())),
    ]
    if args.json:
        print(json.dumps({
            "T": args.T, "V": args.V, "L": args.L, "Q": args.Q,
            "n_calls": dict(rows),
        }))
    else:
        print(f"predicted calls per epoch "
              f"(T={args.T}, V={args.V}, L={args.L}, Q={args.Q}):")
        for name, n in rows:
            print(f"  {name:<13} {n:,}")
    return 0


def cmd_estimate(args) -> int:
    if args.clops is not None:
        profile = BackendProfile(
            name=args.profile or "custom", clops=args.clops, qv=0,
            overhead_factor=args.overhead if args.overhead is not None else 1.0,
        )
    else:
        if not args.profile:
            raise ConfigError("estimate needs --profile or --clops")
        profile = load_profile(args.profile, overhead_factor=args.overhead)
    device_s, wall_s = estimate_runtime(profile, args.n_calls, args.shots,
                                        args.layers)
    doc = {
        "profile": profile.name,
        "clops": profile.clops,
        "overhead_factor": profile.overhead_factor,
        "n_calls": args.n_calls,
        "shots": args.shots,
        "layers": args.layers,
        "device_seconds": device_s,
        "wall_seconds": wall_s,
    }
    if args.json:
        print(json.dumps(doc))
    else:
        print(f"device_seconds = n_calls*shots*layers/clops = "
              f"{args.n_calls}*{args.shots}*{args.layers}/{profile.clops} "
              f"= {device_s:,.1f} s")
        print(f"wall_seconds   = device_seconds*{profile.overhead_factor:g} "
              f"= {wall_s:,.1f} s")
        print("(order-of-magnitude model; queueing reduced to one multiplier)")
    return 0


def cmd_gen(args) -> int:
    patches = data_mod.generate_synthetic(args.n_crack, args.n_clean,
                                          args.seed if args.seed is not None
                                          else 1234)
    manifest = data_mod.write_patches(patches, args.out)
    print(f"wrote {len(patches)} patches and {manifest}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcrack",
        description="Hybrid quantum-classical crack classifier on an exact "
                    "statevector simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate synthetic crack/no-crack patches")
    p.add_argument("n_crack", type=int)
    p.add_argument("n_clean", type=int)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train the hybrid classifier")
    p.add_argument("--config", required=True, help="run config JSON")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--out", default=None, help="override config out_dir")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--features", default=None, help="feature CSV")
    p.add_argument("--data-dir", default=None, help="patch directory")
    p.add_argument("--manifest", default=None, help="manifest CSV")
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck",
                       help="cross-check the three gradient methods")
    p.add_argument("--qubits", type=int, default=4)
    p.add_argument("--q-depth", type=int, default=1)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--tol-shift", type=float, default=1e-10)
    p.add_argument("--tol-fd", type=float, default=1e-3)
    p.add_argument("--fd-delta", type=float, default=1e-4)
    p.add_argument("--fd-variant", choices=("forward", "central"),
                   default="forward")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("ledger", help="predicted device calls per epoch")
    p.add_argument("T", type=int)
    p.add_argument("V", type=int)
    p.add_argument("L", type=int)
    p.add_argument("Q", type=int)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_ledger)

    p = sub.add_parser("estimate",
                       help="device/wall time from backend throughput")
    p.add_argument("--profile", default=None,
                   help="built-in profile name or profile JSON path")
    p.add_argument("--clops", type=int, default=None,
                   help="override/define throughput directly")
    p.add_argument("--overhead", type=float, default=None,
                   help="queue/transpile multiplier (>= 1)")
    p.add_argument("--n-calls", type=int, required=True)
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_estimate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (json.JSONDecodeError,) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
