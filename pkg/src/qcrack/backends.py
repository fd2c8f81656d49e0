"""Runtime estimation from published backend throughput figures.

This is an order-of-magnitude model, not a calibrated predictor:
    device_seconds = n_calls * shots * layers / clops
    wall_seconds   = device_seconds * overhead_factor
where the overhead factor is a single knob standing in for queueing,
transpilation, and validation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path


@dataclass(frozen=True)
class BackendProfile:
    name: str
    clops: int  # circuit layer operations per second
    qv: int
    overhead_factor: float = 1.0

    def __post_init__(self):
        if self.clops <= 0:
            raise ValueError("clops must be positive")
        if self.overhead_factor < 1.0:
            raise ValueError("overhead_factor must be >= 1")


def builtin_profiles() -> list[str]:
    pkg = resources.files("qcrack") / "profiles"
    return sorted(p.name[:-5] for p in pkg.iterdir() if p.name.endswith(".json"))


def load_profile(name_or_path: str,
                 overhead_factor: float | None = None) -> BackendProfile:
    """Load a shipped profile by name, or any profile JSON by path."""
    path = Path(name_or_path)
    if path.suffix == ".json" and path.exists():
        doc = json.loads(path.read_text())
    else:
        res = resources.files("qcrack") / "profiles" / f"{name_or_path}.json"
        if not res.is_file():
            raise FileNotFoundError(
                f"no backend profile {name_or_path!r}; "
                f"built-ins: {', '.join(builtin_profiles())}"
            )
        doc = json.loads(res.read_text())
    return BackendProfile(
        name=doc["name"],
        clops=int(doc["clops"]),
        qv=int(doc.get("qv", 0)),
        overhead_factor=float(
            overhead_factor if overhead_factor is not None
            else doc.get("overhead_factor", 1.0)
        ),
    )


def estimate_runtime(profile: BackendProfile, n_calls: int, shots: int,
                     layers: int) -> tuple[float, float]:
    """(device_seconds, wall_seconds) for a batch of circuit executions."""
    if n_calls <= 0 or shots <= 0 or layers <= 0:
        raise ValueError("n_calls, shots, and layers must be positive")
    device_seconds = n_calls * shots * layers / profile.clops
    return device_seconds, device_seconds * profile.overhead_factor
