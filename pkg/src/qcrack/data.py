"""Patch ingestion, synthetic crack-patch generation, the built-in feature
extractor, and deterministic stratified splitting.

Patches are 224x224 8-bit grayscale, stored as binary PGM (P5, maxval 255).
Synthetic generation derives one child RNG per patch from a single
SeedSequence, so any (counts, seed) pair is byte-reproducible.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError

PATCH_SIZE = 224
LABELS = ("no_crack", "crack")
FEATURE_DIM = 512

_CELLS = 8                      # 8x8 grid of pooling cells
_CELL = PATCH_SIZE // _CELLS    # 28 px per cell
_ORI_BINS = 4


@dataclass
class Patch:
    id: str
    label: str  # "crack" | "no_crack"
    pixels: np.ndarray  # (224, 224) uint8

    def __post_init__(self):
        if self.label not in LABELS:
            raise DataError(f"label must be one of {LABELS}, got {self.label!r}")
        if self.pixels.shape != (PATCH_SIZE, PATCH_SIZE):
            raise DataError(
                f"patch {self.id}: expected {PATCH_SIZE}x{PATCH_SIZE} pixels, "
                f"got {self.pixels.shape}"
            )
        if self.pixels.dtype != np.uint8:
            raise DataError(f"patch {self.id}: pixels must be uint8")


@dataclass
class FeatureSample:
    id: str
    label: str
    values: np.ndarray
    source: str = "built-in"  # "built-in" | "imported"

    def __post_init__(self):
        if self.label not in LABELS:
            raise DataError(f"label must be one of {LABELS}, got {self.label!r}")
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise DataError(f"sample {self.id}: non-finite feature values")


# ---------------------------------------------------------------------------
# PGM I/O

def write_pgm(path, pixels: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n255\n".encode())
        fh.write(pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4 and pos < len(data):
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":  # comment line
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (P5) file")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise FormatError(f"{path}: malformed PGM header") from exc
    if maxval != 255:
        raise FormatError(f"{path}: expected maxval 255, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    raw = data[pos:pos + width * height]
    if len(raw) != width * height:
        raise FormatError(f"{path}: truncated pixel data")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width)


def load_dataset(directory, manifest) -> list[Patch]:
    """Read the patches listed in a `filename,label` manifest CSV."""
    directory = Path(directory)
    patches: list[Patch] = []
    with open(manifest, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["filename", "label"]:
            raise FormatError(
                f"{manifest}: manifest header must be 'filename,label'"
            )
        for row in reader:
            fname, label = row["filename"], row["label"]
            pixels = read_pgm(directory / fname)
            if pixels.shape != (PATCH_SIZE, PATCH_SIZE):
                raise FormatError(
                    f"{fname}: expected {PATCH_SIZE}x{PATCH_SIZE}, "
                    f"got {pixels.shape[1]}x{pixels.shape[0]}"
                )
            patches.append(Patch(id=Path(fname).stem, label=label, pixels=pixels))
    if not patches:
        warnings.warn(f"manifest {manifest} lists no patches")
    return patches


# ---------------------------------------------------------------------------
# Synthetic generation

def _base_texture(rng: np.random.Generator) -> np.ndarray:
    """Mid-gray concrete-like texture: multi-scale noise plus dark pores."""
    img = np.full((PATCH_SIZE, PATCH_SIZE), 128.0)
    for grid, amp in ((7, 14.0), (28, 8.0), (56, 5.0)):
        k = PATCH_SIZE // grid
        img += np.kron(rng.normal(0.0, amp, (grid, grid)), np.ones((k, k)))
    img += rng.normal(0.0, 3.0, (PATCH_SIZE, PATCH_SIZE))
    for _ in range(rng.poisson(1.5)):
        cy, cx = rng.integers(8, PATCH_SIZE - 8, size=2)
        radius = int(rng.integers(2, 6))
        depth = float(rng.integers(30, 70))
        yy, xx = np.ogrid[:PATCH_SIZE, :PATCH_SIZE]
        img[(yy - cy) ** 2 + (xx - cx) ** 2 <= radius ** 2] -= depth
    return img


def _draw_crack(img: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Darken a random-walk polyline across the full patch extent.

    Returns the boolean crack mask. The painted pixel set is 4-connected
    (vertical jumps are filled column by column) and spans all 224 columns
    of the walk axis.
    """
    mask = np.zeros_like(img, dtype=bool)
    width = int(rng.integers(1, 3))  # 1 or 2 px
    depth = float(rng.integers(60, 110))
    transpose = bool(rng.integers(0, 2))  # vertical crack: work transposed
    wmask = mask.T if transpose else mask
    y = int(rng.integers(20, PATCH_SIZE - 20))
    prev = y
    for x in range(PATCH_SIZE):
        y = int(np.clip(y + rng.integers(-1, 2), 1, PATCH_SIZE - 2))
        lo, hi = min(prev, y), max(prev, y)
        wmask[lo:hi + width, x] = True
        prev = y
    img[mask] -= depth
    return mask


def generate_synthetic(n_crack: int, n_clean: int, seed: int) -> list[Patch]:
    """Deterministic synthetic patches: cracks first, then clean."""
    if n_crack < 0 or n_clean < 0:
        raise ValueError("counts must be nonnegative")
    children = np.random.SeedSequence(seed).spawn(n_crack + n_clean)
    patches: list[Patch] = []
    for i in range(n_crack):
        rng = np.random.default_rng(children[i])
        img = _base_texture(rng)
        _draw_crack(img, rng)
        patches.append(Patch(
            id=f"crack_{i:05d}", label="crack",
            pixels=np.clip(img, 0, 255).astype(np.uint8),
        ))
    for i in range(n_clean):
        rng = np.random.default_rng(children[n_crack + i])
        img = _base_texture(rng)
        patches.append(Patch(
            id=f"clean_{i:05d}", label="no_crack",
            pixels=np.clip(img, 0, 255).astype(np.uint8),
        ))
    return patches


# ---------------------------------------------------------------------------
# Feature extraction

def extract_features(patch: Patch) -> FeatureSample:
    """Fixed 512-dim descriptor over an 8x8 grid of 28x28 cells.

    Per cell, in order: 4 gradient-orientation histogram bins (magnitude
    weighted, averaged over the cell), mean gradient magnitude, then
    min/mean/max intensity. Cells are laid out row-major. Intensities are
    scaled to [0, 1] so all features stay O(1).
    """
    img = patch.pixels.astype(float) / 255.0
    gy, gx = np.gradient(img)
    mag = np.hypot(gx, gy)
    ori = np.arctan2(gy, gx) % math.pi  # unsigned orientation
    bins = np.minimum((ori / (math.pi / _ORI_BINS)).astype(int), _ORI_BINS - 1)

    def cells(a: np.ndarray) -> np.ndarray:
        # (8, 8, 28, 28): cell-row, cell-col, pixels
        return a.reshape(_CELLS, _CELL, _CELLS, _CELL).transpose(0, 2, 1, 3)

    c_img = cells(img)
    c_mag = cells(mag)
    c_bins = cells(bins)
    feats = np.empty((_CELLS, _CELLS, 8))
    for b in range(_ORI_BINS):
        feats[:, :, b] = np.mean(np.where(c_bins == b, c_mag, 0.0), axis=(2, 3))
    feats[:, :, 4] = c_mag.mean(axis=(2, 3))
    feats[:, :, 5] = c_img.min(axis=(2, 3))
    feats[:, :, 6] = c_img.mean(axis=(2, 3))
    feats[:, :, 7] = c_img.max(axis=(2, 3))
    return FeatureSample(id=patch.id, label=patch.label,
                         values=feats.reshape(-1), source="built-in")


def import_features(path) -> list[FeatureSample]:
    """Read externally computed features: CSV rows `id,label,f_0,...`."""
    samples: list[FeatureSample] = []
    width: int | None = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) < 3:
                raise FormatError(f"{path}:{lineno}: need id,label,f_0,...")
            if width is None:
                width = len(row) - 2
            elif len(row) - 2 != width:
                raise FormatError(
                    f"{path}:{lineno}: expected {width} features, "
                    f"got {len(row) - 2}"
                )
            try:
                values = np.array([float(v) for v in row[2:]])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            samples.append(FeatureSample(id=row[0], label=row[1],
                                         values=values, source="imported"))
    return samples


# ---------------------------------------------------------------------------
# Splitting

@dataclass(frozen=True)
class SplitConfig:
    ratios: tuple[float, float, float]  # train, val, test
    seed: int

    def __post_init__(self):
        if any(r < 0 for r in self.ratios):
            raise ValueError("ratios must be nonnegative")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError(f"ratios must sum to 1, got {self.ratios}")


def _largest_remainder(n: int, ratios) -> list[int]:
    exact = [n * r for r in ratios]
    counts = [int(math.floor(e)) for e in exact]
    rem = n - sum(counts)
    # ties broken in split order (train, then val, then test)
    order = sorted(range(len(ratios)),
                   key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[:rem]:
        counts[i] += 1
    return counts


def split(samples, config: SplitConfig):
    """Stratified split: per-class seeded shuffle, then contiguous
    allocation with largest-remainder rounding."""
    by_class: dict[str, list] = {}
    for s in samples:
        by_class.setdefault(s.label, []).append(s)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0x517]))
    outputs = ([], [], [])
    for label in sorted(by_class):
        group = by_class[label]
        order = rng.permutation(len(group))
        counts = _largest_remainder(len(group), config.ratios)
        for i, (count, ratio) in enumerate(zip(counts, config.ratios)):
            if count == 0 and ratio > 0:
                warnings.warn(
                    f"class {label!r}: split {i} rounds to zero samples"
                )
        start = 0
        for out, count in zip(outputs, counts):
            out.extend(group[j] for j in order[start:start + count])
            start += count
    return outputs


def split_record(splits, config: SplitConfig) -> str:
    """JSON audit record of split membership."""
    names = ("train", "val", "test")
    return json.dumps({
        "seed": config.seed,
        "ratios": list(config.ratios),
        **{name: [s.id for s in part] for name, part in zip(names, splits)},
    })


def write_patches(patches: list[Patch], out_dir) -> Path:
    """Write PGM files plus a manifest CSV; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = out_dir / "manifest.csv"
    tmp = manifest.with_suffix(".csv.tmp")
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["filename", "label"])
        for patch in patches:
            fname = f"{patch.id}.pgm"
            write_pgm(out_dir / fname, patch.pixels)
            writer.writerow([fname, patch.label])
    tmp.rename(manifest)
    return manifest
