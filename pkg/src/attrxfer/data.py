"""Labeled image datasets: a synthetic shapes generator, an image-folder
loader, deterministic id-hash splits, and export helpers.

Images are float32 (C, H, W) arrays in [0, 1] throughout.
"""

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .exceptions import DatasetError, ImageDecodeError
from .validation import check_image, check_positive_int

SHAPE_NAMES = (
    "disk", "square", "triangle", "cross", "ring",
    "diamond", "xcross", "hbars", "vbars", "frame",
)

MANIFEST_NAME = "manifest.tsv"


@dataclass(frozen=True)
class LabeledExample:
    image: np.ndarray  # (C, H, W) float32 in [0, 1]
    label: int
    id: str


@dataclass(frozen=True)
class Dataset:
    """Immutable ordered collection of labeled examples.

    `tag` identifies the underlying distribution (generator parameters or
    source folder) so that models trained on it can be matched later;
    `split` marks which part of that distribution this object holds.
    """

    examples: tuple = field(repr=False)
    class_names: tuple = ()
    split: str = "full"
    tag: str = ""

    def __post_init__(self):
        seen = set()
        for ex in self.examples:
            if ex.id in seen:
                raise DatasetError(f"duplicate example id: {ex.id!r}")
            seen.add(ex.id)
            if not 0 <= ex.label < len(self.class_names):
                raise DatasetError(
                    f"label {ex.label} of example {ex.id!r} outside the "
                    f"{len(self.class_names)} known classes")

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def __getitem__(self, i):
        return self.examples[i]

    @property
    def num_classes(self):
        return len(self.class_names)

    def images(self):
        """All images stacked to (N, C, H, W)."""
        return np.stack([ex.image for ex in self.examples])

    def labels(self):
        return np.array([ex.label for ex in self.examples], dtype=np.int64)

    def ids(self):
        return [ex.id for ex in self.examples]

    def class_counts(self):
        counts = np.zeros(self.num_classes, dtype=np.int64)
        for ex in self.examples:
            counts[ex.label] += 1
        return counts

    def with_split(self, examples, split):
        return Dataset(examples=tuple(examples), class_names=self.class_names,
                       split=split, tag=self.tag)


def _shape_predicate(kind, side, cx, cy, r):
    """Boolean (side, side) raster of one shape centered at (cx, cy)."""
    yy, xx = np.mgrid[0:side, 0:side].astype(np.float64)
    dx, dy = xx - cx, yy - cy
    dist2 = dx * dx + dy * dy
    bar = max(r / 3.0, 1.2)
    if kind == "disk":
        return dist2 <= r * r
    if kind == "square":
        return np.maximum(np.abs(dx), np.abs(dy)) <= 0.88 * r
    if kind == "triangle":
        # upward triangle: apex at cy - r, base at cy + r
        return (dy >= -r) & (dy <= r) & (np.abs(dx) <= 0.9 * (dy + r) / 2.0)
    if kind == "cross":
        inside = np.maximum(np.abs(dx), np.abs(dy)) <= r
        return inside & ((np.abs(dx) <= bar) | (np.abs(dy) <= bar))
    if kind == "ring":
        return (dist2 <= r * r) & (dist2 >= (0.55 * r) ** 2)
    if kind == "diamond":
        return np.abs(dx) + np.abs(dy) <= 1.2 * r
    if kind == "xcross":
        inside = np.maximum(np.abs(dx), np.abs(dy)) <= r
        return inside & ((np.abs(dx - dy) <= bar * 1.4) | (np.abs(dx + dy) <= bar * 1.4))
    if kind == "hbars":
        return (np.abs(dx) <= r) & (np.abs(np.abs(dy) - 0.55 * r) <= bar / 1.6)
    if kind == "vbars":
        return (np.abs(dy) <= r) & (np.abs(np.abs(dx) - 0.55 * r) <= bar / 1.6)
    if kind == "frame":
        outer = np.maximum(np.abs(dx), np.abs(dy)) <= r
        inner = np.maximum(np.abs(dx), np.abs(dy)) <= 0.55 * r
        return outer & ~inner
    raise ValueError(f"unknown shape kind {kind!r}")


def generate_shapes_dataset(n, num_classes, side, seed, channels=3):
    """Class-balanced dataset of single-shape images over noise backgrounds.

    Each example shows one class-identifying shape at a random position,
    scale, and color over a per-example uniform-noise background. The class
    signal is the shape's form only: colors and backgrounds are drawn
    independently of the label. Deterministic under `seed`.
    """
    n = check_positive_int(n, "n")
    num_classes = check_positive_int(num_classes, "num_classes", minimum=2)
    side = check_positive_int(side, "side", minimum=16)
    if num_classes > len(SHAPE_NAMES):
        raise ValueError(f"num_classes must be <= {len(SHAPE_NAMES)}, got {num_classes}")
    if n < num_classes:
        raise ValueError(f"n ({n}) must be >= num_classes ({num_classes})")
    if channels not in (1, 3):
        raise ValueError(f"channels must be 1 or 3, got {channels}")

    gen = np.random.default_rng(seed)
    class_names = SHAPE_NAMES[:num_classes]
    examples = []
    for i in range(n):
        label = i % num_classes  # round-robin keeps counts within 1
        bg_amp = gen.uniform(0.0, 0.35)
        img = gen.uniform(0.0, bg_amp, size=(channels, side, side))
        r = gen.uniform(0.19, 0.30) * side
        cx = gen.uniform(r + 1, side - r - 1)
        cy = gen.uniform(r + 1, side - r - 1)
        color = gen.uniform(0.65, 1.0, size=channels)
        mask = _shape_predicate(class_names[label], side, cx, cy, r)
        img[:, mask] = color[:, None]
        examples.append(LabeledExample(
            image=np.clip(img, 0.0, 1.0).astype(np.float32),
            label=label,
            id=f"shapes-s{seed}-{i:05d}",
        ))
    tag = f"shapes(n={n},classes={num_classes},side={side},seed={seed},ch={channels})"
    return Dataset(examples=tuple(examples), class_names=tuple(class_names),
                   split="full", tag=tag)


def split_by_id_hash(dataset, train_fraction=0.8):
    """Deterministic train/test split keyed on a hash of each example id.

    Examples are ranked by the hash of their id and the lowest-ranked
    round(train_fraction * n) become the training side, so membership
    depends only on the set of ids and the fraction, never on ordering,
    and the split sizes are exact. Within each side the original dataset
    order is preserved.
    """
    train_fraction = float(train_fraction)
    if not (0.0 < train_fraction < 1.0):
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n_train = round(train_fraction * len(dataset))
    ranked = sorted(dataset, key=lambda ex: _id_rank(ex.id))
    train_ids = {ex.id for ex in ranked[:n_train]}
    train = [ex for ex in dataset if ex.id in train_ids]
    test = [ex for ex in dataset if ex.id not in train_ids]
    if not train or not test:
        raise DatasetError(
            f"split produced an empty side (train={len(train)}, test={len(test)})")
    return dataset.with_split(train, "train"), dataset.with_split(test, "test")


def _id_rank(example_id):
    digest = hashlib.sha1(example_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big"), example_id


def _decode_image(path, channels):
    try:
        with Image.open(path) as im:
            im = im.convert("RGB" if channels == 3 else "L")
            arr = np.asarray(im, dtype=np.float32) / 255.0
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageDecodeError(f"cannot decode image file {path}: {exc}") from exc
    if arr.ndim == 2:
        arr = arr[None]
    else:
        arr = arr.transpose(2, 0, 1)
    return np.ascontiguousarray(arr)


def _read_manifest(path):
    entries = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DatasetError(f"{path}:{lineno}: expected 'relative_path<TAB>class_name'")
        entries.append((parts[0], parts[1]))
    if not entries:
        raise DatasetError(f"manifest {path} lists no images")
    return entries


def load_image_folder(root, labels=None, channels=3):
    """Load a labeled dataset from disk.

    With `labels=None`, classes come from the `root/<class_name>/<file>`
    convention; otherwise `labels` is a manifest file of
    `relative_path<TAB>class_name` lines. Ids are relative POSIX paths and
    pixel values are scaled to [0, 1].
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} does not exist")

    if labels is not None:
        entries = _read_manifest(labels)
        class_names = tuple(sorted({cls for _, cls in entries}))
    else:
        class_dirs = sorted(d for d in root.iterdir() if d.is_dir())
        if not class_dirs:
            raise DatasetError(f"{root} contains no class subdirectories")
        entries = []
        empty = []
        for d in class_dirs:
            files = sorted(p for p in d.iterdir() if p.is_file())
            if not files:
                empty.append(d.name)
                continue
            entries.extend((p.relative_to(root).as_posix(), d.name) for p in files)
        if empty:
            raise DatasetError(f"empty class subdirectories: {', '.join(empty)}")
        class_names = tuple(d.name for d in class_dirs)

    index = {name: i for i, name in enumerate(class_names)}
    examples = []
    for rel, cls in entries:
        if cls not in index:
            raise DatasetError(f"manifest class {cls!r} missing from class list")
        arr = _decode_image(root / rel, channels)
        examples.append(LabeledExample(
            image=check_image(arr, channels=channels, name=rel),
            label=index[cls],
            id=rel,
        ))
    return Dataset(examples=tuple(examples), class_names=class_names,
                   split="full", tag=f"folder:{root.name}")


def export_dataset(dataset, out_dir):
    """Write one PNG per example plus a manifest in the loader's format."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for ex in dataset:
        cls = dataset.class_names[ex.label]
        (out_dir / cls).mkdir(exist_ok=True)
        rel = f"{cls}/{ex.id.replace('/', '__')}.png"
        arr = np.round(ex.image * 255.0).astype(np.uint8)
        if arr.shape[0] == 1:
            im = Image.fromarray(arr[0], mode="L")
        else:
            im = Image.fromarray(arr.transpose(1, 2, 0), mode="RGB")
        im.save(out_dir / rel)
        lines.append(f"{rel}\t{cls}")
    manifest = out_dir / MANIFEST_NAME
    manifest.write_text("\n".join(lines) + "\n")
    return manifest
