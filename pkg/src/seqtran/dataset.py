"""Task catalogs: manifest loading, volume I/O, validation and resampling.

Volumes on disk are raw little-endian arrays, x varying fastest, with the
shape declared in the manifest. Images are float32, labels uint8.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ManifestError, ValidationError

MANIFEST_VERSION = 1
IMAGE_DTYPE = np.dtype("<f4")
LABEL_DTYPE = np.dtype("u1")


@dataclass(frozen=True)
class TaskDescriptor:
    institute: str
    modality: str
    objective: str

    def __post_init__(self):
        for name in ("institute", "modality", "objective"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value:
                raise ValidationError(f"task {name} must be a non-empty string")

    @property
    def id(self) -> str:
        return f"{self.institute}-{self.modality}-{self.objective}"

    @classmethod
    def parse(cls, task_id: str) -> "TaskDescriptor":
        """Split ``institute-modality-objective``; the institute may itself contain dashes."""
        parts = task_id.rsplit("-", 2)
        if len(parts) != 3:
            raise ValidationError(f"task id {task_id!r} is not institute-modality-objective")
        return cls(*parts)


@dataclass(frozen=True, eq=False)
class Sample:
    """One image/label pair; arrays are indexed ``[x, y, z]``."""

    image: np.ndarray
    label: np.ndarray

    def __post_init__(self):
        if self.image.ndim != 3 or self.image.shape != self.label.shape:
            raise ValidationError(
                f"image shape {self.image.shape} and label shape {self.label.shape} differ")
        if min(self.image.shape) < 1:
            raise ValidationError("sample has a zero-sized axis")
        if not np.all(np.isfinite(self.image)):
            raise ValidationError("image contains NaN or Inf")
        if not np.all((self.label == 0) | (self.label == 1)):
            raise ValidationError("non-binary label")

    @property
    def shape(self):
        return self.image.shape

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return (self.image.dtype == other.image.dtype
                and np.array_equal(self.image, other.image)
                and np.array_equal(self.label, other.label))

    __hash__ = None


@dataclass(frozen=True)
class TaskDataset:
    descriptor: TaskDescriptor
    samples: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if not self.samples:
            raise ValidationError(f"task {self.descriptor.id} has no samples")
        shape = self.samples[0].shape
        for k, s in enumerate(self.samples):
            if s.shape != shape:
                raise ManifestError(f"sample shape {s.shape} differs from {shape}",
                                    self.descriptor.id, k)

    @property
    def id(self) -> str:
        return self.descriptor.id

    @property
    def sample_count(self) -> int:
        return len(self.samples)

    @property
    def shape(self):
        return self.samples[0].shape


@dataclass(frozen=True)
class Catalog:
    sources: tuple
    target: TaskDataset | None = None

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(sorted(self.sources, key=lambda t: t.id)))
        ids = [t.id for t in self.sources]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise ManifestError("duplicate task id", dup)
        if self.target is not None and self.target.id in ids:
            raise ManifestError("target id is also a source", self.target.id)

    def task(self, task_id: str) -> TaskDataset:
        for t in self.all_tasks():
            if t.id == task_id:
                return t
        raise KeyError(task_id)

    def all_tasks(self):
        return list(self.sources) + ([self.target] if self.target is not None else [])


# -- volume I/O -------------------------------------------------------------

def read_volume(path, shape, dtype, task_id=None, sample_index=None) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"missing file {path}", task_id, sample_index)
    dtype = np.dtype(dtype)
    expected = int(np.prod(shape)) * dtype.itemsize
    size = path.stat().st_size
    if size != expected:
        raise ManifestError(
            f"shape mismatch: {path.name} has {size} bytes, shape {tuple(shape)} needs {expected}",
            task_id, sample_index)
    flat = np.fromfile(path, dtype=dtype)
    return np.ascontiguousarray(flat.reshape(tuple(shape), order="F"))


def write_volume(path, array, dtype) -> None:
    array = np.asarray(array)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    array.astype(np.dtype(dtype)).ravel(order="F").tofile(path)


def minmax_scale(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    lo, hi = image.min(), image.max()
    if hi == lo:
        return np.zeros_like(image)
    return (image - lo) / (hi - lo)


def _load_sample(base, spec, task_id, k):
    try:
        shape = tuple(int(v) for v in spec["shape"])
        image_rel, label_rel = spec["image"], spec["label"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"malformed sample entry: {exc}", task_id, k) from None
    if len(shape) != 3 or min(shape) < 1:
        raise ManifestError(f"shape must be three positive integers, got {shape}", task_id, k)
    image = read_volume(base / image_rel, shape, IMAGE_DTYPE, task_id, k)
    label = read_volume(base / label_rel, shape, LABEL_DTYPE, task_id, k)
    if not np.all(np.isfinite(image)):
        raise ManifestError("image contains NaN or Inf", task_id, k)
    if not np.all(label <= 1):
        raise ManifestError("non-binary label", task_id, k)
    return Sample(minmax_scale(image), label.astype(np.uint8))


def load_manifest(path, jobs: int = 1) -> Catalog:
    """Load a JSON manifest and every volume it references."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ManifestError(f"missing file {path}") from None
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from None
    if doc.get("version") != MANIFEST_VERSION:
        raise ManifestError(f"unsupported manifest version {doc.get('version')!r}")
    base = path.parent

    entries = []
    seen = set()
    for entry in doc.get("tasks", []):
        try:
            desc = TaskDescriptor(entry["institute"], entry["modality"], entry["objective"])
        except KeyError as exc:
            raise ManifestError(f"task entry missing {exc}", entry.get("id")) from None
        if entry.get("id", desc.id) != desc.id:
            raise ManifestError(f"id does not match fields (expected {desc.id})", entry.get("id"))
        role = entry.get("role", "source")
        if role not in ("source", "target"):
            raise ManifestError(f"unknown role {role!r}", desc.id)
        if desc.id in seen:
            raise ManifestError("duplicate task id", desc.id)
        seen.add(desc.id)
        samples = entry.get("samples") or []
        if not samples:
            raise ManifestError("task has no samples", desc.id)
        entries.append((role, desc, samples))
    entries.sort(key=lambda e: (e[0], e[1].id))

    jobs_list = [(desc.id, k, spec) for _, desc, samples in entries for k, spec in enumerate(samples)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            loaded = list(pool.map(lambda j: _load_sample(base, j[2], j[0], j[1]), jobs_list))
    else:
        loaded = [_load_sample(base, spec, tid, k) for tid, k, spec in jobs_list]

    it = iter(loaded)
    sources, targets = [], []
    for role, desc, samples in entries:
        task = TaskDataset(desc, tuple(next(it) for _ in samples))
        (targets if role == "target" else sources).append(task)
    if len(targets) > 1:
        raise ManifestError("manifest declares more than one target")
    return Catalog(tuple(sources), targets[0] if targets else None)


def write_manifest(path, tasks, volume_dir="volumes") -> None:
    """Write ``tasks`` (list of ``(TaskDataset, role)``) as a manifest plus raw volumes.

    Images are written as-is (float32), so a reload min-max scales them.
    """
    path = Path(path)
    base = path.parent
    doc = {"version": MANIFEST_VERSION, "tasks": []}
    for task, role in tasks:
        entry = {"id": task.id, "institute": task.descriptor.institute,
                 "modality": task.descriptor.modality, "objective": task.descriptor.objective,
                 "role": role, "samples": []}
        for k, s in enumerate(task.samples):
            img = f"{volume_dir}/{task.id}_{k:03d}_image.raw"
            lab = f"{volume_dir}/{task.id}_{k:03d}_label.raw"
            write_volume(base / img, s.image, IMAGE_DTYPE)
            write_volume(base / lab, s.label, LABEL_DTYPE)
            entry["samples"].append({"image": img, "label": lab, "shape": list(s.shape)})
        doc["tasks"].append(entry)
    base.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n")


# -- resampling -------------------------------------------------------------

def _linear_axis(arr, axis, n_out):
    n_in = arr.shape[axis]
    if n_in == n_out:
        return arr
    pos = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    pos = np.clip(pos, 0.0, n_in - 1)
    lo = np.floor(pos).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = pos - lo
    shape = [1] * arr.ndim
    shape[axis] = n_out
    frac = frac.reshape(shape)
    return np.take(arr, lo, axis=axis) * (1.0 - frac) + np.take(arr, hi, axis=axis) * frac


def nearest_index(n_in: int, n_out: int) -> np.ndarray:
    """Source index for each output index under centre-aligned nearest neighbour."""
    idx = np.floor((np.arange(n_out) + 0.5) * (n_in / n_out)).astype(np.intp)
    return np.minimum(idx, n_in - 1)


def resample_to(sample: Sample, shape) -> Sample:
    """Resample to ``shape``: trilinear for the image, nearest neighbour for the label."""
    shape = tuple(int(v) for v in shape)
    if len(shape) != 3 or min(shape) < 1:
        raise ValidationError(f"target shape must be three positive integers, got {shape}")
    if shape == sample.shape:
        return sample
    image = sample.image.astype(np.float64)
    label = sample.label
    for axis, n_out in enumerate(shape):
        image = _linear_axis(image, axis, n_out)
        label = np.take(label, nearest_index(label.shape[axis], n_out), axis=axis)
    return Sample(np.ascontiguousarray(image), np.ascontiguousarray(label))


def resample_task(task: TaskDataset, shape) -> TaskDataset:
    shape = tuple(shape)
    if task.shape == shape:
        return task
    return TaskDataset(task.descriptor, tuple(resample_to(s, shape) for s in task.samples))


def common_grid(task_i: TaskDataset, task_j: TaskDataset):
    """Resample both tasks to the element-wise minimum of their shapes."""
    shape = tuple(min(a, b) for a, b in zip(task_i.shape, task_j.shape))
    return resample_task(task_i, shape), resample_task(task_j, shape)
