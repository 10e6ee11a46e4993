"""Small deterministic synthetic catalogs for tests, demos and the CLI smoke run."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dataset import Catalog, Sample, TaskDataset, TaskDescriptor, write_manifest

# modality -> (intensity gain, texture frequency)
_MODALITY = {"T1": (1.0, 0.6), "T2": (0.7, 0.9), "T1ce": (1.2, 0.5), "FLAIR": (0.5, 1.3)}
# objective -> (radius fraction, z-offset fraction)
_OBJECTIVE = {"ED": (0.38, 0.0), "ET": (0.22, 0.1), "NCR": (0.3, -0.1),
              "WM": (0.42, 0.05), "GM": (0.34, -0.05), "CSF": (0.18, 0.0)}

DEFAULT_SOURCES = (
    ("01", "T1ce", "NCR", 4), ("01", "T2", "NCR", 3), ("01", "T1", "ED", 3),
    ("04", "T2", "ET", 2), ("04", "FLAIR", "ED", 3), ("06", "T1", "ET", 2),
)
DEFAULT_TARGET = ("16", "T2", "NCR", 2)


def _institute_shift(institute):
    h = sum(ord(c) * (k + 1) for k, c in enumerate(institute))
    return ((h % 7) - 3) / 30.0, ((h % 5) - 2) / 30.0


def synthetic_sample(desc: TaskDescriptor, shape, rng) -> Sample:
    gain, freq = _MODALITY.get(desc.modality, (1.0, 1.0))
    radius, zoff = _OBJECTIVE.get(desc.objective, (0.3, 0.0))
    sx, sy = _institute_shift(desc.institute)
    nx, ny, nz = shape
    x, y, z = np.meshgrid(np.linspace(-1, 1, nx), np.linspace(-1, 1, ny),
                          np.linspace(-1, 1, nz), indexing="ij")
    cx = sx + 0.05 * rng.standard_normal()
    cy = sy + 0.05 * rng.standard_normal()
    r = np.sqrt((x - cx) ** 2 + (y - cy) ** 2 + (z - zoff) ** 2)
    label = (r < radius * 2 * (1 + 0.08 * rng.standard_normal())).astype(np.uint8)
    image = (gain * np.exp(-2 * (x ** 2 + y ** 2)) * (1 + 0.3 * np.sin(freq * 6 * z))
             + 0.4 * label * gain + 0.05 * rng.standard_normal(shape))
    return Sample(image.astype(np.float32).astype(np.float64), label)


def synthetic_task(institute, modality, objective, n_samples, shape=(12, 12, 10), seed=0):
    desc = TaskDescriptor(institute, modality, objective)
    rng = np.random.default_rng([seed, sum(map(ord, desc.id))])
    return TaskDataset(desc, tuple(synthetic_sample(desc, shape, rng) for _ in range(n_samples)))


def synthetic_catalog(sources=DEFAULT_SOURCES, target=DEFAULT_TARGET, shape=(12, 12, 10), seed=0):
    src = tuple(synthetic_task(*s, shape=shape, seed=seed) for s in sources)
    tgt = synthetic_task(*target, shape=shape, seed=seed) if target else None
    return Catalog(src, tgt)


def write_fixture(directory, seed=0, shape=(12, 12, 10), reverse=False):
    """Write the bundled synthetic fixture; ``reverse`` lists tasks in the opposite order."""
    cat = synthetic_catalog(shape=shape, seed=seed)
    tasks = [(t, "source") for t in cat.sources] + [(cat.target, "target")]
    if reverse:
        tasks = tasks[::-1]
    path = Path(directory) / "manifest.json"
    write_manifest(path, tasks)
    return path
