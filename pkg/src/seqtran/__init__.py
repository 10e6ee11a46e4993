"""Task-affinity graphs and optimal sequential transfer paths for medical
image segmentation tasks."""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402

__all__ = ["BACKEND", "__version__"]
