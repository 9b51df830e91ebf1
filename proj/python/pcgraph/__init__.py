"""Predictive-coding graphs: masked energy-based networks of any topology.

Matrices follow the C++ core: one column per sample (lane), vertices along
rows, and weights indexed W[post, pre].
"""

from pathlib import Path

from ._core import *  # noqa: F401,F403
from ._core import load_idx

__all__ = [name for name in dir() if not name.startswith("_")]


def load_mnist(directory, split="train"):
    """(images, labels) from the four standard IDX files in `directory`."""
    prefix = "train" if split == "train" else "t10k"
    d = Path(directory)
    return load_idx(str(d / f"{prefix}-images-idx3-ubyte"), str(d / f"{prefix}-labels-idx1-ubyte"))
