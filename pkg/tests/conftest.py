import os
from pathlib import Path

import pytest

_MNIST_FILES = ("train-images", "train-labels", "t10k-images", "t10k-labels")


def find_mnist_dir() -> Path | None:
    """Directory with the four canonical IDX files, or None.

    Looks at $MNIST_DIR first, then <repo>/data/mnist.  Both dotted and
    dashed file name conventions are accepted.
    """
    candidates = []
    if os.environ.get("MNIST_DIR"):
        candidates.append(Path(os.environ["MNIST_DIR"]))
    candidates.append(Path(__file__).resolve().parent.parent / "data" / "mnist")
    for cand in candidates:
        if not cand.is_dir():
            continue
        present = {p.name.split(".")[0].rsplit("-idx", 1)[0] for p in cand.iterdir()}
        if all(any(name.startswith(stem) for name in present) for stem in _MNIST_FILES):
            return cand
    return None


@pytest.fixture(scope="session")
def mnist_dir() -> Path:
    found = find_mnist_dir()
    if found is None:
        pytest.skip("MNIST IDX files not found; set MNIST_DIR or place them "
                    "under data/mnist/ (see README)")
    return found
