import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from schwarzdd import SparseMatrix, build_graph, extend_overlap  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def tri6():
    from oracles import tridiag

    return SparseMatrix.from_dense(tridiag(6))


@pytest.fixture
def path_layout(tri6):
    parts = [np.array([0, 1, 2]), np.array([3, 4, 5])]
    return extend_overlap(build_graph(tri6), parts)
