"""
Shared fixtures for the anisomesh test suite.
"""

import os
import tempfile

import numpy as np
import pytest

# Log files from import-time logger setup land in a scratch directory
os.environ.setdefault("ANISOMESH_HOME", tempfile.mkdtemp(prefix="anisomesh-tests-"))

from anisomesh.core.mesh import build_mesh, structured_unit_square  # noqa: E402


@pytest.fixture(autouse=True)
def isolated_home(tmp_path, monkeypatch):
    """Keep config, history and logs out of the real home directory."""
    home = tmp_path / "home"
    monkeypatch.setenv("ANISOMESH_HOME", str(home))
    for key in ("ANISOMESH_ITERATIONS", "ANISOMESH_N_TARGET", "ANISOMESH_METRIC", "ANISOMESH_INITIAL_N"):
        monkeypatch.delenv(key, raising=False)
    return home


@pytest.fixture
def square4():
    return structured_unit_square(4)


@pytest.fixture
def square8():
    return structured_unit_square(8)


@pytest.fixture
def right_triangle():
    return np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


@pytest.fixture
def equilateral():
    return np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]])


@pytest.fixture
def two_triangle_square():
    return build_mesh(
        [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        [[0, 1, 2], [0, 2, 3]],
    )
