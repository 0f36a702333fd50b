import json

import pytest


@pytest.fixture
def vector_config():
    """3-state benchmark with a log sweep above its distortion floor (~9.0445)."""
    return {
        "schema_version": 1,
        "model": {
            "A": [[1.2, 0.0, 0.0], [0.0, 1.2, 0.0], [0.0, 0.0, 1.2]],
            "C": [[0.8147, 0.9134, 0.2785],
                  [0.9058, 0.6324, 0.5469],
                  [0.1270, 0.0975, 0.9575]],
            "Sigma_w": [[0.8895, 1.1744, 0.2309],
                        [1.1744, 1.8616, 0.2953],
                        [0.2309, 0.2953, 0.0614]],
            "Sigma_n": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]],
            "Sigma_x0": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        },
        "distortion": {"start": 9.1, "stop": 29.0, "count": 10, "spacing": "log"},
        "solvers": ["waterfill"],
        "eps": 1e-9,
    }


@pytest.fixture
def scalar_config():
    """Scalar benchmark (alpha, c, sigma_w^2, sigma_n^2) = (1.1, 0.5, 1, 1)."""
    return {
        "schema_version": 1,
        "model": {"A": [[1.1]], "C": [[0.5]], "Sigma_w": [[1.0]],
                  "Sigma_n": [[1.0]], "Sigma_x0": [[1.0]]},
        "distortion": {"D": 2.7532},
    }


@pytest.fixture
def finite_scalar_config():
    """Two-stage scalar instance with floor 0.55."""
    return {
        "schema_version": 1,
        "model": {"A": [[1.0]], "C": [[1.0]], "Sigma_w": [[1.0]],
                  "Sigma_n": [[1.0]], "Sigma_x0": [[1.0]]},
        "horizon": 1,
        "distortion": {"D": 0.9},
    }


@pytest.fixture
def write_config(tmp_path):
    def _write(raw, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(raw))
        return str(path)
    return _write
