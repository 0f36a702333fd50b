import numpy as np
import pytest

from nrdf import SystemModel


@pytest.fixture
def example3_model():
    """Scalar benchmark model (alpha, c, sigma_w^2, sigma_n^2) = (1.1, 0.5, 1, 1)."""
    return SystemModel.scalar(1.1, 0.5, 1.0, 1.0)


# Printed steady-state values for the scalar benchmark, 4-decimal precision.
EXAMPLE3_PI = 3.1215
EXAMPLE3_SIGMA = 1.7532
EXAMPLE3_SIGMA_BAR = 1.3683
EXAMPLE3_D = 2.7532
EXAMPLE3_RATE_BITS = 0.6832


@pytest.fixture
def example2_model():
    """3-state benchmark with a singular observation-noise block."""
    return SystemModel(
        A=np.diag([1.2, 1.2, 1.2]),
        C=[[0.8147, 0.9134, 0.2785],
           [0.9058, 0.6324, 0.5469],
           [0.1270, 0.0975, 0.9575]],
        Sigma_w=[[0.8895, 1.1744, 0.2309],
                 [1.1744, 1.8616, 0.2953],
                 [0.2309, 0.2953, 0.0614]],
        Sigma_n=np.diag([1.0, 1.0, 0.0]),
        Sigma_x0=np.eye(3))


EXAMPLE2_SIGMA_BAR = np.array([[2.6928, -0.7211, 0.1847],
                               [-0.7211, 4.0349, 0.3254],
                               [0.1847, 0.3254, 0.0645]])
EXAMPLE2_PI = np.array([[6.7910, -5.0291, 0.0798],
                        [-5.0291, 8.9742, 0.3939],
                        [0.0798, 0.3939, 0.0714]])
EXAMPLE2_SIGMA = np.array([[4.0983, -4.3080, -0.1049],
                           [-4.3080, 4.9393, 0.0684],
                           [-0.1049, 0.0684, 0.0069]])


def random_stable_model(rng: np.random.Generator, p: int = 3, m: int = 2,
                        rho: float = 0.8) -> SystemModel:
    """Well-conditioned random model with spectral radius scaled to rho."""
    A = rng.standard_normal((p, p))
    A *= rho / max(np.abs(np.linalg.eigvals(A)))
    C = rng.standard_normal((m, p))
    G = rng.standard_normal((p, p))
    Sw = G @ G.T + 0.1 * np.eye(p)
    H = rng.standard_normal((m, m))
    Sn = H @ H.T + 0.1 * np.eye(m)
    F = rng.standard_normal((p, p))
    Sx0 = F @ F.T + 0.1 * np.eye(p)
    return SystemModel(A=A, C=C, Sigma_w=Sw, Sigma_n=Sn, Sigma_x0=Sx0)
