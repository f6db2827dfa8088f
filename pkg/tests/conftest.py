import numpy as np
import pytest

from pe3d.geometry.camera import CameraParams, PerceptionRegion
from pe3d.simulation.scene import default_rig, front_object_scene


def pinhole(K=None, R=None, T=None, width=640, height=320, name="camera") -> CameraParams:
    """테스트용 카메라. 기본값은 f=500, 주점 (320, 160), 항등 자세."""
    if K is None:
        K = [[500.0, 0.0, 320.0], [0.0, 500.0, 160.0], [0.0, 0.0, 1.0]]
    return CameraParams(
        intrinsics=np.asarray(K, dtype=np.float64),
        rotation=np.eye(3) if R is None else np.asarray(R, dtype=np.float64),
        translation=np.zeros(3) if T is None else np.asarray(T, dtype=np.float64),
        width=width,
        height=height,
        name=name,
    )


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


@pytest.fixture
def cam():
    return pinhole()


@pytest.fixture
def region():
    return PerceptionRegion.default()


@pytest.fixture(scope="session")
def rig():
    return default_rig()


@pytest.fixture(scope="session")
def front_scene():
    return front_object_scene()
