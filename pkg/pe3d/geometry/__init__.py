# 핀홀 카메라 기하 패키지
from pe3d.geometry.camera import (
    CameraParams,
    PerceptionRegion,
    back_project,
    back_project_points,
    project,
    project_points,
)
from pe3d.geometry.grid import (
    PointGrid3D,
    back_project_grid,
    normalize_grid,
    normalize_points,
    pixel_centers,
)
