# 서라운드 뷰 시뮬레이터 패키지
from pe3d.simulation.primitives import Box, GroundPlane, Sphere
from pe3d.simulation.renderer import (
    RenderedView,
    SparseDepth,
    cast_pixels,
    complete_depth,
    project_sparse,
    render_depth,
    simulate_lidar,
)
from pe3d.simulation.scene import SimScene, default_rig, front_object_scene, random_scene, random_scenes
