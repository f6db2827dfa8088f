# 위치 인코딩(PE) 생성 패키지
from pe3d.encoding.anchors import AnchorPoints, EncoderBank, encode_anchors
from pe3d.encoding.mlp import LinearParams, MLPParams
from pe3d.encoding.pe_grid import (
    PEGrid,
    TopkParams,
    pe2d,
    pe_camera_ray,
    pe_depth_point,
    pe_lidar_ray,
    pe_oracle_point,
    pe_topk,
)
from pe3d.encoding.point_encoder import encode_point, encode_point_backward, encode_points
from pe3d.encoding.sine import SineSpec, sine_encode
