# 깊이 빈 / 깊이 헤드 패키지
from pe3d.depth.bins import DepthBins, bracket, bracket_many, make_bins, parse_bins
from pe3d.depth.head import (
    DepthDistribution,
    DepthLossWeights,
    FusionWeight,
    depth_loss,
    dfl_loss,
    expected_depth,
    fuse_depth,
    smooth_l1,
)
from pe3d.depth.metrics import depth_metrics
from pe3d.depth.network import DepthHead
