# 장난감 검출기 패키지
from pe3d.detector.ablation import AblationCell, AblationOptions, AblationRow, ablation_suite, run_suite, suite_cells
from pe3d.detector.decoder import DecoderState, decode, decode_backward, decode_batch
from pe3d.detector.features import FeatureEmbedder, PointAwareFeatures, fuse_features
from pe3d.detector.trainer import TrainConfig, TrainResult, ToyDetector, center_loss, greedy_assign, train_toy
from pe3d.detector.variants import VariantEncoders, VariantSpec, build_scene_tokens
