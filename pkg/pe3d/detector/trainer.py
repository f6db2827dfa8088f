"""장난감 검출기 학습

장면 렌더링 -> 특징 임베딩 -> (필요하면) 깊이 헤드 학습 -> 변형별 토큰 -> 디코더 학습.
손실은 예측 중심과 정답 중심의 탐욕 매칭 후 정규화 좌표 제곱 오차 평균이고,
보고하는 오차는 같은 매칭의 미터 단위 유클리드 거리 평균이다.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union
import logging

import numpy as np

from config.settings import settings
from pe3d.depth.bins import DepthBins, parse_bins
from pe3d.depth.head import DepthLossWeights
from pe3d.depth.network import DepthHead
from pe3d.detector.decoder import DecoderState, decode_backward, decode_batch
from pe3d.detector.features import FeatureEmbedder
from pe3d.detector.variants import (
    TokenBatch,
    VariantEncoders,
    VariantSpec,
    ViewData,
    batch_pe,
    build_scene_tokens,
)
from pe3d.encoding.mlp import MLPParams
from pe3d.encoding.point_encoder import encode_point_sets, encode_point_sets_backward
from pe3d.errors import Pe3dError
from pe3d.geometry.camera import CameraParams, PerceptionRegion
from pe3d.optim import make_optimizer
from pe3d.simulation.renderer import project_sparse, render_depth, simulate_lidar
from pe3d.simulation.scene import SimScene, default_rig

logger = logging.getLogger(__name__)

DECODER_SEED_OFFSET = 7


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = settings.learning_rate
    steps: int = settings.train_steps
    seed: int = settings.default_seed
    variant: str = "oracle-point"
    encoder_mode: str = "shared"
    optimizer: str = settings.optimizer
    num_queries: int = settings.num_queries
    embed_dim: int = settings.embed_dim
    stride: int = settings.feature_stride
    train_encoder: bool = False
    depth_loss: Tuple[float, float] = (settings.lambda_sm, settings.lambda_dfl)
    depth_head_steps: int = settings.depth_head_steps

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise Pe3dError(f"학습률은 0 보다 커야 합니다: {self.learning_rate}")
        if self.steps < 0:
            raise Pe3dError(f"학습 스텝 수는 음수일 수 없습니다: {self.steps}")
        if self.embed_dim % 4:
            raise Pe3dError(f"임베딩 차원은 4 의 배수여야 합니다: {self.embed_dim}")

    def variant_spec(self) -> VariantSpec:
        return VariantSpec.parse(self.variant, encoder_mode=self.encoder_mode)


def greedy_assign(pred: np.ndarray, gt: np.ndarray) -> List[Tuple[int, int]]:
    """가장 가까운 (예측, 정답) 쌍부터 차례로 고정. 정답 순서로 정렬된 (k, m) 목록."""
    if gt.shape[0] > pred.shape[0]:
        raise Pe3dError(f"정답 객체 {gt.shape[0]} 개가 쿼리 수 {pred.shape[0]} 보다 많습니다")
    dist = np.sum((pred[:, None, :] - gt[None, :, :]) ** 2, axis=-1)
    pairs = []
    for _ in range(gt.shape[0]):
        k, m = np.unravel_index(np.argmin(dist), dist.shape)
        pairs.append((int(k), int(m)))
        dist[k, :] = np.inf
        dist[:, m] = np.inf
    return sorted(pairs, key=lambda pair: pair[1])


def center_loss(centers: np.ndarray, targets: Sequence[np.ndarray]) -> Tuple[float, np.ndarray]:
    """장면 평균 (객체 평균 제곱 오차), 매칭은 상수로 보고 미분한다"""
    grad = np.zeros_like(centers)
    total = 0.0
    scenes = len(targets)
    for s, gt in enumerate(targets):
        if not len(gt):
            continue
        ks, ms = (np.array(idx) for idx in zip(*greedy_assign(centers[s], gt)))
        diff = centers[s, ks] - gt[ms]
        total += float(np.sum(diff ** 2)) / len(gt)
        grad[s, ks] = 2.0 * diff / (len(gt) * scenes)
    return total / scenes, grad


def center_error_m(centers: np.ndarray, targets: Sequence[np.ndarray], region: PerceptionRegion) -> float:
    errors = []
    for s, gt in enumerate(targets):
        if not len(gt):
            continue
        pairs = greedy_assign(centers[s], gt)
        pred = region.denormalize(centers[s, [k for k, _ in pairs]])
        truth = region.denormalize(gt[[m for _, m in pairs]])
        errors.append(float(np.mean(np.linalg.norm(pred - truth, axis=-1))))
    if not errors:
        raise Pe3dError("정답 객체가 있는 장면이 없습니다")
    return float(np.mean(errors))


def _add_mlp_grads(grads: Dict[str, np.ndarray], group: str, g: MLPParams) -> None:
    for name, value in g.arrays(prefix=f"enc.{group}.").items():
        grads[name] = grads[name] + value if name in grads else value


@dataclass(eq=False)
class ToyDetector:
    state: DecoderState
    encoders: VariantEncoders
    variant: VariantSpec

    def params(self, train_encoder: bool = False) -> Dict[str, np.ndarray]:
        params = self.state.arrays()
        if train_encoder:
            params.update(self.encoders.arrays())
        return params

    def _anchor_sets(self) -> np.ndarray:
        return self.state.anchors.coords.reshape(-1, 1, 3)

    def predict(self, batch: TokenBatch, pe: Optional[np.ndarray] = None) -> np.ndarray:
        """정규화 중심 (S, K, 3)"""
        pe = batch_pe(batch, self.encoders) if pe is None else pe
        anchor_pe, _ = encode_point_sets(self._anchor_sets(), self.encoders.anchor, self.encoders.spec)
        centers, _ = decode_batch(self.state, anchor_pe, batch.features + pe, batch.mask)
        return centers

    def loss_and_grads(
        self,
        batch: TokenBatch,
        pe: Optional[np.ndarray] = None,
        train_encoder: bool = False,
        tokens: Optional[np.ndarray] = None,
    ) -> Tuple[float, Dict[str, np.ndarray]]:
        """디코더와 앵커 (train_encoder 면 인코더까지) 의 해석적 기울기

        tokens 는 인코더가 고정일 때 미리 더해 둔 features + pe 이다.
        """
        spec = self.encoders.spec
        anchor_sets = self._anchor_sets()
        if train_encoder or tokens is None:
            if pe is None or train_encoder:
                pe = batch_pe(batch, self.encoders)
            tokens = batch.features + pe
        anchor_pe, _ = encode_point_sets(anchor_sets, self.encoders.anchor, spec)
        centers, cache = decode_batch(self.state, anchor_pe, tokens, batch.mask)
        loss, g_centers = center_loss(centers, batch.centers)

        need_tokens = train_encoder and batch.point_sets is not None
        grads, g_anchor_pe, g_tokens = decode_backward(self.state, cache, g_centers, need_tokens)
        g_anchor, g_anchor_mlp = encode_point_sets_backward(anchor_sets, self.encoders.anchor, spec, g_anchor_pe)
        grads["anchors"] = g_anchor.reshape(-1, 3)
        if not train_encoder:
            return loss, grads

        encoder_grads: Dict[str, np.ndarray] = {}
        if batch.point_sets is not None:
            s, n, m, _ = batch.point_sets.shape
            _, g_feature = encode_point_sets_backward(
                batch.point_sets.reshape(s * n, m, 3), self.encoders.feature, spec, g_tokens.reshape(s * n, -1)
            )
            _add_mlp_grads(encoder_grads, "feature", g_feature)
        # 공유 모드에서는 앵커 경로 기울기가 같은 파라미터에 더해진다
        anchor_group = "feature" if self.encoders.anchor is self.encoders.feature else "anchor"
        _add_mlp_grads(encoder_grads, anchor_group, g_anchor_mlp)
        for name, value in self.encoders.arrays().items():
            grads[name] = encoder_grads.get(name, np.zeros_like(value))
        return loss, grads

    def error_m(self, batch: TokenBatch, region: PerceptionRegion, pe: Optional[np.ndarray] = None) -> float:
        return center_error_m(self.predict(batch, pe), batch.centers, region)


@dataclass(eq=False)
class TrainResult:
    detector: ToyDetector
    loss_history: List[float]
    train_error_m: float
    final_error_m: float
    depth_head: Optional[DepthHead] = None
    depth_views: List[List[ViewData]] = field(default_factory=list)


def prepare_views(
    scenes: Sequence[SimScene],
    rig: Sequence[CameraParams],
    embedder: FeatureEmbedder,
    rng: np.random.Generator,
    stride: int = settings.feature_stride,
) -> List[List[ViewData]]:
    scene_views = []
    for scene in scenes:
        views = []
        for cam in rig:
            rendered = render_depth(scene, cam, stride=stride)
            views.append(ViewData(cam=cam, rendered=rendered, features=embedder.embed(rendered, rng)))
        scene_views.append(views)
    return scene_views


def fit_depth_head(
    scenes: Sequence[SimScene],
    scene_views: Sequence[Sequence[ViewData]],
    bins: DepthBins,
    weights: DepthLossWeights,
    seed: int = 0,
    steps: int = settings.depth_head_steps,
    stride: int = settings.feature_stride,
) -> DepthHead:
    """시뮬레이션 LiDAR 를 투영한 희소 깊이로 깊이 헤드를 학습"""
    feats, gts, valids = [], [], []
    for scene, views in zip(scenes, scene_views):
        cloud = simulate_lidar(scene)
        for view in views:
            sparse = project_sparse(cloud, view.cam, stride=stride)
            c = view.features.shape[0]
            feats.append(view.features.reshape(c, -1).T)
            gts.append(sparse.depth.ravel())
            valids.append(sparse.valid.ravel())

    head = DepthHead(feats[0].shape[1], bins, seed=seed)
    head.fit(np.concatenate(feats), np.concatenate(gts), np.concatenate(valids), weights, steps=steps)
    return head


def attach_depth_predictions(scene_views: Sequence[Sequence[ViewData]], head: DepthHead) -> None:
    for views in scene_views:
        for view in views:
            view.pred_depth, view.probs = head.predict_map(view.features)


def build_batch(
    scenes: Sequence[SimScene],
    scene_views: Sequence[Sequence[ViewData]],
    variant: VariantSpec,
    encoders: VariantEncoders,
    stride: int = settings.feature_stride,
    head_bins: Optional[DepthBins] = None,
) -> TokenBatch:
    return TokenBatch.stack([
        build_scene_tokens(variant, views, scene.centers(), encoders, scene.region, stride, head_bins)
        for scene, views in zip(scenes, scene_views)
    ])


def train_toy(
    scenes: Sequence[SimScene],
    variant: Union[VariantSpec, str, None] = None,
    cfg: TrainConfig = TrainConfig(),
    eval_scenes: Optional[Sequence[SimScene]] = None,
    rig: Optional[Sequence[CameraParams]] = None,
) -> TrainResult:
    """학습 후 최종 중심 오차 (미터) 를 반환. eval_scenes 가 있으면 그 오차가 final_error_m 이다."""
    if not scenes:
        raise Pe3dError("학습 장면이 없습니다")
    if variant is None:
        variant = cfg.variant_spec()
    elif isinstance(variant, str):
        variant = VariantSpec.parse(variant, encoder_mode=cfg.encoder_mode)
    rig = rig or default_rig()
    region = scenes[0].region

    rng = np.random.default_rng(cfg.seed)
    embedder = FeatureEmbedder(cfg.embed_dim, seed=cfg.seed)
    train_views = prepare_views(scenes, rig, embedder, rng, cfg.stride)
    eval_views = prepare_views(eval_scenes, rig, embedder, rng, cfg.stride) if eval_scenes else None

    head = None
    head_bins = None
    if variant.needs_depth_head:
        head_bins = parse_bins(settings.depth_head_bins)
        weights = DepthLossWeights(*(variant.loss_weights or cfg.depth_loss))
        head = fit_depth_head(scenes, train_views, head_bins, weights, cfg.seed, cfg.depth_head_steps, cfg.stride)
        attach_depth_predictions(train_views, head)
        if eval_views:
            attach_depth_predictions(eval_views, head)

    encoders = VariantEncoders.create(variant, cfg.embed_dim, cfg.seed)
    batch = build_batch(scenes, train_views, variant, encoders, cfg.stride, head_bins)
    detector = ToyDetector(
        state=DecoderState.init(cfg.num_queries, cfg.embed_dim, cfg.seed + DECODER_SEED_OFFSET),
        encoders=encoders,
        variant=variant,
    )
    # 인코더가 고정이면 PE 는 한 번만 계산한다
    pe = None if cfg.train_encoder else batch_pe(batch, encoders)
    tokens = None if pe is None else batch.features + pe

    logger.info(f"학습 시작: 변형={variant.kind} {variant.params}, 장면 {batch.size}개, 스텝 {cfg.steps}")
    opt = make_optimizer(cfg.optimizer, cfg.learning_rate)
    params = detector.params(cfg.train_encoder)
    history: List[float] = []
    report_every = max(1, cfg.steps // 5)
    for step in range(cfg.steps):
        loss, grads = detector.loss_and_grads(batch, pe, cfg.train_encoder, tokens)
        history.append(loss)
        opt.step(params, grads)
        detector.state.anchors.clamp_()
        if (step + 1) % report_every == 0:
            logger.info(f"스텝 {step + 1}/{cfg.steps}: 손실 {loss:.6f}")

    train_error = detector.error_m(batch, region, None if cfg.train_encoder else pe)
    final_error = train_error
    if eval_views:
        eval_batch = build_batch(eval_scenes, eval_views, variant, encoders, cfg.stride, head_bins)
        final_error = detector.error_m(eval_batch, region)
    logger.info(f"학습 완료: 학습 오차 {train_error:.3f} m, 최종 오차 {final_error:.3f} m")

    return TrainResult(
        detector=detector,
        loss_history=history,
        train_error_m=train_error,
        final_error_m=final_error,
        depth_head=head,
        depth_views=(eval_views or train_views) if head is not None else [],
    )
