import logging
import os
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.models.schemas import AblationGrid
from config.settings import settings
from pe3d.analysis.gradcheck import GradcheckResult, run_all
from pe3d.analysis.similarity import Reference, SimilarityMap, cohesion_metric, object_masks, object_reference, similarity_map
from pe3d.depth.bins import parse_bins
from pe3d.depth.head import DepthLossWeights
from pe3d.detector.ablation import CSV_COLUMNS, AblationCell, AblationOptions, AblationRow, ablation_suite, run_suite
from pe3d.detector.features import FeatureEmbedder
from pe3d.detector.trainer import attach_depth_predictions, fit_depth_head, prepare_views
from pe3d.detector.variants import VariantEncoders, VariantSpec, ViewData, view_pe_grid
from pe3d.encoding.pe_grid import PEGrid
from pe3d.errors import EmptyRegion
from pe3d.geometry.camera import CameraParams, PerceptionRegion
from pe3d.io.binary import write_depth_map, write_pe_grid
from pe3d.io.exports import write_csv, write_json, write_pgm, write_similarity_csv
from pe3d.ray_model import discrepancy_sweep
from pe3d.simulation.scene import SimScene

logger = logging.getLogger(__name__)


class ExperimentService:
    """CLI 와 HTTP API 가 공유하는 실험 작업"""

    def __init__(self, seed: int = settings.default_seed, embed_dim: int = settings.embed_dim):
        self.seed = seed
        self.embed_dim = embed_dim

    def scene_views(
        self,
        scene: SimScene,
        cameras: Sequence[CameraParams],
        variant: Optional[VariantSpec] = None,
        stride: int = settings.feature_stride,
    ) -> List[ViewData]:
        """카메라별 렌더링 + 특징. 깊이 기반 변형이면 이 장면으로 깊이 헤드를 학습해 예측을 붙인다."""
        embedder = FeatureEmbedder(self.embed_dim, seed=self.seed)
        views = prepare_views([scene], cameras, embedder, np.random.default_rng(self.seed), stride)
        if variant is not None and variant.needs_depth_head:
            head = fit_depth_head(
                [scene], views, parse_bins(settings.depth_head_bins), DepthLossWeights(), self.seed, stride=stride
            )
            attach_depth_predictions(views, head)
        return views[0]

    def pe_grids(
        self,
        variant: VariantSpec,
        cameras: Sequence[CameraParams],
        region: PerceptionRegion,
        scene: SimScene,
        stride: int = settings.feature_stride,
    ) -> Tuple[List[PEGrid], List[ViewData]]:
        views = self.scene_views(scene, cameras, variant, stride)
        encoders = VariantEncoders.create(variant, self.embed_dim, self.seed)
        head_bins = parse_bins(settings.depth_head_bins) if variant.needs_depth_head else None
        grids = [view_pe_grid(variant, view, encoders, region, stride, head_bins) for view in views]
        return grids, views

    def render(
        self, cameras: Sequence[CameraParams], scene: SimScene, out_dir: str, stride: int = settings.feature_stride
    ) -> Dict:
        """카메라별 DPTH 깊이 맵과 annotations.json"""
        os.makedirs(out_dir, exist_ok=True)
        views = self.scene_views(scene, cameras, stride=stride)
        files = []
        for view in views:
            path = os.path.join(out_dir, f"{view.cam.name}.dpth")
            write_depth_map(path, view.rendered.depth, view.rendered.valid)
            files.append(path)

        annotations = {
            "cameras": [cam.name for cam in cameras],
            "stride": stride,
            "objects": [
                {"center": obj.center.tolist(), "class_id": obj.class_id, "primitive_index": obj.primitive_index}
                for obj in scene.objects
            ],
        }
        write_json(os.path.join(out_dir, "annotations.json"), annotations)
        logger.info(f"렌더링 완료: {len(files)}개 깊이 맵 -> {out_dir}")
        return {"depth_maps": files, "objects": len(annotations["objects"])}

    def encode(
        self,
        variant: VariantSpec,
        cameras: Sequence[CameraParams],
        region: PerceptionRegion,
        scene: SimScene,
        out_dir: str,
        stride: int = settings.feature_stride,
    ) -> Dict:
        os.makedirs(out_dir, exist_ok=True)
        grids, views = self.pe_grids(variant, cameras, region, scene, stride)
        files = []
        for grid, view in zip(grids, views):
            path = os.path.join(out_dir, f"{view.cam.name}.pe3d")
            write_pe_grid(path, grid)
            files.append(path)
        masked = int(sum(np.count_nonzero(grid.mask) for grid in grids))
        logger.info(f"PE 인코딩 완료: {variant.kind} {variant.params}, 마스크 셀 {masked}개")
        return {"pe_grids": files, "masked_cells": masked}

    def similarity(
        self,
        variant: VariantSpec,
        cameras: Sequence[CameraParams],
        region: PerceptionRegion,
        scene: SimScene,
        out_dir: str,
        ref: Optional[Reference] = None,
        stride: int = settings.feature_stride,
    ) -> Dict:
        """유사도 맵 CSV + 뷰별 PGM, 기준 셀이 객체 위면 응집도도 기록. ref 가 없으면 auto-object."""
        os.makedirs(out_dir, exist_ok=True)
        grids, views = self.pe_grids(variant, cameras, region, scene, stride)
        rendered = [view.rendered for view in views]
        if ref is None:
            ref, _ = object_reference(rendered, grids)
        sim = similarity_map(grids, ref, center=settings.similarity_center)
        summary = {
            "variant": variant.kind,
            "params": variant.params,
            "reference": list(ref),
            "seed": self.seed,
            "centered": settings.similarity_center,
        }
        summary.update(self._cohesion(sim, rendered))

        write_similarity_csv(os.path.join(out_dir, "similarity.csv"), sim)
        for i, values in enumerate(sim.values):
            write_pgm(os.path.join(out_dir, f"similarity_{i}.pgm"), values)
        write_json(os.path.join(out_dir, "summary.json"), summary)
        return summary

    def _cohesion(self, sim: SimilarityMap, rendered) -> Dict:
        view, u, v = sim.reference
        primitive = int(rendered[view].primitive_map[v, u])
        if primitive < 0 or rendered[view].class_map[v, u] < 2:
            return {}
        try:
            inside, background, margin = cohesion_metric(sim, object_masks(rendered, primitive))
        except EmptyRegion as e:
            # 기준 셀 말고는 객체 셀이 없으면 (거친 stride) 응집도를 생략한다
            logger.warning(f"응집도 생략: {e}")
            return {}
        return {"object_mean": inside, "background_mean": background, "margin": margin}

    def sweep(
        self, alpha_deg: float, d_lc: float, delta: float, d_min: float, d_max: float, steps: int,
        out: Optional[str] = None,
    ) -> List[Dict[str, float]]:
        d, dis = discrepancy_sweep(np.deg2rad(alpha_deg), d_lc, delta, d_min, d_max, steps)
        rows = [{"d": float(a), "Dis": float(b)} for a, b in zip(d, dis)]
        if out:
            write_csv(out, rows, ("d", "Dis"))
        return rows

    def ablate_suite(self, suite: str, num_seeds: int, out: Optional[str] = None) -> List[AblationRow]:
        rows = run_suite(suite, num_seeds, self.seed)
        if out:
            write_csv(out, [row.as_dict() for row in rows], CSV_COLUMNS)
        return rows

    def ablate_grid(self, grid: AblationGrid, out: Optional[str] = None) -> List[AblationRow]:
        cells = [
            AblationCell(VariantSpec.parse(text, encoder_mode=grid.encoder_mode), train_encoder=grid.train_encoder)
            for text in grid.variants
        ]
        options = AblationOptions(
            train_scenes=grid.train_scenes,
            eval_scenes=grid.eval_scenes,
            steps=grid.steps,
            stride=grid.stride,
            optimizer=grid.optimizer,
            learning_rate=grid.learning_rate,
        )
        seeds = range(grid.base_seed, grid.base_seed + grid.seeds)
        rows = ablation_suite(cells, seeds, options)
        if out:
            write_csv(out, [row.as_dict() for row in rows], CSV_COLUMNS)
        return rows

    def gradcheck(self, instances: int) -> List[GradcheckResult]:
        return run_all(self.seed, instances)
