"""ablation 실행기: (PE 변형 x 시드) 셀마다 train_toy 를 돌려 CSV 행을 만든다

시드 s 의 학습 장면은 default_rng(s), 평가 장면은 default_rng(s + EVAL_SEED_OFFSET) 에서 뽑되
모든 객체가 min_object_cells 셀 이상 보이는 장면만 쓴다.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence
import logging

import numpy as np

from config.settings import settings
from pe3d.depth.metrics import depth_metrics
from pe3d.detector.trainer import TrainConfig, TrainResult, train_toy
from pe3d.detector.variants import VariantSpec
from pe3d.errors import Pe3dError
from pe3d.geometry.camera import CameraParams
from pe3d.simulation.renderer import object_cell_counts
from pe3d.simulation.scene import SimScene, default_rig, random_scene

logger = logging.getLogger(__name__)

EVAL_SEED_OFFSET = 10_000
MAX_DRAWS_PER_SCENE = 50
CSV_COLUMNS = ("variant", "params", "seed", "steps", "final_error_m")
DEPTH_METRIC_COLUMNS = ("abs_rel", "sq_rel", "rmse", "log10", "silog")


@dataclass(frozen=True)
class AblationCell:
    variant: VariantSpec
    train_encoder: bool = False

    @property
    def params(self) -> str:
        params = self.variant.params
        if self.train_encoder:
            params = ";".join(filter(None, [params, "encoder-trained"]))
        return params


@dataclass(frozen=True)
class AblationOptions:
    train_scenes: int = settings.ablation_train_scenes
    eval_scenes: int = settings.ablation_eval_scenes
    steps: int = settings.train_steps
    stride: int = settings.ablation_stride
    optimizer: str = settings.ablation_optimizer
    learning_rate: float = settings.ablation_learning_rate
    num_objects: int = 1
    min_object_cells: int = settings.ablation_min_object_cells


@dataclass
class AblationRow:
    variant: str
    params: str
    seed: int
    steps: int
    final_error_m: float
    extra: Dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, object]:
        row = {
            "variant": self.variant,
            "params": self.params,
            "seed": self.seed,
            "steps": self.steps,
            "final_error_m": self.final_error_m,
        }
        row.update(self.extra)
        return row


def _camera_ray(bins: str) -> AblationCell:
    return AblationCell(VariantSpec("camera-ray", bins=bins))


def suite_cells(name: str) -> List[AblationCell]:
    """이름 붙은 ablation 묶음. 표 번호 별칭 (table1 등) 도 받는다."""
    name = SUITE_ALIASES.get(name, name)
    if name == "bin-layout":
        return [
            _camera_ray(bins)
            for bins in (
                "lid:1:61:64", "sid:1:61:64", "ud:1:61:64",
                "ud:1:31:64", "ud:31:61:64",
                "ud:1:61:32", "ud:1:61:2",
            )
        ]
    if name == "lidar-depth":
        return [AblationCell(VariantSpec("lidar-ray", fixed_d=d)) for d in (0.2, 1.0, 15.0, 30.0, 60.0)]
    if name == "pe-settings":
        return [
            AblationCell(VariantSpec("pe2d")),
            _camera_ray("lid:1:61:64"),
            AblationCell(VariantSpec("lidar-ray", fixed_d=0.2)),
            AblationCell(VariantSpec("lidar-ray", fixed_d=60.0)),
            AblationCell(VariantSpec("oracle-point")),
            AblationCell(VariantSpec("depth-point")),
            AblationCell(VariantSpec("topk")),
        ]
    if name == "depth-guided":
        return [
            _camera_ray(settings.camera_bins),
            AblationCell(VariantSpec("topk")),
            AblationCell(VariantSpec("depth-point")),
        ]
    if name == "encoder-sharing":
        return [
            AblationCell(VariantSpec("depth-point", encoder_mode=mode), train_encoder=True)
            for mode in ("shared", "separated")
        ]
    if name == "depth-loss":
        return [
            AblationCell(VariantSpec("depth-point", loss_weights=weights))
            for weights in ((0.0, 0.0), (0.25, 0.0), (0.25, 0.25))
        ]
    raise Pe3dError(f"알 수 없는 ablation 묶음: {name} (가능: {', '.join(SUITE_NAMES)})")


SUITES = ("bin-layout", "lidar-depth", "pe-settings", "depth-guided", "encoder-sharing", "depth-loss")
SUITE_ALIASES = {
    "table1": "bin-layout",
    "table2": "lidar-depth",
    "table3": "pe-settings",
    "table6": "encoder-sharing",
}
SUITE_NAMES = SUITES + tuple(SUITE_ALIASES)


def _depth_columns(result: TrainResult) -> Dict[str, float]:
    preds, gts, masks = [], [], []
    for views in result.depth_views:
        for view in views:
            preds.append(view.pred_depth.ravel())
            gts.append(view.rendered.depth.ravel())
            masks.append(view.rendered.valid.ravel())
    metrics = depth_metrics(np.concatenate(preds), np.concatenate(gts), np.concatenate(masks))
    return {name: metrics[name] for name in DEPTH_METRIC_COLUMNS}


def visible_scenes(
    count: int,
    seed: int,
    num_objects: int = 1,
    min_object_cells: int = settings.ablation_min_object_cells,
    stride: int = settings.ablation_stride,
    rig: Optional[Sequence[CameraParams]] = None,
) -> List[SimScene]:
    """시드 rng 에서 장면을 차례로 뽑아 모든 객체가 min_object_cells 셀 이상 보이는 것만 모은다"""
    rig = rig or default_rig()
    rng = np.random.default_rng(seed)
    scenes: List[SimScene] = []
    for _ in range(count * MAX_DRAWS_PER_SCENE):
        if len(scenes) == count:
            break
        scene = random_scene(rng, num_objects)
        if min_object_cells <= 0 or np.all(object_cell_counts(scene, rig, stride) >= min_object_cells):
            scenes.append(scene)
    if len(scenes) < count:
        raise Pe3dError(
            f"객체가 {min_object_cells} 셀 이상 보이는 장면을 {count} 개 만들지 못했습니다 (seed={seed})"
        )
    return scenes


def run_cell(cell: AblationCell, seed: int, options: AblationOptions = AblationOptions()) -> AblationRow:
    variant = cell.variant
    scenes = visible_scenes(
        options.train_scenes, seed, options.num_objects, options.min_object_cells, options.stride
    )
    eval_scenes = visible_scenes(
        options.eval_scenes, seed + EVAL_SEED_OFFSET, options.num_objects, options.min_object_cells, options.stride
    )
    cfg = TrainConfig(
        learning_rate=options.learning_rate,
        steps=options.steps,
        seed=seed,
        variant=variant.kind,
        encoder_mode=variant.encoder_mode,
        optimizer=options.optimizer,
        stride=options.stride,
        train_encoder=cell.train_encoder,
    )
    if variant.loss_weights is not None:
        cfg = replace(cfg, depth_loss=variant.loss_weights)
    result = train_toy(scenes, variant, cfg, eval_scenes=eval_scenes or None)
    extra = _depth_columns(result) if variant.loss_weights is not None else {}
    return AblationRow(variant.kind, cell.params, seed, options.steps, result.final_error_m, extra)


def ablation_suite(
    cells: Sequence[AblationCell],
    seeds: Sequence[int],
    options: AblationOptions = AblationOptions(),
) -> List[AblationRow]:
    """셀 순서, 그 안에서 시드 순서로 행을 만든다"""
    if not cells:
        raise Pe3dError("ablation 셀이 없습니다")
    rows = []
    for cell in cells:
        for seed in seeds:
            row = run_cell(cell, seed, options)
            logger.info(f"[{row.variant} {row.params}] seed={seed}: 최종 오차 {row.final_error_m:.3f} m")
            rows.append(row)
    return rows


def run_suite(
    name: str,
    num_seeds: int,
    base_seed: int = settings.default_seed,
    options: Optional[AblationOptions] = None,
) -> List[AblationRow]:
    if num_seeds < 1:
        raise Pe3dError(f"시드 수는 1 이상이어야 합니다: {num_seeds}")
    seeds = range(base_seed, base_seed + num_seeds)
    return ablation_suite(suite_cells(name), seeds, options or AblationOptions())


def median_errors(rows: Sequence[AblationRow]) -> Dict[str, float]:
    """(변형, 파라미터) 별 최종 오차 중앙값, 키는 "variant|params" """
    groups: Dict[str, List[float]] = {}
    for row in rows:
        groups.setdefault(f"{row.variant}|{row.params}", []).append(row.final_error_m)
    return {key: float(np.median(values)) for key, values in groups.items()}
