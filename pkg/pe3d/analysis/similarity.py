"""서라운드 뷰 PE 유사도 맵과 객체 응집도"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np

from pe3d.encoding.pe_grid import PEGrid
from pe3d.errors import EmptyRegion, Pe3dError, ShapeMismatch, ZeroReferenceVector
from pe3d.simulation.renderer import RenderedView

logger = logging.getLogger(__name__)

MIN_REFERENCE_NORM = 1e-12

# (뷰 인덱스, 열 u, 행 v), 특징 격자 셀 좌표
Reference = Tuple[int, int, int]


@dataclass(frozen=True, eq=False)
class SimilarityMap:
    """뷰별 (H, W) 코사인 유사도, 마스크된 셀은 NaN"""

    values: Tuple[np.ndarray, ...]
    reference: Reference

    @property
    def num_views(self) -> int:
        return len(self.values)

    def view(self, index: int) -> np.ndarray:
        return self.values[index]


def _mean_pe(pe_grids: Sequence[PEGrid]) -> np.ndarray:
    cells = [grid.values[:, ~grid.mask] for grid in pe_grids]
    return np.concatenate(cells, axis=1).mean(axis=1)


def similarity_map(pe_grids: Sequence[PEGrid], ref: Reference, center: bool = False) -> SimilarityMap:
    """기준 셀 PE 와 모든 셀 PE 의 코사인 유사도

    center=True 이면 모든 뷰의 마스크되지 않은 셀 평균 PE 를 빼고 코사인을 잰다.
    초기화된 MLP 의 PE 는 공통 성분이 커서 원시 코사인이 거의 어디서나 1 에 가깝다.
    """
    view, u, v = ref
    if not 0 <= view < len(pe_grids):
        raise Pe3dError(f"기준 뷰 {view} 가 범위 밖입니다 (뷰 {len(pe_grids)}개)")
    ref_grid = pe_grids[view]
    h, w = ref_grid.shape
    if not (0 <= u < w and 0 <= v < h):
        raise Pe3dError(f"기준 셀 (u={u}, v={v}) 이 격자 {w}x{h} 밖입니다")
    if ref_grid.mask[v, u]:
        raise Pe3dError(f"기준 셀 (view={view}, u={u}, v={v}) 이 마스크되어 있습니다")

    offset = _mean_pe(pe_grids) if center else np.zeros(ref_grid.channels)
    reference = ref_grid.values[:, v, u] - offset
    ref_norm = np.linalg.norm(reference)
    if ref_norm <= MIN_REFERENCE_NORM:
        raise ZeroReferenceVector("기준 PE 벡터의 노름이 0 입니다")

    values = []
    for grid in pe_grids:
        if grid.channels != ref_grid.channels:
            raise ShapeMismatch("뷰마다 PE 채널 수가 다릅니다")
        centered = grid.values - offset[:, None, None]
        dots = np.tensordot(reference, centered, axes=(0, 0))
        norms = np.linalg.norm(centered, axis=0) * ref_norm
        with np.errstate(invalid="ignore", divide="ignore"):
            cos = np.clip(dots / norms, -1.0, 1.0)
        values.append(np.where(grid.mask | (norms <= MIN_REFERENCE_NORM), np.nan, cos))
    # 기준 셀은 정의상 1
    values[view][v, u] = 1.0
    return SimilarityMap(values=tuple(values), reference=(view, u, v))


def cohesion_metric(sim: SimilarityMap, object_masks: Sequence[Optional[np.ndarray]]) -> Tuple[float, float, float]:
    """(객체 내부 평균, 배경 평균, 차이). 기준 셀과 NaN 셀은 제외한다."""
    if len(object_masks) != sim.num_views:
        raise ShapeMismatch(f"객체 마스크 뷰 수 {len(object_masks)} 가 유사도 맵 뷰 수 {sim.num_views} 와 다릅니다")
    inside, outside = [], []
    ref_view, ref_u, ref_v = sim.reference
    for i, (values, mask) in enumerate(zip(sim.values, object_masks)):
        mask = np.zeros(values.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        if mask.shape != values.shape:
            raise ShapeMismatch(f"뷰 {i}: 객체 마스크 {mask.shape} 와 맵 {values.shape} 모양이 다릅니다")
        usable = ~np.isnan(values)
        if i == ref_view:
            usable[ref_v, ref_u] = False
        inside.append(values[usable & mask])
        outside.append(values[usable & ~mask])

    inside = np.concatenate(inside)
    outside = np.concatenate(outside)
    if inside.size == 0 or outside.size == 0:
        raise EmptyRegion("객체 영역 또는 배경 영역이 비어 있습니다")
    in_mean, bg_mean = float(inside.mean()), float(outside.mean())
    return in_mean, bg_mean, in_mean - bg_mean


def object_reference(views: Sequence[RenderedView], pe_grids: Optional[Sequence[PEGrid]] = None) -> Tuple[Reference, int]:
    """가장 많은 셀을 차지한 객체의 중심에 가장 가까운 셀 -> (기준, 프리미티브 인덱스)"""
    best = None
    for view_index, view in enumerate(views):
        ids, counts = np.unique(view.primitive_map[view.class_map >= 2], return_counts=True)
        for primitive, count in zip(ids, counts):
            if best is None or count > best[0]:
                best = (int(count), view_index, int(primitive))
    if best is None:
        raise EmptyRegion("어느 뷰에도 객체가 보이지 않습니다")

    _, view_index, primitive = best
    mask = views[view_index].object_mask(primitive)
    if pe_grids is not None:
        mask = mask & ~pe_grids[view_index].mask
        if not mask.any():
            raise EmptyRegion("객체 셀이 모두 마스크되어 있습니다")
    rows, cols = np.nonzero(mask)
    centroid = np.array([rows.mean(), cols.mean()])
    nearest = int(np.argmin((rows - centroid[0]) ** 2 + (cols - centroid[1]) ** 2))
    logger.debug(f"자동 기준 셀: view={view_index}, primitive={primitive}, 셀 {np.count_nonzero(mask)}개")
    return (view_index, int(cols[nearest]), int(rows[nearest])), primitive


def object_masks(views: Sequence[RenderedView], primitive: int) -> List[np.ndarray]:
    return [view.object_mask(primitive) for view in views]
