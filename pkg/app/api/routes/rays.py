from fastapi import APIRouter, HTTPException
import numpy as np

from app.models.schemas import DiscrepancyRequest, DiscrepancyResponse, SweepRequest, SweepResponse
from app.services.experiment_service import ExperimentService
from pe3d.errors import Pe3dError
from pe3d.ray_model import RayGeometry, discrepancy

router = APIRouter()
experiment_service = ExperimentService()


@router.post("/rays/discrepancy", response_model=DiscrepancyResponse)
def ray_discrepancy(request: DiscrepancyRequest):
    """카메라 광선과 LiDAR 광선 사이의 불일치 1 - cos"""
    try:
        geometry = RayGeometry(np.deg2rad(request.alpha_deg), request.d, request.d_lc, request.delta)
        return DiscrepancyResponse(discrepancy=discrepancy(geometry))

    except Pe3dError as e:
        raise HTTPException(status_code=422, detail=f"불일치 계산 실패: {str(e)}")


@router.post("/rays/sweep", response_model=SweepResponse)
def ray_discrepancy_sweep(request: SweepRequest):
    """깊이 범위에 대한 불일치 스윕. 범위 오류는 앱 공통 핸들러가 422 로 응답한다."""
    rows = experiment_service.sweep(
        request.alpha_deg, request.d_lc, request.delta, request.d_min, request.d_max, request.steps
    )
    return SweepResponse(d=[r["d"] for r in rows], discrepancy=[r["Dis"] for r in rows])
