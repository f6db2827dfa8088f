from fastapi import APIRouter, HTTPException

from app.models.schemas import BinsRequest, BinsResponse, BracketRequest, BracketResponse
from pe3d.depth.bins import bracket, make_bins
from pe3d.errors import Pe3dError

router = APIRouter()


@router.post("/depth/bins", response_model=BinsResponse)
def create_bins(request: BinsRequest):
    """깊이 빈 중심 생성"""
    try:
        bins = make_bins(request.method, request.d_min, request.d_max, request.count)
        return BinsResponse(spec=bins.spec, centers=bins.centers.tolist())

    except Pe3dError as e:
        raise HTTPException(status_code=422, detail=f"깊이 빈 생성 실패: {str(e)}")


@router.post("/depth/bracket", response_model=BracketResponse)
def bracket_depth(request: BracketRequest):
    """깊이를 감싸는 두 인접 빈과 보간 가중치"""
    try:
        spec = request.bins
        lower, upper, weight = bracket(request.depth, make_bins(spec.method, spec.d_min, spec.d_max, spec.count))
        return BracketResponse(lower=lower, upper=upper, weight=weight)

    except Pe3dError as e:
        raise HTTPException(status_code=422, detail=f"브래킷 계산 실패: {str(e)}")
