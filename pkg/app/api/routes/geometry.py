from fastapi import APIRouter, HTTPException

from app.models.schemas import BackProjectRequest, PixelResponse, PointResponse, ProjectRequest
from pe3d.errors import Pe3dError
from pe3d.geometry.camera import back_project, project


router = APIRouter()


@router.post("/geometry/back-project", response_model=PointResponse)
def back_project_pixel(request: BackProjectRequest):
    """픽셀 (u, v) 와 깊이 -> 리그 좌표계 3D 점"""
    try:
        cam = request.camera.to_params()
        point = back_project(request.u, request.v, request.depth, cam)
        return PointResponse(point=point.tolist())

    except Pe3dError as e:
        raise HTTPException(status_code=422, detail=f"역투영 실패: {str(e)}")


@router.post("/geometry/project", response_model=PixelResponse)
def project_point(request: ProjectRequest):
    """리그 좌표계 3D 점 -> 픽셀 (u, v) 와 카메라 깊이"""
    try:
        cam = request.camera.to_params()
        u, v, depth = project(request.point, cam)
        return PixelResponse(u=u, v=v, depth=depth)

    except Pe3dError as e:
        raise HTTPException(status_code=422, detail=f"투영 실패: {str(e)}")
