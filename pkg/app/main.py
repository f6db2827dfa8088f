import logging

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from app.api.routes import depth, geometry, rays
from config.settings import settings
from pe3d.errors import Pe3dError

logging.basicConfig(level=settings.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
logger = logging.getLogger(__name__)

# FastAPI 애플리케이션 생성
app = FastAPI(
    title="PE3D Workbench API",
    description="멀티 카메라 3D 위치 인코딩 실험용 기하 / 깊이 빈 / 광선 불일치 API",
    version="1.0.0",
    debug=settings.debug
)

# CORS 미들웨어 설정
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# 라우터 등록
app.include_router(geometry.router, prefix="/api/v1", tags=["geometry"])
app.include_router(depth.router, prefix="/api/v1", tags=["depth"])
app.include_router(rays.router, prefix="/api/v1", tags=["rays"])


@app.exception_handler(Pe3dError)
async def pe3d_error_handler(request: Request, exc: Pe3dError):
    """라우트에서 잡지 못한 입력 오류는 422 로 응답"""
    logger.warning(f"{request.url.path}: {type(exc).__name__}: {exc}")
    return JSONResponse(status_code=422, content={"detail": str(exc), "error": type(exc).__name__})


@app.get("/")
async def root():
    """루트 엔드포인트"""
    return {
        "message": "PE3D Workbench API",
        "description": "멀티 카메라 검출기의 3D 위치 인코딩을 분석하는 실험 도구입니다.",
        "features": [
            "픽셀 역투영 / 투영",
            "깊이 빈 생성 (UD / LID / SID)",
            "카메라-LiDAR 광선 불일치 계산"
        ]
    }


@app.get("/health")
async def health_check():
    """헬스 체크 엔드포인트"""
    return {
        "status": "healthy",
        "version": "1.0.0",
        "service": "pe3d-workbench",
        "embed_dim": settings.embed_dim,
        "camera_bins": settings.camera_bins,
    }


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(
        "app.main:app",
        host=settings.api_host,
        port=settings.api_port,
        reload=settings.debug
    )
