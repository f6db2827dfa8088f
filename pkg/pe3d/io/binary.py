"""PE 격자 (PE3D) 와 깊이 맵 (DPTH) 평면 바이너리 포맷

PE3D: b"PE3D\\0", u32 C, u32 H, u32 W, C*H*W f32 (LE), H*W 마스크 바이트
DPTH: b"DPTH",   u32 H, u32 W, H*W f32 미터 (LE), H*W 유효 바이트
"""

from pathlib import Path
from typing import Tuple, Union
import logging

import numpy as np

from pe3d.encoding.pe_grid import PEGrid
from pe3d.errors import Pe3dError

logger = logging.getLogger(__name__)

PE_MAGIC = b"PE3D\0"
DEPTH_MAGIC = b"DPTH"
U32 = np.dtype("<u4")
F32 = np.dtype("<f4")

PathLike = Union[str, Path]


def _read_header(data: bytes, magic: bytes, count: int, path) -> Tuple[int, ...]:
    if not data.startswith(magic):
        raise Pe3dError(f"{path}: 헤더가 {magic!r} 가 아닙니다")
    end = len(magic) + count * U32.itemsize
    if len(data) < end:
        raise Pe3dError(f"{path}: 헤더가 잘렸습니다")
    return tuple(int(x) for x in np.frombuffer(data, dtype=U32, count=count, offset=len(magic)))


def _read_body(data: bytes, offset: int, cells: int, values: int, path) -> Tuple[np.ndarray, np.ndarray]:
    expected = offset + values * F32.itemsize + cells
    if len(data) != expected:
        raise Pe3dError(f"{path}: 크기 {len(data)} 바이트가 기대값 {expected} 과 다릅니다")
    floats = np.frombuffer(data, dtype=F32, count=values, offset=offset)
    flags = np.frombuffer(data, dtype=np.uint8, count=cells, offset=offset + values * F32.itemsize)
    return floats.astype(np.float64), flags.astype(bool)


def write_pe_grid(path: PathLike, grid: PEGrid) -> None:
    c, h, w = grid.values.shape
    with open(path, "wb") as f:
        f.write(PE_MAGIC)
        f.write(np.array([c, h, w], dtype=U32).tobytes())
        f.write(grid.values.astype(F32).tobytes())
        f.write(grid.mask.astype(np.uint8).tobytes())
    logger.debug(f"PE 격자 저장: {path} ({grid.variant}, {c}x{h}x{w})")


def read_pe_grid(path: PathLike, variant: str = "oracle-point") -> PEGrid:
    """변형 이름은 파일에 없으므로 호출자가 지정한다"""
    data = Path(path).read_bytes()
    c, h, w = _read_header(data, PE_MAGIC, 3, path)
    values, mask = _read_body(data, len(PE_MAGIC) + 3 * U32.itemsize, h * w, c * h * w, path)
    return PEGrid(values=values.reshape(c, h, w), variant=variant, mask=mask.reshape(h, w))


def write_depth_map(path: PathLike, depth: np.ndarray, valid: np.ndarray) -> None:
    depth = np.asarray(depth)
    h, w = depth.shape
    with open(path, "wb") as f:
        f.write(DEPTH_MAGIC)
        f.write(np.array([h, w], dtype=U32).tobytes())
        f.write(np.where(valid, depth, 0.0).astype(F32).tobytes())
        f.write(np.asarray(valid, dtype=np.uint8).tobytes())


def read_depth_map(path: PathLike) -> Tuple[np.ndarray, np.ndarray]:
    """(깊이 (H, W), 유효 마스크 (H, W))"""
    data = Path(path).read_bytes()
    h, w = _read_header(data, DEPTH_MAGIC, 2, path)
    depth, valid = _read_body(data, len(DEPTH_MAGIC) + 2 * U32.itemsize, h * w, h * w, path)
    return depth.reshape(h, w), valid.reshape(h, w)
