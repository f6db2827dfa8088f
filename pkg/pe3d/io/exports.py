"""CSV / PGM / JSON 내보내기. 같은 입력이면 항상 같은 바이트를 쓴다."""

from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Union
import csv
import json
import logging

import numpy as np

from pe3d.analysis.similarity import SimilarityMap

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
FLOAT_FORMAT = "%.9g"
SIMILARITY_COLUMNS = ("view", "row", "col", "similarity")


def format_float(value: float) -> str:
    """f32 값을 9 유효 숫자로. 다시 읽으면 같은 f32 가 된다."""
    if np.isnan(value):
        return "nan"
    return FLOAT_FORMAT % float(np.float32(value))


def _format_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_csv(path: PathLike, rows: Sequence[Dict[str, object]], columns: Sequence[str] = ()) -> None:
    columns = list(columns) or (list(rows[0].keys()) if rows else [])
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _format_cell(value) for key, value in row.items()})
    logger.info(f"CSV 저장: {path} ({len(rows)} 행)")


def read_csv(path: PathLike) -> List[Dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def similarity_rows(sim: SimilarityMap) -> Iterable[Dict[str, object]]:
    for view, values in enumerate(sim.values):
        for row, col in np.ndindex(values.shape):
            yield {"view": view, "row": row, "col": col, "similarity": float(values[row, col])}


def write_similarity_csv(path: PathLike, sim: SimilarityMap) -> None:
    write_csv(path, list(similarity_rows(sim)), SIMILARITY_COLUMNS)


def read_similarity_csv(path: PathLike, reference=(0, 0, 0)) -> SimilarityMap:
    """f32 로 읽어들인 SimilarityMap. 뷰별 격자 크기는 최대 행/열 인덱스로 정한다."""
    rows = read_csv(path)
    views: Dict[int, List] = {}
    for r in rows:
        views.setdefault(int(r["view"]), []).append((int(r["row"]), int(r["col"]), float(np.float32(r["similarity"]))))
    values = []
    for view in sorted(views):
        cells = views[view]
        h = max(c[0] for c in cells) + 1
        w = max(c[1] for c in cells) + 1
        grid = np.full((h, w), np.nan, dtype=np.float32)
        for row, col, value in cells:
            grid[row, col] = value
        values.append(grid)
    return SimilarityMap(values=tuple(values), reference=tuple(reference))


def to_gray(values: np.ndarray) -> np.ndarray:
    """[-1, 1] -> [0, 255] 선형, NaN -> 0"""
    scaled = np.rint((np.clip(values, -1.0, 1.0) + 1.0) * 127.5)
    return np.where(np.isnan(values), 0, scaled).astype(np.uint8)


def write_pgm(path: PathLike, values: np.ndarray) -> None:
    gray = to_gray(np.asarray(values, dtype=np.float64))
    h, w = gray.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(gray.tobytes())


def write_json(path: PathLike, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
