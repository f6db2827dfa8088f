from typing import Dict, Optional

import numpy as np

from pe3d.errors import NoValidPixels, ShapeMismatch


def depth_metrics(pred: np.ndarray, gt: np.ndarray, mask: Optional[np.ndarray] = None) -> Dict[str, float]:
    """유효 셀에 대한 표준 깊이 오차 지표"""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeMismatch(f"예측 {pred.shape} 과 정답 {gt.shape} 모양이 다릅니다")
    valid = (gt > 0) & (pred > 0)
    if mask is not None:
        valid &= np.asarray(mask, dtype=bool)
    if not valid.any():
        raise NoValidPixels("지표를 계산할 유효 셀이 없습니다")

    pred, gt = pred[valid], gt[valid]
    thresh = np.maximum(gt / pred, pred / gt)
    log_diff = np.log(pred) - np.log(gt)
    return {
        "abs_rel": float(np.mean(np.abs(gt - pred) / gt)),
        "sq_rel": float(np.mean((gt - pred) ** 2 / gt)),
        "rmse": float(np.sqrt(np.mean((gt - pred) ** 2))),
        "log10": float(np.mean(np.abs(np.log10(pred) - np.log10(gt)))),
        "silog": float(np.sqrt(max(np.mean(log_diff ** 2) - np.mean(log_diff) ** 2, 0.0)) * 100.0),
        "a1": float(np.mean(thresh < 1.25)),
    }
