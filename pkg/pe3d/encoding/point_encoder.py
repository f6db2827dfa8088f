"""점 집합 인코더: MLP(Cat(Sine(x), Sine(y), Sine(z)))

입력은 (n, m, 3) 점 집합이다. m=1 이면 3D 점 PE, m=N_D 이면 카메라 광선 PE 이며
점별 sine 인코딩을 깊이 오름차순으로 이어붙인 뒤 MLP 에 넣는다.
"""

from typing import Tuple

import numpy as np

from pe3d.encoding.mlp import MLPCache, MLPParams, mlp_backward, mlp_forward
from pe3d.encoding.sine import SineSpec, sine_encode, sine_encode_grad
from pe3d.errors import ShapeMismatch


def sine_concat(points: np.ndarray, spec: SineSpec) -> np.ndarray:
    """(n, m, 3) -> (n, m * 3 * half_dim)"""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 3 or points.shape[-1] != 3:
        raise ShapeMismatch(f"점 집합은 (n, m, 3) 모양이어야 합니다: {points.shape}")
    n = points.shape[0]
    return sine_encode(points, spec).reshape(n, -1)


def encode_point_sets(points: np.ndarray, mlp: MLPParams, spec: SineSpec) -> Tuple[np.ndarray, MLPCache]:
    return mlp_forward(sine_concat(points, spec), mlp)


def encode_point_sets_backward(
    points: np.ndarray, mlp: MLPParams, spec: SineSpec, upstream: np.ndarray
) -> Tuple[np.ndarray, MLPParams]:
    """(점 기울기 (n, m, 3), MLP 파라미터 기울기)"""
    points = np.asarray(points, dtype=np.float64)
    _, cache = encode_point_sets(points, mlp, spec)
    g_input, g_mlp = mlp_backward(cache, mlp, np.asarray(upstream, dtype=np.float64))
    g_sine = g_input.reshape(points.shape + (spec.half_dim,))
    return np.sum(g_sine * sine_encode_grad(points, spec), axis=-1), g_mlp


def encode_points(points: np.ndarray, mlp: MLPParams, spec: SineSpec) -> np.ndarray:
    """(n, 3) 정규화 점 -> (n, C)"""
    points = np.asarray(points, dtype=np.float64)
    out, _ = encode_point_sets(points.reshape(-1, 1, 3), mlp, spec)
    return out


def encode_point(p, mlp: MLPParams, spec: SineSpec) -> np.ndarray:
    return encode_points(np.asarray(p, dtype=np.float64).reshape(1, 3), mlp, spec)[0]


def encode_point_backward(p, mlp: MLPParams, spec: SineSpec, upstream) -> Tuple[np.ndarray, MLPParams]:
    grad_p, grad_mlp = encode_point_sets_backward(
        np.asarray(p, dtype=np.float64).reshape(1, 1, 3),
        mlp,
        spec,
        np.asarray(upstream, dtype=np.float64).reshape(1, -1),
    )
    return grad_p.reshape(3), grad_mlp
