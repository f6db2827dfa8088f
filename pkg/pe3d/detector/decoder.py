"""단일 층 교차 어텐션 디코더와 해석적 역전파

쿼리 q = content + 앵커 PE. 장면 배치 (S, N, C) 를 한 번에 처리한다.
    Qp = q Wq, Qk = Qp Wk^T, logits = Qk X^T / sqrt(C)  (마스크 토큰은 -inf)
    A = softmax(logits), Z = A X, V = Z Wv, centers = sigmoid(V Wo + bo)
X Wk 를 직접 만들지 않으므로 비용은 O(K N C) 이다. 모든 축약은 행렬곱(BLAS)으로 한다.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from pe3d.depth.head import sigmoid
from pe3d.detector.features import PointAwareFeatures
from pe3d.encoding.anchors import AnchorPoints, encode_anchors
from pe3d.encoding.mlp import MLPParams, make_rng
from pe3d.encoding.sine import SineSpec
from pe3d.errors import AllTokensMasked, Pe3dError, ShapeMismatch


@dataclass(eq=False)
class DecoderState:
    content: np.ndarray  # (K, C)
    anchors: AnchorPoints
    Wq: np.ndarray
    Wk: np.ndarray
    Wv: np.ndarray
    Wo: np.ndarray  # (C, 3)
    bo: np.ndarray  # (3,)

    def __post_init__(self):
        if self.content.shape[0] < 1:
            raise Pe3dError("쿼리는 1개 이상이어야 합니다")
        if self.content.shape[0] != self.anchors.count:
            raise ShapeMismatch("쿼리 수와 앵커 수가 다릅니다")

    @classmethod
    def init(cls, num_queries: int, embed_dim: int, seed: int = 0) -> "DecoderState":
        rng = make_rng(seed)
        bound = 1.0 / np.sqrt(embed_dim)
        return cls(
            content=rng.uniform(-bound, bound, size=(num_queries, embed_dim)),
            anchors=AnchorPoints(rng.uniform(0.0, 1.0, size=(num_queries, 3))),
            Wq=rng.uniform(-bound, bound, size=(embed_dim, embed_dim)),
            Wk=rng.uniform(-bound, bound, size=(embed_dim, embed_dim)),
            Wv=rng.uniform(-bound, bound, size=(embed_dim, embed_dim)),
            Wo=rng.uniform(-bound, bound, size=(embed_dim, 3)),
            bo=np.zeros(3),
        )

    @property
    def num_queries(self) -> int:
        return int(self.content.shape[0])

    @property
    def embed_dim(self) -> int:
        return int(self.content.shape[1])

    def arrays(self) -> Dict[str, np.ndarray]:
        return {
            "content": self.content,
            "anchors": self.anchors.coords,
            "Wq": self.Wq,
            "Wk": self.Wk,
            "Wv": self.Wv,
            "Wo": self.Wo,
            "bo": self.bo,
        }


@dataclass
class DecoderCache:
    queries: np.ndarray  # (K, C)
    q_proj: np.ndarray  # (K, C)
    q_key: np.ndarray  # (K, C)
    tokens: np.ndarray  # (S, N, C)
    attention: np.ndarray  # (S, K, N)
    attended: np.ndarray  # (S, K, C)
    values: np.ndarray  # (S, K, C)
    centers: np.ndarray  # (S, K, 3)


def decode_batch(
    state: DecoderState, anchor_pe: np.ndarray, tokens: np.ndarray, mask: np.ndarray
) -> Tuple[np.ndarray, DecoderCache]:
    """tokens (S, N, C), mask (S, N) -> 정규화 중심 (S, K, 3)"""
    if tokens.ndim != 3 or tokens.shape[2] != state.embed_dim:
        raise ShapeMismatch(f"토큰은 (S, N, {state.embed_dim}) 모양이어야 합니다: {tokens.shape}")
    if np.any(np.all(mask, axis=1)):
        raise AllTokensMasked("모든 토큰이 마스크된 장면이 있습니다")

    scale = 1.0 / np.sqrt(state.embed_dim)
    queries = state.content + anchor_pe
    q_proj = queries @ state.Wq
    q_key = q_proj @ state.Wk.T
    logits = np.swapaxes(tokens @ q_key.T, 1, 2) * scale
    logits = np.where(mask[:, None, :], -np.inf, logits)
    logits = logits - logits.max(axis=2, keepdims=True)
    weights = np.exp(logits)
    attention = weights / weights.sum(axis=2, keepdims=True)

    attended = attention @ tokens
    values = attended @ state.Wv
    centers = sigmoid(values @ state.Wo + state.bo)
    return centers, DecoderCache(queries, q_proj, q_key, tokens, attention, attended, values, centers)


def decode_backward(
    state: DecoderState, cache: DecoderCache, grad_centers: np.ndarray, need_tokens: bool = True
) -> Tuple[Dict[str, np.ndarray], np.ndarray, Optional[np.ndarray]]:
    """(파라미터 기울기, 앵커 PE 기울기 (K, C), 토큰 기울기 (S, N, C))

    need_tokens=False 이면 토큰 기울기를 건너뛰고 None 을 돌려준다.
    """
    C = state.embed_dim
    scale = 1.0 / np.sqrt(C)
    g_out = grad_centers * cache.centers * (1.0 - cache.centers)
    g_Wo = cache.values.reshape(-1, C).T @ g_out.reshape(-1, 3)
    g_bo = g_out.sum(axis=(0, 1))
    g_values = g_out @ state.Wo.T
    g_Wv = cache.attended.reshape(-1, C).T @ g_values.reshape(-1, C)
    g_attended = g_values @ state.Wv.T

    A = cache.attention
    g_A = g_attended @ np.swapaxes(cache.tokens, 1, 2)
    g_logits = A * (g_A - np.sum(A * g_A, axis=2, keepdims=True)) * scale

    g_q_key = (g_logits @ cache.tokens).sum(axis=0)
    g_tokens = None
    if need_tokens:
        g_tokens = np.swapaxes(A, 1, 2) @ g_attended + np.swapaxes(g_logits, 1, 2) @ cache.q_key
    g_Wk = g_q_key.T @ cache.q_proj
    g_q_proj = g_q_key @ state.Wk
    g_Wq = cache.queries.T @ g_q_proj
    g_queries = g_q_proj @ state.Wq.T

    grads = {"content": g_queries, "Wq": g_Wq, "Wk": g_Wk, "Wv": g_Wv, "Wo": g_Wo, "bo": g_bo}
    return grads, g_queries, g_tokens


def decode(state: DecoderState, feats: PointAwareFeatures, anchor_mlp: MLPParams) -> np.ndarray:
    """장면 하나의 예측 중심 (K, 3), 좌표는 (0, 1)"""
    spec = SineSpec(half_dim=anchor_mlp.out_dim // 2)
    anchor_pe = encode_anchors(state.anchors, anchor_mlp, spec)
    centers, _ = decode_batch(state, anchor_pe, feats.tokens[None], feats.mask[None])
    return centers[0]
