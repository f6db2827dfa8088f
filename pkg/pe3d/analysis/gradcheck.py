"""해석적 기울기 대 중앙 차분 비교

각 연산마다 시드 고정 소형 인스턴스를 만들어 배열별 상대 오차
||g_analytic - g_numeric|| / max(||g_analytic|| + ||g_numeric||, 1e-8) 의 최댓값을 잰다.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple
import logging

import numpy as np

from pe3d.depth.bins import make_bins
from pe3d.depth.head import (
    FusionWeight,
    dfl_grad_logits,
    dfl_loss,
    fuse_depth,
    fuse_depth_backward,
    smooth_l1,
    smooth_l1_grad,
    softmax,
)
from pe3d.detector.decoder import DecoderState
from pe3d.detector.trainer import ToyDetector
from pe3d.detector.variants import TokenBatch, VariantEncoders, VariantSpec
from pe3d.encoding.anchors import EncoderBank
from pe3d.encoding.mlp import MLPParams
from pe3d.encoding.point_encoder import encode_point, encode_point_backward
from pe3d.encoding.sine import SineSpec

logger = logging.getLogger(__name__)

STEP = 1e-6
TOLERANCE = 1e-5
END_TO_END_TOLERANCE = 1e-4
DEFAULT_INSTANCES = 100

Loss = Callable[[], float]


@dataclass(frozen=True)
class GradcheckResult:
    name: str
    instances: int
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: max_rel_error={self.max_rel_error:.3e} (tol {self.tolerance:g}, n={self.instances})"


def numeric_grad(f: Loss, x: np.ndarray, step: float = STEP) -> np.ndarray:
    """x 를 제자리에서 흔들며 f 의 중앙 차분 기울기를 구한다 (x 는 원래 값으로 복원)"""
    grad = np.zeros(x.shape)
    flat = x.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + step
        plus = f()
        flat[i] = old - step
        minus = f()
        flat[i] = old
        grad.flat[i] = (plus - minus) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    diff = np.linalg.norm(np.ravel(analytic) - np.ravel(numeric))
    return float(diff / max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-8))


def compare(f: Loss, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], step: float = STEP) -> float:
    """배열별 상대 오차의 최댓값"""
    return max(relative_error(grads[name], numeric_grad(f, params[name], step)) for name in sorted(params))


def _encode_point_instance(rng: np.random.Generator) -> float:
    spec = SineSpec(half_dim=4)
    mlp = MLPParams.init(3 * spec.half_dim, 2 * spec.half_dim, hidden_dim=16, seed=int(rng.integers(2**31)))
    p = rng.uniform(0.0, 1.0, size=3)
    upstream = rng.standard_normal(mlp.out_dim)

    def f() -> float:
        return float(upstream @ encode_point(p, mlp, spec))

    g_p, g_mlp = encode_point_backward(p, mlp, spec, upstream)
    params = {"p": p, **mlp.arrays()}
    grads = {"p": g_p, **g_mlp.arrays()}
    return compare(f, params, grads)


def _fuse_depth_instance(rng: np.random.Generator) -> float:
    d_reg = rng.uniform(1.0, 60.0, size=8)
    d_prob = rng.uniform(1.0, 60.0, size=8)
    raw = np.array([rng.normal()])
    upstream = rng.standard_normal(8)

    def f() -> float:
        return float(upstream @ fuse_depth(d_reg, d_prob, FusionWeight(float(raw[0]))))

    g_reg, g_prob, g_raw = fuse_depth_backward(d_reg, d_prob, FusionWeight(float(raw[0])), upstream)
    return compare(f, {"d_reg": d_reg, "d_prob": d_prob, "raw": raw},
                   {"d_reg": g_reg, "d_prob": g_prob, "raw": np.array([g_raw])})


def _dfl_instance(rng: np.random.Generator) -> float:
    bins = make_bins("ud", 1.0, 61.0, 6)
    logits = rng.standard_normal((bins.count, 10))
    gt = rng.uniform(bins.d_min, bins.d_max, size=10)
    mask = rng.uniform(size=10) < 0.8
    mask[0] = True

    def f() -> float:
        return dfl_loss(softmax(logits), gt, bins, mask)

    return compare(f, {"logits": logits}, {"logits": dfl_grad_logits(softmax(logits), gt, bins, mask)})


def _smooth_l1_instance(rng: np.random.Generator) -> float:
    pred = rng.uniform(1.0, 10.0, size=12)
    gt = rng.uniform(1.0, 10.0, size=12)
    beta = float(rng.uniform(0.5, 2.0))

    def f() -> float:
        return smooth_l1(pred, gt, beta)

    return compare(f, {"pred": pred}, {"pred": smooth_l1_grad(pred, gt, beta)})


def micro_detector(rng: np.random.Generator, encoder_mode: str = "shared") -> Tuple[ToyDetector, TokenBatch]:
    """C=4, 쿼리 1개, 2x2 셀 (토큰 4개) 장면 하나짜리 검출기와 배치"""
    embed_dim, queries, scenes, tokens = 4, 1, 1, 2 * 2
    seed = int(rng.integers(2**31))
    point = MLPParams.init(3 * embed_dim // 2, embed_dim, hidden_dim=8, seed=seed)
    anchor = point if encoder_mode == "shared" else MLPParams.init(3 * embed_dim // 2, embed_dim, hidden_dim=8, seed=seed + 1)
    bank = EncoderBank(point=point, anchor=anchor, mode=encoder_mode)
    mask = rng.uniform(size=(scenes, tokens)) < 0.2
    mask[:, 0] = False
    batch = TokenBatch(
        features=rng.standard_normal((scenes, tokens, embed_dim)),
        mask=mask,
        centers=[rng.uniform(0.1, 0.9, size=(int(rng.integers(1, queries + 1)), 3)) for _ in range(scenes)],
        point_sets=rng.uniform(0.0, 1.0, size=(scenes, tokens, 1, 3)),
    )
    state = DecoderState.init(queries, embed_dim, seed=seed + 2)
    state.bo[:] = rng.normal(scale=0.1, size=3)
    variant = VariantSpec("oracle-point", encoder_mode=encoder_mode)
    return ToyDetector(state=state, encoders=VariantEncoders(bank=bank), variant=variant), batch


def _detector_instance(rng: np.random.Generator) -> float:
    mode = "shared" if rng.uniform() < 0.5 else "separated"
    detector, batch = micro_detector(rng, mode)

    def f() -> float:
        return detector.loss_and_grads(batch, train_encoder=True)[0]

    _, grads = detector.loss_and_grads(batch, train_encoder=True)
    return compare(f, detector.params(train_encoder=True), grads)


CHECKS = {
    "encode_point": (_encode_point_instance, TOLERANCE),
    "fuse_depth": (_fuse_depth_instance, TOLERANCE),
    "dfl_loss": (_dfl_instance, TOLERANCE),
    "smooth_l1": (_smooth_l1_instance, TOLERANCE),
    "toy_detector": (_detector_instance, END_TO_END_TOLERANCE),
}


def run_gradcheck(name: str, seed: int = 0, instances: int = DEFAULT_INSTANCES) -> GradcheckResult:
    check, tolerance = CHECKS[name]
    rng = np.random.default_rng(seed)
    worst = max(check(rng) for _ in range(instances))
    result = GradcheckResult(name=name, instances=instances, max_rel_error=worst, tolerance=tolerance)
    logger.info(result.line())
    return result


def run_all(seed: int = 0, instances: int = DEFAULT_INSTANCES) -> List[GradcheckResult]:
    return [run_gradcheck(name, seed, instances) for name in CHECKS]
