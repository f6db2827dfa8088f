class Pe3dError(ValueError):
    """모든 도메인 오류의 기본 클래스"""


# 기하
class InvalidIntrinsics(Pe3dError):
    pass


class NonInvertibleIntrinsics(InvalidIntrinsics):
    pass


class InvalidRotation(Pe3dError):
    pass


class NonPositiveDepth(Pe3dError):
    pass


class BehindCamera(Pe3dError):
    pass


class InvalidRegion(Pe3dError):
    pass


# 깊이 빈
class InvalidRange(Pe3dError):
    pass


class TooFewBins(Pe3dError):
    pass


class OutOfRange(Pe3dError):
    pass


# 깊이 헤드 / 인코더 / 디코더
class ShapeMismatch(Pe3dError):
    pass


class NoValidPixels(Pe3dError):
    pass


class KTooLarge(Pe3dError):
    pass


class InvalidVariant(Pe3dError):
    pass


class AllTokensMasked(Pe3dError):
    pass


# 시뮬레이터
class EmptySparseMap(Pe3dError):
    pass


# 분석
class ZeroReferenceVector(Pe3dError):
    pass


class EmptyRegion(Pe3dError):
    pass
