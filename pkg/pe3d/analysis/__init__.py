# 분석 패키지 (유사도 맵, 기울기 검사)
from pe3d.analysis.gradcheck import GradcheckResult, run_all, run_gradcheck
from pe3d.analysis.similarity import SimilarityMap, cohesion_metric, object_reference, similarity_map
