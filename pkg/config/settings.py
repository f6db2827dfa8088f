from typing import Optional, Tuple
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """애플리케이션 설정"""

    # Reproducibility
    seed: Optional[int] = None  # PE3D_SEED 가 설정되면 --seed 보다 우선
    default_seed: int = 0
    log_level: str = "INFO"

    # Encoder Settings
    embed_dim: int = 64
    hidden_multiplier: int = 4
    sine_temperature: float = 10000.0

    # Perception Region (meters)
    region_x: Tuple[float, float] = (-61.2, 61.2)
    region_y: Tuple[float, float] = (-61.2, 61.2)
    region_z: Tuple[float, float] = (-10.0, 10.0)

    # Camera Rig
    image_width: int = 704
    image_height: int = 256
    focal_length: float = 500.0
    feature_stride: int = 16
    camera_forward_offset: float = 0.75  # d_Lc
    camera_lateral_offset: float = 0.35  # Delta

    # Depth Settings
    camera_bins: str = "lid:1:61:64"
    depth_head_bins: str = "ud:1:61:6"
    topk: int = 5
    lambda_sm: float = 0.25
    lambda_dfl: float = 0.25
    smooth_l1_beta: float = 1.0
    prob_floor: float = 1e-12
    depth_cue_noise: float = 0.08
    feature_noise: float = 0.1  # 모든 특징 성분에 더하는 등방 잡음
    depth_head_steps: int = 300
    depth_head_lr: float = 0.01

    # Simulator Settings
    ground_z: float = -2.0
    object_min_distance: float = 6.0
    object_max_distance: float = 40.0
    num_object_classes: int = 2
    lidar_beams: int = 32
    lidar_azimuth_steps: int = 720

    # Detector Settings
    num_queries: int = 4
    learning_rate: float = 0.05
    train_steps: int = 2000
    optimizer: str = "sgd"

    # Ablation Settings
    ablation_stride: int = 32
    ablation_train_scenes: int = 16
    ablation_eval_scenes: int = 16
    ablation_optimizer: str = "adam"
    ablation_learning_rate: float = 0.01
    ablation_min_object_cells: int = 2  # 이보다 적은 셀에 보이는 객체가 있는 장면은 건너뜀

    # Similarity Settings
    similarity_center: bool = True  # 평균 PE 를 뺀 코사인

    # FastAPI Configuration
    api_host: str = "localhost"
    api_port: int = 8000
    debug: bool = True

    model_config = {
        "env_file": ".env",
        "env_prefix": "PE3D_",
        "extra": "ignore"  # 추가 필드 무시
    }


# 전역 설정 인스턴스
settings = Settings()
