"""pe3d 명령행 도구

    python -m app.cli render --scene scene.json --out-dir out/
    python -m app.cli similarity --variant oracle-point --ref auto-object --out-dir sim/
    python -m app.cli discrepancy-sweep --alpha 45 --dlc 1 --delta 0.7 --d-range 1:61:61
    python -m app.cli ablate --suite table2 --seeds 3 --out results.csv  # = lidar-depth
    python -m app.cli gradcheck --seed 7

종료 코드: 0 성공, 1 사용법 오류, 2 데이터 오류 또는 기울기 검사 실패.
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from app.services.experiment_service import ExperimentService
from app.services.rig_service import RigService
from config.settings import settings
from pe3d.analysis.gradcheck import DEFAULT_INSTANCES
from pe3d.detector.ablation import SUITE_NAMES
from pe3d.detector.variants import VariantSpec
from pe3d.errors import Pe3dError
from pe3d.simulation.scene import front_object_scene

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class CliParser(argparse.ArgumentParser):
    """사용법 오류를 종료 코드 1 로 보고하는 파서"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _parse_range(text: str):
    try:
        d_min, d_max, steps = text.split(":")
        return float(d_min), float(d_max), int(steps)
    except ValueError:
        raise argparse.ArgumentTypeError(f"min:max:steps 형식이어야 합니다: {text!r}")


def _parse_ref(text: str):
    if text == "auto-object":
        return None
    try:
        view, u, v = (int(x) for x in text.split(":"))
        return view, u, v
    except ValueError:
        raise argparse.ArgumentTypeError(f"auto-object 또는 view:u:v 형식이어야 합니다: {text!r}")


def build_parser() -> CliParser:
    common = CliParser(add_help=False)
    common.add_argument("--seed", type=int, default=settings.default_seed, help="난수 시드 (PE3D_SEED 가 우선)")

    scene_args = CliParser(add_help=False)
    scene_args.add_argument("--rig", help="리그 JSON (기본: 6 카메라 서라운드 리그)")
    scene_args.add_argument("--scene", help="장면 JSON (기본: 전방 10 m 박스 하나)")
    scene_args.add_argument("--stride", type=int, default=settings.feature_stride)
    scene_args.add_argument("--out-dir", required=True)

    parser = CliParser(prog="pe3d", description="멀티 카메라 3D 위치 인코딩 실험 도구")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    sub.add_parser("render", parents=[common, scene_args], help="카메라별 깊이 맵과 주석 렌더링")

    encode = sub.add_parser("encode", parents=[common, scene_args], help="카메라별 PE 격자 (PE3D) 내보내기")
    encode.add_argument("--variant", default="oracle-point", help="예: camera-ray:lid:1:61:64, lidar-ray:15, topk:5")

    similarity = sub.add_parser("similarity", parents=[common, scene_args], help="PE 코사인 유사도 맵")
    similarity.add_argument("--variant", default="oracle-point")
    similarity.add_argument("--ref", type=_parse_ref, default=None, help="auto-object 또는 view:u:v (특징 셀 좌표)")

    sweep = sub.add_parser("discrepancy-sweep", parents=[common], help="카메라/LiDAR 광선 불일치 스윕 (CSV d,Dis)")
    sweep.add_argument("--alpha", type=float, required=True, help="카메라 광선 방위각 (도)")
    sweep.add_argument("--dlc", type=float, default=settings.camera_forward_offset)
    sweep.add_argument("--delta", type=float, default=settings.camera_lateral_offset)
    sweep.add_argument("--d-range", type=_parse_range, default=(1.0, 61.0, 61), help="min:max:steps")
    sweep.add_argument("--out", help="CSV 경로 (기본: 표준 출력)")

    ablate = sub.add_parser("ablate", parents=[common], help="PE 변형 ablation (CSV)")
    group = ablate.add_mutually_exclusive_group(required=True)
    group.add_argument("--suite", choices=SUITE_NAMES)
    group.add_argument("--grid", help="ablation 격자 YAML")
    ablate.add_argument("--seeds", type=int, default=1)
    ablate.add_argument("--out", required=True)

    gradcheck = sub.add_parser("gradcheck", parents=[common], help="해석적 기울기 대 중앙 차분")
    gradcheck.add_argument("--instances", type=int, default=DEFAULT_INSTANCES)
    return parser


def resolve_seed(cli_seed: int) -> int:
    return settings.seed if settings.seed is not None else cli_seed


def _print_config(args: argparse.Namespace, seed: int) -> None:
    config = {"command": args.command, "args": vars(args), "seed": seed, "settings": settings.model_dump()}
    print(json.dumps(config, sort_keys=True, default=str), file=sys.stderr)


def _load_scene(rigs: RigService, args, region):
    return rigs.load_scene(args.scene, region) if args.scene else front_object_scene()


def run(args: argparse.Namespace, seed: int) -> int:
    rigs = RigService()
    service = ExperimentService(seed=seed)

    if args.command == "render":
        cameras, region = rigs.load_rig(args.rig)
        result = service.render(cameras, _load_scene(rigs, args, region), args.out_dir, args.stride)
        print(json.dumps(result, sort_keys=True))
    elif args.command == "encode":
        cameras, region = rigs.load_rig(args.rig)
        scene = _load_scene(rigs, args, region)
        result = service.encode(VariantSpec.parse(args.variant), cameras, region, scene, args.out_dir, args.stride)
        print(json.dumps(result, sort_keys=True))
    elif args.command == "similarity":
        cameras, region = rigs.load_rig(args.rig)
        scene = _load_scene(rigs, args, region)
        summary = service.similarity(
            VariantSpec.parse(args.variant), cameras, region, scene, args.out_dir, args.ref, args.stride
        )
        print(json.dumps(summary, sort_keys=True))
    elif args.command == "discrepancy-sweep":
        d_min, d_max, steps = args.d_range
        rows = service.sweep(args.alpha, args.dlc, args.delta, d_min, d_max, steps, args.out)
        if not args.out:
            print("d,Dis")
            for row in rows:
                print(f"{row['d']:.9g},{row['Dis']:.9g}")
    elif args.command == "ablate":
        if args.grid:
            rows = service.ablate_grid(rigs.load_grid(args.grid), args.out)
        else:
            if args.seeds < 1:
                raise UsageError("--seeds 는 1 이상이어야 합니다")
            rows = service.ablate_suite(args.suite, args.seeds, args.out)
        print(f"{len(rows)} rows -> {args.out}")
    elif args.command == "gradcheck":
        results = service.gradcheck(args.instances)
        for result in results:
            print(result.line())
        if not all(result.passed for result in results):
            return EXIT_DATA
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=settings.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        seed = resolve_seed(args.seed)
        _print_config(args, seed)
        return run(args, seed)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    except (Pe3dError, OSError) as e:
        logger.error(f"데이터 오류: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
