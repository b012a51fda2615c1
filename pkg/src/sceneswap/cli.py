"""Command-line surface.

Exit codes: 0 success, 2 config error, 3 backend error, 4 I/O error.
A failed verify-rpa sweep exits 1.
"""

from __future__ import annotations

import argparse
import json
import sys

from .backends.base import BackendError
from .pipeline import ConfigError, StageError, load_config, run_pipeline
from .video import ClipIOError

EXIT_OK = 0
EXIT_PROPERTY = 1
EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_IO = 4


def _cmd_run(args) -> int:
    cfg = load_config(args.config, preset=args.preset)
    artifacts = run_pipeline(cfg)
    summary = {
        "out_dir": str(artifacts.out_dir),
        "final": str(artifacts.final_manifest),
        "metrics": str(artifacts.metrics_path),
        "tem_con": artifacts.report["tem_con"],
        "bg_psnr": artifacts.report["bg_psnr"],
        "fg_hf_corr": artifacts.report["fg_hf_corr"],
    }
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _cmd_make_fixtures(args) -> int:
    from .fixtures import write_fixtures

    info = write_fixtures(args.out, args.seed)
    print(json.dumps(info, indent=2))
    return EXIT_OK


def _cmd_metrics(args) -> int:
    from .frequency import BlurSpec
    from .metrics import compute_report
    from .video import load_clip, load_mask_clip

    a = load_clip(args.a)
    b = load_clip(args.b)
    mask = load_mask_clip(args.mask)
    report = compute_report(a, b, b, mask, BlurSpec(sigma=args.sigma))
    print(json.dumps(report.to_json(), indent=2))
    return EXIT_OK


def _cmd_verify_rpa(args) -> int:
    import numpy as np

    from .rpa import verify_alignment

    if args.codec != "toy":
        raise ConfigError(f"unknown codec {args.codec!r} (only 'toy' is built in)")
    result = verify_alignment(args.trials, np.random.default_rng(args.seed))
    print(json.dumps(result, indent=2))
    return EXIT_OK if result["ok"] else EXIT_PROPERTY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sceneswap",
        description="Video background replacement and relighting engine (desk scale)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the full three-stage pipeline")
    p.add_argument("--config", required=True, help="pipeline JSON config")
    p.add_argument("--preset", choices=("strong", "weak"), default=None,
                   help="override t0/t1 with the strong (0.7T) or weak (0.4T) preset")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("make-fixtures", help="emit synthetic pan/texture test clips")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_make_fixtures)

    p = sub.add_parser("metrics", help="compute the metric report for two clips")
    p.add_argument("--a", required=True, help="output clip manifest")
    p.add_argument("--b", required=True, help="reference clip manifest")
    p.add_argument("--mask", required=True, help="foreground mask manifest")
    p.add_argument("--sigma", type=float, default=3.0)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("verify-rpa", help="randomized sweep of the alignment property")
    p.add_argument("--codec", default="toy")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_verify_rpa)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        code = EXIT_IO if isinstance(exc.cause, (ClipIOError, OSError)) else EXIT_BACKEND
        print(f"error: {exc}", file=sys.stderr)
        return code
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except ClipIOError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
