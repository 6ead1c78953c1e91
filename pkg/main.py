#!/usr/bin/env python3
"""
sift-bench
SIFT feature detection and matching-rate benchmark, command-line entry point
"""

import sys
import argparse
import logging
from pathlib import Path

# Add src directory to path for imports
current_dir = Path(__file__).parent
src_dir = current_dir / "src"
sys.path.insert(0, str(src_dir))

from cli.commands import (EXIT_RUNTIME, EXIT_USAGE, cmd_deform, cmd_detect,
                          cmd_eval, cmd_match, fail)
from core.deform import SPEC_GRAMMAR
from core.errors import ArgumentError, SiftBenchError
from utils.config import AppConfig
from utils.logging import setup_logging

SPEC_HELP = f"deformation spec: {SPEC_GRAMMAR} (e.g. rot:90, scale:2, fisheye:1, blur:30@45)"


def _common_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('--config',
                        help='JSON configuration file (default ~/.sift-bench/config.json if present)')
    parser.add_argument('--verbose',
                        action='store_true',
                        help='Detailed output')
    parser.add_argument('--log-file',
                        help='Also write a rotating debug log to this file')
    return parser


def _detector_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    group = parser.add_argument_group('detector')
    group.add_argument('--intervals', type=int,
                       help='Scales sampled per octave (default 3)')
    group.add_argument('--sigma', type=float,
                       help='Base blur of each octave (default 1.6)')
    group.add_argument('--assumed-blur', type=float,
                       help='Blur assumed present in the input (default 0.5)')
    group.add_argument('--double', action='store_true', default=None,
                       help='Upsample the input 2x before building the pyramid')
    group.add_argument('--contrast-threshold', type=float,
                       help='Minimum |D| at a refined extremum (default 0.03)')
    group.add_argument('--edge-ratio', type=float,
                       help='Principal curvature ratio limit r (default 10)')
    return parser


def parse_arguments(argv=None):
    """Parse command line arguments"""
    common = _common_parser()
    detector = _detector_parser()

    parser = argparse.ArgumentParser(
        prog="sift-bench",
        description="SIFT feature detection and matching-rate benchmark",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py detect img.pgm --out img.kp
  python main.py match a.pgm b.pgm --ratio 0.8
  python main.py deform img.pgm --spec rot:90 --out rotated.pgm
  python main.py eval --corpus imgs/ --mode fp --out rep/
  python main.py eval --corpus imgs/ --mode tp --spec blur:10 --spec blur:50 --out sweep/ --plot
        """
    )
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True

    detect = subparsers.add_parser('detect', parents=[common, detector],
                                   help='Detect keypoints and write a keypoint file')
    detect.add_argument('image', help='Input image (PGM, or PNG with Pillow)')
    detect.add_argument('--out', required=True, help='Keypoint file to write')
    detect.add_argument('--dump-pyramid', metavar='DIR',
                        help='Also write every Gaussian and DoG level as PGM')
    detect.set_defaults(handler=cmd_detect)

    match = subparsers.add_parser('match', parents=[common, detector],
                                  help='Match two images or two keypoint files')
    match.add_argument('input_a', help='First image or keypoint file')
    match.add_argument('input_b', help='Second input, same kind as the first')
    match.add_argument('--ratio', type=float, help='Ratio-test threshold in (0, 1] (default 0.8)')
    match.add_argument('--out', help='Match dump to write')
    match.set_defaults(handler=cmd_match)

    deform = subparsers.add_parser('deform', parents=[common],
                                   help='Apply a deformation to an image',
                                   epilog=SPEC_HELP)
    deform.add_argument('image', help='Input image')
    deform.add_argument('--spec', required=True, help=SPEC_HELP)
    deform.add_argument('--out', required=True, help='PGM file to write')
    deform.set_defaults(handler=cmd_deform)

    evaluate = subparsers.add_parser('eval', parents=[common, detector],
                                     help='Run the false/true-positive evaluation',
                                     epilog=SPEC_HELP)
    evaluate.add_argument('--corpus', required=True, help='Directory of images')
    evaluate.add_argument('--mode', required=True, choices=['fp', 'tp'],
                          help='fp: all distinct pairs; tp: each image against its deformation')
    evaluate.add_argument('--spec', action='append',
                          help='Deformation for tp mode; repeat to run a sweep. ' + SPEC_HELP)
    evaluate.add_argument('--grid', help='Threshold grid start:step:end (default 0:0.02:1)')
    evaluate.add_argument('--out', required=True, help='Report directory')
    evaluate.add_argument('--jobs', type=int, help='Worker threads (default 1)')
    evaluate.add_argument('--ratio', type=float, help='Ratio-test threshold in (0, 1] (default 0.8)')
    evaluate.add_argument('--cache', metavar='DIR', help='Keypoint cache directory')
    evaluate.add_argument('--plot', action='store_true', help='Also write curve.svg and dphi.svg')
    evaluate.set_defaults(handler=cmd_eval)

    return parser.parse_args(argv)


def main(argv=None) -> int:
    """Main application entry point"""
    args = parse_arguments(argv)

    try:
        config = AppConfig(args.config)
        max_size_mb, backup_count = config.get_log_rotation()
    except SiftBenchError as e:
        return fail(str(e), EXIT_RUNTIME)

    setup_logging(verbose=args.verbose,
                  log_file=args.log_file or config.get_log_file() or None,
                  level=config.get_logging_level(),
                  max_file_size_mb=max_size_mb,
                  backup_count=backup_count)
    logger = logging.getLogger(__name__)

    try:
        return args.handler(args, config)
    except ArgumentError as e:
        return fail(str(e), EXIT_USAGE)
    except (SiftBenchError, OSError) as e:
        return fail(str(e), EXIT_RUNTIME)
    except Exception as e:
        logger.error(f"Unexpected error: {e}", exc_info=True)
        return fail(str(e), EXIT_RUNTIME)


if __name__ == "__main__":
    sys.exit(main())
