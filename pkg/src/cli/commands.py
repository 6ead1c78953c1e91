"""
Subcommand implementations (detect, match, deform, eval) for sift-bench
"""

import logging
import sys
from typing import Dict, List, Tuple

from cli.validators import IMAGE, ArgumentValidator
from core.deform import apply_deformation
from core.evaluation import EvalReport, load_corpus, run_evaluation, run_sweep
from core.features_io import (canonicalize, read_keypoints, write_keypoints,
                              write_matches)
from core.image import encode_pgm, load_image
from core.keypoints import Feature, detect_and_describe
from core.matching import match_descriptors
from core.report import export_report, export_sweep
from core.rollback import RollbackManager
from core.scale_space import build_dog_pyramid, build_gaussian_pyramid, dump_pyramid
from utils.config import AppConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def fail(message: str, code: int) -> int:
    """Print an error for the user and return the exit code"""
    print(f"Error: {message}", file=sys.stderr)
    return code


def _detector_overrides(args) -> Dict[Tuple[str, str], object]:
    return {
        ("pyramid", "intervals"): args.intervals,
        ("pyramid", "base_sigma"): args.sigma,
        ("pyramid", "assumed_blur"): args.assumed_blur,
        ("pyramid", "initial_doubling"): args.double,
        ("detector", "contrast_threshold"): args.contrast_threshold,
        ("detector", "edge_ratio"): args.edge_ratio,
    }


def _image_features(path: str, config: AppConfig) -> List[Feature]:
    features = detect_and_describe(load_image(path), config.get_pyramid_params(), config.get_detector_params())
    return canonicalize(features)


def cmd_detect(args, config: AppConfig) -> int:
    """Detect keypoints of one image and write a keypoint file"""
    validator = ArgumentValidator()
    is_valid, error_msg = validator.validate_detector_flags(args)
    if not is_valid:
        return fail(error_msg, EXIT_USAGE)
    for is_valid, error_msg in (validator.validate_inputs(args.image),
                                validator.validate_output_file(args.out)):
        if not is_valid:
            return fail(error_msg, EXIT_RUNTIME)
    if args.dump_pyramid:
        is_valid, error_msg = validator.validate_output_dir(args.dump_pyramid)
        if not is_valid:
            return fail(error_msg, EXIT_RUNTIME)

    config.apply_overrides(_detector_overrides(args))
    pyramid = config.get_pyramid_params()
    image = load_image(args.image)
    features = detect_and_describe(image, pyramid, config.get_detector_params())

    write_keypoints(args.out, features)
    if args.dump_pyramid:
        gp = build_gaussian_pyramid(image, pyramid)
        dump_pyramid(gp, build_dog_pyramid(gp), args.dump_pyramid)

    logger.info(f"Wrote {len(features)} keypoints to {args.out}")
    print(f"count={len(features)}")
    return EXIT_OK


def cmd_match(args, config: AppConfig) -> int:
    """Match two images or two keypoint files and print the matching rate"""
    validator = ArgumentValidator()
    for is_valid, error_msg in (validator.validate_detector_flags(args),
                                validator.validate_ratio(args.ratio)):
        if not is_valid:
            return fail(error_msg, EXIT_USAGE)
    for is_valid, error_msg in (validator.validate_inputs(args.input_a, args.input_b),
                                validator.validate_output_file(args.out)):
        if not is_valid:
            return fail(error_msg, EXIT_RUNTIME)
    is_valid, error_msg, kind = validator.validate_same_kind(args.input_a, args.input_b)
    if not is_valid:
        return fail(error_msg, EXIT_USAGE)

    config.apply_overrides(_detector_overrides(args))
    config.apply_overrides({("matching", "ratio"): args.ratio})
    if kind == IMAGE:
        set_a = _image_features(args.input_a, config)
        set_b = _image_features(args.input_b, config)
    else:
        set_a = read_keypoints(args.input_a)
        set_b = read_keypoints(args.input_b)

    result = match_descriptors(set_a, set_b, config.get_ratio())
    if args.out:
        write_matches(args.out, result)

    logger.info(f"{result.n_matches} matches between {result.n_a} and {result.n_b} keypoints")
    print(f"r={result.rate:.6f}")
    return EXIT_OK


def cmd_deform(args, config: AppConfig) -> int:
    """Apply one deformation and write the result as PGM"""
    validator = ArgumentValidator()
    is_valid, error_msg, deformation = validator.validate_spec(args.spec)
    if not is_valid:
        return fail(error_msg, EXIT_USAGE)
    for is_valid, error_msg in (validator.validate_inputs(args.image),
                                validator.validate_output_file(args.out)):
        if not is_valid:
            return fail(error_msg, EXIT_RUNTIME)

    image = load_image(args.image)
    deformed = apply_deformation(image, deformation)
    with RollbackManager() as manager:
        manager.stage_bytes(args.out, encode_pgm(deformed))

    logger.info(f"Wrote {deformation.spec} of {args.image} to {args.out} ({deformed.width}x{deformed.height})")
    return EXIT_OK


def summary_line(report: EvalReport) -> str:
    """pairs=<n> P(<r_T>)=<rate> at the grid midpoint"""
    curve = report.curve
    middle = len(curve.thresholds) // 2
    return f"pairs={curve.n_pairs} P({curve.thresholds[middle]:g})={curve.rates[middle]:.6f}"


def cmd_eval(args, config: AppConfig) -> int:
    """Run a false-positive, true-positive or sweep evaluation and export the report"""
    validator = ArgumentValidator()
    is_valid, error_msg, deformations = validator.validate_eval_flags(args)
    if not is_valid:
        return fail(error_msg, EXIT_USAGE)
    is_valid, error_msg = validator.validate_detector_flags(args)
    if not is_valid:
        return fail(error_msg, EXIT_USAGE)
    names = [validator.path_utils.get_safe_filename(d.slug) for d in deformations]
    if len(set(names)) != len(names):
        return fail("--spec values must be distinct", EXIT_USAGE)
    for is_valid, error_msg in (validator.validate_corpus(args.corpus),
                                validator.validate_output_dir(args.out)):
        if not is_valid:
            return fail(error_msg, EXIT_RUNTIME)

    config.apply_overrides(_detector_overrides(args))
    config.apply_overrides({
        ("matching", "ratio"): args.ratio,
        ("evaluation", "grid"): args.grid,
        ("evaluation", "jobs"): args.jobs,
        ("evaluation", "cache_dir"): args.cache,
    })
    settings = config.get_evaluation_settings()
    corpus = load_corpus(args.corpus)

    if len(deformations) > 1:
        reports = run_sweep(corpus, deformations, settings)
        export_sweep(reports, args.out, plot=args.plot, subdir_names=names)
        for report in reports:
            print(f"{report.label} {summary_line(report)}")
    else:
        deformation = deformations[0] if deformations else None
        report = run_evaluation(corpus, args.mode, deformation, settings)
        export_report(report, args.out, plot=args.plot)
        print(summary_line(report))

    return EXIT_OK
