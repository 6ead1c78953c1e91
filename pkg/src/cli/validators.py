"""
Command-line argument validation for sift-bench
"""

import logging
from typing import List, Optional, Tuple

from core.deform import Deformation, parse_deformation
from core.errors import ArgumentError
from core.evaluation import MODES, parse_grid
from core.features_io import is_keypoint_file
from utils.paths import PathUtils

IMAGE = "image"
KEYPOINTS = "keypoints"

ValidationResult = Tuple[bool, str]


class ArgumentValidator:
    """
    Checks command flags before any work is done

    Flag checks report usage errors (exit 2); path checks report missing
    or unwritable files (exit 1).
    """

    def __init__(self):
        self.logger = logging.getLogger(__name__)
        self.path_utils = PathUtils()

    # -- flags ---------------------------------------------------------------

    def validate_detector_flags(self, args) -> ValidationResult:
        """
        Range-check the detector flags that were given

        Returns:
            Tuple of (is_valid, error_message)
        """
        checks = [
            ("intervals", lambda v: v >= 1, "--intervals must be >= 1"),
            ("sigma", lambda v: v > 0, "--sigma must be > 0"),
            ("assumed_blur", lambda v: v >= 0, "--assumed-blur must be >= 0"),
            ("contrast_threshold", lambda v: v > 0, "--contrast-threshold must be > 0"),
            ("edge_ratio", lambda v: v > 0, "--edge-ratio must be > 0"),
        ]
        for name, is_ok, message in checks:
            value = getattr(args, name, None)
            if value is not None and not is_ok(value):
                return False, f"{message}, got {value}"
        return True, ""

    def validate_ratio(self, ratio: Optional[float]) -> ValidationResult:
        if ratio is not None and not 0 < ratio <= 1:
            return False, f"--ratio must be in (0, 1], got {ratio}"
        return True, ""

    def validate_spec(self, text: str) -> Tuple[bool, str, Optional[Deformation]]:
        """
        Parse a deformation spec

        Returns:
            Tuple of (is_valid, error_message, deformation)
        """
        try:
            return True, "", parse_deformation(text)
        except ArgumentError as e:
            return False, str(e), None

    def validate_eval_flags(self, args) -> Tuple[bool, str, List[Deformation]]:
        """
        Check mode/spec pairing, grid, jobs and ratio of the eval command

        Returns:
            Tuple of (is_valid, error_message, deformations)
        """
        if args.mode not in MODES:
            return False, f"--mode must be one of {', '.join(MODES)}", []
        specs = args.spec or []
        if args.mode == "tp" and not specs:
            return False, "--mode tp requires --spec", []
        if args.mode == "fp" and specs:
            return False, "--spec is only valid with --mode tp", []

        deformations = []
        for text in specs:
            is_valid, error_msg, deformation = self.validate_spec(text)
            if not is_valid:
                return False, error_msg, []
            deformations.append(deformation)

        if args.grid is not None:
            try:
                parse_grid(args.grid)
            except ArgumentError as e:
                return False, f"--grid: {e}", []
        if args.jobs is not None and args.jobs < 1:
            return False, f"--jobs must be >= 1, got {args.jobs}", []

        is_valid, error_msg = self.validate_ratio(args.ratio)
        if not is_valid:
            return False, error_msg, []
        return True, "", deformations

    # -- paths ---------------------------------------------------------------

    def validate_inputs(self, *paths: str) -> ValidationResult:
        for path in paths:
            is_valid, error_msg = self.path_utils.validate_input_file(path)
            if not is_valid:
                self.logger.debug(f"Input validation failed: {error_msg}")
                return False, error_msg
        return True, ""

    def validate_output_file(self, path: Optional[str]) -> ValidationResult:
        if path is None:
            return True, ""
        return self.path_utils.validate_output_file(path)

    def validate_output_dir(self, path: str) -> ValidationResult:
        return self.path_utils.validate_output_dir(path)

    def validate_corpus(self, path: str) -> ValidationResult:
        return self.path_utils.validate_corpus_path(path)

    def input_kind(self, path: str) -> str:
        """IMAGE or KEYPOINTS, decided by the file's leading bytes"""
        return KEYPOINTS if is_keypoint_file(path) else IMAGE

    def validate_same_kind(self, path_a: str, path_b: str) -> Tuple[bool, str, str]:
        """
        Both inputs must be images or both keypoint files

        Returns:
            Tuple of (is_valid, error_message, kind)
        """
        kind_a, kind_b = self.input_kind(path_a), self.input_kind(path_b)
        if kind_a != kind_b:
            return False, f"cannot match {kind_a} input '{path_a}' against {kind_b} input '{path_b}'", ""
        return True, "", kind_a
