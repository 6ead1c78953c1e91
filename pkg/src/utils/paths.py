"""
Path utilities for sift-bench
"""

import logging
import os
from pathlib import Path
from typing import Tuple


class PathUtils:
    """Validation of the files and directories a command reads or writes"""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def validate_input_file(self, path: str) -> Tuple[bool, str]:
        """
        Validate an input file exists and is readable

        Args:
            path: Image or keypoint file path

        Returns:
            Tuple of (is_valid, error_message)
        """
        if not path or not str(path).strip():
            return False, "Input path cannot be empty"

        input_path = Path(path)
        if not input_path.exists():
            return False, f"Input file does not exist: {input_path}"
        if not input_path.is_file():
            return False, f"Input path is not a file: {input_path}"
        if not os.access(input_path, os.R_OK):
            return False, f"No read permission for {input_path}"
        return True, ""

    def validate_corpus_path(self, path: str) -> Tuple[bool, str]:
        """
        Validate a corpus directory exists and can be listed

        Args:
            path: Corpus directory

        Returns:
            Tuple of (is_valid, error_message)
        """
        if not path or not str(path).strip():
            return False, "Corpus path cannot be empty"

        corpus_path = Path(path)
        if not corpus_path.exists():
            return False, f"Corpus directory does not exist: {corpus_path}"
        if not corpus_path.is_dir():
            return False, f"Corpus path must be a directory: {corpus_path}"
        try:
            next(iter(corpus_path.iterdir()), None)
        except PermissionError:
            return False, f"Corpus directory is not accessible (permission denied): {corpus_path}"
        except OSError as e:
            return False, f"Corpus directory is not accessible: {e}"
        return True, ""

    def validate_output_dir(self, path: str) -> Tuple[bool, str]:
        """
        Validate a report directory can be created or written

        Args:
            path: Output directory (created later when missing)

        Returns:
            Tuple of (is_valid, error_message)
        """
        if not path or not str(path).strip():
            return False, "Output path cannot be empty"

        output_path = Path(path)
        if output_path.exists() and not output_path.is_dir():
            return False, f"Output path is a file, not a directory: {output_path}"

        # nearest existing ancestor decides writability
        existing = output_path
        while not existing.exists() and existing.parent != existing:
            existing = existing.parent
        if not existing.is_dir():
            return False, f"Output parent is not a directory: {existing}"
        if not os.access(existing, os.W_OK):
            return False, f"No write permission for {existing}"
        return True, ""

    def validate_output_file(self, path: str) -> Tuple[bool, str]:
        """Validate the parent of an output file exists and is writable"""
        if not path or not str(path).strip():
            return False, "Output path cannot be empty"

        output_path = Path(path)
        if output_path.is_dir():
            return False, f"Output path is a directory: {output_path}"
        parent = output_path.parent
        if not parent.exists():
            return False, f"Output directory does not exist: {parent}"
        if not os.access(parent, os.W_OK):
            return False, f"No write permission for {parent}"
        return True, ""

    def get_safe_filename(self, filename: str) -> str:
        """
        Get a filename safe on every common filesystem

        Args:
            filename: Original filename

        Returns:
            Safe filename
        """
        invalid_chars = '<>:"/\\|?*'
        safe_name = filename

        for char in invalid_chars:
            safe_name = safe_name.replace(char, '_')

        # Remove trailing dots and spaces
        safe_name = safe_name.rstrip('. ')

        reserved_names = [
            'CON', 'PRN', 'AUX', 'NUL',
            'COM1', 'COM2', 'COM3', 'COM4', 'COM5', 'COM6', 'COM7', 'COM8', 'COM9',
            'LPT1', 'LPT2', 'LPT3', 'LPT4', 'LPT5', 'LPT6', 'LPT7', 'LPT8', 'LPT9'
        ]

        if safe_name.upper() in reserved_names:
            safe_name = f"_{safe_name}"

        return safe_name or "_"
