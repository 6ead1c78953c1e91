"""
Exception types for sift-bench
"""


class SiftBenchError(Exception):
    """Base class for every error raised on purpose by sift-bench"""


class ImageFormatError(SiftBenchError):
    """Unsupported or malformed image data"""


class ImageSizeError(SiftBenchError):
    """Image too small for the requested operation"""


class ArgumentError(SiftBenchError, ValueError):
    """Invalid numeric or structural argument"""


class ConfigurationError(SiftBenchError):
    """Invalid corpus directory or configuration value"""


class DeformationSpecError(ArgumentError):
    """Malformed deformation spec string"""

    def __init__(self, token: str, reason: str):
        self.token = token
        super().__init__(f"invalid deformation token '{token}': {reason}")


class FeatureFileError(SiftBenchError):
    """Malformed keypoint or match file"""
