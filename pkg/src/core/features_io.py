"""
Keypoint and match file formats for sift-bench
"""

import logging
import re
from pathlib import Path
from typing import List, Sequence

from core.errors import ArgumentError, FeatureFileError
from core.image import PathLike
from core.keypoints import DESCRIPTOR_LENGTH, Descriptor128, Feature, Keypoint
from core.matching import Match, MatchResult
from core.rollback import RollbackManager

logger = logging.getLogger(__name__)

KEYPOINT_MAGIC = "# sift-bench keypoints v1"
MATCH_MAGIC = "# sift-bench matches v1"
KEYPOINT_FIELDS = 5 + DESCRIPTOR_LENGTH

_KEYPOINT_HEADER = re.compile(r"^# sift-bench keypoints v1 count=(\d+)$")
_MATCH_HEADER = re.compile(r"^# sift-bench matches v1 r=(\S+)$")


def format_keypoints(features: Sequence[Feature]) -> str:
    """Serialize features as keypoint file v1 text (6 significant digits)"""
    lines = [f"{KEYPOINT_MAGIC} count={len(features)}"]
    for keypoint, descriptor in features:
        head = (keypoint.x, keypoint.y, keypoint.sigma, keypoint.orientation, keypoint.response)
        lines.append(" ".join("%.6g" % value for value in (*head, *descriptor.values)))
    return "\n".join(lines) + "\n"


def parse_keypoints(text: str, source: str = "<text>") -> List[Feature]:
    """
    Parse keypoint file v1 text

    Args:
        text: File content
        source: Name used in error messages

    Returns:
        Features in file order; octave and level are not stored and read back as 0

    Raises:
        FeatureFileError: bad header, wrong token count or count mismatch
    """
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise FeatureFileError(f"{source}: empty keypoint file")
    header = _KEYPOINT_HEADER.match(lines[0].strip())
    if header is None:
        raise FeatureFileError(f"{source}: missing '{KEYPOINT_MAGIC} count=N' header")
    expected = int(header.group(1))

    features = []
    for number, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if len(tokens) != KEYPOINT_FIELDS:
            raise FeatureFileError(
                f"{source}:{number}: expected {KEYPOINT_FIELDS} values, found {len(tokens)}")
        try:
            values = [float(token) for token in tokens]
        except ValueError:
            raise FeatureFileError(f"{source}:{number}: non-numeric value")
        x, y, sigma, orientation, response = values[:5]
        try:
            keypoint = Keypoint(x=x, y=y, sigma=sigma, orientation=orientation % 360.0, response=response)
            descriptor = Descriptor128(values[5:])
        except ArgumentError as e:
            raise FeatureFileError(f"{source}:{number}: {e}")
        features.append((keypoint, descriptor))

    if len(features) != expected:
        raise FeatureFileError(f"{source}: header says count={expected}, found {len(features)} keypoints")
    return features


def write_keypoints(path: PathLike, features: Sequence[Feature]) -> Path:
    """Publish a keypoint file in one step; a failed write leaves any previous file in place"""
    with RollbackManager() as manager:
        path = manager.stage_text(path, format_keypoints(features))
    logger.debug(f"Wrote {len(features)} keypoints to {path}")
    return path


def read_keypoints(path: PathLike) -> List[Feature]:
    path = Path(path)
    return parse_keypoints(path.read_text(encoding="utf-8"), source=str(path))


def canonicalize(features: Sequence[Feature]) -> List[Feature]:
    """Round features through the file format so in-memory and cached inputs match identically"""
    return parse_keypoints(format_keypoints(features))


def is_keypoint_file(path: PathLike) -> bool:
    """True when the file starts with the keypoint v1 magic"""
    with open(path, "rb") as f:
        return f.read(len(KEYPOINT_MAGIC)) == KEYPOINT_MAGIC.encode("ascii")


def format_matches(result: MatchResult) -> str:
    lines = [f"{MATCH_MAGIC} r={result.rate:.6f}"]
    for match in result.matches:
        lines.append(f"{match.index_a} {match.index_b} {match.distance:.6f} {match.delta_phi:.6f}")
    return "\n".join(lines) + "\n"


def parse_matches(text: str, source: str = "<text>") -> MatchResult:
    """
    Parse match dump v1 text

    Keypoint counts are not part of the format; n_a and n_b are set to the
    number of matches, so only the stored rate is meaningful.
    """
    lines = [line for line in text.splitlines() if line.strip()]
    header = _MATCH_HEADER.match(lines[0].strip()) if lines else None
    if header is None:
        raise FeatureFileError(f"{source}: missing '{MATCH_MAGIC} r=<rate>' header")

    matches = []
    try:
        rate = float(header.group(1))
        for line in lines[1:]:
            index_a, index_b, distance, delta_phi = line.split()
            matches.append(Match(int(index_a), int(index_b), float(distance), float(delta_phi)))
    except ValueError:
        raise FeatureFileError(f"{source}: malformed match line")

    return MatchResult(matches=tuple(matches), n_a=len(matches), n_b=len(matches), rate=rate)


def write_matches(path: PathLike, result: MatchResult) -> Path:
    with RollbackManager() as manager:
        path = manager.stage_text(path, format_matches(result))
    logger.debug(f"Wrote {result.n_matches} matches to {path}")
    return path
