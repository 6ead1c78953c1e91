"""
Descriptor correspondence and matching-rate computation for sift-bench
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from core.errors import ArgumentError
from core.keypoints import DESCRIPTOR_LENGTH

logger = logging.getLogger(__name__)

DEFAULT_RATIO = 0.8


@dataclass(frozen=True)
class Match:
    index_a: int
    index_b: int
    distance: float
    delta_phi: float


@dataclass(frozen=True)
class MatchResult:
    """Accepted correspondences; rate = |matches| / min(n_a, n_b), 0 when either set is empty"""

    matches: Tuple[Match, ...]
    n_a: int
    n_b: int
    rate: float

    @property
    def n_matches(self) -> int:
        return len(self.matches)

    @property
    def delta_phis(self) -> np.ndarray:
        return np.array([match.delta_phi for match in self.matches], dtype=np.float64)


def wrap_delta_phi(phi_a: float, phi_b: float) -> float:
    """(phi_b - phi_a) mod 360, in [0, 360); no folding onto [0, 180)"""
    delta = (phi_b - phi_a) % 360.0
    return 0.0 if delta >= 360.0 else delta


def matching_rate(n_matches: int, n_a: int, n_b: int) -> float:
    smaller = min(n_a, n_b)
    return n_matches / smaller if smaller > 0 else 0.0


def _descriptor_matrix(features) -> np.ndarray:
    return np.array([descriptor.values for _, descriptor in features], dtype=np.float64).reshape(-1, DESCRIPTOR_LENGTH)


def match_descriptors(set_a: Sequence, set_b: Sequence, ratio: float = DEFAULT_RATIO) -> MatchResult:
    """
    Nearest-neighbour ratio-test matching with one-to-one pruning

    A feature of set_a matches its nearest neighbour in set_b when
    d1 < ratio * d2 (d2 the second-nearest distance). With a single feature
    in set_b only an exact descriptor match (d1 = 0) is accepted. Candidates
    are then kept greedily by ascending (distance, index_a), dropping any
    whose set_b index is already taken.

    Args:
        set_a: (Keypoint, Descriptor128) pairs
        set_b: (Keypoint, Descriptor128) pairs
        ratio: Ratio-test threshold in (0, 1]

    Returns:
        MatchResult; empty inputs give zero matches and rate 0
    """
    if not 0 < ratio <= 1:
        raise ArgumentError(f"ratio must be in (0, 1], got {ratio}")

    n_a, n_b = len(set_a), len(set_b)
    if n_a == 0 or n_b == 0:
        return MatchResult(matches=(), n_a=n_a, n_b=n_b, rate=0.0)

    distances = cdist(_descriptor_matrix(set_a), _descriptor_matrix(set_b))
    nearest = np.argmin(distances, axis=1)
    rows = np.arange(n_a)
    d1 = distances[rows, nearest]
    if n_b > 1:
        others = distances.copy()
        others[rows, nearest] = np.inf
        d2 = others.min(axis=1)
        accepted = d1 < ratio * d2
    else:
        accepted = d1 == 0.0

    candidates = sorted((float(d1[i]), int(i), int(nearest[i])) for i in np.nonzero(accepted)[0])
    taken = set()
    matches = []
    for distance, index_a, index_b in candidates:
        if index_b in taken:
            continue
        taken.add(index_b)
        delta = wrap_delta_phi(set_a[index_a][0].orientation, set_b[index_b][0].orientation)
        matches.append(Match(index_a, index_b, distance, delta))
    matches.sort(key=lambda match: match.index_a)

    result = MatchResult(matches=tuple(matches), n_a=n_a, n_b=n_b,
                         rate=matching_rate(len(matches), n_a, n_b))
    logger.debug(f"Matched {result.n_matches} of {n_a}x{n_b} features (r={result.rate:.4f})")
    return result


def is_image_match(result: MatchResult, r_threshold: float) -> bool:
    """True iff the matching rate strictly exceeds r_threshold"""
    if not 0 <= r_threshold <= 1:
        raise ArgumentError(f"rate threshold must be in [0, 1], got {r_threshold}")
    return result.rate > r_threshold
