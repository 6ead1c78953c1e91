"""
False/true-positive evaluation harness for sift-bench
"""

import hashlib
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.deform import Deformation, apply_deformation
from core.errors import (ArgumentError, ConfigurationError, FeatureFileError,
                         ImageFormatError, ImageSizeError)
from core.features_io import canonicalize, read_keypoints, write_keypoints
from core.image import GrayImage, PathLike, load_image
from core.keypoints import DetectorParams, Feature, detect_and_describe
from core.matching import DEFAULT_RATIO, match_descriptors
from core.scale_space import PyramidParams

logger = logging.getLogger(__name__)

FALSE_POSITIVE = "false_positive"
TRUE_POSITIVE = "true_positive"
MODES = {"fp": FALSE_POSITIVE, "tp": TRUE_POSITIVE}

IMAGE_SUFFIXES = (".pgm", ".pnm", ".png")
DEFAULT_GRID = "0:0.02:1"
DEFAULT_HISTOGRAM_BINS = 64


@dataclass(frozen=True)
class EvaluationSettings:
    """Everything that determines an evaluation's numbers (jobs and cache only affect speed)"""

    pyramid: PyramidParams = PyramidParams()
    detector: DetectorParams = DetectorParams()
    ratio: float = DEFAULT_RATIO
    thresholds: Tuple[float, ...] = field(default_factory=lambda: parse_grid(DEFAULT_GRID))
    histogram_bins: int = DEFAULT_HISTOGRAM_BINS
    jobs: int = 1
    cache_dir: Optional[Path] = None

    def __post_init__(self):
        if not 0 < self.ratio <= 1:
            raise ArgumentError(f"ratio must be in (0, 1], got {self.ratio}")
        if int(self.histogram_bins) != self.histogram_bins or self.histogram_bins < 1:
            raise ArgumentError(f"histogram_bins must be an integer >= 1, got {self.histogram_bins}")
        if int(self.jobs) != self.jobs or self.jobs < 1:
            raise ArgumentError(f"jobs must be an integer >= 1, got {self.jobs}")
        _check_thresholds(self.thresholds)

    def echo(self) -> Dict[str, object]:
        """Flat parameter listing for config.txt"""
        return {
            "pyramid.intervals": self.pyramid.intervals,
            "pyramid.base_sigma": self.pyramid.base_sigma,
            "pyramid.assumed_blur": self.pyramid.assumed_blur,
            "pyramid.initial_doubling": self.pyramid.initial_doubling,
            "pyramid.min_dimension": self.pyramid.min_dimension,
            "detector.contrast_threshold": self.detector.contrast_threshold,
            "detector.edge_ratio": self.detector.edge_ratio,
            "detector.max_refine_iterations": self.detector.max_refine_iterations,
            "detector.orientation_bins": self.detector.orientation_bins,
            "detector.peak_ratio": self.detector.peak_ratio,
            "detector.prefilter_ratio": self.detector.prefilter_ratio,
            "matching.ratio": self.ratio,
            "evaluation.thresholds": f"{self.thresholds[0]:g}..{self.thresholds[-1]:g} ({len(self.thresholds)} points)",
            "evaluation.histogram_bins": self.histogram_bins,
        }


def parse_grid(text: str) -> Tuple[float, ...]:
    """
    Expand a start:step:end grid, inclusive of end within half a step

    Args:
        text: e.g. "0:0.02:1"

    Returns:
        Strictly ascending thresholds in [0, 1], rounded to 12 decimals
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise ArgumentError(f"grid must be start:step:end, got '{text}'")
    try:
        start, step, end = (float(part) for part in parts)
    except ValueError:
        raise ArgumentError(f"grid values must be numbers, got '{text}'")
    if not all(math.isfinite(v) for v in (start, step, end)):
        raise ArgumentError(f"grid values must be finite, got '{text}'")
    if step <= 0:
        raise ArgumentError(f"grid step must be > 0, got {step:g}")
    if end < start:
        raise ArgumentError(f"grid end {end:g} is below start {start:g}")

    count = int(math.floor((end - start) / step + 0.5)) + 1
    thresholds = tuple(round(start + i * step, 12) for i in range(count))
    _check_thresholds(thresholds)
    return thresholds


def _check_thresholds(thresholds: Sequence[float]):
    if not thresholds:
        raise ArgumentError("threshold grid is empty")
    if any(not 0 <= t <= 1 for t in thresholds):
        raise ArgumentError("thresholds must lie in [0, 1]")
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ArgumentError("thresholds must be strictly ascending")


# ---------------------------------------------------------------------------
# Corpus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorpusEntry:
    id: str
    path: Path
    image: GrayImage = field(repr=False, compare=False)


@dataclass(frozen=True)
class Corpus:
    root: Path
    entries: Tuple[CorpusEntry, ...]
    warnings: Tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)


def load_corpus(root: PathLike) -> Corpus:
    """
    Load every supported image of a directory in filename order

    Unreadable images are skipped and reported in Corpus.warnings.

    Raises:
        ConfigurationError: missing directory or no loadable image
    """
    root = Path(root)
    if not root.is_dir():
        raise ConfigurationError(f"corpus directory does not exist: {root}")

    candidates = sorted(p for p in root.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
    entries = []
    warnings = []
    for path in candidates:
        try:
            image = load_image(path)
        except (ImageFormatError, ArgumentError, OSError) as e:
            logger.warning(f"Skipping {path.name}: {e}")
            warnings.append(f"skipped {path.name}: {e}")
            continue
        entries.append(CorpusEntry(id=path.name, path=path, image=image))

    if not entries:
        raise ConfigurationError(f"no loadable images in corpus directory {root}")
    logger.info(f"Corpus {root}: {len(entries)} images, {len(warnings)} skipped")
    return Corpus(root=root, entries=tuple(entries), warnings=tuple(warnings))


# ---------------------------------------------------------------------------
# Feature cache
# ---------------------------------------------------------------------------

class FeatureCache:
    """Canonical features per image content, optionally mirrored to <cache_dir>/<sha256>.kp"""

    def __init__(self, pyramid: PyramidParams, detector: DetectorParams, cache_dir: Optional[PathLike] = None):
        self.logger = logging.getLogger(__name__)
        self.pyramid = pyramid
        self.detector = detector
        self.cache_dir = Path(cache_dir) if cache_dir else None
        if self.cache_dir:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._memory: Dict[str, List[Feature]] = {}
        self._lock = threading.Lock()

    def key(self, image: GrayImage) -> str:
        digest = hashlib.sha256()
        digest.update(f"{image.height}x{image.width}".encode("ascii"))
        digest.update(np.ascontiguousarray(image.pixels).tobytes())
        digest.update(repr((self.pyramid, self.detector)).encode("utf-8"))
        return digest.hexdigest()

    def features(self, image: GrayImage) -> List[Feature]:
        """
        Detect (or recall) canonical features of an image

        Raises:
            ImageSizeError: image below the pyramid's min_dimension
        """
        key = self.key(image)
        with self._lock:
            cached = self._memory.get(key)
        if cached is not None:
            return cached

        features = self._load_file(key)
        if features is None:
            features = canonicalize(detect_and_describe(image, self.pyramid, self.detector))
            self._store_file(key, features)

        with self._lock:
            return self._memory.setdefault(key, features)

    def _load_file(self, key: str) -> Optional[List[Feature]]:
        if not self.cache_dir:
            return None
        path = self.cache_dir / f"{key}.kp"
        if not path.exists():
            return None
        try:
            return read_keypoints(path)
        except (FeatureFileError, OSError) as e:
            self.logger.warning(f"Ignoring unreadable cache file {path.name}: {e}")
            return None

    def _store_file(self, key: str, features: List[Feature]):
        if not self.cache_dir:
            return
        try:
            write_keypoints(self.cache_dir / f"{key}.kp", features)
        except OSError as e:
            self.logger.warning(f"Could not write cache file for {key[:12]}: {e}")


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairRecord:
    id_a: str
    id_b: str
    n_a: int
    n_b: int
    n_matches: int
    rate: float
    warning: str = ""


@dataclass(frozen=True)
class RateCurve:
    """Survival function of the pair matching rate: rates[i] = fraction of pairs with r > thresholds[i]"""

    kind: str
    thresholds: Tuple[float, ...]
    rates: Tuple[float, ...]
    n_pairs: int

    def rate_at(self, threshold: float) -> float:
        index = self.thresholds.index(threshold)
        return self.rates[index]


def build_rate_curve(kind: str, pair_rates: Sequence[float], thresholds: Sequence[float]) -> RateCurve:
    values = np.asarray(pair_rates, dtype=np.float64)
    n_pairs = values.size
    if n_pairs:
        rates = tuple(float(np.count_nonzero(values > t)) / n_pairs for t in thresholds)
    else:
        rates = tuple(0.0 for _ in thresholds)
    return RateCurve(kind=kind, thresholds=tuple(thresholds), rates=rates, n_pairs=n_pairs)


@dataclass(frozen=True)
class DeltaPhiHistogram:
    """Pooled orientation differences; bin k is centred on k * bin_width degrees"""

    bin_width: float
    counts: Tuple[int, ...]
    n_matches: int

    @property
    def centers(self) -> np.ndarray:
        return np.arange(len(self.counts)) * self.bin_width

    @property
    def probabilities(self) -> np.ndarray:
        counts = np.asarray(self.counts, dtype=np.float64)
        if self.n_matches == 0:
            return np.zeros_like(counts)
        return counts / self.n_matches

    @property
    def mode_bin(self) -> int:
        return int(np.argmax(self.counts))

    @property
    def mode_center(self) -> float:
        return self.mode_bin * self.bin_width

    @property
    def peak_probability(self) -> float:
        return float(self.probabilities.max())

    def bin_of(self, angle: float) -> int:
        return int(math.floor((angle % 360.0) / self.bin_width + 0.5)) % len(self.counts)

    def mass_within(self, angle: float, tolerance: float) -> float:
        """Probability in bins whose centre lies within tolerance of angle (circular distance)"""
        distance = np.abs((self.centers - angle + 180.0) % 360.0 - 180.0)
        return float(self.probabilities[distance <= tolerance + 1e-9].sum())

    def total_variation(self, other: "DeltaPhiHistogram") -> float:
        if len(other.counts) != len(self.counts):
            raise ArgumentError("histograms have different bin counts")
        return 0.5 * float(np.abs(self.probabilities - other.probabilities).sum())


def build_delta_phi_histogram(delta_phis: Sequence[float], bins: int = DEFAULT_HISTOGRAM_BINS) -> DeltaPhiHistogram:
    width = 360.0 / bins
    values = np.asarray(delta_phis, dtype=np.float64)
    index = np.floor((values % 360.0) / width + 0.5).astype(np.intp) % bins
    counts = np.bincount(index, minlength=bins)
    return DeltaPhiHistogram(bin_width=width, counts=tuple(int(c) for c in counts), n_matches=int(values.size))


@dataclass(frozen=True)
class EvalReport:
    mode: str
    deformation: Optional[Deformation]
    settings: EvaluationSettings
    corpus_root: Path
    corpus_size: int
    curve: RateCurve
    histogram: DeltaPhiHistogram
    pairs: Tuple[PairRecord, ...]
    warnings: Tuple[str, ...] = ()

    @property
    def pair_rates(self) -> np.ndarray:
        return np.array([pair.rate for pair in self.pairs], dtype=np.float64)

    @property
    def mean_rate(self) -> float:
        return float(self.pair_rates.mean()) if self.pairs else 0.0

    @property
    def median_rate(self) -> float:
        return float(np.median(self.pair_rates)) if self.pairs else 0.0

    @property
    def label(self) -> str:
        return self.deformation.spec if self.deformation else "fp"


# ---------------------------------------------------------------------------
# Protocol
# ---------------------------------------------------------------------------

def _map(jobs: int, fn, items: Sequence) -> list:
    """Ordered map, threaded when jobs > 1"""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(fn, items))


def _features_or_warning(cache: FeatureCache, image: GrayImage, label: str) -> Tuple[List[Feature], str]:
    try:
        return cache.features(image), ""
    except (ImageSizeError, ArgumentError) as e:
        logger.warning(f"{label}: no features ({e})")
        return [], f"{label}: {e}"


def _match_pair(id_a: str, id_b: str, features_a, features_b, ratio: float, warning: str = ""):
    result = match_descriptors(features_a, features_b, ratio)
    record = PairRecord(id_a=id_a, id_b=id_b, n_a=result.n_a, n_b=result.n_b,
                        n_matches=result.n_matches, rate=result.rate, warning=warning)
    logger.debug(f"{id_a} vs {id_b}: {result.n_matches} matches, r={result.rate:.4f}")
    return record, result.delta_phis


def _assemble(mode: str, deformation: Optional[Deformation], corpus: Corpus, settings: EvaluationSettings,
              outcomes: Sequence[Tuple[PairRecord, np.ndarray]]) -> EvalReport:
    pairs = tuple(record for record, _ in outcomes)
    pooled = np.concatenate([dphi for _, dphi in outcomes]) if outcomes else np.zeros(0)
    curve = build_rate_curve(mode, [p.rate for p in pairs], settings.thresholds)
    histogram = build_delta_phi_histogram(pooled, settings.histogram_bins)

    warnings = list(corpus.warnings)
    warnings.extend(p.warning for p in pairs if p.warning)
    if histogram.n_matches == 0:
        warnings.append("no matches in any pair; delta-phi histogram is all zero")

    report = EvalReport(mode=mode, deformation=deformation, settings=settings, corpus_root=corpus.root,
                        corpus_size=len(corpus), curve=curve, histogram=histogram, pairs=pairs,
                        warnings=tuple(warnings))
    logger.info(f"{report.label}: {len(pairs)} pairs, {histogram.n_matches} matches, "
                f"mean r={report.mean_rate:.4f}")
    return report


def evaluate_false_positive(corpus: Corpus, settings: EvaluationSettings,
                            cache: Optional[FeatureCache] = None) -> EvalReport:
    """All unordered distinct pairs (i < j) of the corpus; every match counts as incorrect"""
    if len(corpus) < 2:
        raise ConfigurationError(f"false-positive evaluation needs at least 2 images, corpus has {len(corpus)}")
    cache = cache or FeatureCache(settings.pyramid, settings.detector, settings.cache_dir)

    entries = corpus.entries
    detected = _map(settings.jobs, lambda e: _features_or_warning(cache, e.image, e.id), entries)

    index_pairs = [(i, j) for i in range(len(entries)) for j in range(i + 1, len(entries))]

    def run_pair(pair):
        i, j = pair
        warning = "; ".join(w for w in (detected[i][1], detected[j][1]) if w)
        return _match_pair(entries[i].id, entries[j].id, detected[i][0], detected[j][0], settings.ratio, warning)

    return _assemble(FALSE_POSITIVE, None, corpus, settings, _map(settings.jobs, run_pair, index_pairs))


def evaluate_true_positive(corpus: Corpus, deformation: Deformation, settings: EvaluationSettings,
                           cache: Optional[FeatureCache] = None) -> EvalReport:
    """One (original, deformed original) pair per corpus image"""
    cache = cache or FeatureCache(settings.pyramid, settings.detector, settings.cache_dir)

    def run_image(entry: CorpusEntry):
        features_a, warning = _features_or_warning(cache, entry.image, entry.id)
        label = f"{entry.id}@{deformation.spec}"
        try:
            deformed = apply_deformation(entry.image, deformation)
        except (ImageSizeError, ArgumentError) as e:
            logger.warning(f"{label}: deformation failed ({e})")
            return _match_pair(entry.id, label, features_a, [], settings.ratio, f"{label}: {e}")
        features_b, deformed_warning = _features_or_warning(cache, deformed, label)
        warning = "; ".join(w for w in (warning, deformed_warning) if w)
        return _match_pair(entry.id, label, features_a, features_b, settings.ratio, warning)

    return _assemble(TRUE_POSITIVE, deformation, corpus, settings, _map(settings.jobs, run_image, corpus.entries))


def false_positive_curve(corpus: Corpus, settings: EvaluationSettings) -> Tuple[RateCurve, DeltaPhiHistogram]:
    report = evaluate_false_positive(corpus, settings)
    return report.curve, report.histogram


def true_positive_curve(corpus: Corpus, deformation: Deformation,
                        settings: EvaluationSettings) -> Tuple[RateCurve, DeltaPhiHistogram]:
    report = evaluate_true_positive(corpus, deformation, settings)
    return report.curve, report.histogram


def run_evaluation(corpus: Corpus, mode: str, deformation: Optional[Deformation],
                   settings: EvaluationSettings, cache: Optional[FeatureCache] = None) -> EvalReport:
    """
    Dispatch on mode ("fp"/"tp" or the long names)

    Raises:
        ArgumentError: unknown mode, or tp without a deformation
    """
    mode = MODES.get(mode, mode)
    if mode == FALSE_POSITIVE:
        return evaluate_false_positive(corpus, settings, cache)
    if mode == TRUE_POSITIVE:
        if deformation is None:
            raise ArgumentError("true-positive evaluation requires a deformation")
        return evaluate_true_positive(corpus, deformation, settings, cache)
    raise ArgumentError(f"unknown evaluation mode '{mode}'")


def run_sweep(corpus: Corpus, deformations: Sequence[Deformation], settings: EvaluationSettings) -> List[EvalReport]:
    """True-positive evaluation per deformation, sharing one feature cache for the originals"""
    if not deformations:
        raise ArgumentError("a sweep needs at least one deformation")
    cache = FeatureCache(settings.pyramid, settings.detector, settings.cache_dir)
    return [evaluate_true_positive(corpus, d, settings, cache) for d in deformations]
