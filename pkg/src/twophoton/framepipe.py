"""Frame-by-frame data reduction: from analog frames to a G2 estimate.

Each frame is thresholded, 8-connected above-threshold patches become photon
events located at their analog maximum, events outside the readout strip are
dropped, and frames with exactly two remaining events whose vertical
separation is less than one third of their horizontal separation contribute
an outer-product increment to the coincidence accumulator.  Finalization
turns the accumulated counts into a normalized joint pattern, correcting for
the geometry of the vertical-separation filter and interpolating the
resolution-limited near-diagonal band.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage, stats

from .errors import EmptyEstimateError, InvalidParameterError
from .optics import SpatialGrid
from .patterns import FringePattern1D, JointPattern2D, marginal_pattern
from .sensor import FULL_SCALE, CameraModel, PhotonEvent

_CONN8 = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class AnalysisConfig:
    """Reduction parameters; defaults match the default camera model."""

    threshold: int = int(0.2 * FULL_SCALE)
    min_patch: int = 4
    patch_size: int = 3
    strip_rows: tuple[int, int] = (240, 271)
    ratio: float = 1.0 / 3.0
    pitch: float = 24e-6
    correct_acceptance: bool = True

    def __post_init__(self):
        if self.threshold < 0 or self.threshold > FULL_SCALE:
            raise InvalidParameterError("threshold must be within the analog range")
        if self.min_patch < 1:
            raise InvalidParameterError("min_patch must be >= 1")
        if not 0 < self.ratio:
            raise InvalidParameterError("ratio must be positive")
        if self.strip_rows[0] > self.strip_rows[1]:
            raise InvalidParameterError("strip rows must be an inclusive range")

    @property
    def strip_height(self) -> int:
        return self.strip_rows[1] - self.strip_rows[0] + 1

    @classmethod
    def from_camera(cls, camera: CameraModel) -> "AnalysisConfig":
        return cls(
            threshold=camera.threshold_analog,
            patch_size=camera.patch_size,
            strip_rows=camera.strip_rows,
            pitch=camera.pitch,
        )


def threshold_frame(frame: np.ndarray, level: int) -> np.ndarray:
    """Binary matrix: 1 where the analog value strictly exceeds ``level``."""
    if not 0 <= level <= FULL_SCALE:
        raise InvalidParameterError("threshold level outside the analog range")
    return (np.asarray(frame) > level).astype(np.uint8)


def detect_photons(
    binary: np.ndarray, analog: np.ndarray, min_patch: int = 4
) -> list[PhotonEvent]:
    """Photon events from a thresholded frame.

    Each 8-connected component of at least ``min_patch`` pixels yields one
    event at its analog maximum; ties resolve to the smallest (row, col).
    Smaller components (e.g. single-pixel dark counts) are rejected.
    """
    if binary.shape != analog.shape:
        raise InvalidParameterError("binary and analog matrices must have equal shape")
    labels, n = ndimage.label(binary, structure=_CONN8)
    if n == 0:
        return []
    sizes = np.bincount(labels.ravel())
    keep = [lab for lab in range(1, n + 1) if sizes[lab] >= min_patch]
    if not keep:
        return []
    positions = ndimage.maximum_position(analog, labels, keep)
    return [
        PhotonEvent(int(r), int(c), int(analog[int(r), int(c)]))
        for r, c in positions
    ]


@dataclass(frozen=True)
class PairRecord:
    """An accepted coincidence pair, ordered by column."""

    first: PhotonEvent
    second: PhotonEvent

    def __post_init__(self):
        if self.first.col > self.second.col:
            raise InvalidParameterError("pair must be ordered by column")
        if (self.first.row, self.first.col) == (self.second.row, self.second.col):
            raise InvalidParameterError("pair events must occupy distinct pixels")


@dataclass(frozen=True)
class ClassifiedFrame:
    """Outcome of strip selection and pair filtering for one frame.

    ``kind`` is one of empty / single / pair / multi; ``pair`` is set only
    for an accepted pair (a frame with two in-strip events failing the
    vertical filter is kind 'pair' with ``pair=None``).
    """

    kind: str
    pair: PairRecord | None
    in_strip: tuple[PhotonEvent, ...]


def classify_and_filter(
    events: list[PhotonEvent],
    strip_rows: tuple[int, int],
    ratio: float = 1.0 / 3.0,
) -> ClassifiedFrame:
    """Drop out-of-strip events, classify the frame, and filter pairs.

    A two-event frame is accepted as a coincidence pair iff
    |delta row| < ratio * |delta col| (strict; equality rejects).
    """
    r0, r1 = strip_rows
    inside = tuple(e for e in events if r0 <= e.row <= r1)
    if len(inside) == 0:
        return ClassifiedFrame("empty", None, inside)
    if len(inside) == 1:
        return ClassifiedFrame("single", None, inside)
    if len(inside) > 2:
        return ClassifiedFrame("multi", None, inside)
    a, b = sorted(inside, key=lambda e: (e.col, e.row))
    if abs(a.row - b.row) < ratio * abs(a.col - b.col):
        return ClassifiedFrame("pair", PairRecord(a, b), inside)
    return ClassifiedFrame("pair", None, inside)


@dataclass
class CoincidenceAccumulator:
    """Mergeable coincidence statistics over a stream of frames.

    ``matrix`` holds the sum of outer products X^T X of the per-frame binary
    column vectors of accepted pairs; ``singles`` is the column histogram of
    single-photon frames.  Merging accumulators equals accumulating the
    concatenated frame stream, in any order.
    """

    width: int
    matrix: np.ndarray = field(repr=False, default=None)
    singles: np.ndarray = field(repr=False, default=None)
    frames_total: int = 0
    frames_empty: int = 0
    frames_single: int = 0
    frames_pair: int = 0
    frames_multi: int = 0
    pairs_rejected: int = 0

    def __post_init__(self):
        if self.matrix is None:
            self.matrix = np.zeros((self.width, self.width), dtype=np.int64)
        if self.singles is None:
            self.singles = np.zeros(self.width, dtype=np.int64)

    @property
    def pairs_accepted(self) -> int:
        return int(self.matrix.sum() // 4)

    def class_counts(self) -> dict[str, int]:
        return {
            "empty": self.frames_empty,
            "single": self.frames_single,
            "pair": self.frames_pair,
            "multi": self.frames_multi,
        }

    def merge(self, other: "CoincidenceAccumulator") -> "CoincidenceAccumulator":
        if other.width != self.width:
            raise InvalidParameterError("cannot merge accumulators of different width")
        self.matrix += other.matrix
        self.singles += other.singles
        self.frames_total += other.frames_total
        self.frames_empty += other.frames_empty
        self.frames_single += other.frames_single
        self.frames_pair += other.frames_pair
        self.frames_multi += other.frames_multi
        self.pairs_rejected += other.pairs_rejected
        return self


def accumulate_pair(acc: CoincidenceAccumulator, pair: PairRecord) -> None:
    """Add the outer product of the pair's binary column vector to the sum.

    X has 1's at the two columns, so X^T X contributes four increments:
    (i,i), (j,j), (i,j), (j,i).
    """
    i, j = pair.first.col, pair.second.col
    if not (0 <= i < acc.width and 0 <= j < acc.width):
        raise InvalidParameterError("pair columns outside the accumulator width")
    acc.matrix[i, i] += 1
    acc.matrix[j, j] += 1
    acc.matrix[i, j] += 1
    acc.matrix[j, i] += 1


def process_frame(frame: np.ndarray, cfg: AnalysisConfig, acc: CoincidenceAccumulator) -> str:
    """Reduce one frame into the accumulator; returns the frame class.

    Only the readout strip (padded by one patch so patches crossing the
    strip edge are seen whole) is examined: events outside the strip are
    dropped regardless, so this matches full-frame processing.
    """
    acc.frames_total += 1
    r0, r1 = cfg.strip_rows
    margin = cfg.patch_size - 1
    v0 = max(r0 - margin, 0)
    view = frame[v0 : min(r1 + margin + 1, frame.shape[0])]
    if view.max(initial=0) <= cfg.threshold:
        acc.frames_empty += 1
        return "empty"
    binary = threshold_frame(view, cfg.threshold)
    events = [
        PhotonEvent(e.row + v0, e.col, e.peak)
        for e in detect_photons(binary, view, cfg.min_patch)
    ]
    cls = classify_and_filter(events, cfg.strip_rows, cfg.ratio)
    if cls.kind == "empty":
        acc.frames_empty += 1
    elif cls.kind == "single":
        acc.frames_single += 1
        acc.singles[cls.in_strip[0].col] += 1
    elif cls.kind == "multi":
        acc.frames_multi += 1
    else:
        acc.frames_pair += 1
        if cls.pair is None:
            acc.pairs_rejected += 1
        else:
            accumulate_pair(acc, cls.pair)
    return cls.kind


def vertical_acceptance(
    delta_col: np.ndarray | int, strip_height: int, ratio: float = 1.0 / 3.0
) -> np.ndarray | float:
    """Probability that the vertical filter accepts a pair at |delta col|.

    Rows are independent and uniform over the strip, so acceptance is the
    exact count of integer row pairs with |delta row| < ratio * |delta col|
    over strip_height^2.  This is the geometric bias the filter imposes as a
    function of horizontal separation; finalize divides it out.
    """
    if strip_height < 1:
        raise InvalidParameterError("strip height must be >= 1")
    dc = np.abs(np.asarray(delta_col, dtype=float))
    # largest integer strictly below ratio*|dc|
    m = np.ceil(ratio * dc).astype(int) - 1
    m = np.clip(m, -1, strip_height - 1)
    h = float(strip_height)
    ordered = np.where(m < 0, 0.0, h + 2 * (m * h - m * (m + 1) / 2.0))
    out = ordered / h**2
    return float(out) if np.isscalar(delta_col) else out


def missing_band_mask(width: int, patch_size: int = 3) -> np.ndarray:
    """Cells the pipeline cannot estimate: |col' - col''| <= patch size.

    Two photons this close merge into a single detected patch (or are cut
    by the vertical filter), so the band — including the diagonal — holds
    no usable counts and is interpolated in the finalized estimate.
    """
    idx = np.arange(width)
    return np.abs(idx[:, None] - idx[None, :]) <= patch_size


def _interpolate_missing(values: np.ndarray, missing: np.ndarray, window: int = 7) -> np.ndarray:
    """Fill missing cells with the mean of valid cells in a square window."""
    out = values.copy()
    todo = missing.copy()
    while todo.any():
        valid = (~todo).astype(float)
        num = ndimage.uniform_filter(out * valid, size=window, mode="constant")
        den = ndimage.uniform_filter(valid, size=window, mode="constant")
        fixable = todo & (den > 0)
        if not fixable.any():
            break
        out[fixable] = num[fixable] / den[fixable]
        todo &= ~fixable
    return out


def corrected_counts(
    acc: CoincidenceAccumulator, cfg: AnalysisConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Acceptance-corrected pair counts, their variances, and the missing mask.

    Counts at horizontal separation dc are divided by the vertical-filter
    acceptance; variances follow Poisson statistics of the raw counts scaled
    by the same factor squared.
    """
    idx = np.arange(acc.width)
    dc = np.abs(idx[:, None] - idx[None, :])
    missing = missing_band_mask(acc.width, cfg.patch_size)
    raw = acc.matrix.astype(float)
    if cfg.correct_acceptance:
        a = vertical_acceptance(np.arange(acc.width), cfg.strip_height, cfg.ratio)
        a2d = a[dc]
        missing = missing | (a2d <= 0)
        scale = np.where(missing, 0.0, 1.0 / np.where(a2d > 0, a2d, 1.0))
    else:
        scale = np.where(missing, 0.0, 1.0)
    counts = raw * scale
    variances = raw * scale**2
    return counts, variances, missing


def finalize(acc: CoincidenceAccumulator, cfg: AnalysisConfig) -> JointPattern2D:
    """Normalized G2 estimate from the accumulated counts.

    Divides by the total frame count, corrects the vertical-filter
    acceptance, interpolates the missing near-diagonal band (each missing
    cell gets the mean of valid cells within 3 pixels), symmetrizes, and
    unit-sum normalizes on the pixel-center position grid.
    """
    if acc.pairs_accepted == 0:
        raise EmptyEstimateError("no accepted coincidence pairs to finalize")
    counts, _, missing = corrected_counts(acc, cfg)
    est = counts / acc.frames_total
    est = _interpolate_missing(est, missing)
    est = 0.5 * (est + est.T)
    grid = _pixel_grid(acc.width, cfg.pitch)
    total = est.sum() * grid.spacing**2
    if total <= 0:
        raise EmptyEstimateError("estimate has zero total mass")
    return JointPattern2D(grid, est / total, "coincidence", unit_sum=True)


def _pixel_grid(width: int, pitch: float) -> SpatialGrid:
    half = (width - 1) / 2 * pitch
    return SpatialGrid(-half, half, width)


def superpixel_bin(matrix: np.ndarray, factor: int = 4) -> np.ndarray:
    """Block-sum into factor x factor superpixels (1-D arrays bin by factor).

    Axes not divisible by the factor are zero-padded at the high end first,
    so the total is always preserved exactly.
    """
    if factor < 1:
        raise InvalidParameterError("superpixel factor must be >= 1")
    m = np.asarray(matrix, dtype=float)
    if factor == 1:
        return m.copy()
    pad = [(0, (-s) % factor) for s in m.shape]
    m = np.pad(m, pad)
    if m.ndim == 1:
        return m.reshape(-1, factor).sum(axis=1)
    if m.ndim == 2:
        return m.reshape(m.shape[0] // factor, factor, m.shape[1] // factor, factor).sum(axis=(1, 3))
    raise InvalidParameterError("superpixel binning supports 1-D and 2-D arrays")


def estimate_marginal(estimate: JointPattern2D) -> FringePattern1D:
    """Single-photon rate from the G2 estimate: integrate over one position."""
    return marginal_pattern(estimate)


@dataclass(frozen=True)
class Chi2Result:
    statistic: float
    dof: int
    pvalue: float


def chi2_compare(observed: np.ndarray, expected: np.ndarray, variance: np.ndarray) -> Chi2Result:
    """Chi-square comparison of two binned curves with known per-bin variance.

    ``variance`` is the variance of (observed - expected) per bin; bins with
    non-positive variance are skipped.  One degree of freedom is charged for
    the shared normalization.
    """
    o = np.asarray(observed, dtype=float).ravel()
    e = np.asarray(expected, dtype=float).ravel()
    v = np.asarray(variance, dtype=float).ravel()
    use = v > 0
    n = int(use.sum())
    if n < 2:
        raise InvalidParameterError("need at least 2 usable bins")
    stat = float(np.sum((o[use] - e[use]) ** 2 / v[use]))
    dof = n - 1
    return Chi2Result(stat, dof, float(stats.chi2.sf(stat, dof)))


def marginal_consistency(
    acc: CoincidenceAccumulator, cfg: AnalysisConfig, factor: int = 4
) -> Chi2Result:
    """Compare the G2-estimate marginal against the direct singles histogram.

    Both are reduced to superpixel bins and normalized; the chi-square uses
    propagated variances (acceptance-corrected Poisson for the marginal,
    Poisson for the singles).  The unobservable near-diagonal band is left
    out of the marginal rather than interpolated: interpolated cells are
    correlated combinations of the high-weight cells next to the band, which
    would add variance the per-cell propagation cannot see, and the band
    carries a per-row mass fraction so nearly uniform that dropping it is
    absorbed by the shared normalization.
    """
    counts, variances, _ = corrected_counts(acc, cfg)
    marg = superpixel_bin(counts.sum(axis=1), factor)
    marg_var = superpixel_bin(variances.sum(axis=1), factor)
    singles = superpixel_bin(acc.singles.astype(float), factor)
    n1, n2 = marg.sum(), singles.sum()
    if n1 <= 0 or n2 <= 0:
        raise EmptyEstimateError("not enough counts for a consistency test")
    d1, d2 = marg / n1, singles / n2
    var = marg_var / n1**2 + singles / n2**2
    return chi2_compare(d1, d2, var)


def estimate_pair_rate(acc: CoincidenceAccumulator, quantum_efficiency: float) -> float:
    """Mean generated pairs per frame, inferred from the empty-frame fraction.

    A frame is empty iff every generated photon went undetected, so with
    Poisson pair statistics P(empty) = exp(-m (1 - (1-eta)^2)).  The empty
    count is immune to patch merging and dark-count rejection, which makes
    this the most robust rate estimate the counters offer.
    """
    if not 0 < quantum_efficiency <= 1:
        raise InvalidParameterError("quantum efficiency must be in (0, 1]")
    if acc.frames_total == 0 or acc.frames_empty == 0:
        raise EmptyEstimateError("cannot estimate the pair rate without empty frames")
    f_empty = acc.frames_empty / acc.frames_total
    return -np.log(f_empty) / (1.0 - (1.0 - quantum_efficiency) ** 2)


def accidental_fraction(mean_pairs: float, quantum_efficiency: float, k_max: int = 64) -> float:
    """Fraction of accepted coincidences that are accidental cross pairs.

    A frame with k generated pairs and exactly two surviving photons yields
    a candidate pair; of the k(2k-1) equally likely survivor subsets, k are
    true pairs and 2k(k-1) pair photons from different down-conversion
    events.  Accidentals share the true pairs' marginal, so they dilute the
    excess-pattern fringe amplitudes by exactly (1 - fraction).
    """
    if mean_pairs < 0:
        raise InvalidParameterError("mean pairs must be >= 0")
    eta = quantum_efficiency
    k = np.arange(1, k_max + 1)
    log_pois = k * np.log(mean_pairs) - mean_pairs - np.cumsum(np.log(k)) if mean_pairs > 0 else None
    if log_pois is None:
        return 0.0
    pois = np.exp(log_pois)
    weight = pois * (1.0 - eta) ** (2 * k - 2)  # common eta^2 factor cancels
    total = np.sum(weight * k * (2 * k - 1))
    cross = np.sum(weight * 2 * k * (k - 1))
    if total <= 0:
        return 0.0
    return float(cross / total)


@dataclass(frozen=True)
class AnalysisResult:
    """Everything the reduction of a frame stream produces."""

    accumulator: CoincidenceAccumulator
    estimate: JointPattern2D
    marginal: FringePattern1D
    missing: np.ndarray
    config: AnalysisConfig


def _source_width(source) -> int:
    header = getattr(source, "header", None)
    if header is not None:
        return header.width
    camera = getattr(source, "camera", None)
    if camera is not None:
        return camera.width
    return source.frame(0).shape[1]


def _reduce_range(source, cfg: AnalysisConfig, lo: int, hi: int, width: int) -> CoincidenceAccumulator:
    acc = CoincidenceAccumulator(width)
    is_blank = getattr(source, "is_blank", None)
    for k in range(lo, hi):
        if is_blank is not None and is_blank(k):
            # an all-zero frame classifies as empty without rendering it
            acc.frames_total += 1
            acc.frames_empty += 1
            continue
        process_frame(source.frame(k), cfg, acc)
    return acc


def analyze_source(source, cfg: AnalysisConfig | None = None, workers: int = 1) -> AnalysisResult:
    """Reduce a frame source (BIFR reader or simulator) end to end.

    Frames are split into ``workers`` contiguous index ranges, each reduced
    into a private accumulator, and merged in index order — the result is
    identical for any worker count.
    """
    if workers < 1:
        raise InvalidParameterError("workers must be >= 1")
    cfg = cfg or AnalysisConfig()
    n = len(source)
    width = _source_width(source) if n else 0
    if n == 0:
        raise EmptyEstimateError("frame source is empty")
    bounds = [n * k // workers for k in range(workers + 1)]
    if workers == 1:
        total = _reduce_range(source, cfg, 0, n, width)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    lambda io: _reduce_range(source, cfg, io[0], io[1], width),
                    zip(bounds[:-1], bounds[1:]),
                )
            )
        total = parts[0]
        for part in parts[1:]:
            total.merge(part)
    estimate = finalize(total, cfg)
    _, _, missing = corrected_counts(total, cfg)
    return AnalysisResult(total, estimate, estimate_marginal(estimate), missing, cfg)
