"""Monte Carlo photon-pair generation and synthetic camera frames.

Pairs of detector positions are drawn from a discrete joint probability
density, thinned by the quantum efficiency, given a vertical coordinate
inside the readout strip, and rendered as small above-threshold analog
patches on a pixel raster, the way an intensified camera registers single
photons.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import InvalidParameterError
from .frameio import write_frames
from .optics import SpatialGrid
from .patterns import JointPattern2D

FULL_SCALE = 65535


@dataclass(frozen=True)
class CameraModel:
    """Geometry, gain statistics, and readout strip of the synthetic camera.

    Analog levels are fractions of the 16-bit full scale.  A photon patch
    has its peak drawn from ``peak_range`` and each neighbor at a
    ``neighbor_range`` fraction of that peak, so the peak pixel is the
    strict patch maximum.  Dark events are single above-threshold pixels, so
    the minimum-patch-size cut in the analysis rejects them.
    """

    width: int = 512
    height: int = 512
    pitch: float = 24e-6
    quantum_efficiency: float = 0.5
    patch_size: int = 3
    peak_range: tuple[float, float] = (0.6, 1.0)
    neighbor_range: tuple[float, float] = (0.4, 0.8)
    # 0.2 keeps every patch pixel above threshold given the ranges above
    threshold: float = 0.2
    dark_rate: float = 0.05
    strip_rows: tuple[int, int] = (240, 271)

    def __post_init__(self):
        if not 0 <= self.quantum_efficiency <= 1:
            raise InvalidParameterError("quantum efficiency must be in [0, 1]")
        if self.patch_size % 2 != 1 or self.patch_size < 1:
            raise InvalidParameterError("patch size must be odd and positive")
        r0, r1 = self.strip_rows
        if not (0 <= r0 <= r1 < self.height):
            raise InvalidParameterError("strip rows must lie inside the frame")
        lo = self.peak_range[0] * self.neighbor_range[0]
        if lo <= self.threshold:
            raise InvalidParameterError(
                "threshold must sit below the dimmest patch pixel "
                f"({lo:.3f} of full scale) or patches break apart"
            )

    @property
    def threshold_analog(self) -> int:
        return int(self.threshold * FULL_SCALE)

    @property
    def strip_height(self) -> int:
        return self.strip_rows[1] - self.strip_rows[0] + 1

    def pixel_grid(self) -> SpatialGrid:
        """Horizontal pixel-center positions, centered on the optical axis."""
        half = (self.width - 1) / 2 * self.pitch
        return SpatialGrid(-half, half, self.width)

    def position_to_col(self, x: np.ndarray) -> np.ndarray:
        col = np.rint(x / self.pitch + (self.width - 1) / 2).astype(int)
        return np.clip(col, 0, self.width - 1)


@dataclass(frozen=True)
class PhotonEvent:
    row: int
    col: int
    peak: int = 0


def sample_pairs(
    pdf: JointPattern2D, n_pairs: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw (x', x'') position pairs from a discrete joint density.

    Inverse-CDF sampling over the flattened cell probabilities, with uniform
    jitter inside each cell.  Returns an (n_pairs, 2) array of positions.
    """
    cdf = _pair_cdf(pdf)
    return _sample_from_cdf(cdf, pdf.grid, n_pairs, rng)


def _pair_cdf(pdf: JointPattern2D) -> np.ndarray:
    v = np.asarray(pdf.values, dtype=float).ravel()
    if v.min() < 0:
        if v.min() < -1e-12 * max(v.max(), 1.0):
            raise InvalidParameterError("pdf has negative entries")
        v = np.clip(v, 0.0, None)
    total = v.sum()
    if total <= 0:
        raise InvalidParameterError("pdf has zero total mass")
    return np.cumsum(v) / total


def _sample_from_cdf(
    cdf: np.ndarray, grid: SpatialGrid, n_pairs: int, rng: np.random.Generator
) -> np.ndarray:
    n = grid.n
    flat = np.searchsorted(cdf, rng.random(n_pairs), side="right")
    flat = np.minimum(flat, n * n - 1)
    i, j = np.divmod(flat, n)
    x = grid.positions
    dx = grid.spacing
    jitter = rng.uniform(-dx / 2, dx / 2, size=(n_pairs, 2))
    return np.column_stack([x[i], x[j]]) + jitter


def apply_detection(
    pairs: np.ndarray, quantum_efficiency: float, rng: np.random.Generator
) -> np.ndarray:
    """Thin pair positions by the quantum efficiency.

    Each photon of each pair survives independently.  Returns the surviving
    positions as a flat array, pair by pair.
    """
    if not 0 <= quantum_efficiency <= 1:
        raise InvalidParameterError("quantum efficiency must be in [0, 1]")
    if len(pairs) == 0:
        return np.empty(0)
    flat = np.asarray(pairs, dtype=float).ravel()
    survive = rng.random(flat.size) < quantum_efficiency
    return flat[survive]


def render_frame(
    events: list[PhotonEvent],
    camera: CameraModel,
    rng: np.random.Generator,
    n_dark: int = 0,
) -> np.ndarray:
    """Render photon events and dark spikes into a uint16 analog frame.

    Each event deposits a patch whose maximum sits at the event pixel with
    strictly smaller neighbors; overlapping deposits combine by maximum.
    Dark events are single pixels drawn uniformly over the frame.
    """
    frame = np.zeros((camera.height, camera.width), dtype=np.uint16)
    half = camera.patch_size // 2
    for ev in events:
        if not (0 <= ev.row < camera.height and 0 <= ev.col < camera.width):
            raise InvalidParameterError(f"event {ev} outside the frame")
        peak = rng.uniform(*camera.peak_range) * FULL_SCALE
        r0, r1 = max(ev.row - half, 0), min(ev.row + half, camera.height - 1)
        c0, c1 = max(ev.col - half, 0), min(ev.col + half, camera.width - 1)
        patch = rng.uniform(*camera.neighbor_range, size=(r1 - r0 + 1, c1 - c0 + 1)) * peak
        patch[ev.row - r0, ev.col - c0] = peak
        region = frame[r0 : r1 + 1, c0 : c1 + 1]
        np.maximum(region, patch.astype(np.uint16), out=region)
    for _ in range(n_dark):
        r = rng.integers(0, camera.height)
        c = rng.integers(0, camera.width)
        level = int(rng.uniform(0.3, 1.0) * FULL_SCALE)
        frame[r, c] = max(frame[r, c], level)
    return frame


@dataclass
class FrameSimulator:
    """Deterministic frame stream for a joint coincidence density.

    Frame ``k`` is a pure function of (pattern, camera, mean_pairs, seed, k):
    every frame derives its own random generator from the master seed and
    the frame index, so generation parallelizes over frame ranges without
    changing the output.
    """

    pattern: JointPattern2D
    camera: CameraModel
    n_frames: int
    mean_pairs: float
    seed: int
    _cdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_frames < 0 or self.mean_pairs < 0:
            raise InvalidParameterError("frame count and pair rate must be >= 0")
        self._cdf = _pair_cdf(self.pattern)

    def __len__(self) -> int:
        return self.n_frames

    def _rng(self, k: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(entropy=self.seed, spawn_key=(k,))
        )

    def frame_events(self, k: int) -> tuple[list[PhotonEvent], int, np.random.Generator]:
        """Photon events and dark-event count for frame ``k``.

        The returned generator continues the frame's stream and must be
        passed on to the renderer for bit-reproducible frames.
        """
        rng = self._rng(k)
        cam = self.camera
        n_pairs = int(rng.poisson(self.mean_pairs))
        events: list[PhotonEvent] = []
        if n_pairs > 0:
            positions = _sample_from_cdf(self._cdf, self.pattern.grid, n_pairs, rng)
            surviving = apply_detection(positions, cam.quantum_efficiency, rng)
            if surviving.size:
                cols = cam.position_to_col(surviving)
                rows = rng.integers(cam.strip_rows[0], cam.strip_rows[1] + 1, size=cols.size)
                events = [PhotonEvent(int(r), int(c)) for r, c in zip(rows, cols)]
        n_dark = int(rng.poisson(cam.dark_rate))
        return events, n_dark, rng

    def frame(self, k: int) -> np.ndarray:
        events, n_dark, rng = self.frame_events(k)
        return render_frame(events, self.camera, rng, n_dark)

    def is_blank(self, k: int) -> bool:
        """True when frame ``k`` renders all-zero (no events, no darks)."""
        events, n_dark, _ = self.frame_events(k)
        return not events and n_dark == 0

    def iter_frames(self, start: int = 0, stop: int | None = None):
        stop = self.n_frames if stop is None else stop
        for k in range(start, stop):
            yield self.frame(k)

    def write(self, path: str | Path) -> None:
        """Stream the whole run to a BIFR frame file."""
        write_frames(
            path,
            self.camera.width,
            self.camera.height,
            self.iter_frames(),
            self.n_frames,
        )


def generate_run(
    pattern: JointPattern2D,
    camera: CameraModel,
    n_frames: int,
    mean_pairs_per_frame: float,
    seed: int,
    path: str | Path,
) -> FrameSimulator:
    """Generate a frame stream and write it to ``path``; returns the simulator."""
    sim = FrameSimulator(pattern, camera, n_frames, mean_pairs_per_frame, seed)
    sim.write(path)
    return sim
