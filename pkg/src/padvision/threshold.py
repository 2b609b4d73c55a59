"""Adaptive binarization in non-overlapping windows.

Each window's threshold is the quarter-range rule

    threshold = 0.25 * (max - min) + min

computed over that window's pixels and kept as an exact real (min and max are
8-bit, so the value is an exact quarter-integer).  The binarizer of record
blends thresholds bilinearly between window centres, which removes the block
seams the plain per-window variant shows.  Foreground (255) marks pixels
strictly below the effective threshold: the marker is dark on a light pad.

Streaming sequences follow a one-frame lag: frame N is cut with the grid
measured on frame N-1, so no frame ever has to be buffered.  Frame 0
bootstraps with its own grid.

`apply_global` and `apply_local` are comparison variants only.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

import numpy as np
from scipy.ndimage import maximum_filter, minimum_filter

from .imgio import GREY, Frame, FrameKindError, binary_from_mask

DEFAULT_WINDOW = 128


@dataclass(frozen=True)
class ThresholdGrid:
    """Per-window (min, max, threshold) statistics for one frame geometry.

    `thresholds[r, c] == mins[r, c] + 0.25 * (maxs[r, c] - mins[r, c])`
    exactly.  Partial edge windows are computed over their actual pixels only.
    `source_frame` records which frame the statistics were measured on.
    """

    window: int
    width: int
    height: int
    mins: np.ndarray
    maxs: np.ndarray
    thresholds: np.ndarray
    source_frame: int

    @property
    def rows(self) -> int:
        return self.thresholds.shape[0]

    @property
    def cols(self) -> int:
        return self.thresholds.shape[1]

    def cell(self, row: int, col: int) -> tuple[int, int, float]:
        return (
            int(self.mins[row, col]),
            int(self.maxs[row, col]),
            float(self.thresholds[row, col]),
        )


def _check_geometry(frame: Frame, grid: ThresholdGrid) -> None:
    if (frame.width, frame.height) != (grid.width, grid.height):
        raise ValueError(
            f"grid computed for {grid.width}x{grid.height} applied to "
            f"{frame.width}x{frame.height} frame"
        )


def compute_grid(frame: Frame, window: int = DEFAULT_WINDOW) -> ThresholdGrid:
    """Per-window min/max and quarter-range thresholds for a grey frame."""
    if frame.kind != GREY:
        raise FrameKindError(f"compute_grid needs a grey frame, got {frame.kind}")
    if window < 2:
        raise ValueError("window must be >= 2 pixels")
    data = frame.data
    col_idx = np.arange(0, frame.width, window)
    row_idx = np.arange(0, frame.height, window)
    mins = np.minimum.reduceat(np.minimum.reduceat(data, row_idx, axis=0), col_idx, axis=1)
    maxs = np.maximum.reduceat(np.maximum.reduceat(data, row_idx, axis=0), col_idx, axis=1)
    thresholds = mins + 0.25 * (maxs.astype(np.float64) - mins)
    return ThresholdGrid(
        window=window,
        width=frame.width,
        height=frame.height,
        mins=mins,
        maxs=maxs,
        thresholds=thresholds,
        source_frame=frame.frame_index,
    )


def window_centres(extent: int, window: int) -> np.ndarray:
    """Pixel-centre coordinates of each window along one axis.

    A partial edge window is centred on the pixels it actually covers.
    """
    starts = np.arange(0, extent, window)
    ends = np.minimum(starts + window, extent)
    return (starts + ends - 1) / 2.0


@lru_cache(maxsize=16)
def _axis_weights(extent: int, window: int) -> tuple[np.ndarray, np.ndarray]:
    # Left-neighbour index and blend fraction for every pixel coordinate,
    # clamped to the centre lattice (corner/edge pixels keep the outermost
    # cell's threshold unchanged).
    centres = window_centres(extent, window)
    coords = np.arange(extent, dtype=np.float64)
    if len(centres) == 1:
        return np.zeros(extent, dtype=np.intp), np.zeros(extent)
    left = np.clip(np.searchsorted(centres, coords, side="right") - 1, 0, len(centres) - 2)
    t = (coords - centres[left]) / (centres[left + 1] - centres[left])
    return left, np.clip(t, 0.0, 1.0)


def interpolated_threshold_field(grid: ThresholdGrid) -> np.ndarray:
    """Dense per-pixel threshold surface, bilinear between window centres.

    Every pixel blends the up-to-4 nearest window-centre thresholds; along the
    image edge bands this degenerates to 2 neighbours and in the corner
    regions to the corner cell alone.
    """
    ix, tx = _axis_weights(grid.width, grid.window)
    iy, ty = _axis_weights(grid.height, grid.window)
    ths = grid.thresholds
    if grid.cols == 1:
        rows_interp = np.repeat(ths, grid.width, axis=1)
    else:
        rows_interp = ths[:, ix] * (1.0 - tx) + ths[:, ix + 1] * tx
    if grid.rows == 1:
        return np.repeat(rows_interp, grid.height, axis=0)
    ty_col = ty[:, None]
    return rows_interp[iy] * (1.0 - ty_col) + rows_interp[iy + 1] * ty_col


def apply_interpolated(frame: Frame, grid: ThresholdGrid) -> Frame:
    """Binarize with bilinearly interpolated window thresholds (the default)."""
    if frame.kind != GREY:
        raise FrameKindError(f"apply_interpolated needs a grey frame, got {frame.kind}")
    _check_geometry(frame, grid)
    field = interpolated_threshold_field(grid)
    return binary_from_mask(frame.data < field, frame.frame_index)


def apply_windowed(frame: Frame, grid: ThresholdGrid) -> Frame:
    """Binarize each pixel against its own window's threshold, no blending.

    Visible seams along window boundaries are expected; comparison variant.
    """
    if frame.kind != GREY:
        raise FrameKindError(f"apply_windowed needs a grey frame, got {frame.kind}")
    _check_geometry(frame, grid)
    ys = np.arange(frame.height) // grid.window
    xs = np.arange(frame.width) // grid.window
    field = grid.thresholds[np.ix_(ys, xs)]
    return binary_from_mask(frame.data < field, frame.frame_index)


def apply_global(frame: Frame, th: float) -> Frame:
    """Binarize against one global threshold; comparison variant."""
    if frame.kind != GREY:
        raise FrameKindError(f"apply_global needs a grey frame, got {frame.kind}")
    return binary_from_mask(frame.data < th, frame.frame_index)


def global_threshold(frame: Frame) -> float:
    """Quarter-range rule over the whole frame."""
    lo = int(frame.data.min())
    hi = int(frame.data.max())
    return lo + 0.25 * (hi - lo)


def apply_local(frame: Frame, radius: int = 64) -> Frame:
    """Fully local variant: per-pixel quarter-range over a (2r+1)^2 window.

    The neighbourhood is replicate-padded at the image border.  Comparison
    variant; much slower than the windowed forms.
    """
    if frame.kind != GREY:
        raise FrameKindError(f"apply_local needs a grey frame, got {frame.kind}")
    if radius < 1:
        raise ValueError("radius must be >= 1")
    size = 2 * radius + 1
    lo = minimum_filter(frame.data, size=size, mode="nearest")
    hi = maximum_filter(frame.data, size=size, mode="nearest")
    field = lo + 0.25 * (hi.astype(np.float64) - lo)
    return binary_from_mask(frame.data < field, frame.frame_index)


class StreamingBinarizer:
    """Stateful frame-lag binarizer: frame N uses the grid from frame N-1.

    The first frame pushed is cut with its own grid (bootstrap).  Frames must
    arrive in ascending frame_index order; one instance serves one sequence.
    """

    def __init__(self, window: int = DEFAULT_WINDOW):
        self.window = window
        self._held_grid: ThresholdGrid | None = None
        self._last_index: int | None = None

    def push(self, frame: Frame) -> tuple[Frame, ThresholdGrid]:
        """Binarize `frame`, returning (binary, grid actually applied)."""
        if self._last_index is not None and frame.frame_index <= self._last_index:
            raise ValueError(
                f"frame {frame.frame_index} pushed after frame {self._last_index}"
            )
        current = compute_grid(frame, self.window)
        applied = self._held_grid if self._held_grid is not None else current
        self._held_grid = current
        self._last_index = frame.frame_index
        return apply_interpolated(frame, applied), applied


def stream_binarize(frames: Iterable[Frame], window: int = DEFAULT_WINDOW) -> Iterator[Frame]:
    """Binarize an ordered frame sequence under the one-frame-lag rule."""
    binarizer = StreamingBinarizer(window)
    for frame in frames:
        binary, _ = binarizer.push(frame)
        yield binary
