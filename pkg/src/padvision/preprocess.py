"""Greyscale conversion and the fixed-kernel context filters.

Pipeline order is greyscale -> 5x5 Gaussian -> (threshold) -> 3x3 erosion ->
5x5 median -> 3x3 dilation.  Border policy: grey filters and the median
replicate the nearest edge pixel; erosion and dilation treat everything
outside the image as background, so border-touching noise does not survive
erosion.  All arithmetic is integer-exact with round-half-up where a division
occurs.
"""

from __future__ import annotations

import numpy as np

from .imgio import BINARY, GREY, RGB, Frame, FrameKindError, binary_from_mask


def _require(frame: Frame, kind: str, op: str) -> None:
    if frame.kind != kind:
        raise FrameKindError(f"{op} needs a {kind} frame, got {frame.kind}")


def to_greyscale(frame: Frame) -> Frame:
    """BT.601 luma: grey = round(0.299 R + 0.587 G + 0.114 B), half rounds up."""
    _require(frame, RGB, "to_greyscale")
    rgb = frame.data.astype(np.uint32)
    num = 299 * rgb[:, :, 0] + 587 * rgb[:, :, 1] + 114 * rgb[:, :, 2]
    grey = (num + 500) // 1000
    return Frame(grey.astype(np.uint8), GREY, frame.frame_index)


def gaussian_5x5(frame: Frame) -> Frame:
    """5x5 binomial blur ([1,4,6,4,1] outer product / 256), replicate borders.

    Separable integer convolution; the final /256 rounds half up.
    """
    _require(frame, GREY, "gaussian_5x5")
    padded = np.pad(frame.data, 2, mode="edge").astype(np.int32)
    rows = (
        padded[:, :-4]
        + 4 * padded[:, 1:-3]
        + 6 * padded[:, 2:-2]
        + 4 * padded[:, 3:-1]
        + padded[:, 4:]
    )
    full = rows[:-4] + 4 * rows[1:-3] + 6 * rows[2:-2] + 4 * rows[3:-1] + rows[4:]
    out = (full + 128) >> 8
    return Frame(out.astype(np.uint8), GREY, frame.frame_index)


def _shift_and(mask: np.ndarray) -> np.ndarray:
    # 3-wide AND along each axis with background (False) outside the image
    h, w = mask.shape
    px = np.zeros((h, w + 2), dtype=bool)
    px[:, 1:-1] = mask
    horiz = px[:, :-2] & px[:, 1:-1] & px[:, 2:]
    py = np.zeros((h + 2, w), dtype=bool)
    py[1:-1] = horiz
    return py[:-2] & py[1:-1] & py[2:]


def _shift_or(mask: np.ndarray) -> np.ndarray:
    h, w = mask.shape
    px = np.zeros((h, w + 2), dtype=bool)
    px[:, 1:-1] = mask
    horiz = px[:, :-2] | px[:, 1:-1] | px[:, 2:]
    py = np.zeros((h + 2, w), dtype=bool)
    py[1:-1] = horiz
    return py[:-2] | py[1:-1] | py[2:]


def erode_3x3(frame: Frame) -> Frame:
    """255 iff the whole 3x3 neighbourhood is 255; outside the image counts 0."""
    _require(frame, BINARY, "erode_3x3")
    return binary_from_mask(_shift_and(frame.data == 255), frame.frame_index)


def dilate_3x3(frame: Frame) -> Frame:
    """255 iff any pixel of the 3x3 neighbourhood is 255; outside counts 0."""
    _require(frame, BINARY, "dilate_3x3")
    return binary_from_mask(_shift_or(frame.data == 255), frame.frame_index)


def median_5x5(frame: Frame) -> Frame:
    """Binary 5x5 median: 255 iff >= 13 of the 25 samples are 255.

    Outside-image samples replicate the nearest edge pixel.  On {0, 255} data
    the majority count is exactly the rank-13 median.
    """
    _require(frame, BINARY, "median_5x5")
    ones = np.pad((frame.data == 255).astype(np.uint8), 2, mode="edge")
    rows = ones[:, :-4] + ones[:, 1:-3] + ones[:, 2:-2] + ones[:, 3:-1] + ones[:, 4:]
    counts = rows[:-4] + rows[1:-3] + rows[2:-2] + rows[3:-1] + rows[4:]
    return binary_from_mask(counts >= 13, frame.frame_index)
