"""Image frames, bit-exact binary PGM/PPM I/O, sequence directories, overlay drawing.

Only the binary portable anymap flavours are supported (P5 greyscale, P6 RGB,
maxval 255).  Header comments are accepted on read and never written, so
``write_pnm(read_pnm(b)) == b`` holds for every canonically encoded input.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

RGB = "rgb"
GREY = "grey"
BINARY = "binary"

_WHITESPACE = b" \t\r\n\x0b\x0c"


class PnmDecodeError(ValueError):
    """A PNM byte stream could not be decoded."""


class FrameKindError(ValueError):
    """An operation received a frame of the wrong kind."""


@dataclass(frozen=True, eq=False)
class Frame:
    """One 8-bit image: ``(h, w)`` array for grey/binary, ``(h, w, 3)`` for RGB.

    Frames are immutable values (the pixel buffer is marked read-only), so
    they are safe to share between threads and pipeline stages.  Binary
    frames store 0 or 255 only.
    """

    data: np.ndarray
    kind: str
    frame_index: int = 0

    def __post_init__(self):
        if self.kind not in (RGB, GREY, BINARY):
            raise FrameKindError(f"unknown frame kind {self.kind!r}")
        arr = np.ascontiguousarray(self.data, dtype=np.uint8)
        if self.kind == RGB:
            if arr.ndim != 3 or arr.shape[2] != 3:
                raise FrameKindError("rgb frame needs an (h, w, 3) array")
        else:
            if arr.ndim != 2:
                raise FrameKindError(f"{self.kind} frame needs an (h, w) array")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise FrameKindError("frame dimensions must be positive")
        if self.kind == BINARY and not np.all((arr == 0) | (arr == 255)):
            raise FrameKindError("binary frame may only contain 0 and 255")
        if self.frame_index < 0:
            raise FrameKindError("frame_index must be non-negative")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return 3 if self.kind == RGB else 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.frame_index == other.frame_index
            and self.data.shape == other.data.shape
            and np.array_equal(self.data, other.data)
        )

    def with_index(self, frame_index: int) -> "Frame":
        return Frame(self.data, self.kind, frame_index)


def grey_frame(data, frame_index: int = 0) -> Frame:
    return Frame(np.asarray(data, dtype=np.uint8), GREY, frame_index)


def binary_frame(data, frame_index: int = 0) -> Frame:
    return Frame(np.asarray(data, dtype=np.uint8), BINARY, frame_index)


def rgb_frame(data, frame_index: int = 0) -> Frame:
    return Frame(np.asarray(data, dtype=np.uint8), RGB, frame_index)


def binary_from_mask(mask: np.ndarray, frame_index: int = 0) -> Frame:
    return Frame(np.where(mask, 255, 0).astype(np.uint8), BINARY, frame_index)


def _next_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    n = len(buf)
    while pos < n:
        c = buf[pos]
        if c in _WHITESPACE:
            pos += 1
        elif c == 0x23:  # '#' comment runs to end of line
            while pos < n and buf[pos] not in b"\r\n":
                pos += 1
        else:
            break
    if pos >= n:
        raise PnmDecodeError(f"truncated header at byte {pos}")
    start = pos
    while pos < n and buf[pos] not in _WHITESPACE:
        pos += 1
    return buf[start:pos], pos


def read_pnm(data: bytes, frame_index: int = 0) -> Frame:
    """Decode binary PGM (P5) or PPM (P6) bytes into a Frame.

    Raises PnmDecodeError (with the offending byte offset) for other magics,
    maxval != 255, malformed headers, or a truncated raster.
    """
    magic, pos = _next_token(data, 0)
    if magic not in (b"P5", b"P6"):
        raise PnmDecodeError(f"unsupported magic {magic!r} at byte 0")
    fields = []
    for name in ("width", "height", "maxval"):
        tok, pos = _next_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise PnmDecodeError(f"bad {name} token {tok!r} ending at byte {pos}") from None
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise PnmDecodeError(f"non-positive dimensions {width}x{height} in header")
    if maxval != 255:
        raise PnmDecodeError(f"unsupported maxval {maxval} (only 255)")
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise PnmDecodeError(f"missing whitespace before raster at byte {pos}")
    pos += 1
    channels = 1 if magic == b"P5" else 3
    need = width * height * channels
    raster = data[pos : pos + need]
    if len(raster) != need:
        raise PnmDecodeError(
            f"truncated raster at byte {pos + len(raster)}: need {need} bytes, have {len(raster)}"
        )
    arr = np.frombuffer(raster, dtype=np.uint8)
    if channels == 1:
        return Frame(arr.reshape(height, width), GREY, frame_index)
    return Frame(arr.reshape(height, width, 3), RGB, frame_index)


def write_pnm(frame: Frame) -> bytes:
    """Encode a Frame as canonical binary PNM (grey/binary -> P5, RGB -> P6)."""
    magic = b"P6" if frame.kind == RGB else b"P5"
    header = b"%s\n%d %d\n255\n" % (magic, frame.width, frame.height)
    return header + frame.data.tobytes()


def read_pnm_file(path, frame_index: int = 0) -> Frame:
    return read_pnm(Path(path).read_bytes(), frame_index)


def write_pnm_file(path, frame: Frame) -> None:
    Path(path).write_bytes(write_pnm(frame))


# -- sequence directories ----------------------------------------------------
#
# A sequence is a directory of frame_%06d.ppm (or .pgm) files plus an
# altitude.csv sidecar with "frame_index,altitude_m" lines.

def frame_filename(index: int, ext: str = "ppm") -> str:
    return f"frame_{index:06d}.{ext}"


def list_sequence_frames(directory) -> list[Path]:
    directory = Path(directory)
    paths = sorted(directory.glob("frame_*.ppm")) + sorted(directory.glob("frame_*.pgm"))
    return sorted(paths, key=lambda p: p.name)


def sequence_frame_index(path) -> int:
    stem = Path(path).stem
    try:
        return int(stem.split("_")[-1])
    except ValueError:
        raise PnmDecodeError(f"cannot parse frame index from {path}") from None


def read_altitude_log(path) -> dict[int, float]:
    """Parse altitude.csv: one `frame_index,altitude_m` pair per line."""
    altitudes: dict[int, float] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'frame_index,altitude_m'")
        altitudes[int(parts[0])] = float(parts[1])
    return altitudes


def write_altitude_log(path, altitudes: dict[int, float]) -> None:
    lines = [f"{idx},{altitudes[idx]!r}" for idx in sorted(altitudes)]
    Path(path).write_text("\n".join(lines) + "\n")


# -- overlays ----------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle outline, inclusive pixel corners."""

    x0: int
    y0: int
    x1: int
    y1: int


@dataclass(frozen=True)
class Dot:
    """3x3 filled point marker."""

    x: int
    y: int


@dataclass(frozen=True)
class Seg:
    """1-px line segment between two pixel endpoints."""

    x0: int
    y0: int
    x1: int
    y1: int


Color = tuple[int, int, int]

RED: Color = (255, 0, 0)
GREEN: Color = (0, 255, 0)
BLUE: Color = (0, 0, 255)
ORANGE: Color = (255, 165, 0)
MAGENTA: Color = (255, 0, 255)


def _paint_box(img: np.ndarray, box: Box, color) -> None:
    h, w = img.shape[:2]
    x0, x1 = sorted((box.x0, box.x1))
    y0, y1 = sorted((box.y0, box.y1))
    if x1 < 0 or y1 < 0 or x0 >= w or y0 >= h:
        return
    cx0, cx1 = max(x0, 0), min(x1, w - 1)
    cy0, cy1 = max(y0, 0), min(y1, h - 1)
    if 0 <= y0 < h:
        img[y0, cx0 : cx1 + 1] = color
    if 0 <= y1 < h:
        img[y1, cx0 : cx1 + 1] = color
    if 0 <= x0 < w:
        img[cy0 : cy1 + 1, x0] = color
    if 0 <= x1 < w:
        img[cy0 : cy1 + 1, x1] = color


def _paint_dot(img: np.ndarray, dot: Dot, color) -> None:
    h, w = img.shape[:2]
    if not (0 <= dot.x < w and 0 <= dot.y < h):
        return
    img[max(dot.y - 1, 0) : dot.y + 2, max(dot.x - 1, 0) : dot.x + 2] = color


def _paint_seg(img: np.ndarray, seg: Seg, color) -> None:
    h, w = img.shape[:2]
    x, y = seg.x0, seg.y0
    dx, dy = abs(seg.x1 - seg.x0), -abs(seg.y1 - seg.y0)
    sx = 1 if seg.x0 < seg.x1 else -1
    sy = 1 if seg.y0 < seg.y1 else -1
    err = dx + dy
    while True:
        if 0 <= x < w and 0 <= y < h:
            img[y, x] = color
        if x == seg.x1 and y == seg.y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy


def annotate(frame: Frame, overlays) -> Frame:
    """Return an RGB copy of `frame` with the overlays drawn on top.

    `overlays` is a list of (shape, color) pairs where shape is a Box, Dot or
    Seg.  Shapes outside the image are clipped (a Dot whose centre is outside
    is dropped entirely).  Later overlays win on overlapping pixels.
    """
    if frame.kind == RGB:
        img = frame.data.copy()
    else:
        img = np.repeat(frame.data[:, :, None], 3, axis=2)
    for shape, color in overlays:
        color = np.asarray(color, dtype=np.uint8)
        if isinstance(shape, Box):
            _paint_box(img, shape, color)
        elif isinstance(shape, Dot):
            _paint_dot(img, shape, color)
        elif isinstance(shape, Seg):
            _paint_seg(img, shape, color)
        else:
            raise TypeError(f"unknown overlay shape {shape!r}")
    return Frame(img, RGB, frame.frame_index)
