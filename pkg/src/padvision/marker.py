"""Marker assembly and pose estimation from classified figure detections.

A full fix needs the big circle plus exactly one square and one rectangle
inside its bounding box; the marker centre is then the midpoint of the square
and rectangle centroids and the orientation comes from the square-to-rectangle
direction.  Below a low-altitude cutoff, when the big circle has left the
field of view, a lone small-circle detection keeps providing the centre (its
orientation, if any, is whatever the last full fix measured).

Coordinates: x right, y down, origin at the top-left pixel; positive
orientation is clockwise on screen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .shapes import (
    LARGE_CIRCLE,
    RECTANGLE,
    SMALL_CIRCLE,
    SQUARE,
    CameraModel,
    MarkerSpec,
    ShapeDetection,
    ToleranceProfile,
    filter_inside,
)

FULL_MARKER = "full_marker"
SMALL_CIRCLE_ONLY = "small_circle_only"


def wrap_degrees(angle: float) -> float:
    """Wrap an angle in degrees to (-180, 180]."""
    wrapped = math.fmod(angle + 180.0, 360.0)
    if wrapped <= 0.0:
        wrapped += 360.0
    return wrapped - 180.0


@dataclass(frozen=True)
class MarkerAssembly:
    """Figure detections agreed to be one marker."""

    source: str
    circle: ShapeDetection | None = None
    square: ShapeDetection | None = None
    rectangle: ShapeDetection | None = None
    small_circle: ShapeDetection | None = None

    def members(self) -> list[ShapeDetection]:
        return [
            d
            for d in (self.circle, self.square, self.rectangle, self.small_circle)
            if d is not None
        ]


@dataclass(frozen=True)
class MarkerPose:
    """Marker centre and offsets in the image, plus in-plane orientation.

    `offset_px` is `centre_px` minus the image centre (right/down positive);
    `offset_cm` is the same displacement on the ground plane.  For a
    small-circle-only fix the orientation is carried over from the last full
    fix (`orientation_fresh` is False) or absent.
    """

    centre_px: tuple[float, float]
    offset_px: tuple[float, float]
    offset_cm: tuple[float, float]
    orientation_deg: float | None
    orientation_fresh: bool
    altitude_m: float
    source: str


PAIR_RATIO_MIN = 1.15  # measured square/rectangle area ratio below this is ambiguous
PAIR_RATIO_MAX = 2.2


def _assign_pair(pool: list[ShapeDetection]) -> tuple[ShapeDetection, ShapeDetection] | None:
    """Resolve which of the two inner quadrilaterals is the square.

    Binarization and morphology shrink small figures by a common factor, so
    the absolute expected-area match can flip classes near the tolerance
    boundary; the relative order of the two measured areas cannot.  The
    larger component is the square provided the ratio is marker-like.
    """
    big, small = sorted(pool, key=lambda d: -d.component.area)
    ratio = big.component.area / small.component.area
    if not (PAIR_RATIO_MIN <= ratio <= PAIR_RATIO_MAX):
        return None
    square = big if big.shape_class == SQUARE else ShapeDetection(
        SQUARE, big.component, big.expected_area, big.match_error
    )
    rect = small if small.shape_class == RECTANGLE else ShapeDetection(
        RECTANGLE, small.component, small.expected_area, small.match_error
    )
    return square, rect


def assemble(
    detections: list[ShapeDetection],
    altitude_m: float,
    tol: ToleranceProfile | None = None,
) -> MarkerAssembly | None:
    """Group one frame's detections into a marker, or None.

    Full marker: a big-circle candidate whose bbox contains exactly two
    square/rectangle components with a marker-like area ratio (the larger is
    the square); circle candidates are tried best-match first, and a third
    quadrilateral or a near-unity ratio is ambiguous and rejects the frame.
    A small circle inside is attached when unique.  When no big circle was
    found and the altitude is below the small-circle cutoff, a lone
    small-circle detection makes a degraded assembly.
    """
    tol = tol or ToleranceProfile()
    circles = sorted(
        (d for d in detections if d.shape_class == LARGE_CIRCLE),
        key=lambda d: d.match_error,
    )
    for circle in circles:
        inside = filter_inside(circle, [d for d in detections if d is not circle])
        pool = [d for d in inside if d.shape_class in (SQUARE, RECTANGLE)]
        smalls = [d for d in inside if d.shape_class == SMALL_CIRCLE]
        if len(pool) > 2:
            return None  # ambiguity: refuse rather than guess
        if len(pool) == 2:
            pair = _assign_pair(pool)
            if pair is None:
                return None
            square, rect = pair
            return MarkerAssembly(
                source=FULL_MARKER,
                circle=circle,
                square=square,
                rectangle=rect,
                small_circle=smalls[0] if len(smalls) == 1 else None,
            )
    if not circles and altitude_m < tol.small_circle_max_altitude:
        smalls = [d for d in detections if d.shape_class == SMALL_CIRCLE]
        if len(smalls) == 1:
            return MarkerAssembly(source=SMALL_CIRCLE_ONLY, small_circle=smalls[0])
    return None


def orientation(
    square_centroid: tuple[float, float],
    rect_centroid: tuple[float, float],
    circle_bbox_diameter_px: float,
    nominal_axis_deg: float = 0.0,
    distance_gate: tuple[float, float] = (0.2, 0.8),
) -> float | None:
    """Marker orientation from the square-to-rectangle direction, degrees.

    The centroid separation must fall inside `distance_gate` times the big
    circle's bbox diameter, otherwise the geometry is inconsistent and None
    is returned (the caller drops the assembly).
    """
    dx = rect_centroid[0] - square_centroid[0]
    dy = rect_centroid[1] - square_centroid[1]
    dist = math.hypot(dx, dy)
    lo, hi = distance_gate
    if not (lo * circle_bbox_diameter_px <= dist <= hi * circle_bbox_diameter_px):
        return None
    return wrap_degrees(math.degrees(math.atan2(dy, dx)) - nominal_axis_deg)


def centre(assembly: MarkerAssembly) -> tuple[float, float]:
    """Marker centre: square/rectangle centroid midpoint, or the small circle."""
    if assembly.source == FULL_MARKER:
        sq = assembly.square.component.centroid
        rc = assembly.rectangle.component.centroid
        return ((sq[0] + rc[0]) / 2.0, (sq[1] + rc[1]) / 2.0)
    return assembly.small_circle.component.centroid


def to_metric(
    offset_px: tuple[float, float], altitude_m: float, cam: CameraModel
) -> tuple[float, float]:
    """Pixel offset to ground-plane centimetres: one pixel spans alt/focal metres."""
    if altitude_m <= 0:
        raise ValueError(f"altitude {altitude_m} m must be positive")
    cm_per_px = altitude_m * 100.0 / cam.focal_px
    return (offset_px[0] * cm_per_px, offset_px[1] * cm_per_px)


def estimate_pose(
    detections: list[ShapeDetection],
    altitude_m: float,
    spec: MarkerSpec,
    cam: CameraModel,
    tol: ToleranceProfile | None = None,
    last_orientation_deg: float | None = None,
) -> tuple[MarkerPose | None, MarkerAssembly | None]:
    """Full per-frame pose estimate; returns (pose, assembly) or (None, None).

    `last_orientation_deg` is the orientation memory a sequence caller keeps
    for small-circle-only frames.
    """
    tol = tol or ToleranceProfile()
    assembly = assemble(detections, altitude_m, tol)
    if assembly is None:
        return None, None
    if assembly.source == FULL_MARKER:
        diam = max(
            assembly.circle.component.bbox_width, assembly.circle.component.bbox_height
        )
        angle = orientation(
            assembly.square.component.centroid,
            assembly.rectangle.component.centroid,
            diam,
            spec.nominal_axis_deg,
            tol.distance_gate,
        )
        if angle is None:
            return None, None
        fresh = True
    else:
        angle = last_orientation_deg
        fresh = False
    cx, cy = centre(assembly)
    icx, icy = cam.centre
    offset_px = (cx - icx, cy - icy)
    pose = MarkerPose(
        centre_px=(cx, cy),
        offset_px=offset_px,
        offset_cm=to_metric(offset_px, altitude_m, cam),
        orientation_deg=angle,
        orientation_fresh=fresh,
        altitude_m=altitude_m,
        source=assembly.source,
    )
    return pose, assembly
