"""Altitude-gated classification of components into the marker's figures.

The marker is a black ring whose white interior carries three smaller black
figures: a square and a rectangle (together fixing the orientation) and a
small centre circle.  A component is accepted for a figure class only when
its pixel area matches the size expected from the current altitude, its
bounding box and fill ratio look right for the class, and (for circles) the
bounding-box diameter agrees with the projected diameter.  Without an
altitude there are no expected sizes and nothing classifies, which is what
keeps false detections out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .ccl import ComponentRecord

LARGE_CIRCLE = "large_circle"
SMALL_CIRCLE = "small_circle"
SQUARE = "square"
RECTANGLE = "rectangle"

ALL_CLASSES = (LARGE_CIRCLE, SMALL_CIRCLE, SQUARE, RECTANGLE)


@dataclass(frozen=True)
class CameraModel:
    """Nadir pinhole camera: principal point at the image centre."""

    width: int = 1280
    height: int = 720
    focal_px: float = 400.0

    def __post_init__(self):
        if self.focal_px <= 0:
            raise ValueError("focal_px must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("camera dimensions must be positive")

    @property
    def centre(self) -> tuple[float, float]:
        return ((self.width - 1) / 2.0, (self.height - 1) / 2.0)


@dataclass(frozen=True)
class MarkerSpec:
    """Physical dimensions of the landing marker, metres.

    The big circle is a ring (black outline with a white interior); the
    square and rectangle sit symmetrically on the nominal axis either side of
    the centre (their centroid midpoint is the marker centre) and the small
    circle sits at the centre.  `nominal_axis_deg` is the image-frame
    square-to-rectangle direction at orientation zero; the default of 180
    matches a camera mounted rotated half a turn about its optical axis
    relative to the vehicle body, so a drone at the target heading sees the
    axis along image -x.
    """

    large_circle_outer_diameter: float = 0.40
    ring_thickness: float = 0.05
    small_circle_diameter: float = 0.05
    square_side: float = 0.08
    rect_width: float = 0.09
    rect_height: float = 0.05
    square_centre_offset: tuple[float, float] = (-0.085, 0.0)
    rect_centre_offset: tuple[float, float] = (0.085, 0.0)
    nominal_axis_deg: float = 180.0
    pad_margin: float = 0.04  # white border around the ring

    def __post_init__(self):
        dims = (
            self.large_circle_outer_diameter,
            self.ring_thickness,
            self.small_circle_diameter,
            self.square_side,
            self.rect_width,
            self.rect_height,
        )
        if any(d <= 0 for d in dims):
            raise ValueError("all marker dimensions must be positive")
        rect_area = self.rect_width * self.rect_height
        square_area = self.square_side**2
        if max(rect_area, square_area) < 1.3 * min(rect_area, square_area):
            raise ValueError("square and rectangle areas must differ by >= 30%")
        inner_r = self.inner_radius
        for cx, cy, hx, hy in (
            (*self.square_centre_offset, self.square_side / 2, self.square_side / 2),
            (*self.rect_centre_offset, self.rect_width / 2, self.rect_height / 2),
        ):
            if math.hypot(abs(cx) + hx, abs(cy) + hy) >= inner_r:
                raise ValueError("square and rectangle must fit inside the ring interior")
        if self.small_circle_diameter / 2 >= inner_r:
            raise ValueError("small circle must fit inside the ring interior")

    @property
    def outer_radius(self) -> float:
        return self.large_circle_outer_diameter / 2.0

    @property
    def inner_radius(self) -> float:
        return self.outer_radius - self.ring_thickness

    @property
    def pad_radius(self) -> float:
        return self.outer_radius + self.pad_margin

    @property
    def ring_area(self) -> float:
        return math.pi * (self.outer_radius**2 - self.inner_radius**2)

    @property
    def small_circle_area(self) -> float:
        return math.pi * (self.small_circle_diameter / 2.0) ** 2

    @property
    def square_area(self) -> float:
        return self.square_side**2

    @property
    def rect_area(self) -> float:
        return self.rect_width * self.rect_height


@dataclass(frozen=True)
class ExpectedSizes:
    """Projected pixel dimensions of each figure at one altitude."""

    scale_px_per_m: float
    ring_outer_diameter_px: float
    ring_area_px: float
    small_diameter_px: float
    small_area_px: float
    square_side_px: float
    square_area_px: float
    rect_long_px: float
    rect_short_px: float
    rect_area_px: float

    def area_of(self, shape_class: str) -> float:
        return {
            LARGE_CIRCLE: self.ring_area_px,
            SMALL_CIRCLE: self.small_area_px,
            SQUARE: self.square_area_px,
            RECTANGLE: self.rect_area_px,
        }[shape_class]


def expected_sizes(spec: MarkerSpec, cam: CameraModel, altitude_m: float) -> ExpectedSizes:
    """Pinhole scaling of the marker dimensions: size_px = focal * size_m / altitude."""
    if altitude_m <= 0.05:
        raise ValueError(f"altitude {altitude_m} m too low for size prediction")
    s = cam.focal_px / altitude_m
    return ExpectedSizes(
        scale_px_per_m=s,
        ring_outer_diameter_px=spec.large_circle_outer_diameter * s,
        ring_area_px=spec.ring_area * s * s,
        small_diameter_px=spec.small_circle_diameter * s,
        small_area_px=spec.small_circle_area * s * s,
        square_side_px=spec.square_side * s,
        square_area_px=spec.square_area * s * s,
        rect_long_px=max(spec.rect_width, spec.rect_height) * s,
        rect_short_px=min(spec.rect_width, spec.rect_height) * s,
        rect_area_px=spec.rect_area * s * s,
    )


@dataclass(frozen=True)
class ToleranceProfile:
    """Acceptance windows for the figure classifier.

    `area_tol` is the relative half-width of the area gate; `extents` maps
    class to the allowed area/bbox_area window; `diameter_band` bounds a
    circle candidate's bbox diameter relative to the projection;
    `side_band` bounds a square/rectangle candidate's bbox sides between the
    expected short side and the expected diagonal.  `distance_gate` is the
    square-rectangle separation window relative to the big-circle diameter
    used during marker assembly, and `small_circle_max_altitude` is the
    cutoff below which a lone small circle may stand in for the whole marker.
    """

    area_tol: float = 0.5
    aspect_max: float = 1.25
    extents: dict = field(
        default_factory=lambda: {
            LARGE_CIRCLE: (0.15, 0.45),
            SMALL_CIRCLE: (0.6, 0.9),
            SQUARE: (0.45, 1.0),
            RECTANGLE: (0.28, 1.0),
        }
    )
    diameter_band: tuple[float, float] = (0.85, 1.15)
    side_band: tuple[float, float] = (0.7, 1.3)
    distance_gate: tuple[float, float] = (0.2, 0.8)
    small_circle_max_altitude: float = 0.35


@dataclass(frozen=True)
class ShapeDetection:
    """One component accepted as a marker figure."""

    shape_class: str
    component: ComponentRecord
    expected_area: float
    match_error: float  # relative area error, >= 0


def _side_limits(shape_class: str, expected: ExpectedSizes) -> tuple[float, float]:
    # shortest and longest bbox side any rotation of the figure can produce
    if shape_class == SQUARE:
        return expected.square_side_px, expected.square_side_px * math.sqrt(2.0)
    diag = math.hypot(expected.rect_long_px, expected.rect_short_px)
    return expected.rect_short_px, diag


def classify_component(
    component: ComponentRecord,
    expected: ExpectedSizes,
    tol: ToleranceProfile | None = None,
    classes=ALL_CLASSES,
) -> ShapeDetection | None:
    """Best figure class for a component, or None when nothing matches.

    Gates, in order: area against the altitude-derived expectation, bbox
    aspect (circles and square), fill extent per class, bbox size against
    the projected diameter (circles) or side range (square/rectangle).  The
    class with the smallest relative area error wins, which is also what
    separates the square from the rectangle.  `classes` restricts the
    candidate set (the pipeline looks for the inner figures only inside an
    already-found big circle).
    """
    tol = tol or ToleranceProfile()
    bw, bh = component.bbox_width, component.bbox_height
    aspect = max(bw, bh) / min(bw, bh)
    ext = component.extent
    best: ShapeDetection | None = None
    for shape_class in classes:
        exp_area = expected.area_of(shape_class)
        err = abs(component.area - exp_area) / exp_area
        if err > tol.area_tol:
            continue
        if shape_class != RECTANGLE and aspect > tol.aspect_max:
            continue
        lo, hi = tol.extents[shape_class]
        if not (lo <= ext <= hi):
            continue
        if shape_class in (LARGE_CIRCLE, SMALL_CIRCLE):
            diam = (
                expected.ring_outer_diameter_px
                if shape_class == LARGE_CIRCLE
                else expected.small_diameter_px
            )
            if not (tol.diameter_band[0] * diam <= max(bw, bh) <= tol.diameter_band[1] * diam):
                continue
            # a cropped circle's geometry is unreliable
            if component.touches_border:
                continue
        else:
            short, long = _side_limits(shape_class, expected)
            if min(bw, bh) < tol.side_band[0] * short:
                continue
            if max(bw, bh) > tol.side_band[1] * long:
                continue
        if best is None or err < best.match_error:
            best = ShapeDetection(shape_class, component, exp_area, err)
    return best


def filter_inside(
    circle: ShapeDetection, others: list[ShapeDetection]
) -> list[ShapeDetection]:
    """Keep detections whose whole bbox lies inside the big circle's bbox."""
    cx0, cy0, cx1, cy1 = circle.component.bbox
    kept = []
    for det in others:
        x0, y0, x1, y1 = det.component.bbox
        if x0 >= cx0 and y0 >= cy0 and x1 <= cx1 and y1 <= cy1:
            kept.append(det)
    return kept
