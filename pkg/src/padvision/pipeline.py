"""The per-frame detection pipeline, staged and timed.

Stage order is fixed: greyscale, gaussian, threshold, erosion, median,
dilation, ccl, then the shape/marker analysis.  For sequences the threshold
stage runs in streaming mode (frame N is cut with frame N-1's grid); the
detector also owns the orientation memory that small-circle-only frames fall
back on.  One Detector instance serves one ordered sequence.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from . import ccl as ccl_mod
from . import preprocess, threshold
from .config import Config
from .imgio import GREY, RGB, Box, Dot, Frame, Seg
from .marker import FULL_MARKER, MarkerAssembly, MarkerPose, estimate_pose
from .shapes import (
    LARGE_CIRCLE,
    RECTANGLE,
    SMALL_CIRCLE,
    SQUARE,
    ShapeDetection,
    classify_component,
    expected_sizes,
)

STAGES = ("greyscale", "gaussian", "threshold", "erosion", "median", "dilation", "ccl")
ANALYSIS_STAGE = "analysis"


@dataclass
class FrameResult:
    """Everything the pipeline produced for one frame."""

    frame_index: int
    altitude_m: float
    pose: MarkerPose | None
    assembly: MarkerAssembly | None
    detections: list[ShapeDetection]  # members of the accepted assembly
    candidates: list[ShapeDetection]  # every component that classified
    component_count: int
    grid_source_frame: int | None
    stage_ms: dict = field(default_factory=dict)

    @property
    def total_ms(self) -> float:
        return sum(self.stage_ms.values())

    def to_record(self) -> dict:
        def det_dict(d: ShapeDetection) -> dict:
            return {
                "shape_class": d.shape_class,
                "bbox": list(d.component.bbox),
                "centroid": list(d.component.centroid),
                "area": d.component.area,
                "match_error": d.match_error,
            }

        pose = None
        if self.pose is not None:
            pose = {
                "centre_px": list(self.pose.centre_px),
                "offset_px": list(self.pose.offset_px),
                "offset_cm": list(self.pose.offset_cm),
                "orientation_deg": self.pose.orientation_deg,
                "orientation_fresh": self.pose.orientation_fresh,
                "altitude_m": self.pose.altitude_m,
                "source": self.pose.source,
            }
        return {
            "frame_index": self.frame_index,
            "altitude_m": self.altitude_m,
            "pose": pose,
            "detections": [det_dict(d) for d in self.detections],
            "candidates": [det_dict(d) for d in self.candidates],
            "component_count": self.component_count,
            "grid_source_frame": self.grid_source_frame,
            "stage_ms": dict(self.stage_ms),
        }


class Detector:
    """Streaming landing-pad detector for one ordered frame sequence."""

    def __init__(self, config: Config | None = None):
        self.config = config or Config()
        opts = self.config.pipeline
        self._binarizer = threshold.StreamingBinarizer(opts.window)
        self.last_orientation_deg: float | None = None

    def process(self, frame: Frame, altitude_m: float) -> FrameResult:
        """Run all stages on one frame; altitude gates the expected sizes."""
        cfg = self.config
        opts = cfg.pipeline
        stage_ms: dict[str, float] = {}

        def timed(name, fn, *args):
            t0 = time.perf_counter()
            out = fn(*args)
            stage_ms[name] = (time.perf_counter() - t0) * 1e3
            return out

        if frame.kind == RGB:
            grey = timed("greyscale", preprocess.to_greyscale, frame)
        elif frame.kind == GREY:
            stage_ms["greyscale"] = 0.0
            grey = frame
        else:
            raise ValueError("detector input must be an RGB or grey frame")

        blurred = timed("gaussian", preprocess.gaussian_5x5, grey)

        grid_source = None
        t0 = time.perf_counter()
        if opts.binarize == "interp":
            binary, grid = self._binarizer.push(blurred)
            grid_source = grid.source_frame
        elif opts.binarize == "window":
            grid = threshold.compute_grid(blurred, opts.window)
            binary = threshold.apply_windowed(blurred, grid)
            grid_source = grid.source_frame
        elif opts.binarize == "local":
            binary = threshold.apply_local(blurred, opts.local_radius)
        else:
            binary = threshold.apply_global(blurred, threshold.global_threshold(blurred))
        stage_ms["threshold"] = (time.perf_counter() - t0) * 1e3

        eroded = timed("erosion", preprocess.erode_3x3, binary)
        filtered = timed("median", preprocess.median_5x5, eroded)
        dilated = timed("dilation", preprocess.dilate_3x3, filtered)
        components = timed("ccl", ccl_mod.label_components, dilated, opts.connectivity)

        t0 = time.perf_counter()
        expected = expected_sizes(cfg.marker_spec, cfg.camera, altitude_m)
        candidates = stage_classify(components, expected, altitude_m, cfg.thresholds)
        pose, assembly = estimate_pose(
            candidates,
            altitude_m,
            cfg.marker_spec,
            cfg.camera,
            cfg.thresholds,
            self.last_orientation_deg,
        )
        if pose is not None and pose.source == FULL_MARKER:
            self.last_orientation_deg = pose.orientation_deg
        stage_ms[ANALYSIS_STAGE] = (time.perf_counter() - t0) * 1e3

        return FrameResult(
            frame_index=frame.frame_index,
            altitude_m=altitude_m,
            pose=pose,
            assembly=assembly,
            detections=assembly.members() if assembly is not None else [],
            candidates=candidates,
            component_count=len(components),
            grid_source_frame=grid_source,
            stage_ms=stage_ms,
        )


def stage_classify(components, expected, altitude_m, tol) -> list[ShapeDetection]:
    """Staged figure classification.

    The big circle is looked for first; the square, rectangle and small
    circle are only considered for components whose bbox lies inside a found
    circle's bbox.  Without a circle, and only below the small-circle
    altitude cutoff, components may classify as the small circle alone.
    Analysing the inner figures only inside the circle is what keeps
    arbitrary scene clutter from classifying at all.
    """
    circles = []
    for comp in components:
        det = classify_component(comp, expected, tol, classes=(LARGE_CIRCLE,))
        if det is not None:
            circles.append(det)
    candidates = list(circles)
    if circles:
        inner_classes = (SMALL_CIRCLE, SQUARE, RECTANGLE)
        boxes = [c.component.bbox for c in circles]
        for comp in components:
            x0, y0, x1, y1 = comp.bbox
            inside_any = any(
                x0 >= bx0 and y0 >= by0 and x1 <= bx1 and y1 <= by1
                for bx0, by0, bx1, by1 in boxes
            )
            if not inside_any:
                continue
            det = classify_component(comp, expected, tol, classes=inner_classes)
            if det is not None:
                candidates.append(det)
    elif altitude_m < tol.small_circle_max_altitude:
        for comp in components:
            det = classify_component(comp, expected, tol, classes=(SMALL_CIRCLE,))
            if det is not None:
                candidates.append(det)
    return candidates


def detect_single(frame: Frame, altitude_m: float, config: Config | None = None) -> FrameResult:
    """One-shot detection on a lone frame (its own grid, no streaming state)."""
    return Detector(config).process(frame, altitude_m)


_CLASS_COLORS = {
    LARGE_CIRCLE: (255, 0, 0),
    SQUARE: (0, 255, 0),
    RECTANGLE: (0, 0, 255),
    SMALL_CIRCLE: (255, 0, 0),
}


def result_overlays(result: FrameResult, width: int, height: int) -> list:
    """Overlay list for `imgio.annotate`: figure boxes (circle red, square
    green, rectangle blue), red centre dot, orange orientation ray and the
    magenta field-of-view crosshair."""
    overlays = []
    cx, cy = (width - 1) // 2, (height - 1) // 2
    overlays.append((Seg(0, cy, width - 1, cy), (255, 0, 255)))
    overlays.append((Seg(cx, 0, cx, height - 1), (255, 0, 255)))
    for det in result.detections:
        x0, y0, x1, y1 = det.component.bbox
        overlays.append((Box(x0, y0, x1, y1), _CLASS_COLORS[det.shape_class]))
    if result.pose is not None:
        px, py = result.pose.centre_px
        if result.pose.orientation_deg is not None:
            length = 40.0
            angle = math.radians(result.pose.orientation_deg)
            overlays.append(
                (
                    Seg(
                        int(round(px)),
                        int(round(py)),
                        int(round(px + length * math.cos(angle))),
                        int(round(py + length * math.sin(angle))),
                    ),
                    (255, 165, 0),
                )
            )
        overlays.append((Dot(int(round(px)), int(round(py))), (255, 0, 0)))
    return overlays
