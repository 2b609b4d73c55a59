"""Deterministic synthetic renderer of the landing marker under a nadir
pinhole camera; the ground-truth oracle for the quantitative tests.

The pad is planar and the camera points straight down.  Marker figures are
rasterized with 4x4 supersampling inside their projected bounding boxes and
composited over the background; an additive illumination ramp and seeded
Gaussian pixel noise follow, then round-half-up quantization.  Identical
(spec, camera, pose, seed) inputs produce bit-identical frames.

Scene coordinates: the drone position is measured in image axes (x right,
y down) relative to the pad centre; yaw rotates the marker clockwise on
screen.  A corpus is a directory of numbered PPM frames plus altitude.csv
and truth.jsonl.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .imgio import Frame, RGB, frame_filename, write_altitude_log, write_pnm_file
from .marker import wrap_degrees
from .shapes import CameraModel, MarkerSpec

MARKER_BLACK = 10.0
PAD_WHITE = 240.0


@dataclass(frozen=True)
class Background:
    """uniform(level), checker(period, levels) or texture(seed), ground-anchored."""

    kind: str = "uniform"
    level: float = 160.0
    period_m: float = 0.25
    levels: tuple[float, float] = (90.0, 190.0)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("uniform", "checker", "texture"):
            raise ValueError(f"unknown background kind {self.kind!r}")


@dataclass(frozen=True)
class Illumination:
    """Additive brightness field: base + per-axis ramps (edge-to-centre delta)."""

    base: float = 128.0
    ramp_x: float = 0.0
    ramp_y: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.base <= 255.0):
            raise ValueError("illumination base level must be in [0, 255]")


@dataclass(frozen=True)
class ScenePose:
    position: tuple[float, float] = (0.0, 0.0)  # drone offset from pad centre, m
    altitude: float = 1.0
    yaw_deg: float = 0.0
    illumination: Illumination = field(default_factory=Illumination)
    noise_sigma: float = 0.0
    background: Background = field(default_factory=Background)

    def __post_init__(self):
        if self.altitude <= 0:
            raise ValueError("altitude must be positive")


@dataclass
class GroundTruth:
    frame_index: int
    visible: bool  # ring, square and rectangle all fully in view
    centre_px: tuple[float, float]
    orientation_deg: float
    marker_bbox: tuple[int, int, int, int] | None
    figures: dict
    pose: dict

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _rotation(yaw_deg: float) -> np.ndarray:
    a = math.radians(yaw_deg)
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


def _texture_field(gx: np.ndarray, gy: np.ndarray, bg: Background) -> np.ndarray:
    # smooth sum of random plane waves, anchored in ground coordinates
    rng = np.random.default_rng(bg.seed)
    k = 6
    wavelengths = rng.uniform(0.4, 1.2, size=k)
    angles = rng.uniform(0.0, 2 * math.pi, size=k)
    phases = rng.uniform(0.0, 2 * math.pi, size=k)
    amps = rng.uniform(0.5, 1.0, size=k)
    value = np.zeros_like(gx)
    for i in range(k):
        freq = 2 * math.pi / wavelengths[i]
        proj = gx * math.cos(angles[i]) + gy * math.sin(angles[i])
        value += amps[i] * np.cos(freq * proj + phases[i])
    value /= amps.sum()
    lo, hi = min(bg.levels), max(bg.levels)
    return (lo + hi) / 2.0 + (hi - lo) / 2.0 * value


def _background_image(cam: CameraModel, pose: ScenePose) -> np.ndarray:
    bg = pose.background
    if bg.kind == "uniform":
        return np.full((cam.height, cam.width), float(bg.level), dtype=np.float32)
    cx, cy = cam.centre
    s = cam.focal_px / pose.altitude
    gx = (np.arange(cam.width, dtype=np.float32) - cx) / s + pose.position[0]
    gy = (np.arange(cam.height, dtype=np.float32) - cy) / s + pose.position[1]
    gxx, gyy = np.meshgrid(gx, gy)
    if bg.kind == "checker":
        parity = (np.floor(gxx / bg.period_m) + np.floor(gyy / bg.period_m)).astype(np.int64) & 1
        return np.where(parity == 0, bg.levels[0], bg.levels[1]).astype(np.float32)
    return _texture_field(gxx, gyy, bg).astype(np.float32)


class _Projection:
    """Pixel <-> marker-frame affine for one scene pose."""

    def __init__(self, spec: MarkerSpec, cam: CameraModel, pose: ScenePose):
        self.scale = cam.focal_px / pose.altitude
        cx, cy = cam.centre
        self.centre_px = (
            cx - self.scale * pose.position[0],
            cy - self.scale * pose.position[1],
        )
        self.rot = _rotation(pose.yaw_deg)  # marker -> image axes
        self.inv = self.rot.T

    def marker_to_px(self, points: np.ndarray) -> np.ndarray:
        img = points @ self.rot.T * self.scale
        return img + np.asarray(self.centre_px)

    def px_bbox_of_circle(self, centre_m, radius_m) -> tuple[float, float, float, float]:
        cpx = self.marker_to_px(np.asarray(centre_m, dtype=float)[None, :])[0]
        r = radius_m * self.scale
        return cpx[0] - r, cpx[1] - r, cpx[0] + r, cpx[1] + r

    def px_bbox_of_rect(self, centre_m, half_w, half_h) -> tuple[float, float, float, float]:
        cx, cy = centre_m
        corners = np.array(
            [
                [cx - half_w, cy - half_h],
                [cx + half_w, cy - half_h],
                [cx + half_w, cy + half_h],
                [cx - half_w, cy + half_h],
            ]
        )
        pts = self.marker_to_px(corners)
        return pts[:, 0].min(), pts[:, 1].min(), pts[:, 0].max(), pts[:, 1].max()


def _coverage(
    proj: _Projection,
    bbox: tuple[float, float, float, float],
    membership,
    width: int,
    height: int,
    supersample: int,
) -> tuple[int, int, np.ndarray] | None:
    """(x0, y0, coverage array) of a figure over its clipped pixel bbox."""
    x0 = max(int(math.floor(bbox[0])), 0)
    y0 = max(int(math.floor(bbox[1])), 0)
    x1 = min(int(math.ceil(bbox[2])) + 1, width)
    y1 = min(int(math.ceil(bbox[3])) + 1, height)
    if x0 >= x1 or y0 >= y1:
        return None
    ss = supersample
    xs = x0 - 0.5 + (np.arange((x1 - x0) * ss, dtype=np.float64) + 0.5) / ss
    ys = y0 - 0.5 + (np.arange((y1 - y0) * ss, dtype=np.float64) + 0.5) / ss
    px = xs[None, :] - proj.centre_px[0]
    py = ys[:, None] - proj.centre_px[1]
    inv = proj.inv / proj.scale
    mx = inv[0, 0] * px + inv[0, 1] * py
    my = inv[1, 0] * px + inv[1, 1] * py
    inside = membership(mx, my)
    cov = inside.reshape(y1 - y0, ss, x1 - x0, ss).mean(axis=(1, 3), dtype=np.float32)
    return x0, y0, cov


def _composite(img: np.ndarray, placed, value: float) -> None:
    if placed is None:
        return
    x0, y0, cov = placed
    region = img[y0 : y0 + cov.shape[0], x0 : x0 + cov.shape[1]]
    region *= 1.0 - cov
    region += value * cov


def _figure_bboxes(spec: MarkerSpec, proj: _Projection) -> dict:
    return {
        "large_circle": proj.px_bbox_of_circle((0.0, 0.0), spec.outer_radius),
        "small_circle": proj.px_bbox_of_circle((0.0, 0.0), spec.small_circle_diameter / 2),
        "square": proj.px_bbox_of_rect(
            spec.square_centre_offset, spec.square_side / 2, spec.square_side / 2
        ),
        "rectangle": proj.px_bbox_of_rect(
            spec.rect_centre_offset, spec.rect_width / 2, spec.rect_height / 2
        ),
    }


def render(
    spec: MarkerSpec,
    cam: CameraModel,
    pose: ScenePose,
    seed: int = 0,
    frame_index: int = 0,
    include_marker: bool = True,
    supersample: int = 4,
) -> tuple[Frame, GroundTruth]:
    """Render one frame and its exact ground truth.

    A marker outside the view renders as plain background with
    `visible=False` ground truth.
    """
    proj = _Projection(spec, cam, pose)
    img = _background_image(cam, pose)
    w, h = cam.width, cam.height

    bboxes = _figure_bboxes(spec, proj)
    if include_marker:
        pad = _coverage(
            proj,
            proj.px_bbox_of_circle((0.0, 0.0), spec.pad_radius),
            lambda mx, my: mx * mx + my * my <= spec.pad_radius**2,
            w,
            h,
            supersample,
        )
        _composite(img, pad, PAD_WHITE)
        r_out2 = spec.outer_radius**2
        r_in2 = spec.inner_radius**2

        def ring_member(mx, my):
            d2 = mx * mx + my * my
            return (d2 >= r_in2) & (d2 <= r_out2)

        figures = [
            (bboxes["large_circle"], ring_member),
            (
                bboxes["small_circle"],
                lambda mx, my: mx * mx + my * my <= (spec.small_circle_diameter / 2) ** 2,
            ),
            (
                bboxes["square"],
                lambda mx, my: (
                    (np.abs(mx - spec.square_centre_offset[0]) <= spec.square_side / 2)
                    & (np.abs(my - spec.square_centre_offset[1]) <= spec.square_side / 2)
                ),
            ),
            (
                bboxes["rectangle"],
                lambda mx, my: (
                    (np.abs(mx - spec.rect_centre_offset[0]) <= spec.rect_width / 2)
                    & (np.abs(my - spec.rect_centre_offset[1]) <= spec.rect_height / 2)
                ),
            ),
        ]
        for bbox, member in figures:
            _composite(img, _coverage(proj, bbox, member, w, h, supersample), MARKER_BLACK)

    illum = pose.illumination
    if illum.base != 128.0 or illum.ramp_x or illum.ramp_y:
        ramp_u = (
            illum.ramp_x * (2.0 * np.arange(w, dtype=np.float32) / max(w - 1, 1) - 1.0)
            if illum.ramp_x
            else 0.0
        )
        ramp_v = (
            illum.ramp_y * (2.0 * np.arange(h, dtype=np.float32) / max(h - 1, 1) - 1.0)
            if illum.ramp_y
            else 0.0
        )
        img = img + (illum.base - 128.0)
        if illum.ramp_x:
            img = img + ramp_u[None, :]
        if illum.ramp_y:
            img = img + ramp_v[:, None]

    if pose.noise_sigma > 0:
        rng = np.random.default_rng(seed)
        img = img + rng.normal(0.0, pose.noise_sigma, size=img.shape)

    quantized = np.clip(np.floor(img.astype(np.float64) + 0.5), 0.0, 255.0).astype(np.uint8)
    frame = Frame(np.repeat(quantized[:, :, None], 3, axis=2), RGB, frame_index)

    figure_truth = {}
    for name, bbox in bboxes.items():
        fully_visible = (
            include_marker
            and bbox[0] >= 0
            and bbox[1] >= 0
            and bbox[2] <= w - 1
            and bbox[3] <= h - 1
        )
        clipped = (
            max(int(math.floor(bbox[0])), 0),
            max(int(math.floor(bbox[1])), 0),
            min(int(math.ceil(bbox[2])), w - 1),
            min(int(math.ceil(bbox[3])), h - 1),
        )
        on_screen = clipped[0] <= clipped[2] and clipped[1] <= clipped[3]
        figure_truth[name] = {
            "bbox": list(clipped) if on_screen else None,
            "visible": bool(fully_visible),
        }

    visible = include_marker and all(
        figure_truth[name]["visible"] for name in ("large_circle", "square", "rectangle")
    )
    truth = GroundTruth(
        frame_index=frame_index,
        visible=bool(visible),
        centre_px=tuple(float(v) for v in proj.centre_px),
        orientation_deg=wrap_degrees(pose.yaw_deg - spec.nominal_axis_deg),
        marker_bbox=figure_truth["large_circle"]["bbox"],
        figures=figure_truth,
        pose={
            "position_m": list(pose.position),
            "altitude_m": pose.altitude,
            "yaw_deg": pose.yaw_deg,
            "illumination": dataclasses.asdict(pose.illumination),
            "noise_sigma": pose.noise_sigma,
            "background": dataclasses.asdict(pose.background),
            "include_marker": include_marker,
        },
    )
    return frame, truth


# -- corpus generation --------------------------------------------------------

@dataclass(frozen=True)
class CorpusRecipe:
    """Distribution over scene poses for a rendered sequence.

    The default recipe flies a smooth descent: altitude sweeps the configured
    range (so its marginal distribution covers it evenly), position follows a
    random walk capped both by `max_offset_frac` of the half frame and by
    whole-marker visibility, yaw drifts freely, and the illumination ramp and
    noise level wander within their budgets.  Background parameters are drawn
    once per corpus.
    """

    marker: bool = True
    altitude_start: float = 1.5
    altitude_end: float = 0.3
    altitude_wiggle: float = 0.04
    max_offset_frac: float = 0.4
    visibility_margin_px: float = 8.0
    offset_step_px: float = 12.0
    yaw_step_deg: float = 4.0
    illum_ramp_max: float = 40.0
    noise_sigma_range: tuple[float, float] = (0.0, 4.0)
    background: str = "texture"
    bg_level_range: tuple[float, float] = (70.0, 210.0)
    checker_period_m: float = 0.25
    supersample: int = 4


def marker_free_recipe() -> CorpusRecipe:
    """Textured frames without any marker (false-positive probing)."""
    return CorpusRecipe(marker=False, altitude_start=1.5, altitude_end=0.5)


def _corpus_background(recipe: CorpusRecipe, rng: np.random.Generator) -> Background:
    if recipe.background == "uniform":
        return Background(kind="uniform", level=float(rng.uniform(*recipe.bg_level_range)))
    if recipe.background == "checker":
        lo = float(rng.uniform(recipe.bg_level_range[0], 140.0))
        hi = float(rng.uniform(150.0, recipe.bg_level_range[1]))
        return Background(kind="checker", period_m=recipe.checker_period_m, levels=(lo, hi))
    return Background(kind="texture", seed=int(rng.integers(0, 2**31 - 1)))


def corpus_poses(
    recipe: CorpusRecipe, n: int, seed: int, spec: MarkerSpec, cam: CameraModel
) -> list[ScenePose]:
    """The deterministic pose trajectory of a corpus."""
    if n < 1:
        raise ValueError("corpus needs n >= 1 frames")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x706F7365]))
    background = _corpus_background(recipe, rng)

    alts = np.linspace(recipe.altitude_start, recipe.altitude_end, n)
    if n > 1 and recipe.altitude_wiggle > 0:
        phase = rng.uniform(0, 2 * math.pi)
        cycles = rng.uniform(2.0, 4.0)
        alts = alts + recipe.altitude_wiggle * np.sin(
            2 * math.pi * cycles * np.arange(n) / n + phase
        )
        lo = min(recipe.altitude_start, recipe.altitude_end)
        hi = max(recipe.altitude_start, recipe.altitude_end)
        alts = np.clip(alts, lo, hi)

    yaw = rng.uniform(-180.0, 180.0)
    ramp_angle = rng.uniform(0, 2 * math.pi)
    ramp_amp = rng.uniform(0.3, 1.0) * recipe.illum_ramp_max
    offset = None
    poses = []
    for i in range(n):
        alt = float(alts[i])
        s = cam.focal_px / alt
        cap_x = min(
            recipe.max_offset_frac * cam.width / 2,
            max(0.0, cam.width / 2 - spec.pad_radius * s - recipe.visibility_margin_px),
        )
        cap_y = min(
            recipe.max_offset_frac * cam.height / 2,
            max(0.0, cam.height / 2 - spec.pad_radius * s - recipe.visibility_margin_px),
        )
        if offset is None:
            offset = np.array([rng.uniform(-cap_x, cap_x), rng.uniform(-cap_y, cap_y)])
        else:
            offset = offset + rng.normal(0.0, recipe.offset_step_px, size=2)
        offset = np.clip(offset, [-cap_x, -cap_y], [cap_x, cap_y])
        yaw += rng.normal(0.0, recipe.yaw_step_deg)
        ramp_angle += rng.normal(0.0, 0.08)
        rx = ramp_amp * math.cos(ramp_angle)
        ry = ramp_amp * math.sin(ramp_angle)
        poses.append(
            ScenePose(
                position=(float(-offset[0] / s), float(-offset[1] / s)),
                altitude=alt,
                yaw_deg=float(yaw),
                illumination=Illumination(base=128.0, ramp_x=rx, ramp_y=ry),
                noise_sigma=float(rng.uniform(*recipe.noise_sigma_range)),
                background=background,
            )
        )
    return poses


def make_corpus(
    recipe: CorpusRecipe,
    n: int,
    seed: int,
    out_dir,
    spec: MarkerSpec | None = None,
    cam: CameraModel | None = None,
) -> Path:
    """Write a reproducible sequence: frame_%06d.ppm, altitude.csv, truth.jsonl."""
    spec = spec or MarkerSpec()
    cam = cam or CameraModel()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    poses = corpus_poses(recipe, n, seed, spec, cam)
    frame_seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence([seed, 1]).spawn(n)]
    altitudes = {}
    with (out / "truth.jsonl").open("w") as truth_file:
        for i, pose in enumerate(poses):
            frame, truth = render(
                spec,
                cam,
                pose,
                seed=frame_seeds[i],
                frame_index=i,
                include_marker=recipe.marker,
                supersample=recipe.supersample,
            )
            write_pnm_file(out / frame_filename(i), frame)
            altitudes[i] = pose.altitude
            truth_file.write(json.dumps(truth.to_dict()) + "\n")
    write_altitude_log(out / "altitude.csv", altitudes)
    return out


def read_truth(corpus_dir) -> list[dict]:
    path = Path(corpus_dir) / "truth.jsonl"
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
