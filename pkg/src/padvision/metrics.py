"""Evaluation metrics: pure functions of (detection records, ground truth).

A frame counts as a detection success when a pose was produced and its
centre lies within `success_radius_px` of the true centre.  Centroid and
orientation errors are averaged over success frames only.  A classified
shape whose bbox is not contained in the true marker bbox is a false shape;
on marker-free frames every classified shape is false and every pose is a
false fix.
"""

from __future__ import annotations

import math

from .marker import wrap_degrees

SUCCESS_RADIUS_PX = 10.0


class EvaluationError(ValueError):
    """Records and ground truth do not line up."""


def _bbox_inside(inner, outer) -> bool:
    return (
        inner[0] >= outer[0]
        and inner[1] >= outer[1]
        and inner[2] <= outer[2]
        and inner[3] <= outer[3]
    )


def evaluate(
    records: list[dict],
    truths: list[dict],
    success_radius_px: float = SUCCESS_RADIUS_PX,
) -> dict:
    """Score detection records against ground truth, frame by frame."""
    if len(records) != len(truths):
        raise EvaluationError(
            f"{len(records)} detection records vs {len(truths)} truth records"
        )
    by_index = {r["frame_index"]: r for r in records}
    if len(by_index) != len(records):
        raise EvaluationError("duplicate frame_index in detection records")

    visible_frames = 0
    successes = 0
    false_fixes = 0
    false_shapes = 0
    abs_dx: list[float] = []
    abs_dy: list[float] = []
    abs_dtheta: list[float] = []

    for truth in truths:
        idx = truth["frame_index"]
        if idx not in by_index:
            raise EvaluationError(f"no detection record for frame {idx}")
        rec = by_index[idx]
        pose = rec.get("pose")
        visible = truth.get("visible", False)
        marker_bbox = truth.get("marker_bbox")

        for cand in rec.get("candidates", []):
            if marker_bbox is None or not _bbox_inside(cand["bbox"], marker_bbox):
                false_shapes += 1

        if visible:
            visible_frames += 1
            if pose is not None:
                dx = pose["centre_px"][0] - truth["centre_px"][0]
                dy = pose["centre_px"][1] - truth["centre_px"][1]
                if math.hypot(dx, dy) <= success_radius_px:
                    successes += 1
                    abs_dx.append(abs(dx))
                    abs_dy.append(abs(dy))
                    if pose.get("orientation_deg") is not None:
                        abs_dtheta.append(
                            abs(
                                wrap_degrees(
                                    pose["orientation_deg"] - truth["orientation_deg"]
                                )
                            )
                        )
        elif pose is not None:
            false_fixes += 1

    def mean(xs):
        return sum(xs) / len(xs) if xs else None

    return {
        "frames": len(truths),
        "visible_frames": visible_frames,
        "detected_frames": successes,
        "detection_rate": successes / visible_frames if visible_frames else None,
        "false_fixes": false_fixes,
        "false_shapes": false_shapes,
        "centroid_mae_px": [mean(abs_dx), mean(abs_dy)],
        "orientation_mae_deg": mean(abs_dtheta),
        "success_radius_px": success_radius_px,
    }


def format_report(metrics: dict) -> str:
    lines = [
        f"frames:            {metrics['frames']}",
        f"visible frames:    {metrics['visible_frames']}",
        f"detected frames:   {metrics['detected_frames']}",
    ]
    rate = metrics["detection_rate"]
    lines.append(f"detection rate:    {rate:.4f}" if rate is not None else "detection rate:    n/a")
    mx, my = metrics["centroid_mae_px"]
    if mx is not None:
        lines.append(f"centroid MAE:      {mx:.3f} px (x), {my:.3f} px (y)")
    else:
        lines.append("centroid MAE:      n/a")
    theta = metrics["orientation_mae_deg"]
    lines.append(
        f"orientation MAE:   {theta:.3f} deg" if theta is not None else "orientation MAE:   n/a"
    )
    lines.append(f"false fixes:       {metrics['false_fixes']}")
    lines.append(f"false shapes:      {metrics['false_shapes']}")
    return "\n".join(lines)
