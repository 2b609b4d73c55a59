"""Single-pass connected component labeling with per-component statistics.

Foreground rows are decomposed into horizontal runs; runs get provisional
labels that a union-find table merges as overlaps with the previous row are
discovered, folding area / bounding box / coordinate-sum accumulators into the
surviving root at union time.  One streaming pass over the pixel data plus one
resolution pass over the (bounded) run table; no second scan of the image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imgio import BINARY, Frame, FrameKindError


@dataclass(frozen=True)
class ComponentRecord:
    """Statistics of one maximal connected foreground set.

    `bbox` is (min_x, min_y, max_x, max_y) with inclusive pixel coordinates;
    `centroid` is the mean of the member pixel coordinates.  Labels are dense
    1..K in the order records are returned (descending area, ties broken by
    bbox top-left).
    """

    label: int
    area: int
    bbox: tuple[int, int, int, int]
    centroid: tuple[float, float]
    touches_border: bool

    @property
    def bbox_width(self) -> int:
        return self.bbox[2] - self.bbox[0] + 1

    @property
    def bbox_height(self) -> int:
        return self.bbox[3] - self.bbox[1] + 1

    @property
    def bbox_area(self) -> int:
        return self.bbox_width * self.bbox_height

    @property
    def extent(self) -> float:
        return self.area / self.bbox_area


def _extract_runs(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All horizontal foreground runs as (row, x0, x1_exclusive) arrays."""
    h, w = mask.shape
    padded = np.zeros((h, w + 1), dtype=np.int8)
    padded[:, :w] = mask
    flat = padded.ravel()
    change = np.diff(flat, prepend=np.int8(0), append=np.int8(0))
    starts = np.flatnonzero(change == 1)
    ends = np.flatnonzero(change == -1)
    rows = starts // (w + 1)
    return rows, starts - rows * (w + 1), ends - rows * (w + 1)


def label_components(
    frame: Frame, connectivity: int = 8, return_labels: bool = False
):
    """Label foreground components of a binary frame.

    Returns the component records sorted by descending area (ties by bbox
    min_y then min_x); with `return_labels` also returns an int32 label map
    where background is 0 and each foreground pixel carries its record label.
    """
    if frame.kind != BINARY:
        raise FrameKindError(f"label_components needs a binary frame, got {frame.kind}")
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")

    mask = frame.data == 255
    width, height = frame.width, frame.height
    rows, x0s, x1s = _extract_runs(mask)
    n = len(rows)
    reach = 0 if connectivity == 4 else 1

    parent = list(range(n))
    area = [0] * n
    min_x = [0] * n
    max_x = [0] * n
    min_y = [0] * n
    max_y = [0] * n
    sum_x = [0] * n
    sum_y = [0] * n

    rows_l = rows.tolist()
    x0_l = x0s.tolist()
    x1_l = x1s.tolist()

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    prev_row = -2
    prev_lo = 0  # run-index range [prev_lo, prev_hi) of the previous row
    prev_hi = 0
    row_lo = 0
    p = 0  # two-pointer cursor into the previous row's runs
    for i in range(n):
        y = rows_l[i]
        a = x0_l[i]
        b = x1_l[i]
        length = b - a
        area[i] = length
        min_x[i] = a
        max_x[i] = b - 1
        min_y[i] = y
        max_y[i] = y
        sum_x[i] = (a + b - 1) * length // 2
        sum_y[i] = y * length

        if y != rows_l[row_lo]:
            # row change: the runs [row_lo, i) become the previous row
            prev_row = rows_l[row_lo]
            prev_lo, prev_hi = row_lo, i
            row_lo = i
            p = prev_lo
        if rows_l[row_lo] - prev_row != 1:
            continue  # previous image row was empty; nothing to merge with
        # advance past previous-row runs that end before this run can touch
        while p < prev_hi and x1_l[p] + reach <= a:
            p += 1
        q = p
        while q < prev_hi and x0_l[q] < b + reach:
            ri = find(i)
            rq = find(q)
            if ri != rq:
                # fold the statistics of one root into the other
                if ri < rq:
                    ri, rq = rq, ri
                parent[ri] = rq
                area[rq] += area[ri]
                if min_x[ri] < min_x[rq]:
                    min_x[rq] = min_x[ri]
                if max_x[ri] > max_x[rq]:
                    max_x[rq] = max_x[ri]
                if min_y[ri] < min_y[rq]:
                    min_y[rq] = min_y[ri]
                if max_y[ri] > max_y[rq]:
                    max_y[rq] = max_y[ri]
                sum_x[rq] += sum_x[ri]
                sum_y[rq] += sum_y[ri]
            q += 1
        # a run can touch the next run of this row's predecessors too; step
        # back one so a shared previous run merges with the next current run
        if q > p:
            p = q - 1

    roots = sorted(
        (i for i in range(n) if find(i) == i),
        key=lambda i: (-area[i], min_y[i], min_x[i]),
    )
    records = []
    root_label = {}
    for label, i in enumerate(roots, start=1):
        root_label[i] = label
        records.append(
            ComponentRecord(
                label=label,
                area=area[i],
                bbox=(min_x[i], min_y[i], max_x[i], max_y[i]),
                centroid=(sum_x[i] / area[i], sum_y[i] / area[i]),
                touches_border=(
                    min_x[i] == 0
                    or min_y[i] == 0
                    or max_x[i] == width - 1
                    or max_y[i] == height - 1
                ),
            )
        )

    if not return_labels:
        return records
    label_map = np.zeros((height, width), dtype=np.int32)
    for i in range(n):
        label_map[rows_l[i], x0_l[i] : x1_l[i]] = root_label[find(i)]
    return records, label_map
