"""Global canvas composition from placed tiles.

Placements are rasterized to integer pixel offsets (round half away
from zero) and tiles are written onto an accumulation canvas in
row-major acquisition order.  Raw mode overwrites, so later tiles win
inside overlaps and the overwrite boundaries define the seam lines.
Feathered mode gives each tile a weight map that is 1 in its interior
and ramps linearly to 0 across every tile edge that lies inside an
overlap with a grid neighbor, the ramp spanning that overlap's width;
the canvas accumulates weight*value and weight and finalizes by
division.  For two tiles with complementary ramps the result is exactly
the classic two-image seam feather; corner regions where four tiles
meet fall out of the same normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .correction import RectROI
from .errors import CompositionError, DimensionMismatchError
from .geometry import TilePlacement


class ComposeMode(Enum):
    RAW_OVERWRITE = "raw"
    FEATHERED = "feathered"


class Axis(Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"


def round_half_away(x: float) -> int:
    """Round to nearest integer, ties away from zero."""
    if x >= 0.0:
        return int(math.floor(x + 0.5))
    return int(math.ceil(x - 0.5))


def rasterize(placement: TilePlacement) -> tuple[int, int]:
    """Integer (x, y) canvas offset of a placement."""
    return round_half_away(placement.dx), round_half_away(placement.dy)


@dataclass
class MosaicCanvas:
    """Accumulation grids plus a per-pixel count of contributing tiles."""

    width: int
    height: int
    mode: ComposeMode
    value_sum: np.ndarray = field(repr=False)
    weight_sum: np.ndarray = field(repr=False)
    touch_count: np.ndarray = field(repr=False)

    @classmethod
    def empty(cls, width: int, height: int, mode: ComposeMode) -> "MosaicCanvas":
        return cls(
            width=width,
            height=height,
            mode=mode,
            value_sum=np.zeros((height, width), dtype=np.float64),
            weight_sum=np.zeros((height, width), dtype=np.float64),
            touch_count=np.zeros((height, width), dtype=np.uint8),
        )

    def covered(self) -> np.ndarray:
        """Boolean mask of pixels any tile contributed to."""
        return self.weight_sum > 0.0

    def finalize(self) -> np.ndarray:
        """Per-pixel intensity: value_sum/weight_sum, 0 where uncovered."""
        out = np.zeros((self.height, self.width), dtype=np.float64)
        mask = self.covered()
        out[mask] = self.value_sum[mask] / self.weight_sum[mask]
        return out


@dataclass(frozen=True)
class OverlapRegion:
    """Intersection of two grid-adjacent tiles' rasterized bounding boxes."""

    tile_a: tuple[int, int]
    tile_b: tuple[int, int]
    rect: RectROI
    axis: Axis


@dataclass(frozen=True)
class SeamLine:
    """Raw-mode overwrite boundary, derived purely from placement geometry.

    A vertical seam at ``position`` x separates pixel columns x-1 and x
    over rows ``start <= y < stop``; a horizontal seam is the transpose.
    """

    orientation: Axis
    position: int
    start: int
    stop: int


def canvas_dims(
    placements: Sequence[TilePlacement], tile_width: int, tile_height: int
) -> tuple[int, int]:
    """Canvas size enclosing every rasterized tile box."""
    if not placements:
        raise CompositionError("cannot size a canvas from zero placements")
    xs = [rasterize(p)[0] for p in placements]
    ys = [rasterize(p)[1] for p in placements]
    if min(xs) < 0 or min(ys) < 0:
        raise CompositionError(
            "placements must be origin-shifted (negative offsets found)"
        )
    return max(xs) + tile_width, max(ys) + tile_height


def _by_index(placements: Sequence[TilePlacement]) -> dict[tuple[int, int], TilePlacement]:
    table = {(p.row, p.col): p for p in placements}
    if len(table) != len(placements):
        raise CompositionError("duplicate (row, col) placement indices")
    return table


def _box_intersection(
    pa: TilePlacement, pb: TilePlacement, tile_width: int, tile_height: int
) -> RectROI | None:
    xa, ya = rasterize(pa)
    xb, yb = rasterize(pb)
    x0 = max(xa, xb)
    y0 = max(ya, yb)
    x1 = min(xa, xb) + tile_width
    y1 = min(ya, yb) + tile_height
    if x1 <= x0 or y1 <= y0:
        return None
    return RectROI(x0=x0, y0=y0, width=x1 - x0, height=y1 - y0)


def compute_overlaps(
    placements: Sequence[TilePlacement], tile_width: int, tile_height: int
) -> list[OverlapRegion]:
    """Overlap regions for every grid-adjacent pair whose boxes intersect.

    ``axis`` is the adjacency direction: HORIZONTAL for (i,j)-(i,j+1)
    pairs (the seam between them runs vertically), VERTICAL for
    (i,j)-(i+1,j) pairs.
    """
    table = _by_index(placements)
    overlaps: list[OverlapRegion] = []
    for p in placements:
        i, j = p.row, p.col
        right = table.get((i, j + 1))
        if right is not None:
            rect = _box_intersection(p, right, tile_width, tile_height)
            if rect is not None:
                overlaps.append(
                    OverlapRegion(tile_a=(i, j), tile_b=(i, j + 1), rect=rect, axis=Axis.HORIZONTAL)
                )
        below = table.get((i + 1, j))
        if below is not None:
            rect = _box_intersection(p, below, tile_width, tile_height)
            if rect is not None:
                overlaps.append(
                    OverlapRegion(tile_a=(i, j), tile_b=(i + 1, j), rect=rect, axis=Axis.VERTICAL)
                )
    return overlaps


def _edge_ramp(length: int, ramp_px: int, from_start: bool) -> np.ndarray:
    """Multiplicative 1D ramp over one tile axis.

    Depth d from the ramped edge gets (d + 0.5)/ramp_px, the pixel-center
    sampling of a line that is 0 at the tile's outer boundary and 1 where
    the overlap ends; complementary ramps from the two tiles then sum to
    1 at every overlap pixel.
    """
    ramp = np.ones(length, dtype=np.float64)
    d = np.arange(min(ramp_px, length), dtype=np.float64)
    values = (d + 0.5) / float(ramp_px)
    if from_start:
        ramp[: values.size] *= values
    else:
        ramp[length - values.size:] *= values[::-1]
    return ramp


def tile_weight_map(
    index: tuple[int, int],
    tile_width: int,
    tile_height: int,
    overlaps: Sequence[OverlapRegion],
) -> np.ndarray:
    """Separable feathering weights for one tile given its overlaps."""
    i, j = index
    wx = np.ones(tile_width, dtype=np.float64)
    wy = np.ones(tile_height, dtype=np.float64)
    for ov in overlaps:
        if ov.axis is Axis.HORIZONTAL:
            if ov.tile_b == (i, j):  # neighbor on the left: ramp the left edge
                wx *= _edge_ramp(tile_width, ov.rect.width, from_start=True)
            elif ov.tile_a == (i, j):  # neighbor on the right
                wx *= _edge_ramp(tile_width, ov.rect.width, from_start=False)
        else:
            if ov.tile_b == (i, j):  # neighbor above: ramp the top edge
                wy *= _edge_ramp(tile_height, ov.rect.height, from_start=True)
            elif ov.tile_a == (i, j):  # neighbor below
                wy *= _edge_ramp(tile_height, ov.rect.height, from_start=False)
    return wy[:, None] * wx[None, :]


def _iter_tiles(
    tiles: Iterable[np.ndarray], placements: Sequence[TilePlacement]
):
    it = iter(tiles)
    for k, placement in enumerate(placements):
        try:
            tile = next(it)
        except StopIteration:
            raise CompositionError(
                f"{k} tiles supplied for {len(placements)} placements"
            ) from None
        yield np.asarray(tile, dtype=np.float64), placement
    if next(it, None) is not None:
        raise CompositionError(f"more tiles supplied than {len(placements)} placements")


def _check_tile_shape(tile: np.ndarray, tile_width: int, tile_height: int) -> None:
    if tile.shape != (tile_height, tile_width):
        raise DimensionMismatchError(
            f"tile shape {tile.shape} does not match {tile_height}x{tile_width}"
        )


def compose_raw(
    tiles: Iterable[np.ndarray],
    placements: Sequence[TilePlacement],
    tile_width: int,
    tile_height: int,
) -> MosaicCanvas:
    """Overwrite composition in row-major acquisition order."""
    width, height = canvas_dims(placements, tile_width, tile_height)
    canvas = MosaicCanvas.empty(width, height, ComposeMode.RAW_OVERWRITE)
    for tile, placement in _iter_tiles(tiles, placements):
        _check_tile_shape(tile, tile_width, tile_height)
        x, y = rasterize(placement)
        rows = slice(y, y + tile_height)
        cols = slice(x, x + tile_width)
        canvas.value_sum[rows, cols] = tile
        canvas.weight_sum[rows, cols] = 1.0
        canvas.touch_count[rows, cols] += 1
    return canvas


def compose_feathered(
    tiles: Iterable[np.ndarray],
    placements: Sequence[TilePlacement],
    overlaps: Sequence[OverlapRegion],
    tile_width: int,
    tile_height: int,
) -> MosaicCanvas:
    """Weighted composition with linear ramps across overlapped edges."""
    width, height = canvas_dims(placements, tile_width, tile_height)
    canvas = MosaicCanvas.empty(width, height, ComposeMode.FEATHERED)
    for tile, placement in _iter_tiles(tiles, placements):
        _check_tile_shape(tile, tile_width, tile_height)
        weights = tile_weight_map(
            (placement.row, placement.col), tile_width, tile_height, overlaps
        )
        x, y = rasterize(placement)
        rows = slice(y, y + tile_height)
        cols = slice(x, x + tile_width)
        canvas.value_sum[rows, cols] += tile * weights
        canvas.weight_sum[rows, cols] += weights
        canvas.touch_count[rows, cols] += 1
    bad = (canvas.touch_count > 0) & ~canvas.covered()
    if bad.any():
        raise CompositionError(
            f"{int(bad.sum())} touched pixels accumulated zero weight"
        )
    return canvas


def derive_seams(
    placements: Sequence[TilePlacement], tile_width: int, tile_height: int
) -> list[SeamLine]:
    """Raw-mode overwrite boundaries, one per overlapping adjacent pair.

    For a horizontal pair the later (right) tile's left edge is the
    boundary, giving a vertical seam clipped to the overlap's row range;
    vertical pairs give horizontal seams at the later tile's top edge.
    """
    table = _by_index(placements)
    seams: list[SeamLine] = []
    for ov in compute_overlaps(placements, tile_width, tile_height):
        later = table[ov.tile_b]
        x, y = rasterize(later)
        if ov.axis is Axis.HORIZONTAL:
            if ov.rect.x0 <= x < ov.rect.x1:
                seams.append(
                    SeamLine(
                        orientation=Axis.VERTICAL,
                        position=x,
                        start=ov.rect.y0,
                        stop=ov.rect.y1,
                    )
                )
        else:
            if ov.rect.y0 <= y < ov.rect.y1:
                seams.append(
                    SeamLine(
                        orientation=Axis.HORIZONTAL,
                        position=y,
                        start=ov.rect.x0,
                        stop=ov.rect.x1,
                    )
                )
    return seams
