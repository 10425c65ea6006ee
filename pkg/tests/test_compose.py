"""Canvas composition: dims, overlaps, raw/feathered modes, seams."""

import numpy as np
import pytest

from galvomosaic.compose import (
    Axis,
    canvas_dims,
    compose_feathered,
    compose_raw,
    compute_overlaps,
    derive_seams,
    rasterize,
    round_half_away,
    tile_weight_map,
)
from galvomosaic.errors import CompositionError, DimensionMismatchError
from galvomosaic.geometry import ScanConfig, ScanStrategy, TilePlacement, placement_table


def grid_cfg(**overrides) -> ScanConfig:
    base = dict(
        n_rows=10, n_cols=10, dv_x=1.1, dv_y=1.1, s_x=402.0, s_y=468.0,
        tile_width=1000, tile_height=1000,
    )
    base.update(overrides)
    return ScanConfig(**base)


def place(row, col, dx, dy):
    return TilePlacement(row=row, col=col, dx=dx, dy=dy)


class TestRounding:
    def test_round_half_away(self):
        cases = [(0.0, 0), (0.4, 0), (0.5, 1), (1.5, 2), (2.5, 3),
                 (-0.5, -1), (-1.5, -2), (-0.4, 0), (3979.8, 3980), (442.2, 442)]
        for value, expected in cases:
            assert round_half_away(value) == expected


class TestCanvasDims:
    def test_single_tile(self):
        assert canvas_dims([place(0, 0, 0.0, 0.0)], 1000, 1000) == (1000, 1000)

    def test_full_grid_canvas_width(self):
        table = placement_table(grid_cfg())
        width, height = canvas_dims(table, 1000, 1000)
        assert width == 4980  # round(3979.8) + 1000
        assert height == round_half_away(9 * 1.1 * 468) + 1000

    def test_two_tile_overlap(self):
        dims = canvas_dims([place(0, 0, 0, 0), place(0, 1, 500, 0)], 1000, 1000)
        assert dims == (1500, 1000)

    def test_empty_placements_rejected(self):
        with pytest.raises(CompositionError):
            canvas_dims([], 100, 100)

    def test_negative_offsets_rejected(self):
        with pytest.raises(CompositionError):
            canvas_dims([place(0, 0, -5.0, 0.0)], 100, 100)


class TestComputeOverlaps:
    def test_two_tile_overlap_width_after_rounding(self):
        placements = [place(0, 0, 0.0, 0.0), place(0, 1, 442.2, 0.0)]
        (overlap,) = compute_overlaps(placements, 1000, 1000)
        assert overlap.rect.width == 1000 - 442

    def test_full_grid_overlap_widths(self):
        # round(442.2 * j) steps alternate between 442 and 443 px, so the
        # overlap widths sit within one pixel of 558.
        table = placement_table(grid_cfg())
        overlaps = compute_overlaps(table, 1000, 1000)
        horizontal = [o for o in overlaps if o.axis is Axis.HORIZONTAL]
        assert len(horizontal) == 90
        assert {o.rect.width for o in horizontal} == {557, 558}

    def test_disjoint_tiles_produce_no_overlap(self):
        placements = [place(0, 0, 0, 0), place(0, 1, 1200, 0)]
        assert compute_overlaps(placements, 1000, 1000) == []

    def test_sinusoidal_center_overlaps_are_narrowest(self):
        table = placement_table(grid_cfg(strategy=ScanStrategy.SINUSOIDAL))
        overlaps = compute_overlaps(table, 1000, 1000)
        row0 = sorted(
            (o for o in overlaps if o.axis is Axis.HORIZONTAL and o.tile_a[0] == 0),
            key=lambda o: o.tile_a[1],
        )
        widths = [o.rect.width for o in row0]
        assert min(widths) == widths[4]  # center pair has the widest spacing
        assert widths[0] > widths[4] and widths[-1] > widths[4]

    def test_vertical_adjacency_axis(self):
        placements = [place(0, 0, 0, 0), place(1, 0, 0, 600)]
        (overlap,) = compute_overlaps(placements, 1000, 1000)
        assert overlap.axis is Axis.VERTICAL
        assert overlap.rect.height == 400


class TestComposeRaw:
    def test_disjoint_union(self):
        a = np.full((10, 10), 0.25)
        b = np.full((10, 10), 0.75)
        placements = [place(0, 0, 0, 0), place(0, 1, 10, 0)]
        canvas = compose_raw([a, b], placements, 10, 10)
        final = canvas.finalize()
        assert np.all(final[:, :10] == 0.25)
        assert np.all(final[:, 10:] == 0.75)
        assert np.all(canvas.weight_sum[:, :] == 1.0)

    def test_later_tile_overwrites(self):
        a = np.full((10, 10), 10 / 65535)
        b = np.full((10, 10), 20 / 65535)
        placements = [place(0, 0, 0, 0), place(0, 1, 5, 0)]
        final = compose_raw([a, b], placements, 10, 10).finalize()
        assert np.all(final[:, 5:15] == 20 / 65535)
        assert np.all(final[:, :5] == 10 / 65535)

    def test_count_mismatch_rejected(self):
        a = np.zeros((10, 10))
        with pytest.raises(CompositionError):
            compose_raw([a], [place(0, 0, 0, 0), place(0, 1, 5, 0)], 10, 10)
        with pytest.raises(CompositionError):
            compose_raw([a, a], [place(0, 0, 0, 0)], 10, 10)

    def test_wrong_tile_shape_rejected(self):
        with pytest.raises(DimensionMismatchError):
            compose_raw([np.zeros((5, 5))], [place(0, 0, 0, 0)], 10, 10)


class TestComposeFeathered:
    def test_identical_constant_tiles_blend_exactly(self):
        tile = np.full((20, 20), 10 / 65535)
        placements = [place(0, 0, 0, 0), place(0, 1, 12, 0)]
        overlaps = compute_overlaps(placements, 20, 20)
        final = compose_feathered([tile, tile], placements, overlaps, 20, 20).finalize()
        assert np.all(final == 10 / 65535)

    def test_linear_ramp_between_constant_tiles(self):
        # Overlap width 11 (odd) puts one pixel column exactly at the ramp
        # midpoint, where complementary weights are 0.5 each.
        low = np.zeros((8, 16))
        high = np.full((8, 16), 100 / 65535)
        placements = [place(0, 0, 0, 0), place(0, 1, 5, 0)]
        overlaps = compute_overlaps(placements, 16, 8)
        assert overlaps[0].rect.width == 11
        final = compose_feathered([low, high], placements, overlaps, 16, 8).finalize()
        profile = final[4, :]
        assert np.all(profile[:5] == 0.0)
        assert np.all(profile[16:] == 100 / 65535)
        ramp = profile[5:16]
        assert np.all(np.diff(ramp) > 0)
        mid = ramp[5]
        assert mid == pytest.approx(50 / 65535, rel=1e-12)

    def test_blend_identity_matches_raw_on_agreeing_tiles(self):
        rng = np.random.default_rng(23)
        truth = rng.uniform(0.1, 0.9, size=(40, 70))
        placements = [place(0, 0, 0, 0), place(0, 1, 30, 0)]
        tiles = [truth[:, 0:40], truth[:, 30:70]]
        overlaps = compute_overlaps(placements, 40, 40)
        raw = compose_raw(tiles, placements, 40, 40).finalize()
        feathered = compose_feathered(tiles, placements, overlaps, 40, 40).finalize()
        assert np.allclose(feathered, raw, atol=1e-15)

    def test_two_tile_weights_partition_unity(self):
        placements = [place(0, 0, 0, 0), place(0, 1, 12, 0)]
        overlaps = compute_overlaps(placements, 20, 20)
        w_left = tile_weight_map((0, 0), 20, 20, overlaps)
        w_right = tile_weight_map((0, 1), 20, 20, overlaps)
        # overlap spans canvas columns 12..19: left tile cols 12..19,
        # right tile cols 0..7
        total = w_left[:, 12:20] + w_right[:, 0:8]
        assert np.allclose(total, 1.0, atol=1e-12)

    def test_convexity_of_finalized_values(self):
        rng = np.random.default_rng(31)
        a = rng.uniform(0.0, 1.0, size=(20, 20))
        b = rng.uniform(0.0, 1.0, size=(20, 20))
        placements = [place(0, 0, 0, 0), place(0, 1, 12, 0)]
        overlaps = compute_overlaps(placements, 20, 20)
        final = compose_feathered([a, b], placements, overlaps, 20, 20).finalize()
        region = final[:, 12:20]
        lo = np.minimum(a[:, 12:20], b[:, 0:8])
        hi = np.maximum(a[:, 12:20], b[:, 0:8])
        assert np.all(region >= lo - 1e-12)
        assert np.all(region <= hi + 1e-12)

    def test_full_grid_coverage(self):
        cfg = grid_cfg(n_rows=3, n_cols=3, tile_width=60, tile_height=60,
                       dv_x=0.1, dv_y=0.1, s_x=400.0, s_y=420.0)
        table = placement_table(cfg)
        overlaps = compute_overlaps(table, 60, 60)
        tiles = [np.full((60, 60), 0.5)] * 9
        canvas = compose_feathered(tiles, table, overlaps, 60, 60)
        assert np.array_equal(canvas.covered(), canvas.touch_count > 0)
        # every placed pixel carries weight
        for p in table:
            x, y = rasterize(p)
            assert np.all(canvas.weight_sum[y:y + 60, x:x + 60] > 0.0)

    def test_determinism_bit_identical(self):
        rng = np.random.default_rng(5)
        tiles = [rng.uniform(0, 1, size=(30, 30)) for _ in range(4)]
        placements = [
            place(0, 0, 0, 0), place(0, 1, 18, 0),
            place(1, 0, 0, 21), place(1, 1, 18, 21),
        ]
        overlaps = compute_overlaps(placements, 30, 30)
        one = compose_feathered(tiles, placements, overlaps, 30, 30)
        two = compose_feathered(tiles, placements, overlaps, 30, 30)
        assert np.array_equal(one.value_sum, two.value_sum)
        assert np.array_equal(one.weight_sum, two.weight_sum)


class TestDeriveSeams:
    def test_single_tile_has_no_seams(self):
        assert derive_seams([place(0, 0, 0, 0)], 100, 100) == []

    def test_two_tiles_one_vertical_seam(self):
        placements = [place(0, 0, 0, 0), place(0, 1, 442.2, 0)]
        (seam,) = derive_seams(placements, 1000, 1000)
        assert seam.orientation is Axis.VERTICAL
        assert seam.position == 442
        assert (seam.start, seam.stop) == (0, 1000)

    def test_full_grid_seam_count(self):
        table = placement_table(grid_cfg())
        seams = derive_seams(table, 1000, 1000)
        vertical = [s for s in seams if s.orientation is Axis.VERTICAL]
        horizontal = [s for s in seams if s.orientation is Axis.HORIZONTAL]
        assert len(vertical) == 90
        assert len(horizontal) == 90

    def test_seam_extent_clipped_to_overlap(self):
        placements = [place(0, 0, 0, 0), place(0, 1, 30, 7)]
        (seam,) = derive_seams(placements, 50, 50)
        assert seam.position == 30
        assert (seam.start, seam.stop) == (7, 50)
