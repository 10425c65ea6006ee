"""Synthetic scan datasets for end-to-end verification.

A deterministic test target stands in for the physical resolution
target; tiles are cut from it at the exact placements the geometry
model produces, then optionally degraded with the effects the
correction stages exist to remove: radial vignetting, an additive
corner brightness offset inside the correction ROI footprint, per-tile
multiplicative gain jitter, and additive Gaussian noise.  Structure-free
bright/dark reference frames are emitted with the same field effects
(without the per-tile jitter) so the response fit can be exercised
against known ground truth.

Everything is seed-deterministic: tile (i, j) draws from a generator
seeded by (rng_seed, 0, i, j), references from (rng_seed, 1, k), so the
output is independent of evaluation order.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from . import pgm
from .compose import canvas_dims, rasterize
from .correction import RectROI
from .errors import ConfigError, CoverageError, GalvoMosaicError
from .geometry import ScanConfig, ScanStrategy, placement_table
from .metrics import RegionKind, RegionSpec

DARK_SHADE = 0.02


class TargetPattern(Enum):
    UNIFORM = "uniform"
    BARS = "bars"
    USAF_LIKE = "usaf"


@dataclass(frozen=True)
class DegradationSpec:
    """Field degradations applied to clean tiles; all default to none."""

    vignette_min: float = 1.0
    corner_offset: float = 0.0
    gain_jitter: float = 0.0
    noise_sigma: float = 0.0
    rng_seed: int = 0

    def validate(self) -> None:
        if not 0.0 < self.vignette_min <= 1.0:
            raise ConfigError(f"vignette_min must be in (0, 1], got {self.vignette_min}")
        if self.gain_jitter < 0.0:
            raise ConfigError(f"gain_jitter must be >= 0, got {self.gain_jitter}")
        if self.noise_sigma < 0.0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


@dataclass
class Tile:
    """One acquired frame with its grid indices."""

    row: int
    col: int
    data: np.ndarray
    meta: dict = field(default_factory=dict)


def _usaf_layout(width: int, height: int) -> dict[str, RectROI]:
    """Measurement-region rectangles for the bar-target pattern.

    Canonical region sizes (400x400 signal, 1400x700 bright, 700x900
    dark) are used whenever the target is large enough, otherwise scaled
    down so everything still fits.
    """
    sig = max(2, min(400, width // 6, height // 6))
    bright_w = max(2, min(1400, int(width * 0.35)))
    bright_h = max(2, min(700, int(height * 0.18)))
    dark_w = max(2, min(700, int(width * 0.20)))
    dark_h = max(2, min(900, int(height * 0.22)))
    return {
        "signal": RectROI(x0=int(width * 0.24), y0=int(height * 0.22), width=sig, height=sig),
        "bright": RectROI(x0=int(width * 0.52), y0=int(height * 0.12), width=bright_w, height=bright_h),
        "dark": RectROI(x0=int(width * 0.14), y0=int(height * 0.58), width=dark_w, height=dark_h),
    }


def _draw_bar_groups(img: np.ndarray, value: float) -> None:
    height, width = img.shape
    # Vertical-bar groups of halving pitch, side by side.
    x0 = int(width * 0.55)
    y0, y1 = int(height * 0.45), int(height * 0.62)
    group_w = int(width * 0.11)
    for k, pitch in enumerate((64, 32, 16)):
        pitch = max(4, min(pitch, group_w // 2))
        gx0 = x0 + k * (group_w + group_w // 4)
        gx1 = min(gx0 + group_w, width)
        if gx0 >= gx1 or y0 >= y1:
            continue
        x = np.arange(gx0, gx1)
        dark_cols = x[(x - gx0) // pitch % 2 == 0]
        img[y0:y1, dark_cols] = DARK_SHADE
    # Horizontal-bar groups stacked below.
    hx0, hx1 = int(width * 0.20), int(width * 0.45)
    hy0 = int(height * 0.76)
    group_h = int(height * 0.05)
    for k, pitch in enumerate((48, 24, 12)):
        pitch = max(4, min(pitch, group_h // 2))
        gy0 = hy0 + k * (group_h + group_h // 4)
        gy1 = min(gy0 + group_h, height)
        if gy0 >= gy1 or hx0 >= hx1:
            continue
        y = np.arange(gy0, gy1)
        dark_rows = y[(y - gy0) // pitch % 2 == 0]
        img[dark_rows, hx0:hx1] = DARK_SHADE


def make_target(
    width: int,
    height: int,
    pattern: TargetPattern,
    value: float = 0.9,
    pitch: int = 32,
) -> np.ndarray:
    """Deterministic synthetic target, quantized to the 16-bit grid.

    UNIFORM is a constant field at ``value``; BARS is a period-2*pitch
    square wave along x between ``value`` and a fixed dark shade;
    USAF_LIKE is a bright field carrying a dark signal block, clean
    bright and dark measurement regions, and bar groups of decreasing
    pitch (see :func:`target_regions` for the region rectangles).
    """
    if width < 1 or height < 1:
        raise ConfigError(f"target dims must be positive, got {width}x{height}")
    if pattern is TargetPattern.UNIFORM:
        img = np.full((height, width), value, dtype=np.float64)
    elif pattern is TargetPattern.BARS:
        if pitch < 1:
            raise ConfigError(f"bar pitch must be >= 1, got {pitch}")
        img = np.full((height, width), value, dtype=np.float64)
        x = np.arange(width)
        img[:, (x // pitch) % 2 == 0] = DARK_SHADE
    elif pattern is TargetPattern.USAF_LIKE:
        img = np.full((height, width), value, dtype=np.float64)
        layout = _usaf_layout(width, height)
        rows, cols = layout["signal"].slices()
        img[rows, cols] = DARK_SHADE
        rows, cols = layout["dark"].slices()
        img[rows, cols] = DARK_SHADE
        _draw_bar_groups(img, value)
    else:  # pragma: no cover - enum is closed
        raise ConfigError(f"unknown target pattern {pattern}")
    return pgm.to_unit(pgm.to_u16(img))


def target_regions(width: int, height: int, pattern: TargetPattern) -> list[RegionSpec]:
    """Measurement regions matching :func:`make_target`'s layout."""
    if pattern is not TargetPattern.USAF_LIKE:
        return []
    layout = _usaf_layout(width, height)
    return [
        RegionSpec(name="signal", rect=layout["signal"], kind=RegionKind.SIGNAL),
        RegionSpec(name="bright", rect=layout["bright"], kind=RegionKind.BRIGHT_BACKGROUND),
        RegionSpec(name="dark", rect=layout["dark"], kind=RegionKind.DARK_BACKGROUND),
    ]


def _bilinear_crop(truth: np.ndarray, dx: float, dy: float, tw: int, th: int) -> np.ndarray:
    """Tile-sized sample of ``truth`` at a real-valued offset."""
    ix, iy = int(np.floor(dx)), int(np.floor(dy))
    fx, fy = dx - ix, dy - iy
    h, w = truth.shape

    def crop(x0: int, y0: int) -> np.ndarray:
        return truth[y0:y0 + th, x0:x0 + tw]

    if ix < 0 or iy < 0 or ix + tw + (fx > 0) > w or iy + th + (fy > 0) > h:
        raise CoverageError(
            f"subpixel placement ({dx}, {dy}) exceeds truth bounds {w}x{h}"
        )
    out = (1 - fy) * (1 - fx) * crop(ix, iy)
    if fx > 0:
        out += (1 - fy) * fx * crop(ix + 1, iy)
    if fy > 0:
        out += fy * (1 - fx) * crop(ix, iy + 1)
    if fx > 0 and fy > 0:
        out += fy * fx * crop(ix + 1, iy + 1)
    return np.asarray(out, dtype=np.float64)


def required_truth_dims(cfg: ScanConfig, subpixel: bool = False) -> tuple[int, int]:
    """Smallest ground-truth image this scan can be cut from.

    Integer extraction needs the rounded canvas footprint; subpixel
    extraction needs the ceiling of each offset plus the interpolation
    neighbor, which can exceed the rounded canvas by one pixel.
    """
    placements = placement_table(cfg)
    if not subpixel:
        return canvas_dims(placements, cfg.tile_width, cfg.tile_height)
    w = max(math.ceil(p.dx) for p in placements) + cfg.tile_width
    h = max(math.ceil(p.dy) for p in placements) + cfg.tile_height
    return w, h


def extract_tiles(
    truth: np.ndarray, cfg: ScanConfig, subpixel: bool = False
) -> list[Tile]:
    """Cut one tile per grid coordinate out of the ground-truth image.

    By default tiles are integer crops at the rounded placement offsets,
    which makes raw composition a lossless round trip.  With
    ``subpixel=True`` tiles are bilinear samples at the exact real-valued
    offsets, so the later rounding introduces the sub-pixel mismatch a
    real scanner exhibits between neighboring frames.
    """
    truth = np.asarray(truth, dtype=np.float64)
    h, w = truth.shape
    tw, th = cfg.tile_width, cfg.tile_height
    need_w, need_h = required_truth_dims(cfg, subpixel=subpixel)
    if w < need_w or h < need_h:
        raise CoverageError(
            f"truth image {w}x{h} too small; this scan needs at least {need_w}x{need_h}"
        )
    tiles = []
    for p in placement_table(cfg):
        if subpixel:
            data = _bilinear_crop(truth, p.dx, p.dy, tw, th)
        else:
            x, y = rasterize(p)
            if x < 0 or y < 0 or x + tw > w or y + th > h:
                raise CoverageError(
                    f"tile ({p.row}, {p.col}) at ({x}, {y}) exceeds truth bounds {w}x{h}"
                )
            data = truth[y:y + th, x:x + tw].copy()
        tiles.append(Tile(row=p.row, col=p.col, data=data))
    return tiles


def vignette_field(height: int, width: int, vignette_min: float) -> np.ndarray:
    """Radial quadratic gain: 1 at the frame center, vignette_min at corners."""
    cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
    y = np.arange(height, dtype=np.float64) - cy
    x = np.arange(width, dtype=np.float64) - cx
    r2 = y[:, None] ** 2 + x[None, :] ** 2
    r2_corner = cy**2 + cx**2
    if r2_corner == 0.0:
        return np.ones((height, width), dtype=np.float64)
    return 1.0 - (1.0 - vignette_min) * (r2 / r2_corner)


def _tile_rng(seed: int, row: int, col: int) -> np.random.Generator:
    return np.random.default_rng([seed, 0, row, col])


def _reference_rng(seed: int, which: int) -> np.random.Generator:
    return np.random.default_rng([seed, 1, which])


def degrade(
    tiles: Sequence[Tile],
    spec: DegradationSpec,
    rois: Sequence[RectROI],
    bright_level: float = 0.9,
    dark_level: float = 0.0,
) -> tuple[list[Tile], np.ndarray, np.ndarray]:
    """Apply the degradation model and emit matching reference frames.

    Per tile: multiply by the vignette field, multiply by a per-tile
    gain drawn uniformly from [1 - gain_jitter, 1 + gain_jitter], add
    ``corner_offset`` inside every ROI footprint, add Gaussian noise,
    clamp to [0, 1].  The bright/dark references are uniform frames at
    the given levels pushed through the same field effects (no per-tile
    jitter, their own noise draws).
    """
    spec.validate()
    if not tiles:
        raise ConfigError("degrade needs at least one tile")
    th, tw = tiles[0].data.shape
    vignette = vignette_field(th, tw, spec.vignette_min)
    offset = np.zeros((th, tw), dtype=np.float64)
    for roi in rois:
        roi.check_within((th, tw))
        rows, cols = roi.slices()
        offset[rows, cols] += spec.corner_offset

    def finish(img: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if spec.noise_sigma > 0.0:
            img = img + rng.normal(0.0, spec.noise_sigma, img.shape)
        return np.clip(img, 0.0, 1.0)

    out = []
    for tile in tiles:
        if tile.data.shape != (th, tw):
            raise CoverageError(
                f"tile ({tile.row}, {tile.col}) shape {tile.data.shape} != {th}x{tw}"
            )
        rng = _tile_rng(spec.rng_seed, tile.row, tile.col)
        jitter = rng.uniform(1.0 - spec.gain_jitter, 1.0 + spec.gain_jitter)
        data = finish(tile.data * vignette * jitter + offset, rng)
        out.append(Tile(row=tile.row, col=tile.col, data=data, meta=dict(tile.meta)))

    bright_ref = finish(vignette * bright_level + offset, _reference_rng(spec.rng_seed, 0))
    dark_ref = finish(vignette * dark_level + offset, _reference_rng(spec.rng_seed, 1))
    return out, bright_ref, dark_ref


def timing_report(cfg: ScanConfig, per_frame_ms: float) -> float:
    """Total acquisition time in seconds for the whole grid."""
    if per_frame_ms < cfg.settle_ms:
        raise ConfigError(
            f"per_frame_ms ({per_frame_ms}) must cover the settling period ({cfg.settle_ms} ms)"
        )
    return cfg.n_rows * cfg.n_cols * per_frame_ms / 1000.0


def tile_filename(row: int, col: int, n_rows: int, n_cols: int) -> str:
    digits = max(2, len(str(max(n_rows, n_cols) - 1)))
    return f"tile_r{row:0{digits}d}_c{col:0{digits}d}.pgm"


@dataclass
class DatasetManifest:
    """Everything needed to reproduce and stitch one emitted dataset."""

    scan: ScanConfig
    tiles: list[dict]
    truth_path: str
    degradation: DegradationSpec
    subpixel: bool
    rois: list[RectROI]
    regions: list[RegionSpec]
    ref_bright_path: str
    ref_dark_path: str
    bright_level: float
    dark_level: float
    per_frame_ms: float
    total_s: float
    epsilon: float = 1e-6
    band_px: int = 50

    def validate(self) -> None:
        """Every grid coordinate must appear exactly once."""
        seen = {(t["row"], t["col"]) for t in self.tiles}
        expected = {
            (i, j) for i in range(self.scan.n_rows) for j in range(self.scan.n_cols)
        }
        if len(self.tiles) != len(expected) or seen != expected:
            missing = sorted(expected - seen)
            extra = sorted(seen - expected)
            raise GalvoMosaicError(
                f"manifest tile list inconsistent: missing {missing}, unexpected {extra}"
            )

    def to_json(self) -> str:
        scan = {
            "n_rows": self.scan.n_rows,
            "n_cols": self.scan.n_cols,
            "dv_x": self.scan.dv_x,
            "dv_y": self.scan.dv_y,
            "s_x": self.scan.s_x,
            "s_y": self.scan.s_y,
            "alpha_x": self.scan.alpha_x,
            "alpha_y": self.scan.alpha_y,
            "strategy": self.scan.strategy.value,
            "v0": self.scan.v0,
            "amplitude": self.scan.amplitude,
            "tile_width": self.scan.tile_width,
            "tile_height": self.scan.tile_height,
            "settle_ms": self.scan.settle_ms,
        }
        payload = {
            "scan": scan,
            "tiles": self.tiles,
            "truth": self.truth_path,
            "degradation": {
                "vignette_min": self.degradation.vignette_min,
                "corner_offset": self.degradation.corner_offset,
                "gain_jitter": self.degradation.gain_jitter,
                "noise_sigma": self.degradation.noise_sigma,
                "rng_seed": self.degradation.rng_seed,
            },
            "subpixel": self.subpixel,
            "rois": [
                {"x0": r.x0, "y0": r.y0, "width": r.width, "height": r.height}
                for r in self.rois
            ],
            "regions": [
                {
                    "name": r.name,
                    "kind": r.kind.value,
                    "x0": r.rect.x0,
                    "y0": r.rect.y0,
                    "width": r.rect.width,
                    "height": r.rect.height,
                }
                for r in self.regions
            ],
            "reference": {
                "bright": self.ref_bright_path,
                "dark": self.ref_dark_path,
                "bright_level": self.bright_level,
                "dark_level": self.dark_level,
            },
            "correction": {
                "epsilon": self.epsilon,
                "band_px": self.band_px,
            },
            "timing": {
                "settle_ms": self.scan.settle_ms,
                "per_frame_ms": self.per_frame_ms,
                "total_s": self.total_s,
            },
        }
        return json.dumps(payload, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        try:
            payload = json.loads(text)
            scan = ScanConfig(
                n_rows=payload["scan"]["n_rows"],
                n_cols=payload["scan"]["n_cols"],
                dv_x=payload["scan"]["dv_x"],
                dv_y=payload["scan"]["dv_y"],
                s_x=payload["scan"]["s_x"],
                s_y=payload["scan"]["s_y"],
                alpha_x=payload["scan"]["alpha_x"],
                alpha_y=payload["scan"]["alpha_y"],
                strategy=ScanStrategy(payload["scan"]["strategy"]),
                v0=payload["scan"]["v0"],
                amplitude=payload["scan"]["amplitude"],
                tile_width=payload["scan"]["tile_width"],
                tile_height=payload["scan"]["tile_height"],
                settle_ms=payload["scan"]["settle_ms"],
            )
            manifest = cls(
                scan=scan,
                tiles=payload["tiles"],
                truth_path=payload["truth"],
                degradation=DegradationSpec(**payload["degradation"]),
                subpixel=payload.get("subpixel", False),
                rois=[RectROI(**r) for r in payload["rois"]],
                regions=[
                    RegionSpec(
                        name=r["name"],
                        kind=RegionKind(r["kind"]),
                        rect=RectROI(
                            x0=r["x0"], y0=r["y0"], width=r["width"], height=r["height"]
                        ),
                    )
                    for r in payload["regions"]
                ],
                ref_bright_path=payload["reference"]["bright"],
                ref_dark_path=payload["reference"]["dark"],
                bright_level=payload["reference"]["bright_level"],
                dark_level=payload["reference"]["dark_level"],
                per_frame_ms=payload["timing"]["per_frame_ms"],
                total_s=payload["timing"]["total_s"],
                epsilon=payload.get("correction", {}).get("epsilon", 1e-6),
                band_px=payload.get("correction", {}).get("band_px", 50),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise GalvoMosaicError(f"malformed manifest: {exc}") from exc
        manifest.validate()
        return manifest


def snap_level(level: float) -> float:
    """Snap a normalized level onto the 16-bit storage grid."""
    return float(pgm.to_u16(np.array(level))) / pgm.MAXVAL


def write_dataset(
    out_dir: str | os.PathLike,
    scan: ScanConfig,
    degradation: DegradationSpec,
    rois: Sequence[RectROI],
    *,
    pattern: TargetPattern = TargetPattern.USAF_LIKE,
    target_value: float = 0.9,
    target_pitch: int = 32,
    target_width: int | None = None,
    target_height: int | None = None,
    bright_level: float = 0.9,
    dark_level: float = 0.0,
    per_frame_ms: float = 60.5,
    regions: Sequence[RegionSpec] | None = None,
    subpixel: bool = False,
    epsilon: float = 1e-6,
    band_px: int = 50,
) -> DatasetManifest:
    """Generate and write a complete dataset; returns its manifest.

    The ground truth defaults to exactly the canvas footprint of the
    scan.  Reference levels are snapped onto the 16-bit grid before use
    so the stored reference frames encode them exactly.
    """
    scan.validate()
    degradation.validate()
    need_w, need_h = required_truth_dims(scan, subpixel=subpixel)
    width = target_width if target_width is not None else need_w
    height = target_height if target_height is not None else need_h
    if width < need_w or height < need_h:
        raise CoverageError(
            f"target {width}x{height} smaller than required canvas {need_w}x{need_h}"
        )

    truth = make_target(width, height, pattern, value=target_value, pitch=target_pitch)
    region_list = list(regions) if regions is not None else target_regions(width, height, pattern)
    tiles = extract_tiles(truth, scan, subpixel=subpixel)
    bright_level = snap_level(bright_level)
    dark_level = snap_level(dark_level)
    degraded, bright_ref, dark_ref = degrade(
        tiles, degradation, rois, bright_level=bright_level, dark_level=dark_level
    )
    total_s = timing_report(scan, per_frame_ms)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pgm.write_pgm(out / "truth.pgm", pgm.to_u16(truth))
    pgm.write_pgm(out / "ref_bright.pgm", pgm.to_u16(bright_ref))
    pgm.write_pgm(out / "ref_dark.pgm", pgm.to_u16(dark_ref))
    tile_entries = []
    for tile in degraded:
        name = tile_filename(tile.row, tile.col, scan.n_rows, scan.n_cols)
        pgm.write_pgm(out / name, pgm.to_u16(tile.data))
        tile_entries.append({"row": tile.row, "col": tile.col, "path": name})

    manifest = DatasetManifest(
        scan=scan,
        tiles=tile_entries,
        truth_path="truth.pgm",
        degradation=degradation,
        subpixel=subpixel,
        rois=list(rois),
        regions=region_list,
        ref_bright_path="ref_bright.pgm",
        ref_dark_path="ref_dark.pgm",
        bright_level=bright_level,
        dark_level=dark_level,
        per_frame_ms=per_frame_ms,
        total_s=total_s,
        epsilon=epsilon,
        band_px=band_px,
    )
    manifest.validate()
    (out / "manifest.json").write_text(manifest.to_json(), encoding="ascii")
    return manifest


def load_manifest(dataset_dir: str | os.PathLike) -> DatasetManifest:
    path = Path(dataset_dir) / "manifest.json"
    if not path.exists():
        raise GalvoMosaicError(f"no manifest.json in {dataset_dir}")
    return DatasetManifest.from_json(path.read_text(encoding="ascii"))
