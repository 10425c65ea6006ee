"""Command-line pipeline: simulate a dataset, stitch it, evaluate it.

    galvomosaic simulate --config scan.cfg --out dataset/
    galvomosaic stitch   --dataset dataset/ --out run/ --mode processed
    galvomosaic evaluate --mosaic run/mosaic.pgm --sidecar run/sidecar.json --out run/

``--mode raw`` turns correction and feathering off, ``--mode processed``
turns both on; ``--correction`` and ``--feather`` override the mode's
defaults independently so every raw/processed combination is reachable.
All outputs are deterministic functions of the config and seed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from collections import OrderedDict
from pathlib import Path

import numpy as np

from . import pgm
from .compose import (
    Axis,
    OverlapRegion,
    SeamLine,
    compose_feathered,
    compose_raw,
    compute_overlaps,
    derive_seams,
    rasterize,
)
from .config import parse_rect, load_run_config, parse_kv
from .correction import (
    RectROI,
    ReferencePair,
    apply_roi_corrections,
    fit_bright_only,
    fit_two_point,
    linear_weight_field,
)
from .errors import ConfigError, GalvoMosaicError, UndefinedCnrError
from .geometry import placement_table
from .metrics import (
    MetricsReport,
    RegionKind,
    RegionSpec,
    cnr,
    mean_seam_jump,
    normalized_mae,
    region_std,
)
from .simulate import DatasetManifest, load_manifest, write_dataset


def cmd_simulate(args: argparse.Namespace) -> int:
    rc = load_run_config(args.config, strategy_override=args.strategy, seed_override=args.seed)
    manifest = write_dataset(
        args.out,
        rc.scan,
        rc.degradation,
        rc.rois,
        pattern=rc.target_pattern,
        target_value=rc.target_value,
        target_pitch=rc.target_pitch,
        target_width=rc.target_width,
        target_height=rc.target_height,
        bright_level=rc.bright_level,
        dark_level=rc.dark_level,
        per_frame_ms=rc.per_frame_ms,
        regions=rc.regions,
        subpixel=rc.subpixel,
        epsilon=rc.epsilon,
        band_px=rc.band_px,
    )
    print(
        f"wrote {len(manifest.tiles)} tiles + 2 references + manifest to {args.out} "
        f"(total acquisition {manifest.total_s:.3g} s)"
    )
    return 0


class _TileLoader:
    """On-demand corrected tiles with a small LRU cache.

    Raw 16-bit frames stay resident; the float conversion plus ROI
    correction is recomputed on miss, so memory stays bounded by the
    cache size rather than the grid size.
    """

    def __init__(self, raw: dict, fits, cache_size: int):
        self._raw = raw
        self._fits = fits
        self._cache: OrderedDict = OrderedDict()
        self._cache_size = max(2, cache_size)

    def get(self, key: tuple[int, int]) -> np.ndarray:
        if key in self._cache:
            self._cache.move_to_end(key)
            return self._cache[key]
        tile = pgm.to_unit(self._raw[key])
        if self._fits:
            tile = apply_roi_corrections(tile, self._fits)
        self._cache[key] = tile
        if len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)
        return tile


def _resolve_mode(args: argparse.Namespace) -> tuple[str, bool]:
    """(correction, feather) after applying --mode defaults and overrides."""
    if args.mode == "raw":
        correction, feather = "off", False
    else:
        correction, feather = "two-point", True
    if args.correction is not None:
        correction = args.correction
    if args.feather is not None:
        feather = args.feather == "on"
    return correction, feather


def _build_fits(manifest: DatasetManifest, dataset: Path, correction: str):
    if correction == "off":
        return []
    bright = pgm.to_unit(pgm.read_pgm(dataset / manifest.ref_bright_path))
    fits = []
    for roi in manifest.rois:
        if correction == "two-point":
            dark = pgm.to_unit(pgm.read_pgm(dataset / manifest.ref_dark_path))
            refs = ReferencePair(
                bright_frame=bright,
                l_bright=manifest.bright_level,
                dark_frame=dark,
                l_dark=manifest.dark_level,
            )
            model = fit_two_point(refs, roi, eps=manifest.epsilon)
        else:
            model = fit_bright_only(bright, manifest.bright_level, roi, eps=manifest.epsilon)
        fits.append((model, roi, linear_weight_field(roi, manifest.band_px)))
    return fits


def _overlap_samples(
    loader: _TileLoader, placements_by_index: dict, ov: OverlapRegion
) -> tuple[np.ndarray, np.ndarray]:
    samples = []
    for key in (ov.tile_a, ov.tile_b):
        x, y = rasterize(placements_by_index[key])
        rows = slice(ov.rect.y0 - y, ov.rect.y1 - y)
        cols = slice(ov.rect.x0 - x, ov.rect.x1 - x)
        samples.append(loader.get(key)[rows, cols])
    return samples[0], samples[1]


def cmd_stitch(args: argparse.Namespace) -> int:
    dataset = Path(args.dataset)
    manifest = load_manifest(dataset)
    missing = sorted(
        (t["row"], t["col"]) for t in manifest.tiles if not (dataset / t["path"]).exists()
    )
    if missing:
        raise GalvoMosaicError(
            "missing tile files for (row, col): "
            + ", ".join(f"({i}, {j})" for i, j in missing)
        )
    correction, feather = _resolve_mode(args)

    scan = manifest.scan
    placements = placement_table(scan)
    by_index = {(p.row, p.col): p for p in placements}
    overlaps = compute_overlaps(placements, scan.tile_width, scan.tile_height)
    seams = derive_seams(placements, scan.tile_width, scan.tile_height)

    raw_tiles = {
        (t["row"], t["col"]): pgm.read_pgm(dataset / t["path"]) for t in manifest.tiles
    }
    fits = _build_fits(manifest, dataset, correction)
    # Two grid rows stay cached so row-adjacent overlap sampling and the
    # later row-major compose pass each load every tile only once.
    loader = _TileLoader(raw_tiles, fits, cache_size=2 * scan.n_cols + 2)

    # Consistency metric on corrected-but-unblended tiles, one value per
    # grid-adjacent overlapping pair.
    mae_entries: list[tuple[str, float]] = []
    degenerate_pairs: list[str] = []
    for ov in overlaps:
        a, b = _overlap_samples(loader, by_index, ov)
        mae, _, degenerate = normalized_mae(a, b)
        pair = f"({ov.tile_a[0]},{ov.tile_a[1]})-({ov.tile_b[0]},{ov.tile_b[1]})"
        mae_entries.append((pair, mae))
        if degenerate:
            degenerate_pairs.append(pair)
    mae_mean = float(np.mean([v for _, v in mae_entries])) if mae_entries else math.nan

    ordered = [(p.row, p.col) for p in placements]
    tile_stream = (loader.get(key) for key in ordered)
    if feather:
        canvas = compose_feathered(
            tile_stream, placements, overlaps, scan.tile_width, scan.tile_height
        )
    else:
        canvas = compose_raw(tile_stream, placements, scan.tile_width, scan.tile_height)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mosaic_u16 = pgm.to_u16(canvas.finalize())
    pgm.write_pgm(out / "mosaic.pgm", mosaic_u16)
    if args.png:
        pgm.write_png(out / "mosaic.png", mosaic_u16)

    sidecar = {
        "canvas": {"width": canvas.width, "height": canvas.height},
        "tile": {"width": scan.tile_width, "height": scan.tile_height},
        "mode": {
            "compose": "feathered" if feather else "raw",
            "correction": correction,
        },
        "placements": [
            {
                "row": p.row,
                "col": p.col,
                "dx": p.dx,
                "dy": p.dy,
                "x": rasterize(p)[0],
                "y": rasterize(p)[1],
            }
            for p in placements
        ],
        "seams": [
            {
                "orientation": s.orientation.value,
                "position": s.position,
                "start": s.start,
                "stop": s.stop,
            }
            for s in seams
        ],
        "mae_per_overlap": [[pair, value] for pair, value in mae_entries],
        "mae_mean": None if math.isnan(mae_mean) else mae_mean,
        "mae_degenerate_pairs": degenerate_pairs,
        "regions": [
            {
                "name": r.name,
                "kind": r.kind.value,
                "x0": r.rect.x0,
                "y0": r.rect.y0,
                "width": r.rect.width,
                "height": r.rect.height,
            }
            for r in manifest.regions
        ],
    }
    (out / "sidecar.json").write_text(json.dumps(sidecar, indent=2) + "\n", encoding="ascii")
    print(
        f"wrote {out / 'mosaic.pgm'} ({canvas.width}x{canvas.height}, "
        f"correction={correction}, feather={'on' if feather else 'off'})"
    )
    return 0


def _regions_from_file(path: str) -> list[RegionSpec]:
    kv = parse_kv(Path(path).read_text(encoding="utf-8"))
    region_keys = {
        "region_signal": ("signal", RegionKind.SIGNAL),
        "region_bright": ("bright", RegionKind.BRIGHT_BACKGROUND),
        "region_dark": ("dark", RegionKind.DARK_BACKGROUND),
    }
    regions = []
    for key, (name, kind) in region_keys.items():
        if key in kv:
            regions.append(RegionSpec(name=name, rect=parse_rect(key, kv[key]), kind=kind))
    if not regions:
        raise ConfigError(f"{path}: no region_signal/region_bright/region_dark keys found")
    return regions


def _regions_from_sidecar(entries: list[dict]) -> list[RegionSpec]:
    return [
        RegionSpec(
            name=r["name"],
            kind=RegionKind(r["kind"]),
            rect=RectROI(x0=r["x0"], y0=r["y0"], width=r["width"], height=r["height"]),
        )
        for r in entries
    ]


def cmd_evaluate(args: argparse.Namespace) -> int:
    mosaic = pgm.to_unit(pgm.read_image(args.mosaic))
    try:
        sidecar = json.loads(Path(args.sidecar).read_text(encoding="ascii"))
        seams = [
            SeamLine(
                orientation=Axis(s["orientation"]),
                position=s["position"],
                start=s["start"],
                stop=s["stop"],
            )
            for s in sidecar["seams"]
        ]
        mae_entries = [(pair, value) for pair, value in sidecar["mae_per_overlap"]]
        mae_mean = sidecar["mae_mean"]
    except (KeyError, TypeError, ValueError) as exc:
        raise GalvoMosaicError(f"malformed sidecar {args.sidecar}: {exc}") from exc

    if args.regions:
        regions = _regions_from_file(args.regions)
    else:
        regions = _regions_from_sidecar(sidecar.get("regions", []))
    by_kind = {r.kind: r for r in regions}
    signal = by_kind.get(RegionKind.SIGNAL)
    bright = by_kind.get(RegionKind.BRIGHT_BACKGROUND)
    dark = by_kind.get(RegionKind.DARK_BACKGROUND)
    if signal is None or bright is None or dark is None:
        raise ConfigError(
            "need signal, bright, and dark regions (from --regions or the sidecar)"
        )

    cnr_value = math.nan
    try:
        cnr_value = cnr(mosaic, signal, bright)
    except UndefinedCnrError as exc:
        print(f"warning: CNR degenerate: {exc}", file=sys.stderr)

    report = MetricsReport(
        mae_per_overlap=mae_entries,
        mae_mean=math.nan if mae_mean is None else float(mae_mean),
        cnr=cnr_value,
        bright_std=region_std(mosaic, bright),
        dark_std=region_std(mosaic, dark),
        mean_seam_jump=mean_seam_jump(mosaic, seams) if seams else 0.0,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json(), encoding="ascii")
    (out / "report.txt").write_text(report.to_text(), encoding="ascii")
    print(
        f"cnr={report.cnr:.6g} bright_std={report.bright_std:.6g} "
        f"dark_std={report.dark_std:.6g} mean_seam_jump={report.mean_seam_jump:.6g} "
        f"mae_mean={report.mae_mean:.6g}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="galvomosaic",
        description="Simulate, stitch, and evaluate galvo-scanned image mosaics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic tile dataset")
    p_sim.add_argument("--config", required=True, help="key-value config file")
    p_sim.add_argument("--out", required=True, help="dataset output directory")
    p_sim.add_argument(
        "--strategy", choices=["linear", "sinusoidal"], help="override the config strategy"
    )
    p_sim.add_argument("--seed", type=int, help="override the config RNG seed")
    p_sim.set_defaults(func=cmd_simulate)

    p_st = sub.add_parser("stitch", help="compose a dataset into a mosaic")
    p_st.add_argument("--dataset", required=True, help="dataset directory with manifest.json")
    p_st.add_argument("--out", required=True, help="output directory for mosaic + sidecar")
    p_st.add_argument(
        "--mode",
        choices=["raw", "processed"],
        default="processed",
        help="raw = no correction, overwrite; processed = correction + feathering",
    )
    p_st.add_argument(
        "--correction",
        choices=["two-point", "bright-only", "off"],
        help="override the mode's correction choice",
    )
    p_st.add_argument(
        "--feather", choices=["on", "off"], help="override the mode's feathering choice"
    )
    p_st.add_argument("--png", action="store_true", help="also write mosaic.png (needs Pillow)")
    p_st.set_defaults(func=cmd_stitch)

    p_ev = sub.add_parser("evaluate", help="compute metrics for a stitched mosaic")
    p_ev.add_argument("--mosaic", required=True, help="mosaic image (PGM or PNG)")
    p_ev.add_argument("--sidecar", required=True, help="sidecar JSON written by stitch")
    p_ev.add_argument(
        "--regions", help="key-value file with region_signal/region_bright/region_dark"
    )
    p_ev.add_argument("--out", required=True, help="output directory for report files")
    p_ev.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GalvoMosaicError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
