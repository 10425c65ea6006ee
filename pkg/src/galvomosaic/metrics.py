"""Mosaicking-consistency and image-quality metrics.

Consistency is the mean absolute error between neighboring tiles over
their overlap after a least-squares affine brightness normalization
I_j ~ a*I_i + b, which discounts global gain/offset differences.
Quality metrics run on the finalized canvas: contrast-to-noise ratio
|mu_sig - mu_bg| / sigma_bg, per-region intensity standard deviation,
and the mean absolute intensity difference between the pixel pairs
straddling each geometric seam line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .compose import Axis, SeamLine
from .correction import RectROI
from .errors import (
    DegenerateFitError,
    DimensionMismatchError,
    IndexRangeError,
    NoOverlapError,
    UndefinedCnrError,
)


@dataclass(frozen=True)
class AffineFit:
    """Least-squares brightness map I_j ~ a*I_i + b."""

    a: float
    b: float


class RegionKind(Enum):
    SIGNAL = "signal"
    BRIGHT_BACKGROUND = "bright_background"
    DARK_BACKGROUND = "dark_background"


@dataclass(frozen=True)
class RegionSpec:
    """Named measurement rectangle in global mosaic coordinates."""

    name: str
    rect: RectROI
    kind: RegionKind


@dataclass
class MetricsReport:
    """All Table-style metrics for one mosaic."""

    mae_per_overlap: list[tuple[str, float]]
    mae_mean: float
    cnr: float
    bright_std: float
    dark_std: float
    mean_seam_jump: float

    def to_json(self) -> str:
        payload = {
            "mae_per_overlap": [[pair, value] for pair, value in self.mae_per_overlap],
            "mae_mean": _jsonable(self.mae_mean),
            "cnr": _jsonable(self.cnr),
            "bright_std": _jsonable(self.bright_std),
            "dark_std": _jsonable(self.dark_std),
            "mean_seam_jump": _jsonable(self.mean_seam_jump),
        }
        return json.dumps(payload, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [
            f"mae_mean = {self.mae_mean!r}",
            f"cnr = {self.cnr!r}",
            f"bright_std = {self.bright_std!r}",
            f"dark_std = {self.dark_std!r}",
            f"mean_seam_jump = {self.mean_seam_jump!r}",
        ]
        for pair, value in self.mae_per_overlap:
            lines.append(f"mae_per_overlap[{pair}] = {value!r}")
        return "\n".join(lines) + "\n"


def _jsonable(x: float):
    # JSON has no NaN literal; degenerate metrics serialize as null.
    return None if isinstance(x, float) and np.isnan(x) else x


def fit_affine(samples_i: np.ndarray, samples_j: np.ndarray) -> AffineFit:
    """Closed-form OLS of samples_j against samples_i."""
    x = np.asarray(samples_i, dtype=np.float64).ravel()
    y = np.asarray(samples_j, dtype=np.float64).ravel()
    if x.size != y.size:
        raise DimensionMismatchError(
            f"sample lengths differ: {x.size} vs {y.size}"
        )
    if x.size < 2:
        raise DegenerateFitError(f"need at least 2 sample pairs, got {x.size}")
    x_mean = x.mean()
    y_mean = y.mean()
    dx = x - x_mean
    sxx = float(np.dot(dx, dx))
    if sxx == 0.0:
        raise DegenerateFitError("predictor samples are constant; slope undefined")
    a = float(np.dot(dx, y - y_mean)) / sxx
    b = float(y_mean - a * x_mean)
    return AffineFit(a=a, b=b)


def normalized_mae(
    samples_i: np.ndarray, samples_j: np.ndarray
) -> tuple[float, AffineFit, bool]:
    """Affine-normalized MAE plus the fit used and a degeneracy flag.

    Constant predictor samples make the slope undefined; the fallback is
    a = 1 with b = mean(I_j) - mean(I_i) and the flag set.
    """
    x = np.asarray(samples_i, dtype=np.float64).ravel()
    y = np.asarray(samples_j, dtype=np.float64).ravel()
    if x.size == 0:
        raise NoOverlapError("empty overlap sample")
    degenerate = False
    try:
        fit = fit_affine(x, y)
    except DegenerateFitError:
        fit = AffineFit(a=1.0, b=float(y.mean() - x.mean()))
        degenerate = True
    mae = float(np.mean(np.abs(y - (fit.a * x + fit.b))))
    return mae, fit, degenerate


def overlap_mae(samples_i: np.ndarray, samples_j: np.ndarray) -> float:
    """Mean absolute residual over an overlap after affine normalization."""
    mae, _, _ = normalized_mae(samples_i, samples_j)
    return mae


def _region_values(canvas: np.ndarray, region: RegionSpec) -> np.ndarray:
    region.rect.check_within(canvas.shape)
    rows, cols = region.rect.slices()
    return np.asarray(canvas, dtype=np.float64)[rows, cols]


def _population_std(values: np.ndarray) -> float:
    # Mean rounding leaves ~1e-17 residuals on constant input; force the
    # exact zero so degenerate backgrounds are detected reliably.
    if values.max() == values.min():
        return 0.0
    return float(values.std())


def cnr(canvas: np.ndarray, signal: RegionSpec, background: RegionSpec) -> float:
    """Contrast-to-noise ratio |mu_sig - mu_bg| / sigma_bg."""
    sig = _region_values(canvas, signal)
    bg = _region_values(canvas, background)
    sigma_bg = _population_std(bg)
    if sigma_bg == 0.0:
        raise UndefinedCnrError("background standard deviation is zero")
    return float(abs(sig.mean() - bg.mean())) / sigma_bg


def region_std(canvas: np.ndarray, region: RegionSpec) -> float:
    """Population standard deviation of intensities inside a region."""
    values = _region_values(canvas, region)
    if values.size < 2:
        raise DimensionMismatchError(
            f"region {region.name} has {values.size} pixels; need at least 2"
        )
    return _population_std(values)


def mean_seam_jump(canvas: np.ndarray, seams: Sequence[SeamLine]) -> float:
    """Mean |intensity difference| across all seam-straddling pixel pairs.

    A vertical seam at x contributes the pairs (x-1, y), (x, y) for every
    row y in its extent; horizontal seams are the transpose.  The mean is
    over all pairs of all seams pooled together.
    """
    canvas = np.asarray(canvas, dtype=np.float64)
    if not seams:
        raise NoOverlapError("no seams to measure")
    height, width = canvas.shape
    total = 0.0
    count = 0
    for seam in seams:
        if seam.stop <= seam.start:
            raise IndexRangeError(f"seam extent empty: {seam}")
        if seam.orientation is Axis.VERTICAL:
            if not 1 <= seam.position < width:
                raise IndexRangeError(f"vertical seam at x={seam.position} outside canvas width {width}")
            if seam.start < 0 or seam.stop > height:
                raise IndexRangeError(f"seam extent outside canvas height {height}: {seam}")
            span = slice(seam.start, seam.stop)
            diffs = np.abs(canvas[span, seam.position] - canvas[span, seam.position - 1])
        else:
            if not 1 <= seam.position < height:
                raise IndexRangeError(f"horizontal seam at y={seam.position} outside canvas height {height}")
            if seam.start < 0 or seam.stop > width:
                raise IndexRangeError(f"seam extent outside canvas width {width}: {seam}")
            span = slice(seam.start, seam.stop)
            diffs = np.abs(canvas[seam.position, span] - canvas[seam.position - 1, span])
        total += float(diffs.sum())
        count += diffs.size
    return total / count
