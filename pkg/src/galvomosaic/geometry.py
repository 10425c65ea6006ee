"""Scan-index to global-pixel geometry for galvo-scanned tile grids.

The scanner visits an ``n_rows x n_cols`` grid of coordinates.  A tile
acquired at grid indices ``(i, j)`` (0-based, row-major) lands in the
global mosaic at a real-valued pixel offset ``(dx, dy)`` determined by
the drive voltages and the calibrated pixels-per-volt scales:

    linear:      dx = j * dv_x * s_x + alpha_x * i
    sinusoidal:  dx = V_x(j) * s_x  + alpha_x * i
    both:        dy = i * dv_y * s_y + alpha_y * j

``V_x(j) = v0 + amplitude * sin(j*pi/(n_cols-1) - pi/2)`` sweeps the
phase from -pi/2 at the first column to +pi/2 at the last, so the end
columns coincide with the linear ones when ``v0 = amplitude =
(n_cols-1)*dv_x/2`` (the defaults).  The ``alpha`` terms compensate a
systematic tilt of the scan axes and apply to both strategies.

Offsets stay real-valued here; rounding to integer pixels is the
composition stage's job.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import ConfigError, DegenerateGridError, IndexRangeError


class ScanStrategy(Enum):
    LINEAR = "linear"
    SINUSOIDAL = "sinusoidal"


@dataclass(frozen=True)
class ScanConfig:
    """Grid dimensions, drive voltages, and calibration constants.

    ``v0`` and ``amplitude`` apply only to the sinusoidal strategy; when
    left as ``None`` they default so the sinusoidal sweep spans exactly
    the linear one (first tile at voltage 0).  ``settle_ms`` is carried
    as acquisition metadata only.
    """

    n_rows: int
    n_cols: int
    dv_x: float
    dv_y: float
    s_x: float
    s_y: float
    alpha_x: float = 0.0
    alpha_y: float = 0.0
    strategy: ScanStrategy = ScanStrategy.LINEAR
    v0: float | None = None
    amplitude: float | None = None
    tile_width: int = 1000
    tile_height: int = 1000
    settle_ms: float = 30.0

    def validate(self) -> None:
        """Raise :class:`ConfigError` naming the first invalid field."""
        if self.n_rows < 1:
            raise ConfigError(f"n_rows must be >= 1, got {self.n_rows}")
        if self.n_cols < 1:
            raise ConfigError(f"n_cols must be >= 1, got {self.n_cols}")
        if self.tile_width < 1:
            raise ConfigError(f"tile_width must be >= 1, got {self.tile_width}")
        if self.tile_height < 1:
            raise ConfigError(f"tile_height must be >= 1, got {self.tile_height}")
        if not self.s_x > 0:
            raise ConfigError(f"s_x must be > 0, got {self.s_x}")
        if not self.s_y > 0:
            raise ConfigError(f"s_y must be > 0, got {self.s_y}")
        if self.settle_ms < 0:
            raise ConfigError(f"settle_ms must be >= 0, got {self.settle_ms}")
        if self.strategy is ScanStrategy.SINUSOIDAL and self.n_cols >= 2:
            _, amplitude = self.sine_params()
            if amplitude < 0:
                raise ConfigError(f"amplitude must be >= 0, got {amplitude}")

    def sine_params(self) -> tuple[float, float]:
        """Resolved ``(v0, amplitude)`` with span-matching defaults."""
        amplitude = self.amplitude
        if amplitude is None:
            amplitude = (self.n_cols - 1) * self.dv_x / 2.0
        v0 = self.v0 if self.v0 is not None else amplitude
        return v0, amplitude


@dataclass(frozen=True)
class TilePlacement:
    """Global pixel offset of the tile acquired at grid indices (row, col)."""

    row: int
    col: int
    dx: float
    dy: float


def _check_indices(cfg: ScanConfig, i: int, j: int) -> None:
    if not 0 <= i < cfg.n_rows:
        raise IndexRangeError(f"row index {i} outside [0, {cfg.n_rows})")
    if not 0 <= j < cfg.n_cols:
        raise IndexRangeError(f"col index {j} outside [0, {cfg.n_cols})")


def linear_offset(cfg: ScanConfig, i: int, j: int) -> TilePlacement:
    """Placement of tile (i, j) under uniform voltage stepping."""
    _check_indices(cfg, i, j)
    dx = j * cfg.dv_x * cfg.s_x + cfg.alpha_x * i
    dy = i * cfg.dv_y * cfg.s_y + cfg.alpha_y * j
    return TilePlacement(row=i, col=j, dx=dx, dy=dy)


def sinusoidal_voltage(cfg: ScanConfig, j: int) -> float:
    """X drive voltage at column j under sinusoidal stepping.

    The phase runs from -pi/2 (j = 0) to +pi/2 (j = n_cols - 1), so the
    voltage sweeps v0 - amplitude .. v0 + amplitude with the densest
    sampling at the ends.  A single-column grid has no defined phase
    step and raises :class:`DegenerateGridError`.
    """
    if cfg.n_cols < 2:
        raise DegenerateGridError(
            "sinusoidal voltage needs n_cols >= 2 (phase step divides by n_cols - 1)"
        )
    if not 0 <= j < cfg.n_cols:
        raise IndexRangeError(f"col index {j} outside [0, {cfg.n_cols})")
    v0, amplitude = cfg.sine_params()
    return v0 + amplitude * math.sin(j * math.pi / (cfg.n_cols - 1) - math.pi / 2.0)


def sinusoidal_offset(cfg: ScanConfig, i: int, j: int) -> TilePlacement:
    """Placement of tile (i, j) under sinusoidal X stepping."""
    _check_indices(cfg, i, j)
    dx = sinusoidal_voltage(cfg, j) * cfg.s_x + cfg.alpha_x * i
    dy = i * cfg.dv_y * cfg.s_y + cfg.alpha_y * j
    return TilePlacement(row=i, col=j, dx=dx, dy=dy)


def tile_offset(cfg: ScanConfig, i: int, j: int) -> TilePlacement:
    """Placement of tile (i, j) under the configured strategy."""
    if cfg.strategy is ScanStrategy.SINUSOIDAL:
        return sinusoidal_offset(cfg, i, j)
    return linear_offset(cfg, i, j)


def placement_table(cfg: ScanConfig) -> list[TilePlacement]:
    """All placements in row-major order, shifted to nonnegative offsets.

    The common translation puts ``min dx = 0`` and ``min dy = 0`` so the
    canvas origin is the top-left of the mosaic; relative geometry is
    unchanged.
    """
    cfg.validate()
    raw = [
        tile_offset(cfg, i, j)
        for i in range(cfg.n_rows)
        for j in range(cfg.n_cols)
    ]
    min_dx = min(p.dx for p in raw)
    min_dy = min(p.dy for p in raw)
    return [
        TilePlacement(row=p.row, col=p.col, dx=p.dx - min_dx, dy=p.dy - min_dy)
        for p in raw
    ]
