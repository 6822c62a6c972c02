"""Operating field: COTS density surface, coastline mask and task sampling.

The density surface is a superposition of radially decaying bumps, one per
hotspot. A second generator evaluates the vortex-shaped expression printed in
the original model and normalises its magnitude to [0, 1]; it is kept only for
fidelity experiments.
"""

from __future__ import annotations

import csv
import enum
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "DensityCenter",
    "FieldModel",
    "FieldSpec",
    "TaskSpot",
    "TaskStatus",
    "build_field",
    "density_at",
    "density_grid",
    "sample_tasks",
    "parse_mask_rows",
    "encode_mask_rows",
    "export_density_csv",
    "deform_field",
    "shift_hotspots",
    "jitter_tasks",
]

GENERATORS = ("gaussian", "literal")


@dataclass(frozen=True)
class DensityCenter:
    center_xy: tuple[float, float]
    radius_m: float
    intensity: float

    def __post_init__(self):
        if not self.radius_m > 0:
            raise ValueError(f"hotspot radius must be positive, got {self.radius_m}")
        if not 0 < self.intensity <= 1:
            raise ValueError(f"hotspot intensity must lie in (0, 1], got {self.intensity}")


@dataclass(frozen=True)
class FieldSpec:
    """Parameters from which a :class:`FieldModel` is built.

    ``hotspots`` are placed verbatim; ``random_hotspots`` more are drawn from
    the seed with radius and intensity uniform in the given ranges.
    """

    width_m: float = 1000.0
    height_m: float = 1000.0
    grid_resolution_m: float = 5.0
    hotspots: tuple[DensityCenter, ...] = ()
    random_hotspots: int = 0
    radius_range_m: tuple[float, float] = (80.0, 200.0)
    intensity_range: tuple[float, float] = (0.5, 1.0)
    mask_rows: tuple[str, ...] = ()
    generator: str = "gaussian"
    depth_m: float = 0.0


@dataclass(frozen=True, eq=False)
class FieldModel:
    width_m: float
    height_m: float
    hotspots: tuple[DensityCenter, ...]
    coastline_mask: np.ndarray = field(repr=False)
    grid_resolution_m: float = 5.0
    generator: str = "gaussian"
    depth_m: float = 0.0
    # normaliser for the literal generator, 1.0 for the gaussian one
    scale: float = 1.0

    @property
    def shape(self) -> tuple[int, int]:
        return self.coastline_mask.shape

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        ny, nx = self.shape
        xs = (np.arange(nx) + 0.5) * self.grid_resolution_m
        ys = (np.arange(ny) + 0.5) * self.grid_resolution_m
        return np.minimum(xs, self.width_m), np.minimum(ys, self.height_m)

    def masked(self, x, y) -> np.ndarray:
        ny, nx = self.shape
        ix = np.clip((np.asarray(x) / self.grid_resolution_m).astype(int), 0, nx - 1)
        iy = np.clip((np.asarray(y) / self.grid_resolution_m).astype(int), 0, ny - 1)
        return self.coastline_mask[iy, ix]

    def inside(self, x, y) -> np.ndarray:
        x = np.asarray(x)
        y = np.asarray(y)
        return (x >= 0) & (x <= self.width_m) & (y >= 0) & (y <= self.height_m)


class TaskStatus(str, enum.Enum):
    PENDING = "pending"
    ASSIGNED = "assigned"
    COMPLETED = "completed"
    ABANDONED = "abandoned"


@dataclass(frozen=True)
class TaskSpot:
    id: int
    position_xyz: tuple[float, float, float]
    priority: int
    injection_time_s: float
    status: TaskStatus = TaskStatus.PENDING


# --------------------------------------------------------------------------
# coastline mask, run-length encoded text
# --------------------------------------------------------------------------

_RUN = re.compile(r"(\d+)([.#])")


def parse_mask_rows(rows: Iterable[str], nx: int, ny: int) -> np.ndarray:
    """Decode run-length rows into a boolean ``(ny, nx)`` mask.

    Each row reads like ``120.80#`` (120 water cells then 80 land cells) and
    may carry a repeat prefix, ``40*200.``. Rows run from ``y = 0`` upward;
    rows not given are water.
    """
    out = []
    for raw in rows:
        text = raw.strip()
        if not text:
            continue
        repeat = 1
        if "*" in text:
            head, text = text.split("*", 1)
            repeat = int(head)
        cells = []
        pos = 0
        for m in _RUN.finditer(text):
            if m.start() != pos:
                raise ValueError(f"bad mask run near {text[pos:]!r}")
            cells.extend([m.group(2) == "#"] * int(m.group(1)))
            pos = m.end()
        if pos != len(text):
            raise ValueError(f"bad mask run near {text[pos:]!r}")
        if len(cells) != nx:
            raise ValueError(f"mask row has {len(cells)} cells, field needs {nx}")
        out.extend([cells] * repeat)
    if len(out) > ny:
        raise ValueError(f"mask has {len(out)} rows, field has {ny}")
    mask = np.zeros((ny, nx), dtype=bool)
    if out:
        mask[: len(out)] = np.array(out, dtype=bool)
    return mask


def encode_mask_rows(mask: np.ndarray) -> list[str]:
    rows = []
    for line in mask:
        runs = []
        start = 0
        for i in range(1, len(line) + 1):
            if i == len(line) or line[i] != line[start]:
                runs.append(f"{i - start}{'#' if line[start] else '.'}")
                start = i
        text = "".join(runs)
        if rows and rows[-1][1] == text:
            rows[-1][0] += 1
        else:
            rows.append([1, text])
    return [f"{n}*{t}" if n > 1 else t for n, t in rows]


# --------------------------------------------------------------------------
# density
# --------------------------------------------------------------------------


def _raw_density(hotspots: Sequence[DensityCenter], generator: str, x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if generator == "gaussian":
        total = np.zeros(np.broadcast(x, y).shape)
        for h in hotspots:
            d2 = (x - h.center_xy[0]) ** 2 + (y - h.center_xy[1]) ** 2
            total = total + h.intensity * np.exp(-d2 / h.radius_m**2)
        return total
    # literal vortex form: superpose the vector components, take the magnitude
    tx = np.zeros(np.broadcast(x, y).shape)
    ty = np.zeros_like(tx)
    for h in hotspots:
        dx = x - h.center_xy[0]
        dy = y - h.center_xy[1]
        d2 = dx**2 + dy**2
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.where(d2 > 0, (1.0 - np.exp(-d2 / h.radius_m**2)) / (2 * np.pi * d2), 0.0)
        tx = tx - h.intensity * dy * g
        ty = ty + h.intensity * dx * g
    return np.hypot(tx, ty)


def build_field(spec: FieldSpec, seed: int | None = None) -> FieldModel:
    """Build the density field and coastline mask; deterministic per seed."""
    if not (spec.width_m > 0 and spec.height_m > 0):
        raise ValueError("field dimensions must be positive")
    if not spec.grid_resolution_m > 0:
        raise ValueError("grid resolution must be positive")
    if spec.random_hotspots < 0:
        raise ValueError("hotspot count must be non-negative")
    if spec.generator not in GENERATORS:
        raise ValueError(f"unknown generator {spec.generator!r}")

    hotspots = list(spec.hotspots)
    if spec.random_hotspots:
        rng = np.random.default_rng(seed)
        lo_r, hi_r = spec.radius_range_m
        lo_i, hi_i = spec.intensity_range
        for _ in range(spec.random_hotspots):
            cx = rng.uniform(0, spec.width_m)
            cy = rng.uniform(0, spec.height_m)
            hotspots.append(DensityCenter((float(cx), float(cy)), float(rng.uniform(lo_r, hi_r)),
                                          float(rng.uniform(lo_i, hi_i))))
    for h in hotspots:
        cx, cy = h.center_xy
        if not (0 <= cx <= spec.width_m and 0 <= cy <= spec.height_m):
            raise ValueError(f"hotspot center {h.center_xy} lies outside the field")

    nx = max(1, math.ceil(spec.width_m / spec.grid_resolution_m))
    ny = max(1, math.ceil(spec.height_m / spec.grid_resolution_m))
    mask = parse_mask_rows(spec.mask_rows, nx, ny)
    mask.flags.writeable = False

    model = FieldModel(spec.width_m, spec.height_m, tuple(hotspots), mask,
                       spec.grid_resolution_m, spec.generator, spec.depth_m)
    if spec.generator == "literal" and hotspots:
        xs, ys = model.cell_centers()
        peak = float(_raw_density(hotspots, "literal", *np.meshgrid(xs, ys)).max())
        if peak > 0:
            object.__setattr__(model, "scale", 1.0 / peak)
    return model


def _density(field: FieldModel, x, y) -> np.ndarray:
    d = np.clip(_raw_density(field.hotspots, field.generator, x, y) * field.scale, 0.0, 1.0)
    return np.where(field.masked(x, y), 0.0, d)


def density_at(field: FieldModel, xy: Sequence[float]) -> float:
    x, y = float(xy[0]), float(xy[1])
    if not field.inside(x, y):
        raise ValueError(f"query point {(x, y)} outside the field")
    return float(_density(field, x, y))


def density_grid(field: FieldModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Density at cell centres as ``(xs, ys, grid)`` with ``grid[iy, ix]``."""
    xs, ys = field.cell_centers()
    gx, gy = np.meshgrid(xs, ys)
    return xs, ys, _density(field, gx, gy)


def export_density_csv(field: FieldModel, path: str | Path) -> Path:
    path = Path(path)
    xs, ys, grid = density_grid(field)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "density"])
        for iy, y in enumerate(ys):
            for ix, x in enumerate(xs):
                w.writerow([f"{x:g}", f"{y:g}", f"{grid[iy, ix]:.6g}"])
    return path


# --------------------------------------------------------------------------
# tasks
# --------------------------------------------------------------------------


def sample_tasks(
    field: FieldModel,
    n: int,
    seed: int | None = None,
    *,
    injection_time_s: float | None = None,
    priority_range: tuple[int, int] = (1, 100),
    injection_range_s: tuple[float, float] = (60.0, 90.0),
) -> list[TaskSpot]:
    """Draw ``n`` tasks by rejection sampling proportional to density.

    Priorities are uniform integers over ``priority_range`` (inclusive);
    injection times are uniform over ``injection_range_s`` unless a fixed
    ``injection_time_s`` is given.
    """
    if n < 0:
        raise ValueError("task count must be non-negative")
    if n == 0:
        return []
    _, _, grid = density_grid(field)
    peak = float(grid.max())
    if peak <= 0:
        raise ValueError("field has no unmasked cell with positive density")
    for h in field.hotspots:
        if field.inside(*h.center_xy):
            peak = max(peak, density_at(field, h.center_xy))

    rng = np.random.default_rng(seed)
    xs: list[float] = []
    ys: list[float] = []
    batch = max(256, 4 * n)
    while len(xs) < n:
        px = rng.uniform(0, field.width_m, batch)
        py = rng.uniform(0, field.height_m, batch)
        u = rng.uniform(0, peak, batch)
        keep = u < _density(field, px, py)
        xs.extend(px[keep].tolist())
        ys.extend(py[keep].tolist())
    xs, ys = xs[:n], ys[:n]

    lo_p, hi_p = priority_range
    prio = rng.integers(lo_p, hi_p + 1, n)
    if injection_time_s is None:
        inj = rng.uniform(injection_range_s[0], injection_range_s[1], n)
    else:
        inj = np.full(n, float(injection_time_s))
    return [
        TaskSpot(i, (xs[i], ys[i], field.depth_m), int(prio[i]), float(inj[i]))
        for i in range(n)
    ]


# --------------------------------------------------------------------------
# Monte Carlo deformation
# --------------------------------------------------------------------------


def shift_hotspots(field: FieldModel, shifts) -> FieldModel:
    """Copy of ``field`` with hotspot ``i`` moved by ``shifts[i]``, clipped to bounds."""
    shifts = np.asarray(shifts, dtype=float).reshape(len(field.hotspots), 2)
    moved = []
    for h, (dx, dy) in zip(field.hotspots, shifts):
        cx = float(np.clip(h.center_xy[0] + dx, 0, field.width_m))
        cy = float(np.clip(h.center_xy[1] + dy, 0, field.height_m))
        moved.append(DensityCenter((cx, cy), h.radius_m, h.intensity))
    out = FieldModel(field.width_m, field.height_m, tuple(moved), field.coastline_mask,
                     field.grid_resolution_m, field.generator, field.depth_m)
    if field.generator == "literal":
        xs, ys = out.cell_centers()
        peak = float(_raw_density(moved, "literal", *np.meshgrid(xs, ys)).max())
        object.__setattr__(out, "scale", 1.0 / peak if peak > 0 else 1.0)
    return out


def deform_field(field: FieldModel, std_m: float, rng: np.random.Generator) -> FieldModel:
    """Shift every hotspot centre by zero-mean Gaussian noise, clipped to bounds."""
    if std_m <= 0 or not field.hotspots:
        return field
    return shift_hotspots(field, rng.normal(0.0, std_m, (len(field.hotspots), 2)))


def jitter_tasks(field: FieldModel, tasks: Sequence[TaskSpot], std_m: float,
                 rng: np.random.Generator) -> list[TaskSpot]:
    """Jitter task positions; a jitter landing on land leaves the task in place."""
    if std_m <= 0:
        return list(tasks)
    out = []
    for t in tasks:
        dx, dy = rng.normal(0.0, std_m, 2)
        x = float(np.clip(t.position_xyz[0] + dx, 0, field.width_m))
        y = float(np.clip(t.position_xyz[1] + dy, 0, field.height_m))
        if field.masked(x, y):
            out.append(t)
        else:
            out.append(TaskSpot(t.id, (x, y, t.position_xyz[2]), t.priority, t.injection_time_s))
    return out
