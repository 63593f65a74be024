"""Performance-boundary extraction and comparison.

The boundary is the p = 0.5 level set of a trained classifier. It is
located by evaluating the class probability on a regular grid and
interpolating every grid edge whose endpoints straddle 0.5; estimates are
compared with the symmetric Hausdorff distance.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .gpc import GpcModel
from .sampling import ParameterBox
from .scenario import LabeledSample, Outcome, ScenarioParams

DEFAULT_RESOLUTION = (41, 41, 41)


class EmptyBoundaryError(ValueError):
    """No grid edge straddles p = 0.5: the model predicts one class everywhere."""


class EmptyInputError(ValueError):
    """Point-set operation received an empty set."""


@dataclass(frozen=True)
class GridSpec:
    box: ParameterBox
    resolution: tuple[int, ...] = DEFAULT_RESOLUTION

    def __post_init__(self):
        if len(self.resolution) != self.box.ndim:
            raise ValueError("resolution must have one entry per dimension")
        if any(r < 2 for r in self.resolution):
            raise ValueError("resolution must be >= 2 per dimension")

    def unit_axes(self) -> list[np.ndarray]:
        return [np.linspace(0.0, 1.0, r) for r in self.resolution]

    def axes(self) -> list[np.ndarray]:
        lo, w = self.box.lowers, self.box.widths
        return [lo[j] + w[j] * ax for j, ax in enumerate(self.unit_axes())]

    def unit_points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.unit_axes(), indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.box.ndim)


@dataclass(frozen=True)
class BoundaryEstimate:
    points: np.ndarray  # (m, d) raw units
    probabilities: np.ndarray  # model probability re-evaluated at each point
    grid: GridSpec
    model_id: str = ""

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class ConfidenceSlice:
    fixed_dim: int
    fixed_value: float
    band: float
    plane_dims: tuple[int, int]  # the two varying dimensions, ascending
    axes: tuple[np.ndarray, np.ndarray]  # raw-unit axes of the plane
    probs: np.ndarray  # (len(axes[0]), len(axes[1]))
    overlay_points: np.ndarray  # (k, d) raw units within the band
    overlay_collision: np.ndarray  # (k,) bool
    box: ParameterBox


def grid_probabilities(
    model: GpcModel, grid: GridSpec, chunk: int = 8192, threads: int = 1
) -> np.ndarray:
    """Collision probability on the full grid, shaped like the resolution.

    Chunked; chunks are independent, so a bounded thread pool changes
    nothing but wall time."""
    pts = grid.unit_points()
    out = np.empty(pts.shape[0])
    spans = [
        (start, min(start + chunk, pts.shape[0]))
        for start in range(0, pts.shape[0], chunk)
    ]
    if threads <= 1 or len(spans) < 2:
        for start, stop in spans:
            _, _, out[start:stop] = model.predict_batch(pts[start:stop])
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = pool.map(
                lambda span: model.predict_batch(pts[span[0] : span[1]])[2], spans
            )
            for (start, stop), probs in zip(spans, results):
                out[start:stop] = probs
    return out.reshape(grid.resolution)


def mean_predictive_entropy(probs: np.ndarray) -> float:
    """Mean binary entropy (nats); high where the model is uncertain."""
    p = np.clip(np.asarray(probs), 1e-15, 1.0 - 1e-15)
    return float(np.mean(-p * np.log(p) - (1.0 - p) * np.log(1.0 - p)))


def extract_boundary(
    model: GpcModel,
    grid: GridSpec,
    model_id: str = "",
    probs: np.ndarray | None = None,
) -> BoundaryEstimate:
    """Interpolate the p = 0.5 crossing on every straddling grid edge.

    Pass `probs` (from grid_probabilities) to reuse an existing grid
    evaluation. Crossings are deduplicated on a half-cell lattice.
    """
    if probs is None:
        probs = grid_probabilities(model, grid)
    s = probs - 0.5
    d = grid.box.ndim
    axes = grid.unit_axes()
    crossings = []
    for axis in range(d):
        front = [slice(None)] * d
        back = [slice(None)] * d
        front[axis] = slice(0, -1)
        back[axis] = slice(1, None)
        s0 = s[tuple(front)]
        s1 = s[tuple(back)]
        mask = (s0 * s1) < 0.0
        if not mask.any():
            continue
        idx = np.nonzero(mask)
        t = s0[idx] / (s0[idx] - s1[idx])
        coords = np.empty((t.shape[0], d))
        for j in range(d):
            coords[:, j] = axes[j][idx[j]]
        step = axes[axis][1] - axes[axis][0]
        coords[:, axis] += t * step
        crossings.append(coords)
    if not crossings:
        raise EmptyBoundaryError(
            "no p=0.5 crossing on the grid; model predicts a single class"
        )
    unit = np.concatenate(crossings, axis=0)

    # collapse near-duplicates: round to half a cell per dimension
    steps = np.array([ax[1] - ax[0] for ax in axes])
    keys = np.round(unit / (steps / 2.0)).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    unit = unit[np.sort(first)]

    _, _, p_check = model.predict_batch(unit)
    return BoundaryEstimate(
        points=grid.box.from_unit(unit),
        probabilities=p_check,
        grid=grid,
        model_id=model_id,
    )


def hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two point arrays."""
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    if A.shape[0] == 0 or B.shape[0] == 0:
        raise EmptyInputError("Hausdorff distance of an empty set")
    d_ab = cKDTree(B).query(A)[0].max()
    d_ba = cKDTree(A).query(B)[0].max()
    return float(max(d_ab, d_ba))


def boundary_distance(a: BoundaryEstimate, b: BoundaryEstimate, space: str = "raw") -> float:
    """Hausdorff distance between two boundary estimates, in raw parameter
    units or in normalized (unit-cube) coordinates."""
    if a.grid.box != b.grid.box:
        raise ValueError("boundary estimates live in different boxes")
    if space == "raw":
        return hausdorff(a.points, b.points)
    if space == "normalized":
        box = a.grid.box
        return hausdorff(box.to_unit(a.points), box.to_unit(b.points))
    raise ValueError(f"unknown space {space!r} (use 'raw' or 'normalized')")


def confidence_slice(
    model: GpcModel,
    dim: int,
    value: float,
    data: list[LabeledSample] | None = None,
    band: float = 1.5,
    grid: GridSpec | None = None,
) -> ConfidenceSlice:
    """Probability map over the plane with dimension `dim` held at `value`,
    plus the labeled points within +-band of that value for overlay."""
    if grid is None:
        grid = GridSpec(ParameterBox.default())
    box = grid.box
    if not box.dims[dim].lower <= value <= box.dims[dim].upper:
        raise ValueError(f"value {value} outside {box.dims[dim].name} range")
    plane_dims = tuple(j for j in range(box.ndim) if j != dim)
    if len(plane_dims) != 2:
        raise ValueError("confidence slices need a 3-dimensional box")
    unit_axes = [grid.unit_axes()[j] for j in plane_dims]
    mesh = np.meshgrid(*unit_axes, indexing="ij")
    n_plane = mesh[0].size
    Xq = np.empty((n_plane, box.ndim))
    unit_value = (value - box.dims[dim].lower) / (
        box.dims[dim].upper - box.dims[dim].lower
    )
    Xq[:, dim] = unit_value
    for ax_vals, j in zip(mesh, plane_dims):
        Xq[:, j] = ax_vals.ravel()
    _, _, probs = model.predict_batch(Xq)
    probs = probs.reshape(mesh[0].shape)

    if data and band > 0.0:
        pts = np.array([s.params.as_array() for s in data])
        keep = np.abs(pts[:, dim] - value) <= band
        overlay = pts[keep]
        collision = np.array(
            [s.outcome is Outcome.COLLISION for s in data], dtype=bool
        )[keep]
    else:
        overlay = np.zeros((0, box.ndim))
        collision = np.zeros(0, dtype=bool)

    raw_axes = tuple(grid.axes()[j] for j in plane_dims)
    return ConfidenceSlice(
        fixed_dim=dim,
        fixed_value=value,
        band=band,
        plane_dims=plane_dims,
        axes=raw_axes,
        probs=probs,
        overlay_points=overlay,
        overlay_collision=collision,
        box=box,
    )


def boundary_scenarios(
    model: GpcModel, boundary: BoundaryEstimate, k: int
) -> list[ScenarioParams]:
    """k boundary points maximally spread (greedy farthest-point selection
    in normalized coordinates): the corner-case candidates."""
    if len(boundary) == 0:
        raise EmptyInputError("boundary estimate has no points")
    if k < 1:
        raise ValueError("k must be >= 1")
    pts = boundary.points
    if k >= len(boundary):
        return [ScenarioParams(*row) for row in pts]
    unit = boundary.grid.box.to_unit(pts)
    centroid = unit.mean(axis=0)
    start = int(np.argmax(((unit - centroid) ** 2).sum(axis=1)))
    chosen = [start]
    min_d2 = ((unit - unit[start]) ** 2).sum(axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(min_d2))
        chosen.append(nxt)
        min_d2 = np.minimum(min_d2, ((unit - unit[nxt]) ** 2).sum(axis=1))
    return [ScenarioParams(*pts[i]) for i in chosen]
