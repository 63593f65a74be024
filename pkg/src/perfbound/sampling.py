"""Experiment designs over the scenario parameter box.

Monte Carlo (independent uniforms) and minimax-improved Latin Hypercube
designs, seeded train/test splitting, outcome labeling through the
simulator, and CSV/JSON persistence of labeled sets.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import backend, scenario
from .ioutil import atomic_write_text, fmt_float
from .scenario import LabeledSample, Outcome, PhysicsConfig, ScenarioParams

DEFAULT_MINIMAX_ITERS = 10_000
REFERENCE_GRID_NODES = 17  # per dimension, evaluation grid for the minimax criterion

# Distinct RNG streams derived from one user seed.
_STREAM_SAMPLE = 0
_STREAM_SPLIT = 1


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), stream])


class Method(Enum):
    MONTE_CARLO = "monte_carlo"
    LATIN_HYPERCUBE = "latin_hypercube"


@dataclass(frozen=True)
class Dimension:
    name: str
    lower: float
    upper: float
    unit: str = ""

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"{self.name}: lower bound must be < upper bound")


@dataclass(frozen=True)
class ParameterBox:
    dims: tuple[Dimension, ...]

    def __post_init__(self):
        if len(self.dims) < 1:
            raise ValueError("box needs at least one dimension")

    @classmethod
    def default(cls) -> "ParameterBox":
        return cls(
            (
                Dimension("speed_ego", *scenario.EGO_SPEED_RANGE, "km/h"),
                Dimension("speed_target", *scenario.TARGET_SPEED_RANGE, "km/h"),
                Dimension("aperture_angle", *scenario.APERTURE_RANGE, "deg"),
            )
        )

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def lowers(self) -> np.ndarray:
        return np.array([d.lower for d in self.dims])

    @property
    def uppers(self) -> np.ndarray:
        return np.array([d.upper for d in self.dims])

    @property
    def widths(self) -> np.ndarray:
        return self.uppers - self.lowers

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.dims)

    def to_unit(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.lowers) / self.widths

    def from_unit(self, unit: np.ndarray) -> np.ndarray:
        return self.lowers + np.asarray(unit, dtype=np.float64) * self.widths

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.all((pts >= self.lowers) & (pts <= self.uppers), axis=1)

    def to_dict(self) -> list[dict]:
        return [
            {"name": d.name, "lower": d.lower, "upper": d.upper, "unit": d.unit}
            for d in self.dims
        ]

    @classmethod
    def from_dict(cls, data) -> "ParameterBox":
        return cls(tuple(Dimension(**d) for d in data))


@dataclass(frozen=True)
class DesignSpec:
    method: Method
    n_total: int
    seed: int
    train_fraction: float = 0.9

    def __post_init__(self):
        if self.n_total < 1:
            raise ValueError("n_total must be >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")

    @property
    def n_train(self) -> int:
        return int(round(self.n_total * self.train_fraction))

    @property
    def n_test(self) -> int:
        return self.n_total - self.n_train

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "n_total": self.n_total,
            "seed": self.seed,
            "train_fraction": self.train_fraction,
        }

    @classmethod
    def from_dict(cls, data) -> "DesignSpec":
        return cls(
            method=Method(data["method"]),
            n_total=int(data["n_total"]),
            seed=int(data["seed"]),
            train_fraction=float(data["train_fraction"]),
        )


@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray  # (n, d) raw units, one row per scenario
    box: ParameterBox
    provenance: DesignSpec

    def __len__(self) -> int:
        return self.points.shape[0]

    def scenarios(self) -> list[ScenarioParams]:
        if self.points.shape[1] != 3:
            raise ValueError("scenario conversion needs the 3-parameter box")
        return [ScenarioParams(*row) for row in self.points]


def reference_grid(ndim: int) -> np.ndarray:
    """Fixed evaluation grid for the minimax criterion, in unit coordinates."""
    axes = [np.linspace(0.0, 1.0, REFERENCE_GRID_NODES)] * ndim
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.ascontiguousarray(np.stack(mesh, axis=-1).reshape(-1, ndim))


def minimax_criterion(points: np.ndarray, box: ParameterBox) -> float:
    """Max over the reference grid of the distance to the nearest sample
    (unit coordinates); smaller is better coverage."""
    unit = box.to_unit(points)
    grid = reference_grid(box.ndim)
    d2min = np.full(grid.shape[0], np.inf)
    for row in unit:
        d2 = ((grid - row) ** 2).sum(axis=1)
        np.minimum(d2min, d2, out=d2min)
    return float(math.sqrt(d2min.max()))


def monte_carlo(box: ParameterBox, n: int, seed: int) -> SampleSet:
    """n i.i.d. draws, each coordinate uniform on its own range."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _rng(seed, _STREAM_SAMPLE)
    pts = rng.uniform(box.lowers, box.uppers, size=(n, box.ndim))
    spec = DesignSpec(Method.MONTE_CARLO, n, seed)
    return SampleSet(points=pts, box=box, provenance=spec)


def latin_hypercube(
    box: ParameterBox,
    n: int,
    seed: int,
    minimax_iters: int = DEFAULT_MINIMAX_ITERS,
) -> SampleSet:
    """Stratified design, one jittered sample per stratum per dimension,
    then improved by coordinate swaps accepted only when the minimax
    criterion decreases. Swaps permute within columns, so stratification
    is preserved exactly.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = _rng(seed, _STREAM_SAMPLE)
    d = box.ndim
    unit = np.empty((n, d))
    for j in range(d):
        unit[:, j] = (rng.permutation(n) + rng.random(n)) / n
    unit = np.ascontiguousarray(unit)
    if minimax_iters > 0:
        dims = rng.integers(0, d, minimax_iters)
        idx_i = rng.integers(0, n, minimax_iters)
        idx_j = rng.integers(0, n, minimax_iters)
        backend.minimax_optimize(unit, reference_grid(d), dims, idx_i, idx_j)
    spec = DesignSpec(Method.LATIN_HYPERCUBE, n, seed)
    return SampleSet(points=box.from_unit(unit), box=box, provenance=spec)


def sample(box: ParameterBox, spec: DesignSpec, minimax_iters: int = DEFAULT_MINIMAX_ITERS) -> SampleSet:
    if spec.method is Method.MONTE_CARLO:
        return monte_carlo(box, spec.n_total, spec.seed)
    return latin_hypercube(box, spec.n_total, spec.seed, minimax_iters)


def split_indices(spec: DesignSpec) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle of range(n_total), cut into train/test index arrays."""
    if spec.n_train < 1 or spec.n_test < 1:
        raise ValueError("split needs at least one point on each side")
    perm = _rng(spec.seed, _STREAM_SPLIT).permutation(spec.n_total)
    return perm[: spec.n_train], perm[spec.n_train :]


def split(s: SampleSet, spec: DesignSpec | None = None) -> tuple[SampleSet, SampleSet]:
    """Seeded shuffle, then prefix/suffix split into train/test."""
    if spec is None:
        spec = s.provenance
    n = len(s)
    if n != spec.n_total:
        raise ValueError(f"sample set has {n} points, spec expects {spec.n_total}")
    train_idx, test_idx = split_indices(spec)
    train = SampleSet(s.points[train_idx], s.box, spec)
    test = SampleSet(s.points[test_idx], s.box, spec)
    return train, test


def label(
    s: SampleSet, c: PhysicsConfig | None = None, threads: int = 1
) -> list[LabeledSample]:
    """Simulate every point; order preserved. NonTermination propagates
    with the offending point identified."""
    if c is None:
        c = PhysicsConfig()
    pts = s.points
    if threads <= 1 or len(s) < 2 * threads:
        traces = scenario.simulate_batch(pts, c)
    else:
        chunks = np.array_split(np.arange(len(s)), threads * 4)
        chunks = [ch for ch in chunks if ch.size]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda ch: scenario.simulate_batch(pts[ch], c), chunks))
        traces = [t for part in parts for t in part]
    return [
        LabeledSample(ScenarioParams(*row), tr.outcome)
        for row, tr in zip(pts, traces)
    ]


def label_with_oracle(s: SampleSet, c: PhysicsConfig | None = None) -> list[LabeledSample]:
    """Closed-form labels; the cheap route when the exact trace is not needed."""
    if c is None:
        c = PhysicsConfig()
    margins = scenario.oracle_margin_batch(s.points, c)
    return [
        LabeledSample(
            ScenarioParams(*row),
            Outcome.COLLISION if m < 0.0 else Outcome.NO_COLLISION,
        )
        for row, m in zip(s.points, margins)
    ]


CSV_HEADER = "speed_ego,speed_target,aperture_angle,outcome"


def save_labeled_csv(path, labeled: list[LabeledSample]) -> None:
    lines = [CSV_HEADER]
    for item in labeled:
        p = item.params
        lines.append(
            f"{fmt_float(p.speed_ego)},{fmt_float(p.speed_target)},"
            f"{fmt_float(p.aperture_angle)},{item.outcome.value}"
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_labeled_csv(path) -> list[LabeledSample]:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise ValueError(f"{path}:1: expected header {CSV_HEADER!r}")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 4:
            raise ValueError(f"{path}:{lineno}: expected 4 fields, got {len(fields)}")
        try:
            params = ScenarioParams(float(fields[0]), float(fields[1]), float(fields[2]))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad number ({exc})") from None
        try:
            outcome = Outcome(fields[3].strip())
        except ValueError:
            raise ValueError(f"{path}:{lineno}: unknown outcome {fields[3]!r}") from None
        out.append(LabeledSample(params, outcome))
    return out


def save_design_json(path, spec: DesignSpec, box: ParameterBox, **extra) -> None:
    payload = {"design": spec.to_dict(), "box": box.to_dict()}
    payload.update(extra)
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_design_json(path) -> tuple[DesignSpec, ParameterBox, dict]:
    data = json.loads(Path(path).read_text())
    spec = DesignSpec.from_dict(data["design"])
    box = ParameterBox.from_dict(data["box"])
    extra = {k: v for k, v in data.items() if k not in ("design", "box")}
    return spec, box, extra
