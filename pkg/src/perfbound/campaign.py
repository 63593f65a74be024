"""Batch pipeline: sample -> simulate -> train -> evaluate -> boundary ->
compare -> slice -> report, with file persistence and provenance.

Every artifact is derived deterministically from the campaign config and
its master seed; reruns produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import boundary as bnd
from . import gpc, sampling, scenario, svg
from .ioutil import atomic_write_text, fmt_float
from .sampling import DesignSpec, Method, ParameterBox
from .scenario import PhysicsConfig

TABLE2_DATASETS = (
    ("MC100", Method.MONTE_CARLO, 100),
    ("MC1000", Method.MONTE_CARLO, 1000),
    ("LHC100", Method.LATIN_HYPERCUBE, 100),
    ("LHC1000", Method.LATIN_HYPERCUBE, 1000),
)

COMPARISON_PAIRS = (
    ("MC100", "LHC100"),
    ("MC1000", "LHC1000"),
    ("MC100", "MC1000"),
    ("LHC100", "LHC1000"),
)


def derive_seed(master_seed: int, name: str) -> int:
    """Stable per-dataset seed from (master seed, dataset name)."""
    digest = hashlib.sha256(f"{master_seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    method: Method
    n_total: int


@dataclass(frozen=True)
class CampaignConfig:
    out_dir: Path = Path("out")
    master_seed: int = 20240101
    box: ParameterBox = field(default_factory=ParameterBox.default)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    datasets: tuple[DatasetSpec, ...] = tuple(
        DatasetSpec(*row) for row in TABLE2_DATASETS
    )
    train_fraction: float = 0.9
    grid_resolution: tuple[int, ...] = bnd.DEFAULT_RESOLUTION
    restarts: int = 8
    max_nm_iter: int = 200
    minimax_iters: int = sampling.DEFAULT_MINIMAX_ITERS
    threads: int = 1
    slice_dim: int = 2  # aperture angle
    slice_value: float = 17.5
    slice_band: float = 1.5

    def grid(self) -> bnd.GridSpec:
        return bnd.GridSpec(self.box, self.grid_resolution)

    def dataset(self, name: str) -> DatasetSpec:
        for ds in self.datasets:
            if ds.name == name:
                return ds
        raise KeyError(f"no dataset named {name!r} in the campaign config")

    @classmethod
    def from_file(cls, path, out_dir=None, master_seed=None, threads=None) -> "CampaignConfig":
        raw = json.loads(Path(path).read_text())
        kwargs = {}
        if "box" in raw:
            kwargs["box"] = ParameterBox.from_dict(raw.pop("box"))
        if "physics" in raw:
            kwargs["physics"] = PhysicsConfig(**raw.pop("physics"))
        if "datasets" in raw:
            kwargs["datasets"] = tuple(
                DatasetSpec(d["name"], Method(d["method"]), int(d["n_total"]))
                for d in raw.pop("datasets")
            )
        for key in (
            "master_seed",
            "train_fraction",
            "restarts",
            "max_nm_iter",
            "minimax_iters",
            "threads",
            "slice_dim",
            "slice_value",
            "slice_band",
        ):
            if key in raw:
                kwargs[key] = raw.pop(key)
        if "grid_resolution" in raw:
            kwargs["grid_resolution"] = tuple(int(r) for r in raw.pop("grid_resolution"))
        if "out_dir" in raw:
            kwargs["out_dir"] = Path(raw.pop("out_dir"))
        if raw:
            raise ValueError(f"unknown campaign config keys: {sorted(raw)}")
        cfg = cls(**kwargs)
        overrides = {}
        if out_dir is not None:
            overrides["out_dir"] = Path(out_dir)
        if master_seed is not None:
            overrides["master_seed"] = master_seed
        if threads is not None:
            overrides["threads"] = threads
        return replace(cfg, **overrides) if overrides else cfg


def _design_for(cfg: CampaignConfig, ds: DatasetSpec) -> DesignSpec:
    return DesignSpec(
        method=ds.method,
        n_total=ds.n_total,
        seed=derive_seed(cfg.master_seed, ds.name),
        train_fraction=cfg.train_fraction,
    )


def cmd_sample(cfg: CampaignConfig, names: list[str] | None = None) -> list[Path]:
    """Sample, simulate, and persist every configured dataset."""
    out = Path(cfg.out_dir)
    written = []
    targets = cfg.datasets if not names else [cfg.dataset(n) for n in names]
    for ds in targets:
        spec = _design_for(cfg, ds)
        samples = sampling.sample(cfg.box, spec, cfg.minimax_iters)
        labeled = sampling.label(samples, cfg.physics, threads=cfg.threads)
        csv_path = out / f"{ds.name}.csv"
        sampling.save_labeled_csv(csv_path, labeled)
        sampling.save_design_json(
            out / f"{ds.name}.json",
            spec,
            cfg.box,
            name=ds.name,
            minimax_iters=cfg.minimax_iters if ds.method is Method.LATIN_HYPERCUBE else None,
        )
        written.extend([csv_path, out / f"{ds.name}.json"])
    return written


def _split_labeled(labeled, spec: DesignSpec):
    if len(labeled) != spec.n_total:
        raise ValueError(
            f"dataset has {len(labeled)} rows, provenance expects {spec.n_total}"
        )
    train_idx, test_idx = sampling.split_indices(spec)
    return [labeled[i] for i in train_idx], [labeled[i] for i in test_idx]


def cmd_train(
    cfg: CampaignConfig, dataset_csv, dataset_json=None
) -> tuple[Path, gpc.GpcModel]:
    """Split a labeled dataset, tune hyperparameters on the training part,
    fit, and persist the model plus the split halves."""
    dataset_csv = Path(dataset_csv)
    labeled = sampling.load_labeled_csv(dataset_csv)
    if dataset_json is None:
        dataset_json = dataset_csv.with_suffix(".json")
    if Path(dataset_json).exists():
        spec, box, _ = sampling.load_design_json(dataset_json)
    else:
        spec = DesignSpec(
            Method.MONTE_CARLO,
            len(labeled),
            derive_seed(cfg.master_seed, dataset_csv.stem),
            cfg.train_fraction,
        )
        box = cfg.box
    train, test = _split_labeled(labeled, spec)
    out = Path(cfg.out_dir)
    sampling.save_labeled_csv(out / f"{dataset_csv.stem}_train.csv", train)
    sampling.save_labeled_csv(out / f"{dataset_csv.stem}_test.csv", test)

    training = gpc.TrainingSet.from_labeled(train, box)
    theta = gpc.optimize_hyperparams(
        training,
        restarts=cfg.restarts,
        seed=spec.seed,
        max_nm_iter=cfg.max_nm_iter,
    )
    model = gpc.laplace_fit(training, theta)
    model_path = out / f"{dataset_csv.stem}_model.json"
    model.save(model_path)
    return model_path, model


def cmd_evaluate(model_file, test_csv, out_json=None) -> dict:
    model = gpc.GpcModel.load(model_file)
    test = sampling.load_labeled_csv(test_csv)
    metrics = gpc.evaluate(model, test)
    result = {
        "model": Path(model_file).name,
        "test_set": Path(test_csv).name,
        "n_test": len(test),
        "accuracy": metrics.accuracy,
        "n_misclassified": metrics.n_misclassified,
        "probabilities": [float(p) for p in metrics.probabilities],
    }
    if out_json is not None:
        atomic_write_text(out_json, json.dumps(result, indent=2, sort_keys=True) + "\n")
    return result


def save_boundary_csv(path, est: bnd.BoundaryEstimate) -> None:
    names = est.grid.box.names
    lines = [",".join(names) + ",prob"]
    for row, p in zip(est.points, est.probabilities):
        lines.append(",".join(fmt_float(v) for v in row) + f",{fmt_float(p)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_boundary_csv(path, box: ParameterBox) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    expected = ",".join(box.names) + ",prob"
    if not lines or lines[0].strip() != expected:
        raise ValueError(f"{path}:1: expected header {expected!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != box.ndim + 1:
            raise ValueError(f"{path}:{lineno}: expected {box.ndim + 1} fields")
        try:
            rows.append([float(v) for v in parts[: box.ndim]])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad number ({exc})") from None
    return np.array(rows).reshape(len(rows), box.ndim)


def cmd_boundary(cfg: CampaignConfig, model_file, out_csv=None) -> tuple[Path, int]:
    """Extract and persist the boundary point cloud. An empty boundary is
    reported (empty CSV), not fatal."""
    model = gpc.GpcModel.load(model_file)
    grid = bnd.GridSpec(model.training.box, cfg.grid_resolution)
    if out_csv is None:
        stem = Path(model_file).stem.removesuffix("_model")
        out_csv = Path(cfg.out_dir) / f"{stem}_boundary.csv"
    out_csv = Path(out_csv)
    probs = bnd.grid_probabilities(model, grid, threads=cfg.threads)
    try:
        est = bnd.extract_boundary(
            model, grid, model_id=Path(model_file).stem, probs=probs
        )
    except bnd.EmptyBoundaryError:
        atomic_write_text(out_csv, ",".join(grid.box.names) + ",prob\n")
        return out_csv, 0
    save_boundary_csv(out_csv, est)
    return out_csv, len(est)


def cmd_compare(cfg: CampaignConfig, boundary_a, boundary_b) -> dict:
    box = cfg.box
    pts_a = load_boundary_csv(boundary_a, box)
    pts_b = load_boundary_csv(boundary_b, box)
    return {
        "a": Path(boundary_a).name,
        "b": Path(boundary_b).name,
        "hausdorff_raw": bnd.hausdorff(pts_a, pts_b),
        "hausdorff_normalized": bnd.hausdorff(box.to_unit(pts_a), box.to_unit(pts_b)),
    }


def save_slice_csv(path, sl: bnd.ConfidenceSlice) -> None:
    """Probability matrix with row/column coordinate labels."""
    x_name = sl.box.dims[sl.plane_dims[0]].name
    y_name = sl.box.dims[sl.plane_dims[1]].name
    header = f"{x_name}\\{y_name}," + ",".join(fmt_float(v) for v in sl.axes[1])
    lines = [header]
    for i, xv in enumerate(sl.axes[0]):
        lines.append(
            fmt_float(xv) + "," + ",".join(fmt_float(p) for p in sl.probs[i])
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def cmd_slice(
    cfg: CampaignConfig,
    model_file,
    dim: int | None = None,
    value: float | None = None,
    band: float | None = None,
    data_csv=None,
    out_prefix=None,
) -> tuple[Path, Path]:
    model = gpc.GpcModel.load(model_file)
    dim = cfg.slice_dim if dim is None else dim
    value = cfg.slice_value if value is None else value
    band = cfg.slice_band if band is None else band
    data = sampling.load_labeled_csv(data_csv) if data_csv else None
    grid = bnd.GridSpec(model.training.box, cfg.grid_resolution)
    sl = bnd.confidence_slice(model, dim, value, data, band, grid)
    if out_prefix is None:
        stem = Path(model_file).stem.removesuffix("_model")
        out_prefix = Path(cfg.out_dir) / f"{stem}_slice"
    out_prefix = Path(out_prefix)
    csv_path = out_prefix.with_suffix(".csv")
    svg_path = out_prefix.with_suffix(".svg")
    save_slice_csv(csv_path, sl)
    svg.save_slice_svg(svg_path, sl)
    return csv_path, svg_path


def cmd_report(cfg: CampaignConfig) -> Path:
    """Run the whole campaign and aggregate a report over all datasets."""
    out = Path(cfg.out_dir)
    cmd_sample(cfg)
    per_dataset = {}
    boundary_paths = {}
    artifacts = []
    for ds in cfg.datasets:
        csv_path = out / f"{ds.name}.csv"
        model_path, _ = cmd_train(cfg, csv_path)
        metrics = cmd_evaluate(
            model_path,
            out / f"{ds.name}_test.csv",
            out / f"{ds.name}_metrics.json",
        )
        boundary_csv, n_points = cmd_boundary(cfg, model_path)
        slice_csv, slice_svg = cmd_slice(
            cfg, model_path, data_csv=out / f"{ds.name}.csv"
        )
        boundary_paths[ds.name] = boundary_csv
        spec = _design_for(cfg, ds)
        per_dataset[ds.name] = {
            "method": ds.method.value,
            "n_train": spec.n_train,
            "n_test": spec.n_test,
            "accuracy": metrics["accuracy"],
            "n_misclassified": metrics["n_misclassified"],
            "boundary_points": n_points,
            "model": model_path.name,
            "boundary": boundary_csv.name,
            "slice_csv": slice_csv.name,
            "slice_svg": slice_svg.name,
        }
        artifacts.extend(
            [csv_path.name, model_path.name, boundary_csv.name, slice_csv.name,
             slice_svg.name, f"{ds.name}_metrics.json"]
        )
    names = [ds.name for ds in cfg.datasets]
    if all(n in names for pair in COMPARISON_PAIRS for n in pair):
        pairs = COMPARISON_PAIRS
    else:
        pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1 :]]
    distances = {}
    for name_a, name_b in pairs:
        if per_dataset[name_a]["boundary_points"] == 0:
            continue
        if per_dataset[name_b]["boundary_points"] == 0:
            continue
        cmp = cmd_compare(cfg, boundary_paths[name_a], boundary_paths[name_b])
        distances[f"{name_a}_vs_{name_b}"] = {
            "hausdorff_raw": cmp["hausdorff_raw"],
            "hausdorff_normalized": cmp["hausdorff_normalized"],
        }
    report = {
        "master_seed": cfg.master_seed,
        "datasets": per_dataset,
        "boundary_distances": distances,
        "artifacts": sorted(set(artifacts)),
    }
    report_path = out / "report.json"
    atomic_write_text(report_path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report_path


def cmd_simulate(params: scenario.ScenarioParams, physics: PhysicsConfig) -> dict:
    """Single-point debug: trace plus the closed-form margin."""
    trace = scenario.simulate(params, physics)
    return {
        "params": {
            "speed_ego": params.speed_ego,
            "speed_target": params.speed_target,
            "aperture_angle": params.aperture_angle,
        },
        "outcome": trace.outcome.value,
        "detection_gap": trace.detection_gap,
        "min_gap": trace.min_gap,
        "time_to_outcome": trace.time_to_outcome,
        "oracle_outcome": scenario.oracle(params, physics).value,
        "oracle_margin": scenario.oracle_margin(params, physics),
        "detection_distance": scenario.detection_distance(params, physics),
        "required_stopping_gap": scenario.required_stopping_gap(params, physics),
    }
