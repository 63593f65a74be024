"""Traffic-jam approach scenario: kinematics, radar detection, outcomes.

An ego vehicle approaches the slow tail vehicle of a traffic jam inside a
constant-radius left curve. A cone-shaped radar detects the target once
the arc gap is short enough; after a reaction delay the ego brakes at a
constant rate until it matches the target speed. The episode is scored
Collision / NoCollision.

Two routes to the outcome are provided: `simulate` (time-stepped) and
`oracle` (closed-form stopping-gap condition); they are used to
cross-check each other.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import backend

KMH_TO_MPS = 1.0 / 3.6

# Parameter ranges of the scenario (km/h, km/h, degrees).
EGO_SPEED_RANGE = (40.0, 70.0)
TARGET_SPEED_RANGE = (5.0, 20.0)
APERTURE_RANGE = (10.0, 25.0)


class Outcome(Enum):
    COLLISION = "collision"
    NO_COLLISION = "no_collision"


class NonTermination(Exception):
    """Episode ended without collision or speed match: configuration error."""

    def __init__(self, params, message="simulation did not terminate"):
        self.params = params
        super().__init__(f"{message}: {params}")


@dataclass(frozen=True)
class ScenarioParams:
    """One point in scenario space: speeds in km/h, full cone angle in deg."""

    speed_ego: float
    speed_target: float
    aperture_angle: float

    def in_default_box(self) -> bool:
        return (
            EGO_SPEED_RANGE[0] <= self.speed_ego <= EGO_SPEED_RANGE[1]
            and TARGET_SPEED_RANGE[0] <= self.speed_target <= TARGET_SPEED_RANGE[1]
            and APERTURE_RANGE[0] <= self.aperture_angle <= APERTURE_RANGE[1]
        )

    def as_array(self) -> np.ndarray:
        return np.array([self.speed_ego, self.speed_target, self.aperture_angle])


@dataclass(frozen=True)
class LabeledSample:
    params: ScenarioParams
    outcome: Outcome


@dataclass(frozen=True)
class PhysicsConfig:
    """Fixed physical constants of the episode (SI units)."""

    curve_radius: float = 50.0
    decel: float = 6.0
    reaction_time: float = 0.5
    radar_max_range: float = 150.0
    initial_gap: float = 100.0
    dt: float = 0.01
    max_sim_time: float = 60.0

    def __post_init__(self):
        for name in (
            "curve_radius",
            "decel",
            "reaction_time",
            "radar_max_range",
            "initial_gap",
            "dt",
            "max_sim_time",
        ):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.dt > 0.1:
            raise ValueError("dt must be <= 0.1 s")
        widest = min(
            self.radar_max_range,
            self.curve_radius * math.radians(APERTURE_RANGE[1]),
        )
        if self.initial_gap <= widest:
            raise ValueError(
                "initial_gap must exceed the widest detection distance "
                f"({widest:.2f} m) so detection happens during the episode"
            )

    @classmethod
    def from_file(cls, path) -> "PhysicsConfig":
        """Load from JSON or flat key=value text; missing keys keep defaults."""
        text = Path(path).read_text()
        stripped = text.lstrip()
        if stripped.startswith("{"):
            raw = json.loads(text)
        else:
            raw = {}
            for lineno, line in enumerate(text.splitlines(), start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
                key, _, value = line.partition("=")
                raw[key.strip()] = value.strip()
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown physics keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in raw.items()})


@dataclass(frozen=True)
class SimTrace:
    outcome: Outcome
    detection_gap: float | None
    min_gap: float
    time_to_outcome: float


def detection_distance(p: ScenarioParams, c: PhysicsConfig) -> float:
    """Arc gap at which the target enters the radar cone.

    On a circle of radius R, the bearing of a point at arc distance s
    ahead, relative to the follower's tangent heading, is s/(2R); the
    target is inside a cone of full angle alpha when s <= R * alpha.
    """
    return min(c.radar_max_range, c.curve_radius * math.radians(p.aperture_angle))


def required_stopping_gap(p: ScenarioParams, c: PhysicsConfig) -> float:
    """Closing distance consumed between detection and speed match."""
    dv = (p.speed_ego - p.speed_target) * KMH_TO_MPS
    if dv <= 0.0:
        return 0.0
    return dv * c.reaction_time + dv * dv / (2.0 * c.decel)


def oracle_margin(p: ScenarioParams, c: PhysicsConfig) -> float:
    """Detection distance minus required stopping gap; < 0 means collision."""
    return detection_distance(p, c) - required_stopping_gap(p, c)


def oracle(p: ScenarioParams, c: PhysicsConfig) -> Outcome:
    """Closed-form outcome for the constant-deceleration model."""
    if detection_distance(p, c) < required_stopping_gap(p, c):
        return Outcome.COLLISION
    return Outcome.NO_COLLISION


def oracle_margin_batch(points: np.ndarray, c: PhysicsConfig) -> np.ndarray:
    """Vectorised oracle margin for an (n, 3) array of raw parameters."""
    det = np.minimum(
        c.radar_max_range, c.curve_radius * np.radians(points[:, 2])
    )
    dv = np.maximum((points[:, 0] - points[:, 1]) * KMH_TO_MPS, 0.0)
    return det - (dv * c.reaction_time + dv * dv / (2.0 * c.decel))


def simulate_batch(points: np.ndarray, c: PhysicsConfig) -> list[SimTrace]:
    """Run the stepping kernel over an (n, 3) array of raw parameters.

    Raises NonTermination identifying the first offending point if any
    episode fails to resolve within max_sim_time.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    ve = np.ascontiguousarray(pts[:, 0] * KMH_TO_MPS)
    vt = np.ascontiguousarray(pts[:, 1] * KMH_TO_MPS)
    det = np.minimum(c.radar_max_range, c.curve_radius * np.radians(pts[:, 2]))
    det = np.ascontiguousarray(det)
    collided, det_gap, min_gap, t_out, status = backend.simulate_batch(
        ve, vt, det, c.decel, c.reaction_time, c.initial_gap, c.dt, c.max_sim_time
    )
    bad = np.flatnonzero(status)
    if bad.size:
        i = int(bad[0])
        raise NonTermination(ScenarioParams(*pts[i]))
    traces = []
    for i in range(pts.shape[0]):
        traces.append(
            SimTrace(
                outcome=Outcome.COLLISION if collided[i] else Outcome.NO_COLLISION,
                detection_gap=None if math.isnan(det_gap[i]) else float(det_gap[i]),
                min_gap=float(min_gap[i]),
                time_to_outcome=float(t_out[i]),
            )
        )
    return traces


def simulate(p: ScenarioParams, c: PhysicsConfig | None = None) -> SimTrace:
    """Time-stepped episode for one scenario point.

    Points outside the default parameter box are simulated anyway, with a
    warning (the model extrapolates fine; the box is a sampling contract).
    """
    if c is None:
        c = PhysicsConfig()
    if not p.in_default_box():
        warnings.warn(f"scenario outside the default parameter box: {p}")
    return simulate_batch(p.as_array()[None, :], c)[0]
