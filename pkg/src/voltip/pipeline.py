"""End-to-end orchestration: threat scan + bag scan -> scored TIP volume.

``PipelineConfig`` flattens every stage's parameters into one namespace so
a run is reproducible from a single seed plus a flat key=value config file.
The two ``binarize_threshold`` knobs are disambiguated as
``threat_binarize_threshold`` and ``bag_binarize_threshold``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .artefacts import MagParams, generate_artefacts
from .errors import ValidationError
from .insertion import (ObjectiveParams, PsoConfig, TipResult, insert)
from .isolation import IsolationParams, ThreatIndicator, isolate_threat
from .voids import BagCostMap, VoidParams, determine_voids
from .volume import Volume


@dataclass
class PipelineConfig:
    # threat isolation
    threat_binarize_threshold: float = 150.0
    body_dilate_radius: int = 2
    background_dilate_radius: int = 2
    connectivity: int = 26
    # void determination
    bag_binarize_threshold: float = 200.0
    bag_dilate_radius: int = 2
    content_threshold: float = 150.0
    c: float = 100.0
    # insertion objective
    lambda1: float = 0.01
    lambda2: float = 1.0
    c_prime: float = 10.0
    gravity_axis: str = "y"
    # particle swarm
    w: float = 0.729
    c1: float = 1.494
    c2: float = 1.494
    n_particles: int = 40
    n_iterations: int = 60
    seed: int = 0
    # metal artefacts
    metal_threshold: float = 3000.0
    q: float = 0.2
    n_angles: int = 180
    recon_filter: str = "ram-lak"
    slice_axis: str = "z"
    apply_mag: bool = True
    # execution
    workers: int = 1

    def isolation_params(self) -> IsolationParams:
        return IsolationParams(self.threat_binarize_threshold, self.body_dilate_radius,
                               self.background_dilate_radius, self.connectivity)

    def void_params(self) -> VoidParams:
        return VoidParams(self.bag_binarize_threshold, self.bag_dilate_radius,
                          self.content_threshold, self.c)

    def objective_params(self) -> ObjectiveParams:
        return ObjectiveParams(self.lambda1, self.lambda2, self.c_prime, self.gravity_axis)

    def pso_config(self, bounds=None) -> PsoConfig:
        return PsoConfig(self.w, self.c1, self.c2, self.n_particles,
                         self.n_iterations, self.seed, bounds)

    def mag_params(self) -> MagParams:
        return MagParams(self.metal_threshold, self.q, self.n_angles,
                         self.recon_filter, self.slice_axis)

    def merged(self, overrides: dict) -> "PipelineConfig":
        """New config with the given fields replaced; unknown keys are errors."""
        known = {f.name: f for f in dataclasses.fields(self)}
        values = dataclasses.asdict(self)
        for key, raw in overrides.items():
            f = known.get(key)
            if f is None:
                raise ValidationError(f"unknown config key {key!r}")
            values[key] = _coerce(raw, f.type, key)
        return PipelineConfig(**values)


def _coerce(raw, type_name, key):
    if not isinstance(raw, str):
        return raw
    try:
        if type_name in ("int",):
            return int(raw)
        if type_name in ("float",):
            return float(raw)
        if type_name in ("bool",):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError as exc:
        raise ValidationError(f"config key {key!r}: cannot parse {raw!r}") from exc


def load_config_file(path: str, base: PipelineConfig | None = None) -> PipelineConfig:
    """Parse a flat key=value config file; '#' starts a comment line."""
    overrides: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            overrides[key.strip()] = value.strip()
    return (base or PipelineConfig()).merged(overrides)


@dataclass
class PipelineResult:
    tip: Volume
    insertion: TipResult
    threat: Volume
    indicator: ThreatIndicator
    cost_map: BagCostMap


def run_pipeline(threat_scan: Volume, bag_scan: Volume,
                 config: PipelineConfig | None = None) -> PipelineResult:
    """Isolate, segment, optimise, blend, and (optionally) add metal streaks."""
    cfg = config or PipelineConfig()
    threat, indicator = isolate_threat(threat_scan, cfg.isolation_params())
    cost_map = determine_voids(bag_scan, cfg.void_params())
    result = insert(threat, indicator, bag_scan, cost_map,
                    cfg.objective_params(), cfg.pso_config(), workers=cfg.workers)
    tip = result.volume
    if cfg.apply_mag:
        try:
            tip = generate_artefacts(bag_scan, threat, indicator, result.pose,
                                     cfg.mag_params())
        except ValidationError:
            # pose did not fit: insertion already fell back to the plain bag
            tip = result.volume
    return PipelineResult(tip, result, threat, indicator, cost_map)
