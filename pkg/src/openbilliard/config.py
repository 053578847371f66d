"""JSON experiment configuration (schema version "1").

Obstacle indices in ``coding`` and deformation ``target`` are 1-based, as in
the symbolic notation; everything built from a config is 0-based.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .deformation import DeformationFamily, DeformationRule
from .dynamics import PhaseState
from .errors import ConfigError, DomainError
from .geometry import Obstacle
from .scene import Scene

SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class ObstacleSpec:
    kind: str
    center: tuple
    radii: tuple
    orientation: tuple | None = None

    def build(self) -> Obstacle:
        return Obstacle(self.kind, self.center, self.radii, self.orientation)


@dataclass(frozen=True)
class RuleSpec:
    target: int
    rule: str
    vector: tuple | None = None
    angle_plane: tuple | None = None
    rate: float = 1.0

    def build(self) -> DeformationRule:
        plane = tuple(a - 1 for a in self.angle_plane) if self.angle_plane else (0, 1)
        return DeformationRule(self.target - 1, self.rule, self.vector, plane, self.rate)


@dataclass(frozen=True)
class Tolerances:
    orbit_residual: float = 1e-12
    grazing: float = 1e-10
    boundary: float = 1e-9


@dataclass(frozen=True)
class ExperimentConfig:
    dimension: int
    obstacles: tuple
    coding: tuple = ()
    deformation: tuple = ()
    deformation_range: float | None = None
    bounces: int = 200
    burn_in: int | None = None
    alpha_grid: tuple = ()
    h_grid: tuple = ()
    seed: int = 0
    start: dict | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    # --- builders ---------------------------------------------------------

    def scene(self) -> Scene:
        try:
            return Scene(tuple(spec.build() for spec in self.obstacles))
        except DomainError as exc:
            raise ConfigError(f"obstacles: {exc}") from exc

    def zero_based_coding(self) -> tuple:
        return tuple(c - 1 for c in self.coding)

    def family(self, scene=None) -> DeformationFamily:
        if not self.deformation:
            raise ConfigError("deformation: no deformation rules given")
        b = self.deformation_range
        if b is None:
            grid = list(self.alpha_grid) + [2 * h for h in self.h_grid]
            b = max(grid) if grid else 1.0
        return DeformationFamily(scene or self.scene(), tuple(r.build() for r in self.deformation), b)

    def start_state(self) -> PhaseState | None:
        if self.start is None:
            return None
        import numpy as np
        return PhaseState(np.asarray(self.start["q"], dtype=float), np.asarray(self.start["v"], dtype=float),
                          int(self.start["obstacle"]) - 1)

    # --- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        out = {"schema_version": self.schema_version, "dimension": self.dimension,
               "obstacles": [], "bounces": self.bounces, "seed": self.seed,
               "tolerances": asdict(self.tolerances)}
        for spec in self.obstacles:
            ob = {"kind": spec.kind, "center": list(spec.center), "radii": list(spec.radii)}
            if spec.orientation is not None:
                ob["orientation"] = [list(row) for row in spec.orientation]
            out["obstacles"].append(ob)
        if self.coding:
            out["coding"] = list(self.coding)
        if self.deformation:
            out["deformation"] = []
            for r in self.deformation:
                item = {"target": r.target, "rule": r.rule}
                if r.vector is not None:
                    item["vector"] = list(r.vector)
                if r.angle_plane is not None:
                    item["angle_plane"] = list(r.angle_plane)
                if r.rate != 1.0:
                    item["rate"] = r.rate
                out["deformation"].append(item)
        if self.deformation_range is not None:
            out["deformation_range"] = self.deformation_range
        if self.burn_in is not None:
            out["burn_in"] = self.burn_in
        if self.alpha_grid:
            out["alpha_grid"] = list(self.alpha_grid)
        if self.h_grid:
            out["h_grid"] = list(self.h_grid)
        if self.start is not None:
            out["start"] = {"obstacle": self.start["obstacle"], "q": list(self.start["q"]),
                            "v": list(self.start["v"])}
        if self.output:
            out["output"] = dict(self.output)
        return out

    def dumps(self) -> str:
        # repr-round-trip floats keep full precision
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        return _parse(raw)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
        return _parse(raw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        return cls.loads(text)


_KNOWN = {"schema_version", "dimension", "obstacles", "coding", "deformation", "deformation_range",
          "bounces", "burn_in", "alpha_grid", "h_grid", "seed", "start", "tolerances", "output"}


def _fail(path, msg):
    raise ConfigError(f"{path}: {msg}")


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    return float(value)


def _integer(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        _fail(path, f"must be >= {minimum}")
    return value


def _vector(value, path, length=None):
    if not isinstance(value, list):
        _fail(path, "expected a list of numbers")
    out = tuple(_number(x, f"{path}[{i}]") for i, x in enumerate(value))
    if length is not None and len(out) != length:
        _fail(path, f"expected {length} entries, got {len(out)}")
    return out


def _parse(raw) -> ExperimentConfig:
    if not isinstance(raw, dict):
        _fail("$", "config must be a JSON object")
    unknown = set(raw) - _KNOWN
    if unknown:
        _fail("$", f"unknown keys {sorted(unknown)}")
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        _fail("schema_version", f"expected {SCHEMA_VERSION!r}, got {version!r}")
    if "dimension" not in raw:
        _fail("dimension", "missing")
    n = _integer(raw["dimension"], "dimension", 2)
    if "obstacles" not in raw or not isinstance(raw["obstacles"], list):
        _fail("obstacles", "missing or not a list")
    obstacles = []
    for i, ob in enumerate(raw["obstacles"]):
        p = f"obstacles[{i}]"
        if not isinstance(ob, dict):
            _fail(p, "expected an object")
        kind = ob.get("kind")
        if kind not in ("sphere", "ellipsoid"):
            _fail(f"{p}.kind", f"expected 'sphere' or 'ellipsoid', got {kind!r}")
        center = _vector(ob.get("center"), f"{p}.center", n)
        radii = _vector(ob.get("radii"), f"{p}.radii", n)
        orientation = None
        if ob.get("orientation") is not None:
            rows = ob["orientation"]
            if not isinstance(rows, list) or len(rows) != n:
                _fail(f"{p}.orientation", f"expected {n} rows")
            orientation = tuple(_vector(r, f"{p}.orientation[{k}]", n) for k, r in enumerate(rows))
        obstacles.append(ObstacleSpec(kind, center, radii, orientation))
    z = len(obstacles)
    coding = ()
    if "coding" in raw:
        if not isinstance(raw["coding"], list):
            _fail("coding", "expected a list of obstacle numbers")
        coding = tuple(_integer(c, f"coding[{k}]", 1) for k, c in enumerate(raw["coding"]))
        for k, c in enumerate(coding):
            if c > z:
                _fail(f"coding[{k}]", f"obstacle {c} does not exist (have {z})")
    rules = []
    for i, r in enumerate(raw.get("deformation", [])):
        p = f"deformation[{i}]"
        if not isinstance(r, dict):
            _fail(p, "expected an object")
        target = _integer(r.get("target"), f"{p}.target", 1)
        if target > z:
            _fail(f"{p}.target", f"obstacle {target} does not exist (have {z})")
        rule = r.get("rule")
        if rule not in ("translate", "scale", "rotate", "identity"):
            _fail(f"{p}.rule", f"unknown rule {rule!r}")
        vector = _vector(r["vector"], f"{p}.vector", n) if "vector" in r else None
        if rule == "translate" and vector is None:
            _fail(f"{p}.vector", "translate needs a vector")
        plane = None
        if "angle_plane" in r:
            plane = tuple(_integer(a, f"{p}.angle_plane", 1) for a in r["angle_plane"])
            if len(plane) != 2 or max(plane) > n:
                _fail(f"{p}.angle_plane", f"expected two axis numbers in 1..{n}")
        rate = _number(r.get("rate", 1.0), f"{p}.rate")
        rules.append(RuleSpec(target, rule, vector, plane, rate))
    tol_raw = raw.get("tolerances", {})
    if not isinstance(tol_raw, dict):
        _fail("tolerances", "expected an object")
    extra = set(tol_raw) - {"orbit_residual", "grazing", "boundary"}
    if extra:
        _fail("tolerances", f"unknown keys {sorted(extra)}")
    tolerances = Tolerances(**{k: _number(v, f"tolerances.{k}") for k, v in tol_raw.items()})
    start = raw.get("start")
    if start is not None:
        if not isinstance(start, dict):
            _fail("start", "expected an object")
        ob = _integer(start.get("obstacle"), "start.obstacle", 1)
        if ob > z:
            _fail("start.obstacle", f"obstacle {ob} does not exist")
        start = {"obstacle": ob, "q": _vector(start.get("q"), "start.q", n),
                 "v": _vector(start.get("v"), "start.v", n)}
    output = raw.get("output", {})
    if not isinstance(output, dict) or any(not isinstance(v, str) for v in output.values()):
        _fail("output", "expected an object of path strings")
    burn_in = raw.get("burn_in")
    if burn_in is not None:
        burn_in = _integer(burn_in, "burn_in", 0)
    b = raw.get("deformation_range")
    if b is not None:
        b = _number(b, "deformation_range")
    return ExperimentConfig(
        dimension=n, obstacles=tuple(obstacles), coding=coding, deformation=tuple(rules),
        deformation_range=b, bounces=_integer(raw.get("bounces", 200), "bounces", 1),
        burn_in=burn_in,
        alpha_grid=_vector(raw.get("alpha_grid", []), "alpha_grid"),
        h_grid=_vector(raw.get("h_grid", []), "h_grid"),
        seed=_integer(raw.get("seed", 0), "seed", 0), start=start, tolerances=tolerances,
        output=dict(output), schema_version=version,
    )


def config_for_scene(scene: Scene, **kwargs) -> ExperimentConfig:
    """Config describing an existing scene (used to ship the preset files)."""
    specs = []
    for ob in scene.obstacles:
        orient = None
        if ob.kind == "ellipsoid":
            orient = tuple(tuple(float(x) for x in row) for row in ob.orientation)
        specs.append(ObstacleSpec(ob.kind, tuple(float(x) + 0.0 for x in ob.center),
                                  tuple(float(x) for x in ob.radii), orient))
    return ExperimentConfig(dimension=scene.dimension, obstacles=tuple(specs), **kwargs)
