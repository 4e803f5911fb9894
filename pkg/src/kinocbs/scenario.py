"""Scenario documents (JSON, schemaVersion 1) and the bundled environments."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from kinocbs.conflicts import bodies_collide, body_corners
from kinocbs.dynamics import KINEMATIC_CAR, SECOND_ORDER_CAR, DynamicsError, RobotModel, kinematic_car, second_order_car
from kinocbs.geometry import BodySpec, ConvexPolygon, GeometryError, Workspace, corners_hit_obstacle
from kinocbs.low_level import Environment

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


@dataclass(frozen=True)
class RobotSpec:
    name: str
    dynamics: str
    start: tuple[float, ...]
    goal: tuple[float, float]
    goal_radius: float
    body: BodySpec = BodySpec(0.7, 0.5)
    wheelbase: float = 0.7
    speed: float = 1.0
    state_bounds: dict = field(default_factory=dict)
    control_bounds: tuple[tuple[float, float], ...] = ()

    def to_model(self, workspace: Workspace, member: int = 0) -> RobotModel:
        if self.dynamics == SECOND_ORDER_CAR:
            kw = {}
            if "v" in self.state_bounds:
                kw["v_bounds"] = tuple(self.state_bounds["v"])
            if "phi" in self.state_bounds:
                kw["phi_bounds"] = tuple(self.state_bounds["phi"])
            if self.control_bounds:
                kw["accel_bounds"] = tuple(self.control_bounds[0])
                kw["steer_rate_bounds"] = tuple(self.control_bounds[1])
            return second_order_car(self.name, self.start, self.goal, self.goal_radius, workspace,
                                    body=self.body, wheelbase=self.wheelbase, member=member, **kw)
        if self.dynamics == KINEMATIC_CAR:
            kw = {}
            if self.control_bounds:
                kw["steer_bounds"] = tuple(self.control_bounds[0])
            return kinematic_car(self.name, self.start, self.goal, self.goal_radius, workspace,
                                 body=self.body, wheelbase=self.wheelbase, speed=self.speed,
                                 member=member, **kw)
        raise ScenarioError(f"robot {self.name}", f"unknown dynamics {self.dynamics!r}")


@dataclass(frozen=True)
class Scenario:
    name: str
    workspace: Workspace
    obstacles: tuple[ConvexPolygon, ...]
    robots: tuple[RobotSpec, ...]
    defaults: dict = field(default_factory=dict)
    description: str = ""

    def models(self) -> list[RobotModel]:
        return [r.to_model(self.workspace, k) for k, r in enumerate(self.robots)]

    def environment(self) -> Environment:
        return Environment(self.workspace, self.obstacles)

    def check(self) -> None:
        """Raise ScenarioError unless starts are collision-free and goals lie inside the workspace."""
        models = []
        for k, spec in enumerate(self.robots):
            where = f"robots[{k}]"
            try:
                m = spec.to_model(self.workspace, k)
            except (DynamicsError, GeometryError) as e:
                raise ScenarioError(where, str(e)) from None
            if not m.goals_within(self.workspace):
                raise ScenarioError(f"{where}.goal", "goal disc leaves the workspace")
            corners = body_corners(m, m.start)
            for q, ob in enumerate(self.obstacles):
                if any(corners_hit_obstacle(c, ob) for c in corners):
                    raise ScenarioError(f"{where}.start", f"start overlaps obstacle {q}")
            models.append(m)
        for a in range(len(models)):
            for b in range(a + 1, len(models)):
                if bodies_collide(body_corners(models[a], models[a].start),
                                  body_corners(models[b], models[b].start)):
                    raise ScenarioError("robots", f"robots {a} and {b} overlap at their starts")


# -- (de)serialisation ------------------------------------------------------

def _num(v: Any, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(where, f"expected a number, got {v!r}")
    if not math.isfinite(v):
        raise ScenarioError(where, "must be finite")
    return float(v)


def _req(d: dict, key: str, where: str) -> Any:
    if not isinstance(d, dict):
        raise ScenarioError(where, "expected an object")
    if key not in d:
        raise ScenarioError(f"{where}.{key}" if where else key, "missing required field")
    return d[key]


def _pair(v: Any, where: str) -> tuple[float, float]:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ScenarioError(where, "expected a pair [a, b]")
    return (_num(v[0], f"{where}[0]"), _num(v[1], f"{where}[1]"))


def robot_to_dict(r: RobotSpec) -> dict:
    d = {
        "name": r.name,
        "dynamics": r.dynamics,
        "start": list(r.start),
        "goal": {"center": list(r.goal), "radius": r.goal_radius},
        "body": {"length": r.body.length, "width": r.body.width},
        "wheelbase": r.wheelbase,
    }
    if r.dynamics == KINEMATIC_CAR:
        d["speed"] = r.speed
    if r.state_bounds:
        d["stateBounds"] = {k: list(v) for k, v in r.state_bounds.items()}
    if r.control_bounds:
        d["controlBounds"] = [list(b) for b in r.control_bounds]
    return d


def robot_from_dict(d: dict, where: str) -> RobotSpec:
    name = _req(d, "name", where)
    dyn = _req(d, "dynamics", where)
    if dyn not in (SECOND_ORDER_CAR, KINEMATIC_CAR):
        raise ScenarioError(f"{where}.dynamics", f"unknown dynamics {dyn!r}")
    start_raw = _req(d, "start", where)
    if not isinstance(start_raw, list):
        raise ScenarioError(f"{where}.start", "expected a list")
    start = tuple(_num(v, f"{where}.start[{k}]") for k, v in enumerate(start_raw))
    goal = _req(d, "goal", where)
    center = _pair(_req(goal, "center", f"{where}.goal"), f"{where}.goal.center")
    radius = _num(_req(goal, "radius", f"{where}.goal"), f"{where}.goal.radius")
    body_d = d.get("body", {"length": 0.7, "width": 0.5})
    try:
        body = BodySpec(_num(_req(body_d, "length", f"{where}.body"), f"{where}.body.length"),
                        _num(_req(body_d, "width", f"{where}.body"), f"{where}.body.width"))
    except GeometryError as e:
        raise ScenarioError(f"{where}.body", str(e)) from None
    sb = d.get("stateBounds", {})
    if not isinstance(sb, dict):
        raise ScenarioError(f"{where}.stateBounds", "expected an object")
    state_bounds = {k: _pair(v, f"{where}.stateBounds.{k}") for k, v in sb.items()}
    cb = d.get("controlBounds", [])
    control_bounds = tuple(_pair(v, f"{where}.controlBounds[{k}]") for k, v in enumerate(cb))
    return RobotSpec(
        name=str(name), dynamics=dyn, start=start, goal=center, goal_radius=radius, body=body,
        wheelbase=_num(d.get("wheelbase", 0.7), f"{where}.wheelbase"),
        speed=_num(d.get("speed", 1.0), f"{where}.speed"),
        state_bounds=state_bounds, control_bounds=control_bounds,
    )


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "schemaVersion": SCHEMA_VERSION,
        "name": s.name,
        "description": s.description,
        "workspace": asdict(s.workspace),
        "obstacles": [{"vertices": [list(v) for v in o.vertices]} for o in s.obstacles],
        "robots": [robot_to_dict(r) for r in s.robots],
        "defaults": dict(s.defaults),
    }


def scenario_from_dict(d: dict) -> Scenario:
    if not isinstance(d, dict):
        raise ScenarioError("", "scenario document must be a JSON object")
    version = _req(d, "schemaVersion", "")
    if version != SCHEMA_VERSION:
        raise ScenarioError("schemaVersion", f"unsupported version {version!r}")
    ws_d = _req(d, "workspace", "")
    try:
        ws = Workspace(*(_num(_req(ws_d, k, "workspace"), f"workspace.{k}") for k in ("xmin", "xmax", "ymin", "ymax")))
    except GeometryError as e:
        raise ScenarioError("workspace", str(e)) from None
    obstacles = []
    for k, o in enumerate(d.get("obstacles", [])):
        verts = _req(o, "vertices", f"obstacles[{k}]")
        pts = [_pair(v, f"obstacles[{k}].vertices[{q}]") for q, v in enumerate(verts)]
        try:
            obstacles.append(ConvexPolygon(tuple(pts)))
        except GeometryError as e:
            raise ScenarioError(f"obstacles[{k}]", str(e)) from None
    robots_raw = _req(d, "robots", "")
    if not isinstance(robots_raw, list) or not robots_raw:
        raise ScenarioError("robots", "expected a non-empty list")
    robots = tuple(robot_from_dict(r, f"robots[{k}]") for k, r in enumerate(robots_raw))
    defaults = d.get("defaults", {})
    if not isinstance(defaults, dict):
        raise ScenarioError("defaults", "expected an object")
    s = Scenario(str(_req(d, "name", "")), ws, tuple(obstacles), robots, defaults, str(d.get("description", "")))
    s.check()
    return s


def loads(text: str, source: str = "<string>") -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{source}:{e.lineno}:{e.colno}", e.msg) from None
    return scenario_from_dict(doc)


def dumps(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.exists() and not path.suffix:
        return bundled(str(path))
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError(str(path), e.strerror or str(e)) from None
    return loads(text, str(path))


def save_scenario(s: Scenario, path: str | Path) -> None:
    Path(path).write_text(dumps(s), encoding="utf-8")


def bundled_names() -> list[str]:
    root = resources.files("kinocbs") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def bundled(name: str) -> Scenario:
    root = resources.files("kinocbs") / "scenarios"
    f = root / f"{name}.json"
    if not f.is_file():
        raise ScenarioError(name, f"no bundled scenario (have: {', '.join(bundled_names())})")
    return loads(f.read_text(encoding="utf-8"), f"{name}.json")
