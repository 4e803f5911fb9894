"""Plan documents (JSON, schemaVersion 1) and SVG rendering."""

from __future__ import annotations

import json
from pathlib import Path
from xml.sax.saxutils import escape

from kinocbs.conflicts import Plan
from kinocbs.scenario import SCHEMA_VERSION, Scenario, ScenarioError, scenario_from_dict, scenario_to_dict
from kinocbs.trajectory import Segment, Trajectory

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def plan_to_dict(plan: Plan, scenario: Scenario, algorithm: str = "", stats: dict | None = None,
                 config: dict | None = None) -> dict:
    return {
        "schemaVersion": SCHEMA_VERSION,
        "algorithm": algorithm,
        "scenario": scenario_to_dict(scenario),
        "config": config or {},
        "step": plan[0].step if len(plan) else 0.05,
        "robots": [
            {
                "name": spec.name,
                "start": list(traj.start),
                "segments": [{"control": list(s.control), "duration": s.duration} for s in traj.segments],
            }
            for spec, traj in zip(scenario.robots, plan)
        ],
        "stats": stats or {},
    }


def plan_from_dict(d: dict) -> tuple[Plan, Scenario]:
    if not isinstance(d, dict) or d.get("schemaVersion") != SCHEMA_VERSION:
        raise ScenarioError("schemaVersion", "not a version 1 plan document")
    if "scenario" not in d or "robots" not in d:
        raise ScenarioError("", "plan document needs 'scenario' and 'robots'")
    scenario = scenario_from_dict(d["scenario"])
    step = float(d.get("step", 0.05))
    models = scenario.models()
    if len(d["robots"]) != len(models):
        raise ScenarioError("robots", f"plan has {len(d['robots'])} robots, scenario {len(models)}")
    trajs = []
    for k, (r, m) in enumerate(zip(d["robots"], models)):
        try:
            segs = [Segment(tuple(s["control"]), float(s["duration"])) for s in r["segments"]]
            trajs.append(Trajectory(m, r.get("start", m.start), segs, step))
        except (KeyError, TypeError, ValueError) as e:
            raise ScenarioError(f"robots[{k}]", f"bad trajectory: {e}") from None
    return Plan(tuple(trajs)), scenario


def save_plan(path: str | Path, plan: Plan, scenario: Scenario, **meta) -> None:
    path = Path(path)
    try:
        path.write_text(json.dumps(plan_to_dict(plan, scenario, **meta), indent=1) + "\n", encoding="utf-8")
    except OSError as e:
        raise OSError(f"cannot write plan to {path}: {e.strerror or e}") from e


def load_plan(path: str | Path) -> tuple[Plan, Scenario]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError(str(path), e.strerror or str(e)) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}:{e.lineno}:{e.colno}", e.msg) from None
    return plan_from_dict(doc)


def render_svg(plan: Plan | None, scenario: Scenario, dt: float = 0.1, scale: float = 60.0) -> str:
    ws = scenario.workspace
    pad = 10.0
    w = ws.width * scale + 2 * pad
    h = ws.height * scale + 2 * pad

    def px(x: float, y: float) -> str:
        return f"{pad + (x - ws.xmin) * scale:.2f},{pad + (ws.ymax - y) * scale:.2f}"

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.0f}" height="{h:.0f}" '
        f'viewBox="0 0 {w:.2f} {h:.2f}">',
        f"<title>{escape(scenario.name)}</title>",
        f'<rect class="workspace" x="{pad:.2f}" y="{pad:.2f}" width="{ws.width * scale:.2f}" '
        f'height="{ws.height * scale:.2f}" fill="white" stroke="black" stroke-width="2"/>',
    ]
    for o in scenario.obstacles:
        pts = " ".join(px(x, y) for x, y in o.vertices)
        out.append(f'<polygon class="obstacle" points="{pts}" fill="#555555"/>')
    models = scenario.models()
    for k, m in enumerate(models):
        color = PALETTE[k % len(PALETTE)]
        g = m.goals[0]
        cx, cy = px(*g.center).split(",")
        out.append(f'<circle class="goal" cx="{cx}" cy="{cy}" r="{g.radius * scale:.2f}" '
                   f'fill="{color}" fill-opacity="0.15" stroke="{color}"/>')
        sx, sy = px(m.start[0], m.start[1]).split(",")
        out.append(f'<circle class="start" cx="{sx}" cy="{sy}" r="{0.12 * scale:.2f}" fill="{color}"/>')
    if plan is not None:
        horizon = plan.horizon
        for k, traj in enumerate(plan):
            color = PALETTE[k % len(PALETTE)]
            pts = " ".join(px(x[0], x[1]) for _, x in traj.sample_times(horizon, dt))
            out.append(f'<polyline class="trace" points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def export_svg(plan: Plan | None, scenario: Scenario, path: str | Path, dt: float = 0.1) -> None:
    path = Path(path)
    try:
        path.write_text(render_svg(plan, scenario, dt), encoding="utf-8")
    except OSError as e:
        raise OSError(f"cannot write SVG to {path}: {e.strerror or e}") from e
