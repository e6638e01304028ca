"""Scenario files: YAML documents with system / cost / constraints / run sections.

Example::

    system:
      A: [[0.9, 0.2], [-0.4, 0.8]]
      B: [[0.1], [0.05]]
    cost:
      Q: [[0.5, -0.5], [-0.5, 10.0]]
      R: [[1.0]]
      # P_terminal: defaults to Q
    constraints:          # optional; every bound optional
      x_lower: [-0.45, -0.45]
      x_upper: [0.5, 0.5]
      u_lower: [-0.25]
      u_upper: [0.25]
    run:
      x0: [0.5, -0.1]
      t_f: 50
      l: 2
      mu: 1000.0
      controller: re-mpc
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .errors import RemmpcError, ScenarioError
from .model import BoxConstraints, CostSpec, LtiSystem, Scenario

CONTROLLERS = ("re-mpc", "re-mpc-exact", "c-mpc")


@dataclass(frozen=True)
class ScenarioFile:
    scenario: Scenario
    controller: str = "re-mpc"


def _field(doc, path: str, required: bool = True, default=None):
    node = doc
    for key in path.split("."):
        if not isinstance(node, dict) or key not in node:
            if required:
                raise ScenarioError(f"missing field '{path}'")
            return default
        node = node[key]
    return node


def _matrix(doc, path, required=True):
    raw = _field(doc, path, required)
    if raw is None:
        return None
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"field '{path}' is not a numeric array: {exc}") from exc
    if arr.ndim > 2:
        raise ScenarioError(f"field '{path}' has {arr.ndim} dimensions")
    return np.atleast_2d(arr)


def _vector(doc, path, length, fill):
    raw = _field(doc, path, required=False)
    if raw is None:
        return np.full(length, fill)
    try:
        arr = np.atleast_1d(np.array(raw, dtype=float)).ravel()
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"field '{path}' is not a numeric vector: {exc}") from exc
    if arr.size == 1 and length > 1:
        arr = np.full(length, arr[0])
    if arr.size != length:
        raise ScenarioError(f"field '{path}' has length {arr.size}, expected {length}")
    return arr


def parse_scenario(text: str, source: str = "<string>") -> ScenarioFile:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioError(f"{source}:{where}: invalid YAML ({getattr(exc, 'problem', exc)})") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"{source}: top level must be a mapping")
    try:
        A = _matrix(doc, "system.A")
        B = np.array(_field(doc, "system.B"), dtype=float)
        if B.ndim < 2:
            B = B.reshape(-1, 1)
        system = LtiSystem(A, B)
        n, m = system.n, system.m
        Q = _matrix(doc, "cost.Q")
        R = _matrix(doc, "cost.R")
        P = _matrix(doc, "cost.P_terminal", required=False)
        cost = CostSpec(Q, R, P)
        constraints = None
        if _field(doc, "constraints", required=False) is not None:
            constraints = BoxConstraints(
                _vector(doc, "constraints.x_lower", n, -np.inf),
                _vector(doc, "constraints.x_upper", n, np.inf),
                _vector(doc, "constraints.u_lower", m, -np.inf),
                _vector(doc, "constraints.u_upper", m, np.inf),
            )
        x0 = np.atleast_1d(np.array(_field(doc, "run.x0"), dtype=float)).ravel()
        controller = str(_field(doc, "run.controller", required=False, default="re-mpc"))
        if controller not in CONTROLLERS:
            raise ScenarioError(f"field 'run.controller' must be one of {CONTROLLERS}, got {controller!r}")
        scenario = Scenario(
            system=system,
            cost=cost,
            x0=x0,
            t_f=_field(doc, "run.t_f"),
            l=_field(doc, "run.l"),
            mu=float(_field(doc, "run.mu", required=False, default=1e3)),
            constraints=constraints,
            name=str(doc.get("name", Path(source).stem)),
        )
    except ScenarioError as exc:
        raise ScenarioError(f"{source}: {exc}") from exc
    except (RemmpcError, ValueError, TypeError) as exc:
        raise ScenarioError(f"{source}: {exc}") from exc
    return ScenarioFile(scenario, controller)


def load_scenario(path) -> ScenarioFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    return parse_scenario(text, str(path))


def _plain(arr):
    return np.asarray(arr, dtype=float).tolist()


def dump_scenario(sf: ScenarioFile) -> str:
    sc = sf.scenario
    doc = {
        "name": sc.name,
        "system": {"A": _plain(sc.system.A), "B": _plain(sc.system.B)},
        "cost": {"Q": _plain(sc.cost.Q), "R": _plain(sc.cost.R), "P_terminal": _plain(sc.cost.P_terminal)},
    }
    if sc.constraints is not None:
        c = sc.constraints
        doc["constraints"] = {
            "x_lower": _plain(c.x_lower), "x_upper": _plain(c.x_upper),
            "u_lower": _plain(c.u_lower), "u_upper": _plain(c.u_upper),
        }
    doc["run"] = {"x0": _plain(sc.x0), "t_f": sc.t_f, "l": sc.l, "mu": sc.mu, "controller": sf.controller}
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def example1(constrained: bool = True, controller: str = "re-mpc") -> ScenarioFile:
    """Second-order benchmark plant with box limits, t_f = 50, l = 2, mu = 1e3."""
    system = LtiSystem([[0.9, 0.2], [-0.4, 0.8]], [[0.1], [0.05]])
    Q = [[0.5, -0.5], [-0.5, 10.0]]
    cost = CostSpec(Q, [[1.0]], Q)
    box = BoxConstraints([-0.45, -0.45], [0.5, 0.5], [-0.25], [0.25]) if constrained else None
    name = "example1" if constrained else "example1-unconstrained"
    return ScenarioFile(Scenario(system, cost, [0.5, -0.1], 50, 2, 1e3, box, name), controller)


def bundled_path(name: str = "example1.scenario"):
    return resources.files("remmpc") / "scenarios" / name
