"""Scenario documents: JSON schema, loading and resolution into library objects."""

from __future__ import annotations

import copy
import inspect
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import jsonschema
import numpy as np
import sympy as sp

from ..errors import ConfigurationError
from ..geometry.catalog import CHARTS, MANIFOLDS
from ..geometry.manifold import Chart, ImplicitRep, Submanifold
from ..hamiltonian.catalog import HAMILTONIANS
from ..hamiltonian.field import HamiltonianField
from ..hjsolver.grid import Axis, Grid
from ..hjsolver.scheme import SchemeParams
from . import expressions as ex

EXPERIMENTS = ("restrict_check", "extend_check", "invariance_report", "chart_equivalence", "convergence")

_AXIS_SCHEMA = {
    "type": "object",
    "required": ["min", "max", "n"],
    "additionalProperties": False,
    "properties": {
        "min": {"type": "number"},
        "max": {"type": "number"},
        "n": {"type": "integer", "minimum": 3},
        "boundary": {"enum": ["extrapolate", "periodic", "linear"]},
    },
}
_GRID_SCHEMA = {"type": "array", "minItems": 1, "maxItems": 3, "items": _AXIS_SCHEMA}
_VECTOR = {"type": "array", "items": {"type": "number"}, "minItems": 1}

SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hjrestrict scenario",
    "type": "object",
    "required": ["experiment", "hamiltonian"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "experiment": {"enum": list(EXPERIMENTS)},
        "seed": {"type": "integer", "minimum": 0},
        "definitions": {
            "type": "array",
            "items": {"type": "object", "minProperties": 1, "maxProperties": 1, "additionalProperties": {"type": "string"}},
        },
        "manifold": {
            "oneOf": [
                {"type": "string"},
                {
                    "type": "object",
                    "required": ["implicit", "dim", "theta"],
                    "additionalProperties": False,
                    "properties": {
                        "implicit": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                        "dim": {"type": "integer", "minimum": 0},
                        "theta": {"type": "number", "exclusiveMinimum": 0},
                        "bbox": {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
                        "charts": {"type": "array", "items": {"type": "string"}},
                        "name": {"type": "string"},
                    },
                },
            ]
        },
        "dimension": {"type": "integer", "minimum": 1, "maximum": 3},
        "hamiltonian": {
            "oneOf": [
                {"type": "string"},
                {
                    "type": "object",
                    "required": ["expression"],
                    "additionalProperties": False,
                    "properties": {"expression": {"type": "string"}, "name": {"type": "string"}},
                },
            ]
        },
        "chart": {"type": "string"},
        "initial": {"type": "string"},
        "exact": {"type": "string"},
        "reference": {"enum": ["exact", "hopf_lax"]},
        "T": {"type": "number", "minimum": 0},
        "grids": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"ambient": _GRID_SCHEMA, "chart": _GRID_SCHEMA},
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "cfl": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "alpha": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "dt": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "refinements": {"type": "integer", "minimum": 0, "maximum": 6},
        "extension": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "a": {"oneOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"}, "minItems": 1}]},
                "mode": {"enum": ["closure", "grid"]},
                "samples": {"type": "integer", "minimum": 1},
                "times": {"type": "integer", "minimum": 1},
                "max_distance": {"type": "number", "exclusiveMinimum": 0},
                "step": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "invariance": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "samples": {"type": "integer", "minimum": 1},
                "p_max": {"type": "number", "exclusiveMinimum": 0},
                "criterion": {"enum": ["m", "tm"]},
                "probe": {
                    "type": "object",
                    "required": ["q", "p"],
                    "additionalProperties": False,
                    "properties": {"q": _VECTOR, "p": _VECTOR},
                },
            },
        },
        "tolerances": {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "format": {"enum": ["json", "csv"]},
                "snapshots": {"enum": ["none", "csv", "binary"]},
            },
        },
    },
}

DEFAULT_TOLERANCES = {
    "restrict_check": {
        "invariance": 1e-8,
        "discrepancy": 0.05,
        "discrepancy_refined": 0.03,
        "refinement_ratio": 0.65,
        "exact": 0.05,
    },
    "extend_check": {"residual": 1e-5, "independence": 1e-10, "grid_vs_closure": 1e-2},
    "invariance_report": {"invariance": 1e-8, "tm": 1e-6},
    "chart_equivalence": {"discrepancy_per_dx": 1.0, "refinement_ratio": 0.8, "identity": 0.0, "manifold_slice": 1e-9},
    "convergence": {"order": 0.8},
}

_CALL = re.compile(r"^\s*([A-Za-z_]\w*)\s*(?:\((.*)\))?\s*$")


def parse_call(text: str):
    """'circle(1)' -> ('circle', [1.0]); 'rotation' -> ('rotation', [])."""
    m = _CALL.match(text)
    if not m:
        raise ConfigurationError(f"cannot parse catalog reference {text!r}")
    name, args = m.group(1), m.group(2)
    values = []
    if args and args.strip():
        for a in args.split(","):
            try:
                values.append(float(ex.parse(a.strip(), 1)))
            except (ConfigurationError, TypeError):
                raise ConfigurationError(f"bad argument {a!r} in {text!r}") from None
    return name, values


def _int_if_whole(x):
    return int(x) if float(x).is_integer() else x


def _call_factory(factory, args, kwargs_if_missing: dict):
    sig = inspect.signature(factory)
    params = list(sig.parameters)
    if any(sig.parameters[p].kind == inspect.Parameter.VAR_POSITIONAL for p in params):
        return factory(*args)
    extra = {k: v for k, v in kwargs_if_missing.items() if k in params and params.index(k) >= len(args)}
    ints = {"d", "m"}
    args = [_int_if_whole(a) if i < len(params) and params[i] in ints else a for i, a in enumerate(args)]
    try:
        return factory(*args, **extra)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{factory.__name__}{tuple(args)}: {exc}") from None


def resolve_manifold(spec, definitions=()) -> Submanifold:
    if isinstance(spec, str):
        name, args = parse_call(spec)
        if name not in MANIFOLDS:
            raise ConfigurationError(f"unknown manifold {name!r}; known: {sorted(MANIFOLDS)}")
        if name == "flat":
            args = [_int_if_whole(a) for a in args[:2]] + args[2:]
        if name == "sphere" and len(args) > 1:
            args = [args[0], _int_if_whole(args[1])] + args[2:]
        return _call_factory(MANIFOLDS[name], args, {})
    exprs = spec["implicit"]
    if not spec.get("bbox"):
        raise ConfigurationError("implicit manifolds need a bbox to seed closest-point solves")
    d = len(spec["bbox"])
    q, _, _ = ex.symbols(d)
    F = [ex._scalar(ex.parse(e, d, definitions), "constraint") for e in exprs]
    for f in F:
        ex.free_symbols_ok(f, {s.name for s in q}, "constraint")
    fns = [ex.compile_scalar(f, d) for f in F]
    jac = [[ex.compile_scalar(sp.diff(f, s), d) for s in q] for f in F]
    hes = [[[ex.compile_scalar(sp.diff(f, a, b), d) for b in q] for a in q] for f in F]

    def constraint(x):
        return np.stack([f(x) for f in fns], axis=-1)

    def jacobian(x):
        return np.stack([np.stack([g(x) for g in row], axis=-1) for row in jac], axis=-2)

    def hessian(x):
        return np.stack([np.stack([np.stack([g(x) for g in row], axis=-1) for row in blk], axis=-2) for blk in hes], axis=-3)

    charts = tuple(resolve_chart(c, d) for c in spec.get("charts", []))
    try:
        return Submanifold(
            dim=spec["dim"],
            ambient_dim=d,
            rep=ImplicitRep(constraint, jacobian, hessian),
            theta=float(spec["theta"]),
            name=spec.get("name", "implicit"),
            bbox=np.asarray(spec["bbox"], dtype=float),
            charts=charts,
        )
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None


def resolve_chart(spec: str, d: Optional[int] = None) -> Chart:
    name, args = parse_call(spec)
    if name not in CHARTS:
        raise ConfigurationError(f"unknown chart {name!r}; known: {sorted(CHARTS)}")
    chart = _call_factory(CHARTS[name], args, {} if d is None else {"d": d})
    if d is not None and chart.dim != d:
        raise ConfigurationError(f"chart {spec!r} has dimension {chart.dim}, expected {d}")
    return chart


def resolve_hamiltonian(spec, d: int, M: Optional[Submanifold] = None, definitions=()) -> HamiltonianField:
    if isinstance(spec, str):
        name, args = parse_call(spec)
        if name not in HAMILTONIANS:
            raise ConfigurationError(f"unknown Hamiltonian {name!r}; known: {sorted(HAMILTONIANS)}")
        if name == "tangent_kinetic":
            if M is None:
                raise ConfigurationError("tangent_kinetic needs a manifold")
            return HAMILTONIANS[name](M)
        H = _call_factory(HAMILTONIANS[name], args, {"d": d})
        if H.dim != d:
            raise ConfigurationError(f"Hamiltonian {spec!r} has dimension {H.dim}, expected {d}")
        return H
    expr = ex._scalar(ex.parse(spec["expression"], d, definitions), "Hamiltonian")
    q, p, _ = ex.symbols(d)
    ex.free_symbols_ok(expr, {s.name for s in (*q, *p)}, "Hamiltonian")
    f = ex.compile_scalar(expr, d)
    gq = ex.compile_gradient(expr, q, d)
    gp = ex.compile_gradient(expr, p, d)
    return HamiltonianField(
        func=lambda Q, P: f(Q, P),
        dim=d,
        name=spec.get("name", spec["expression"]),
        dq=lambda Q, P: gq(Q, P),
        dp=lambda Q, P: gp(Q, P),
    )


def resolve_function(text: str, d: int, definitions=(), time_dependent: bool = False) -> Callable:
    """Expression in q (and t) -> f(points) or f(t, points)."""
    expr = ex._scalar(ex.parse(text, d, definitions), "function")
    q, _, t = ex.symbols(d)
    allowed = {s.name for s in q} | ({t.name} if time_dependent else set())
    ex.free_symbols_ok(expr, allowed, "function")
    f = ex.compile_scalar(expr, d)
    if time_dependent:
        return lambda tt, x: f(x, None, float(tt))
    return lambda x: f(x)


def resolve_grid(axes: list, refine: int = 1) -> Grid:
    try:
        g = Grid(tuple(Axis(float(a["min"]), float(a["max"]), int(a["n"]), a.get("boundary", "extrapolate")) for a in axes))
    except ValueError as exc:
        raise ConfigurationError(f"bad grid: {exc}") from None
    return g.refined(refine) if refine > 1 else g


@dataclass
class Scenario:
    """A validated scenario document plus run-time overrides."""

    doc: dict
    source: Optional[str] = None
    refine: int = 1
    seed_override: Optional[int] = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def experiment(self) -> str:
        return self.doc["experiment"]

    @property
    def name(self) -> str:
        return self.doc.get("name", self.experiment)

    @property
    def seed(self) -> int:
        return self.seed_override if self.seed_override is not None else int(self.doc.get("seed", 0))

    @property
    def definitions(self):
        return self.doc.get("definitions", [])

    @property
    def T(self) -> float:
        return float(self.doc.get("T", 0.5))

    def tolerance(self, key: str) -> float:
        tol = self.doc.get("tolerances", {})
        if key in tol:
            return float(tol[key])
        return float(DEFAULT_TOLERANCES[self.experiment][key])

    @property
    def manifold(self) -> Optional[Submanifold]:
        if "manifold" not in self._cache:
            spec = self.doc.get("manifold")
            self._cache["manifold"] = None if spec is None else resolve_manifold(spec, self.definitions)
        return self._cache["manifold"]

    def require_manifold(self) -> Submanifold:
        if self.manifold is None:
            raise ConfigurationError(f"{self.experiment} needs a manifold")
        return self.manifold

    @property
    def dimension(self) -> int:
        if self.manifold is not None:
            return self.manifold.ambient_dim
        if "dimension" in self.doc:
            return int(self.doc["dimension"])
        grids = self.doc.get("grids", {})
        if "ambient" in grids:
            return len(grids["ambient"])
        raise ConfigurationError("cannot infer the ambient dimension; add 'dimension'")

    @property
    def hamiltonian(self) -> HamiltonianField:
        if "hamiltonian" not in self._cache:
            self._cache["hamiltonian"] = resolve_hamiltonian(self.doc["hamiltonian"], self.dimension, self.manifold, self.definitions)
        return self._cache["hamiltonian"]

    @property
    def chart(self) -> Chart:
        if "chart" not in self.doc:
            raise ConfigurationError(f"{self.experiment} needs a chart")
        return resolve_chart(self.doc["chart"], self.dimension)

    def initial(self) -> Callable:
        if "initial" not in self.doc:
            raise ConfigurationError(f"{self.experiment} needs an initial datum")
        return resolve_function(self.doc["initial"], self.dimension, self.definitions)

    def exact(self) -> Optional[Callable]:
        if "exact" not in self.doc:
            return None
        return resolve_function(self.doc["exact"], self.dimension, self.definitions, time_dependent=True)

    def grid(self, which: str, extra_refine: int = 1) -> Grid:
        grids = self.doc.get("grids", {})
        if which not in grids:
            raise ConfigurationError(f"{self.experiment} needs grids.{which}")
        return resolve_grid(grids[which], self.refine * extra_refine)

    def scheme(self) -> SchemeParams:
        s = self.doc.get("solver", {})
        try:
            return SchemeParams(alpha=tuple(s["alpha"]) if "alpha" in s else None, cfl=float(s.get("cfl", 0.4)), dt=s.get("dt"))
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None

    def section(self, key: str) -> dict:
        return self.doc.get(key, {})

    def resolve_all(self) -> None:
        """Resolve every referenced object, surfacing configuration errors early."""
        _ = self.manifold, self.hamiltonian
        if "chart" in self.doc:
            self.chart
        if "initial" in self.doc:
            self.initial()
        self.exact()
        for which in self.doc.get("grids", {}):
            self.grid(which)
        self.scheme()
        for key in self.doc.get("tolerances", {}):
            if key not in DEFAULT_TOLERANCES[self.experiment]:
                raise ConfigurationError(f"unknown tolerance {key!r} for {self.experiment}")


def validate_document(doc: Any) -> None:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"scenario invalid at {where}: {exc.message}") from None


def load_scenario(source, refine: int = 1, seed: Optional[int] = None) -> Scenario:
    """Load from a path or a dict, validate against :data:`SCHEMA` and resolve names."""
    if isinstance(source, dict):
        doc, origin = copy.deepcopy(source), None
    else:
        path = Path(source)
        try:
            doc = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigurationError(f"scenario file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
        origin = str(path)
    validate_document(doc)
    if refine < 1:
        raise ConfigurationError("refine must be >= 1")
    sc = Scenario(doc, origin, refine, seed)
    sc.resolve_all()
    return sc
