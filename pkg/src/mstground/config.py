"""Simulation configuration: JSON loading, validation, overrides and presets.

A configuration is a JSON object::

    {
      "medium": {"sound_speed": 344.0, "density": 1.2},
      "source": [0.0, 0.0],
      "receiver": [10.0, 0.0],
      "array": {"rows": 5, "columns": 3, "lattice_constant": 0.3,
                "standoff_hx": 1.5, "height_hy": 0.15, "radius": 0.1},
      "scatterer": {"type": "rigid"},
      "ground": {"type": "rigid"},
      "frequencies": {"f_min": 100.0, "f_max": 1200.0, "count": 512,
                      "spacing": "linear"},
      "order": 7,
      "refine_depth": 3
    }

``array`` may be replaced by ``"scatterers": [[x, y, radius], ...]``.  Shell
scatterers use ``{"type": "shell", "density", "young", "poisson",
"shear_speed", "half_thickness", "k3_density"}`` with the outer radius taken
from the array.  Impedance grounds carry a ``"model"``: ``one_parameter``
(``sigma_e``), ``two_parameter`` (``sigma_e``, ``alpha_e``), ``constant``
(``beta: [re, im]``) or ``tabulated`` (``frequency``, ``beta_re``,
``beta_im`` arrays, or ``path`` to a three-column text file).
"""

import copy
from dataclasses import dataclass
import json
import math

import numpy as np

from .errors import ConfigurationError
from .geometry import ArrayConfig, Point2, Scatterer, Scene, lattice_scatterers
from .ground import (
    ConstantAdmittance,
    FreeField,
    ImpedanceGround,
    OneParameter,
    RigidGround,
    Tabulated,
    TwoParameter,
)
from .scatterers import ElasticShell, Medium
from .solver import DEFAULT_ORDER


class ConfigParseError(ConfigurationError):
    """Malformed configuration text; ``line`` and ``column`` locate the fault."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f"line {line} column {column}" if line is not None else "input"
        super().__init__([(where, message)])


@dataclass(frozen=True)
class FrequencyGrid:
    f_min: float
    f_max: float
    count: int = 512
    spacing: str = "linear"

    def problems(self, prefix="frequencies"):
        out = []
        if not (isinstance(self.f_min, (int, float)) and self.f_min > 0):
            out.append((f"{prefix}.f_min", "must be positive"))
        if not (isinstance(self.f_max, (int, float)) and self.f_max > self.f_min):
            out.append((f"{prefix}.f_max", "must exceed f_min"))
        if not (isinstance(self.count, int) and self.count >= 2):
            out.append((f"{prefix}.count", "must be an integer >= 2"))
        if self.spacing not in ("linear", "log"):
            out.append((f"{prefix}.spacing", "must be 'linear' or 'log'"))
        return out

    def frequencies(self):
        if self.spacing == "log":
            return np.geomspace(self.f_min, self.f_max, self.count)
        return np.linspace(self.f_min, self.f_max, self.count)


@dataclass(frozen=True)
class SimulationConfig:
    medium: Medium
    scene: Scene
    scatterer: object  # None for rigid cylinders, else an ElasticShell
    ground: object
    grid: FrequencyGrid
    order: int = DEFAULT_ORDER
    refine_depth: int = 3
    array: ArrayConfig = None
    ground_data: dict = None  # serialisable ground description

    @property
    def models(self):
        return self.scatterer


# ---------------------------------------------------------------------------
# parsing


def _number(data, key, path, problems, default=None, positive=False, integer=False):
    if key not in data:
        if default is None:
            problems.append((f"{path}.{key}" if path else key, "is required"))
        return default
    val = data[key]
    ok = isinstance(val, int) if integer else isinstance(val, (int, float))
    if isinstance(val, bool) or not ok or not math.isfinite(val):
        kind = "an integer" if integer else "a finite number"
        problems.append((f"{path}.{key}" if path else key, f"must be {kind}"))
        return default
    if positive and not val > 0:
        problems.append((f"{path}.{key}" if path else key, f"must be positive, got {val!r}"))
    return val


def _point(data, key, problems):
    val = data.get(key)
    if (
        not isinstance(val, (list, tuple))
        or len(val) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val)
        or not all(math.isfinite(v) for v in val)
    ):
        problems.append((key, "must be a pair [x, y] of finite numbers"))
        return None
    return Point2(float(val[0]), float(val[1]))


def _admittance_model(data, path, problems):
    if not isinstance(data, dict):
        problems.append((path, "must be an object"))
        return None
    kind = data.get("type")
    try:
        if kind == "one_parameter":
            s = _number(data, "sigma_e", path, problems, positive=True)
            return OneParameter(float(s)) if s and s > 0 else None
        if kind == "two_parameter":
            s = _number(data, "sigma_e", path, problems, positive=True)
            a = _number(data, "alpha_e", path, problems)
            if a is not None and a < 0:
                problems.append((f"{path}.alpha_e", "must be non-negative"))
                return None
            return TwoParameter(float(s), float(a)) if s and s > 0 and a is not None else None
        if kind == "constant":
            b = data.get("beta")
            if not (isinstance(b, (list, tuple)) and len(b) == 2):
                problems.append((f"{path}.beta", "must be [re, im]"))
                return None
            return ConstantAdmittance(complex(float(b[0]), float(b[1])))
        if kind == "tabulated":
            if "path" in data:
                return Tabulated.from_file(data["path"])
            return Tabulated(
                tuple(float(v) for v in data.get("frequency", ())),
                tuple(float(v) for v in data.get("beta_re", ())),
                tuple(float(v) for v in data.get("beta_im", ())),
            )
    except ConfigurationError as exc:
        problems.extend((f"{path}.{p}" if p else path, m) for p, m in exc.problems)
        return None
    except (OSError, TypeError, ValueError) as exc:
        problems.append((path, str(exc)))
        return None
    problems.append((f"{path}.type", f"unknown admittance model {kind!r}"))
    return None


def _ground(data, problems):
    if not isinstance(data, dict):
        problems.append(("ground", "must be an object"))
        return None, None
    kind = data.get("type")
    if kind == "free":
        return FreeField(), {"type": "free"}
    if kind == "rigid":
        return RigidGround(), {"type": "rigid"}
    if kind == "impedance":
        model = _admittance_model(data.get("model"), "ground.model", problems)
        if model is None:
            return None, None
        return ImpedanceGround(model), {"type": "impedance", "model": _model_dict(model)}
    problems.append(("ground.type", f"must be 'free', 'rigid' or 'impedance', got {kind!r}"))
    return None, None


def _model_dict(model):
    if isinstance(model, OneParameter):
        return {"type": "one_parameter", "sigma_e": model.sigma_e}
    if isinstance(model, TwoParameter):
        return {"type": "two_parameter", "sigma_e": model.sigma_e, "alpha_e": model.alpha_e}
    if isinstance(model, ConstantAdmittance):
        b = complex(model.beta)
        return {"type": "constant", "beta": [b.real, b.imag]}
    return {
        "type": "tabulated",
        "frequency": list(model.frequency),
        "beta_re": list(model.beta_re),
        "beta_im": list(model.beta_im),
    }


_ARRAY_KEYS = ("rows", "columns", "lattice_constant", "standoff_hx", "height_hy", "radius")
_SHELL_KEYS = ("density", "young", "poisson", "shear_speed", "half_thickness")


def from_dict(data):
    """Build and validate a :class:`SimulationConfig`.

    Every violated invariant is collected; a :class:`ConfigurationError`
    listing all of them is raised if any exist.
    """
    if not isinstance(data, dict):
        raise ConfigurationError([("", "configuration must be a JSON object")])
    problems = []
    known = {
        "medium", "source", "receiver", "array", "scatterers", "scatterer",
        "ground", "frequencies", "order", "refine_depth",
    }
    for key in data:
        if key not in known:
            problems.append((key, "unknown key"))

    med = data.get("medium", {})
    c = _number(med, "sound_speed", "medium", problems, default=344.0, positive=True)
    rho = _number(med, "density", "medium", problems, default=1.2, positive=True)
    medium = Medium(float(c), float(rho)) if c > 0 and rho > 0 else None

    source = _point(data, "source", problems)
    receiver = _point(data, "receiver", problems)
    ground, ground_data = _ground(data.get("ground", {"type": "rigid"}), problems)
    grounded = not isinstance(ground, FreeField)
    tag = ground_data["type"] if ground_data else "rigid"

    array = None
    scatterers = ()
    if "array" in data and "scatterers" in data:
        problems.append(("array", "give either 'array' or 'scatterers', not both"))
    elif "array" in data:
        arr = data["array"]
        vals = {}
        for key in _ARRAY_KEYS:
            integer = key in ("rows", "columns")
            vals[key] = _number(arr, key, "array", problems, integer=integer)
        if all(v is not None for v in vals.values()):
            array = ArrayConfig(
                columns=vals["columns"],
                rows=vals["rows"],
                lattice_constant=float(vals["lattice_constant"]),
                standoff_hx=float(vals["standoff_hx"]),
                height_hy=float(vals["height_hy"]),
                radius=float(vals["radius"]),
            )
            arr_problems = array.problems(grounded)
            problems.extend((f"array.{p}", m) for p, m in arr_problems)
            if arr_problems:
                array = None
            else:
                scatterers = lattice_scatterers(array, grounded)
    elif "scatterers" in data:
        rows = data["scatterers"]
        good = []
        for i, row in enumerate(rows if isinstance(rows, list) else []):
            if (
                isinstance(row, (list, tuple))
                and len(row) == 3
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in row)
            ):
                if not row[2] > 0:
                    problems.append((f"scatterers[{i}].radius", "must be positive"))
                else:
                    good.append(Scatterer(Point2(float(row[0]), float(row[1])), float(row[2])))
            else:
                problems.append((f"scatterers[{i}]", "must be [x, y, radius]"))
        if not isinstance(rows, list):
            problems.append(("scatterers", "must be a list"))
        scatterers = tuple(good)

    shell = None
    sdata = data.get("scatterer", {"type": "rigid"})
    stype = sdata.get("type") if isinstance(sdata, dict) else None
    if stype == "shell":
        vals = {key: _number(sdata, key, "scatterer", problems) for key in _SHELL_KEYS}
        radii = {s.radius for s in scatterers}
        if len(radii) > 1:
            problems.append(("scatterer", "shell arrays need a single cylinder radius"))
        elif radii and all(v is not None for v in vals.values()):
            try:
                shell = ElasticShell(
                    outer_radius=radii.pop(),
                    k3_density=sdata.get("k3_density", "air"),
                    **{k: float(v) for k, v in vals.items()},
                )
            except ConfigurationError as exc:
                problems.extend((f"scatterer.{p}", m) for p, m in exc.problems)
    elif stype != "rigid":
        problems.append(("scatterer.type", f"must be 'rigid' or 'shell', got {stype!r}"))

    fr = data.get("frequencies")
    grid = None
    if not isinstance(fr, dict):
        problems.append(("frequencies", "is required"))
    else:
        f_min = _number(fr, "f_min", "frequencies", problems)
        f_max = _number(fr, "f_max", "frequencies", problems)
        count = _number(fr, "count", "frequencies", problems, default=512, integer=True)
        if f_min is not None and f_max is not None:
            grid = FrequencyGrid(float(f_min), float(f_max), count, fr.get("spacing", "linear"))
            gp = grid.problems()
            problems.extend(gp)
            if gp:
                grid = None

    order = _number(data, "order", "", problems, default=DEFAULT_ORDER, integer=True)
    if isinstance(order, int) and order < 0:
        problems.append(("order", "must be >= 0"))
    depth = _number(data, "refine_depth", "", problems, default=3, integer=True)
    if isinstance(depth, int) and depth < 0:
        problems.append(("refine_depth", "must be >= 0"))

    scene = None
    if source is not None and receiver is not None:
        candidate = object.__new__(Scene)
        for name, val in (("source", source), ("receiver", receiver), ("scatterers", scatterers), ("ground", tag)):
            object.__setattr__(candidate, name, val)
        scene_problems = candidate.problems()
        problems.extend(scene_problems)
        if not scene_problems:
            scene = Scene(source, receiver, scatterers, tag)

    if problems:
        raise ConfigurationError(problems)
    return SimulationConfig(
        medium=medium,
        scene=scene,
        scatterer=shell,
        ground=ground,
        grid=grid,
        order=order,
        refine_depth=depth,
        array=array,
        ground_data=ground_data,
    )


def to_dict(cfg):
    """Serialisable form of ``cfg``; ``from_dict(to_dict(cfg)) == cfg``."""
    out = {
        "medium": {"sound_speed": cfg.medium.sound_speed, "density": cfg.medium.density},
        "source": [cfg.scene.source.x, cfg.scene.source.y],
        "receiver": [cfg.scene.receiver.x, cfg.scene.receiver.y],
    }
    if cfg.array is not None:
        a = cfg.array
        out["array"] = {
            "rows": a.rows,
            "columns": a.columns,
            "lattice_constant": a.lattice_constant,
            "standoff_hx": a.standoff_hx,
            "height_hy": a.height_hy,
            "radius": a.radius,
        }
    else:
        out["scatterers"] = [[s.center.x, s.center.y, s.radius] for s in cfg.scene.scatterers]
    if cfg.scatterer is None:
        out["scatterer"] = {"type": "rigid"}
    else:
        sh = cfg.scatterer
        out["scatterer"] = {"type": "shell", **{k: getattr(sh, k) for k in _SHELL_KEYS}}
        out["scatterer"]["k3_density"] = sh.k3_density
    out["ground"] = copy.deepcopy(cfg.ground_data)
    g = cfg.grid
    out["frequencies"] = {"f_min": g.f_min, "f_max": g.f_max, "count": g.count, "spacing": g.spacing}
    out["order"] = cfg.order
    out["refine_depth"] = cfg.refine_depth
    return out


def dumps(cfg):
    return json.dumps(to_dict(cfg), indent=2)


def parse_text(text):
    """Parse JSON text into a plain dict, reporting line/column on failure."""
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(exc.msg, exc.lineno, exc.colno) from None


def loads(text):
    return from_dict(parse_text(text))


def load_config(source):
    """Load a configuration from a path or from inline JSON text."""
    text = str(source)
    if text.lstrip().startswith("{"):
        return loads(text)
    with open(source) as fh:
        return loads(fh.read())


def apply_overrides(data, overrides):
    """Apply ``key.path=value`` overrides to a config dict (returns a copy).

    Values are parsed as JSON when possible and kept as strings otherwise.
    """
    data = copy.deepcopy(data)
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError([(item, "override must look like key.path=value")])
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        parts = key.strip().split(".")
        node = data
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                node[part] = {}
            node = node[part]
        node[parts[-1]] = value
    return data


# ---------------------------------------------------------------------------
# presets (geometries from the figure captions; "R x C" = R rows up, C columns)

LATEX = {
    "type": "shell",
    "density": 1650.0,
    "young": 1.75e6,
    "poisson": 0.4998,
    "shear_speed": 23.0,
    # k3 with the shell density; the air-density reading puts the breathing
    # resonance of these shells above 2 kHz instead of below the Bragg gap
    "k3_density": "shell",
}

_LARGE = {"rows": 5, "columns": 3, "lattice_constant": 0.3, "standoff_hx": 1.5, "height_hy": 0.15, "radius": 0.1}
_SMALL = {"rows": 7, "columns": 3, "lattice_constant": 0.069, "standoff_hx": 0.755, "height_hy": 0.0345, "radius": 0.0275}
_FOAM = {"type": "impedance", "model": {"type": "two_parameter", "sigma_e": 4000.0, "alpha_e": 105.0}}


def _preset(array, source, receiver, ground, f_max, scatterer=None, f_min=100.0):
    return {
        "medium": {"sound_speed": 344.0, "density": 1.2},
        "source": list(source),
        "receiver": list(receiver),
        "array": dict(array),
        "scatterer": scatterer or {"type": "rigid"},
        "ground": ground,
        "frequencies": {"f_min": f_min, "f_max": f_max, "count": 512, "spacing": "linear"},
        "order": DEFAULT_ORDER,
        "refine_depth": 3,
    }


def _presets():
    rigid = {"type": "rigid"}
    out = {
        "fig2": _preset(_LARGE, (0, 0), (10, 0), rigid, 1200.0),
        "fig2-free": _preset(_LARGE, (0, 0), (10, 0), {"type": "free"}, 1200.0),
        "fig3": _preset(_SMALL, (0, 0.235), (1.203, 0), rigid, 3500.0),
        "fig3-free": _preset(_SMALL, (0, 0.235), (1.203, 0), {"type": "free"}, 3500.0),
        "fig3-raised": _preset(_SMALL, (0, 0.235), (1.203, 0.235), rigid, 3500.0),
        "fig4": _preset(_LARGE, (0, 0), (10, 0), rigid, 1200.0, dict(LATEX, half_thickness=0.0005), f_min=50.0),
        "fig4-thick": _preset(_LARGE, (0, 0), (10, 0), rigid, 1200.0, dict(LATEX, half_thickness=0.001), f_min=50.0),
        "fig5a": _preset(_LARGE, (0, 0), (10, 0.45), rigid, 1200.0),
    }
    for sigma in (20, 168, 250):
        ground = {"type": "impedance", "model": {"type": "one_parameter", "sigma_e": sigma * 1000.0}}
        out[f"fig5b-{sigma}"] = _preset(_LARGE, (0, 0), (10, 0.45), ground, 1200.0)
    for tag, height in (("a", 0.117), ("b", 0.235), ("c", 0.352)):
        out[f"fig6{tag}"] = _preset(_SMALL, (0, 0.235), (1.203, height), rigid, 4000.0)
        out[f"fig7{tag}"] = _preset(
            _SMALL, (0, 0.235), (1.203, height), rigid, 4000.0, dict(LATEX, half_thickness=0.000125)
        )
        out[f"fig9{tag}"] = _preset(_SMALL, (0, 0.235), (1.203, height), _FOAM, 5000.0)
    return out


PRESETS = _presets()


def preset_dict(name):
    if name not in PRESETS:
        raise ConfigurationError([("preset", f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")])
    return copy.deepcopy(PRESETS[name])


def preset(name, overrides=()):
    return from_dict(apply_overrides(preset_dict(name), overrides))
