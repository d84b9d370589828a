"""Job configuration: the INI grammar behind the command line.

A job file is plain ``key = value`` INI text. Sections:

``[model]``
    ``id`` (required, a model name such as ``KickedKitaev``), ``boundary``
    (``pbc`` | ``obc``, default ``pbc``), ``cells`` (omit for the
    momentum-space family), ``cells_x`` / ``cells_y`` for 2D lattices, and
    the model parameters by name (``J = 4*pi``). Unknown keys are errors.

``[compute:TASK]``
    One section per task, ``TASK`` in ``spectrum``, ``invariants``,
    ``dynamics``, ``localization``, ``phase_diagram``. Keys set the task's
    options (see ``_TASK_OPTIONS``); every task also runs with defaults
    when its section is absent and the command line names it.

``[sweep]`` and ``[sweep2]``
    ``param`` names a model parameter; the real/imaginary component of a
    complex parameter is addressed as ``name_r`` / ``name_i``. Values come
    either from an explicit ``values = v1, v2, ...`` list or from
    ``start`` / ``stop`` / ``count`` (an inclusive linear grid).
    ``[sweep2]`` adds an optional second (inner) axis.

``[output]``
    ``dir`` (default ``out``), ``format`` (``csv`` | ``json``, default
    ``csv``) and ``precision`` (significant digits, default 12).

``[job]``
    ``seed`` (reserved; every current computation is deterministic).

Numeric values may use ``pi``, the ``j`` imaginary suffix, parentheses
and the ``+ - * /`` operators: ``mu = 0.3*pi + 0.8j``. Quasiperiodic
ratios stay exact rationals and are written as ``alpha = 377/610``.

Syntax problems raise :class:`~nhfloq.errors.ParseError` with line and
column; a well-formed file that violates the schema raises
:class:`~nhfloq.errors.SchemaError` naming the offending key, with a
close-match hint for likely misspellings.
"""
from __future__ import annotations

import ast
import configparser
import difflib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams, ParseError, SchemaError
from .models import ModelDescriptor, ModelId, parameter_schema
from .protocols import Boundary, Frame

__all__ = [
    "SweepAxis",
    "TaskSpec",
    "JobConfig",
    "parse_config",
    "default_options",
    "TASK_NAMES",
]

TASK_NAMES = ("spectrum", "invariants", "dynamics", "localization", "phase_diagram")

_MODEL_RESERVED = ("id", "boundary", "cells", "cells_x", "cells_y")
_SWEEP_KEYS = ("param", "values", "start", "stop", "count")


# ---------------------------------------------------------------------------
# value parsing
# ---------------------------------------------------------------------------


def _unknown_key(key: str, valid, where: str):
    hint = difflib.get_close_matches(key, sorted(valid), n=1)
    msg = f"{where}: unknown key '{key}'"
    if hint:
        msg += f"; did you mean '{hint[0]}'?"
    raise SchemaError(msg, key=key)


def _eval_number(text: str, key: str):
    """A number from config text; pi, j and + - * / ( ) are allowed."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError:
        raise SchemaError(f"key '{key}': {text!r} is not a number", key=key) from None

    def ev(node):
        if isinstance(node, ast.Constant) and isinstance(
            node.value, (int, float, complex)
        ) and not isinstance(node.value, bool):
            return node.value
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            val = ev(node.operand)
            return -val if isinstance(node.op, ast.USub) else val
        if isinstance(node, ast.BinOp) and isinstance(
            node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div)
        ):
            left, right = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if right == 0:
                raise SchemaError(f"key '{key}': division by zero", key=key)
            return left / right
        raise SchemaError(
            f"key '{key}': {text!r} uses more than numbers, pi and + - * /",
            key=key,
        )

    return ev(tree.body)


def _real(text: str, key: str) -> float:
    v = _eval_number(text, key)
    if isinstance(v, complex):
        if v.imag != 0:
            raise SchemaError(f"key '{key}' must be real, got {text!r}", key=key)
        v = v.real
    return float(v)


def _int(text: str, key: str) -> int:
    v = _real(text, key)
    if v != int(v):
        raise SchemaError(f"key '{key}' must be an integer, got {text!r}", key=key)
    return int(v)


def _int_pos(text: str, key: str) -> int:
    v = _int(text, key)
    if v < 1:
        raise SchemaError(f"key '{key}' must be positive, got {v}", key=key)
    return v


def _float_pos(text: str, key: str) -> float:
    v = _real(text, key)
    if v <= 0:
        raise SchemaError(f"key '{key}' must be positive, got {v}", key=key)
    return v


def _cnum(text: str, key: str) -> complex:
    return complex(_eval_number(text, key))


_BOOL_WORDS = {
    "true": True, "yes": True, "on": True, "1": True,
    "false": False, "no": False, "off": False, "0": False,
}


def _bool(text: str, key: str) -> bool:
    word = text.strip().lower()
    if word not in _BOOL_WORDS:
        raise SchemaError(f"key '{key}' must be true or false, got {text!r}", key=key)
    return _BOOL_WORDS[word]


def _split_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _choice(*allowed: str):
    def parse(text: str, key: str) -> str:
        word = text.strip().lower()
        if word not in allowed:
            raise SchemaError(
                f"key '{key}' must be one of {', '.join(allowed)}; got {text!r}",
                key=key,
            )
        return word

    return parse


def _frame(text: str, key: str) -> Frame:
    word = text.strip().lower()
    try:
        return Frame(word)
    except ValueError:
        raise SchemaError(
            f"key '{key}' must be one of "
            f"{', '.join(f.value for f in Frame)}; got {text!r}",
            key=key,
        ) from None


_INCLUDE_TOKENS = (
    "auto",
    "frame_windings",
    "gaps",
    "mode_counts",
    "open_bulk",
    "spectral",
    "non_bloch",
)


def _include(text: str, key: str) -> tuple[str, ...]:
    tokens = tuple(t.lower() for t in _split_list(text))
    if not tokens:
        raise SchemaError(f"key '{key}' must name at least one invariant", key=key)
    for t in tokens:
        if t not in _INCLUDE_TOKENS:
            _unknown_key(t, _INCLUDE_TOKENS, f"key '{key}'")
    return tokens


def _targets(text: str, key: str) -> tuple[float, ...]:
    vals = tuple(_real(v, key) for v in _split_list(text))
    if not vals:
        raise SchemaError(f"key '{key}' must list at least one target", key=key)
    return vals


# Per-task option grammar: name -> (parser, default). Keys mirror the
# operation parameters of the module the task drives.
_TASK_OPTIONS: dict[str, dict[str, tuple]] = {
    "spectrum": {
        "grid": (_int_pos, 256),          # momentum samples, 1D families
        "grid2": (_int_pos, 32),          # samples per axis, 2D families
        "frame": (_frame, Frame.ORIGINAL),
        "effective": (_bool, False),      # harmonic quasicrystal: static chain
    },
    "invariants": {
        "include": (_include, ("auto",)),
        "grid": (_int_pos, 512),
        "targets": (_targets, (0.0, math.pi)),
        "e_tol": (_float_pos, 0.05),
        "loc_threshold": (_float_pos, 0.6),
        "edge_fraction": (_float_pos, 0.25),
        "base_energy": (_cnum, None),     # spectral winding reference point
        "winding_grid": (_int_pos, 128),  # flux-loop samples
    },
    "dynamics": {
        "probe": (_choice("mcd", "dwn", "wavepacket"), "mcd"),
        "periods": (_int_pos, 1000),
        "grid": (_int_pos, 512),
        "init_site": (_int, None),
        "c_plus": (_cnum, 1.0 / math.sqrt(2.0)),
        "c_minus": (_cnum, 1.0 / math.sqrt(2.0)),
    },
    "localization": {
        "effective": (_bool, False),
        "winding": (_bool, False),
        "winding_grid": (_int_pos, 128),
        "a": (_float_pos, 3.0),
        "b": (_float_pos, 0.02),
    },
    "phase_diagram": {
        "quantity": (_choice("auto", "phase", "windings"), "auto"),
        "grid": (_int_pos, 512),
        "effective": (_bool, False),
    },
}


def default_options(task: str) -> dict:
    """The option dict a task runs with when its config section is absent."""
    if task not in _TASK_OPTIONS:
        _unknown_key(task, TASK_NAMES, "compute")
    return {name: default for name, (_, default) in _TASK_OPTIONS[task].items()}


# ---------------------------------------------------------------------------
# job structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepAxis:
    """One sweep axis: a parameter path and the values it takes."""

    path: str                 # as written, e.g. "mu_i"
    base: str                 # the model parameter it addresses
    component: str | None     # None, "re" or "im"
    values: tuple[float, ...]


@dataclass
class TaskSpec:
    """One compute task with its resolved options."""

    task: str
    options: dict = field(default_factory=dict)


@dataclass
class JobConfig:
    """A validated job: model, tasks, sweep axes and output settings."""

    model_id: ModelId
    params: dict
    boundary: Boundary
    cells: int | None
    cells_x: int | None
    cells_y: int | None
    compute: list[TaskSpec]
    sweep: list[SweepAxis]
    output_dir: str
    output_format: str
    precision: int
    seed: int
    text: str = ""

    def points(self) -> list[dict]:
        """Sweep points in output order ({} when there is no sweep).

        With two axes the first is the outer loop, the second the inner.
        """
        if not self.sweep:
            return [{}]
        if len(self.sweep) == 1:
            ax = self.sweep[0]
            return [{ax.path: v} for v in ax.values]
        a1, a2 = self.sweep
        return [{a1.path: v1, a2.path: v2} for v1 in a1.values for v2 in a2.values]

    def descriptor_at(self, point: dict) -> ModelDescriptor:
        """The model descriptor with this point's values substituted."""
        params = dict(self.params)
        for ax in self.sweep:
            if ax.path not in point:
                continue
            v = float(point[ax.path])
            if ax.component is None:
                params[ax.base] = v
            else:
                old = complex(params.get(ax.base, 0.0))
                if ax.component == "re":
                    params[ax.base] = complex(v, old.imag)
                else:
                    params[ax.base] = complex(old.real, v)
        return ModelDescriptor(
            self.model_id,
            params,
            boundary=self.boundary,
            cells=self.cells,
            cells_x=self.cells_x,
            cells_y=self.cells_y,
        )

    def resolve(self) -> list[tuple[dict, ModelDescriptor]]:
        """Every sweep point with its resolved descriptor, in output order."""
        return [(pt, self.descriptor_at(pt)) for pt in self.points()]

    def task_spec(self, task: str) -> TaskSpec:
        """The configured spec for `task`, or one with default options."""
        for spec in self.compute:
            if spec.task == task:
                return spec
        return TaskSpec(task=task, options=default_options(task))


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _read_ini(text: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(
        interpolation=None,
        strict=True,
        inline_comment_prefixes=("#", ";"),
        empty_lines_in_values=False,
    )
    parser.optionxform = str  # model parameters are case-sensitive
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        line = exc.line.rstrip("\n")
        col = len(line) - len(line.lstrip()) + 1
        raise ParseError(
            f"key before any [section]: {line.strip()!r}", exc.lineno, col
        ) from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        stripped = line.strip("'\" \t")
        col = 1 + max(text.splitlines()[lineno - 1].find(stripped[:1]), 0) if stripped else 1
        raise ParseError(f"cannot parse {line.strip()!r}", lineno, col) from None
    except configparser.DuplicateOptionError as exc:
        raise ParseError(
            f"duplicate key '{exc.option}' in [{exc.section}]", exc.lineno, 1
        ) from None
    except configparser.DuplicateSectionError as exc:
        raise ParseError(
            f"duplicate section [{exc.section}]", exc.lineno, 1
        ) from None
    except configparser.Error as exc:
        raise ParseError(str(exc)) from None
    return parser


def _parse_model(section) -> tuple[ModelId, dict, Boundary, int | None, int | None, int | None]:
    items = dict(section)
    if "id" not in items:
        raise SchemaError("[model] needs an 'id' key", key="id")
    raw_id = items.pop("id").strip()
    try:
        model_id = ModelId(raw_id)
    except ValueError:
        _unknown_key(raw_id, [m.value for m in ModelId], "[model] id")
    schema = parameter_schema(model_id)

    boundary = Boundary.PBC
    if "boundary" in items:
        word = items.pop("boundary").strip().lower()
        try:
            boundary = Boundary(word)
        except ValueError:
            raise SchemaError(
                f"key 'boundary' must be pbc or obc, got {word!r}", key="boundary"
            ) from None
    cells = _int_pos(items.pop("cells"), "cells") if "cells" in items else None
    cells_x = _int_pos(items.pop("cells_x"), "cells_x") if "cells_x" in items else None
    cells_y = _int_pos(items.pop("cells_y"), "cells_y") if "cells_y" in items else None

    params: dict = {}
    for key, value in items.items():
        if key not in schema:
            _unknown_key(key, set(schema) | set(_MODEL_RESERVED), "[model]")
        kind = schema[key]
        if kind == "fraction":
            params[key] = value.strip()
        elif kind == "site_values":
            vals = [_eval_number(v, key) for v in _split_list(value)]
            if not vals:
                raise SchemaError(f"key '{key}' has no values", key=key)
            params[key] = vals[0] if len(vals) == 1 else np.array(vals, dtype=complex)
        else:
            params[key] = _eval_number(value, key)
    return model_id, params, boundary, cells, cells_x, cells_y


def _resolve_path(path: str, schema: dict[str, str]) -> tuple[str, str | None]:
    if path in schema:
        kind = schema[path]
        if kind == "fraction":
            raise SchemaError(
                f"parameter '{path}' is an exact rational and cannot be swept",
                key=path,
            )
        if kind == "site_values":
            raise SchemaError(
                f"parameter '{path}' is per-site data and cannot be swept",
                key=path,
            )
        return path, None
    for suffix, comp in (("_r", "re"), ("_i", "im")):
        base = path[: -len(suffix)]
        if path.endswith(suffix) and base in schema:
            if schema[base] != "complex":
                raise SchemaError(
                    f"parameter '{base}' is real; sweep it as '{base}'", key=path
                )
            return base, comp
    candidates = set(schema)
    for name, kind in schema.items():
        if kind == "complex":
            candidates |= {name + "_r", name + "_i"}
    _unknown_key(path, candidates, "[sweep] param")


def _parse_sweep(section, schema: dict[str, str], name: str) -> SweepAxis:
    items = dict(section)
    if "param" not in items:
        raise SchemaError(f"[{name}] needs a 'param' key", key="param")
    path = items.pop("param").strip()
    base, comp = _resolve_path(path, schema)

    has_values = "values" in items
    has_lin = any(k in items for k in ("start", "stop", "count"))
    if has_values and has_lin:
        raise SchemaError(
            f"[{name}] mixes 'values' with start/stop/count; use one form",
            key="values",
        )
    if has_values:
        vals = tuple(_real(v, "values") for v in _split_list(items.pop("values")))
        if not vals:
            raise SchemaError(f"[{name}] 'values' is empty", key="values")
    elif has_lin:
        missing = [k for k in ("start", "stop", "count") if k not in items]
        if missing:
            raise SchemaError(
                f"[{name}] needs start, stop and count; missing {', '.join(missing)}",
                key=missing[0],
            )
        start = _real(items.pop("start"), "start")
        stop = _real(items.pop("stop"), "stop")
        count = _int_pos(items.pop("count"), "count")
        vals = tuple(float(v) for v in np.linspace(start, stop, count))
    else:
        raise SchemaError(
            f"[{name}] needs either 'values' or start/stop/count", key="values"
        )
    for key in items:
        _unknown_key(key, _SWEEP_KEYS, f"[{name}]")
    return SweepAxis(path=path, base=base, component=comp, values=vals)


def _parse_task(task: str, section) -> TaskSpec:
    grammar = _TASK_OPTIONS[task]
    options = default_options(task)
    for key, value in dict(section).items():
        if key not in grammar:
            _unknown_key(key, grammar, f"[compute:{task}]")
        parser_fn = grammar[key][0]
        options[key] = parser_fn(value, key)
    return TaskSpec(task=task, options=options)


def parse_config(text: str) -> JobConfig:
    """Parse and validate job config text.

    Raises ParseError for syntax problems (with line/column) and
    SchemaError for unknown or invalid keys (naming the key).
    """
    parser = _read_ini(text)

    sections = {}
    for name in parser.sections():
        sections[name] = parser[name]

    if "model" not in sections:
        raise SchemaError("config needs a [model] section", key="model")
    model_id, params, boundary, cells, cells_x, cells_y = _parse_model(
        sections.pop("model")
    )
    schema = parameter_schema(model_id)

    compute: list[TaskSpec] = []
    sweep: list[SweepAxis] = []
    output_dir, output_format, precision = "out", "csv", 12
    seed = 0

    known_sections = ["model", "sweep", "sweep2", "output", "job"] + [
        f"compute:{t}" for t in TASK_NAMES
    ]
    sweep1 = sweep2 = None
    for name, section in sections.items():
        if name.startswith("compute:"):
            task = name.split(":", 1)[1]
            if task not in TASK_NAMES:
                _unknown_key(name, known_sections, "section")
            compute.append(_parse_task(task, section))
        elif name == "sweep":
            sweep1 = _parse_sweep(section, schema, "sweep")
        elif name == "sweep2":
            sweep2 = _parse_sweep(section, schema, "sweep2")
        elif name == "output":
            items = dict(section)
            if "dir" in items:
                output_dir = items.pop("dir").strip()
            if "format" in items:
                output_format = _choice("csv", "json")(items.pop("format"), "format")
            if "precision" in items:
                precision = _int_pos(items.pop("precision"), "precision")
                if precision > 17:
                    raise SchemaError(
                        f"key 'precision' above 17 digits is meaningless for doubles, got {precision}",
                        key="precision",
                    )
            for key in items:
                _unknown_key(key, ("dir", "format", "precision"), "[output]")
        elif name == "job":
            items = dict(section)
            if "seed" in items:
                seed = _int(items.pop("seed"), "seed")
            for key in items:
                _unknown_key(key, ("seed",), "[job]")
        else:
            _unknown_key(name, known_sections, "section")

    if sweep2 is not None and sweep1 is None:
        raise SchemaError("[sweep2] without [sweep]; fill the first axis", key="sweep2")
    if sweep1 is not None:
        sweep.append(sweep1)
    if sweep2 is not None:
        sweep.append(sweep2)

    cfg = JobConfig(
        model_id=model_id,
        params=params,
        boundary=boundary,
        cells=cells,
        cells_x=cells_x,
        cells_y=cells_y,
        compute=compute,
        sweep=sweep,
        output_dir=output_dir,
        output_format=output_format,
        precision=precision,
        seed=seed,
        text=text,
    )
    try:
        cfg.descriptor_at(cfg.points()[0])
    except InvalidParams as exc:
        raise SchemaError(str(exc)) from exc
    return cfg
