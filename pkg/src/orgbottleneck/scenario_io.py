"""Reading and writing scenario files (JSON).

A scenario file carries a joint source table and a hierarchy:

    {
      "x_size": 4,
      "y_size": 2,
      "joint": [..x_size * y_size reals, row-major..],
      "layers": [
        {"name": "ops", "attentions": [1.0, 2.0], "cardinality": 2,
         "max_rate_bits": 1.5, "beta_override": 100.0}
      ],
      "skips": [{"from": 1, "to": 3}],
      "seed": 0
    }

``max_rate_bits`` and ``beta_override`` are optional per layer. Parse
errors carry the offending key path; JSON syntax errors carry the line
and column.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .exceptions import ValidationError
from .hierarchy import HierarchySpec, LayerSpec, SkipEdge
from .info_theory import JointDistribution


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ValidationError(f"{where}: missing required key {key!r}")
    return doc[key]


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{where}: expected an integer, got {value!r}")
    return value


def _as_real(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{where}: expected a number, got {value!r}")
    return float(value)


def parse_scenario_dict(doc, *, where: str = "scenario"):
    """Parse a scenario document into (JointDistribution, HierarchySpec, seed)."""
    if not isinstance(doc, dict):
        raise ValidationError(f"{where}: expected a JSON object at the top level")
    x_size = _as_int(_require(doc, "x_size", where), f"{where}.x_size")
    y_size = _as_int(_require(doc, "y_size", where), f"{where}.y_size")
    if x_size < 1 or y_size < 1:
        raise ValidationError(f"{where}: x_size and y_size must be >= 1")
    joint_values = _require(doc, "joint", where)
    if not isinstance(joint_values, list):
        raise ValidationError(f"{where}.joint: expected an array of numbers")
    if len(joint_values) != x_size * y_size:
        raise ValidationError(
            f"{where}.joint: expected {x_size * y_size} entries "
            f"(x_size * y_size), got {len(joint_values)}"
        )
    cells = [_as_real(v, f"{where}.joint[{i}]") for i, v in enumerate(joint_values)]
    try:
        joint = JointDistribution(np.array(cells).reshape(x_size, y_size))
    except ValidationError as exc:
        raise ValidationError(f"{where}.joint: {exc}") from exc

    layer_docs = _require(doc, "layers", where)
    if not isinstance(layer_docs, list) or not layer_docs:
        raise ValidationError(f"{where}.layers: expected a non-empty array")
    layers = []
    for i, layer_doc in enumerate(layer_docs):
        loc = f"{where}.layers[{i}]"
        if not isinstance(layer_doc, dict):
            raise ValidationError(f"{loc}: expected an object")
        name = _require(layer_doc, "name", loc)
        if not isinstance(name, str):
            raise ValidationError(f"{loc}.name: expected a string")
        attentions = _require(layer_doc, "attentions", loc)
        if not isinstance(attentions, list):
            raise ValidationError(f"{loc}.attentions: expected an array of numbers")
        values = [
            _as_real(a, f"{loc}.attentions[{k}]") for k, a in enumerate(attentions)
        ]
        cardinality = _as_int(_require(layer_doc, "cardinality", loc), f"{loc}.cardinality")
        max_rate = layer_doc.get("max_rate_bits")
        if max_rate is not None:
            max_rate = _as_real(max_rate, f"{loc}.max_rate_bits")
        override = layer_doc.get("beta_override")
        if override is not None:
            override = _as_real(override, f"{loc}.beta_override")
        unknown = set(layer_doc) - {
            "name", "attentions", "cardinality", "max_rate_bits", "beta_override",
        }
        if unknown:
            raise ValidationError(f"{loc}: unknown keys {sorted(unknown)}")
        try:
            layers.append(
                LayerSpec(
                    name=name,
                    attentions=tuple(values),
                    cardinality=cardinality,
                    max_rate_bits=max_rate,
                    beta_override=override,
                )
            )
        except ValidationError as exc:
            raise ValidationError(f"{loc}: {exc}") from exc

    skip_docs = doc.get("skips", [])
    if not isinstance(skip_docs, list):
        raise ValidationError(f"{where}.skips: expected an array")
    skips = []
    for i, skip_doc in enumerate(skip_docs):
        loc = f"{where}.skips[{i}]"
        if not isinstance(skip_doc, dict):
            raise ValidationError(f"{loc}: expected an object with 'from' and 'to'")
        frm = _as_int(_require(skip_doc, "from", loc), f"{loc}.from")
        to = _as_int(_require(skip_doc, "to", loc), f"{loc}.to")
        try:
            skips.append(SkipEdge(frm, to))
        except ValidationError as exc:
            raise ValidationError(f"{loc}: {exc}") from exc

    seed = doc.get("seed", 0)
    seed = _as_int(seed, f"{where}.seed")

    unknown = set(doc) - {"x_size", "y_size", "joint", "layers", "skips", "seed"}
    if unknown:
        raise ValidationError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        spec = HierarchySpec(tuple(layers), tuple(skips))
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from exc
    return joint, spec, seed


def _load_json(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc


def load_scenario_file(path):
    """Load and parse a scenario file; errors name the file and location."""
    return parse_scenario_dict(_load_json(path), where=str(path))


def parse_joint_dict(doc, *, where: str = "joint file") -> JointDistribution:
    """Parse just the source joint from a (possibly full) scenario document."""
    if not isinstance(doc, dict):
        raise ValidationError(f"{where}: expected a JSON object at the top level")
    x_size = _as_int(_require(doc, "x_size", where), f"{where}.x_size")
    y_size = _as_int(_require(doc, "y_size", where), f"{where}.y_size")
    if x_size < 1 or y_size < 1:
        raise ValidationError(f"{where}: x_size and y_size must be >= 1")
    joint_values = _require(doc, "joint", where)
    if not isinstance(joint_values, list):
        raise ValidationError(f"{where}.joint: expected an array of numbers")
    if len(joint_values) != x_size * y_size:
        raise ValidationError(
            f"{where}.joint: expected {x_size * y_size} entries "
            f"(x_size * y_size), got {len(joint_values)}"
        )
    cells = [_as_real(v, f"{where}.joint[{i}]") for i, v in enumerate(joint_values)]
    unknown = set(doc) - {"x_size", "y_size", "joint", "layers", "skips", "seed"}
    if unknown:
        raise ValidationError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return JointDistribution(np.array(cells).reshape(x_size, y_size))
    except ValidationError as exc:
        raise ValidationError(f"{where}.joint: {exc}") from exc


def load_joint_file(path) -> JointDistribution:
    """Load only the joint table from a scenario (or joint-only) file."""
    return parse_joint_dict(_load_json(path), where=str(path))


def scenario_to_dict(joint: JointDistribution, spec: HierarchySpec, seed: int) -> dict:
    """Serialize back to the scenario document shape; floats keep full precision."""
    layers = []
    for layer in spec.layers:
        entry = {
            "name": layer.name,
            "attentions": [float(a) for a in layer.attentions],
            "cardinality": layer.cardinality,
        }
        if layer.max_rate_bits is not None:
            entry["max_rate_bits"] = float(layer.max_rate_bits)
        if layer.beta_override is not None:
            entry["beta_override"] = float(layer.beta_override)
        layers.append(entry)
    return {
        "x_size": joint.x_size,
        "y_size": joint.y_size,
        "joint": [float(v) for v in joint.probs.reshape(-1)],
        "layers": layers,
        "skips": [{"from": e.from_layer, "to": e.to_layer} for e in spec.skips],
        "seed": int(seed),
    }


def dump_scenario_file(path, joint, spec, seed) -> None:
    doc = scenario_to_dict(joint, spec, seed)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
