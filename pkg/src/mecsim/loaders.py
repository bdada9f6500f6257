"""
Loaders for chart and scenario documents.

Documents are JSON, or YAML when the file extension says so.  Charts and
scenarios bundled with the package can be referenced by name (for example
``open5gs-core`` or ``experiment1``), or by a ``charts/<name>.json`` or
``scenarios/<name>.json`` path that does not exist on disk; anything else is
treated as a path.
Parsing validates the whole document up front and reports the first problem
as a :class:`~mecsim.errors.SchemaError` naming the event index and field.
"""

from __future__ import annotations

import json
import logging
import re
from importlib import resources
from pathlib import Path
from typing import Any, List, Mapping, Tuple

import yaml
from pydantic import ValidationError

from .errors import SchemaError
from .schema import Chart, Scenario

logger = logging.getLogger(__name__)

_ARGS_FIELD = re.compile(r"^(?:Value error, )?(args(?:\.\w+)*): (.*)$", re.DOTALL)


def load_document(path: str | Path) -> Any:
    """Read a JSON or YAML document.

    Raises
    ------
    OSError
        If the file cannot be read.
    SchemaError
        If the content is not UTF-8 or not valid JSON/YAML.
    """
    file_path = Path(path)
    try:
        text = file_path.read_text(encoding="utf-8")
        if file_path.suffix.lower() in (".yaml", ".yml"):
            return yaml.safe_load(text)
        return json.loads(text)
    except (UnicodeDecodeError, json.JSONDecodeError, yaml.YAMLError) as exc:
        raise SchemaError(f"{file_path.name}: {exc}") from None


def _bundled(kind: str) -> Any:
    return resources.files("mecsim").joinpath("data", kind)


def bundled_names(kind: str) -> List[str]:
    """Names of the bundled ``charts`` or ``scenarios``."""
    return sorted(p.name[: -len(".json")] for p in _bundled(kind).iterdir() if p.name.endswith(".json"))


def _bundled_name(kind: str, name_or_path: str | Path) -> str | None:
    """The bundled document ``name_or_path`` refers to, if any.

    Plain names (``experiment1``) always resolve to bundled data.  Relative
    paths like ``scenarios/experiment1.json`` do too when no such file exists
    on disk.
    """
    names = bundled_names(kind)
    if isinstance(name_or_path, str) and name_or_path in names:
        return name_or_path
    path = Path(name_or_path)
    if path.exists() or path.parent.name != kind or path.suffix.lower() != ".json":
        return None
    return path.stem if path.stem in names else None


def _read(kind: str, name_or_path: str | Path) -> Any:
    name = _bundled_name(kind, name_or_path)
    if name is not None:
        text = _bundled(kind).joinpath(f"{name}.json").read_text(encoding="utf-8")
        return json.loads(text)
    return load_document(name_or_path)


def _locate(error: Mapping[str, Any]) -> Tuple[int | None, str | None, str]:
    loc = list(error.get("loc", ()))
    message = str(error.get("msg", "invalid value"))
    index = None
    if len(loc) >= 2 and loc[0] == "events" and isinstance(loc[1], int):
        index = loc[1]
        loc = loc[2:]
    field = ".".join(str(p) for p in loc) or None
    match = _ARGS_FIELD.match(message)
    if match and field is None:
        field, message = match.group(1), match.group(2)
    message = message.removeprefix("Value error, ")
    return index, field, message


def _schema_error(exc: ValidationError) -> SchemaError:
    index, field, message = _locate(exc.errors()[0])
    return SchemaError(message, index=index, field=field)


def parse_chart(document: Any) -> Chart:
    """Validate a chart document.

    Raises
    ------
    SchemaError
        On the first invalid field.
    """
    if not isinstance(document, Mapping):
        raise SchemaError("chart document must be a mapping")
    try:
        return Chart.model_validate(document)
    except ValidationError as exc:
        raise _schema_error(exc) from None


def parse_scenario(document: Any) -> Scenario:
    """Validate a scenario document.

    Raises
    ------
    SchemaError
        On the first invalid field, with the event index when inside ``events``.
    """
    if not isinstance(document, Mapping):
        raise SchemaError("scenario document must be a mapping")
    try:
        return Scenario.model_validate(document)
    except ValidationError as exc:
        raise _schema_error(exc) from None


def load_chart(name_or_path: str | Path) -> Chart:
    chart = parse_chart(_read("charts", name_or_path))
    logger.debug("loaded chart %s (%d workloads)", chart.name, len(chart.workloads))
    return chart


def load_scenario(name_or_path: str | Path) -> Scenario:
    scenario = parse_scenario(_read("scenarios", name_or_path))
    logger.debug("loaded scenario %s (%d events)", scenario.name, len(scenario.events))
    return scenario
