"""
Text exposition format.

Registries are prometheus-client :class:`~prometheus_client.CollectorRegistry`
objects.  :func:`render_exposition` writes them in a canonical subset of the
scrape format (``# TYPE`` lines, labels sorted by key, shortest round-trip
values) and :func:`parse_exposition` reads that subset back, along with the
standard client-library output served over HTTP.  The parser is stricter
than ``prometheus_client.parser``: any malformed line raises
:class:`~mecsim.errors.ParseError` carrying its line number instead of being
skipped or guessed at.

Example:

    >>> from prometheus_client import CollectorRegistry, Gauge
    >>> reg = CollectorRegistry()
    >>> Gauge("node_cpu_utilization_ratio", "CPU", ["node"], registry=reg).labels(node="core").set(0.05)
    >>> text = render_exposition(reg)
    >>> print(text, end="")
    # TYPE node_cpu_utilization_ratio gauge
    node_cpu_utilization_ratio{node="core"} 0.05
    >>> [(s.name, s.label_map, s.value) for s in parse_exposition(text)]
    [('node_cpu_utilization_ratio', {'node': 'core'}, 0.05)]
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Literal, Mapping, Optional, Tuple

from prometheus_client import CollectorRegistry

from .errors import ParseError

MetricKind = Literal["gauge", "counter"]
LabelSet = Tuple[Tuple[str, str], ...]

_NAME = re.compile(r"[a-zA-Z_:][a-zA-Z0-9_:]*")
_LABEL_NAME = re.compile(r"[a-zA-Z_][a-zA-Z0-9_]*")
_KINDS = ("gauge", "counter", "untyped")


@dataclass(frozen=True)
class MetricDescriptor:
    """Name, kind, help text and label keys of one metric family."""

    name: str
    kind: MetricKind
    help: str
    label_keys: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not _NAME.fullmatch(self.name):
            raise ValueError(f"invalid metric name '{self.name}'")
        if self.kind == "counter" and not self.name.endswith("_total"):
            raise ValueError(f"counter '{self.name}' must end with _total")

    @property
    def family(self) -> str:
        """Family name as prometheus-client expects it (counters lose ``_total``)."""
        return self.name[: -len("_total")] if self.kind == "counter" else self.name


@dataclass(frozen=True)
class Sample:
    name: str
    labels: LabelSet
    value: float
    kind: str = "gauge"
    timestamp: Optional[int] = None

    @property
    def label_map(self) -> Dict[str, str]:
        return dict(self.labels)


def canonical_labels(labels: Mapping[str, str]) -> LabelSet:
    return tuple(sorted((str(k), str(v)) for k, v in labels.items()))


def format_labels(labels: LabelSet | Mapping[str, str]) -> str:
    """``{k="v",...}`` with escaped values, or the empty string."""
    pairs = canonical_labels(labels) if isinstance(labels, Mapping) else labels
    if not pairs:
        return ""
    return "{" + ",".join(f'{k}="{_escape(v)}"' for k, v in pairs) + "}"


def format_value(value: float) -> str:
    if math.isnan(value):
        return "NaN"
    if math.isinf(value):
        return "+Inf" if value > 0 else "-Inf"
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace("\n", "\\n").replace('"', '\\"')


def registry_samples(registry: CollectorRegistry) -> List[Sample]:
    """The registry's current values, read directly from its collectors."""
    samples: List[Sample] = []
    for family in registry.collect():
        if family.type not in ("gauge", "counter"):
            continue
        for s in family.samples:
            if s.name.endswith("_created"):
                continue
            samples.append(Sample(s.name, canonical_labels(s.labels), float(s.value), family.type))
    return samples


def render_exposition(registry: CollectorRegistry) -> str:
    """Render gauge and counter families of ``registry`` in canonical form."""
    lines: List[str] = []
    for family in registry.collect():
        if family.type not in ("gauge", "counter"):
            continue
        name = f"{family.name}_total" if family.type == "counter" else family.name
        samples = sorted(
            (canonical_labels(s.labels), s.value) for s in family.samples if not s.name.endswith("_created")
        )
        lines.append(f"# TYPE {name} {family.type}")
        lines.extend(f"{name}{format_labels(labels)} {format_value(value)}" for labels, value in samples)
    return "".join(line + "\n" for line in lines)


def parse_exposition(text: str, timestamp: Optional[int] = None) -> List[Sample]:
    """Parse exposition text into samples stamped with ``timestamp``.

    Raises
    ------
    ParseError
        On the first malformed line, with its 1-based number.
    """
    kinds: Dict[str, str] = {}
    samples: List[Sample] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            _parse_comment(line, number, kinds)
            continue
        name, labels, value = _parse_sample(line, number)
        kind = kinds.get(name, "untyped")
        if kind == "untyped" and name.endswith(("_total", "_created")):
            base = name.rsplit("_", 1)[0]
            if kinds.get(base) == "counter":
                if name.endswith("_created"):
                    continue
                kind = "counter"
        samples.append(Sample(name, labels, value, "gauge" if kind == "untyped" else kind, timestamp))
    return samples


def _parse_comment(line: str, number: int, kinds: Dict[str, str]) -> None:
    parts = line[1:].split(None, 3)
    if not parts or parts[0] != "TYPE":
        return
    if len(parts) != 3:
        raise ParseError(number, "TYPE line needs a name and a kind")
    _, name, kind = parts
    if not _NAME.fullmatch(name):
        raise ParseError(number, f"invalid metric name '{name}'")
    if kind not in _KINDS:
        raise ParseError(number, f"unsupported metric kind '{kind}'")
    kinds[name] = kind


def _parse_sample(line: str, number: int) -> Tuple[str, LabelSet, float]:
    match = _NAME.match(line)
    if match is None:
        raise ParseError(number, "expected a metric name")
    name = match.group(0)
    pos = match.end()
    labels: LabelSet = ()
    if pos < len(line) and line[pos] == "{":
        labels, pos = _parse_labels(line, pos + 1, number)
    rest = line[pos:]
    if rest and not rest[0].isspace():
        raise ParseError(number, f"unexpected character {rest[0]!r} after metric name")
    tokens = rest.split()
    if not tokens or len(tokens) > 2:
        raise ParseError(number, "expected a value and an optional timestamp")
    value = _parse_float(tokens[0], number)
    if len(tokens) == 2:
        try:
            int(tokens[1])
        except ValueError:
            raise ParseError(number, f"invalid timestamp {tokens[1]!r}") from None
    return name, labels, value


def _parse_float(token: str, number: int) -> float:
    special = {"NaN": math.nan, "+Inf": math.inf, "Inf": math.inf, "-Inf": -math.inf}
    if token in special:
        return special[token]
    try:
        value = float(token)
    except ValueError:
        raise ParseError(number, f"invalid value {token!r}") from None
    if not math.isfinite(value):
        raise ParseError(number, f"invalid value {token!r}")
    return value


def _parse_labels(line: str, pos: int, number: int) -> Tuple[LabelSet, int]:
    pairs: Dict[str, str] = {}
    while True:
        while pos < len(line) and line[pos] in " \t":
            pos += 1
        if pos < len(line) and line[pos] == "}":
            return canonical_labels(pairs), pos + 1
        match = _LABEL_NAME.match(line, pos)
        if match is None:
            raise ParseError(number, "expected a label name")
        key = match.group(0)
        pos = match.end()
        if line[pos : pos + 2] != '="':
            raise ParseError(number, f"expected '=\"' after label {key}")
        pos += 2
        chars: List[str] = []
        while True:
            if pos >= len(line):
                raise ParseError(number, "unterminated label value")
            ch = line[pos]
            if ch == "\\":
                escaped = line[pos + 1 : pos + 2]
                if escaped not in ("\\", '"', "n"):
                    raise ParseError(number, f"invalid escape \\{escaped}")
                chars.append("\n" if escaped == "n" else escaped)
                pos += 2
                continue
            if ch == '"':
                pos += 1
                break
            chars.append(ch)
            pos += 1
        if key in pairs:
            raise ParseError(number, f"duplicate label {key}")
        pairs[key] = "".join(chars)
        if pos < len(line) and line[pos] == ",":
            pos += 1
        elif pos >= len(line) or line[pos] != "}":
            raise ParseError(number, "expected ',' or '}' in label set")


def parse_label_set(text: str) -> LabelSet:
    """Parse a standalone ``{k="v",...}`` string."""
    text = text.strip()
    if not text:
        return ()
    if not text.startswith("{"):
        raise ParseError(1, "label set must start with '{'")
    labels, pos = _parse_labels(text, 1, 1)
    if text[pos:].strip():
        raise ParseError(1, "trailing characters after label set")
    return labels


def samples_by_key(samples: Iterable[Sample]) -> Dict[Tuple[str, LabelSet], float]:
    return {(s.name, s.labels): s.value for s in samples}
