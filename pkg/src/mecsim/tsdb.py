"""
In-memory time-series store.

Series are keyed by metric name and canonical label set and hold
``(tick, value)`` points.  Points are append-only with strictly increasing
timestamps; counter series additionally never decrease.  The JSON dump is the
run's primary artifact and is what the checks and exporters read back.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Tuple

from .errors import CounterDecreased, OutOfOrderSample, ParseError
from .exposition import LabelSet, Sample, canonical_labels, format_labels, parse_label_set
from .kernel import TICKS_PER_SECOND, SimTime, ticks_to_seconds

logger = logging.getLogger(__name__)

SeriesKey = Tuple[str, LabelSet]

_SELECTOR = re.compile(r"\s*([a-zA-Z_:][a-zA-Z0-9_:]*)\s*(\{.*\})?\s*")


@dataclass(frozen=True)
class Selector:
    """``name{k="v",...}``: a metric name plus required label values."""

    name: str
    labels: LabelSet = ()

    @classmethod
    def parse(cls, text: str) -> "Selector":
        """Parse a selector string.

        Raises
        ------
        ParseError
            If the text is not a metric name with an optional label set.
        """
        match = _SELECTOR.fullmatch(text)
        if match is None:
            raise ParseError(1, f"invalid selector {text!r}")
        return cls(match.group(1), parse_label_set(match.group(2) or ""))

    def matches(self, name: str, labels: LabelSet) -> bool:
        if name != self.name:
            return False
        have = dict(labels)
        return all(have.get(k) == v for k, v in self.labels)

    def __str__(self) -> str:
        return f"{self.name}{format_labels(self.labels)}"


@dataclass
class Series:
    name: str
    labels: LabelSet
    kind: str = "gauge"
    points: List[Tuple[SimTime, float]] = field(default_factory=list)

    @property
    def label_map(self) -> Dict[str, str]:
        return dict(self.labels)

    @property
    def key(self) -> SeriesKey:
        return (self.name, self.labels)

    def sort_key(self) -> Tuple[str, str]:
        return (self.name, format_labels(self.labels))


class SeriesStore:
    """Append-only store of labeled series."""

    def __init__(self) -> None:
        self._series: Dict[SeriesKey, Series] = {}

    def __len__(self) -> int:
        return len(self._series)

    def __iter__(self) -> Iterator[Series]:
        return iter(sorted(self._series.values(), key=Series.sort_key))

    def names(self) -> List[str]:
        return sorted({name for name, _ in self._series})

    def append(
        self,
        name: str,
        labels: Mapping[str, str] | LabelSet,
        t: SimTime,
        value: float,
        kind: str = "gauge",
    ) -> None:
        """Append one point.

        Raises
        ------
        OutOfOrderSample
            If ``t`` is not after the series' last timestamp.
        CounterDecreased
            If a counter value is below its previous value.
        ValueError
            If the value is not finite.
        """
        if not math.isfinite(value):
            raise ValueError(f"non-finite value for {name}")
        key = (name, canonical_labels(labels) if isinstance(labels, Mapping) else tuple(labels))
        series = self._series.get(key)
        if series is None:
            series = self._series[key] = Series(name, key[1], kind)
        if series.points:
            last_t, last_v = series.points[-1]
            if t <= last_t:
                raise OutOfOrderSample(f"{name}{format_labels(key[1])} at {t} after {last_t}")
            if series.kind == "counter" and value < last_v:
                raise CounterDecreased(f"{name}{format_labels(key[1])}: {value} < {last_v}")
        series.points.append((t, float(value)))

    def append_samples(self, samples: Iterable[Sample], t: SimTime) -> int:
        count = 0
        for sample in samples:
            self.append(sample.name, sample.labels, t, sample.value, sample.kind)
            count += 1
        return count

    def select(self, selector: Selector | str) -> List[Series]:
        if isinstance(selector, str):
            selector = Selector.parse(selector)
        return [s for s in self if selector.matches(s.name, s.labels)]

    def query_range(
        self,
        name: str,
        label_filter: Optional[Mapping[str, str]] = None,
        t0: SimTime = 0,
        t1: Optional[SimTime] = None,
    ) -> List[Series]:
        """Points in ``[t0, t1]`` of every series matching name and labels.

        Raises
        ------
        ValueError
            If ``t0 > t1``.
        """
        if t1 is not None and t0 > t1:
            raise ValueError(f"t0={t0} is after t1={t1}")
        selector = Selector(name, canonical_labels(label_filter or {}))
        result: List[Series] = []
        for series in self.select(selector):
            points = [(t, v) for t, v in series.points if t >= t0 and (t1 is None or t <= t1)]
            if points:
                result.append(Series(series.name, series.labels, series.kind, points))
        return result

    def latest(self, name: str, labels: Mapping[str, str]) -> Optional[Tuple[SimTime, float]]:
        series = self._series.get((name, canonical_labels(labels)))
        return series.points[-1] if series and series.points else None

    # Dump format

    def to_document(self, meta: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
        return {
            "meta": dict(meta or {}),
            "series": [
                {
                    "name": s.name,
                    "kind": s.kind,
                    "labels": s.label_map,
                    "points": [[ticks_to_seconds(t), v] for t, v in s.points],
                }
                for s in self
            ],
        }

    def dumps(self, meta: Optional[Mapping[str, Any]] = None) -> str:
        return json.dumps(self.to_document(meta), sort_keys=True, separators=(",", ":")) + "\n"

    def dump(self, path: Path | str, meta: Optional[Mapping[str, Any]] = None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps(meta), encoding="utf-8")
        logger.info("wrote %d series to %s", len(self), path)
        return path

    @classmethod
    def from_document(cls, document: Mapping[str, Any]) -> "SeriesStore":
        store = cls()
        for entry in document.get("series", []):
            labels = canonical_labels(entry.get("labels", {}))
            kind = entry.get("kind", "gauge")
            store._series.setdefault((entry["name"], labels), Series(entry["name"], labels, kind))
            for t_s, value in entry["points"]:
                store.append(entry["name"], labels, int(round(t_s * TICKS_PER_SECOND)), value, kind)
        return store


def load_dump(path: Path | str) -> Dict[str, Any]:
    """Read a dump document; ``OSError`` and ``ValueError`` propagate."""
    document = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(document, dict) or "series" not in document:
        raise ValueError(f"{path} is not a series dump")
    document.setdefault("meta", {})
    return document
