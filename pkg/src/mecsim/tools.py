"""
Series analysis tools.

Deterministic functions over a series dump (the JSON document written by
:meth:`~mecsim.tsdb.SeriesStore.dump`).  Inputs are validated with pydantic
models and results are plain floats, lists or dictionaries, never raw
DataFrame objects, so they can be embedded in reports directly.

Windows are closed intervals in seconds.
"""

from __future__ import annotations

from typing import Any, Dict, List, Mapping, Optional

import pandas as pd
from pydantic import BaseModel, Field, field_validator, model_validator

from .errors import MissingSeries
from .exposition import canonical_labels, format_labels

_METRICS = {"mean", "median", "min", "max", "std", "first", "last", "count"}


# Input schemas


class SeriesInput(BaseModel):
    """Input schema selecting series from a dump."""

    name: str = Field(..., description="Metric name")
    labels: Dict[str, str] = Field(default_factory=dict, description="Required label values")


class WindowStatInput(SeriesInput):
    """Input schema for a statistic over a time window."""

    t0: float = Field(..., ge=0.0, description="Window start in seconds")
    t1: float = Field(..., ge=0.0, description="Window end in seconds")
    metric: str = Field("mean", description="One of mean, median, min, max, std, first, last, count")
    rate: bool = Field(False, description="Apply the statistic to the counter rate instead of raw values")

    @field_validator("metric")
    @classmethod
    def validate_metric(cls, v: str) -> str:
        if v not in _METRICS:
            raise ValueError(f"unsupported metric '{v}'")
        return v

    @model_validator(mode="after")
    def validate_window(self) -> "WindowStatInput":
        if self.t0 > self.t1:
            raise ValueError("t0 must not be after t1")
        return self


# Tool functions


def series_frame(dump: Mapping[str, Any], name: str, labels: Optional[Mapping[str, str]] = None) -> pd.DataFrame:
    """Long frame ``[series, t, value]`` of every series matching name and labels.

    ``series`` is the canonical label string.  An empty frame is returned when
    the name exists but no label set matches.

    Raises
    ------
    MissingSeries
        If no series in the dump carries ``name``.
    """
    entries = [s for s in dump.get("series", []) if s["name"] == name]
    if not entries:
        raise MissingSeries(name)
    wanted = dict(labels or {})
    rows: List[Dict[str, Any]] = []
    for entry in entries:
        have = entry.get("labels", {})
        if any(have.get(k) != v for k, v in wanted.items()):
            continue
        key = format_labels(canonical_labels(have))
        rows.extend({"series": key, "t": float(t), "value": float(v)} for t, v in entry["points"])
    frame = pd.DataFrame(rows, columns=["series", "t", "value"])
    return frame.sort_values(["series", "t"], kind="stable").reset_index(drop=True)


def counter_rate(frame: pd.DataFrame, scale: float = 8.0) -> pd.DataFrame:
    """Per-interval rate of counter series: ``scale * dv / dt`` stamped at the interval end.

    With the default scale, byte counters become bits per second.  The first
    point of each series has no rate and is dropped.
    """
    if frame.empty:
        return frame.copy()
    grouped = frame.groupby("series", sort=True)
    rate = frame.assign(
        value=grouped["value"].diff() / grouped["t"].diff() * scale,
    )
    return rate.dropna(subset=["value"]).reset_index(drop=True)


def window(frame: pd.DataFrame, t0: float, t1: float, closed: str = "both") -> pd.DataFrame:
    """Rows with ``t`` in the window; ``closed`` as in :meth:`pandas.Series.between`."""
    return frame[frame["t"].between(t0, t1, inclusive=closed)]


def stat(values: pd.Series, metric: str) -> Optional[float]:
    """Apply ``metric`` to ``values``; ``None`` when there are none."""
    if values.empty:
        return None if metric != "count" else 0.0
    if metric == "first":
        return float(values.iloc[0])
    if metric == "last":
        return float(values.iloc[-1])
    if metric == "count":
        return float(len(values))
    result = getattr(values, metric)()
    return None if pd.isna(result) else float(result)


def compute_window_stat(dump: Mapping[str, Any], spec: WindowStatInput) -> Dict[str, Optional[float]]:
    """Statistic of each matching series over ``[t0, t1]``, keyed by label string."""
    frame = series_frame(dump, spec.name, spec.labels)
    if spec.rate:
        frame = counter_rate(frame)
    selected = window(frame, spec.t0, spec.t1)
    return {
        key: stat(group["value"], spec.metric)
        for key, group in selected.groupby("series", sort=True)
    }


def segment_medians(frame: pd.DataFrame, boundaries: List[float], end: float) -> List[Optional[float]]:
    """Median of values strictly between consecutive boundaries.

    Segments are ``(0, b0)``, ``(b0, b1)``, ..., ``(b_last, end]``; samples
    taken exactly at a boundary are left out.
    """
    edges = [0.0, *boundaries]
    medians: List[Optional[float]] = []
    for i, start in enumerate(edges):
        stop = edges[i + 1] if i + 1 < len(edges) else end
        closed = "neither" if i + 1 < len(edges) else "right"
        medians.append(stat(window(frame, start, stop, closed)["value"], "median"))
    return medians


def list_series(dump: Mapping[str, Any]) -> List[str]:
    """Selector strings of every series in the dump."""
    return [f"{s['name']}{format_labels(canonical_labels(s.get('labels', {})))}" for s in dump.get("series", [])]
