"""
Export of recorded series.

Handles persistence of a series dump to CSV (via pandas) and rendering of
dashboard-style panels to standalone SVG (via matplotlib, without pyplot
global state).  Panels draw one line per series, a legend of label sets and
numbered markers at scenario event times.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Mapping, Optional, Sequence

import matplotlib
import pandas as pd
from matplotlib.figure import Figure

from .errors import EmptySelection
from .exposition import canonical_labels, format_labels
from .tools import counter_rate
from .tsdb import Selector

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["timestamp_s", "name", "labels", "value"]


def serialize_labels(labels: Mapping[str, str]) -> str:
    """``k=v;k=v`` with keys sorted."""
    return ";".join(f"{k}={v}" for k, v in canonical_labels(labels))


def deserialize_labels(text: str) -> Dict[str, str]:
    if not text:
        return {}
    return dict(pair.split("=", 1) for pair in text.split(";"))


def select_series(dump: Mapping[str, Any], selectors: Optional[Sequence[str]] = None) -> List[Dict[str, Any]]:
    """Dump entries matching any selector (all entries when none are given)."""
    entries = list(dump.get("series", []))
    if not selectors:
        return entries
    parsed = [Selector.parse(s) for s in selectors]
    return [
        e for e in entries
        if any(sel.matches(e["name"], canonical_labels(e.get("labels", {}))) for sel in parsed)
    ]


def export_csv(dump: Mapping[str, Any], path: Path | str, selectors: Optional[Sequence[str]] = None) -> int:
    """Write the selected series as ``timestamp_s,name,labels,value`` rows; returns the row count.

    Rows are ordered by time, then by series.  An empty selection writes the
    header only.
    """
    rows = [
        {"timestamp_s": float(t), "name": e["name"], "labels": serialize_labels(e.get("labels", {})), "value": float(v)}
        for e in select_series(dump, selectors)
        for t, v in e["points"]
    ]
    frame = pd.DataFrame(rows, columns=CSV_COLUMNS)
    frame = frame.sort_values(["timestamp_s", "name", "labels"], kind="stable")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    logger.info("wrote %d rows to %s", len(frame), path)
    return len(frame)


def read_csv(path: Path | str) -> Dict[str, Any]:
    """Read an exported CSV back into dump form (``series`` only)."""
    frame = pd.read_csv(
        path,
        dtype={"name": str, "labels": str},
        keep_default_na=False,
        float_precision="round_trip",
    )
    series: Dict[tuple, Dict[str, Any]] = {}
    for row in frame.itertuples(index=False):
        key = (row.name, row.labels)
        entry = series.setdefault(key, {"name": row.name, "labels": deserialize_labels(row.labels), "points": []})
        entry["points"].append([float(row.timestamp_s), float(row.value)])
    return {"series": [series[k] for k in sorted(series)]}


@dataclass(frozen=True)
class PanelSpec:
    """A dashboard panel: one selector, plotted as raw values or counter rates."""

    title: str
    selector: str
    transform: Literal["value", "rate"] = "value"
    unit: str = ""
    scale: float = 1.0


DASHBOARDS: Dict[int, List[PanelSpec]] = {
    1: [
        PanelSpec("CPU utilization", "node_cpu_utilization_ratio"),
        PanelSpec("Networking transmit", "node_network_transmit_bytes_total", "rate", "Mbps", 1e-6),
        PanelSpec("Networking receive", "node_network_receive_bytes_total", "rate", "Mbps", 1e-6),
        PanelSpec("UE downlink bitrate", "ran_ue_downlink_bitrate_bps", unit="Mbps", scale=1e-6),
    ],
    2: [
        PanelSpec("UE uplink bitrate", "ran_ue_uplink_bitrate_bps", unit="Mbps", scale=1e-6),
        PanelSpec("Uplink SNR", "ran_ue_snr_db", unit="dB"),
        PanelSpec("Uplink MCS", "ran_ue_mcs_ul"),
        PanelSpec("CQI", "ran_ue_cqi"),
        PanelSpec("Networking receive", "node_network_receive_bytes_total", "rate", "Mbps", 1e-6),
    ],
}
DEFAULT_PANELS = [
    PanelSpec("CPU utilization", "node_cpu_utilization_ratio"),
    PanelSpec("Networking transmit", "node_network_transmit_bytes_total", "rate", "Mbps", 1e-6),
]


def panel_frames(dump: Mapping[str, Any], panel: PanelSpec) -> List[tuple[str, pd.DataFrame]]:
    """``(legend, frame[t, value])`` per selected series, transformed and scaled."""
    result = []
    for entry in select_series(dump, [panel.selector]):
        frame = pd.DataFrame(entry["points"], columns=["t", "value"]).assign(series="")
        if panel.transform == "rate":
            frame = counter_rate(frame)
        frame = frame.assign(value=frame["value"] * panel.scale)
        result.append((format_labels(entry.get("labels", {})) or entry["name"], frame))
    return result


def render_panel_svg(
    series: Sequence[tuple[str, pd.DataFrame]],
    title: str,
    path: Path | str,
    events: Iterable[Mapping[str, Any]] = (),
    ylabel: str = "",
) -> Path:
    """Write a standalone SVG line chart.

    Raises
    ------
    EmptySelection
        If ``series`` is empty.
    """
    if not series:
        raise EmptySelection(f"panel '{title}' selects no series")
    figure = Figure(figsize=(8, 3.5))
    ax = figure.add_subplot()
    for i, (legend, frame) in enumerate(series):
        (line,) = ax.plot(frame["t"], frame["value"], label=legend, linewidth=1.2)
        line.set_gid(f"series-{i}")
    for n, event in enumerate(events, start=1):
        at = float(event["at_s"])
        ax.axvline(at, color="0.6", linestyle=":", linewidth=0.8)
        ax.annotate(
            event.get("label") or f"({n})",
            xy=(at, 1.0),
            xycoords=("data", "axes fraction"),
            fontsize=7,
            ha="center",
            va="bottom",
        )
    ax.set_title(title, pad=14)
    ax.set_xlabel("time (s)")
    if ylabel:
        ax.set_ylabel(ylabel)
    ax.legend(loc="best", fontsize=7)
    ax.grid(True, linewidth=0.3)
    figure.tight_layout()

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": "mecsim", "svg.fonttype": "none"}):
        figure.savefig(path, format="svg", metadata={"Date": None})
    logger.info("wrote panel '%s' (%d series) to %s", title, len(series), path)
    return path


def labeled_events(dump: Mapping[str, Any]) -> List[Mapping[str, Any]]:
    """Scenario events worth a marker: the labeled ones, or all when none are labeled."""
    events = dump.get("meta", {}).get("events", [])
    labeled = [e for e in events if e.get("label")]
    return labeled or events


def write_dashboard(dump: Mapping[str, Any], out_dir: Path | str, experiment: Optional[int] = None) -> List[Path]:
    """Render the panels of a built-in dashboard; panels with no data are skipped."""
    out_dir = Path(out_dir)
    events = labeled_events(dump)
    written: List[Path] = []
    for panel in DASHBOARDS.get(experiment, DEFAULT_PANELS):
        frames = panel_frames(dump, panel)
        if not frames:
            logger.warning("panel '%s' has no series, skipped", panel.title)
            continue
        name = panel.title.lower().replace(" ", "_")
        written.append(render_panel_svg(frames, panel.title, out_dir / f"panel_{name}.svg", events, panel.unit))
    return written
