import pandas as pd
import pytest

from mecsim.errors import EmptySelection
from mecsim.export import (
    DASHBOARDS,
    PanelSpec,
    deserialize_labels,
    export_csv,
    panel_frames,
    read_csv,
    render_panel_svg,
    serialize_labels,
    write_dashboard,
)

DUMP = {
    "meta": {"events": [{"at_s": 2.0, "action": "start_flow", "label": "#1"}]},
    "series": [
        {"name": "node_cpu_utilization_ratio", "kind": "gauge", "labels": {"node": "core"},
         "points": [[1.0, 0.05], [2.0, 0.35], [3.0, 0.1 + 0.2]]},
        {"name": "node_network_transmit_bytes_total", "kind": "counter", "labels": {"node": "core"},
         "points": [[1.0, 0.0], [2.0, 12_500_000.0], [3.0, 25_000_000.0]]},
        {"name": "up", "kind": "gauge", "labels": {}, "points": [[1.0, 1.0]]},
    ],
}


def test_label_serialization():
    assert serialize_labels({"ue": "1", "cell": "1"}) == "cell=1;ue=1"
    assert deserialize_labels("cell=1;ue=a=b") == {"cell": "1", "ue": "a=b"}
    assert deserialize_labels("") == {}


def test_csv_rows_are_ordered_by_time(tmp_path):
    path = tmp_path / "series.csv"
    assert export_csv(DUMP, path) == 7
    frame = pd.read_csv(path, keep_default_na=False)
    assert list(frame.columns) == ["timestamp_s", "name", "labels", "value"]
    assert frame["timestamp_s"].is_monotonic_increasing
    assert frame.iloc[0].tolist() == [1.0, "node_cpu_utilization_ratio", "node=core", 0.05]


def test_empty_selection_writes_the_header_only(tmp_path):
    path = tmp_path / "series.csv"
    assert export_csv(DUMP, path, ["ran_ue_snr_db"]) == 0
    assert path.read_text() == "timestamp_s,name,labels,value\n"


def test_csv_reads_back_to_the_same_points(tmp_path):
    path = tmp_path / "series.csv"
    export_csv(DUMP, path, ['node_cpu_utilization_ratio{node="core"}', "up"])
    back = read_csv(path)
    assert back["series"] == [
        {"name": "node_cpu_utilization_ratio", "labels": {"node": "core"},
         "points": [[1.0, 0.05], [2.0, 0.35], [3.0, 0.1 + 0.2]]},
        {"name": "up", "labels": {}, "points": [[1.0, 1.0]]},
    ]


def test_experiment2_snr_export(experiment2, tmp_path):
    _, dump, _ = experiment2
    path = tmp_path / "snr.csv"
    assert export_csv(dump, path, ['ran_ue_snr_db{ue="1"}']) == 130


def test_panel_rates_and_scaling():
    panel = PanelSpec("tx", "node_network_transmit_bytes_total", "rate", "Mbps", 1e-6)
    ((legend, frame),) = panel_frames(DUMP, panel)
    assert legend == '{node="core"}'
    assert frame["value"].tolist() == pytest.approx([100.0, 100.0])


def test_svg_panel(tmp_path):
    frames = panel_frames(DUMP, PanelSpec("CPU", "node_cpu_utilization_ratio"))
    path = render_panel_svg(frames, "CPU", tmp_path / "cpu.svg", DUMP["meta"]["events"])
    text = path.read_text()
    assert text.lstrip().startswith("<?xml")
    assert 'id="series-0"' in text
    assert "#1" in text
    again = render_panel_svg(frames, "CPU", tmp_path / "cpu2.svg", DUMP["meta"]["events"])
    assert again.read_text() == text
    with pytest.raises(EmptySelection):
        render_panel_svg([], "nothing", tmp_path / "none.svg")


def test_dashboard_skips_empty_panels(tmp_path):
    written = write_dashboard(DUMP, tmp_path, experiment=1)
    assert [p.name for p in written] == ["panel_cpu_utilization.svg", "panel_networking_transmit.svg"]
    assert len(DASHBOARDS[2]) == 5
