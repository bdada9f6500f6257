import pytest
from pydantic import ValidationError

from mecsim.errors import MissingSeries
from mecsim.tools import (
    WindowStatInput,
    compute_window_stat,
    counter_rate,
    list_series,
    segment_medians,
    series_frame,
    window,
)

DUMP = {
    "meta": {},
    "series": [
        {
            "name": "node_network_transmit_bytes_total",
            "kind": "counter",
            "labels": {"node": "core"},
            "points": [[1.0, 0.0], [2.0, 12_500_000.0], [3.0, 25_000_000.0], [4.0, 50_000_000.0]],
        },
        {
            "name": "node_network_transmit_bytes_total",
            "kind": "counter",
            "labels": {"node": "edge"},
            "points": [[1.0, 0.0], [2.0, 0.0]],
        },
        {
            "name": "ran_ue_mcs_ul",
            "kind": "gauge",
            "labels": {"cell": "1", "ue": "1"},
            "points": [[t, v] for t, v in [(1.0, 26), (2.0, 26), (3.0, 22), (4.0, 22), (5.0, 20), (6.0, 13)]],
        },
    ],
}


def test_series_frame_selects_by_labels():
    frame = series_frame(DUMP, "node_network_transmit_bytes_total", {"node": "core"})
    assert list(frame.columns) == ["series", "t", "value"]
    assert frame["series"].unique().tolist() == ['{node="core"}']
    assert len(series_frame(DUMP, "node_network_transmit_bytes_total")) == 6
    assert series_frame(DUMP, "node_network_transmit_bytes_total", {"node": "cloud"}).empty
    with pytest.raises(MissingSeries):
        series_frame(DUMP, "up")


def test_counter_rate_in_bits_per_second():
    rates = counter_rate(series_frame(DUMP, "node_network_transmit_bytes_total"))
    core = rates[rates["series"] == '{node="core"}']
    assert core["t"].tolist() == [2.0, 3.0, 4.0]
    assert core["value"].tolist() == [100e6, 100e6, 200e6]
    assert rates[rates["series"] == '{node="edge"}']["value"].tolist() == [0.0]


def test_window_bounds():
    frame = series_frame(DUMP, "ran_ue_mcs_ul")
    assert window(frame, 2, 4)["t"].tolist() == [2.0, 3.0, 4.0]
    assert window(frame, 2, 4, "left")["t"].tolist() == [2.0, 3.0]
    assert window(frame, 2, 4, "neither")["t"].tolist() == [3.0]


def test_segment_medians_skip_boundary_samples():
    frame = series_frame(DUMP, "ran_ue_mcs_ul")
    assert segment_medians(frame, [3.0, 5.0], 6.0) == [26.0, 22.0, 13.0]
    assert segment_medians(frame, [6.0], 6.0) == [22.0, None]


def test_compute_window_stat():
    spec = WindowStatInput(name="node_network_transmit_bytes_total", t0=2, t1=4, metric="max", rate=True)
    assert compute_window_stat(DUMP, spec) == {'{node="core"}': 200e6, '{node="edge"}': 0.0}
    spec = WindowStatInput(name="ran_ue_mcs_ul", labels={"ue": "1"}, t0=0, t1=10, metric="count")
    assert compute_window_stat(DUMP, spec) == {'{cell="1",ue="1"}': 6.0}


@pytest.mark.parametrize("fields", [{"t0": 5, "t1": 1}, {"t0": 0, "t1": 1, "metric": "p99"}, {"t0": -1, "t1": 1}])
def test_window_stat_input_validation(fields):
    with pytest.raises(ValidationError):
        WindowStatInput(name="x", **fields)


def test_list_series():
    assert list_series(DUMP) == [
        'node_network_transmit_bytes_total{node="core"}',
        'node_network_transmit_bytes_total{node="edge"}',
        'ran_ue_mcs_ul{cell="1",ue="1"}',
    ]
