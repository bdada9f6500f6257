import json
import math

import pytest

from mecsim.errors import CounterDecreased, OutOfOrderSample, ParseError
from mecsim.exposition import Sample
from mecsim.tsdb import Selector, SeriesStore, load_dump


@pytest.fixture
def store():
    store = SeriesStore()
    for t in range(10, 60, 10):
        store.append("node_cpu_utilization_ratio", {"node": "core"}, t, 0.05)
        store.append("node_cpu_utilization_ratio", {"node": "edge"}, t, 0.06)
        store.append("node_network_transmit_bytes_total", {"node": "core"}, t, t * 1000.0, "counter")
    return store


def test_points_must_move_forward(store):
    with pytest.raises(OutOfOrderSample):
        store.append("node_cpu_utilization_ratio", {"node": "core"}, 50, 0.1)
    with pytest.raises(OutOfOrderSample):
        store.append("node_cpu_utilization_ratio", {"node": "core"}, 40, 0.1)
    store.append("node_cpu_utilization_ratio", {"node": "core"}, 51, 0.1)


def test_counters_never_decrease(store):
    with pytest.raises(CounterDecreased):
        store.append("node_network_transmit_bytes_total", {"node": "core"}, 60, 1.0, "counter")
    store.append("node_network_transmit_bytes_total", {"node": "core"}, 60, 50000.0, "counter")


def test_non_finite_values_are_rejected(store):
    with pytest.raises(ValueError):
        store.append("x", {}, 1, math.nan)


def test_query_range(store):
    (series,) = store.query_range("node_cpu_utilization_ratio", {"node": "edge"}, 20, 40)
    assert series.points == [(20, 0.06), (30, 0.06), (40, 0.06)]
    assert len(store.query_range("node_cpu_utilization_ratio")) == 2
    assert store.query_range("node_cpu_utilization_ratio", {"node": "master"}) == []
    assert store.query_range("node_cpu_utilization_ratio", t0=100) == []
    with pytest.raises(ValueError):
        store.query_range("node_cpu_utilization_ratio", t0=40, t1=20)


def test_selectors():
    selector = Selector.parse('node_cpu_utilization_ratio{node="core"}')
    assert selector.matches("node_cpu_utilization_ratio", (("node", "core"),))
    assert not selector.matches("node_cpu_utilization_ratio", (("node", "edge"),))
    assert str(selector) == 'node_cpu_utilization_ratio{node="core"}'
    assert Selector.parse("up").labels == ()
    with pytest.raises(ParseError):
        Selector.parse("9up")


def test_append_samples_and_latest():
    store = SeriesStore()
    n = store.append_samples(
        [Sample("up", (("target", "sampler"),), 1.0), Sample("c_total", (), 3.0, "counter")], 10
    )
    assert n == 2
    assert store.latest("up", {"target": "sampler"}) == (10, 1.0)
    assert store.latest("up", {"target": "node-core"}) is None
    assert store.names() == ["c_total", "up"]


def test_dump_format_and_reload(store, tmp_path):
    path = store.dump(tmp_path / "tsdb.json", {"seed": 42})
    text = path.read_text()
    assert text.endswith("\n")
    document = json.loads(text)
    assert document["meta"] == {"seed": 42}
    first = document["series"][0]
    assert first == {
        "kind": "gauge",
        "labels": {"node": "core"},
        "name": "node_cpu_utilization_ratio",
        "points": [[1.0, 0.05], [2.0, 0.05], [3.0, 0.05], [4.0, 0.05], [5.0, 0.05]],
    }
    reloaded = SeriesStore.from_document(load_dump(path))
    assert reloaded.dumps({"seed": 42}) == text


def test_load_dump_rejects_other_json(tmp_path):
    path = tmp_path / "other.json"
    path.write_text("[1, 2]")
    with pytest.raises(ValueError):
        load_dump(path)
