import math

import numpy as np
import pytest
from prometheus_client import CollectorRegistry, Counter, Gauge, generate_latest

from mecsim.errors import ParseError
from mecsim.exposition import (
    MetricDescriptor,
    format_value,
    parse_exposition,
    parse_label_set,
    registry_samples,
    render_exposition,
    samples_by_key,
)


def test_render_is_canonical():
    reg = CollectorRegistry()
    g = Gauge("sim_ran_ue_snr_db", "SNR", ["ue", "cell"], registry=reg)
    g.labels(ue="2", cell="1").set(20)
    g.labels(ue="1", cell="1").set(16.5)
    Counter("node_network_transmit_bytes", "tx", ["node"], registry=reg).labels(node="core").inc(1250000)
    assert render_exposition(reg) == (
        "# TYPE sim_ran_ue_snr_db gauge\n"
        'sim_ran_ue_snr_db{cell="1",ue="1"} 16.5\n'
        'sim_ran_ue_snr_db{cell="1",ue="2"} 20\n'
        "# TYPE node_network_transmit_bytes_total counter\n"
        'node_network_transmit_bytes_total{node="core"} 1250000\n'
    )


def test_parse_reads_counters_and_gauges():
    text = (
        "# HELP a_total requests\n"
        "# TYPE a_total counter\n"
        'a_total{x="1"} 3\n'
        "\n"
        "b 1.5e3 1700000000000\n"
        "# TYPE c gauge\n"
        "c -Inf\n"
    )
    samples = parse_exposition(text, timestamp=12)
    assert [(s.name, s.label_map, s.value, s.kind, s.timestamp) for s in samples] == [
        ("a_total", {"x": "1"}, 3.0, "counter", 12),
        ("b", {}, 1500.0, "gauge", 12),
        ("c", {}, -math.inf, "gauge", 12),
    ]


def test_label_values_are_escaped():
    reg = CollectorRegistry()
    Gauge("g", "g", ["path"], registry=reg).labels(path='a"b\\c\nd').set(1)
    text = render_exposition(reg)
    assert 'g{path="a\\"b\\\\c\\nd"} 1' in text
    (sample,) = parse_exposition(text)
    assert sample.label_map == {"path": 'a"b\\c\nd'}


@pytest.mark.parametrize(
    "text, line",
    [
        ("ok 1\nbad{ 2\n", 2),
        ("x abc\n", 1),
        ("# TYPE x histogram\n", 1),
        ("a 1\nb 2\nx 1 2 3\n", 3),
        ('x{a="1",a="2"} 1\n', 1),
        ('x{a="1} 1\n', 1),
        ('x{a="\\t"} 1\n', 1),
        ("{a=\"1\"} 1\n", 1),
        ("x 1 soon\n", 1),
    ],
)
def test_parse_errors_report_the_line(text, line):
    with pytest.raises(ParseError) as excinfo:
        parse_exposition(text)
    assert excinfo.value.line == line


def test_label_set_strings():
    assert parse_label_set('{ue="1",cell="1"}') == (("cell", "1"), ("ue", "1"))
    assert parse_label_set("") == ()
    with pytest.raises(ParseError):
        parse_label_set('ue="1"')


def test_format_value():
    assert format_value(3.0) == "3"
    assert format_value(0.05) == "0.05"
    assert format_value(1e20) == "1e+20"
    assert format_value(math.inf) == "+Inf"
    assert format_value(math.nan) == "NaN"


def test_descriptor_validation():
    assert MetricDescriptor("x_total", "counter", "x").family == "x"
    with pytest.raises(ValueError):
        MetricDescriptor("x", "counter", "x")
    with pytest.raises(ValueError):
        MetricDescriptor("1x", "gauge", "x")


def test_client_library_output_parses():
    reg = CollectorRegistry()
    Counter("flows", "f", ["ue"], registry=reg).labels(ue="1").inc(7)
    Gauge("load", "l", registry=reg).set(0.25)
    parsed = parse_exposition(generate_latest(reg).decode())
    assert samples_by_key(parsed) == samples_by_key(registry_samples(reg))
    assert {s.name: s.kind for s in parsed} == {"flows_total": "counter", "load": "gauge"}


_LABEL_KEYS = ["node", "ue", "cell", "nf"]
_LABEL_VALUES = ["core", "1", "", 'q"uote', "back\\slash", "new\nline", "ünï"]


def _random_registry(rng):
    reg = CollectorRegistry()
    for i in range(int(rng.integers(1, 5))):
        keys = sorted(rng.choice(_LABEL_KEYS, size=int(rng.integers(0, 3)), replace=False).tolist())
        is_counter = rng.random() < 0.5
        metric = (Counter if is_counter else Gauge)(f"m{i}", "fuzz", keys, registry=reg)
        for _ in range(int(rng.integers(1, 4))):
            child = metric.labels(**{k: str(rng.choice(_LABEL_VALUES)) for k in keys}) if keys else metric
            value = float(rng.choice([rng.integers(0, 10**12), rng.random() * 10.0 ** int(rng.integers(-6, 12))]))
            if is_counter:
                child.inc(value)
            else:
                child.set(value if rng.random() < 0.5 else -value)
    return reg


def test_rendered_registries_parse_back_to_their_values():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        reg = _random_registry(rng)
        expected = samples_by_key(registry_samples(reg))
        assert samples_by_key(parse_exposition(render_exposition(reg))) == expected
        assert samples_by_key(parse_exposition(generate_latest(reg).decode())) == expected
