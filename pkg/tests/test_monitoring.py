import pytest

from mecsim.errors import RanApiDown, TargetDown
from mecsim.exporters import RAN_METRICS
from mecsim.monitoring import ScrapeTarget, scrape
from mecsim.traffic import FlowSpec
from mecsim.tsdb import SeriesStore

UE1 = {"ue": "1", "cell": "1"}


def test_node_scrape_appends_samples_and_up(testbed):
    plane = testbed.monitoring
    plane.refresh(10)
    store = SeriesStore()
    assert scrape(plane.target("node-master"), store, 10) == 4
    assert store.latest("up", {"target": "node-master"}) == (10, 1.0)
    assert store.latest("node_cpu_utilization_ratio", {"node": "master"}) == (10, 0.05)
    assert store.latest("node_memory_bytes", {"node": "master"}) == (10, float(1 << 30))


def test_scrape_targets_are_due_on_interval_multiples():
    target = ScrapeTarget("x", exporter=None, interval_ticks=10)
    assert [t for t in range(31) if target.due(t)] == [10, 20, 30]
    with pytest.raises(ValueError):
        ScrapeTarget("x", exporter=None, interval_ticks=0)


def test_sampler_is_down_without_its_workload(testbed, core_chart):
    testbed.cluster.install_chart(core_chart)
    with pytest.raises(RanApiDown):
        testbed.monitoring.sampler_poll(1)
    store = SeriesStore()
    with pytest.raises(TargetDown):
        scrape(testbed.monitoring.target("sampler"), store, 10)
    assert store.latest("up", {"target": "sampler"}) == (10, 0.0)

    testbed.run_until(20)
    assert testbed.monitoring.failures == [(10, "sampler"), (20, "sampler")]
    assert testbed.store.latest("up", {"target": "node-core"}) == (20, 1.0)


def test_sampler_exposes_six_gauges_per_ue(deployed):
    deployed.gnb.ue_attach(1)
    deployed.gnb.ue_attach(2)
    deployed.run_until(9)
    assert deployed.monitoring.sampler_poll(9) == 12
    deployed.run_until(10)
    names = {d.name for d in RAN_METRICS}
    ran_series = [s for s in deployed.store if s.name in names]
    assert len(ran_series) == 12
    assert {s.label_map["ue"] for s in ran_series} == {"1", "2"}
    assert deployed.store.latest("up", {"target": "sampler"}) == (10, 1.0)


def test_scraped_values_follow_the_simulation(deployed):
    deployed.gnb.ue_attach(1)
    deployed.traffic.start_flow(FlowSpec("f", 1, "downlink", 100e6, "core"))
    deployed.run_until(20)
    assert deployed.store.latest("ran_ue_snr_db", UE1) == (20, 20.0)
    assert deployed.store.latest("ran_ue_downlink_bitrate_bps", UE1) == (20, 100e6)
    tx = deployed.store.latest("node_network_transmit_bytes_total", {"node": "core"})
    assert tx == (20, float(deployed.cluster.node("core").tx_bytes_total))

    deployed.gnb.set_rx_gain_offset(-4)
    deployed.run_until(30)
    assert deployed.store.latest("ran_ue_snr_db", UE1) == (30, 16.0)
    assert deployed.store.latest("ran_ue_cqi", UE1) == (30, 11.0)
    assert deployed.store.latest("ran_ue_mcs_ul", UE1) == (30, 22.0)


def test_sampler_goes_down_when_uninstalled(deployed):
    deployed.gnb.ue_attach(1)
    deployed.run_until(10)
    deployed.cluster.uninstall_chart(deployed.cluster.handle("monitoring"))
    deployed.run_until(20)
    assert deployed.store.latest("up", {"target": "sampler"}) == (20, 0.0)
    assert deployed.monitoring.sampler.snapshot.values == ()
    with pytest.raises(RanApiDown):
        deployed.monitoring.sampler_poll(21)
