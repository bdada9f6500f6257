import ipaddress

import numpy as np
import pytest

from mecsim.cluster import Cluster
from mecsim.core import Core5G, SessionState
from mecsim.errors import (
    AlreadyRegistered,
    FlowsStillActive,
    NoAmf,
    NoSuchSession,
    NotRegistered,
    NoUpf,
    SbiDeliveryError,
    SessionExists,
    SessionReleased,
    SimError,
)
from mecsim.schema import Chart


@pytest.fixture
def cluster():
    return Cluster()


@pytest.fixture
def core(cluster):
    return Core5G(cluster)


@pytest.fixture
def core_only_chart():
    return Chart(
        name="core-only",
        workloads=[
            {"nf_type": "NRF", "node": "core"},
            {"nf_type": "AMF", "node": "core"},
            {"nf_type": "SMF", "node": "core"},
            {"nf_type": "UPF", "node": "core"},
        ],
        services=[{"name": "amf-ngap", "nf_type": "AMF", "port": 38412}],
    )


def test_chart_install_registers_nfs(cluster, core, core_chart, monitoring_chart):
    cluster.install_chart(core_chart)
    cluster.install_chart(monitoring_chart)
    assert core.nrf.list()[0] == "nrf-core-0"
    assert [u.id for u in core.nrf_discover("UPF", "core")] == ["upf-core-0"]
    assert [u.id for u in core.nrf_discover("UPF", "edge")] == ["upf-edge-0"]
    assert core.nrf_discover("SAMPLER") == []


def test_registration_establishes_default_core_session(cluster, core, core_chart):
    cluster.install_chart(core_chart)
    first = core.amf_register_ue(1)
    second = core.amf_register_ue(2)
    assert first.session.ue_ip == "10.45.0.2"
    assert second.session.ue_ip == "10.45.0.3"
    assert second.session.upf_id == "upf-core-0"
    assert core.registered_ues() == [1, 2]
    verbs = [(m.verb, m.path) for m, _ in core.bus.log]
    assert ("POST", "/nsmf-pdusession/v1/sm-contexts") in verbs
    assert ("GET", "/nnrf-disc/v1/nf-instances") in verbs
    with pytest.raises(AlreadyRegistered):
        core.amf_register_ue(1)
    with pytest.raises(SessionExists):
        core.smf_establish_session(1, "edge")


def test_registration_needs_an_exposed_amf(core):
    with pytest.raises(NoAmf):
        core.amf_register_ue(1)
    with pytest.raises(SbiDeliveryError):
        core.smf_establish_session(1, "core")


def test_sbi_bus_rejects_unregistered_requesters(cluster, core, core_chart):
    cluster.install_chart(core_chart)
    with pytest.raises(SbiDeliveryError):
        core.bus.request("ghost-0", "SMF", "POST", "/x", {})


def test_reassign_moves_session_to_edge(cluster, core, core_chart):
    cluster.install_chart(core_chart)
    core.amf_register_ue(1)
    old = core.amf_register_ue(2).session
    new = core.smf_reassign_upf(2, "edge")
    assert old.state is SessionState.RELEASED
    assert (new.ue_ip, new.upf_id, new.locality) == ("10.46.0.2", "upf-edge-0", "edge")
    assert core.active_session(2) is new
    table = core.session_table()
    assert [(s["ue_id"], s["ue_ip"], s["state"]) for s in table] == [
        (1, "10.45.0.2", "active"),
        (2, "10.45.0.3", "released"),
        (2, "10.46.0.2", "active"),
    ]


def test_reassign_refused_with_running_flows(cluster, core, core_chart):
    cluster.install_chart(core_chart)
    core.amf_register_ue(1)
    core.set_flow_guard(lambda ue_id: True)
    with pytest.raises(FlowsStillActive):
        core.smf_reassign_upf(1, "edge")
    with pytest.raises(NoSuchSession):
        core.smf_reassign_upf(9, "edge")


def test_reassign_without_target_upf_keeps_session(cluster, core, core_only_chart):
    cluster.install_chart(core_only_chart)
    session = core.amf_register_ue(1).session
    with pytest.raises(NoUpf):
        core.smf_reassign_upf(1, "edge")
    assert core.active_session(1) is session


def test_upf_forward_accounts_at_host_node(cluster, core, core_chart):
    cluster.install_chart(core_chart)
    session = core.amf_register_ue(1).session
    assert core.upf_forward(session.session_id, 1000, "downlink") == 1000
    assert core.upf_forward(session.session_id, 500, "uplink") == 500
    node = cluster.node("core")
    assert (node.tx_bytes_total, node.rx_bytes_total) == (1000, 500)
    assert core.upfs["core"].forwarded_bytes == 1500
    core.release_session(session.session_id)
    with pytest.raises(SessionReleased):
        core.upf_forward(session.session_id, 1, "downlink")
    with pytest.raises(NoSuchSession):
        core.upf_forward(999, 1, "downlink")


def test_uninstall_releases_sessions_and_contexts(cluster, core, core_chart):
    handle = cluster.install_chart(core_chart)
    core.amf_register_ue(1)
    core.amf_register_ue(2)
    core.smf_reassign_upf(2, "edge")
    cluster.uninstall_chart(handle)
    assert core.active_session(1) is None
    assert core.active_session(2) is None
    assert core.registered_ues() == []
    assert core.nrf.list() == []
    assert all(s["state"] == "released" for s in core.session_table())


def test_ips_are_never_reused_across_reinstall(cluster, core, core_chart):
    handle = cluster.install_chart(core_chart)
    core.amf_register_ue(1)
    cluster.uninstall_chart(handle)
    cluster.install_chart(core_chart)
    assert core.amf_register_ue(1).session.ue_ip == "10.45.0.3"


def test_session_invariants_under_random_operations(cluster, core, core_chart):
    cluster.install_chart(core_chart)
    rng = np.random.default_rng(3)
    pools = {
        "core": ipaddress.IPv4Network(core.config.core_pool),
        "edge": ipaddress.IPv4Network(core.config.edge_pool),
    }
    for _ in range(2000):
        ue = int(rng.integers(1, 8))
        op = int(rng.integers(0, 3))
        try:
            if op == 0:
                core.amf_register_ue(ue)
            elif op == 1:
                core.smf_reassign_upf(ue, "edge" if rng.integers(0, 2) else "core")
            else:
                core.amf_deregister_ue(ue)
        except SimError:
            pass

        active = [s for s in core.sessions.values() if s.state is SessionState.ACTIVE]
        assert len({s.ue_id for s in active}) == len(active)
        assert len({s.ue_ip for s in active}) == len(active)
        for s in active:
            assert ipaddress.IPv4Address(s.ue_ip) in pools[s.locality]
            assert core.is_registered(s.ue_id)
        all_ips = [s.ue_ip for s in core.sessions.values()]
        assert len(set(all_ips)) == len(all_ips)


def test_session_requires_registration(cluster, core, core_chart):
    cluster.install_chart(core_chart)
    with pytest.raises(NotRegistered):
        core.smf_establish_session(5, "core")
    with pytest.raises(NotRegistered):
        core.amf_deregister_ue(5)
