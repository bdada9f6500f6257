"""
Metric exporters.

Each exporter is a prometheus-client custom collector registered in its own
:class:`~prometheus_client.CollectorRegistry`.  Collectors read an immutable
snapshot that the simulation replaces wholesale on refresh, so an HTTP thread
scraping in serve mode never sees a half-updated tick.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, Optional, Tuple

from prometheus_client import CollectorRegistry
from prometheus_client.core import CounterMetricFamily, GaugeMetricFamily, Metric

from .cluster import Cluster
from .errors import RanApiDown
from .exposition import MetricDescriptor
from .kernel import SimTime
from .ran import InProcessConnection

logger = logging.getLogger(__name__)

NODE_METRICS = (
    MetricDescriptor("node_cpu_utilization_ratio", "gauge", "CPU utilization of the node, 0..1", ("node",)),
    MetricDescriptor("node_memory_bytes", "gauge", "Memory in use on the node", ("node",)),
    MetricDescriptor("node_network_transmit_bytes_total", "counter", "Bytes transmitted by the node", ("node",)),
    MetricDescriptor("node_network_receive_bytes_total", "counter", "Bytes received by the node", ("node",)),
    MetricDescriptor("sim_nf_instances", "gauge", "Network-function instances hosted on the node", ("node", "nf")),
)

RAN_METRICS = (
    MetricDescriptor("ran_ue_downlink_bitrate_bps", "gauge", "Measured downlink bitrate", ("ue", "cell")),
    MetricDescriptor("ran_ue_uplink_bitrate_bps", "gauge", "Measured uplink bitrate", ("ue", "cell")),
    MetricDescriptor("ran_ue_mcs_dl", "gauge", "Downlink MCS index", ("ue", "cell")),
    MetricDescriptor("ran_ue_mcs_ul", "gauge", "Uplink MCS index", ("ue", "cell")),
    MetricDescriptor("ran_ue_cqi", "gauge", "Channel quality indicator", ("ue", "cell")),
    MetricDescriptor("ran_ue_snr_db", "gauge", "Uplink SNR in dB", ("ue", "cell")),
)

# stats message field feeding each RAN metric
_RAN_FIELDS = {
    "ran_ue_downlink_bitrate_bps": "dl_bitrate",
    "ran_ue_uplink_bitrate_bps": "ul_bitrate",
    "ran_ue_mcs_dl": "mcs_dl",
    "ran_ue_mcs_ul": "mcs_ul",
    "ran_ue_cqi": "cqi",
    "ran_ue_snr_db": "snr",
}


def _family(descriptor: MetricDescriptor) -> Metric:
    if descriptor.kind == "counter":
        return CounterMetricFamily(descriptor.family, descriptor.help, labels=list(descriptor.label_keys))
    return GaugeMetricFamily(descriptor.name, descriptor.help, labels=list(descriptor.label_keys))


@dataclass(frozen=True)
class NodeSnapshot:
    tick: SimTime
    cpu: float
    memory_bytes: int
    tx_bytes_total: int
    rx_bytes_total: int
    nf_counts: Tuple[Tuple[str, int], ...] = ()


class NodeExporter:
    """Node-exporter analog for one cluster node."""

    def __init__(self, cluster: Cluster, node: str) -> None:
        cluster.node(node)
        self.cluster = cluster
        self.node = node
        self.target_id = f"node-{node}"
        self._snapshot: Optional[NodeSnapshot] = None
        self.registry = CollectorRegistry(auto_describe=False)
        self.registry.register(self)

    def is_up(self) -> bool:
        return True

    @property
    def snapshot(self) -> Optional[NodeSnapshot]:
        return self._snapshot

    def refresh(self, t: SimTime) -> NodeSnapshot:
        n = self.cluster.node(self.node)
        self._snapshot = NodeSnapshot(
            tick=t,
            cpu=self.cluster.node_cpu_util(self.node, t),
            memory_bytes=self.cluster.node_memory_bytes(self.node),
            tx_bytes_total=n.tx_bytes_total,
            rx_bytes_total=n.rx_bytes_total,
            nf_counts=tuple(self.cluster.hosted_counts(self.node).items()),
        )
        return self._snapshot

    def collect(self) -> Iterator[Metric]:
        snapshot = self._snapshot
        if snapshot is None:
            return
        cpu, memory, tx, rx, nfs = (_family(d) for d in NODE_METRICS)
        cpu.add_metric([self.node], snapshot.cpu)
        memory.add_metric([self.node], snapshot.memory_bytes)
        tx.add_metric([self.node], snapshot.tx_bytes_total)
        rx.add_metric([self.node], snapshot.rx_bytes_total)
        for nf, count in snapshot.nf_counts:
            nfs.add_metric([self.node, nf], count)
        yield from (cpu, memory, tx, rx, nfs)


@dataclass(frozen=True)
class SamplerSnapshot:
    tick: SimTime
    # (ue, cell) -> metric name -> value
    values: Tuple[Tuple[Tuple[str, str], Tuple[Tuple[str, float], ...]], ...] = ()


class SamplerExporter:
    """The RAN sampler: polls the gNB stats API and exposes per-UE gauges.

    The sampler only exists while a SAMPLER workload is installed; otherwise
    polls raise :class:`RanApiDown` and its scrape target is down.
    """

    target_id = "sampler"

    def __init__(self, cluster: Cluster, connect: Callable[[], InProcessConnection]) -> None:
        self.cluster = cluster
        self._connect = connect
        self._connection: Optional[InProcessConnection] = None
        self._message_ids = 0
        self._snapshot = SamplerSnapshot(tick=-1)
        self.registry = CollectorRegistry(auto_describe=False)
        self.registry.register(self)

    def is_up(self) -> bool:
        return bool(self.cluster.installed("SAMPLER"))

    @property
    def snapshot(self) -> SamplerSnapshot:
        return self._snapshot

    def sampler_poll(self, t: SimTime) -> int:
        """Request ``stats`` and replace the exposed gauges; returns values updated.

        Raises
        ------
        RanApiDown
            If no sampler is installed or the stats API does not answer.
        """
        if not self.is_up():
            self._drop_connection()
            raise RanApiDown("no SAMPLER workload installed")
        if self._connection is None or self._connection.closed:
            self._connection = self._connect()
        self._message_ids += 1
        try:
            reply = self._connection.request({"message": "stats", "message_id": self._message_ids})
        except ConnectionError as exc:
            self._drop_connection()
            raise RanApiDown(str(exc)) from None
        if "error" in reply:
            raise RanApiDown(f"stats request failed: {reply['error']}")
        values = []
        for ue in sorted(reply.get("ue_list", []), key=lambda u: u["ue_id"]):
            key = (str(ue["ue_id"]), str(ue["cell_id"]))
            values.append((key, tuple((name, float(ue[field])) for name, field in _RAN_FIELDS.items())))
        self._snapshot = SamplerSnapshot(tick=t, values=tuple(values))
        return len(values) * len(_RAN_FIELDS)

    def _drop_connection(self) -> None:
        if self._connection is not None:
            self._connection.close()
            self._connection = None
        self._snapshot = SamplerSnapshot(tick=self._snapshot.tick)

    def collect(self) -> Iterator[Metric]:
        snapshot = self._snapshot
        if not snapshot.values:
            return
        families: Dict[str, Metric] = {d.name: _family(d) for d in RAN_METRICS}
        for (ue, cell), metrics in snapshot.values:
            for name, value in metrics:
                families[name].add_metric([ue, cell], value)
        yield from families.values()
