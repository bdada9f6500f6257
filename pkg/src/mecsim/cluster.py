"""
Cluster model.

Four nodes (master, core, edge, monitoring) host the workloads of installed
charts.  Installing or removing a chart creates a short CPU transient on every
node it touches; forwarded user-plane traffic adds CPU proportionally to the
node's per-tick forwarded rate.  Services expose a workload on the master
node address so clients never depend on instance (pod) addresses.
"""

from __future__ import annotations

import itertools
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Protocol, Set, Tuple

from .config import NODE_NAMES, TICK_S, ClusterConfig, CoreConfig
from .errors import (
    AlreadyRemoved,
    DuplicateChart,
    NoSuchInstance,
    PortInUse,
    ServiceUnresolvable,
    UnknownNode,
)
from .kernel import SimTime, seconds_to_ticks
from .registry import NfInstance
from .schema import Chart, WorkloadSpec

logger = logging.getLogger(__name__)


@dataclass
class Node:
    """A cluster node with cumulative traffic counters."""

    name: str
    address: str
    index: int
    cpu_base: float
    tx_bytes_total: int = 0
    rx_bytes_total: int = 0
    hosted: Set[str] = field(default_factory=set)


class DeploymentState(str, Enum):
    INSTALLED = "installed"
    TERMINATING = "terminating"
    REMOVED = "removed"


@dataclass
class DeploymentHandle:
    chart: str
    instance_ids: List[str]
    state: DeploymentState = DeploymentState.INSTALLED
    services: List[str] = field(default_factory=list)


@dataclass(frozen=True)
class ServiceExposure:
    name: str
    instance_id: str
    address: str
    port: int

    @property
    def endpoint(self) -> str:
        return f"{self.address}:{self.port}"


@dataclass(frozen=True)
class CpuTransient:
    node: str
    start: SimTime
    duration_ticks: int
    height: float

    def active(self, t: SimTime) -> bool:
        return self.start <= t < self.start + self.duration_ticks


class ClusterListener(Protocol):
    """Receives lifecycle notifications from :class:`Cluster`."""

    def instances_installed(self, chart: Chart, instances: List[NfInstance]) -> None: ...

    def instances_removed(self, instances: List[NfInstance]) -> None: ...


class Cluster:
    """The four-node testbed and its chart lifecycle."""

    def __init__(
        self,
        config: Optional[ClusterConfig] = None,
        clock: Optional[Callable[[], SimTime]] = None,
        core_config: Optional[CoreConfig] = None,
    ) -> None:
        self.config = config or ClusterConfig()
        self._sbi_port = (core_config or CoreConfig()).sbi_port
        self._clock = clock or (lambda: 0)
        self.nodes: Dict[str, Node] = {
            name: Node(name, self.config.node_addresses[name], index, self.config.cpu_base)
            for index, name in enumerate(NODE_NAMES)
        }
        self.instances: Dict[str, NfInstance] = {}
        self._workloads: Dict[str, WorkloadSpec] = {}
        self._handles: Dict[str, DeploymentHandle] = {}
        self._exposures: Dict[str, ServiceExposure] = {}
        self._transients: List[CpuTransient] = []
        self._listeners: List[ClusterListener] = []
        self._id_counters: Dict[Tuple[str, str], itertools.count] = defaultdict(itertools.count)
        self._pod_hosts: Dict[str, itertools.count] = defaultdict(lambda: itertools.count(1))
        # node -> (tick, bytes forwarded during that tick)
        self._forwarded: Dict[str, Tuple[SimTime, int]] = {}

    def add_listener(self, listener: ClusterListener) -> None:
        self._listeners.append(listener)

    @property
    def master_address(self) -> str:
        return self.nodes["master"].address

    def node(self, name: str) -> Node:
        try:
            return self.nodes[name]
        except KeyError:
            raise UnknownNode(name) from None

    # Chart lifecycle

    def install_chart(self, chart: Chart) -> DeploymentHandle:
        """Create one instance per workload and return the deployment handle.

        Raises
        ------
        DuplicateChart
            If a chart with the same name is installed.
        UnknownNode
            If a workload targets a node outside the cluster.
        """
        if chart.name in self._handles:
            raise DuplicateChart(chart.name)
        for workload in chart.workloads:
            self.node(workload.node)

        now = self._clock()
        created: List[NfInstance] = []
        for workload in chart.workloads:
            node = self.nodes[workload.node]
            n = next(self._id_counters[(workload.nf_type, node.name)])
            instance = NfInstance(
                id=f"{workload.nf_type.lower()}-{node.name}-{n}",
                nf_type=workload.nf_type,
                node=node.name,
                sbi_address=f"10.244.{node.index}.{next(self._pod_hosts[node.name])}:{self._sbi_port}",
                chart=chart.name,
            )
            self.instances[instance.id] = instance
            self._workloads[instance.id] = workload
            node.hosted.add(instance.id)
            created.append(instance)

        handle = DeploymentHandle(chart.name, [i.id for i in created])
        self._handles[chart.name] = handle
        for listener in self._listeners:
            listener.instances_installed(chart, created)
        for service in chart.services:
            backing = next(i for i in created if i.nf_type == service.nf_type)
            self.expose_service(service.name, backing.id, service.port)
            handle.services.append(service.name)
        self._add_transients(chart.nodes(), now)
        logger.info("installed chart %s: %d instances", chart.name, len(created))
        return handle

    def uninstall_chart(self, handle: DeploymentHandle) -> int:
        """Remove every instance of ``handle`` and return how many were removed.

        Raises
        ------
        AlreadyRemoved
            If the handle is not in the installed state.
        """
        if handle.state is not DeploymentState.INSTALLED:
            raise AlreadyRemoved(handle.chart)
        handle.state = DeploymentState.TERMINATING
        for name in handle.services:
            self.unexpose_service(name)
        removed = [self.instances[i] for i in handle.instance_ids]
        for listener in self._listeners:
            listener.instances_removed(removed)
        nodes: List[str] = []
        for instance in removed:
            self.nodes[instance.node].hosted.discard(instance.id)
            del self.instances[instance.id]
            del self._workloads[instance.id]
            if instance.node not in nodes:
                nodes.append(instance.node)
        self._add_transients(sorted(nodes, key=NODE_NAMES.index), self._clock())
        del self._handles[handle.chart]
        handle.state = DeploymentState.REMOVED
        logger.info("uninstalled chart %s: %d instances", handle.chart, len(removed))
        return len(removed)

    def handle(self, chart_name: str) -> DeploymentHandle:
        try:
            return self._handles[chart_name]
        except KeyError:
            raise AlreadyRemoved(f"chart {chart_name} is not installed") from None

    def installed_charts(self) -> List[str]:
        return list(self._handles)

    def installed(self, nf_type: str, node: Optional[str] = None) -> List[NfInstance]:
        return [
            i for i in self.instances.values() if i.nf_type == nf_type and (node is None or i.node == node)
        ]

    def workload(self, instance_id: str) -> WorkloadSpec:
        try:
            return self._workloads[instance_id]
        except KeyError:
            raise NoSuchInstance(instance_id) from None

    def pending_transients(self) -> List[CpuTransient]:
        """Transients not yet pruned by :meth:`node_cpu_util`."""
        return list(self._transients)

    def _add_transients(self, nodes: List[str], start: SimTime) -> None:
        duration = seconds_to_ticks(self.config.transient_duration_s)
        for name in nodes:
            self._transients.append(CpuTransient(name, start, duration, self.config.transient_height))

    # Services

    def expose_service(self, name: str, instance_id: str, port: int) -> ServiceExposure:
        """Expose ``instance_id`` at ``master_address:port`` under ``name``.

        Raises
        ------
        NoSuchInstance
            If the instance is not installed.
        PortInUse
            If the port, or the service name, is already taken.
        """
        if instance_id not in self.instances:
            raise NoSuchInstance(instance_id)
        if any(e.port == port for e in self._exposures.values()):
            raise PortInUse(f"{self.master_address}:{port}")
        if name in self._exposures:
            raise PortInUse(f"service name {name} already exposed")
        exposure = ServiceExposure(name, instance_id, self.master_address, port)
        self._exposures[name] = exposure
        logger.debug("exposed %s -> %s at %s", name, instance_id, exposure.endpoint)
        return exposure

    def unexpose_service(self, name: str) -> None:
        self._exposures.pop(name, None)

    def exposures(self) -> List[ServiceExposure]:
        return list(self._exposures.values())

    def resolve_service(self, target: str) -> NfInstance:
        """Resolve a service name or ``address:port`` to its backing instance.

        Raises
        ------
        ServiceUnresolvable
            If no exposure matches or the backing instance is gone.
        """
        exposure = self._exposures.get(target)
        if exposure is None:
            exposure = next((e for e in self._exposures.values() if e.endpoint == target), None)
        if exposure is None:
            raise ServiceUnresolvable(f"no service at {target}")
        instance = self.instances.get(exposure.instance_id)
        if instance is None:
            raise ServiceUnresolvable(f"service {exposure.name} has no backing instance")
        return instance

    # Resources

    def node_cpu_util(self, node: str, t: SimTime) -> float:
        """CPU fraction of ``node`` at tick ``t``, clamped to [0, 1].

        Transients that ended before the current tick are dropped, so ``t``
        must not lie in the past.
        """
        n = self.node(node)
        now = self._clock()
        self._transients = [tr for tr in self._transients if tr.start + tr.duration_ticks > now]
        workloads = sum(self._workloads[i].cpu_base for i in n.hosted)
        transients = sum(tr.height for tr in self._transients if tr.node == node and tr.active(t))
        tick, forwarded = self._forwarded.get(node, (-1, 0))
        gbps = forwarded * 8 / TICK_S / 1e9 if tick == t else 0.0
        value = n.cpu_base + workloads + transients + self.config.cpu_per_gbps * gbps
        return min(max(value, 0.0), 1.0)

    def node_memory_bytes(self, node: str) -> int:
        n = self.node(node)
        per_instance = self.config.memory_per_instance_bytes
        hosted = sum(
            self._workloads[i].memory_bytes if self._workloads[i].memory_bytes is not None else per_instance
            for i in n.hosted
        )
        return self.config.memory_base_bytes + hosted

    def hosted_counts(self, node: str) -> Dict[str, int]:
        n = self.node(node)
        return dict(sorted(Counter(self.instances[i].nf_type for i in n.hosted).items()))

    def account_traffic(self, node: str, tx_bytes: int, rx_bytes: int) -> None:
        """Add forwarded bytes to ``node``'s counters and per-tick rate cache."""
        n = self.node(node)
        if tx_bytes < 0 or rx_bytes < 0:
            raise ValueError("byte counts must be non-negative")
        if tx_bytes == 0 and rx_bytes == 0:
            return
        n.tx_bytes_total += tx_bytes
        n.rx_bytes_total += rx_bytes
        now = self._clock()
        tick, forwarded = self._forwarded.get(node, (now, 0))
        if tick != now:
            forwarded = 0
        self._forwarded[node] = (now, forwarded + tx_bytes + rx_bytes)

    def forwarded_bytes(self, node: str, t: SimTime) -> int:
        tick, forwarded = self._forwarded.get(node, (-1, 0))
        return forwarded if tick == t else 0
