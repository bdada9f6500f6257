"""
Constant-bitrate flow generation.

Flows behave like UDP iperf sessions between a UE and an iperf server on the
core or edge node.  Every tick the RAN scheduler allocates each running flow
a rate, the flow converts it into whole bytes using a per-flow bit credit,
and the bytes are forwarded through the UE's session anchor.  Rates are
application goodput; no header overhead is modeled.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Literal, Optional

from .cluster import Cluster
from .core import Core5G, Direction, SessionState
from .errors import AlreadyStopped, DuplicateFlowId, NoServer, NoSession, NoSuchFlow
from .kernel import TICKS_PER_SECOND, SimTime
from .ran import Gnb

logger = logging.getLogger(__name__)

ServerNode = Literal["core", "edge"]


@dataclass(frozen=True)
class FlowSpec:
    flow_id: str
    ue_id: int
    direction: Direction
    rate_bps: float
    server: ServerNode

    def __post_init__(self) -> None:
        if not self.rate_bps > 0:
            raise ValueError("rate_bps must be positive")
        if self.direction not in ("downlink", "uplink"):
            raise ValueError(f"unknown direction '{self.direction}'")
        if self.server not in ("core", "edge"):
            raise ValueError(f"server must be 'core' or 'edge', got '{self.server}'")


class FlowState(str, Enum):
    RUNNING = "running"
    STOPPED = "stopped"


@dataclass
class FlowRuntime:
    """Live state of a flow.  ``delivered_bytes_total`` never decreases."""

    spec: FlowSpec
    session_id: int
    started_at: SimTime
    state: FlowState = FlowState.RUNNING
    stopped_at: Optional[SimTime] = None
    stop_reason: Optional[str] = None
    delivered_bytes_total: int = 0
    credit_bits: float = 0.0

    # FlowDemand protocol used by the RAN scheduler.

    @property
    def flow_id(self) -> str:
        return self.spec.flow_id

    @property
    def ue_id(self) -> int:
        return self.spec.ue_id

    @property
    def direction(self) -> Direction:
        return self.spec.direction

    @property
    def rate_bps(self) -> float:
        return self.spec.rate_bps

    @property
    def running(self) -> bool:
        return self.state is FlowState.RUNNING


class TrafficGenerator:
    """All flows of a run, delivered once per tick."""

    def __init__(
        self,
        core: Core5G,
        gnb: Gnb,
        cluster: Cluster,
        clock: Optional[Callable[[], SimTime]] = None,
    ) -> None:
        self.core = core
        self.gnb = gnb
        self.cluster = cluster
        self._clock = clock or (lambda: 0)
        self.flows: Dict[str, FlowRuntime] = {}
        core.set_flow_guard(self.has_running_flows)

    def start_flow(self, spec: FlowSpec) -> str:
        """Start ``spec``; it delivers from the current tick's hook onwards.

        Raises
        ------
        DuplicateFlowId
            If a flow with the same id was ever started.
        NoSession
            If the UE has no active PDU session.
        NoServer
            If no IPERF-SERVER runs on the named node.
        """
        if spec.flow_id in self.flows:
            raise DuplicateFlowId(spec.flow_id)
        session = self.core.active_session(spec.ue_id)
        if session is None:
            raise NoSession(f"UE {spec.ue_id} has no active session")
        if not self.cluster.installed("IPERF-SERVER", spec.server):
            raise NoServer(f"no iperf server on node {spec.server}")
        self.flows[spec.flow_id] = FlowRuntime(spec, session.session_id, self._clock())
        logger.info(
            "flow %s started: UE %d %s %.0f bps via %s server",
            spec.flow_id, spec.ue_id, spec.direction, spec.rate_bps, spec.server,
        )
        return spec.flow_id

    def stop_flow(self, flow_id: str) -> FlowRuntime:
        """Stop a running flow.

        Raises
        ------
        NoSuchFlow
            If the id is unknown.
        AlreadyStopped
            If the flow is not running.
        """
        flow = self.flows.get(flow_id)
        if flow is None:
            raise NoSuchFlow(flow_id)
        if not flow.running:
            raise AlreadyStopped(flow_id)
        self._stop(flow, "stopped")
        return flow

    def _stop(self, flow: FlowRuntime, reason: str) -> None:
        flow.state = FlowState.STOPPED
        flow.stopped_at = self._clock()
        flow.stop_reason = reason
        flow.credit_bits = 0.0
        logger.info("flow %s %s after %d bytes", flow.flow_id, reason, flow.delivered_bytes_total)

    def has_running_flows(self, ue_id: int) -> bool:
        return any(f.running and f.ue_id == ue_id for f in self.flows.values())

    def running_flows(self) -> List[FlowRuntime]:
        return [self.flows[k] for k in sorted(self.flows) if self.flows[k].running]

    def tick_deliver(self, dt_ticks: int = 1) -> Dict[str, int]:
        """Deliver ``dt_ticks`` worth of traffic for every running flow.

        Returns the bytes delivered per flow id.  Flows whose session has been
        released are stopped with reason ``session_released`` and deliver
        nothing.
        """
        active: List[FlowRuntime] = []
        for flow in self.running_flows():
            session = self.core.sessions.get(flow.session_id)
            if session is None or session.state is SessionState.RELEASED:
                self._stop(flow, "session_released")
            elif flow.ue_id not in self.gnb.attached_ues():
                self._stop(flow, "ue_detached")
            else:
                active.append(flow)
        if not active:
            return {}

        allocation = self.gnb.schedule_cell(active)
        delivered: Dict[str, int] = {}
        for flow in active:
            flow.credit_bits += allocation[flow.flow_id] * dt_ticks / TICKS_PER_SECOND
            nbytes = math.floor(flow.credit_bits / 8)
            flow.credit_bits -= nbytes * 8
            self.core.upf_forward(flow.session_id, nbytes, flow.direction)
            self.gnb.record_delivery(flow.ue_id, flow.direction, nbytes)
            flow.delivered_bytes_total += nbytes
            delivered[flow.flow_id] = nbytes
        return delivered

    def flow_table(self) -> List[Dict[str, object]]:
        """All flows of the run in id order, JSON-friendly."""
        return [
            {
                "flow_id": f.flow_id,
                "ue_id": f.ue_id,
                "direction": f.direction,
                "rate_bps": f.rate_bps,
                "server": f.spec.server,
                "state": f.state.value,
                "started_at": f.started_at,
                "stopped_at": f.stopped_at,
                "stop_reason": f.stop_reason,
                "delivered_bytes_total": f.delivered_bytes_total,
            }
            for f in (self.flows[k] for k in sorted(self.flows))
        ]
