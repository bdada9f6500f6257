"""
Testbed assembly.

:class:`Testbed` wires the kernel, cluster, 5G core, gNB, traffic generator
and monitoring plane of one run, and turns scenario events into kernel
actions.  Per tick, after that tick's events, the stages run in a fixed
order: link refresh, traffic delivery, RAN measurement, monitoring.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional

from .cluster import Cluster
from .config import SimConfig
from .core import Core5G
from .errors import SimError
from .kernel import Kernel, SimTime, ticks_to_seconds
from .loaders import load_chart
from .monitoring import MonitoringPlane
from .ran import Gnb, RanStatsApi
from .schema import (
    GnbConnectArgs,
    InstallChartArgs,
    ReassignUpfArgs,
    ScenarioEvent,
    SetRxGainOffsetArgs,
    StartFlowArgs,
    StopFlowArgs,
    UeAttachArgs,
    UninstallChartArgs,
)
from .traffic import FlowSpec, TrafficGenerator
from .tsdb import SeriesStore

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ActionFailure:
    """An action that failed during a run."""

    at_s: float
    action: str
    error: str
    message: str

    def to_dict(self) -> Dict[str, Any]:
        return {"at_s": self.at_s, "action": self.action, "error": self.error, "message": self.message}


@dataclass(frozen=True)
class ScenarioAction:
    """Kernel action wrapping one scenario event."""

    event: ScenarioEvent
    index: int

    @property
    def label(self) -> str:
        return f"{self.event.action}#{self.index}" + (f" {self.event.label}" if self.event.label else "")


class Testbed:
    """All components of one simulated run."""

    def __init__(self, config: Optional[SimConfig] = None, seed: int = 0, serve: bool = False) -> None:
        self.config = config or SimConfig()
        self.kernel = Kernel(seed=seed, dispatcher=self._dispatch)
        clock = self.kernel.now
        self.cluster = Cluster(self.config.cluster, clock, self.config.core)
        self.core = Core5G(self.cluster, self.config.core, clock)
        self.gnb = Gnb(self.core, self.cluster, self.kernel.rng, self.config.radio, clock)
        self.traffic = TrafficGenerator(self.core, self.gnb, self.cluster, clock)
        self.api = RanStatsApi(self.gnb, self.enqueue)
        self.store = SeriesStore()
        self.monitoring = MonitoringPlane(
            self.cluster, self.api, self.config.monitoring, self.store, refresh_every_tick=serve
        )
        self.errors: List[ActionFailure] = []
        self.kernel.add_tick_hook(self._tick)
        self._handlers: Dict[str, Callable[[Any], None]] = {
            "install_chart": self._install_chart,
            "uninstall_chart": self._uninstall_chart,
            "gnb_connect": self._gnb_connect,
            "ue_attach": self._ue_attach,
            "start_flow": self._start_flow,
            "stop_flow": self._stop_flow,
            "reassign_upf": self._reassign_upf,
            "set_rx_gain_offset": self._set_rx_gain_offset,
        }

    # Scheduling

    def schedule_events(self, events: List[ScenarioEvent]) -> None:
        for index, event in enumerate(events):
            self.kernel.schedule(event.at_ticks, ScenarioAction(event, index))

    def enqueue(self, action: Callable[[], None]) -> int:
        """Apply ``action`` at the current tick (used by the stats API)."""
        return self.kernel.schedule(self.kernel.now(), action)

    def run_until(self, end: SimTime) -> int:
        return self.kernel.run_until(end)

    def _tick(self, t: SimTime) -> None:
        self.gnb.update_links(t)
        self.traffic.tick_deliver(1)
        self.gnb.close_tick(t)
        self.monitoring.on_tick(t)

    # Dispatch

    def _dispatch(self, action: Any) -> None:
        if not isinstance(action, ScenarioAction):
            action()
            return
        event = action.event
        logger.info("t=%.1f s %s %s", event.at_s, event.action, event.label or "")
        try:
            self._handlers[event.action](event.typed_args())
        except (SimError, OSError) as exc:
            failure = ActionFailure(event.at_s, event.action, type(exc).__name__, str(exc))
            self.errors.append(failure)
            logger.error("t=%.1f s %s failed: %s: %s", event.at_s, event.action, failure.error, failure.message)

    def _install_chart(self, args: InstallChartArgs) -> None:
        self.cluster.install_chart(load_chart(args.chart))

    def _uninstall_chart(self, args: UninstallChartArgs) -> None:
        self.cluster.uninstall_chart(self.cluster.handle(args.chart))

    def _gnb_connect(self, args: GnbConnectArgs) -> None:
        self.gnb.gnb_connect(args.address)

    def _ue_attach(self, args: UeAttachArgs) -> None:
        self.gnb.ue_attach(args.ue_id, args.snr_ref_db)

    def _start_flow(self, args: StartFlowArgs) -> None:
        self.traffic.start_flow(FlowSpec(args.flow_id, args.ue_id, args.direction, args.rate_bps, args.server))

    def _stop_flow(self, args: StopFlowArgs) -> None:
        self.traffic.stop_flow(args.flow_id)

    def _reassign_upf(self, args: ReassignUpfArgs) -> None:
        self.core.smf_reassign_upf(args.ue_id, args.target)
        self.gnb.sync_attachments()

    def _set_rx_gain_offset(self, args: SetRxGainOffsetArgs) -> None:
        self.gnb.set_rx_gain_offset(args.offset_db)

    # Introspection

    def now_s(self) -> float:
        return ticks_to_seconds(self.kernel.now())
