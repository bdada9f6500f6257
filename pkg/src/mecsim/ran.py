"""
Radio access network model.

A single gNB cell serving numbered UEs.  Link quality follows a fixed chain:
receiver gain offset and reference SNR give the SNR, thresholds give the CQI,
the CQI indexes the MCS and spectral-efficiency tables, and efficiency times
usable bandwidth gives the per-UE capacity.  Capacity is per UE; there is no
cross-UE contention on the air interface.

The stats/control API mirrors a base-station remote API: single JSON objects
exchanged over a persistent connection.
"""

from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Deque, Dict, List, Mapping, Optional, Protocol, Sequence, Tuple

import numpy as np

from .cluster import Cluster
from .config import RadioConfig
from .core import Core5G, Direction
from .errors import AlreadyAttached, AmfUnreachable, NotAttached, NotConnected, ServiceUnresolvable
from .kernel import SeededRng, SimTime, seconds_to_ticks, ticks_to_seconds

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinkTables:
    """SNR→CQI thresholds, CQI→MCS and CQI→spectral-efficiency tables."""

    thresholds_db: Tuple[float, ...]
    efficiencies: Tuple[float, ...]
    cqi_to_mcs: Tuple[int, ...]

    @classmethod
    def from_config(cls, radio: RadioConfig) -> "LinkTables":
        return cls(tuple(radio.cqi_thresholds_db), tuple(radio.efficiencies), tuple(radio.cqi_to_mcs))

    def cqi(self, snr_db: float) -> int:
        """Highest CQI whose threshold is at or below ``snr_db`` (0 below all)."""
        return int(np.searchsorted(np.asarray(self.thresholds_db), snr_db, side="right"))

    def mcs(self, cqi: int) -> int:
        return self.cqi_to_mcs[cqi]

    def efficiency(self, cqi: int) -> float:
        return 0.0 if cqi == 0 else self.efficiencies[cqi - 1]


@dataclass
class GnbConfig:
    cell_id: int = 1
    amf_address: str = "192.168.1.10:38412"
    bandwidth_hz: float = 50e6
    overhead_factor: float = 0.9
    rx_gain_offset_db: float = 0.0
    snr_noise_std_db: float = 0.0

    def __post_init__(self) -> None:
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be positive")
        if not 0 < self.overhead_factor <= 1:
            raise ValueError("overhead_factor must be in (0, 1]")

    @classmethod
    def from_radio(cls, radio: RadioConfig) -> "GnbConfig":
        return cls(
            cell_id=radio.cell_id,
            amf_address=radio.amf_address,
            bandwidth_hz=radio.bandwidth_hz,
            overhead_factor=radio.overhead_factor,
            rx_gain_offset_db=radio.rx_gain_offset_db,
            snr_noise_std_db=radio.snr_noise_std_db,
        )


@dataclass
class UeContext:
    ue_id: int
    snr_ref_db: float = 20.0
    attached: bool = False
    ue_ip: Optional[str] = None


@dataclass(frozen=True)
class RadioLinkState:
    snr_db: float
    cqi: int
    mcs: int
    capacity_bps: int


@dataclass(frozen=True)
class UeStats:
    """One UE's entry of a stats snapshot; every field comes from the same tick."""

    ue_id: int
    cell_id: int
    dl_bitrate_bps: float
    ul_bitrate_bps: float
    mcs_dl: int
    mcs_ul: int
    cqi: int
    snr_db: float

    def to_message(self) -> Dict[str, Any]:
        return {
            "ue_id": self.ue_id,
            "cell_id": self.cell_id,
            "dl_bitrate": self.dl_bitrate_bps,
            "ul_bitrate": self.ul_bitrate_bps,
            "mcs_dl": self.mcs_dl,
            "mcs_ul": self.mcs_ul,
            "cqi": self.cqi,
            "snr": self.snr_db,
        }


@dataclass(frozen=True)
class NgapAssociation:
    """NGAP-lite association between the gNB and an AMF service."""

    amf_address: str
    amf_id: str
    established_at: SimTime


class FlowDemand(Protocol):
    flow_id: str
    ue_id: int
    direction: Direction
    rate_bps: float


@dataclass(frozen=True)
class StatsSnapshot:
    tick: SimTime
    ues: Tuple[UeStats, ...] = ()


@dataclass
class _Window:
    """Trailing per-tick delivered bytes of one UE and direction."""

    size: int
    ticks: Deque[int] = field(default_factory=deque)

    def push(self, nbytes: int) -> None:
        self.ticks.append(nbytes)
        if len(self.ticks) > self.size:
            self.ticks.popleft()

    def total(self) -> int:
        return sum(self.ticks)


class Gnb:
    """A single-cell gNB with link adaptation and per-UE throughput measurement."""

    def __init__(
        self,
        core: Core5G,
        cluster: Cluster,
        rng: SeededRng,
        config: Optional[RadioConfig] = None,
        clock: Optional[Callable[[], SimTime]] = None,
    ) -> None:
        radio = config or RadioConfig()
        self.config = GnbConfig.from_radio(radio)
        self.tables = LinkTables.from_config(radio)
        self.default_snr_ref_db = radio.snr_ref_db
        self.window_s = radio.stats_window_s
        self._window_ticks = seconds_to_ticks(radio.stats_window_s)
        self.core = core
        self.cluster = cluster
        self.rng = rng
        self._clock = clock or (lambda: 0)
        self.association: Optional[NgapAssociation] = None
        self.ues: Dict[int, UeContext] = {}
        self._links: Dict[int, RadioLinkState] = {}
        self._windows: Dict[Tuple[int, str], _Window] = {}
        self._tick_bytes: Dict[Tuple[int, str], int] = {}
        self._snapshot = StatsSnapshot(tick=-1)

    # NGAP

    def gnb_connect(self, amf_service: Optional[str] = None) -> NgapAssociation:
        """Establish the NGAP-lite association with the AMF behind ``amf_service``.

        Raises
        ------
        AmfUnreachable
            If the service does not resolve to a registered AMF.
        """
        address = amf_service or self.config.amf_address
        amf = self._resolve_amf(address)
        self.config.amf_address = address
        self.association = NgapAssociation(address, amf.id, self._clock())
        logger.info("gNB cell %d connected to AMF %s via %s", self.config.cell_id, amf.id, address)
        return self.association

    def _resolve_amf(self, address: str):
        try:
            amf = self.cluster.resolve_service(address)
        except ServiceUnresolvable as exc:
            raise AmfUnreachable(str(exc)) from None
        if amf.nf_type != "AMF" or not self.core.nrf.is_registered(amf.id):
            raise AmfUnreachable(f"{address} does not lead to a registered AMF")
        return amf

    def ue_attach(self, ue_id: int, snr_ref_db: Optional[float] = None) -> UeContext:
        """Attach a UE: AMF registration plus a default core-UPF session.

        Raises
        ------
        NotConnected
            If the gNB has no NGAP association.
        AlreadyAttached
            If the UE is already attached.
        AmfUnreachable
            If the associated AMF service no longer resolves.
        """
        if self.association is None:
            raise NotConnected("gNB is not connected to an AMF")
        context = self.ues.get(ue_id)
        if context is not None and context.attached:
            raise AlreadyAttached(f"UE {ue_id}")
        self._resolve_amf(self.association.amf_address)
        registration = self.core.amf_register_ue(ue_id)
        if context is None:
            context = UeContext(ue_id, self.default_snr_ref_db if snr_ref_db is None else snr_ref_db)
            self.ues[ue_id] = context
        elif snr_ref_db is not None:
            context.snr_ref_db = snr_ref_db
        context.attached = True
        context.ue_ip = registration.session.ue_ip if registration.session else None
        for direction in ("downlink", "uplink"):
            self._windows[(ue_id, direction)] = _Window(self._window_ticks)
        self.compute_link(ue_id)
        logger.info("UE %d attached with %s", ue_id, context.ue_ip)
        return context

    def sync_attachments(self) -> None:
        """Refresh UE addresses and detach UEs whose session disappeared."""
        for context in self.ues.values():
            if not context.attached:
                continue
            session = self.core.active_session(context.ue_id)
            if session is not None:
                context.ue_ip = session.ue_ip
                continue
            if self.core.is_registered(context.ue_id):
                self.core.amf_deregister_ue(context.ue_id)
            context.attached = False
            context.ue_ip = None
            self._links.pop(context.ue_id, None)
            logger.info("UE %d detached (no session)", context.ue_id)

    # Link adaptation

    def set_rx_gain_offset(self, offset_db: float) -> None:
        self.config.rx_gain_offset_db = float(offset_db)
        logger.info("gNB rx gain offset set to %+.1f dB", offset_db)

    def link_for_snr(self, snr_db: float) -> RadioLinkState:
        """Evaluate the SNR→CQI→MCS→capacity chain for one SNR value."""
        cqi = self.tables.cqi(snr_db)
        capacity = self.tables.efficiency(cqi) * self.config.bandwidth_hz * self.config.overhead_factor
        return RadioLinkState(snr_db=snr_db, cqi=cqi, mcs=self.tables.mcs(cqi), capacity_bps=int(round(capacity)))

    def compute_link(self, ue_id: int) -> RadioLinkState:
        """Recompute and cache the link state of an attached UE.

        Raises
        ------
        NotAttached
            If the UE is not attached.
        """
        context = self.ues.get(ue_id)
        if context is None or not context.attached:
            raise NotAttached(f"UE {ue_id}")
        snr = context.snr_ref_db + self.config.rx_gain_offset_db
        if self.config.snr_noise_std_db > 0:
            snr += self.rng.normal(self.config.snr_noise_std_db)
        link = self.link_for_snr(snr)
        self._links[ue_id] = link
        return link

    def link(self, ue_id: int) -> RadioLinkState:
        try:
            return self._links[ue_id]
        except KeyError:
            raise NotAttached(f"UE {ue_id}") from None

    def attached_ues(self) -> List[int]:
        return sorted(u for u, c in self.ues.items() if c.attached)

    # Scheduling and measurement

    def schedule_cell(self, active_flows: Sequence[FlowDemand]) -> Dict[str, float]:
        """Allocate capacity to flows.

        Each flow gets ``min(offered, demand-proportional share)`` of its UE's
        capacity in the flow's direction.
        """
        groups: Dict[Tuple[int, str], List[FlowDemand]] = {}
        for flow in active_flows:
            groups.setdefault((flow.ue_id, flow.direction), []).append(flow)
        allocation: Dict[str, float] = {}
        for (ue_id, _direction), flows in groups.items():
            capacity = self.link(ue_id).capacity_bps
            demand = sum(f.rate_bps for f in flows)
            for flow in flows:
                share = capacity * flow.rate_bps / demand if demand > 0 else 0.0
                allocation[flow.flow_id] = min(flow.rate_bps, share)
        return allocation

    def record_delivery(self, ue_id: int, direction: Direction, nbytes: int) -> None:
        key = (ue_id, direction)
        self._tick_bytes[key] = self._tick_bytes.get(key, 0) + nbytes

    def update_links(self, t: SimTime) -> None:
        """Start-of-tick link refresh for every attached UE."""
        self.sync_attachments()
        for ue_id in self.attached_ues():
            self.compute_link(ue_id)

    def close_tick(self, t: SimTime) -> None:
        """Push this tick's delivered bytes into the windows and publish a snapshot."""
        stats: List[UeStats] = []
        for ue_id in self.attached_ues():
            rates = {}
            for direction in ("downlink", "uplink"):
                window = self._windows[(ue_id, direction)]
                window.push(self._tick_bytes.get((ue_id, direction), 0))
                rates[direction] = window.total() * 8 / self.window_s
            link = self._links[ue_id]
            stats.append(
                UeStats(
                    ue_id=ue_id,
                    cell_id=self.config.cell_id,
                    dl_bitrate_bps=rates["downlink"],
                    ul_bitrate_bps=rates["uplink"],
                    mcs_dl=link.mcs,
                    mcs_ul=link.mcs,
                    cqi=link.cqi,
                    snr_db=link.snr_db,
                )
            )
        self._tick_bytes.clear()
        self._snapshot = StatsSnapshot(tick=t, ues=tuple(stats))

    def ran_stats(self) -> List[UeStats]:
        return list(self._snapshot.ues)

    @property
    def snapshot(self) -> StatsSnapshot:
        return self._snapshot


class RanStatsApi:
    """JSON message handler of the gNB stats/control API.

    Control messages never touch the gNB directly: they are handed to
    ``enqueue`` so the kernel applies them at the current tick.
    """

    def __init__(self, gnb: Gnb, enqueue: Callable[[Callable[[], None]], Any]) -> None:
        self.gnb = gnb
        self._enqueue = enqueue

    def handle(self, message: Mapping[str, Any]) -> Dict[str, Any]:
        message_id = message.get("message_id")
        kind = message.get("message")
        if kind == "stats":
            snapshot = self.gnb.snapshot
            return {
                "message": "stats",
                "message_id": message_id,
                "time": ticks_to_seconds(max(snapshot.tick, 0)),
                "ue_list": [ue.to_message() for ue in snapshot.ues],
            }
        if kind == "config_set":
            offset = message.get("rx_gain_offset_db")
            if isinstance(offset, bool) or not isinstance(offset, (int, float)):
                return {"error": "bad_request", "message_id": message_id}
            self._enqueue(_GainChange(self.gnb, float(offset)))
            return {"message": "config_set", "message_id": message_id, "ok": True}
        return {"error": "unknown_message", "message_id": message_id}

    def handle_text(self, text: str) -> str:
        try:
            message = json.loads(text)
        except json.JSONDecodeError:
            return json.dumps({"error": "bad_request", "message_id": None})
        if not isinstance(message, dict):
            return json.dumps({"error": "bad_request", "message_id": None})
        return json.dumps(self.handle(message))


@dataclass(frozen=True)
class _GainChange:
    gnb: Gnb
    offset_db: float

    @property
    def label(self) -> str:
        return f"config_set rx_gain_offset_db={self.offset_db}"

    def __call__(self) -> None:
        self.gnb.set_rx_gain_offset(self.offset_db)


class InProcessConnection:
    """Persistent in-process connection to a :class:`RanStatsApi`.

    Messages are JSON-encoded in both directions, like the WebSocket transport.
    """

    def __init__(self, api: RanStatsApi) -> None:
        self._api = api
        self.closed = False

    def request(self, message: Mapping[str, Any]) -> Dict[str, Any]:
        if self.closed:
            raise ConnectionError("connection closed")
        return json.loads(self._api.handle_text(json.dumps(message)))

    def close(self) -> None:
        self.closed = True
