"""
5G core network functions.

The subset of the service-based architecture exercised by the testbed: the
NRF registry, UE registration at the AMF, PDU session management at the SMF
with static locality-based UPF selection, and UPF packet anchors with one IP
pool per locality.  NFs talk through an in-process SBI bus with REST-like
verbs; nothing is encoded on a wire.
"""

from __future__ import annotations

import ipaddress
import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Literal, Mapping, Optional, Set

from .cluster import Cluster
from .config import CoreConfig
from .errors import (
    AlreadyRegistered,
    FlowsStillActive,
    NoAmf,
    NoSuchSession,
    NotRegistered,
    NoUpf,
    SbiDeliveryError,
    SessionExists,
    SessionReleased,
    UpfGone,
)
from .kernel import SimTime, ticks_to_seconds
from .registry import Locality, NfInstance, NfRegistry
from .schema import Chart

logger = logging.getLogger(__name__)

Direction = Literal["downlink", "uplink"]


class SessionState(str, Enum):
    ACTIVE = "active"
    RELEASED = "released"


@dataclass
class PduSession:
    """A UE's user-plane anchoring at one UPF."""

    session_id: int
    ue_id: int
    upf_id: str
    locality: Locality
    ue_ip: str
    state: SessionState = SessionState.ACTIVE
    established_at: SimTime = 0
    released_at: Optional[SimTime] = None


@dataclass
class UpfState:
    """Per-locality user-plane state; survives UPF reinstalls so IPs are never reused."""

    locality: Locality
    ip_pool: ipaddress.IPv4Network
    next_host: int
    instance_id: Optional[str] = None
    anchored: Set[int] = field(default_factory=set)
    forwarded_bytes: int = 0

    def allocate(self) -> str:
        if self.next_host >= self.ip_pool.num_addresses - 1:
            raise NoUpf(f"{self.locality} pool {self.ip_pool} exhausted")
        address = self.ip_pool.network_address + self.next_host
        self.next_host += 1
        return str(address)


@dataclass(frozen=True)
class SbiMessage:
    correlation_id: int
    requester: str
    target: str
    verb: str
    path: str
    body: Mapping[str, Any]


@dataclass(frozen=True)
class SbiResponse:
    correlation_id: int
    status: int
    body: Mapping[str, Any]


SbiHandler = Callable[[SbiMessage], SbiResponse]


class SbiBus:
    """In-simulator request/response bus between registered NF instances."""

    def __init__(self, nrf: NfRegistry) -> None:
        self._nrf = nrf
        self._handlers: Dict[str, SbiHandler] = {}
        self._ids = itertools.count(1)
        self.log: List[tuple[SbiMessage, SbiResponse]] = []

    def bind(self, nf_type: str, handler: SbiHandler) -> None:
        self._handlers[nf_type] = handler

    def request(
        self, requester: str, target: str, verb: str, path: str, body: Optional[Mapping[str, Any]] = None
    ) -> SbiResponse:
        """Deliver a request from instance ``requester`` to an instance id or NF type.

        Raises
        ------
        SbiDeliveryError
            If the requester is not registered or no registered instance serves ``target``.
        """
        if not self._nrf.is_registered(requester):
            raise SbiDeliveryError(f"requester {requester} is not registered")
        if self._nrf.is_registered(target):
            instance = self._nrf.get(target)
        else:
            found = self._nrf.discover(target)
            if not found:
                raise SbiDeliveryError(f"no registered instance serves {target}")
            instance = found[0]
        handler = self._handlers.get(instance.nf_type)
        if handler is None:
            raise SbiDeliveryError(f"{instance.nf_type} exposes no SBI handler")
        message = SbiMessage(next(self._ids), requester, instance.id, verb, path, dict(body or {}))
        response = handler(message)
        self.log.append((message, response))
        logger.debug("SBI %s %s %s -> %s: %d", verb, path, requester, instance.id, response.status)
        return response


@dataclass
class UeRegistration:
    """AMF-side UE context."""

    ue_id: int
    amf_id: str
    registered_at: SimTime
    session: Optional[PduSession] = None


class Core5G:
    """The 5GC control and user plane, driven by cluster lifecycle events."""

    def __init__(
        self,
        cluster: Cluster,
        config: Optional[CoreConfig] = None,
        clock: Optional[Callable[[], SimTime]] = None,
    ) -> None:
        self.config = config or CoreConfig()
        self.cluster = cluster
        self._clock = clock or (lambda: 0)
        self.nrf = NfRegistry()
        self.bus = SbiBus(self.nrf)
        self.bus.bind("NRF", self._handle_nrf)
        self.bus.bind("SMF", self._handle_smf)
        self.upfs: Dict[str, UpfState] = {
            "core": UpfState("core", ipaddress.IPv4Network(self.config.core_pool), self.config.first_host),
            "edge": UpfState("edge", ipaddress.IPv4Network(self.config.edge_pool), self.config.first_host),
        }
        self.sessions: Dict[int, PduSession] = {}
        self._active: Dict[int, int] = {}
        self._ues: Dict[int, UeRegistration] = {}
        self._session_ids = itertools.count(1)
        self._flow_guard: Callable[[int], bool] = lambda ue_id: False
        cluster.add_listener(self)

    def set_flow_guard(self, guard: Callable[[int], bool]) -> None:
        """Install the predicate telling whether a UE still has running flows."""
        self._flow_guard = guard

    # Cluster notifications

    def instances_installed(self, chart: Chart, instances: List[NfInstance]) -> None:
        if not any(i.nf_type == "NRF" for i in instances):
            return
        ordered = sorted(instances, key=lambda i: i.nf_type != "NRF")
        for instance in ordered:
            locality = None
            if instance.nf_type == "UPF":
                workload = self.cluster.workload(instance.id)
                locality = workload.locality or ("edge" if instance.node == "edge" else "core")
            self.nrf_register(instance, locality)

    def instances_removed(self, instances: List[NfInstance]) -> None:
        for instance in instances:
            if instance.nf_type == "UPF":
                anchored = [s for s in self.sessions.values() if s.upf_id == instance.id]
                for session in anchored:
                    if session.state is SessionState.ACTIVE:
                        self._release(session)
                for state in self.upfs.values():
                    if state.instance_id == instance.id:
                        state.instance_id = None
            if instance.nf_type == "AMF":
                dropped = [ue for ue, reg in self._ues.items() if reg.amf_id == instance.id]
                for ue_id in dropped:
                    del self._ues[ue_id]
                if dropped:
                    logger.info("AMF %s removed, dropped UE contexts %s", instance.id, dropped)
            if self.nrf.is_registered(instance.id):
                self.nrf.unregister(instance.id)

    # NRF

    def nrf_register(self, instance: NfInstance, locality: Optional[Locality] = None) -> None:
        """Make ``instance`` discoverable; UPFs carry their locality."""
        metadata = {"locality": locality} if locality else {}
        self.nrf.register(instance, metadata)
        if instance.nf_type == "UPF" and locality:
            state = self.upfs[locality]
            if state.instance_id is None:
                state.instance_id = instance.id
        logger.info("registered %s (%s)%s", instance.id, instance.nf_type, f" [{locality}]" if locality else "")

    def nrf_deregister(self, instance_id: str) -> None:
        self.nrf.unregister(instance_id)
        for state in self.upfs.values():
            if state.instance_id == instance_id:
                state.instance_id = None

    def nrf_discover(self, nf_type: str, locality: Optional[Locality] = None) -> List[NfInstance]:
        return self.nrf.discover(nf_type, locality)

    def _handle_nrf(self, message: SbiMessage) -> SbiResponse:
        query = message.body
        found = self.nrf.discover(query["target-nf-type"], query.get("locality"))
        return SbiResponse(message.correlation_id, 200, {"nfInstances": [i.id for i in found]})

    # AMF

    def amf_register_ue(self, ue_id: int) -> UeRegistration:
        """Register a UE and establish its default session on the core UPF.

        Raises
        ------
        NoAmf
            If no AMF is registered or none is exposed as a service.
        AlreadyRegistered
            If the UE is already registered.
        """
        amfs = self.nrf.discover("AMF")
        exposed = {e.instance_id for e in self.cluster.exposures()}
        amf = next((a for a in amfs if a.id in exposed), None)
        if amf is None:
            raise NoAmf("no exposed AMF is registered")
        if ue_id in self._ues:
            raise AlreadyRegistered(f"UE {ue_id}")
        registration = UeRegistration(ue_id, amf.id, self._clock())
        self._ues[ue_id] = registration
        try:
            response = self.bus.request(
                amf.id, "SMF", "POST", "/nsmf-pdusession/v1/sm-contexts", {"ue_id": ue_id, "selector": "core"}
            )
        except Exception:
            del self._ues[ue_id]
            raise
        registration.session = self.sessions[response.body["session_id"]]
        logger.info("UE %d registered at %s", ue_id, amf.id)
        return registration

    def amf_deregister_ue(self, ue_id: int) -> None:
        """Drop a UE context, releasing its active session if any."""
        registration = self._ues.get(ue_id)
        if registration is None:
            raise NotRegistered(f"UE {ue_id}")
        session = self.active_session(ue_id)
        if session is not None:
            self._release(session)
        del self._ues[ue_id]
        logger.info("UE %d deregistered", ue_id)

    def is_registered(self, ue_id: int) -> bool:
        return ue_id in self._ues

    def registered_ues(self) -> List[int]:
        return sorted(self._ues)

    # SMF

    def _handle_smf(self, message: SbiMessage) -> SbiResponse:
        session = self._establish(message.body["ue_id"], message.body["selector"], message.target)
        return SbiResponse(message.correlation_id, 201, {"session_id": session.session_id, "ue_ip": session.ue_ip})

    def smf_establish_session(self, ue_id: int, selector: Locality) -> PduSession:
        """Establish a PDU session for a registered UE at the UPF of ``selector``.

        Raises
        ------
        NotRegistered
            If the UE is not registered.
        SessionExists
            If the UE already has an active session.
        NoUpf
            If no UPF of that locality is registered.
        """
        smf = self._smf()
        return self._establish(ue_id, selector, smf.id)

    def _smf(self) -> NfInstance:
        smfs = self.nrf.discover("SMF")
        if not smfs:
            raise SbiDeliveryError("no SMF registered")
        return smfs[0]

    def _establish(self, ue_id: int, selector: Locality, smf_id: str) -> PduSession:
        if ue_id not in self._ues:
            raise NotRegistered(f"UE {ue_id}")
        if ue_id in self._active:
            raise SessionExists(f"UE {ue_id} already has session {self._active[ue_id]}")
        upf = self._select_upf(smf_id, selector)
        state = self.upfs[selector]
        session = PduSession(
            session_id=next(self._session_ids),
            ue_id=ue_id,
            upf_id=upf,
            locality=selector,
            ue_ip=state.allocate(),
            established_at=self._clock(),
        )
        self.sessions[session.session_id] = session
        self._active[ue_id] = session.session_id
        state.anchored.add(session.session_id)
        self._ues[ue_id].session = session
        logger.info("session %d: UE %d anchored at %s with %s", session.session_id, ue_id, upf, session.ue_ip)
        return session

    def _select_upf(self, smf_id: str, selector: Locality) -> str:
        response = self.bus.request(
            smf_id, "NRF", "GET", "/nnrf-disc/v1/nf-instances", {"target-nf-type": "UPF", "locality": selector}
        )
        candidates = response.body["nfInstances"]
        if not candidates:
            raise NoUpf(f"no {selector} UPF registered")
        return candidates[0]

    def smf_reassign_upf(self, ue_id: int, target: Locality) -> PduSession:
        """Release the UE's session and re-establish it at the ``target`` UPF.

        Raises
        ------
        NoSuchSession
            If the UE has no active session.
        FlowsStillActive
            If the UE still has running flows.
        NoUpf
            If no UPF of the target locality is registered; the old session is kept.
        """
        session = self.active_session(ue_id)
        if session is None:
            raise NoSuchSession(f"UE {ue_id} has no active session")
        if self._flow_guard(ue_id):
            raise FlowsStillActive(f"UE {ue_id} has running flows")
        smf = self._smf()
        self._select_upf(smf.id, target)
        self._release(session)
        new = self._establish(ue_id, target, smf.id)
        logger.info("UE %d re-selected %s -> %s (%s -> %s)", ue_id, session.upf_id, new.upf_id, session.ue_ip, new.ue_ip)
        return new

    def release_session(self, session_id: int) -> PduSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise NoSuchSession(str(session_id))
        if session.state is SessionState.RELEASED:
            raise SessionReleased(str(session_id))
        self._release(session)
        return session

    def _release(self, session: PduSession) -> None:
        session.state = SessionState.RELEASED
        session.released_at = self._clock()
        self.upfs[session.locality].anchored.discard(session.session_id)
        if self._active.get(session.ue_id) == session.session_id:
            del self._active[session.ue_id]
        registration = self._ues.get(session.ue_id)
        if registration is not None and registration.session is session:
            registration.session = None
        logger.info("session %d released (UE %d, %s)", session.session_id, session.ue_id, session.ue_ip)

    def active_session(self, ue_id: int) -> Optional[PduSession]:
        session_id = self._active.get(ue_id)
        return self.sessions[session_id] if session_id is not None else None

    def session_table(self) -> List[Dict[str, Any]]:
        """All sessions of the run in creation order, JSON-friendly."""
        return [
            {
                "session_id": s.session_id,
                "ue_id": s.ue_id,
                "upf": s.upf_id,
                "locality": s.locality,
                "ue_ip": s.ue_ip,
                "state": s.state.value,
                "established_s": ticks_to_seconds(s.established_at),
                "released_s": None if s.released_at is None else ticks_to_seconds(s.released_at),
            }
            for s in sorted(self.sessions.values(), key=lambda s: s.session_id)
        ]

    # UPF

    def upf_forward(self, session_id: int, nbytes: int, direction: Direction) -> int:
        """Forward ``nbytes`` on a session and account them at the UPF's host node.

        Raises
        ------
        NoSuchSession
            If the session id is unknown.
        SessionReleased
            If the session is no longer active.
        UpfGone
            If the anchoring UPF has been removed.
        """
        session = self.sessions.get(session_id)
        if session is None:
            raise NoSuchSession(str(session_id))
        if session.state is SessionState.RELEASED:
            raise SessionReleased(str(session_id))
        upf = self.cluster.instances.get(session.upf_id)
        if upf is None:
            raise UpfGone(session.upf_id)
        if nbytes == 0:
            return 0
        self.upfs[session.locality].forwarded_bytes += nbytes
        if direction == "downlink":
            self.cluster.account_traffic(upf.node, nbytes, 0)
        else:
            self.cluster.account_traffic(upf.node, 0, nbytes)
        return nbytes
