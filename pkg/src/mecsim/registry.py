"""
Registry module.

This module defines :class:`NfInstance`, a deployed network-function
workload, and :class:`NfRegistry`, the NRF's store of registered instances.
A registry maintains a mapping from instance ids to entries along with
optional metadata (the UPF locality, for example).

Example:

    >>> from mecsim import NfInstance, NfRegistry
    >>> reg = NfRegistry()
    >>> upf = NfInstance(id="upf-edge", nf_type="UPF", node="edge", sbi_address="10.244.2.1:7777")
    >>> reg.register(upf, {"locality": "edge"})
    >>> [i.id for i in reg.discover("UPF", locality="edge")]
    ['upf-edge']

All registry operations are deterministic and do not perform any I/O.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Literal, Mapping, Optional

from .errors import DuplicateRegistration, NotRegistered

logger = logging.getLogger(__name__)

Locality = Literal["core", "edge"]

NF_CATALOG = (
    "NRF", "AMF", "SMF", "UPF", "UDM", "AUSF", "PCF", "UDR", "BSF", "NSSF", "SCP",
    "SAMPLER", "IPERF-SERVER",
)
SECONDARY_NFS = ("UDM", "AUSF", "PCF", "UDR", "BSF", "NSSF", "SCP")


class NfStatus(str, Enum):
    REGISTERED = "registered"
    DEREGISTERED = "deregistered"


@dataclass
class NfInstance:
    """A deployed network-function workload."""

    id: str
    nf_type: str
    node: str
    sbi_address: str
    status: NfStatus = NfStatus.DEREGISTERED
    chart: Optional[str] = None


@dataclass
class NfEntry:
    """Container for a registered instance and its metadata."""

    instance: NfInstance
    order: int
    metadata: Mapping[str, Any] = field(default_factory=dict)


class NfRegistry:
    """The NRF: a registry of network-function instances.

    Instances are discoverable by type (and UPFs by locality) while
    registered.  Discovery results are ordered by registration time.
    Unlike a plain mapping, registering an id twice is an error.
    """

    def __init__(self) -> None:
        self._entries: Dict[str, NfEntry] = {}
        self._order = 0

    def register(self, instance: NfInstance, metadata: Optional[Mapping[str, Any]] = None) -> None:
        """Register ``instance``.

        Raises
        ------
        DuplicateRegistration
            If an instance with the same id is already registered.
        """
        if instance.id in self._entries:
            raise DuplicateRegistration(f"{instance.id} is already registered")
        self._entries[instance.id] = NfEntry(instance, self._order, dict(metadata or {}))
        self._order += 1
        instance.status = NfStatus.REGISTERED
        logger.debug("NRF registered %s (%s) on %s", instance.id, instance.nf_type, instance.node)

    def unregister(self, instance_id: str) -> NfInstance:
        """Remove an instance from the registry.

        Raises
        ------
        NotRegistered
            If the id is not present.
        """
        entry = self._entries.pop(instance_id, None)
        if entry is None:
            raise NotRegistered(instance_id)
        entry.instance.status = NfStatus.DEREGISTERED
        logger.debug("NRF deregistered %s", instance_id)
        return entry.instance

    def get(self, instance_id: str) -> NfInstance:
        try:
            return self._entries[instance_id].instance
        except KeyError:
            raise NotRegistered(instance_id) from None

    def get_metadata(self, instance_id: str) -> Mapping[str, Any]:
        try:
            return self._entries[instance_id].metadata
        except KeyError:
            raise NotRegistered(instance_id) from None

    def is_registered(self, instance_id: str) -> bool:
        return instance_id in self._entries

    def discover(self, nf_type: str, locality: Optional[Locality] = None) -> List[NfInstance]:
        """Return registered instances of ``nf_type`` in registration order."""
        entries = sorted(self._entries.values(), key=lambda e: e.order)
        return [
            e.instance
            for e in entries
            if e.instance.nf_type == nf_type
            and (locality is None or e.metadata.get("locality") == locality)
        ]

    def list(self) -> List[str]:
        """Return the ids of all registered instances."""
        return [e.instance.id for e in sorted(self._entries.values(), key=lambda e: e.order)]
