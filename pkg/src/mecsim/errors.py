"""
Exception hierarchy for mecsim.

Every error raised by the simulator derives from :class:`SimError`.  Lookup
failures additionally derive from :class:`KeyError` and argument or state
violations from :class:`ValueError`, so callers that only care about the
built-in categories can keep catching those.
"""

from __future__ import annotations


class SimError(Exception):
    """Base class for all simulator errors."""


# Kernel


class SchedulingInPast(SimError, ValueError):
    """An event was scheduled before the current simulated time."""


# Cluster


class DuplicateChart(SimError, ValueError):
    pass


class UnknownNode(SimError, KeyError):
    pass


class AlreadyRemoved(SimError, ValueError):
    pass


class PortInUse(SimError, ValueError):
    pass


class NoSuchInstance(SimError, KeyError):
    pass


class ServiceUnresolvable(SimError, KeyError):
    """A service name or address does not lead to an installed instance."""


# Core network functions


class DuplicateRegistration(SimError, ValueError):
    pass


class NotRegistered(SimError, KeyError):
    pass


class SbiDeliveryError(SimError):
    """An SBI message was sent from or to an unregistered instance."""


class NoAmf(SimError):
    pass


class AlreadyRegistered(SimError, ValueError):
    pass


class NoUpf(SimError):
    pass


class SessionExists(SimError, ValueError):
    pass


class FlowsStillActive(SimError, ValueError):
    pass


class NoSuchSession(SimError, KeyError):
    pass


class SessionReleased(SimError, ValueError):
    pass


class UpfGone(SimError):
    pass


# RAN


class AmfUnreachable(SimError):
    pass


class NotConnected(SimError):
    pass


class AlreadyAttached(SimError, ValueError):
    pass


class NotAttached(SimError, KeyError):
    pass


# Traffic


class NoSession(SimError):
    pass


class NoServer(SimError):
    pass


class DuplicateFlowId(SimError, ValueError):
    pass


class NoSuchFlow(SimError, KeyError):
    pass


class AlreadyStopped(SimError, ValueError):
    pass


# Monitoring


class ParseError(SimError, ValueError):
    """Malformed exposition text.  ``line`` is 1-based."""

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class TargetDown(SimError):
    pass


class RanApiDown(SimError):
    pass


class OutOfOrderSample(SimError, ValueError):
    pass


class CounterDecreased(SimError, ValueError):
    pass


class EmptySelection(SimError, ValueError):
    pass


class MissingSeries(SimError, KeyError):
    def __init__(self, name: str) -> None:
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"MissingSeries({self.name})"


# Scenarios


class SchemaError(SimError, ValueError):
    """Invalid scenario or chart document.

    ``index`` is the offending event index (``None`` for top-level fields)
    and ``field`` the dotted field path.
    """

    def __init__(self, message: str, index: int | None = None, field: str | None = None) -> None:
        location = []
        if index is not None:
            location.append(f"event {index}")
        if field:
            location.append(f"field '{field}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
        self.index = index
        self.field = field
