"""
Document schemas.

This module defines the Pydantic models describing the two structured
documents mecsim reads: charts (a declarative bundle of workloads deployed
as one unit) and scenarios (a timed list of actions).  The models are
JSON serialisable and validate every field before a run starts.
"""

from __future__ import annotations

from typing import Any, Dict, List, Literal, Optional, Type

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .config import NODE_NAMES, TICK_S
from .registry import NF_CATALOG


class WorkloadSpec(BaseModel):
    """One workload of a chart."""

    model_config = ConfigDict(extra="forbid")

    nf_type: str = Field(..., description="Network function type from the catalog")
    node: str = Field(..., description="Target node name")
    cpu_base: float = Field(0.0, ge=0.0, le=1.0, description="CPU fraction while installed")
    memory_bytes: Optional[int] = Field(None, ge=0, description="Constant memory footprint")
    locality: Optional[Literal["core", "edge"]] = Field(
        None, description="UPF locality; derived from the node when omitted"
    )

    @field_validator("nf_type")
    @classmethod
    def validate_nf_type(cls, v: str) -> str:
        if v not in NF_CATALOG:
            raise ValueError(f"unknown nf_type '{v}'")
        return v


class ServiceSpec(BaseModel):
    """A service exposing one workload type on the master address."""

    model_config = ConfigDict(extra="forbid")

    name: str
    nf_type: str
    port: int = Field(..., ge=1, le=65535)


class Chart(BaseModel):
    """A chart document: ``{name, workloads: [...], services?: [...]}``."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., min_length=1)
    workloads: List[WorkloadSpec] = Field(default_factory=list)
    services: List[ServiceSpec] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_services(self) -> "Chart":
        types = {w.nf_type for w in self.workloads}
        for service in self.services:
            if service.nf_type not in types:
                raise ValueError(f"service '{service.name}' exposes {service.nf_type}, not in chart")
        return self

    def nodes(self) -> List[str]:
        return sorted({w.node for w in self.workloads}, key=_node_order)


def _node_order(name: str) -> int:
    return NODE_NAMES.index(name) if name in NODE_NAMES else len(NODE_NAMES)


# Action argument schemas


class _Args(BaseModel):
    model_config = ConfigDict(extra="forbid")


class InstallChartArgs(_Args):
    chart: str = Field(..., description="Bundled chart name or path to a chart document")


class UninstallChartArgs(_Args):
    chart: str = Field(..., description="Name of an installed chart")


class GnbConnectArgs(_Args):
    address: Optional[str] = Field(None, description="AMF service address host:port")


class UeAttachArgs(_Args):
    ue_id: int = Field(..., ge=1)
    snr_ref_db: Optional[float] = None


class StartFlowArgs(_Args):
    flow_id: str
    ue_id: int = Field(..., ge=1)
    direction: Literal["downlink", "uplink"]
    rate_bps: float = Field(..., gt=0.0)
    server: Literal["core", "edge"]


class StopFlowArgs(_Args):
    flow_id: str


class ReassignUpfArgs(_Args):
    ue_id: int = Field(..., ge=1)
    target: Literal["core", "edge"]


class SetRxGainOffsetArgs(_Args):
    offset_db: float


ACTION_SCHEMAS: Dict[str, Type[_Args]] = {
    "install_chart": InstallChartArgs,
    "uninstall_chart": UninstallChartArgs,
    "gnb_connect": GnbConnectArgs,
    "ue_attach": UeAttachArgs,
    "start_flow": StartFlowArgs,
    "stop_flow": StopFlowArgs,
    "reassign_upf": ReassignUpfArgs,
    "set_rx_gain_offset": SetRxGainOffsetArgs,
}

ActionName = Literal[
    "install_chart",
    "uninstall_chart",
    "gnb_connect",
    "ue_attach",
    "start_flow",
    "stop_flow",
    "reassign_upf",
    "set_rx_gain_offset",
]


class ScenarioEvent(BaseModel):
    """A timestamped action driving a run."""

    model_config = ConfigDict(extra="forbid")

    at_s: float = Field(..., ge=0.0, description="Time in seconds, multiple of 0.1")
    action: ActionName
    args: Dict[str, Any] = Field(default_factory=dict)
    label: Optional[str] = Field(None, description="Free-form tag, e.g. '#1.4'")

    @property
    def at_ticks(self) -> int:
        return int(round(self.at_s / TICK_S))

    @field_validator("at_s")
    @classmethod
    def validate_at(cls, v: float) -> float:
        ticks = v / TICK_S
        if abs(ticks - round(ticks)) > 1e-6:
            raise ValueError("at_s must be a multiple of 0.1")
        return v

    @model_validator(mode="after")
    def validate_args(self) -> "ScenarioEvent":
        try:
            parsed = ACTION_SCHEMAS[self.action].model_validate(self.args)
        except ValidationError as exc:
            err = exc.errors()[0]
            where = ".".join(str(p) for p in err["loc"])
            raise ValueError(f"args.{where}: {err['msg']}") from None
        self.args = parsed.model_dump(exclude_none=True)
        return self

    def typed_args(self) -> _Args:
        return ACTION_SCHEMAS[self.action].model_validate(self.args)


class Scenario(BaseModel):
    """A scenario document."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., min_length=1)
    duration_s: float = Field(..., gt=0.0)
    events: List[ScenarioEvent] = Field(default_factory=list)
    overrides: Dict[str, Any] = Field(default_factory=dict)
    check: Optional[Literal[1, 2]] = Field(None, description="Built-in experiment check to evaluate")

    @model_validator(mode="after")
    def validate_times(self) -> "Scenario":
        for event in self.events:
            if event.at_s > self.duration_s:
                raise ValueError(f"event at {event.at_s} s is after duration {self.duration_s} s")
        return self
