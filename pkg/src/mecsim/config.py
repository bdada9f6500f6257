"""
Simulation configuration.

All tunable constants live in one pydantic model, :class:`SimConfig`, split
into sections that mirror the simulator's components.  Defaults reproduce the
built-in experiments; any field can be overridden with a flat
``section.field=value`` mapping (see :meth:`SimConfig.with_overrides`).
"""

from __future__ import annotations

import ipaddress
from typing import Any, Dict, List, Mapping

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

TICK_S = 0.1
"""Length of one simulation tick in seconds."""

NODE_NAMES = ("master", "core", "edge", "monitoring")

DEFAULT_CQI_THRESHOLDS_DB = [
    -6.7, -4.7, -2.3, 0.2, 2.4, 4.3, 5.9, 8.1, 10.3, 11.7, 14.1, 16.3, 18.7, 21.0, 22.7,
]
DEFAULT_EFFICIENCIES = [
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141,
    2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547,
]
DEFAULT_CQI_TO_MCS = [0, 0, 2, 4, 6, 8, 11, 13, 15, 18, 20, 22, 24, 26, 27, 28]


def _is_tick_multiple(seconds: float) -> bool:
    ticks = seconds / TICK_S
    return seconds > 0 and abs(ticks - round(ticks)) < 1e-9


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class ClusterConfig(_Section):
    """Node addresses and the CPU/memory resource model."""

    node_addresses: Dict[str, str] = Field(
        default_factory=lambda: {
            "master": "192.168.1.10",
            "core": "192.168.1.11",
            "edge": "192.168.1.12",
            "monitoring": "192.168.1.13",
        }
    )
    cpu_base: float = Field(0.05, ge=0.0, le=1.0, description="Idle CPU fraction per node")
    transient_height: float = Field(0.3, ge=0.0, le=1.0)
    transient_duration_s: float = Field(5.0, gt=0.0)
    cpu_per_gbps: float = Field(0.15, ge=0.0, description="CPU fraction per forwarded Gbps")
    memory_base_bytes: int = Field(1 << 30, ge=0)
    memory_per_instance_bytes: int = Field(256 << 20, ge=0)

    @field_validator("node_addresses")
    @classmethod
    def validate_nodes(cls, v: Dict[str, str]) -> Dict[str, str]:
        if set(v) != set(NODE_NAMES):
            raise ValueError(f"node_addresses must name exactly {list(NODE_NAMES)}")
        for address in v.values():
            ipaddress.IPv4Address(address)
        return v


class CoreConfig(_Section):
    """UPF address pools and SBI settings."""

    core_pool: str = "10.45.0.0/16"
    edge_pool: str = "10.46.0.0/16"
    first_host: int = Field(2, ge=1)
    sbi_port: int = 7777

    @field_validator("core_pool", "edge_pool")
    @classmethod
    def validate_pool(cls, v: str) -> str:
        ipaddress.IPv4Network(v)
        return v


class RadioConfig(_Section):
    """gNB and link-adaptation parameters."""

    cell_id: int = 1
    amf_address: str = "192.168.1.10:38412"
    bandwidth_hz: float = Field(50e6, gt=0.0)
    overhead_factor: float = Field(0.9, gt=0.0, le=1.0)
    rx_gain_offset_db: float = 0.0
    snr_noise_std_db: float = Field(0.0, ge=0.0)
    snr_ref_db: float = 20.0
    stats_window_s: float = 1.0
    cqi_thresholds_db: List[float] = Field(default_factory=lambda: list(DEFAULT_CQI_THRESHOLDS_DB))
    efficiencies: List[float] = Field(default_factory=lambda: list(DEFAULT_EFFICIENCIES))
    cqi_to_mcs: List[int] = Field(default_factory=lambda: list(DEFAULT_CQI_TO_MCS))

    @field_validator("cqi_thresholds_db", "efficiencies")
    @classmethod
    def validate_increasing(cls, v: List[float]) -> List[float]:
        if len(v) != 15:
            raise ValueError("expected 15 entries (CQI 1..15)")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("entries must be strictly increasing")
        return v

    @field_validator("cqi_to_mcs")
    @classmethod
    def validate_mcs(cls, v: List[int]) -> List[int]:
        if len(v) != 16:
            raise ValueError("expected 16 entries (CQI 0..15)")
        if any(b < a for a, b in zip(v, v[1:])) or min(v) < 0 or max(v) > 28:
            raise ValueError("MCS entries must be non-decreasing within 0..28")
        return v

    @field_validator("stats_window_s")
    @classmethod
    def validate_window(cls, v: float) -> float:
        if not _is_tick_multiple(v):
            raise ValueError("stats window must be a positive multiple of 0.1 s")
        return v


class MonitoringConfig(_Section):
    scrape_interval_s: float = 1.0
    sampler_interval_s: float = 1.0

    @field_validator("scrape_interval_s", "sampler_interval_s")
    @classmethod
    def validate_interval(cls, v: float) -> float:
        if not _is_tick_multiple(v):
            raise ValueError("interval must be a positive multiple of 0.1 s")
        return v


class ServeConfig(_Section):
    host: str = "127.0.0.1"
    node_exporter_base_port: int = 9101
    sampler_port: int = 9110
    ran_api_port: int = 9999
    tick_wall_s: float = Field(0.1, gt=0.0)


class SimConfig(BaseModel):
    """Complete simulator configuration."""

    model_config = ConfigDict(extra="forbid")

    cluster: ClusterConfig = Field(default_factory=ClusterConfig)
    core: CoreConfig = Field(default_factory=CoreConfig)
    radio: RadioConfig = Field(default_factory=RadioConfig)
    monitoring: MonitoringConfig = Field(default_factory=MonitoringConfig)
    serve: ServeConfig = Field(default_factory=ServeConfig)

    @model_validator(mode="after")
    def validate_pools_disjoint(self) -> "SimConfig":
        core = ipaddress.IPv4Network(self.core.core_pool)
        edge = ipaddress.IPv4Network(self.core.edge_pool)
        if core.overlaps(edge):
            raise ValueError("core and edge pools overlap")
        return self

    def with_overrides(self, overrides: Mapping[str, Any] | None) -> "SimConfig":
        """Return a copy with ``section.field`` (or unique bare ``field``) keys replaced.

        Raises
        ------
        KeyError
            If a key names no field, or a bare key is ambiguous.
        pydantic.ValidationError
            If a value fails validation.
        """
        data = self.model_dump()
        for key, value in (overrides or {}).items():
            section, field = resolve_override_key(key)
            data[section][field] = value
        return SimConfig.model_validate(data)


def resolve_override_key(key: str) -> tuple[str, str]:
    """Map an override key onto ``(section, field)``."""
    sections = SimConfig.model_fields
    if "." in key:
        section, field = key.split(".", 1)
        if section not in sections:
            raise KeyError(f"unknown config section '{section}'")
        if field not in sections[section].annotation.model_fields:
            raise KeyError(f"unknown field '{field}' in section '{section}'")
        return section, field
    matches = [name for name, info in sections.items() if key in info.annotation.model_fields]
    if not matches:
        raise KeyError(f"unknown config field '{key}'")
    if len(matches) > 1:
        raise KeyError(f"ambiguous config field '{key}', use one of {[f'{m}.{key}' for m in matches]}")
    return matches[0], key


def parse_override_items(items: List[str]) -> Dict[str, str]:
    """Split ``k=v`` strings from the command line into a mapping."""
    result: Dict[str, str] = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"override '{item}' is not of the form key=value")
        result[key.strip()] = value.strip()
    return result
