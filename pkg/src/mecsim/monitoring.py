"""
Monitoring plane.

One node exporter per cluster node plus the RAN sampler, each behind a scrape
target.  Every scrape renders the exporter's registry to exposition text,
parses it back and appends the samples to the :class:`~mecsim.tsdb.SeriesStore`
together with an ``up{target}`` sample.  Sampler polls and scrapes run as the
last stage of a tick, at ticks ``k * interval`` with ``k >= 1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Protocol

from prometheus_client import CollectorRegistry

from .cluster import Cluster
from .config import NODE_NAMES, MonitoringConfig
from .errors import RanApiDown, TargetDown
from .exporters import NodeExporter, SamplerExporter
from .exposition import parse_exposition, render_exposition
from .kernel import SimTime, seconds_to_ticks
from .ran import InProcessConnection, RanStatsApi
from .tsdb import SeriesStore

logger = logging.getLogger(__name__)


class Exporter(Protocol):
    target_id: str
    registry: CollectorRegistry

    def is_up(self) -> bool: ...


@dataclass
class ScrapeTarget:
    target_id: str
    exporter: Exporter
    interval_ticks: int = 10

    def __post_init__(self) -> None:
        if self.interval_ticks < 1:
            raise ValueError("scrape interval must be at least one tick")

    def due(self, t: SimTime) -> bool:
        return t > 0 and t % self.interval_ticks == 0


def scrape(target: ScrapeTarget, store: SeriesStore, t: SimTime) -> int:
    """Scrape ``target`` into ``store`` at tick ``t``; returns samples appended.

    ``up{target}`` is always appended and is not part of the count.

    Raises
    ------
    TargetDown
        If the exporter is unreachable; ``up`` is recorded as 0.
    """
    labels = {"target": target.target_id}
    if not target.exporter.is_up():
        store.append("up", labels, t, 0.0)
        raise TargetDown(target.target_id)
    samples = parse_exposition(render_exposition(target.exporter.registry), timestamp=t)
    count = store.append_samples(samples, t)
    store.append("up", labels, t, 1.0)
    return count


class MonitoringPlane:
    """Exporters, scrape targets and the series store of one run."""

    def __init__(
        self,
        cluster: Cluster,
        api: RanStatsApi,
        config: Optional[MonitoringConfig] = None,
        store: Optional[SeriesStore] = None,
        refresh_every_tick: bool = False,
    ) -> None:
        self.config = config or MonitoringConfig()
        self.cluster = cluster
        self.store = store if store is not None else SeriesStore()
        self.refresh_every_tick = refresh_every_tick
        self.node_exporters: Dict[str, NodeExporter] = {n: NodeExporter(cluster, n) for n in NODE_NAMES}
        self.sampler = SamplerExporter(cluster, lambda: InProcessConnection(api))
        self._sampler_ticks = seconds_to_ticks(self.config.sampler_interval_s)
        scrape_ticks = seconds_to_ticks(self.config.scrape_interval_s)
        self.targets: List[ScrapeTarget] = [
            ScrapeTarget(e.target_id, e, scrape_ticks) for e in self.node_exporters.values()
        ]
        self.targets.append(ScrapeTarget(self.sampler.target_id, self.sampler, scrape_ticks))
        self.failures: List[tuple[SimTime, str]] = []

    def target(self, target_id: str) -> ScrapeTarget:
        for target in self.targets:
            if target.target_id == target_id:
                return target
        raise KeyError(target_id)

    def refresh(self, t: SimTime) -> None:
        for exporter in self.node_exporters.values():
            exporter.refresh(t)

    def sampler_poll(self, t: SimTime) -> int:
        return self.sampler.sampler_poll(t)

    def on_tick(self, t: SimTime) -> None:
        """Per-tick stage: refresh snapshots, poll the sampler, scrape due targets."""
        due = [target for target in self.targets if target.due(t)]
        if self.refresh_every_tick or due:
            self.refresh(t)
        if t > 0 and t % self._sampler_ticks == 0:
            try:
                self.sampler_poll(t)
            except RanApiDown as exc:
                logger.debug("sampler poll at tick %d: %s", t, exc)
        for target in due:
            try:
                scrape(target, self.store, t)
            except TargetDown:
                logger.debug("target %s down at tick %d", target.target_id, t)
                self.failures.append((t, target.target_id))
