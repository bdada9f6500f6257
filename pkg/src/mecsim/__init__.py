"""
mecsim
======

A deterministic discrete-event simulator of a MEC-enabled, cloud-native 5G
testbed together with its end-to-end monitoring pipeline.  A four-node
cluster hosts a 5G core (with a core and an edge UPF), a single-cell gNB
serves UEs with SNR-driven link adaptation, iperf-like flows move bytes
through the user plane, and exporters feed a scraper and an in-memory
time-series store from which CSV files, SVG panels and acceptance checks are
produced.

The public API exports the most commonly used classes and functions for
convenience.
"""

from .checks import AssertionResult, check_experiment1, check_experiment2
from .cluster import Cluster, DeploymentHandle
from .config import SimConfig
from .core import Core5G, PduSession
from .errors import SimError
from .export import export_csv, read_csv, render_panel_svg
from .exposition import Sample, parse_exposition, render_exposition
from .kernel import Kernel, SeededRng
from .loaders import load_chart, load_scenario, parse_chart, parse_scenario
from .monitoring import MonitoringPlane, ScrapeTarget, scrape
from .ran import Gnb, RanStatsApi
from .registry import NfInstance, NfRegistry
from .runner import RunReport, run
from .schema import Chart, Scenario, ScenarioEvent
from .testbed import Testbed
from .tools import counter_rate, series_frame
from .traffic import FlowSpec, TrafficGenerator
from .tsdb import SeriesStore

__all__ = [
    "AssertionResult",
    "Chart",
    "Cluster",
    "Core5G",
    "DeploymentHandle",
    "FlowSpec",
    "Gnb",
    "Kernel",
    "MonitoringPlane",
    "NfInstance",
    "NfRegistry",
    "PduSession",
    "RanStatsApi",
    "RunReport",
    "Sample",
    "Scenario",
    "ScenarioEvent",
    "ScrapeTarget",
    "SeededRng",
    "SeriesStore",
    "SimConfig",
    "SimError",
    "Testbed",
    "TrafficGenerator",
    "check_experiment1",
    "check_experiment2",
    "counter_rate",
    "export_csv",
    "load_chart",
    "load_scenario",
    "parse_chart",
    "parse_exposition",
    "parse_scenario",
    "read_csv",
    "render_exposition",
    "render_panel_svg",
    "run",
    "scrape",
    "series_frame",
]
