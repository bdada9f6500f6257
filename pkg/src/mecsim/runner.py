"""
Scenario execution.

:func:`run` builds a :class:`~mecsim.testbed.Testbed`, schedules the scenario,
advances it in fast or serve mode and writes the artifacts of the run into an
output directory:

* ``tsdb.json``: the series dump (with scenario, seed, events and sessions in ``meta``)
* ``series.csv``: every series as CSV
* ``panel_*.svg``: the dashboard panels of the scenario's experiment
* ``report.json``: the :class:`RunReport`
* ``errors.log``: ERROR-level log records emitted during the run
"""

from __future__ import annotations

import json
import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional

from pydantic import BaseModel, Field

from .checks import AssertionResult, run_check
from .config import SimConfig
from .export import export_csv, write_dashboard
from .kernel import seconds_to_ticks
from .schema import Scenario
from .testbed import Testbed

logger = logging.getLogger(__name__)

Mode = Literal["fast", "serve"]


class RunReport(BaseModel):
    """Outcome of one run.  Every field but ``wall_clock_s`` is determined by scenario, seed and overrides."""

    scenario: str
    seed: int
    mode: Mode = "fast"
    duration_s: float
    overrides: Dict[str, Any] = Field(default_factory=dict)
    assertions: List[AssertionResult] = Field(default_factory=list)
    artifacts: Dict[str, Any] = Field(default_factory=dict, description="Artifact file names in the output directory")
    sessions: List[Dict[str, Any]] = Field(default_factory=list)
    errors: List[Dict[str, Any]] = Field(default_factory=list)
    wall_clock_s: float = 0.0

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)


def merge_overrides(scenario: Scenario, overrides: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """Scenario overrides updated with caller overrides (the caller wins)."""
    merged = dict(scenario.overrides)
    merged.update(overrides or {})
    return dict(sorted(merged.items()))


def build_testbed(scenario: Scenario, seed: int, overrides: Mapping[str, Any], serve: bool = False) -> Testbed:
    """Configured testbed with the scenario's events scheduled.

    Raises
    ------
    KeyError
        If an override names no config field.
    pydantic.ValidationError
        If an override value is invalid.
    """
    config = SimConfig().with_overrides(overrides)
    testbed = Testbed(config, seed=seed, serve=serve)
    testbed.schedule_events(scenario.events)
    return testbed


def dump_meta(scenario: Scenario, seed: int, overrides: Mapping[str, Any], testbed: Testbed) -> Dict[str, Any]:
    return {
        "scenario": scenario.name,
        "seed": seed,
        "duration_s": scenario.duration_s,
        "overrides": dict(overrides),
        "events": [
            {"at_s": e.at_s, "action": e.action, "label": e.label}
            for e in sorted(scenario.events, key=lambda e: e.at_ticks)
        ],
        "sessions": testbed.core.session_table(),
    }


def _error_handler(path: Path) -> logging.Handler:
    handler = logging.FileHandler(path, mode="w", encoding="utf-8")
    handler.setLevel(logging.ERROR)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    return handler


def run(
    scenario: Scenario,
    seed: int = 0,
    mode: Mode = "fast",
    out_dir: Path | str = "out",
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunReport:
    """Run ``scenario`` and write its artifacts to ``out_dir``.

    Action failures never abort the run: they are logged, listed in the
    report and turn the ``no_runtime_errors`` assertion red.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    merged = merge_overrides(scenario, overrides)
    testbed = build_testbed(scenario, seed, merged, serve=mode == "serve")

    root = logging.getLogger("mecsim")
    handler = _error_handler(out / "errors.log")
    root.addHandler(handler)
    started = time.perf_counter()
    try:
        end = seconds_to_ticks(scenario.duration_s)
        if mode == "serve":
            from .serve import serve_run

            serve_run(testbed, end)
        else:
            testbed.run_until(end)
        logger.info("scenario %s finished at t=%.1f s", scenario.name, testbed.now_s())

        meta = dump_meta(scenario, seed, merged, testbed)
        testbed.store.dump(out / "tsdb.json", meta)
        dump = testbed.store.to_document(meta)
        export_csv(dump, out / "series.csv")
        panels = write_dashboard(dump, out, scenario.check)

        assertions: List[AssertionResult] = []
        if scenario.check is not None:
            assertions.extend(run_check(scenario.check, dump))
        errors = [e.to_dict() for e in testbed.errors]
        assertions.append(
            AssertionResult(id="no_runtime_errors", passed=not errors, measured=len(errors), bound="0 errors")
        )
    finally:
        root.removeHandler(handler)
        handler.close()

    report = RunReport(
        scenario=scenario.name,
        seed=seed,
        mode=mode,
        duration_s=scenario.duration_s,
        overrides=merged,
        assertions=assertions,
        artifacts={
            "tsdb": "tsdb.json",
            "csv": "series.csv",
            "panels": [p.name for p in panels],
            "report": "report.json",
            "errors_log": "errors.log",
        },
        sessions=meta["sessions"],
        errors=errors,
        wall_clock_s=round(time.perf_counter() - started, 3),
    )
    (out / "report.json").write_text(json.dumps(report.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8")
    failed = [a.id for a in report.assertions if not a.passed]
    if failed:
        logger.warning("scenario %s: %d failed assertions: %s", scenario.name, len(failed), ", ".join(failed))
    return report
