"""
Acceptance checks for the two built-in experiments.

Both checks are pure functions of a series dump: the same dump always yields
the same verdicts.  Windows and bounds follow the experiment timelines; gain
event times for experiment 2 come from the dump's event metadata.
"""

from __future__ import annotations

import logging
from typing import Any, Dict, List, Mapping, Optional

import pandas as pd
from pydantic import BaseModel, Field

from .errors import MissingSeries
from .tools import counter_rate, segment_medians, series_frame, stat, window

logger = logging.getLogger(__name__)

RATE_TOLERANCE = 0.05
EDGE_IDLE_SLACK_BPS = 1e6
TRANSIENT_MARGIN = 0.2
SNR_STEP_DB = -4.0
SNR_TOLERANCE_DB = 0.1
SNR_NOISY_TOLERANCE_DB = 1.5
DEFAULT_GAIN_EVENTS_S = (40.0, 70.0, 100.0)
UL_OFFERED_BPS = 120e6
UL_FINAL_CAPACITY_BPS = 66_447_000.0
UL_STEADY_FROM_S = 15.0


class AssertionResult(BaseModel):
    """Outcome of one acceptance assertion."""

    id: str
    passed: bool
    measured: Optional[Any] = None
    bound: Optional[str] = Field(None, description="Human-readable pass condition")


def _within(value: Optional[float], target: float, tolerance: float = RATE_TOLERANCE) -> bool:
    return value is not None and abs(value - target) <= tolerance * target


def _rate_mean(dump: Mapping[str, Any], name: str, labels: Dict[str, str], t0: float, t1: float) -> Optional[float]:
    rates = counter_rate(series_frame(dump, name, labels))
    return stat(window(rates, t0, t1)["value"], "mean")


def _value_stat(
    dump: Mapping[str, Any], name: str, labels: Dict[str, str], t0: float, t1: float, metric: str = "mean"
) -> Optional[float]:
    return stat(window(series_frame(dump, name, labels), t0, t1)["value"], metric)


def _rate_check(id_: str, measured: Optional[float], target: float) -> AssertionResult:
    return AssertionResult(
        id=id_,
        passed=_within(measured, target),
        measured=measured,
        bound=f"{target:.0f} bps +/-{RATE_TOLERANCE:.0%}",
    )


def check_experiment1(dump: Mapping[str, Any]) -> List[AssertionResult]:
    """UPF re-selection: node transmit rates, UE bitrates, UE2 address change and CPU transients.

    Raises
    ------
    MissingSeries
        If a metric the check needs is absent from the dump.
    """
    tx = "node_network_transmit_bytes_total"
    results: List[AssertionResult] = []

    core = _rate_mean(dump, tx, {"node": "core"}, 35, 55)
    edge = _rate_mean(dump, tx, {"node": "edge"}, 35, 55)
    results.append(_rate_check("1a_core_tx", core, 100e6))
    results.append(
        AssertionResult(
            id="1a_edge_tx_idle",
            passed=edge is not None and edge <= EDGE_IDLE_SLACK_BPS,
            measured=edge,
            bound=f"<= {EDGE_IDLE_SLACK_BPS:.0f} bps",
        )
    )

    results.append(_rate_check("1b_core_tx", _rate_mean(dump, tx, {"node": "core"}, 65, 85), 200e6))
    for ue in ("1", "2"):
        dl = _value_stat(dump, "ran_ue_downlink_bitrate_bps", {"ue": ue}, 65, 85)
        results.append(_rate_check(f"1b_ue{ue}_dl_bitrate", dl, 100e6))

    results.append(_rate_check("1c_core_tx", _rate_mean(dump, tx, {"node": "core"}, 105, 125), 100e6))
    results.append(_rate_check("1c_edge_tx", _rate_mean(dump, tx, {"node": "edge"}, 105, 125), 100e6))

    sessions = [s for s in dump.get("meta", {}).get("sessions", []) if s.get("ue_id") == 2]
    addresses = [s["ue_ip"] for s in sorted(sessions, key=lambda s: s["session_id"])]
    results.append(
        AssertionResult(
            id="1d_ue2_reselection",
            passed=addresses[:2] == ["10.45.0.3", "10.46.0.2"],
            measured=addresses,
            bound="10.45.0.3 -> 10.46.0.2",
        )
    )

    cpu = series_frame(dump, "node_cpu_utilization_ratio", {"node": "core"})
    baseline = stat(cpu["value"], "first")
    for id_, (t0, t1) in (("1e_install_transient", (10, 15)), ("1e_termination_transient", (140, 145))):
        peak = stat(window(cpu, t0, t1)["value"], "max")
        passed = baseline is not None and peak is not None and peak > baseline + TRANSIENT_MARGIN
        bound = f"> {baseline + TRANSIENT_MARGIN:.3f}" if baseline is not None else "> baseline + 0.2"
        results.append(AssertionResult(id=id_, passed=passed, measured=peak, bound=bound))
    return results


def _gain_event_times(dump: Mapping[str, Any]) -> List[float]:
    events = dump.get("meta", {}).get("events", [])
    times = sorted(float(e["at_s"]) for e in events if e.get("action") == "set_rx_gain_offset")
    return times or list(DEFAULT_GAIN_EVENTS_S)


def _noise_enabled(dump: Mapping[str, Any]) -> bool:
    overrides = dump.get("meta", {}).get("overrides", {})
    for key, value in overrides.items():
        if key.split(".")[-1] == "snr_noise_std_db":
            try:
                return float(value) > 0
            except (TypeError, ValueError):
                return False
    return False


def _non_increasing(values: List[Optional[float]]) -> bool:
    present = [v for v in values if v is not None]
    return len(present) == len(values) and all(b <= a for a, b in zip(present, present[1:]))


def _samples_non_increasing(frame: pd.DataFrame, t0: float = 0.0) -> bool:
    values = frame[frame["t"] >= t0].sort_values("t", kind="stable")["value"]
    return bool(values.is_monotonic_decreasing)


def check_experiment2(dump: Mapping[str, Any]) -> List[AssertionResult]:
    """UE mobility: SNR steps, non-increasing MCS/CQI and the uplink bitrate drop.

    Raises
    ------
    MissingSeries
        If a metric the check needs is absent from the dump.
    """
    results: List[AssertionResult] = []
    gains = _gain_event_times(dump)
    end = float(dump.get("meta", {}).get("duration_s", 0.0))
    noisy = _noise_enabled(dump)
    tolerance = SNR_NOISY_TOLERANCE_DB if noisy else SNR_TOLERANCE_DB
    ue = {"ue": "1"}

    snr = series_frame(dump, "ran_ue_snr_db", ue)
    end = end or (float(snr["t"].max()) if not snr.empty else 0.0)
    for i, t in enumerate(gains, start=1):
        before = stat(window(snr, t - 5, t, "left")["value"], "mean")
        after = stat(window(snr, t, t + 5, "right")["value"], "mean")
        step = None if before is None or after is None else after - before
        results.append(
            AssertionResult(
                id=f"2a_snr_step_{i}",
                passed=step is not None and abs(step - SNR_STEP_DB) <= tolerance,
                measured=step,
                bound=f"{SNR_STEP_DB} dB +/-{tolerance} dB",
            )
        )

    # without noise every sample is held to the ordering
    monotone = "segment medians" if noisy else "samples"
    for metric in ("ran_ue_mcs_ul", "ran_ue_cqi"):
        frame = series_frame(dump, metric, ue)
        medians = segment_medians(frame, gains, end)
        passed = _non_increasing(medians) and medians[-1] < medians[0]
        if not noisy:
            passed = passed and _samples_non_increasing(frame)
        results.append(
            AssertionResult(
                id=f"2b_{metric.removeprefix('ran_ue_')}_non_increasing",
                passed=passed,
                measured=medians,
                bound=f"{monotone} non-increasing, final < initial",
            )
        )

    ul = series_frame(dump, "ran_ue_uplink_bitrate_bps", ue)
    final = gains[-1]
    before = stat(window(ul, UL_STEADY_FROM_S, final, "left")["value"], "mean")
    after = stat(window(ul, final + 5, end)["value"], "mean")
    results.append(_rate_check("2c_ul_before_final_step", before, UL_OFFERED_BPS))
    results.append(_rate_check("2c_ul_after_final_step", after, UL_FINAL_CAPACITY_BPS))
    medians = segment_medians(ul, gains, end)
    passed = _non_increasing(medians)
    if not noisy:
        passed = passed and _samples_non_increasing(ul, UL_STEADY_FROM_S)
    results.append(
        AssertionResult(
            id="2c_ul_non_increasing",
            passed=passed,
            measured=medians,
            bound=f"{monotone} non-increasing",
        )
    )
    return results


CHECKS = {1: check_experiment1, 2: check_experiment2}


def run_check(experiment: int, dump: Mapping[str, Any]) -> List[AssertionResult]:
    """Evaluate a built-in check; a missing series becomes one failed assertion."""
    try:
        return CHECKS[experiment](dump)
    except MissingSeries as exc:
        logger.error("check %d: %s", experiment, exc)
        return [AssertionResult(id="series_present", passed=False, measured=exc.name, bound=str(exc))]
