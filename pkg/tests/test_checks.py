import pytest

from mecsim import load_scenario, run
from mecsim.checks import check_experiment1, check_experiment2, run_check
from mecsim.errors import MissingSeries

EXPERIMENT1_IDS = [
    "1a_core_tx",
    "1a_edge_tx_idle",
    "1b_core_tx",
    "1b_ue1_dl_bitrate",
    "1b_ue2_dl_bitrate",
    "1c_core_tx",
    "1c_edge_tx",
    "1d_ue2_reselection",
    "1e_install_transient",
    "1e_termination_transient",
]
EXPERIMENT2_IDS = [
    "2a_snr_step_1",
    "2a_snr_step_2",
    "2a_snr_step_3",
    "2b_mcs_ul_non_increasing",
    "2b_cqi_non_increasing",
    "2c_ul_before_final_step",
    "2c_ul_after_final_step",
    "2c_ul_non_increasing",
]


def test_experiment1_nominal(experiment1):
    _, dump, _ = experiment1
    results = check_experiment1(dump)
    assert [r.id for r in results] == EXPERIMENT1_IDS
    assert [r.id for r in results if not r.passed] == []
    by_id = {r.id: r for r in results}
    assert by_id["1a_core_tx"].measured == pytest.approx(100e6, rel=0.01)
    assert by_id["1b_core_tx"].measured == pytest.approx(200e6, rel=0.01)
    assert by_id["1d_ue2_reselection"].measured == ["10.45.0.3", "10.46.0.2"]


def test_experiment2_nominal(experiment2):
    _, dump, _ = experiment2
    results = check_experiment2(dump)
    assert [r.id for r in results] == EXPERIMENT2_IDS
    assert [r.id for r in results if not r.passed] == []
    by_id = {r.id: r for r in results}
    assert by_id["2a_snr_step_1"].measured == pytest.approx(-4.0)
    assert by_id["2b_mcs_ul_non_increasing"].measured == [26, 22, 20, 13]
    assert by_id["2c_ul_after_final_step"].measured == pytest.approx(66_447_000, rel=1e-6)


def test_checks_are_pure(experiment2):
    _, dump, _ = experiment2
    assert check_experiment2(dump) == check_experiment2(dump)


def test_wrong_experiment_fails_without_crashing(experiment2):
    _, dump, _ = experiment2
    results = run_check(1, dump)
    assert [r.id for r in results] == EXPERIMENT1_IDS
    assert not all(r.passed for r in results)


def test_empty_dump_reports_missing_series():
    with pytest.raises(MissingSeries):
        check_experiment1({"meta": {}, "series": []})
    (result,) = run_check(2, {"meta": {}, "series": []})
    assert (result.id, result.passed, result.measured) == ("series_present", False, "ran_ue_snr_db")


def test_dump_without_sampler_series(experiment1):
    _, dump, _ = experiment1
    stripped = {"meta": dump["meta"], "series": [s for s in dump["series"] if not s["name"].startswith("ran_ue_")]}
    with pytest.raises(MissingSeries) as excinfo:
        check_experiment1(stripped)
    assert excinfo.value.name == "ran_ue_downlink_bitrate_bps"


def test_noisy_snr_steps(tmp_path):
    report = run(load_scenario("experiment2"), seed=42, out_dir=tmp_path, overrides={"radio.snr_noise_std_db": 0.5})
    by_id = {a.id: a for a in report.assertions}
    for id_ in ("2a_snr_step_1", "2a_snr_step_2", "2a_snr_step_3", "2b_mcs_ul_non_increasing", "2b_cqi_non_increasing"):
        assert by_id[id_].passed, by_id[id_]
    assert by_id["2a_snr_step_1"].bound == "-4.0 dB +/-1.5 dB"


def _with_mcs_spike(dump, overrides):
    series = []
    for entry in dump["series"]:
        if entry["name"] == "ran_ue_mcs_ul" and entry["labels"] == {"ue": "1"}:
            points = [[t, 27.0 if t == 50.0 else v] for t, v in entry["points"]]
            entry = {**entry, "points": points}
        series.append(entry)
    return {"meta": {**dump["meta"], "overrides": overrides}, "series": series}


def test_noise_free_ordering_is_checked_per_sample(experiment2):
    _, dump, _ = experiment2
    by_id = {r.id: r for r in check_experiment2(_with_mcs_spike(dump, {}))}
    spiked = by_id["2b_mcs_ul_non_increasing"]
    assert not spiked.passed
    assert spiked.measured == [26, 22, 20, 13]
    assert spiked.bound == "samples non-increasing, final < initial"
    assert by_id["2c_ul_non_increasing"].passed

    noisy = {r.id: r for r in check_experiment2(_with_mcs_spike(dump, {"radio.snr_noise_std_db": 0.5}))}
    assert noisy["2b_mcs_ul_non_increasing"].passed
    assert noisy["2b_mcs_ul_non_increasing"].bound == "segment medians non-increasing, final < initial"
