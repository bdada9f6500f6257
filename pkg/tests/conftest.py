import json

import pytest

from mecsim import Testbed, load_chart, load_scenario, run
from mecsim.config import SimConfig


@pytest.fixture
def core_chart():
    return load_chart("open5gs-core")


@pytest.fixture
def monitoring_chart():
    return load_chart("monitoring")


@pytest.fixture
def testbed():
    return Testbed(SimConfig(), seed=0)


@pytest.fixture
def deployed(testbed, core_chart, monitoring_chart):
    """Testbed with both charts installed and the gNB connected at t=0."""
    testbed.cluster.install_chart(core_chart)
    testbed.cluster.install_chart(monitoring_chart)
    testbed.gnb.gnb_connect()
    return testbed


@pytest.fixture(scope="session")
def experiment1(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp1")
    report = run(load_scenario("experiment1"), seed=42, out_dir=out)
    dump = json.loads((out / "tsdb.json").read_text())
    return report, dump, out


@pytest.fixture(scope="session")
def experiment2(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp2")
    report = run(load_scenario("experiment2"), seed=42, out_dir=out)
    dump = json.loads((out / "tsdb.json").read_text())
    return report, dump, out
