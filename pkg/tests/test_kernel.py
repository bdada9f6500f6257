import numpy as np
import pytest

from mecsim.errors import SchedulingInPast
from mecsim.kernel import Kernel, SeededRng, seconds_to_ticks, ticks_to_seconds


def test_event_fires_at_its_tick():
    kernel = Kernel(seed=42)
    fired = []
    kernel.schedule(10, lambda: fired.append(kernel.now()))
    assert kernel.run_until(15) == 1
    assert fired == [10]
    assert kernel.now() == 15


def test_same_tick_events_fire_in_insertion_order():
    kernel = Kernel()
    fired = []
    for name in "abc":
        kernel.schedule(5, lambda name=name: fired.append(name))
    kernel.run_until(5)
    assert fired == ["a", "b", "c"]


def test_scheduling_in_the_past_is_rejected():
    kernel = Kernel()
    kernel.run_until(10)
    with pytest.raises(SchedulingInPast):
        kernel.schedule(9, lambda: None)
    with pytest.raises(SchedulingInPast):
        kernel.run_until(3)


def test_hooks_run_once_per_tick_after_events():
    kernel = Kernel()
    log = []
    kernel.add_tick_hook(lambda t: log.append(("hook", t)))
    kernel.schedule(2, lambda: log.append(("event", kernel.now())))
    kernel.run_until(3)
    assert log == [("hook", 0), ("hook", 1), ("event", 2), ("hook", 2), ("hook", 3)]
    kernel.run_until(3)
    assert log[-1] == ("hook", 3) and len(log) == 5


def test_event_enqueued_at_now_fires_on_next_run():
    kernel = Kernel()
    fired = []
    kernel.run_until(4)
    kernel.schedule(kernel.now(), lambda: fired.append(kernel.now()))
    assert kernel.run_until(4) == 1
    assert fired == [4]


def test_event_scheduled_from_an_event_fires_in_same_tick():
    kernel = Kernel()
    fired = []
    kernel.schedule(3, lambda: kernel.schedule(3, lambda: fired.append(kernel.now())))
    kernel.run_until(3)
    assert fired == [3]


def test_trace_uses_action_labels():
    class Labeled:
        label = "install"

        def __call__(self):
            pass

    kernel = Kernel()
    kernel.schedule(1, Labeled())
    kernel.run_until(1)
    assert kernel.trace == [(1, 0, "install")]


def test_ordering_matches_sort_oracle():
    rng = np.random.default_rng(7)
    times = rng.integers(0, 10_000, size=100_000)
    fired = []
    kernel = Kernel(dispatcher=fired.append)
    for seq, at in enumerate(times):
        kernel.schedule(int(at), (int(at), seq))
    assert kernel.run_until(10_000) == len(times)
    assert fired == sorted(fired)
    assert fired == sorted((int(at), seq) for seq, at in enumerate(times))


def test_seeded_rng_is_reproducible():
    a, b = SeededRng(42), SeededRng(42)
    assert [a.normal(0.5) for _ in range(5)] == [b.normal(0.5) for _ in range(5)]
    assert a.draws == 5
    assert SeededRng(1).uniform() != SeededRng(2).uniform()
    with pytest.raises(ValueError):
        SeededRng(-1)


def test_seconds_ticks_conversion():
    assert seconds_to_ticks(0.3) == 3
    assert seconds_to_ticks(160) == 1600
    assert ticks_to_seconds(35) == 3.5
    with pytest.raises(ValueError):
        seconds_to_ticks(0.25)
    with pytest.raises(ValueError):
        seconds_to_ticks(-1)
