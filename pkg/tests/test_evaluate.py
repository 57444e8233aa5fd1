import random

import pytest
from hypothesis import given, settings, strategies as st

from htwtl.evaluate import EvalContext, IndexOutOfRange, concat_split, eval_twtl, oracle_eval
from htwtl.formula import BOTTOM, TOP, Concat, Hold, Within, horizon, parse_twtl
from htwtl.tks import TimedTrace

from helpers import EVENTS, random_trace, random_twtl, twtl_strategy


def tr(*events):
    return TimedTrace.unit(events)


class TestExamples:
    def test_hold_covers_window(self):
        t = tr("a", "a", "a", "b")
        assert eval_twtl(parse_twtl("H^2 a"), t, 0, 3)
        assert oracle_eval(parse_twtl("H^2 a"), t, 0, 3)

    def test_hold_past_trace_end(self):
        t = tr("a", "a")
        assert not eval_twtl(parse_twtl("H^2 a"), t, 0, 1)
        assert not oracle_eval(parse_twtl("H^2 a"), t, 0, 1)

    def test_concat_split(self):
        f = parse_twtl("H^0 a ; H^0 b")
        t = tr("a", "b")
        assert eval_twtl(f, t, 0, 1)
        assert concat_split(f, t, 0, 1) == 0

    def test_within_search(self):
        f = parse_twtl("[H^1 a][1,3]")
        assert eval_twtl(f, tr("b", "a", "a", "a"), 0, 3)
        assert oracle_eval(f, tr("b", "a", "a", "a"), 0, 3)

    def test_within_window_too_long(self):
        assert not eval_twtl(parse_twtl("[H^0 a][0,4]"), tr("a", "a", "a"), 0, 2)

    def test_hold_needs_time_gap(self):
        t = TimedTrace.of([(0, "a"), (1, "a"), (2, "a")])
        assert eval_twtl(parse_twtl("H^1 a"), t, 0, 1)
        gapped = TimedTrace.of([(0, "a"), (4, "a")])
        assert eval_twtl(parse_twtl("H^1 a"), gapped, 0, 1)
        assert not eval_twtl(parse_twtl("H^2 a"), gapped, 0, 1)

    def test_top_and_bottom(self):
        for t in (tr("a"), tr("b", "a", None)):
            assert eval_twtl(TOP, t) and oracle_eval(TOP, t, 0, len(t) - 1)
            assert not eval_twtl(BOTTOM, t) and not oracle_eval(BOTTOM, t, 0, len(t) - 1)

    def test_silent_event(self):
        t = tr(None, "a")
        assert eval_twtl(parse_twtl("H^0 !a"), t, 0, 1)
        assert not eval_twtl(parse_twtl("H^0 a"), t, 0, 1)
        assert eval_twtl(parse_twtl("H^0 !b"), t, 1, 1)

    @pytest.mark.parametrize("i,j", [(-1, 0), (2, 1), (0, 5)])
    def test_index_out_of_range(self, i, j):
        with pytest.raises(IndexOutOfRange):
            eval_twtl(TOP, tr("a", "b"), i, j)
        with pytest.raises(IndexOutOfRange):
            oracle_eval(TOP, tr("a", "b"), i, j)


def test_differential_fuzz():
    rng = random.Random(20240611)
    for _ in range(10_000):
        f = random_twtl(rng, rng.randint(0, 4))
        t = random_trace(rng)
        j = rng.randrange(len(t))
        i = rng.randint(0, j)
        assert eval_twtl(f, t, i, j) == oracle_eval(f, t, i, j), (f, t, i, j)


def test_warm_memo_gives_same_answers():
    rng = random.Random(7)
    for _ in range(300):
        f = random_twtl(rng, 3)
        t = random_trace(rng)
        ctx = EvalContext(t)
        pairs = [(i, j) for j in range(len(t)) for i in range(j + 1)]
        rng.shuffle(pairs)
        for i, j in pairs:
            assert eval_twtl(f, t, i, j, ctx) == eval_twtl(f, t, i, j)


@settings(max_examples=400, deadline=None)
@given(twtl_strategy(), st.data())
def test_horizon_sufficiency(f, data):
    h = horizon(f)
    base = data.draw(st.lists(st.sampled_from(EVENTS), min_size=h + 1, max_size=h + 3))
    extra = data.draw(st.lists(st.sampled_from(EVENTS), min_size=1, max_size=4))
    short, longer = TimedTrace.unit(base), TimedTrace.unit(base + extra)
    want = eval_twtl(f, short, 0, h)
    assert eval_twtl(f, short, 0, len(short) - 1) == want
    assert eval_twtl(f, longer, 0, len(longer) - 1) == want


@settings(max_examples=400, deadline=None)
@given(twtl_strategy(), twtl_strategy(), st.lists(st.sampled_from(EVENTS), min_size=1, max_size=7))
def test_concat_minimal_split(left, right, events):
    f = Concat(left, right)
    t = TimedTrace.unit(events)
    j = len(t) - 1
    k = concat_split(f, t, 0, j)
    if k is None:
        assert all(not oracle_eval(left, t, 0, q) for q in range(j))
        assert not eval_twtl(f, t, 0, j)
        return
    assert oracle_eval(left, t, 0, k)
    assert all(not oracle_eval(left, t, 0, q) for q in range(k))
    assert eval_twtl(f, t, 0, j) == oracle_eval(right, t, k + 1, j)


def test_within_lower_bound_is_offset_from_start():
    f = Within(Hold(0, "a"), 2, 3)
    assert eval_twtl(f, tr("b", "b", "b", "a"), 0, 3)
    assert not eval_twtl(f, tr("a", "b", "b", "b"), 0, 3)
    assert eval_twtl(f, tr("b", "b", "b", "b", "a"), 1, 4)
