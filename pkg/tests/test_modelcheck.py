import random

import pytest
from hypothesis import given, settings, strategies as st

from htwtl.evaluate import eval_twtl
from htwtl.formula import parse_twtl
from htwtl.modelcheck import Mode, Status, Timeout, check_twtl_model
from htwtl.progression import FALSE, TRUE, Progressor
from htwtl.tks import TimedTrace, generate_traces, hold_fill, make_tks, parse_model

from helpers import EVENTS, data_text, random_twtl, small_unit_models, twtl_strategy

LOOP_A = make_tks(["s0"], ["s0"], [("s0", 1, "s0")], label={"s0": {"a"}})


class TestProgression:
    @settings(max_examples=500, deadline=None)
    @given(twtl_strategy(), st.lists(st.sampled_from(EVENTS + [None]), min_size=1, max_size=8))
    def test_matches_evaluator(self, f, events):
        t = TimedTrace.unit(events)
        prog = Progressor(f)
        term = prog.run(events)
        assert term in (TRUE, FALSE)
        assert (term == TRUE) == eval_twtl(f, t, 0, len(t) - 1)

    def test_early_verdicts_are_final(self):
        rng = random.Random(3)
        for _ in range(2000):
            f = random_twtl(rng, 3)
            events = [rng.choice(EVENTS) for _ in range(rng.randint(1, 7))]
            prog = Progressor(f)
            term = prog.initial(len(events) - 1)
            settled = None
            for ev in events:
                term = prog.step(term, prog.letter(ev))
                if settled is None and term in (TRUE, FALSE):
                    settled = term
            want = eval_twtl(f, TimedTrace.unit(events), 0, len(events) - 1)
            assert term == (TRUE if want else FALSE)
            assert settled == term

    def test_terms_are_shared(self):
        prog = Progressor(parse_twtl("[H^1 a][0,5] & [H^1 a][0,5]"))
        t1 = prog.initial(5)
        t2 = prog.initial(5)
        assert t1 == t2


class TestCheckModel:
    def test_self_loop_all_runs(self):
        v = check_twtl_model(LOOP_A, parse_twtl("[H^2 a][0,3]"), Mode.ALL_RUNS)
        assert v.status is Status.SAT and v.counterexample is None

    def test_unique_run_counterexample(self):
        v = check_twtl_model(LOOP_A, parse_twtl("H^1 b"), Mode.ALL_RUNS)
        assert v.status is Status.UNSAT
        (_, cex), = v.counterexample
        assert cex == TimedTrace.unit(["a", "a"])

    def test_exists_run_witness(self):
        m = make_tks(["s0", "s1", "s2"], ["s0"], [("s0", 1, "s1"), ("s0", 1, "s2")],
                     label={"s1": {"a"}, "s2": {"b"}})
        v = check_twtl_model(m, parse_twtl("H^0 !a ; H^1 b"), Mode.EXISTS_RUN)
        assert v.sat
        (_, wit), = v.witness
        assert wit == TimedTrace.unit([(), "b", "b"])

    def test_lexicographic_counterexample(self):
        m = make_tks(["s0", "s1", "s2"], ["s0"], [("s0", 1, "s2"), ("s0", 1, "s1")],
                     label={"s1": {"a"}, "s2": {"b"}})
        v = check_twtl_model(m, parse_twtl("H^0 !a ; (H^0 !a & H^0 !b)"), Mode.ALL_RUNS, bound=1)
        assert v.runs["run"] == ("s0", "s1")

    def test_durations_are_unrolled(self):
        m = parse_model("states: s0 s1\ninit: s0\nlabel: s0 = a\nlabel: s1 = b\ntrans: s0 -3-> s1\n")
        assert check_twtl_model(m, parse_twtl("H^2 a ; H^0 b"), Mode.ALL_RUNS).sat
        assert not check_twtl_model(m, parse_twtl("H^3 a"), Mode.EXISTS_RUN).sat

    def test_time_cap(self):
        m = parse_model(data_text("tess.tks"))
        f = parse_twtl("[H^1 C1][0,60] & [H^1 C2][0,60]")
        with pytest.raises(Timeout):
            check_twtl_model(m, f, Mode.EXISTS_RUN, time_cap_ms=1)

    def test_threads_agree(self):
        m = parse_model(data_text("tess.tks"))
        f = parse_twtl("[H^1 R1][0,12] | [H^1 C2][0,20]")
        one = check_twtl_model(m, f, Mode.ALL_RUNS, threads=1)
        two = check_twtl_model(m, f, Mode.ALL_RUNS, threads=2)
        assert one.status == two.status
        assert one.runs == two.runs


def _brute(m, f, bound, mode):
    verdicts = [eval_twtl(f, hold_fill(t, bound), 0, bound) for t in generate_traces(m, bound)]
    return all(verdicts) if mode is Mode.ALL_RUNS else any(verdicts)


def test_agrees_with_trace_enumeration():
    rng = random.Random(11)
    models = small_unit_models(3, sample_three=40)
    for n in range(600):
        m = models[n % len(models)]
        f = random_twtl(rng, 2, max_hi=3)
        for mode in Mode:
            bound = rng.randint(1, 4)
            assert check_twtl_model(m, f, mode, bound).sat == _brute(m, f, bound, mode)


def test_verdicts_are_monotone_in_the_run_set():
    """Dropping initial states can only help AllRuns and only hurt ExistsRun."""
    rng = random.Random(5)
    models = [m for m in small_unit_models(3, sample_three=80) if len(m.init) > 1]
    for n in range(400):
        m = models[n % len(models)]
        sub = make_tks(m.states, m.init[:1], m.trans, label=m.label, props=m.props)
        f = random_twtl(rng, 2, max_hi=3)
        if check_twtl_model(m, f, Mode.ALL_RUNS, 3).sat:
            assert check_twtl_model(sub, f, Mode.ALL_RUNS, 3).sat
        if check_twtl_model(sub, f, Mode.EXISTS_RUN, 3).sat:
            assert check_twtl_model(m, f, Mode.EXISTS_RUN, 3).sat
