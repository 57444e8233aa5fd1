"""Shared generators and small reference routines for the test suite."""

from __future__ import annotations

import itertools
import random
from pathlib import Path
from typing import Iterator, List, Optional, Sequence

from hypothesis import strategies as st

from htwtl.formula import (AtomRef, And, Concat, EqAtom, Hold, HyperFormula, Not, Quantifier,
                           Within, make_or)
from htwtl.tks import TimedTrace, make_tks

DATA = Path(__file__).resolve().parent.parent / "src" / "htwtl" / "data"

EVENTS = [frozenset(), frozenset("a"), frozenset("b"), frozenset("ab")]


def data_text(rel: str) -> str:
    return (DATA / rel).read_text(encoding="utf-8")


# ------------------------------------------------------------------ traces

def unit_traces(max_len: int, events: Sequence[frozenset] = EVENTS) -> Iterator[TimedTrace]:
    """Every unit-stamped trace of length 1..max_len over ``events``."""
    for n in range(1, max_len + 1):
        for combo in itertools.product(events, repeat=n):
            yield TimedTrace.unit(combo)


def random_trace(rng: random.Random, max_len: int = 7, max_gap: int = 3) -> TimedTrace:
    n = rng.randint(1, max_len)
    tau, out = 0, []
    for _ in range(n):
        out.append((tau, rng.choice(EVENTS)))
        tau += rng.randint(1, max_gap)
    return TimedTrace.of(out)


# ---------------------------------------------------------------- formulas

def random_twtl(rng: random.Random, depth: int, props: Sequence[str] = ("a", "b"),
                max_d: int = 2, max_hi: int = 4):
    """Random plain TWTL body of at most ``depth`` operator levels."""
    if depth == 0 or rng.random() < 0.25:
        return Hold(rng.randint(0, max_d), rng.choice(props), rng.random() < 0.3)
    kind = rng.choice(["and", "or", "not", "concat", "within"])
    sub = lambda: random_twtl(rng, depth - 1, props, max_d, max_hi)  # noqa: E731
    if kind == "and":
        return And(sub(), sub())
    if kind == "or":
        return make_or(sub(), sub())
    if kind == "not":
        return Not(sub())
    if kind == "concat":
        return Concat(sub(), sub())
    lo = rng.randint(0, max_hi)
    return Within(sub(), lo, rng.randint(lo, max_hi))


def twtl_strategy(props=("a", "b"), max_leaves: int = 8):
    leaf = st.builds(Hold, st.integers(0, 2), st.sampled_from(props), st.booleans())

    def extend(inner):
        window = st.tuples(st.integers(0, 3), st.integers(0, 3)).map(sorted)
        return st.one_of(
            st.builds(And, inner, inner),
            st.builds(Not, inner),
            st.builds(Concat, inner, inner),
            st.builds(lambda b, w: Within(b, w[0], w[1]), inner, window),
        )

    return st.recursive(leaf, extend, max_leaves=max_leaves)


def hyper_strategy(max_leaves: int = 12):
    """Synchronous hyper formulas with up to 3 trace variables and 4 propositions."""

    @st.composite
    def build(draw):
        n = draw(st.integers(1, 3))
        names = [f"p{k}" for k in range(1, n + 1)]
        quants = draw(st.lists(st.sampled_from([Quantifier.EXISTS, Quantifier.FORALL]),
                               min_size=n, max_size=n))
        props = st.sampled_from(["a", "b", "c", "d"])
        var = st.sampled_from(names)
        hold = st.builds(lambda d, p, v, neg: Hold(d, AtomRef(p, v), neg),
                         st.integers(0, 3), props, var, st.booleans())
        eq = st.builds(lambda d1, d2, p, v1, v2, eqv: EqAtom(Hold(d1, AtomRef(p, v1)),
                                                            Hold(d2, AtomRef(p, v2)), p, eqv),
                       st.integers(0, 3), st.integers(0, 3), props, var, var, st.booleans())

        def extend(inner):
            window = st.tuples(st.integers(0, 9), st.integers(0, 9)).map(sorted)
            return st.one_of(
                st.builds(And, inner, inner),
                st.builds(Not, inner),
                st.builds(Concat, inner, inner),
                st.builds(lambda b, w: Within(b, w[0], w[1]), inner, window),
            )

        body = draw(st.recursive(st.one_of(hold, eq), extend, max_leaves=max_leaves))
        return HyperFormula(tuple(zip(quants, names)), (), body)

    return build()


def depth(node) -> int:
    from htwtl.formula import children
    kids = children(node)
    return 0 if not kids else 1 + max(depth(k) for k in kids)


# ------------------------------------------------------------------ models

def small_unit_models(max_states: int, labels=(frozenset(), frozenset("a"), frozenset("b")),
                      sample_three: Optional[int] = None, seed: int = 0):
    """Unit-duration models over states s0..s{n-1}.

    Models with one and two states are enumerated exhaustively; three-state
    models are enumerated exhaustively unless ``sample_three`` caps them to a
    seeded sample.
    """
    out = []
    for n in range(1, max_states + 1):
        states = [f"s{k}" for k in range(n)]
        inits = [c for r in range(1, n + 1) for c in itertools.combinations(states, r)]
        succ_sets = [c for r in range(1, n + 1) for c in itertools.combinations(states, r)]
        grid = itertools.product(inits, itertools.product(succ_sets, repeat=n),
                                 itertools.product(labels, repeat=n))
        models = []
        for init, succs, labs in grid:
            trans = [(s, 1, d) for s, ds in zip(states, succs) for d in ds]
            label = {s: set(lab) for s, lab in zip(states, labs)}
            models.append((states, list(init), trans, label))
        if n == 3 and sample_three is not None:
            models = random.Random(seed).sample(models, sample_three)
        out.extend(make_tks(s, i, t, label=lab, props=["a", "b"]) for s, i, t, lab in models)
    return out


def all_traces(m, bound: int) -> List[TimedTrace]:
    from htwtl.tks import generate_traces
    return list(generate_traces(m, bound))
