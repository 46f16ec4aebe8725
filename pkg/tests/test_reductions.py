"""Class reductions: bracket splitting and rate rescaling."""

import random
from fractions import Fraction

import pytest

from hav.errors import EntryValueAmbiguous, NotInitialized, WrongClass
from hav.linsolve import LinearSystem
from hav.model import (
    AtomicConstraint, AutomatonClass, HybridAutomaton, JumpPredicate,
    Predicate, RateConst, RateInterval, Transition, classify,
)
from hav.semantics import PathQuery, path_feasible
from hav.reductions import multirate_to_timed, rect_to_multirate, split_names
from helpers import load_model, random_multirate_automaton


def rect_automaton():
    return load_model("rect").automata[0]


class TestRectToMultirate:
    def test_figure_guard_split_exact(self):
        mr = rect_to_multirate(rect_automaton())
        lo, up = split_names("x")
        slow = [t for t in mr.transitions if t.action == "slow"]
        assert len(slow) == 2
        first, second = slow
        assert first.guard.conjuncts == (AtomicConstraint(up, "<=", 10),)
        assert not first.jump.assignments
        assert second.guard.conjuncts == (AtomicConstraint(lo, "<=", 10),
                                          AtomicConstraint(up, ">", 10))
        assert second.jump.assignments == ((up, 10),)

    def test_reset_sets_both_halves(self):
        mr = rect_to_multirate(rect_automaton())
        fast = [t for t in mr.transitions if t.action == "fast"][0]
        assert dict(fast.jump.assignments) == {"x_l": 3, "x_u": 3}

    def test_result_is_initialized_multirate(self):
        report = classify(rect_to_multirate(rect_automaton()))
        assert report.klass == AutomatonClass.MULTIRATE
        assert report.initialized

    def test_degenerate_interval_halves_stay_equal(self):
        a = HybridAutomaton(
            name="deg", modes=("m", "n"), initial_modes=frozenset({"m"}),
            variables=frozenset({"x"}),
            transitions=(Transition("m", Predicate.of(AtomicConstraint("x", "=", 4)),
                                    "go", JumpPredicate.of({"x": 1}), "n"),),
            flows={"m": {"x": RateInterval(2, 2)}, "n": {"x": RateInterval(2, 2)}})
        mr = rect_to_multirate(a)
        go = [t for t in mr.transitions if t.action == "go"][0]
        feas = path_feasible(mr, PathQuery((go,)))
        assert feas.feasible
        from hav.semantics import simulate
        run = simulate(mr, list(zip(feas.delays, [go])))
        for cfg in run.configurations:
            assert cfg.valuation["x_l"] == cfg.valuation["x_u"]

    def test_requires_initialized(self):
        rect = rect_automaton()
        broken = tuple(
            t if t.action != "fast"
            else Transition(t.source, t.guard, t.action, JumpPredicate.of({}), t.target)
            for t in rect.transitions)
        a = HybridAutomaton(
            name="ni", modes=rect.modes, initial_modes=rect.initial_modes,
            variables=rect.variables, transitions=broken,
            flows={m: dict(rect.flows[m]) for m in rect.modes})
        with pytest.raises(NotInitialized):
            rect_to_multirate(a)


def bracket_feasible_run(rng, a, edges):
    """Solve for delays and *realized* interval slopes along a path.

    Linearized with u_i = slope_i * t_i: lo*t_i <= u_i <= hi*t_i. Returns
    (delays, values of x at each edge instant) or None.
    """
    n = len(edges)
    system = LinearSystem(2 * n)  # t_0..t_{n-1}, u_0..u_{n-1}
    x = {"const": Fraction(0), "coeffs": {}}

    def add_atom(atom, expr):
        system.add(dict(expr["coeffs"]), atom.op, Fraction(atom.const) - expr["const"])

    for i, edge in enumerate(edges):
        rate = a.rate(edge.source, "x")
        lo, hi = (rate.lo, rate.hi) if isinstance(rate, RateInterval) \
            else (rate.value, rate.value)
        system.add({i: Fraction(1)}, ">=", 0)
        system.add({n + i: Fraction(1), i: Fraction(-lo)}, ">=", 0)
        system.add({n + i: Fraction(1), i: Fraction(-hi)}, "<=", 0)
        at_edge = {"const": x["const"],
                   "coeffs": {**x["coeffs"], n + i: x["coeffs"].get(n + i, Fraction(0)) + 1}}
        for atom in edge.guard.conjuncts:
            add_atom(atom, at_edge)
        reset = edge.jump.value_of("x")
        x = {"const": Fraction(reset), "coeffs": {}} if reset is not None else at_edge
        # nudge the slope choice around inside the interval
        if rng.random() < 0.5 and lo != hi:
            pass
    solution = system.solve()
    if solution is None:
        return None
    delays = solution.values[:n]
    slops = solution.values[n:]
    values = []
    x_val = Fraction(0)
    for i, edge in enumerate(edges):
        x_val += slops[i]
        values.append(x_val)
        reset = edge.jump.value_of("x")
        if reset is not None:
            x_val = Fraction(reset)
    return delays, values


def test_bracketing_property():
    rng = random.Random(101)
    rect = rect_automaton()
    mr = rect_to_multirate(rect)
    lo_name, up_name = split_names("x")
    checked = 0
    for _ in range(60):
        mode = "A"
        edges = []
        for _ in range(rng.randint(1, 6)):
            outgoing = rect.edges_from(mode)
            if not outgoing:
                break
            edge = rng.choice(outgoing)
            edges.append(edge)
            mode = edge.target
        got = bracket_feasible_run(rng, rect, edges)
        if got is None:
            continue
        checked += 1
        delays, xs = got
        # deterministic bracket trajectories over the same delays (no clamps:
        # clamping only narrows the pair, so the outer bracket must already hold)
        x_lo = x_up = Fraction(0)
        for i, edge in enumerate(edges):
            rate = rect.rate(edge.source, "x")
            lo, hi = (rate.lo, rate.hi) if isinstance(rate, RateInterval) \
                else (rate.value, rate.value)
            x_lo += lo * delays[i]
            x_up += hi * delays[i]
            assert x_lo <= xs[i] <= x_up
            reset = edge.jump.value_of("x")
            if reset is not None:
                x_lo = x_up = Fraction(reset)
    assert checked >= 20
    assert lo_name in mr.variables and up_name in mr.variables


class TestMultirateToTimed:
    def test_rate_two_equality_guard(self):
        a = HybridAutomaton(
            name="m2", modes=("m", "n"), initial_modes=frozenset({"m"}),
            variables=frozenset({"x"}),
            transitions=(Transition("m", Predicate.of(AtomicConstraint("x", "=", 4)),
                                    "go", JumpPredicate.of({"x": 0}), "n"),),
            flows={"m": {"x": RateConst(2)}, "n": {"x": RateConst(2)}})
        timed, cert = multirate_to_timed(a)
        assert cert.l_factor == 1
        assert timed.transitions[0].guard.conjuncts == (AtomicConstraint("x", "=", 2),)

    def test_lcm_integerization(self):
        a = HybridAutomaton(
            name="m3", modes=("m", "n"), initial_modes=frozenset({"m"}),
            variables=frozenset({"x"}),
            transitions=(Transition("m", Predicate.of(AtomicConstraint("x", ">=", 3)),
                                    "go", JumpPredicate.of({"x": 0}), "n"),),
            flows={"m": {"x": RateConst(2)}, "n": {"x": RateConst(2)}})
        timed, cert = multirate_to_timed(a)
        assert cert.l_factor == 2
        assert timed.transitions[0].guard.conjuncts == (AtomicConstraint("x", ">=", 3),)

    def test_static_false_guard_deletes_edge(self):
        a = HybridAutomaton(
            name="m4", modes=("m", "n"), initial_modes=frozenset({"m"}),
            variables=frozenset({"x"}),
            init=Predicate.of(AtomicConstraint("x", "=", 1)),
            transitions=(Transition("m", Predicate.of(AtomicConstraint("x", "<", 1)),
                                    "go", JumpPredicate.of({}), "n"),),
            flows={"m": {"x": RateConst(0)}, "n": {"x": RateConst(0)}})
        timed, cert = multirate_to_timed(a)
        assert not timed.transitions
        assert cert.edge_map == [None]

    def test_negative_rate_flips_relation(self):
        a = HybridAutomaton(
            name="m5", modes=("m", "n"), initial_modes=frozenset({"m"}),
            variables=frozenset({"x"}),
            init=Predicate.of(AtomicConstraint("x", "=", 4)),
            transitions=(Transition("m", Predicate.of(AtomicConstraint("x", "<=", 2)),
                                    "go", JumpPredicate.of({"x": 0}), "n"),),
            flows={"m": {"x": RateConst(-2)}, "n": {"x": RateConst(-2)}})
        timed, cert = multirate_to_timed(a)
        # x = 4 - 2t <= 2  iff  t >= 1
        assert timed.transitions[0].guard.conjuncts == (AtomicConstraint("x", ">=", 1),)

    def test_ambiguous_entry_rejected_when_read(self):
        a = HybridAutomaton(
            name="amb", modes=("m", "n"), initial_modes=frozenset({"m"}),
            variables=frozenset({"x"}),
            transitions=(
                Transition("m", Predicate.true(), "a", JumpPredicate.of({"x": 1}), "n"),
                Transition("m", Predicate.true(), "b", JumpPredicate.of({"x": 2}), "n"),
                Transition("n", Predicate.of(AtomicConstraint("x", "=", 5)), "c",
                           JumpPredicate.of({"x": 0}), "m"),
            ),
            flows={"m": {"x": RateConst(1)}, "n": {"x": RateConst(1)}})
        with pytest.raises(EntryValueAmbiguous):
            multirate_to_timed(a)

    def test_wrong_class(self):
        with pytest.raises(WrongClass):
            multirate_to_timed(rect_automaton())


def test_language_preservation_sampled():
    rng = random.Random(102)
    automata = []
    while len(automata) < 5:
        a = random_multirate_automaton(rng)
        try:
            timed, cert = multirate_to_timed(a)
        except EntryValueAmbiguous:
            continue
        automata.append((a, timed, cert))

    checked = 0
    per_automaton = 10
    for a, timed, cert in automata:
        samples = 0
        while samples < per_automaton:
            mode = sorted(a.initial_modes)[0]
            edges = []
            for _ in range(rng.randint(1, 6)):
                outgoing = a.edges_from(mode)
                if not outgoing:
                    break
                edge = rng.choice(outgoing)
                edges.append(edge)
                mode = edge.target
            if not edges:
                continue
            samples += 1
            checked += 1
            before = path_feasible(a, PathQuery(tuple(edges)))
            try:
                mapped = cert.map_path(a, timed, edges)
            except Exception:
                assert not before.feasible
                continue
            after = path_feasible(timed, PathQuery(tuple(mapped)))
            assert before.feasible == after.feasible
            if before.feasible:
                scaled = cert.timed_delays(before.delays)
                pinned = path_feasible(
                    timed, PathQuery(tuple(mapped),
                                     fixed_delays=tuple(enumerate(scaled))))
                assert pinned.feasible
                back = cert.original_delays(after.delays)
                pinned_back = path_feasible(
                    a, PathQuery(tuple(edges), fixed_delays=tuple(enumerate(back))))
                assert pinned_back.feasible
    assert checked == 50


def test_composition_rect_to_timed_classifies_timed():
    timed, cert = multirate_to_timed(rect_to_multirate(rect_automaton()))
    assert classify(timed).klass == AutomatonClass.TIMED
    assert cert.l_factor >= 1
