"""Parser, printers, DOT and counterexample exports."""

import json
import random

import pytest

from hav.kripke import make_kripke
from hav.ltl import Always, Eventually, Implies, Not, Prop, Until
from hav.mcheck import Counterexample, CxStep
from hav.model import (
    AtomicConstraint, AutomatonClass, HybridAutomaton, JumpPredicate,
    Predicate, RateConst, RateInterval, Transition, classify,
)
from hav.textfmt import (
    ModelDocument, ParseError, SemanticError, emit_counterexample, emit_dot,
    parse_ltl, parse_model, print_ltl, print_model,
)
from helpers import load_model, random_formula


class TestParseModel:
    def test_login_matches_figure(self):
        doc = load_model("login")
        a = doc.automata[0]
        assert len(a.modes) == 5
        assert a.variables == {"x"}
        assert classify(a).klass == AutomatonClass.TIMED
        restart_guards = [t.guard for t in a.transitions if t.action == "restart"]
        consts = {atom.const for g in restart_guards for atom in g.conjuncts}
        assert consts == {60, 10}

    def test_empty_string_is_syntax_error_at_1_1(self):
        with pytest.raises(ParseError) as err:
            parse_model("")
        assert err.value.span.line == 1 and err.value.span.column == 1

    def test_undeclared_clock_is_semantic_error(self):
        text = """
automaton a {
  vars: x;
  mode m { init; inv z <= 1; }
}
"""
        with pytest.raises(SemanticError) as err:
            parse_model(text)
        assert "z" in str(err.value)

    def test_undeclared_mode_in_edge(self):
        text = "automaton a { vars: x; mode m { init; } edge m -> nowhere on go; }"
        with pytest.raises(SemanticError) as err:
            parse_model(text)
        assert "nowhere" in str(err.value)

    def test_declared_class_is_validated(self):
        text = "automaton a { vars: x; class: timed; mode m { init; rate x = 2; } }"
        with pytest.raises(SemanticError):
            parse_model(text)

    def test_bare_reset_means_zero(self):
        doc = parse_model(
            "automaton a { vars: x; mode m { init; } edge m -> m on go reset x; }")
        assert doc.automata[0].transitions[0].jump.value_of("x") == 0

    def test_labels_default_to_mode_name(self):
        doc = parse_model("automaton a { vars: x; mode m { init; } mode n { label p; } }")
        a = doc.automata[0]
        assert a.labels["m"] == {"m"}
        assert a.labels["n"] == {"p"}

    def test_comments_and_networks(self):
        doc = load_model("jobshop")
        assert doc.networks["all"] == ("j1", "j2", "m1")
        with pytest.raises(SemanticError):
            parse_model("automaton a { mode m { init; } } network n { b }")


def random_document(rng: random.Random) -> ModelDocument:
    automata = []
    for a_index in range(rng.randint(1, 3)):
        variables = sorted(f"v{i}" for i in range(rng.randint(0, 2)))
        modes = [f"m{i}" for i in range(rng.randint(1, 3))]
        flows = {}
        invariants = {}
        labels = {}
        for m in modes:
            flows[m] = {}
            for v in variables:
                flows[m][v] = (RateInterval(rng.randint(0, 2), rng.randint(2, 4))
                               if rng.random() < 0.3 else RateConst(rng.randint(-2, 3)))
            invariants[m] = (Predicate.of(AtomicConstraint(variables[0], "<=", rng.randint(0, 9)))
                             if variables and rng.random() < 0.5 else Predicate.true())
            labels[m] = frozenset(rng.sample(["p", "q", "r"], rng.randint(0, 2))) \
                if rng.random() < 0.6 else frozenset({m})
        transitions = []
        for e in range(rng.randint(0, 4)):
            guard_atoms = []
            if variables and rng.random() < 0.7:
                guard_atoms.append(AtomicConstraint(
                    rng.choice(variables), rng.choice(["<", "<=", "=", ">=", ">"]),
                    rng.randint(-3, 12)))
            if len(variables) == 2 and rng.random() < 0.3:
                guard_atoms.append(AtomicConstraint(variables[0], "<", rng.randint(-2, 2),
                                                    variables[1]))
            resets = {v: rng.randint(-1, 3) for v in variables if rng.random() < 0.5}
            transitions.append(Transition(
                rng.choice(modes), Predicate(tuple(guard_atoms)), f"a{e}",
                JumpPredicate.of(resets), rng.choice(modes)))
        init = Predicate(tuple(AtomicConstraint(v, "=", rng.choice([0, 0, 1, 2]))
                               for v in variables))
        automata.append(HybridAutomaton(
            name=f"auto{a_index}", modes=tuple(modes),
            initial_modes=frozenset(rng.sample(modes, rng.randint(1, len(modes)))),
            variables=frozenset(variables), transitions=tuple(transitions),
            invariants=invariants, flows=flows, init=init, labels=labels))
    networks = {}
    if len(automata) > 1 and rng.random() < 0.7:
        networks["net"] = tuple(a.name for a in automata)
    return ModelDocument(tuple(automata), networks)


def test_model_roundtrip_random():
    rng = random.Random(31)
    for _ in range(120):
        doc = random_document(rng)
        assert parse_model(print_model(doc)) == doc


def test_bundled_models_roundtrip():
    for name in ["login", "jobshop", "jobshop_timed", "counter", "rect"]:
        doc = load_model(name)
        assert parse_model(print_model(doc)) == doc


class TestParseLtl:
    def test_lift_example(self):
        phi = parse_ltl("G (!fl0 -> F fl0)")
        assert phi == Always(Implies(Not(Prop("fl0")), Eventually(Prop("fl0"))))

    def test_until_right_associative(self):
        phi = parse_ltl("p U q U r")
        assert phi == Until(Prop("p"), Until(Prop("q"), Prop("r")))

    def test_eventually_conjunction(self):
        from hav.ltl import And
        assert parse_ltl("F (p && !q)") == Eventually(And(Prop("p"), Not(Prop("q"))))

    def test_error_position(self):
        with pytest.raises(ParseError) as err:
            parse_ltl("F (")
        assert err.value.span.column == 4

    def test_roundtrip_random(self):
        rng = random.Random(32)
        for _ in range(300):
            phi = random_formula(rng, rng.randint(1, 12), ["p", "q", "r"])
            assert parse_ltl(print_ltl(phi)) == phi


class TestEmitDot:
    def test_single_state(self):
        k = make_kripke(["s"], ["s"], [], {"s": {"p"}})
        dot = emit_dot(k)
        assert dot.count("->") == 0
        assert 'label="s' in dot

    def test_deterministic(self):
        doc = load_model("jobshop")
        from hav.compose import product
        p = product(doc.network("all"))
        assert emit_dot(p) == emit_dot(p)

    def test_jobshop_product_has_8_nodes(self):
        from hav.compose import product
        p = product(load_model("jobshop").network("all"))
        dot = emit_dot(p)
        assert sum(1 for line in dot.splitlines() if "[label=" in line and "->" not in line) == 8

    def test_counter_semantics_graph_has_8_nodes(self):
        from fractions import Fraction
        from hav.semantics import configuration_graph
        counter = load_model("counter").automata[0]
        g = configuration_graph(counter, [Fraction(1)], 32)
        dot = emit_dot(g)
        node_lines = [l for l in dot.splitlines() if "[label=" in l and "->" not in l]
        assert len(node_lines) == 8


class TestEmitCounterexample:
    def test_minimal_shape(self):
        from hav.ltl import Lasso
        k = make_kripke(["m"], ["m"], [("m", "a", "m")], {"m": {"p"}})
        cx = Counterexample(
            stem=[], loop=[CxStep("m", frozenset({"p"}), "a")],
            trace=Lasso.of([], [{"p"}]), product=None, kripke=k)
        payload = json.loads(emit_counterexample(cx))
        assert payload == {"stem": [],
                           "loop": [{"mode": "m", "labels": ["p"], "action": "a"}]}

    def test_login_witness_stem_ends_in_connect(self):
        from hav.mcheck import check_timed
        login = load_model("login").automata[0]
        verdict = check_timed(login, parse_ltl("! F connect"))
        assert not verdict.holds
        payload = json.loads(emit_counterexample(verdict.counterexample))
        assert payload["stem"][-1]["mode"] == "connect"
        assert all("delay" in step for step in payload["stem"] if step["action"] != "τ-stutter")
