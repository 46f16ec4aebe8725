"""Minsky machines: interpreter, encoding, and the halting-path oracle."""

import random
from fractions import Fraction

import pytest

from hav.errors import BudgetExceeded
from hav.minsky import (
    Halt, Inc, MinskyConfig, MinskyMachine, TestDec, counter_representations,
    encode, encoded_run_path, halting_path_check, initial_encoding_valuation,
    module_path, parse_program, run_bounded, step,
)
from hav.model import Configuration, Valuation
from hav.semantics import PathQuery, path_feasible, simulate, total_time


class TestInterpreter:
    def test_increment(self):
        m = MinskyMachine((Inc(1, 1), Halt()))
        assert step(m, MinskyConfig(0, 0, 0)) == MinskyConfig(1, 1, 0)

    def test_testdec_zero_branch(self):
        m = MinskyMachine((TestDec(1, 1, 1), Halt()))
        assert step(m, MinskyConfig(0, 0, 5)) == MinskyConfig(1, 0, 5)

    def test_halted_returns_none(self):
        m = MinskyMachine((Halt(),))
        assert step(m, MinskyConfig(0, 0, 0)) is None

    def test_run_bounded_halting(self):
        m = MinskyMachine((Inc(1, 1), Halt()))
        result = run_bounded(m, 10)
        assert result.halted and result.steps == 1

    def test_run_bounded_looping(self):
        m = MinskyMachine((Inc(1, 0), Halt()))
        result = run_bounded(m, 100)
        assert not result.halted and result.config.c1 == 100

    def test_budget_zero(self):
        m = MinskyMachine((Inc(1, 1), Halt()))
        result = run_bounded(m, 0)
        assert not result.halted and result.config == MinskyConfig(0, 0, 0)

    def test_validation(self):
        with pytest.raises(ValueError):
            MinskyMachine((Inc(1, 5), Halt()))
        with pytest.raises(ValueError):
            MinskyMachine((Inc(1, 0),))
        with pytest.raises(ValueError):
            MinskyMachine((Halt(), Halt()))


def test_parse_program():
    m = parse_program("INC c1 -> 1\nDEC c2 ? 2 : 0\n# comment\nHALT\n")
    assert m.instructions == (Inc(1, 1), TestDec(2, 2, 0), Halt())


def entry(c, d_value=Fraction(1, 2)):
    values = dict(initial_encoding_valuation())
    values["x1"] = Fraction(1, 2 ** c)
    values["x2"] = d_value
    return Valuation(values)


class TestEncoding:
    def test_shape_and_formula(self):
        enc = encode(MinskyMachine((Inc(1, 1), Halt())))
        assert enc.automaton.labels["L0"] == {"l0"}
        assert "HALT" in enc.automaton.labels["L1"]
        assert str(enc.formula) == "l0 && F HALT"
        # z1 runs at rate 2, everything else at 1
        for mode in enc.automaton.modes:
            assert enc.automaton.rate(mode, "z1").value == 2
            assert enc.automaton.rate(mode, "y").value == 1

    def test_increment_module_halves_operand(self):
        enc = encode(MinskyMachine((Inc(1, 1), Halt())))
        for c in range(4):
            start = Configuration("L0", entry(c))
            edges, replay_exit = module_path(enc, 0, start.valuation)
            feas = path_feasible(enc.automaton, PathQuery(tuple(edges)), start=start)
            assert feas.feasible and feas.unique()
            run = simulate(enc.automaton, list(zip(feas.delays, edges)), start=start)
            assert run.last.valuation["x1"] == Fraction(1, 2 ** (c + 1))
            assert run.last.valuation["x2"] == Fraction(1, 2)
            assert run.last.valuation["y"] == 0
            assert replay_exit == run.last.valuation
            assert total_time(run) == 1

    def test_decrement_module_doubles_operand(self):
        enc = encode(MinskyMachine((TestDec(1, 1, 1), Halt())))
        for c in range(4):
            start = Configuration("L0", entry(c + 1))
            edges, _ = module_path(enc, 0, start.valuation)
            feas = path_feasible(enc.automaton, PathQuery(tuple(edges)), start=start)
            assert feas.feasible and feas.unique()
            run = simulate(enc.automaton, list(zip(feas.delays, edges)), start=start)
            assert run.last.valuation["x1"] == Fraction(1, 2 ** c)
            assert run.last.valuation["x2"] == Fraction(1, 2)
            assert run.last.valuation["y"] == 0
            assert total_time(run) == 2

    def test_zero_branch_is_immediate(self):
        enc = encode(MinskyMachine((TestDec(1, 1, 1), Halt())))
        start = Configuration("L0", entry(0))
        edges, exit_val = module_path(enc, 0, start.valuation)
        assert len(edges) == 1 and edges[0].action == "i0_zero"
        feas = path_feasible(enc.automaton, PathQuery(tuple(edges)), start=start)
        assert feas.feasible and feas.delays == [0]
        assert exit_val["x1"] == 1

    def test_first_module_from_initial_config(self):
        # entry (c, d) = (0, 0): exit x1 = 1/2, x2 preserved modulo wrap
        enc = encode(MinskyMachine((Inc(1, 1), Halt())))
        edges, exit_val = module_path(enc, 0, initial_encoding_valuation())
        feas = path_feasible(enc.automaton, PathQuery(tuple(edges)))
        assert feas.feasible and feas.unique()
        assert exit_val["x1"] == Fraction(1, 2)
        assert exit_val["x2"] in counter_representations(0)

    def test_forced_dwells_for_c_one(self):
        # entering with x1 = 1/2 forces equal A/B dwells of 1/4 each
        enc = encode(MinskyMachine((Inc(1, 1), Halt())))
        start = Configuration("L0", entry(1))
        edges, _ = module_path(enc, 0, start.valuation)
        feas = path_feasible(enc.automaton, PathQuery(tuple(edges)), start=start)
        assert feas.feasible
        times = []
        now = Fraction(0)
        for delay, edge in zip(feas.delays, edges):
            now += delay
            times.append((edge.action, now))
        at = dict(times)
        assert at["i0_b"] - at["i0_a"] == Fraction(1, 4)   # dwell in A
        assert at["i0_exit"] - at["i0_b"] == Fraction(1, 4)  # dwell in B
        assert at["i0_exit"] == 1

    def test_broken_exit_guard_is_infeasible(self):
        # same module shape, but the exit wants y = 2 and there are no wraps:
        # the forced dwell equations have no nonnegative solution
        from hav.model import (
            AtomicConstraint, HybridAutomaton, JumpPredicate, Predicate,
            RateConst, Transition,
        )
        rates = {v: RateConst(2 if v == "z1" else 1)
                 for v in ("x1", "x2", "y", "z", "z1")}
        e1 = Transition("L", Predicate.of(AtomicConstraint("x1", "=", 1)), "a",
                        JumpPredicate.of({"z": 0}), "A")
        e2 = Transition("A", Predicate.of(AtomicConstraint("x1", ">", 1),
                                          AtomicConstraint("x2", "<", 1),
                                          AtomicConstraint("y", "<", 1)), "b",
                        JumpPredicate.of({"x1": 0, "z1": 0}), "B")
        e3 = Transition("B", Predicate.of(AtomicConstraint("z", "=", 0, "z1"),
                                          AtomicConstraint("y", "=", 2),
                                          AtomicConstraint("x2", "<", 1)), "exit",
                        JumpPredicate.of({"y": 0}), "T")
        a = HybridAutomaton(
            name="broken", modes=("L", "A", "B", "T"),
            initial_modes=frozenset({"L"}),
            variables=frozenset(rates), transitions=(e1, e2, e3),
            flows={m: dict(rates) for m in ("L", "A", "B", "T")},
            init=Predicate(tuple(
                AtomicConstraint(v, "=", 1 if v in ("x1", "x2") else 0)
                for v in sorted(rates))))
        start = Configuration("L", Valuation({"x1": Fraction(1, 2), "x2": Fraction(1, 2),
                                              "y": 0, "z": 0, "z1": 0}))
        feas = path_feasible(a, PathQuery((e1, e2, e3)), start=start)
        assert not feas.feasible


SAFE_PROGRAMS = [
    "INC c1 -> 1\nHALT",
    "INC c1 -> 1\nINC c1 -> 2\nHALT",
    "INC c1 -> 1\nDEC c1 ? 2 : 2\nHALT",
    "INC c2 -> 1\nINC c2 -> 2\nHALT",
    "DEC c1 ? 1 : 1\nHALT",
]


class TestHaltingPathCheck:
    def test_sample_programs(self):
        for text in SAFE_PROGRAMS:
            machine = parse_program(text)
            assert run_bounded(machine, 30).halted
            assert halting_path_check(machine, 30)

    def test_dec_loop_to_zero(self):
        text = "INC c1 -> 1\nINC c1 -> 2\nDEC c1 ? 2 : 3\nHALT"
        assert halting_path_check(parse_program(text), 20)

    def test_budget_exceeded(self):
        looping = MinskyMachine((Inc(1, 0), Halt()))
        with pytest.raises(BudgetExceeded):
            halting_path_check(looping, 50)


def random_single_counter_program(rng: random.Random, counter: int) -> MinskyMachine:
    n = rng.randint(1, 5)
    instructions = []
    for i in range(n):
        if rng.random() < 0.6:
            instructions.append(Inc(counter, i + 1))
        else:
            instructions.append(TestDec(counter, i + 1, i + 1))
    instructions.append(Halt())
    return MinskyMachine(tuple(instructions))


def test_module_exit_invariant_sampled():
    """After every module, the exit valuation encodes the interpreter's counters."""
    rng = random.Random(111)
    for _ in range(25):
        counter = rng.choice([1, 2])
        machine = random_single_counter_program(rng, counter)
        enc = encode(machine)
        edges, final, exits = encoded_run_path(enc, 40)
        if edges:
            feas = path_feasible(enc.automaton, PathQuery(tuple(edges)))
            assert feas.feasible and feas.unique()
        # replay interpreter alongside module exits
        from hav.minsky import INITIAL_CONFIG
        cfg = INITIAL_CONFIG
        for exit_val in exits:
            cfg = step(enc.machine, cfg)
            assert cfg.c1 <= 6 and cfg.c2 <= 6
            assert exit_val["x1"] in counter_representations(cfg.c1)
            assert exit_val["x2"] in counter_representations(cfg.c2)
            assert exit_val["y"] == 0


def test_module_durations():
    """Increment modules take exactly 1 time unit, decrement modules exactly 2."""
    rng = random.Random(112)
    for _ in range(10):
        machine = random_single_counter_program(rng, 1)
        enc = encode(machine)
        valuation = initial_encoding_valuation()
        from hav.minsky import INITIAL_CONFIG
        cfg = INITIAL_CONFIG
        while not isinstance(machine.instructions[cfg.pc], Halt):
            inst = machine.instructions[cfg.pc]
            edges, valuation_after = module_path(enc, cfg.pc, valuation)
            if edges:
                start = Configuration(f"L{cfg.pc}", valuation)
                feas = path_feasible(enc.automaton, PathQuery(tuple(edges)), start=start)
                assert feas.feasible
                duration = total_time(feas.delays)
                if isinstance(inst, Inc):
                    assert duration == 1
                elif valuation[("x1", "x2")[inst.counter - 1]] not in (0, 1):
                    assert duration == 2
                else:
                    assert duration == 0
            valuation = valuation_after
            cfg = step(machine, cfg)
