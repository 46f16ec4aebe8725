"""Fourier-Motzkin elimination: soundness, witnesses, strictness."""

import random
from fractions import Fraction

from hav.linsolve import LinearSystem


def random_system(rng: random.Random, nvars: int, rows: int) -> LinearSystem:
    system = LinearSystem(nvars)
    for _ in range(rows):
        coeffs = {i: Fraction(rng.randint(-3, 3)) for i in range(nvars)
                  if rng.random() < 0.8}
        op = rng.choice(["<=", "<", "=", ">=", ">"])
        system.add(coeffs, op, Fraction(rng.randint(-6, 6), rng.randint(1, 3)))
    return system


def test_feasible_witness_satisfies_exactly():
    rng = random.Random(61)
    feasible = 0
    for _ in range(300):
        system = random_system(rng, rng.randint(1, 4), rng.randint(1, 6))
        solution = system.solve()
        if solution is not None:
            feasible += 1
            assert system.satisfied_by(solution.values)
    assert feasible > 50  # the generator must actually exercise both outcomes


def test_infeasible_verdicts_survive_dense_sampling():
    rng = random.Random(62)
    checked = 0
    while checked < 5:
        system = random_system(rng, rng.randint(1, 4), rng.randint(2, 6))
        if system.solve() is not None:
            continue
        checked += 1
        for _ in range(10 ** 5 // 5):
            sample = [Fraction(rng.randint(-40, 40), rng.randint(1, 8))
                      for _ in range(system.nvars)]
            assert not system.satisfied_by(sample)


def test_equalities_become_zero_width_intervals():
    system = LinearSystem(2)
    system.add({0: Fraction(1)}, "=", 3)
    system.add({0: Fraction(1), 1: Fraction(1)}, "=", 5)
    solution = system.solve()
    assert solution.values == [3, 2]
    assert solution.unique()


def test_midpoint_witness():
    system = LinearSystem(1)
    system.add({0: Fraction(1)}, ">=", 2)
    system.add({0: Fraction(1)}, "<=", 6)
    assert system.solve().values == [4]


def test_strict_bounds_nudged():
    system = LinearSystem(1)
    system.add({0: Fraction(1)}, ">", 2)
    system.add({0: Fraction(1)}, "<", 6)
    values = system.solve().values
    assert values == [4]
    # one-sided strict bound: nudged by a unit
    system = LinearSystem(1)
    system.add({0: Fraction(1)}, ">", 2)
    assert system.solve().values == [3]


def test_strictness_is_contagious():
    system = LinearSystem(1)
    system.add({0: Fraction(1)}, "<", 1)
    system.add({0: Fraction(1)}, ">=", 1)
    assert system.solve() is None
    system = LinearSystem(1)
    system.add({0: Fraction(1)}, "<=", 1)
    system.add({0: Fraction(1)}, ">=", 1)
    assert system.solve().values == [1]


def test_contradictory_constants():
    system = LinearSystem(1)
    system.add({}, "=", 1)
    assert system.solve() is None


def test_unconstrained_variable_defaults_to_zero():
    system = LinearSystem(2)
    system.add({0: Fraction(1)}, "=", 7)
    solution = system.solve()
    assert solution.values == [7, 0]
