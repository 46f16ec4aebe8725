"""End-to-end LTL model checking: negate, translate, product, nested DFS.

The synchronized product reads the Kripke label of the *source* state on
every step; the translation's fresh initial Büchi state makes that cover the
first letter as well. Violations come back as lassos over the product and are
re-validated before they are reported.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .buchi import BuchiAutomaton, translate_to_buchi
from .errors import UnknownProposition
from .kripke import FiniteKripke
from .ltl import Lasso, LtlFormula, Not, propositions
from .model import HybridAutomaton, Valuation, mode_text
from .regions import RegionGraph, region_graph
from .semantics import PathQuery, Run, initial_configuration, path_feasible, simulate

Node = tuple[int, int]  # (kripke state, büchi state)


@dataclass
class ProductGraph:
    """Reachable part of K x A, edges tagged with the Kripke transition index."""

    initial: tuple[Node, ...]
    accepting: frozenset[Node]
    adjacency: dict

    def successors(self, node: Node) -> list[tuple[Node, int]]:
        return self.adjacency[node]


def synchronized_product(k: FiniteKripke, b: BuchiAutomaton) -> ProductGraph:
    """States (s, q); a step requires a Büchi edge whose guard matches L(s)."""
    moves_cache: dict[tuple[int, frozenset[str]], list[int]] = {}

    def moves(q: int, letter: frozenset[str]) -> list[int]:
        key = (q, letter)
        got = moves_cache.get(key)
        if got is None:
            got = b.moves(q, letter)
            moves_cache[key] = got
        return got

    initial = tuple(sorted((s, q) for s in k.initial for q in b.initial))
    adjacency: dict[Node, list[tuple[Node, int]]] = {}
    stack = list(reversed(initial))
    for node in initial:
        adjacency.setdefault(node, [])
    seen = set(initial)
    while stack:
        s, q = stack.pop()
        letter = k.labels[s]
        out = []
        for t, edge_index in k.successors(s):
            for q2 in moves(q, letter):
                out.append(((t, q2), edge_index))
        out.sort()
        adjacency[(s, q)] = out
        for node, _ in out:
            if node not in seen:
                seen.add(node)
                adjacency.setdefault(node, [])
                stack.append(node)
    accepting = frozenset(n for n in adjacency if n[1] in b.accepting)
    return ProductGraph(initial, accepting, adjacency)


@dataclass
class ProductLasso:
    """stem_nodes ends at the loop head; loop_edges[-1] closes the cycle."""

    stem_nodes: list[Node]
    stem_edges: list[int]
    loop_nodes: list[Node]
    loop_edges: list[int]


def nested_dfs_emptiness(g: ProductGraph) -> Optional[ProductLasso]:
    """None when no reachable accepting cycle exists, otherwise a validated lasso.

    Two-phase nested depth-first search: the outer DFS schedules accepting
    states in postorder, the inner DFS (with persistent marks) looks for a
    cycle back to the seed.
    """
    visited1: set[Node] = set()
    visited2: set[Node] = set()

    def dfs2(seed: Node) -> Optional[tuple[list[Node], list[int]]]:
        visited2.add(seed)
        stack = [(seed, iter(g.successors(seed)))]
        nodes = [seed]
        edges: list[int] = []
        while stack:
            node, it = stack[-1]
            advanced = False
            for target, edge_index in it:
                if target == seed:
                    return nodes[:], edges + [edge_index]
                if target not in visited2:
                    visited2.add(target)
                    stack.append((target, iter(g.successors(target))))
                    nodes.append(target)
                    edges.append(edge_index)
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                nodes.pop()
                if edges:
                    edges.pop()
        return None

    for root in g.initial:
        if root in visited1:
            continue
        visited1.add(root)
        stack = [(root, iter(g.successors(root)))]
        path_nodes = [root]
        path_edges: list[int] = []
        while stack:
            node, it = stack[-1]
            advanced = False
            for target, edge_index in it:
                if target not in visited1:
                    visited1.add(target)
                    stack.append((target, iter(g.successors(target))))
                    path_nodes.append(target)
                    path_edges.append(edge_index)
                    advanced = True
                    break
            if advanced:
                continue
            if node in g.accepting:
                found = dfs2(node)
                if found is not None:
                    loop_nodes, loop_edges = found
                    lasso = ProductLasso(path_nodes[:], path_edges[:],
                                         loop_nodes, loop_edges)
                    _validate_lasso(g, lasso)
                    return lasso
            stack.pop()
            path_nodes.pop()
            if path_edges:
                path_edges.pop()
    return None


def _validate_lasso(g: ProductGraph, lasso: ProductLasso) -> None:
    assert lasso.loop_nodes, "loop must be nonempty"
    assert lasso.stem_nodes[0] in g.initial
    assert lasso.stem_nodes[-1] == lasso.loop_nodes[0]
    assert any(n in g.accepting for n in lasso.loop_nodes)
    walk = list(zip(lasso.stem_nodes, lasso.stem_nodes[1:], lasso.stem_edges))
    cycle = lasso.loop_nodes + [lasso.loop_nodes[0]]
    walk += list(zip(cycle, cycle[1:], lasso.loop_edges))
    for src, dst, edge_index in walk:
        assert (dst, edge_index) in g.successors(src), "lasso edge not in product"


@dataclass
class CxStep:
    mode: str
    labels: frozenset[str]
    action: str
    delay: Optional[Fraction] = None
    valuation: Optional[Valuation] = None


@dataclass
class Counterexample:
    stem: list[CxStep]
    loop: list[CxStep]
    trace: Lasso
    product: ProductLasso
    kripke: FiniteKripke
    concrete: Optional[Run] = None


@dataclass
class Verdict:
    holds: bool
    counterexample: Optional[Counterexample] = None


def _project(k: FiniteKripke, lasso: ProductLasso, mode_names=None) -> Counterexample:
    def name(state: int) -> str:
        if mode_names is not None:
            return mode_names[state]
        return k.display[state]

    stem_states = [s for s, _ in lasso.stem_nodes[:-1]]
    loop_states = [s for s, _ in lasso.loop_nodes]
    trace = Lasso.of([k.labels[s] for s in stem_states],
                     [k.labels[s] for s in loop_states])
    stem_steps = [
        CxStep(name(s), k.labels[s], k.transitions[e].action)
        for s, e in zip(stem_states, lasso.stem_edges)
    ]
    loop_steps = [
        CxStep(name(s), k.labels[s], k.transitions[e].action)
        for s, e in zip(loop_states, lasso.loop_edges)
    ]
    return Counterexample(stem_steps, loop_steps, trace, lasso, k)


def check(k: FiniteKripke, phi: LtlFormula) -> Verdict:
    """Holds iff the product of k with the negation automaton is empty."""
    unknown = propositions(phi) - k.propositions
    if unknown:
        raise UnknownProposition(f"formula uses undeclared propositions {sorted(unknown)}")
    negation = translate_to_buchi(Not(phi))
    product = synchronized_product(k, negation)
    lasso = nested_dfs_emptiness(product)
    if lasso is None:
        return Verdict(True)
    return Verdict(False, _project(k, lasso))


MAX_LOOP_UNROLL = 3


def check_timed(a: HybridAutomaton, phi: LtlFormula,
                rg: Optional[RegionGraph] = None) -> Verdict:
    """Region-graph pipeline; violations are concretized into exact runs.

    Concretization replays the stem plus 1..3 unrollings of the loop through
    the symbolic path engine; when every unrolling is infeasible the symbolic
    lasso is still reported (it stays valid at the region level).
    """
    rg = rg if rg is not None else region_graph(a)
    verdict = check(rg.kripke, phi)
    if verdict.holds:
        return verdict
    cx = verdict.counterexample
    lasso = cx.product
    mode_names = {i: mode_text(mode) for i, (mode, _) in enumerate(rg.state_info)}
    cx = _project(rg.kripke, lasso, mode_names)

    stem_refs = [rg.edge_refs[e] for e in lasso.stem_edges]
    loop_refs = [rg.edge_refs[e] for e in lasso.loop_edges]
    stem_real = [e for e in stem_refs if e is not None]
    loop_real = [e for e in loop_refs if e is not None]

    run: Optional[Run] = None
    if not stem_real and not loop_real:
        # pure stuttering at an initial state: the empty run is the witness
        mode = rg.state_info[lasso.stem_nodes[0][0]][0]
        run = simulate(a, [], start=initial_configuration(a, mode))
    else:
        for unroll in range(1, MAX_LOOP_UNROLL + 1):
            edges = stem_real + loop_real * unroll
            if not edges:
                break
            feasibility = path_feasible(a, PathQuery(tuple(edges)))
            if feasibility.feasible:
                run = simulate(a, list(zip(feasibility.delays, edges)))
                break
    if run is not None:
        _attach_concrete(cx, stem_refs, loop_refs, run)
        cx.concrete = run
    return Verdict(False, cx)


def _attach_concrete(cx: Counterexample, stem_refs, loop_refs, run: Run) -> None:
    configs = run.configurations
    position = 0
    for step, ref in zip(cx.stem + cx.loop, stem_refs + loop_refs):
        step.valuation = configs[min(position, len(configs) - 1)].valuation
        if ref is not None and position < len(run.steps):
            step.delay = run.steps[position].delay
            position += 1
        else:
            step.delay = Fraction(0) if ref is None else None
