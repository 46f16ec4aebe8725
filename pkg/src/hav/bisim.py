"""Coarsest bisimulation quotients and bisimilarity of finite Kripke structures."""

from __future__ import annotations

from dataclasses import dataclass

from .kripke import FiniteKripke, KripkeTransition

QUOTIENT_ACTION = "τ"


@dataclass
class Partition:
    """Disjoint blocks covering the state set; block ids ordered by smallest member."""

    blocks: tuple[frozenset[int], ...]
    block_of: dict

    @staticmethod
    def from_blocks(blocks) -> "Partition":
        ordered = tuple(sorted((frozenset(b) for b in blocks), key=min))
        block_of = {s: i for i, b in enumerate(ordered) for s in b}
        return Partition(ordered, block_of)

    @property
    def size(self) -> int:
        return len(self.blocks)


def _refine(states, labels, post, initial_blocks=None) -> Partition:
    """Split on labels, then on Post-block signatures until stable."""
    if initial_blocks is None:
        by_label: dict[frozenset, list[int]] = {}
        for s in states:
            by_label.setdefault(labels[s], []).append(s)
        blocks = [frozenset(v) for v in by_label.values()]
    else:
        blocks = list(initial_blocks)
    partition = Partition.from_blocks(blocks)
    while True:
        signature = {}
        for s in states:
            signature[s] = (partition.block_of[s],
                            frozenset(partition.block_of[t] for t in post(s)))
        groups: dict = {}
        for s in states:
            groups.setdefault(signature[s], []).append(s)
        refined = Partition.from_blocks(frozenset(v) for v in groups.values())
        if refined.size == partition.size:
            return refined
        partition = refined


def coarsest_quotient(k: FiniteKripke) -> tuple[FiniteKripke, Partition]:
    """Quotient by the coarsest bisimulation on k's states.

    Blocks become states, every action collapses to τ per the quotient
    definition, labels and initial states are inherited blockwise.
    """
    partition = _refine(k.states, k.labels, k.post)
    edges = sorted({
        (partition.block_of[t.source], partition.block_of[t.target])
        for t in k.transitions
    })
    labels = {}
    display = {}
    for i, block in enumerate(partition.blocks):
        member_labels = {k.labels[s] for s in block}
        assert len(member_labels) == 1, "blocks must be label-homogeneous"
        labels[i] = member_labels.pop()
        display[i] = "{" + ",".join(str(s) for s in sorted(block)) + "}"
    quotient = FiniteKripke(
        states=tuple(range(partition.size)),
        initial=frozenset(partition.block_of[s] for s in k.initial),
        transitions=tuple(KripkeTransition(s, QUOTIENT_ACTION, t) for s, t in edges),
        labels=labels,
        display=display,
        propositions=k.propositions,
    )
    return quotient, partition


def is_bisimilar(k1: FiniteKripke, k2: FiniteKripke) -> bool:
    """Whether a bisimulation relating the initial state sets both ways exists.

    Computes the greatest bisimulation over the disjoint union by partition
    refinement; the relation is "same block".
    """
    offset = len(k1.states)
    states = list(k1.states) + [s + offset for s in k2.states]
    labels = {s: k1.labels[s] for s in k1.states}
    labels.update({s + offset: k2.labels[s] for s in k2.states})

    post1 = {s: k1.post(s) for s in k1.states}
    post2 = {s: k2.post(s) for s in k2.states}

    def post(s):
        if s < offset:
            return post1[s]
        return [t + offset for t in post2[s - offset]]

    partition = _refine(states, labels, post)
    blocks1 = {partition.block_of[s] for s in k1.initial}
    blocks2 = {partition.block_of[s + offset] for s in k2.initial}
    return blocks1 <= blocks2 and blocks2 <= blocks1
