"""User-steered reduced redescription sets via weighted scalarization.

Given a mined set and a matrix of importance weights (one row per desired
output set), selection is greedy: the first pick minimizes a weighted sum of
accuracy, significance, occurrence, and size scores; every following pick
minimizes the same sum with the occurrence scores swapped for similarity
against the set built so far and the significance score blended with relative
support. Positive weights make each pick a non-dominated candidate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .measures import (
    Constraints,
    OccurrenceProfile,
    Redescription,
    RedescriptionSet,
    jaccard,
    mask_jaccard,
    score_pval,
    score_size,
)
from .query import mask_to_indices


@dataclass(frozen=True)
class WeightVector:
    """Importance weights: accuracy (j), significance (pval), attribute
    redundancy (attr_jaccard), element redundancy (elem_jaccard), query size,
    and accuracy variability under missing values."""

    j: float
    pval: float
    attr_jaccard: float
    elem_jaccard: float
    query_size: float
    variability: float = 0.0

    def __post_init__(self) -> None:
        for name, value in self.__dict__.items():
            if value < 0:
                raise ValueError(f"weight {name} must be non-negative, got {value}")

    @classmethod
    def from_row(cls, row: Sequence[float]) -> "WeightVector":
        values = [float(x) for x in row]
        if len(values) == 5:
            values.append(0.0)
        if len(values) != 6:
            raise ValueError(f"expected 5 or 6 weights, got {len(values)}")
        return cls(*values)

    def as_tuple(self) -> tuple[float, ...]:
        return (
            self.j,
            self.pval,
            self.attr_jaccard,
            self.elem_jaccard,
            self.query_size,
            self.variability,
        )


@dataclass
class ReducedSet:
    """Selection result for one weight row, in selection order."""

    members: list[Redescription]
    weights: WeightVector
    n: int
    constraints: Constraints | None = None
    status: str = "ok"

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def _members(pool) -> list[Redescription]:
    if isinstance(pool, RedescriptionSet):
        return list(pool.members)
    return list(pool)


def compute_occurrence(pool) -> OccurrenceProfile:
    """Count, per element and per attribute, how many redescriptions in the
    pool cover or use it."""
    members = _members(pool)
    if not members:
        raise ValueError("cannot profile an empty redescription set")
    n = members[0].n_elements
    element_counts = np.zeros(n, dtype=np.float64)
    attribute_counts: dict[tuple[int, int], int] = {}
    for m in members:
        for e in mask_to_indices(m.supp_mask):
            element_counts[e] += 1
        for a in m.attrs:
            attribute_counts[a] = attribute_counts.get(a, 0) + 1
    return OccurrenceProfile(element_counts, attribute_counts)


def find_specific(pool, profile: OccurrenceProfile, w: WeightVector) -> Redescription:
    """First pick: accurate, significant, small, and built from elements and
    attributes that few other redescriptions touch. Ties keep input order."""
    members = _members(pool)
    if not members:
        raise ValueError("empty candidate pool")
    el_total = profile.element_total
    at_total = profile.attribute_total
    best_idx = 0
    best_score = float("inf")
    for i, r in enumerate(members):
        ocur_el = (
            float(profile.element_counts[mask_to_indices(r.supp_mask)].sum()) / el_total
            if el_total
            else 0.0
        )
        ocur_at = (
            sum(profile.attribute_counts.get(a, 0) for a in r.attrs) / at_total
            if at_total
            else 0.0
        )
        score = (
            w.j * (1.0 - r.j_qnm)
            + w.pval * score_pval(r.p_value)
            + w.elem_jaccard * ocur_el
            + w.attr_jaccard * ocur_at
            + w.query_size * score_size(r.attr_count)
            + w.variability * r.variability
        )
        if score < best_score:
            best_score = score
            best_idx = i
    return members[best_idx]


def find_best(
    pool,
    reduced: Sequence[Redescription],
    w: WeightVector,
    n: int,
) -> Redescription | None:
    """Next pick given the set built so far; None when the pool is exhausted.

    The significance weight splits between the p-value score and relative
    support with ratio k/n, where k is the current reduced-set size: early
    picks favour small significant redescriptions, late picks larger support.
    """
    members = _members(pool)
    chosen = {id(r) for r in reduced}
    k = len(reduced)
    total = members[0].n_elements if members else 1
    best_r: Redescription | None = None
    best_score = float("inf")
    for r in members:
        if id(r) in chosen:
            continue
        elem_sim = max((mask_jaccard(r.supp_mask, m.supp_mask) for m in reduced), default=0.0)
        attr_sim = max((jaccard(r.attrs, m.attrs) for m in reduced), default=0.0)
        blend = (k / n) * score_pval(r.p_value) + (1.0 - k / n) * (r.support_size / total)
        score = (
            w.j * (1.0 - r.j_qnm)
            + w.pval * blend
            + w.elem_jaccard * elem_sim
            + w.attr_jaccard * attr_sim
            + w.query_size * score_size(r.attr_count)
            + w.variability * r.variability
        )
        if score < best_score:
            best_score = score
            best_r = r
    return best_r


def reduce_set(
    pool,
    weight_rows: Sequence[WeightVector | Sequence[float]],
    n: int,
    constraints: Constraints | None = None,
) -> list[ReducedSet]:
    """One reduced set per weight row.

    An optional constraint bundle re-filters the pool first, so one mined
    corpus supports exploring accuracy/support thresholds without re-mining.
    Selection stops at n members or pool exhaustion.
    """
    if n < 1:
        raise ValueError("reduced set size must be at least 1")
    members = _members(pool)
    outputs: list[ReducedSet] = []
    for row in weight_rows:
        w = row if isinstance(row, WeightVector) else WeightVector.from_row(row)
        candidates = [r for r in members if constraints.admits(r)] if constraints else members
        if not candidates:
            outputs.append(
                ReducedSet(
                    members=[],
                    weights=w,
                    n=n,
                    constraints=constraints,
                    status="warning: all candidates filtered out",
                )
            )
            continue
        profile = compute_occurrence(candidates)
        selected = [find_specific(candidates, profile, w)]
        while len(selected) < n:
            nxt = find_best(candidates, selected, w, n)
            if nxt is None:
                break
            selected.append(nxt)
        outputs.append(ReducedSet(members=selected, weights=w, n=n, constraints=constraints))
    return outputs
