"""Mode sets of states and the span-inclusion checks deciding transformability.

The mode set of a state collects the exact energy differences carrying an
off-diagonal entry above a reported threshold.  The integer span and rational
span of those generators are never materialized; membership and inclusion are
answered through the lattice routines, which is all any check here needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .energy import EnergyValue
from .lattice import q_span_member, z_span_member
from .states import DensityMatrix

DEFAULT_THRESHOLD = 1e-12


@dataclass(frozen=True)
class ModeSet:
    """Finite generator set of energy intervals, closed under negation.

    ``source_threshold`` records the coherence cutoff used to build the set;
    the zero interval is present for any state (diagonal entries).
    """

    intervals: frozenset[EnergyValue]
    source_threshold: float

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def __contains__(self, value: EnergyValue) -> bool:
        return value in self.intervals

    @property
    def generators(self) -> tuple[EnergyValue, ...]:
        return tuple(self.intervals)


def modes_of(state: DensityMatrix, threshold: float = DEFAULT_THRESHOLD) -> ModeSet:
    """Intervals E_i - E_j with some entry between those exact levels above threshold."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    h = state.hamiltonian
    mat = np.abs(state.matrix)
    found: set[EnergyValue] = set()
    for i in range(h.dim):
        for j in range(h.dim):
            if mat[i, j] > threshold:
                delta = h.diff(i, j)
                found.add(delta)
                found.add(-delta)
    return ModeSet(frozenset(found), threshold)


def resonant_member(x: EnergyValue, mode_set: ModeSet) -> bool:
    """Is x an integer combination of the mode generators?"""
    return z_span_member(x, mode_set.generators)


def rational_member(x: EnergyValue, mode_set: ModeSet) -> bool:
    """Is x a rational combination of the mode generators?"""
    return q_span_member(x, mode_set.generators)


def check_subset_z(target: ModeSet, source: ModeSet) -> bool:
    """Integer-span inclusion: every target generator lies in the integer span
    of the source generators (which decides inclusion of the generated sets)."""
    gens = source.generators
    return all(z_span_member(x, gens) for x in target.generators)


def check_subset_q(target: ModeSet, source: ModeSet) -> bool:
    """Rational-span inclusion of the generated sets."""
    gens = source.generators
    return all(q_span_member(x, gens) for x in target.generators)


class Verdict(Enum):
    """Transformability verdict for preparing a target from a source.

    AMPLIFIABLE: integer-span inclusion holds, so the target's coherent modes
    are reachable and unbounded amplification applies.
    BLOCKED_Q: even rational-span inclusion fails; no correlated-catalytic
    covariant transformation exists.
    BLOCKED_Z: integer-span inclusion fails while rational-span inclusion
    holds; marginal-asymptotic preparation is ruled out, and whether a
    correlated catalyst can cross this gap is an open question that this
    library does not decide.
    """

    AMPLIFIABLE = "AMPLIFIABLE"
    BLOCKED_Z = "BLOCKED_Z"
    BLOCKED_Q = "BLOCKED_Q"


def transform_verdict(
    source: DensityMatrix,
    target: DensityMatrix,
    threshold: float = DEFAULT_THRESHOLD,
) -> Verdict:
    src = modes_of(source, threshold)
    dst = modes_of(target, threshold)
    if check_subset_z(dst, src):
        return Verdict.AMPLIFIABLE
    if check_subset_q(dst, src):
        return Verdict.BLOCKED_Z
    return Verdict.BLOCKED_Q
