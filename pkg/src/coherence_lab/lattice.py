"""Exact span arithmetic over energy values, and ladder-system embeddings.

Membership in the integer span of a set of energy intervals is decided by
clearing denominators and reducing against a Hermite-form basis of the integer
row lattice; membership in the rational span uses Gaussian elimination over
``Fraction``.  No floats enter any decision here: declared symbols are treated
as rationally independent, and equality of energies is exact.

Ladder systems are equally spaced level sets L(interval); a product of ladders
carries integer coordinates per basis state, which is what channel retuning
and complete degeneration operate on.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from functools import reduce
from math import lcm
from typing import Sequence

from .energy import ZERO_ENERGY, EnergyValue, symbol_union
from .states import LabeledHamiltonian, tensor_hamiltonians


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (x, y, g) with x*a + y*b == g == gcd(a, b)."""
    x, next_x = 1, 0
    y, next_y = 0, 1
    g, next_g = a, b
    while next_g:
        q = g // next_g
        x, next_x = next_x, x - q * next_x
        y, next_y = next_y, y - q * next_y
        g, next_g = next_g, g - q * next_g
    return x, y, g


class IntegerLattice:
    """Integer row span in echelon form, built incrementally.

    Rows are kept with strictly increasing pivot columns; adding a vector
    either reduces it to zero or extends the basis, combining rows through
    the extended gcd when pivots collide.  Plain Python ints throughout, so
    there is no overflow to worry about.
    """

    def __init__(self, ncols: int):
        self.ncols = ncols
        self.rows: list[list[int]] = []

    @property
    def rank(self) -> int:
        return len(self.rows)

    def add(self, vector: Sequence[int]) -> None:
        vec = list(vector)
        if len(vec) != self.ncols:
            raise ValueError(f"expected {self.ncols} entries, got {len(vec)}")
        for idx in range(len(self.rows) + 1):
            while True:
                j = next((c for c, v in enumerate(vec) if v), None)
                if j is None:
                    return
                if idx < len(self.rows):
                    pj = next(c for c, v in enumerate(self.rows[idx]) if v)
                    if pj < j:
                        break
                    if pj == j:
                        row = self.rows[idx]
                        a, b = row[j], vec[j]
                        if b % a == 0:
                            q = b // a
                            for c in range(j, self.ncols):
                                vec[c] -= q * row[c]
                            continue
                        x, y, g = _xgcd(a, b)
                        ag, bg = a // g, b // g
                        for c in range(j, self.ncols):
                            ra, rv = row[c], vec[c]
                            row[c] = x * ra + y * rv
                            vec[c] = -bg * ra + ag * rv
                        continue
                self.rows.insert(idx, vec)
                return

    def __contains__(self, vector: Sequence[int]) -> bool:
        vec = list(vector)
        if len(vec) != self.ncols:
            raise ValueError(f"expected {self.ncols} entries, got {len(vec)}")
        for row in self.rows:
            j = next(c for c, v in enumerate(row) if v)
            lead = next((c for c, v in enumerate(vec) if v), None)
            if lead is None:
                return True
            if lead < j:
                return False
            if lead == j:
                if vec[j] % row[j] != 0:
                    return False
                q = vec[j] // row[j]
                for c in range(j, self.ncols):
                    vec[c] -= q * row[c]
        return not any(vec)

    def hermite_basis(self) -> list[list[int]]:
        """Canonical Hermite form of the basis: positive pivots, entries above
        each pivot reduced into [0, pivot)."""
        basis = [row.copy() for row in self.rows]
        for row in basis:
            j = next(c for c, v in enumerate(row) if v)
            if row[j] < 0:
                for c in range(self.ncols):
                    row[c] = -row[c]
        for i in reversed(range(len(basis))):
            j = next(c for c, v in enumerate(basis[i]) if v)
            p = basis[i][j]
            for k in range(i):
                q = basis[k][j] // p
                if q:
                    for c in range(self.ncols):
                        basis[k][c] -= q * basis[i][c]
        return basis


def _integer_rows(values: Sequence[EnergyValue], symbols: Sequence[str]) -> tuple[list[list[int]], int]:
    """Dense integer rows after clearing denominators with one common factor."""
    vectors = [v.vector(symbols) for v in values]
    denom = 1
    for vec in vectors:
        for entry in vec:
            denom = lcm(denom, entry.denominator)
    rows = [[int(entry * denom) for entry in vec] for vec in vectors]
    return rows, denom


def z_span_member(x: EnergyValue, generators: Sequence[EnergyValue]) -> bool:
    """True iff x is an integer-linear combination of the generators. Exact."""
    symbols = symbol_union([x, *generators])
    if not symbols:
        return True
    rows, _ = _integer_rows([x, *generators], symbols)
    lattice = IntegerLattice(len(symbols))
    for row in rows[1:]:
        lattice.add(row)
    return rows[0] in lattice


def _rational_echelon(vectors: list[list[Fraction]]) -> list[list[Fraction]]:
    rows = [vec.copy() for vec in vectors if any(vec)]
    echelon: list[list[Fraction]] = []
    for vec in rows:
        vec = _reduce_against(vec, echelon)
        lead = next((c for c, v in enumerate(vec) if v), None)
        if lead is None:
            continue
        scale = vec[lead]
        vec = [v / scale for v in vec]
        echelon.append(vec)
        echelon.sort(key=lambda r: next(c for c, v in enumerate(r) if v))
    return echelon


def _reduce_against(vec: list[Fraction], echelon: list[list[Fraction]]) -> list[Fraction]:
    vec = vec.copy()
    for row in echelon:
        j = next(c for c, v in enumerate(row) if v)
        if vec[j]:
            factor = vec[j] / row[j]
            for c in range(j, len(vec)):
                vec[c] -= factor * row[c]
    return vec


def q_span_member(x: EnergyValue, generators: Sequence[EnergyValue]) -> bool:
    """True iff x lies in the rational-linear span of the generators. Exact."""
    symbols = symbol_union([x, *generators])
    if not symbols:
        return True
    vectors = [list(g.vector(symbols)) for g in generators]
    echelon = _rational_echelon(vectors)
    residue = _reduce_against(list(x.vector(symbols)), echelon)
    return not any(residue)


def rational_rank(values: Sequence[EnergyValue]) -> int:
    symbols = symbol_union(values)
    if not symbols:
        return 0
    return len(_rational_echelon([list(v.vector(symbols)) for v in values]))


def rationally_independent(values: Sequence[EnergyValue]) -> bool:
    """True when no value is a rational combination of the others (no zeros allowed)."""
    if any(v.is_zero() for v in values):
        return False
    return rational_rank(values) == len(values)


def solve_rational_combination(
    generators: Sequence[EnergyValue], target: EnergyValue
) -> list[Fraction] | None:
    """Coefficients c with sum(c_i * g_i) == target, or None if unsolvable.

    When the generators are rationally independent the solution is unique.
    """
    symbols = symbol_union([target, *generators])
    n = len(symbols)
    m = len(generators)
    if n == 0:
        return [Fraction(0)] * m
    # Rows carry a tail recording how they combine the original generators.
    rows = []
    for i, g in enumerate(generators):
        tail = [Fraction(int(i == j)) for j in range(m)]
        rows.append(list(g.vector(symbols)) + tail)
    echelon: list[list[Fraction]] = []
    for row in rows:
        red = _reduce_against_aug(row, echelon, n)
        lead = next((c for c in range(n) if red[c]), None)
        if lead is None:
            continue
        scale = red[lead]
        echelon.append([v / scale for v in red])
        echelon.sort(key=lambda r: next(c for c in range(n) if r[c]))
    combo = [Fraction(0)] * m
    vec = list(target.vector(symbols))
    for row in echelon:
        j = next(c for c in range(n) if row[c])
        if vec[j]:
            factor = vec[j] / row[j]
            for c in range(n):
                vec[c] -= factor * row[c]
            for c in range(m):
                combo[c] += factor * row[n + c]
    if any(vec):
        return None
    return combo


def _reduce_against_aug(row: list[Fraction], echelon: list[list[Fraction]], n: int) -> list[Fraction]:
    row = row.copy()
    for er in echelon:
        j = next(c for c in range(n) if er[c])
        if row[j]:
            factor = row[j] / er[j]
            for c in range(len(row)):
                row[c] -= factor * er[c]
    return row


def solve_integer_combination(
    generators: Sequence[EnergyValue], target: EnergyValue
) -> list[int] | None:
    """Integer coefficients over the generators, or None when not expressible."""
    combo = solve_rational_combination(generators, target)
    if combo is None or any(c.denominator != 1 for c in combo):
        return None
    return [int(c) for c in combo]


def embedding_basis(energies: Sequence[EnergyValue]) -> list[EnergyValue]:
    """Minimal rationally independent set whose integer span contains every input.

    Computed as the Hermite-form basis of the integer lattice generated by the
    inputs after clearing denominators with one common factor, scaled back.
    Output is canonical for a given input set.
    """
    if not energies:
        raise ValueError("need at least one energy")
    symbols = symbol_union(energies)
    if not symbols:
        return []
    rows, denom = _integer_rows(energies, symbols)
    lattice = IntegerLattice(len(symbols))
    for row in rows:
        lattice.add(row)
    basis = []
    for row in lattice.hermite_basis():
        basis.append(EnergyValue({s: Fraction(v, denom) for s, v in zip(symbols, row)}))
    return basis


@dataclass(frozen=True)
class LadderSpec:
    """Equally spaced energy levels n * interval for n in [n_min, n_max].

    ``interval`` may be the zero value, giving a fully degenerate ladder L(0).
    ``degeneracy`` counts basis states per level.
    """

    interval: EnergyValue
    n_min: int = -8
    n_max: int = 8
    degeneracy: int = 1

    def __post_init__(self):
        if self.n_min > self.n_max:
            raise ValueError("n_min must not exceed n_max")
        if self.degeneracy < 1:
            raise ValueError("degeneracy must be positive")

    @property
    def levels(self) -> range:
        return range(self.n_min, self.n_max + 1)

    @property
    def dim(self) -> int:
        return len(self.levels) * self.degeneracy


def ladder_hamiltonian(spec: LadderSpec, symbols: Sequence[str] | None = None) -> LabeledHamiltonian:
    """Hamiltonian of one truncated ladder, with coordinates attached."""
    syms = tuple(symbols) if symbols is not None else symbol_union([spec.interval])
    energies = []
    labels = []
    coords = []
    for n in spec.levels:
        for a in range(spec.degeneracy):
            energies.append(spec.interval * n)
            labels.append(f"{n}" if spec.degeneracy == 1 else f"{n}.{a}")
            coords.append((n,))
    return LabeledHamiltonian(
        tuple(energies),
        syms,
        tuple(labels),
        ladder_factors=(spec,),
        ladder_coords=tuple(coords),
    )


def ladder_product(specs: Sequence[LadderSpec]) -> LabeledHamiltonian:
    """Tensor product of ladders, in Kronecker order, coordinates combined."""
    if not specs:
        raise ValueError("need at least one ladder")
    symbols = symbol_union([s.interval for s in specs])
    hams = [ladder_hamiltonian(s, symbols) for s in specs]
    return reduce(tensor_hamiltonians, hams)


@dataclass(frozen=True)
class LadderEmbedding:
    """Result of embedding a Hamiltonian into a product of ladders.

    ``coords[i]`` gives the ladder levels of original basis state i over the
    interval factors (the degeneracy register, if any, is excluded);
    ``index_map[i]`` is its basis index inside ``product``.
    """

    product: LabeledHamiltonian
    factors: tuple[LadderSpec, ...]
    coords: tuple[tuple[int, ...], ...]
    alphas: tuple[int, ...]
    index_map: tuple[int, ...]


def embed_into_ladders(
    h: LabeledHamiltonian,
    basis: Sequence[EnergyValue],
    truncation: tuple[int, int] = (-8, 8),
) -> LadderEmbedding:
    """Map each eigenstate of ``h`` to a lattice point of a ladder product.

    Every energy of ``h`` must be an integer combination of ``basis`` (checked
    exactly); levels outside ``truncation`` are a hard error.  Degenerate
    levels of ``h`` are carried by one extra fully degenerate L(0) register.
    """
    n_min, n_max = truncation
    if n_min > n_max:
        raise ValueError("invalid truncation range")
    basis = list(basis)
    coords = []
    for e in h.energies:
        combo = solve_integer_combination(basis, e)
        if combo is None:
            raise ValueError(f"energy {e} is not an integer combination of the basis")
        if any(c < n_min or c > n_max for c in combo):
            raise ValueError(
                f"coordinates {combo} overflow truncation [{n_min}, {n_max}]"
            )
        coords.append(tuple(combo))
    # Degeneracy label: order of appearance within each exact-energy group.
    alphas = []
    seen: dict[EnergyValue, int] = {}
    for e in h.energies:
        alphas.append(seen.get(e, 0))
        seen[e] = alphas[-1] + 1
    multiplicity = max(alphas) + 1 if alphas else 1
    factors = [LadderSpec(b, n_min, n_max) for b in basis]
    if multiplicity > 1:
        factors.append(LadderSpec(ZERO_ENERGY, 0, 0, degeneracy=multiplicity))
    product = ladder_product(factors)
    span = n_max - n_min + 1
    index_map = []
    for c, a in zip(coords, alphas):
        flat = 0
        for level in c:
            flat = flat * span + (level - n_min)
        if multiplicity > 1:
            flat = flat * multiplicity + a
        index_map.append(flat)
    if len(set(index_map)) != len(index_map):
        raise AssertionError("embedding index map is not injective")
    return LadderEmbedding(product, tuple(factors), tuple(coords), tuple(alphas), tuple(index_map))


def degenerate_ladder(product: LabeledHamiltonian, which: Sequence[int]) -> LabeledHamiltonian:
    """Replace the intervals of the selected ladder factors by zero.

    Matrices bound to the old Hamiltonian can be rebound unchanged; only the
    energy labeling (and with it the block structure) moves.
    """
    if product.ladder_factors is None:
        raise ValueError("hamiltonian does not carry ladder factors")
    selected = set(which)
    if any(i < 0 or i >= len(product.ladder_factors) for i in selected):
        raise ValueError("factor index out of range")
    new_specs = [
        replace(spec, interval=ZERO_ENERGY) if i in selected else spec
        for i, spec in enumerate(product.ladder_factors)
    ]
    return ladder_product(new_specs)


def retuned_product(product: LabeledHamiltonian, new_intervals: Sequence[EnergyValue]) -> LabeledHamiltonian:
    """Ladder product with the same level ranges but new intervals."""
    if product.ladder_factors is None:
        raise ValueError("hamiltonian does not carry ladder factors")
    if len(new_intervals) != len(product.ladder_factors):
        raise ValueError("interval count does not match ladder factors")
    new_specs = [
        replace(spec, interval=iv)
        for spec, iv in zip(product.ladder_factors, new_intervals)
    ]
    return ladder_product(new_specs)
