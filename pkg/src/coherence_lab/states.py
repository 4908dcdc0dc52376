"""Density matrices bound to labeled Hamiltonians.

A :class:`LabeledHamiltonian` is an ordered basis with one exact
:class:`~coherence_lab.energy.EnergyValue` per basis state; it defines the
energy blocks, degeneracies and time evolution of everything attached to it.
States, channels and measures all operate relative to such a labeling.
Degeneracy is decided by exact energy equality, never by numeric closeness.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import reduce
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

from .energy import EnergyValue, symbol_union

if TYPE_CHECKING:
    from .lattice import LadderSpec

log = logging.getLogger(__name__)

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-10


@dataclass(frozen=True)
class LabeledHamiltonian:
    """Diagonal Hamiltonian: one exact energy per basis index.

    ``symbols`` declares the rationally independent symbol context shared by
    all energies.  ``parts`` records a tensor factorization when the space was
    built as a product; ``ladder_factors``/``ladder_coords`` are present when
    every basis state carries integer ladder coordinates (see
    :mod:`coherence_lab.lattice`).
    """

    energies: tuple[EnergyValue, ...]
    symbols: tuple[str, ...]
    basis_labels: tuple[str, ...] | None = None
    parts: tuple["LabeledHamiltonian", ...] | None = None
    ladder_factors: tuple["LadderSpec", ...] | None = None
    ladder_coords: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if not self.energies:
            raise ValueError("hamiltonian needs at least one level")
        declared = set(self.symbols)
        for e in self.energies:
            extra = set(e.symbols) - declared
            if extra:
                raise ValueError(f"energy uses undeclared symbols {sorted(extra)}")
        if self.basis_labels is not None and len(self.basis_labels) != len(self.energies):
            raise ValueError("basis_labels length must equal dim")
        if self.parts is not None:
            prod = 1
            for p in self.parts:
                prod *= p.dim
            if prod != len(self.energies):
                raise ValueError("tensor factorization does not match dim")
        if self.ladder_coords is not None and len(self.ladder_coords) != len(self.energies):
            raise ValueError("ladder_coords length must equal dim")

    @property
    def dim(self) -> int:
        return len(self.energies)

    def evaluate(self, valuation: Mapping[str, float]) -> np.ndarray:
        missing = [s for s in self.symbols if s not in valuation]
        if missing:
            raise KeyError(f"valuation is missing symbols {missing}")
        return np.array([e.evaluate(valuation) for e in self.energies], dtype=float)

    def diff(self, i: int, j: int) -> EnergyValue:
        """Energy interval E_i - E_j as an exact value."""
        return self.energies[i] - self.energies[j]

    def blocks(self) -> list[list[int]]:
        """Basis indices grouped by exact energy, in order of first appearance."""
        order: list[EnergyValue] = []
        grouped: dict[EnergyValue, list[int]] = {}
        for i, e in enumerate(self.energies):
            if e not in grouped:
                grouped[e] = []
                order.append(e)
            grouped[e].append(i)
        return [grouped[e] for e in order]


def build_hamiltonian(
    energies: Sequence[EnergyValue],
    symbols: Sequence[str] | None = None,
    basis_labels: Sequence[str] | None = None,
) -> LabeledHamiltonian:
    """Construct a Hamiltonian; the symbol context defaults to the symbols used."""
    syms = tuple(symbols) if symbols is not None else symbol_union(energies)
    labels = tuple(basis_labels) if basis_labels is not None else None
    return LabeledHamiltonian(tuple(energies), syms, labels)


def same_levels(a: LabeledHamiltonian, b: LabeledHamiltonian) -> bool:
    """True when two Hamiltonians agree on dimension, energies and context."""
    return a.energies == b.energies and a.symbols == b.symbols


def _parts_of(h: LabeledHamiltonian) -> tuple[LabeledHamiltonian, ...]:
    return h.parts if h.parts is not None else (h,)


def tensor_hamiltonians(a: LabeledHamiltonian, b: LabeledHamiltonian) -> LabeledHamiltonian:
    """Composite Hamiltonian with pairwise energy sums, in Kronecker order."""
    if a.symbols != b.symbols:
        raise ValueError(
            f"mismatched symbol contexts: {a.symbols} vs {b.symbols}"
        )
    energies = tuple(ea + eb for ea in a.energies for eb in b.energies)
    labels = None
    if a.basis_labels is not None and b.basis_labels is not None:
        labels = tuple(f"{la}|{lb}" for la in a.basis_labels for lb in b.basis_labels)
    factors = None
    coords = None
    if a.ladder_factors is not None and b.ladder_factors is not None:
        factors = a.ladder_factors + b.ladder_factors
        coords = tuple(ca + cb for ca in a.ladder_coords for cb in b.ladder_coords)
    return LabeledHamiltonian(
        energies,
        a.symbols,
        labels,
        parts=_parts_of(a) + _parts_of(b),
        ladder_factors=factors,
        ladder_coords=coords,
    )


def tensor_power_hamiltonian(h: LabeledHamiltonian, n: int) -> LabeledHamiltonian:
    if n < 1:
        raise ValueError("tensor power needs n >= 1")
    return reduce(tensor_hamiltonians, [h] * n)


class DensityMatrix:
    """Complex Hermitian PSD unit-trace matrix bound to a Hamiltonian.

    Immutable after construction.  Validation tolerances: Hermiticity and
    trace to 1e-12 (max entry / absolute deviation), smallest eigenvalue
    no less than -1e-10.
    """

    __slots__ = ("matrix", "hamiltonian")

    def __init__(self, matrix, hamiltonian: LabeledHamiltonian, *, validate: bool = True):
        mat = np.array(matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {mat.shape}")
        if mat.shape[0] != hamiltonian.dim:
            raise ValueError(
                f"matrix dim {mat.shape[0]} does not match hamiltonian dim {hamiltonian.dim}"
            )
        if validate:
            herm = np.max(np.abs(mat - mat.conj().T))
            if herm > HERMITICITY_TOL:
                raise ValueError(f"matrix is not Hermitian (max deviation {herm:.3e})")
            tr = np.trace(mat)
            if abs(tr - 1.0) > TRACE_TOL:
                raise ValueError(f"trace must be 1, got {tr}")
            lo = float(np.linalg.eigvalsh(0.5 * (mat + mat.conj().T)).min())
            if lo < EIGENVALUE_FLOOR:
                raise ValueError(f"matrix is not PSD (min eigenvalue {lo:.3e})")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "hamiltonian", hamiltonian)

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim

    @classmethod
    def pure(cls, amplitudes, hamiltonian: LabeledHamiltonian) -> "DensityMatrix":
        vec = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise ValueError("zero vector is not a state")
        vec = vec / norm
        return cls(np.outer(vec, vec.conj()), hamiltonian, validate=False)

    @classmethod
    def diagonal(cls, probs, hamiltonian: LabeledHamiltonian) -> "DensityMatrix":
        p = np.asarray(probs, dtype=float)
        if np.any(p < 0) or abs(p.sum() - 1.0) > TRACE_TOL:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        return cls(np.diag(p.astype(complex)), hamiltonian, validate=False)

    @classmethod
    def maximally_mixed(cls, hamiltonian: LabeledHamiltonian) -> "DensityMatrix":
        d = hamiltonian.dim
        return cls(np.eye(d, dtype=complex) / d, hamiltonian, validate=False)

    def rebind(self, hamiltonian: LabeledHamiltonian) -> "DensityMatrix":
        """Same matrix data on a different Hamiltonian of equal dimension."""
        return DensityMatrix(self.matrix, hamiltonian, validate=False)

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"


def repair_density(matrix: np.ndarray, hamiltonian: LabeledHamiltonian) -> DensityMatrix:
    """Bind raw channel output: hermitize, clip tiny negatives, renormalize.

    Eigenvalues below -1e-10 are a hard error; deviations of the trace beyond
    1e-12 are logged before renormalization.
    """
    mat = 0.5 * (np.asarray(matrix, dtype=complex) + np.asarray(matrix, dtype=complex).conj().T)
    tr = float(np.real(np.trace(mat)))
    if abs(tr - 1.0) > TRACE_TOL:
        log.warning("channel output trace deviates by %.3e; renormalizing", tr - 1.0)
    if tr <= 0:
        raise ValueError(f"channel output has nonpositive trace {tr}")
    mat = mat / tr
    w, v = np.linalg.eigh(mat)
    if w.min() < EIGENVALUE_FLOOR:
        raise ValueError(f"channel output is not PSD (min eigenvalue {w.min():.3e})")
    if w.min() < 0:
        w = np.clip(w, 0.0, None)
        mat = (v * w) @ v.conj().T
        mat = mat / np.real(np.trace(mat))
    return DensityMatrix(mat, hamiltonian, validate=False)


def tensor(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    """Kronecker product; composite energies are pairwise sums."""
    h = tensor_hamiltonians(a.hamiltonian, b.hamiltonian)
    return DensityMatrix(np.kron(a.matrix, b.matrix), h, validate=False)


def tensor_all(states: Sequence[DensityMatrix]) -> DensityMatrix:
    if not states:
        raise ValueError("need at least one state")
    return reduce(tensor, states)


def tensor_power(state: DensityMatrix, n: int) -> DensityMatrix:
    return tensor_all([state] * n)


_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def partial_trace(state: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Trace out all tensor factors except ``keep`` (original order preserved).

    The state must carry a tensor factorization on its Hamiltonian.
    """
    parts = state.hamiltonian.parts
    if parts is None:
        parts = (state.hamiltonian,)
    dims = [p.dim for p in parts]
    kept = sorted(set(keep))
    if not kept:
        raise ValueError("keep must name at least one factor")
    if any(k < 0 or k >= len(parts) for k in kept):
        raise ValueError(f"factor index out of range for {len(parts)} factors")
    if len(kept) == len(parts):
        return state
    n = len(parts)
    if 2 * n > len(_LETTERS):
        raise ValueError("too many tensor factors for partial trace")
    row = list(_LETTERS[:n])
    col = list(_LETTERS[n:2 * n])
    for i in range(n):
        if i not in kept:
            col[i] = row[i]
    out = "".join(row[i] for i in kept) + "".join(_LETTERS[n + i] for i in kept)
    spec = "".join(row) + "".join(col) + "->" + out
    tensor_form = state.matrix.reshape(dims + dims)
    d_keep = int(np.prod([dims[i] for i in kept]))
    reduced = np.einsum(spec, tensor_form).reshape(d_keep, d_keep)
    new_h = reduce(tensor_hamiltonians, [parts[i] for i in kept])
    return DensityMatrix(reduced, new_h, validate=False)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """One-norm ||a - b||_1, the sum of absolute eigenvalues of the difference.

    All bounds reported by this package are quoted in this one-norm form; use
    :func:`half_trace_distance` for the d = ||.||_1 / 2 convention.
    """
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    diff = a.matrix - b.matrix
    return float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def half_trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """d(a, b) = ||a - b||_1 / 2."""
    return 0.5 * trace_distance(a, b)


def time_evolve(state: DensityMatrix, t: float, valuation: Mapping[str, float]) -> DensityMatrix:
    """Unitary time evolution: entry (i, j) picks up the phase e^{-i(E_i-E_j)t}."""
    e = state.hamiltonian.evaluate(valuation)
    phases = np.exp(-1j * t * (e[:, None] - e[None, :]))
    return DensityMatrix(state.matrix * phases, state.hamiltonian, validate=False)


def _block_mask(h: LabeledHamiltonian) -> np.ndarray:
    mask = np.zeros((h.dim, h.dim))
    for block in h.blocks():
        mask[np.ix_(block, block)] = 1.0
    return mask


def dephase(state: DensityMatrix) -> DensityMatrix:
    """Pinch onto equal-energy blocks; entries between exact-distinct energies are zeroed."""
    mask = _block_mask(state.hamiltonian)
    return DensityMatrix(state.matrix * mask, state.hamiltonian, validate=False)


def is_incoherent(state: DensityMatrix, tol: float = 1e-12) -> bool:
    """True when every entry outside the equal-energy blocks is at most ``tol``."""
    return coherence_magnitude(state) <= tol


def coherence_magnitude(state: DensityMatrix) -> float:
    """Largest off-block entry magnitude."""
    mask = _block_mask(state.hamiltonian)
    off = state.matrix * (1.0 - mask)
    return float(np.max(np.abs(off))) if off.size else 0.0
