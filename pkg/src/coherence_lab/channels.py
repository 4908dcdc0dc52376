"""Covariant operations in definite-shift Kraus form.

The canonical representation of a covariant channel here is a finite Kraus
set in which every operator carries one exact energy shift: an operator K
with shift delta may only connect levels with E_out - E_in == delta, exactly.
Every covariant channel admits such a form, and it makes covariance a
syntactic property: no time integration appears anywhere.  Verification for
arbitrary Kraus sets goes through the Choi operator instead, whose commutator
with H_out (x) I - I (x) H_in vanishes exactly for covariant channels.

Tolerances are fixed: completeness 1e-10, covariance 1e-10, off-shift support
1e-12.  Exceeding them is a constructor error, not a warning.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .energy import EnergyValue, ZERO_ENERGY
from .lattice import rationally_independent, retuned_product, solve_integer_combination
from .states import (
    DensityMatrix,
    LabeledHamiltonian,
    is_incoherent,
    repair_density,
    same_levels,
    tensor_hamiltonians,
)

COMPLETENESS_TOL = 1e-10
COVARIANCE_TOL = 1e-10
BLOCK_TOL = 1e-10
SHIFT_SUPPORT_TOL = 1e-12


class CovariantChannel:
    """Finite Kraus set with one exact energy shift per operator.

    ``kraus`` is a tuple of (matrix, shift) pairs; matrices map ``in_h`` to
    ``out_h``.  Construction enforces the definite-shift support condition
    (off-shift entries above 1e-12 are an error, smaller ones are zeroed) and
    completeness of the Kraus set to 1e-10 in max-entry norm.
    """

    __slots__ = ("kraus", "in_h", "out_h")

    def __init__(
        self,
        kraus: Sequence[tuple[np.ndarray, EnergyValue]],
        in_h: LabeledHamiltonian,
        out_h: LabeledHamiltonian,
    ):
        cleaned = []
        for mat, shift in kraus:
            arr = np.array(mat, dtype=complex)
            if arr.shape != (out_h.dim, in_h.dim):
                raise ValueError(
                    f"kraus shape {arr.shape} does not match ({out_h.dim}, {in_h.dim})"
                )
            allowed = np.array(
                [
                    [out_h.energies[f] - in_h.energies[e] == shift for e in range(in_h.dim)]
                    for f in range(out_h.dim)
                ]
            )
            stray = np.max(np.abs(np.where(allowed, 0.0, arr))) if arr.size else 0.0
            if stray > SHIFT_SUPPORT_TOL:
                raise ValueError(
                    f"kraus operator has support {stray:.3e} outside its shift {shift}"
                )
            arr = np.where(allowed, arr, 0.0)
            if np.max(np.abs(arr)) == 0.0:
                continue
            arr.setflags(write=False)
            cleaned.append((arr, shift))
        if not cleaned:
            raise ValueError("channel needs at least one nonzero kraus operator")
        total = sum(k.conj().T @ k for k, _ in cleaned)
        defect = np.max(np.abs(total - np.eye(in_h.dim)))
        if defect > COMPLETENESS_TOL:
            raise ValueError(f"kraus set is not complete (defect {defect:.3e})")
        object.__setattr__(self, "kraus", tuple(cleaned))
        object.__setattr__(self, "in_h", in_h)
        object.__setattr__(self, "out_h", out_h)

    def __setattr__(self, name, value):
        raise AttributeError("CovariantChannel is immutable")

    def __len__(self) -> int:
        return len(self.kraus)

    def matrices(self) -> tuple[np.ndarray, ...]:
        return tuple(k for k, _ in self.kraus)

    def shifts(self) -> tuple[EnergyValue, ...]:
        return tuple(s for _, s in self.kraus)

    def __repr__(self) -> str:
        return (
            f"CovariantChannel({len(self.kraus)} kraus, "
            f"{self.in_h.dim} -> {self.out_h.dim})"
        )


def apply(channel: CovariantChannel, state: DensityMatrix) -> DensityMatrix:
    """Apply the channel: sum of K rho K^dagger, bound to the output Hamiltonian."""
    if not same_levels(state.hamiltonian, channel.in_h):
        raise ValueError("state is not defined on the channel input Hamiltonian")
    out = np.zeros((channel.out_h.dim, channel.out_h.dim), dtype=complex)
    for k, _ in channel.kraus:
        out += k @ state.matrix @ k.conj().T
    return repair_density(out, channel.out_h)


def covariance_defect(
    kraus_matrices: Sequence[np.ndarray],
    in_energies: Sequence[float],
    out_energies: Sequence[float],
) -> float:
    """Max-entry magnitude of [J, H_out (x) I - I (x) H_in] for a raw Kraus set.

    Works for any Kraus channel, covariant or not; the Hamiltonians enter
    through their numeric spectra.  Zero (within 1e-10) iff covariant.
    """
    e_in = np.asarray(in_energies, dtype=float)
    e_out = np.asarray(out_energies, dtype=float)
    d = np.subtract.outer(e_out, e_in).reshape(-1)
    n = d.size
    choi = np.zeros((n, n), dtype=complex)
    for k in kraus_matrices:
        v = np.asarray(k, dtype=complex).reshape(-1)
        choi += np.outer(v, v.conj())
    comm = choi * (d[None, :] - d[:, None])
    return float(np.max(np.abs(comm)))


def verify_covariance(channel: CovariantChannel, valuation: Mapping[str, float]) -> float:
    """Choi-commutator norm of a channel under a numeric symbol valuation."""
    return covariance_defect(
        channel.matrices(),
        channel.in_h.evaluate(valuation),
        channel.out_h.evaluate(valuation),
    )


def identity_channel(h: LabeledHamiltonian) -> CovariantChannel:
    return CovariantChannel([(np.eye(h.dim, dtype=complex), ZERO_ENERGY)], h, h)


def dephasing_channel(h: LabeledHamiltonian) -> CovariantChannel:
    """Pinching onto equal-energy blocks as a shift-0 Kraus set of projectors."""
    kraus = []
    for block in h.blocks():
        proj = np.zeros((h.dim, h.dim), dtype=complex)
        for i in block:
            proj[i, i] = 1.0
        kraus.append((proj, ZERO_ENERGY))
    return CovariantChannel(kraus, h, h)


def unitary_channel(u: np.ndarray, h: LabeledHamiltonian) -> CovariantChannel:
    """Energy-conserving unitary as a single shift-0 Kraus operator.

    The unitary must be block-diagonal over the exact equal-energy blocks.
    """
    u = np.asarray(u, dtype=complex)
    return CovariantChannel([(u, ZERO_ENERGY)], h, h)


def _energy_blocks(h: LabeledHamiltonian) -> list[list[int]]:
    return h.blocks()


def from_dilation(
    u: np.ndarray,
    eta: DensityMatrix,
    sys_h: LabeledHamiltonian,
) -> CovariantChannel:
    """Channel rho -> Tr_A[U (rho (x) eta) U^dagger] in definite-shift form.

    ``u`` acts on system (x) ancilla in Kronecker order and must be unitary and
    block-diagonal over the exact total-energy eigenspaces; ``eta`` must be an
    incoherent ancilla state.  The Kraus operators come from the ancilla energy
    eigenbasis and each carries the exact shift E_b - E_a it implements.
    """
    anc_h = eta.hamiltonian
    ds, da = sys_h.dim, anc_h.dim
    u = np.asarray(u, dtype=complex)
    if u.shape != (ds * da, ds * da):
        raise ValueError(f"unitary shape {u.shape} does not match system x ancilla")
    unit_defect = np.max(np.abs(u.conj().T @ u - np.eye(ds * da)))
    if unit_defect > BLOCK_TOL:
        raise ValueError(f"dilation operator is not unitary (defect {unit_defect:.3e})")
    if not is_incoherent(eta, SHIFT_SUPPORT_TOL):
        raise ValueError("ancilla state is not incoherent")
    total = tensor_hamiltonians(sys_h, anc_h)
    block_of = {}
    for bi, block in enumerate(total.blocks()):
        for i in block:
            block_of[i] = bi
    rows = np.array([block_of[i] for i in range(ds * da)])
    off_block = np.where(rows[:, None] == rows[None, :], 0.0, np.abs(u))
    worst = float(np.max(off_block))
    if worst > BLOCK_TOL:
        raise ValueError(
            f"dilation operator is not energy conserving (off-block entry {worst:.3e})"
        )
    # Eigendecompose eta inside each ancilla energy block; eigenvectors then
    # carry a definite ancilla energy.
    pieces: list[tuple[float, np.ndarray, EnergyValue]] = []
    for block in anc_h.blocks():
        idx = np.array(block)
        sub = eta.matrix[np.ix_(idx, idx)]
        w, v = np.linalg.eigh(sub)
        for col in range(len(block)):
            if w[col] <= 1e-15:
                continue
            full = np.zeros(da, dtype=complex)
            full[idx] = v[:, col]
            pieces.append((float(w[col]), full, anc_h.energies[block[0]]))
    u4 = u.reshape(ds, da, ds, da)
    kraus = []
    for a in range(da):
        e_a = anc_h.energies[a]
        for weight, vec, e_b in pieces:
            mat = np.sqrt(weight) * np.tensordot(u4[:, a, :, :], vec, axes=([2], [0]))
            if np.max(np.abs(mat)) <= 1e-15:
                continue
            shift = e_b - e_a
            allowed = np.array(
                [
                    [sys_h.energies[f] - sys_h.energies[e] == shift for e in range(ds)]
                    for f in range(ds)
                ]
            )
            # Off-shift residue is bounded by the verified block structure.
            mat = np.where(allowed, mat, 0.0)
            kraus.append((mat, shift))
    return CovariantChannel(kraus, sys_h, sys_h)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix with the
    R-diagonal phase fixed."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_covariant(
    h: LabeledHamiltonian,
    ancilla_dim: int = 2,
    seed: int | np.random.Generator = 0,
    ancilla_energies: Sequence[EnergyValue] | None = None,
    out_h: LabeledHamiltonian | None = None,
) -> CovariantChannel:
    """Seeded random covariant channel on ``h``: Haar-random unitary on each
    total-energy block of system (x) ancilla, random diagonal ancilla state.

    Ancilla energies default to cycling through the system spectrum, which
    keeps the total-energy blocks nontrivial.  Only endomorphisms are sampled;
    passing a distinct ``out_h`` is rejected.
    """
    if out_h is not None and not same_levels(out_h, h):
        raise ValueError("random covariant channels are sampled with out_h == in_h")
    if ancilla_dim < 1:
        raise ValueError("ancilla_dim must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if ancilla_energies is None:
        ancilla_energies = tuple(h.energies[i % h.dim] for i in range(ancilla_dim))
    else:
        ancilla_energies = tuple(ancilla_energies)
        if len(ancilla_energies) != ancilla_dim:
            raise ValueError("ancilla_energies length must equal ancilla_dim")
    anc_h = LabeledHamiltonian(ancilla_energies, h.symbols)
    total = tensor_hamiltonians(h, anc_h)
    dim = total.dim
    u = np.zeros((dim, dim), dtype=complex)
    for block in total.blocks():
        idx = np.array(block)
        u[np.ix_(idx, idx)] = haar_unitary(len(block), rng)
    probs = rng.dirichlet(np.ones(ancilla_dim))
    eta = DensityMatrix.diagonal(probs, anc_h)
    return from_dilation(u, eta, h)


def compose(second: CovariantChannel, first: CovariantChannel) -> CovariantChannel:
    """Channel composition second after first; shifts add."""
    if not same_levels(first.out_h, second.in_h):
        raise ValueError("channels do not compose: output/input Hamiltonians differ")
    kraus = [
        (k2 @ k1, s2 + s1)
        for k2, s2 in second.kraus
        for k1, s1 in first.kraus
    ]
    return CovariantChannel(kraus, first.in_h, second.out_h)


def retune(
    channel: CovariantChannel, new_intervals: Sequence[EnergyValue]
) -> CovariantChannel:
    """Rebuild the channel on ladders with new intervals, matrices untouched.

    The channel's Hamiltonians must be ladder products over rationally
    independent intervals.  Each Kraus shift decomposes uniquely into integer
    ladder steps; the new shift is re-synthesized from those steps under the
    new intervals, which may be anything, including zero (complete
    degeneration).  Covariance survives by construction.
    """
    in_factors = channel.in_h.ladder_factors
    out_factors = channel.out_h.ladder_factors
    if in_factors is None or out_factors is None:
        raise ValueError("channel Hamiltonians do not carry ladder factors")
    old_intervals = [f.interval for f in in_factors]
    if [f.interval for f in out_factors] != old_intervals:
        raise ValueError("input and output ladders disagree on intervals")
    if len(new_intervals) != len(old_intervals):
        raise ValueError(
            f"expected {len(old_intervals)} intervals, got {len(new_intervals)}"
        )
    if not rationally_independent(old_intervals):
        raise ValueError("source intervals must be rationally independent")
    new_in = retuned_product(channel.in_h, new_intervals)
    new_out = retuned_product(channel.out_h, new_intervals)
    kraus = []
    for mat, shift in channel.kraus:
        steps = solve_integer_combination(old_intervals, shift)
        if steps is None:
            raise ValueError(f"shift {shift} is not an integer step combination")
        new_shift = ZERO_ENERGY
        for step, interval in zip(steps, new_intervals):
            new_shift = new_shift + interval * step
        kraus.append((mat, new_shift))
    return CovariantChannel(kraus, new_in, new_out)
