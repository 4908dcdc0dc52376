"""Asymmetry monotones and their consistency sweeps.

Quantum Fisher information and Wigner-Yanase skew information are the two
tensor-product additive monotones; relative entropy of asymmetry is carried as
a third witness.  Entropies use the natural log.  The monotonicity suite and
the superadditivity probe report violations instead of raising, so sweeps can
be inspected.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping, Sequence

import numpy as np

from .channels import CovariantChannel, apply
from .energy import ZERO_ENERGY, energy
from .states import (
    DensityMatrix,
    LabeledHamiltonian,
    dephase,
    partial_trace,
    tensor_hamiltonians,
)

PAIR_CUTOFF = 1e-14

THREADS_ENV = "COHERENCE_LAB_THREADS"


def worker_count() -> int:
    """Parallelism cap for sweeps, from COHERENCE_LAB_THREADS (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _sweep_map(fn, items):
    workers = worker_count()
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


class MeasureName(Enum):
    QFI = "qfi"
    WY_SKEW = "wy_skew"
    REL_ENT_ASYM = "rel_ent_asym"


def qfi(state: DensityMatrix, valuation: Mapping[str, float]) -> float:
    """Quantum Fisher information of the state with respect to its Hamiltonian.

    F = 2 sum_{k,l} (p_k - p_l)^2 / (p_k + p_l) |<k|H|l>|^2 over eigenpairs,
    skipping pairs with p_k + p_l below 1e-14 (removable singularity).
    Equals 4 Var(H) on pure states and vanishes exactly on incoherent states.
    """
    w, v = np.linalg.eigh(state.matrix)
    energies = state.hamiltonian.evaluate(valuation)
    h_eig = v.conj().T @ (energies[:, None] * v)
    total = 0.0
    for k in range(len(w)):
        for l in range(len(w)):
            denom = w[k] + w[l]
            if denom <= PAIR_CUTOFF:
                continue
            total += (w[k] - w[l]) ** 2 / denom * abs(h_eig[k, l]) ** 2
    return float(2.0 * total)


def wy_skew(state: DensityMatrix, valuation: Mapping[str, float]) -> float:
    """Wigner-Yanase skew information: -Tr([sqrt(rho), H]^2) / 2."""
    w, v = np.linalg.eigh(state.matrix)
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    energies = state.hamiltonian.evaluate(valuation)
    h = np.diag(energies.astype(complex))
    comm = root @ h - h @ root
    value = -0.5 * np.trace(comm @ comm)
    return float(np.real(value))


def _entropy(matrix: np.ndarray) -> float:
    w = np.clip(np.linalg.eigvalsh(matrix), 0.0, None)
    w = w[w > 0]
    return float(-np.sum(w * np.log(w)))


def rel_ent_asym(state: DensityMatrix) -> float:
    """Relative entropy of asymmetry S(dephase(rho)) - S(rho), natural log."""
    return _entropy(dephase(state).matrix) - _entropy(state.matrix)


def _measure_fn(name: MeasureName) -> Callable[[DensityMatrix, Mapping[str, float]], float]:
    if name is MeasureName.QFI:
        return qfi
    if name is MeasureName.WY_SKEW:
        return wy_skew
    return lambda state, valuation: rel_ent_asym(state)


@dataclass(frozen=True)
class MeasureReport:
    name: MeasureName
    value: float
    state: DensityMatrix
    valuation: dict[str, float] | None

    def __post_init__(self):
        if self.value < -1e-12:
            raise ValueError(f"measure value must be nonnegative, got {self.value}")


def measure_report(
    name: MeasureName, state: DensityMatrix, valuation: Mapping[str, float]
) -> MeasureReport:
    value = _measure_fn(name)(state, valuation)
    return MeasureReport(name, max(0.0, float(value)), state, dict(valuation))


def all_measures(state: DensityMatrix, valuation: Mapping[str, float]) -> list[MeasureReport]:
    return [measure_report(name, state, valuation) for name in MeasureName]


@dataclass(frozen=True)
class MonotonicityViolation:
    channel_index: int
    state_index: int
    before: float
    after: float


@dataclass(frozen=True)
class MonotonicityReport:
    checked: int
    violations: tuple[MonotonicityViolation, ...]
    max_increase: float

    @property
    def passed(self) -> bool:
        return not self.violations


def monotonicity_suite(
    name: MeasureName,
    channels: Sequence[CovariantChannel],
    states: Sequence[DensityMatrix],
    valuation: Mapping[str, float],
    tol: float = 1e-9,
) -> MonotonicityReport:
    """Check measure(channel(state)) <= measure(state) + tol over the grid."""
    fn = _measure_fn(name)
    pairs = [
        (ci, si, channel, state)
        for ci, channel in enumerate(channels)
        for si, state in enumerate(states)
    ]

    def evaluate(item):
        ci, si, channel, state = item
        before = fn(state, valuation)
        after = fn(apply(channel, state), valuation)
        return ci, si, before, after

    results = _sweep_map(evaluate, pairs)
    violations = []
    max_increase = 0.0
    for ci, si, before, after in results:
        max_increase = max(max_increase, after - before)
        if after > before + tol:
            violations.append(MonotonicityViolation(ci, si, before, after))
    return MonotonicityReport(len(pairs), tuple(violations), max_increase)


def copy_bound_gap(
    state: DensityMatrix,
    n: int,
    produced: DensityMatrix,
    valuation: Mapping[str, float],
) -> float:
    """Slack in the n-copy bound qfi(state) >= qfi(produced) / n.

    ``produced`` must come from a covariant operation on n copies of the
    state; a negative return value flags a violation.
    """
    if n < 1:
        raise ValueError("n must be positive")
    return qfi(state, valuation) - qfi(produced, valuation) / n


@dataclass(frozen=True)
class SuperadditivityProbe:
    trials: int
    best_gap: float
    best_trial: int
    witness_found: bool
    seed: int


def superadditivity_probe(
    seed: int,
    trials: int,
    name: MeasureName = MeasureName.QFI,
    dim_a: int = 2,
    dim_b: int = 2,
    witness_tol: float = 1e-8,
) -> SuperadditivityProbe:
    """Randomized search for bipartite states breaking superadditivity.

    Samples joint states under H = H_A (x) I + I (x) H_B and records the most
    negative gap measure(joint) - measure(marginal_A) - measure(marginal_B).
    Nothing is asserted a priori; a strictly negative gap beyond ``witness_tol``
    is reported as a witness.
    """
    rng = np.random.default_rng(seed)
    valuation = {"u": 1.0}
    h_a = LabeledHamiltonian(
        tuple(energy(u=i) if i else ZERO_ENERGY for i in range(dim_a)), ("u",)
    )
    h_b = LabeledHamiltonian(
        tuple(energy(u=i) if i else ZERO_ENERGY for i in range(dim_b)), ("u",)
    )
    joint_h = tensor_hamiltonians(h_a, h_b)
    fn = _measure_fn(name)
    best_gap = np.inf
    best_trial = -1
    for trial in range(trials):
        g = rng.standard_normal((dim_a * dim_b, dim_a * dim_b)) + 1j * rng.standard_normal(
            (dim_a * dim_b, dim_a * dim_b)
        )
        mat = g @ g.conj().T
        mat /= np.real(np.trace(mat))
        joint = DensityMatrix(mat, joint_h, validate=False)
        gap = (
            fn(joint, valuation)
            - fn(partial_trace(joint, keep=(0,)), valuation)
            - fn(partial_trace(joint, keep=(1,)), valuation)
        )
        if gap < best_gap:
            best_gap = gap
            best_trial = trial
    return SuperadditivityProbe(
        trials=trials,
        best_gap=float(best_gap),
        best_trial=best_trial,
        witness_found=bool(best_gap < -witness_tol),
        seed=seed,
    )
