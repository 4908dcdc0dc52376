"""Constructive protocols: extraction, pumping, catalyst building, scheduling.

Everything here is built from the definite-shift channel primitives, so each
returned channel passes covariance verification by construction.  The
correlated-catalyst constructor turns any covariant endomorphism on n copies
into a single-copy transformation with an exactly restored catalyst; the
recombination scheduler organizes marginal-catalyst reuse so that no pair of
catalyst instances ever meets twice.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product as iter_product
from math import ceil
from typing import Sequence

import numpy as np

from .energy import ZERO_ENERGY, energy
from .states import (
    DensityMatrix,
    LabeledHamiltonian,
    build_hamiltonian,
    half_trace_distance,
    partial_trace,
    same_levels,
    tensor,
    tensor_all,
    tensor_hamiltonians,
    tensor_power,
    tensor_power_hamiltonian,
    trace_distance,
)
from .channels import CovariantChannel, apply, compose, unitary_channel


# ---------------------------------------------------------------------------
# Weak-qubit extraction and pumping


def weak_qubit_channel(h: LabeledHamiltonian, i: int, j: int) -> CovariantChannel:
    """Covariant channel concentrating the (i, j) coherence onto one qubit.

    Kraus set: A = |0><i| + |1><j| plus B_k = |0><k| for the remaining levels.
    The output lives on diag(0, E_j - E_i); the (0, 1) entry of the output is
    exactly the (i, j) entry of the input.
    """
    d = h.dim
    if not (0 <= i < d and 0 <= j < d) or i == j:
        raise ValueError(f"invalid level pair ({i}, {j}) for dim {d}")
    gap = h.energies[j] - h.energies[i]
    if gap.is_zero():
        raise ValueError(f"levels {i} and {j} are degenerate; no qubit gap")
    out_h = LabeledHamiltonian((ZERO_ENERGY, gap), h.symbols, ("0", "1"))
    a = np.zeros((2, d), dtype=complex)
    a[0, i] = 1.0
    a[1, j] = 1.0
    kraus = [(a, ZERO_ENERGY - h.energies[i])]
    for k in range(d):
        if k in (i, j):
            continue
        b = np.zeros((2, d), dtype=complex)
        b[0, k] = 1.0
        kraus.append((b, ZERO_ENERGY - h.energies[k]))
    return CovariantChannel(kraus, h, out_h)


def extract_weak_qubit(state: DensityMatrix, pair: tuple[int, int]) -> DensityMatrix:
    """Extract the coherence between one level pair into a fresh qubit."""
    i, j = pair
    channel = weak_qubit_channel(state.hamiltonian, i, j)
    return apply(channel, state)


def pump_unitary(theta: float) -> np.ndarray:
    """Energy-conserving two-qubit rotation acting on span{|01>, |10>}."""
    c, s = np.cos(theta), np.sin(theta)
    u = np.eye(4, dtype=complex)
    u[1, 1] = c
    u[1, 2] = -s
    u[2, 1] = s
    u[2, 2] = c
    return u


def pump_qubits(sigma: DensityMatrix, theta: float) -> DensityMatrix:
    """One pumping round: rotate two copies inside the degenerate middle block,
    then discard the second copy.

    For sigma = [[p, c], [c*, 1-p]] the output coherence is
    c * (cos(theta) + (2p - 1) sin(theta)).
    """
    if sigma.dim != 2:
        raise ValueError("pumping acts on qubit states")
    pair_h = tensor_hamiltonians(sigma.hamiltonian, sigma.hamiltonian)
    pair = tensor(sigma, sigma)
    channel = unitary_channel(pump_unitary(theta), pair_h)
    rotated = apply(channel, pair).rebind(pair_h)
    return partial_trace(rotated, keep=(0,))


# ---------------------------------------------------------------------------
# Consistency counterexample family: good local states, bad global state


def default_counterexample_hamiltonian() -> LabeledHamiltonian:
    return build_hamiltonian([ZERO_ENERGY, energy(u=1)], symbols=("u",), basis_labels=("0", "1"))


def plus_state(qubit_h: LabeledHamiltonian | None = None) -> DensityMatrix:
    h = qubit_h if qubit_h is not None else default_counterexample_hamiltonian()
    return DensityMatrix.pure([1.0, 1.0], h)


def build_counterexample(
    m: int,
    eps: float,
    delta: float,
    qubit_h: LabeledHamiltonian | None = None,
) -> DensityMatrix:
    """The m-qubit family mixing a weakly depolarized product with a small
    symmetric pure contribution.

    Each single-qubit marginal stays close to |+><+| and cross-copy
    correlations stay of order delta, while the distance of the whole state
    from |+><+|^(x m) grows toward 2(1 - delta/2).
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if not (0.0 < eps < 1.0) or not (0.0 < delta < 1.0):
        raise ValueError("require eps and delta in (0, 1)")
    h = qubit_h if qubit_h is not None else default_counterexample_hamiltonian()
    if h.dim != 2:
        raise ValueError("counterexample family lives on qubits")
    plus = 0.5 * np.array([[1, 1], [1, 1]], dtype=complex)
    minus = 0.5 * np.array([[1, -1], [-1, 1]], dtype=complex)
    noisy = (1.0 - eps / 2.0) * plus + (eps / 2.0) * minus

    def kron_power(mat: np.ndarray) -> np.ndarray:
        out = np.array([[1.0 + 0j]])
        for _ in range(m):
            out = np.kron(out, mat)
        return out

    tau = (
        (1.0 - delta) * kron_power(noisy)
        + (delta / 2.0) * (kron_power(plus) + kron_power(minus))
    )
    return DensityMatrix(tau, tensor_power_hamiltonian(h, m))


def counterexample_distance_formula(m: int, eps: float, delta: float) -> float:
    """Closed form for || tau_m - |+><+|^(x m) ||_1."""
    return 2.0 * (1.0 - (1.0 - delta) * (1.0 - eps / 2.0) ** m - delta / 2.0)


@dataclass(frozen=True)
class CounterexampleRow:
    m: int
    eps: float
    delta: float
    marginal_dist: float
    correlation: float
    global_dist: float
    f_formula: float


def counterexample_row(
    m: int, eps: float, delta: float, qubit_h: LabeledHamiltonian | None = None
) -> CounterexampleRow:
    """Computed distances for one family member.

    ``marginal_dist`` is the d = ||.||_1 / 2 distance of a single-qubit
    marginal from |+><+|; ``correlation`` and ``global_dist`` are one-norms.
    """
    h = qubit_h if qubit_h is not None else default_counterexample_hamiltonian()
    tau = build_counterexample(m, eps, delta, h)
    plus = plus_state(h)
    target = tensor_power(plus, m) if m > 1 else plus
    global_dist = trace_distance(tau, target)
    if m == 1:
        marginal = tau
        correlation = 0.0
    else:
        marginal = partial_trace(tau, keep=(0,))
        rest = partial_trace(tau, keep=tuple(range(1, m)))
        correlation = trace_distance(tau, tensor(marginal, rest))
    return CounterexampleRow(
        m=m,
        eps=eps,
        delta=delta,
        marginal_dist=half_trace_distance(marginal, plus),
        correlation=correlation,
        global_dist=global_dist,
        f_formula=counterexample_distance_formula(m, eps, delta),
    )


# ---------------------------------------------------------------------------
# Correlated catalyst from an n-copy transformation


@dataclass(frozen=True)
class CatalystBundle:
    """Catalyst state on S^(x (n-1)) (x) R plus the composite slot layout.

    In the composite system the channel acts on, slot 0 is the main system,
    ``catalyst_slots`` are the stored copies and ``register_slot`` is the
    zero-energy classical register of dimension ``register_dim``.
    """

    state: DensityMatrix
    register_dim: int
    catalyst_slots: tuple[int, ...]
    register_slot: int


def register_hamiltonian(n: int, symbols: tuple[str, ...]) -> LabeledHamiltonian:
    """Classical n-level register: every level at exact zero energy."""
    return LabeledHamiltonian(
        (ZERO_ENERGY,) * n, symbols, tuple(f"k={k + 1}" for k in range(n))
    )


def _cycle_permutation(ds: int, n: int) -> np.ndarray:
    """Permutation on n identical slots sending |s_1..s_n> to |s_n, s_1..s_{n-1}>."""
    dim = ds**n
    perm = np.zeros((dim, dim))
    olds = np.arange(dim)
    digits = np.array(np.unravel_index(olds, [ds] * n))
    new_digits = np.vstack([digits[-1:], digits[:-1]])
    news = np.ravel_multi_index(tuple(new_digits), [ds] * n)
    perm[news, olds] = 1.0
    return perm


def build_correlated_catalyst(
    rho: DensityMatrix,
    channel_n: CovariantChannel,
    dim_cap: int = 4096,
) -> tuple[CatalystBundle, CovariantChannel]:
    """Turn a covariant endomorphism on n copies into a catalytic single-copy map.

    With tau = channel_n(rho^(x n)) and tau_i its reduced state on the first i
    copies, the catalyst is c = (1/n) sum_k rho^(x (k-1)) (x) tau_{n-k} (x) |k><k|_R.
    The returned channel applies channel_n conditioned on the register reading
    n, advances the register cyclically, and rotates the copy slots so that
    slot 0 is the fresh output copy.  Exactness contract: tracing out slot 0
    returns c, and the slot-0 marginal is the average single-copy marginal of
    tau, both up to numerical precision.
    """
    if not same_levels(channel_n.in_h, channel_n.out_h):
        raise ValueError("channel must map its input system to itself")
    ds = rho.dim
    dtot = channel_n.in_h.dim
    n = 1
    size = ds
    while size < dtot:
        size *= ds
        n += 1
    if size != dtot:
        raise ValueError("channel input is not a tensor power of the state's system")
    copies_h = tensor_power_hamiltonian(rho.hamiltonian, n)
    if not same_levels(channel_n.in_h, copies_h):
        raise ValueError("channel input Hamiltonian is not the n-copy system")
    if ds**n * n > dim_cap:
        raise ValueError(f"composite dimension {ds**n * n} exceeds cap {dim_cap}")

    tau = apply(channel_n, tensor_power(rho, n)).rebind(copies_h)
    # Reduced states of tau on the first i copies; index 0 is the empty factor.
    tau_prefix: list[np.ndarray | None] = [None] * (n + 1)
    tau_prefix[n] = tau.matrix
    for i in range(1, n):
        tau_prefix[i] = partial_trace(tau, keep=tuple(range(i))).matrix

    reg_h = register_hamiltonian(n, rho.hamiltonian.symbols)
    d_cat = ds ** (n - 1)
    cat_matrix = np.zeros((d_cat * n, d_cat * n), dtype=complex)
    for k in range(1, n + 1):
        term = np.array([[1.0 + 0j]])
        for _ in range(k - 1):
            term = np.kron(term, rho.matrix)
        if n - k > 0:
            term = np.kron(term, tau_prefix[n - k])
        cat_matrix[k - 1 :: n, k - 1 :: n] += term / n
    if n == 1:
        catalyst_h: LabeledHamiltonian = reg_h
    else:
        catalyst_h = tensor_hamiltonians(
            tensor_power_hamiltonian(rho.hamiltonian, n - 1), reg_h
        )
    catalyst = DensityMatrix(cat_matrix, catalyst_h)

    full_h = tensor_hamiltonians(copies_h, reg_h)
    proj_n = np.zeros((n, n), dtype=complex)
    proj_n[n - 1, n - 1] = 1.0
    guard = np.eye(n, dtype=complex) - proj_n
    step1_kraus = [(np.kron(k, proj_n), shift) for k, shift in channel_n.kraus]
    if n > 1:
        step1_kraus.append((np.kron(np.eye(dtot, dtype=complex), guard), ZERO_ENERGY))
    step1 = CovariantChannel(step1_kraus, full_h, full_h)

    advance = np.zeros((n, n), dtype=complex)
    for k in range(n):
        advance[(k + 1) % n, k] = 1.0
    rotate = np.kron(_cycle_permutation(ds, n), advance)
    step2 = unitary_channel(rotate, full_h)

    full_channel = compose(step2, step1)
    bundle = CatalystBundle(
        state=catalyst,
        register_dim=n,
        catalyst_slots=tuple(range(1, n)),
        register_slot=n,
    )
    return bundle, full_channel


def average_single_copy_marginal(tau: DensityMatrix) -> DensityMatrix:
    """(1/n) sum_i Tr_{all but copy i} of an n-copy state."""
    parts = tau.hamiltonian.parts
    if parts is None:
        raise ValueError("state carries no tensor factorization")
    n = len(parts)
    first = partial_trace(tau, keep=(0,))
    total = first.matrix.copy()
    for i in range(1, n):
        if not same_levels(parts[i], parts[0]):
            raise ValueError("copies live on different Hamiltonians")
        total += partial_trace(tau, keep=(i,)).matrix
    return DensityMatrix(total / n, first.hamiltonian)


# ---------------------------------------------------------------------------
# Recombination schedule for partially reusable marginal catalysts


@dataclass(frozen=True)
class ScheduleRound:
    """One round of conversions: groups[g][j-1] is the label of the instance
    playing role j in group g.  Labels are tuples in {1..N}^k."""

    index: int
    groups: tuple[tuple[tuple[int, ...], ...], ...]


def recombination_schedule(n_roles: int, k: int) -> list[ScheduleRound]:
    """Rounds 1..k+1 of catalyst-set regroupings over N^k labeled instances.

    Round 1 groups instances sharing one full label.  In round l >= 2 a group
    fixes every label position except l-1, where role j reads g + j (mod N)
    for the group offset g.  Every pair of instances is co-grouped at most
    once across the whole schedule.
    """
    if n_roles < 2:
        raise ValueError("need at least two catalyst roles")
    if k < 0:
        raise ValueError("k must be nonnegative")
    labels = list(iter_product(range(1, n_roles + 1), repeat=k))
    rounds = [ScheduleRound(1, tuple((label,) * n_roles for label in labels))]
    for l in range(2, k + 2):
        pos = l - 2
        contexts = list(iter_product(range(1, n_roles + 1), repeat=k - 1))
        groups = []
        for context in contexts:
            for g in range(n_roles):
                group = []
                for j in range(1, n_roles + 1):
                    value = ((g + j - 1) % n_roles) + 1
                    label = context[:pos] + (value,) + context[pos:]
                    group.append(label)
                groups.append(tuple(group))
        rounds.append(ScheduleRound(l, tuple(groups)))
    return rounds


def schedule_conversions(rounds: Sequence[ScheduleRound]) -> int:
    return sum(len(r.groups) for r in rounds)


def schedule_is_fresh(rounds: Sequence[ScheduleRound]) -> bool:
    """No two catalyst instances are co-grouped in more than one round."""
    seen: set[frozenset] = set()
    for rnd in rounds:
        for group in rnd.groups:
            instances = [(j + 1, label) for j, label in enumerate(group)]
            for a, b in combinations(instances, 2):
                key = frozenset((a, b))
                if key in seen:
                    return False
                seen.add(key)
    return True


# ---------------------------------------------------------------------------
# Achieved-rate certificates


@dataclass(frozen=True)
class RateCertificate:
    """Certificate of an achieved copies_out / copies_in conversion ratio."""

    copies_in: int
    copies_out: int
    achieved_ratio: Fraction
    exact: bool
    max_marginal_error: float
    max_correlation: float

    def __post_init__(self):
        if Fraction(self.copies_out, self.copies_in) != self.achieved_ratio:
            raise ValueError("achieved_ratio must equal copies_out / copies_in")


def rate_certificate(
    mu: int,
    n_roles: int,
    k: int,
    exact: bool = True,
    max_marginal_error: float = 0.0,
    max_correlation: float = 0.0,
) -> RateCertificate:
    """Ratio certificate for the schedule: (k+1) N^k outputs from mu N^k inputs."""
    if mu < 1:
        raise ValueError("mu must be positive")
    if n_roles < 2 or k < 0:
        raise ValueError("need n_roles >= 2 and k >= 0")
    scale = n_roles**k
    return RateCertificate(
        copies_in=mu * scale,
        copies_out=(k + 1) * scale,
        achieved_ratio=Fraction(k + 1, mu),
        exact=exact,
        max_marginal_error=max_marginal_error,
        max_correlation=max_correlation,
    )


def min_k_for_rate(mu: int, rate) -> int:
    """Smallest k whose certificate ratio (k+1)/mu reaches the target rate."""
    if mu < 1:
        raise ValueError("mu must be positive")
    needed = Fraction(rate) * mu
    return max(0, ceil(needed) - 1)


# ---------------------------------------------------------------------------
# Pluggable marginal-catalyst contract


@dataclass(frozen=True)
class MarginalCatalystProtocol:
    """A supplied transformation instance to verify against the contract
    Lambda(xi (x) c_1 .. c_N) = tau with every catalyst marginal restored
    exactly and the system marginal within epsilon of the target."""

    channel: CovariantChannel
    input_state: DensityMatrix
    catalysts: tuple[DensityMatrix, ...]
    target: DensityMatrix
    epsilon: float


@dataclass(frozen=True)
class ContractReport:
    catalyst_deviations: tuple[float, ...]
    target_deviation: float
    epsilon: float
    exact_tol: float
    passed: bool


def marginal_catalytic_contract(
    protocol: MarginalCatalystProtocol, exact_tol: float = 1e-12
) -> ContractReport:
    """Verify a supplied marginal-catalytic protocol instance.

    Deviations are one-norms.  ``passed`` requires every catalyst marginal to
    be restored within ``exact_tol`` and the system marginal to reach the
    target within max(epsilon, exact_tol).
    """
    states = [protocol.input_state, *protocol.catalysts]
    composite = tensor_all(states) if len(states) > 1 else protocol.input_state
    if not same_levels(composite.hamiltonian, protocol.channel.in_h):
        raise ValueError("protocol bundle does not match the channel input")
    out_parts = [protocol.target.hamiltonian] + [c.hamiltonian for c in protocol.catalysts]
    expected_out = out_parts[0]
    for part in out_parts[1:]:
        expected_out = tensor_hamiltonians(expected_out, part)
    if not same_levels(expected_out, protocol.channel.out_h):
        raise ValueError("protocol bundle does not match the channel output")
    tau = apply(protocol.channel, composite).rebind(expected_out)
    deviations = []
    for i, cat in enumerate(protocol.catalysts):
        reduced = partial_trace(tau, keep=(i + 1,))
        deviations.append(trace_distance(reduced, cat))
    system = partial_trace(tau, keep=(0,)) if protocol.catalysts else tau
    target_dev = trace_distance(system, protocol.target)
    passed = target_dev <= max(protocol.epsilon, exact_tol) and all(
        d <= exact_tol for d in deviations
    )
    return ContractReport(
        catalyst_deviations=tuple(deviations),
        target_deviation=target_dev,
        epsilon=protocol.epsilon,
        exact_tol=exact_tol,
        passed=passed,
    )
