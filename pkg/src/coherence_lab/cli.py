"""Command-line front end: verification commands, CSV reports, figures.

Exit codes: 0 on pass, 1 on a contract violation (tolerance exceeded,
subset check failed), 2 on usage or parse errors.  Every CSV starts with a
comment line recording the seed and tolerances in effect, and identical
configurations produce byte-identical output.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from math import sqrt
from typing import Any, Sequence

import numpy as np

from . import __version__
from .channels import random_covariant, verify_covariance
from .lattice import embedding_basis, embed_into_ladders
from .measures import MeasureName, all_measures, _measure_fn
from .modes import check_subset_q, check_subset_z, modes_of, transform_verdict
from .protocols import (
    build_correlated_catalyst,
    counterexample_row,
    recombination_schedule,
    schedule_conversions,
    schedule_is_fresh,
)
from .serialize import (
    channel_from_json,
    channel_to_json,
    csv_text,
    hamiltonian_from_json,
    load_json,
    state_from_json,
    state_to_json,
    valuation_from_json,
    write_json_atomic,
    write_text_atomic,
)
from .states import partial_trace, tensor

FORMULA_TOL = 1e-9
MONOTONE_TOL = 1e-9


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated run configuration: command, inputs, parameters, outputs."""

    command: str
    inputs: tuple[str, ...] = ()
    output: str | None = None
    plot: str | None = None
    params: dict[str, Any] = field(default_factory=dict)
    tolerance: float = 1e-10
    threshold: float = 1e-12
    seed: int | None = None

    def __post_init__(self):
        if self.tolerance <= 0 or self.threshold < 0:
            raise UsageError("tolerances must be positive")
        if self.params.get("sweep") and self.seed is None:
            raise UsageError(f"{self.command}: --seed is mandatory for randomized sweeps")


def _primes(count: int) -> list[int]:
    found: list[int] = []
    candidate = 2
    while len(found) < count:
        if all(candidate % p for p in found):
            found.append(candidate)
        candidate += 1
    return found


def default_valuation(symbols: Sequence[str]) -> dict[str, float]:
    """Generic valuation: the i-th declared symbol maps to sqrt(i-th prime)."""
    return {sym: sqrt(p) for sym, p in zip(symbols, _primes(len(symbols)))}


def _load(path: str, loader):
    try:
        return loader(load_json(path))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _resolve_valuation(path: str | None, symbols: Sequence[str]) -> dict[str, float]:
    if path is None:
        return default_valuation(symbols)
    return _load(path, valuation_from_json)


def _emit_csv(config: ExperimentConfig, columns, rows, comment: str) -> str:
    text = csv_text(columns, rows, comment)
    if config.output:
        write_text_atomic(config.output, text)
    else:
        sys.stdout.write(text)
    return text


# ---------------------------------------------------------------------------
# Command handlers


def _run_modes(config: ExperimentConfig) -> int:
    state = _load(config.inputs[0], state_from_json)
    mode_set = modes_of(state, config.threshold)
    print(f"threshold: {config.threshold!r}")
    for interval in sorted(mode_set.generators, key=str):
        print(f"mode: {interval}")
    return 0


def _run_check_subset(config: ExperimentConfig) -> int:
    target = _load(config.inputs[0], state_from_json)
    source = _load(config.inputs[1], state_from_json)
    check = check_subset_z if config.params["variant"] == "z" else check_subset_q
    ok = check(modes_of(target, config.threshold), modes_of(source, config.threshold))
    print(f"subset[{config.params['variant']}]: {'holds' if ok else 'fails'}")
    return 0 if ok else 1


def _run_covariance(config: ExperimentConfig) -> int:
    channel = _load(config.inputs[0], channel_from_json)
    valuation = _resolve_valuation(config.params.get("valuation"), channel.in_h.symbols)
    norm = verify_covariance(channel, valuation)
    print(f"commutator norm: {norm!r}")
    return 0 if norm <= config.tolerance else 1


def _run_catalyst(config: ExperimentConfig) -> int:
    from .channels import apply as apply_channel
    from .protocols import average_single_copy_marginal
    from .states import tensor_power, tensor_power_hamiltonian

    state = _load(config.inputs[0], state_from_json)
    channel = _load(config.inputs[1], channel_from_json)
    bundle, composite = build_correlated_catalyst(state, channel)
    n = bundle.register_dim
    if config.params.get("n") is not None and config.params["n"] != n:
        raise UsageError(f"--n {config.params['n']} does not match inferred n={n}")
    final = apply_channel(composite, tensor(state, bundle.state))
    slots = tuple(range(1, n + 1))
    catalyst_dev = float(
        np.max(np.abs(partial_trace(final, keep=slots).matrix - bundle.state.matrix))
    )
    copies_h = tensor_power_hamiltonian(state.hamiltonian, n)
    tau = apply_channel(channel, tensor_power(state, n)).rebind(copies_h)
    expected = average_single_copy_marginal(tau)
    system_dev = float(
        np.max(np.abs(partial_trace(final, keep=(0,)).matrix - expected.matrix))
    )
    report = {
        "register_dim": n,
        "catalyst_slots": list(bundle.catalyst_slots),
        "register_slot": bundle.register_slot,
        "catalyst_restore_deviation": catalyst_dev,
        "system_marginal_deviation": system_dev,
        "tolerance": config.tolerance,
        "catalyst": state_to_json(bundle.state),
        "channel": channel_to_json(composite),
    }
    if config.output:
        write_json_atomic(config.output, report)
    print(f"catalyst restore deviation: {catalyst_dev!r}")
    print(f"system marginal deviation: {system_dev!r}")
    return 0 if max(catalyst_dev, system_dev) <= config.tolerance else 1


def _run_counterexample(config: ExperimentConfig) -> int:
    m_max = config.params["m"]
    eps = config.params["eps"]
    delta = config.params["delta"]
    rows = [counterexample_row(m, eps, delta) for m in range(1, m_max + 1)]
    columns = ["m", "eps", "delta", "marginal_dist", "correlation", "global_dist", "f_formula"]
    data = [
        [r.m, r.eps, r.delta, r.marginal_dist, r.correlation, r.global_dist, r.f_formula]
        for r in rows
    ]
    comment = f"command=counterexample seed=none eps={eps!r} delta={delta!r} formula_tol={FORMULA_TOL!r}"
    _emit_csv(config, columns, data, comment)
    if config.plot:
        from .plotting import plot_counterexample

        plot_counterexample(rows, config.plot)
    worst = max(abs(r.global_dist - r.f_formula) for r in rows)
    return 0 if worst <= FORMULA_TOL else 1


def _run_schedule(config: ExperimentConfig) -> int:
    n_roles = config.params["N"]
    k = config.params["k"]
    rounds = recombination_schedule(n_roles, k)
    columns = ["round", "group"] + [f"role_{j}" for j in range(1, n_roles + 1)]
    rows = []
    for rnd in rounds:
        for gi, group in enumerate(rnd.groups):
            rows.append(
                [rnd.index, gi]
                + [".".join(map(str, label)) if label else "-" for label in group]
            )
    comment = f"command=schedule seed=none N={n_roles} k={k}"
    _emit_csv(config, columns, rows, comment)
    total = schedule_conversions(rounds)
    expected = (k + 1) * n_roles**k
    fresh = schedule_is_fresh(rounds)
    print(f"conversions: {total} (expected {expected}), fresh: {fresh}")
    return 0 if total == expected and fresh else 1


def _run_measures(config: ExperimentConfig) -> int:
    state = _load(config.inputs[0], state_from_json)
    valuation = _resolve_valuation(config.params.get("valuation"), state.hamiltonian.symbols)
    reports = all_measures(state, valuation)
    for report in reports:
        print(f"{report.name.value}: {report.value!r}")
    sweep = config.params.get("sweep")
    if not sweep:
        return 0
    from .channels import apply as apply_channel

    ancilla = config.params.get("ancilla", 2)
    rows = []
    violations = 0
    for trial in range(sweep):
        channel = random_covariant(
            state.hamiltonian, ancilla, np.random.default_rng([config.seed, trial])
        )
        out = apply_channel(channel, state)
        for name in MeasureName:
            fn = _measure_fn(name)
            value_in = fn(state, valuation)
            value_out = fn(out, valuation)
            if value_out > value_in + MONOTONE_TOL:
                violations += 1
            rows.append(
                {
                    "trial": trial,
                    "measure": name.value,
                    "value_in": value_in,
                    "value_out": value_out,
                    "delta": value_out - value_in,
                }
            )
    columns = ["trial", "measure", "value_in", "value_out", "delta"]
    data = [[r["trial"], r["measure"], r["value_in"], r["value_out"], r["delta"]] for r in rows]
    comment = (
        f"command=measures seed={config.seed} sweep={sweep} ancilla={ancilla} "
        f"monotone_tol={MONOTONE_TOL!r}"
    )
    _emit_csv(config, columns, data, comment)
    if config.plot:
        from .plotting import plot_measure_sweep

        plot_measure_sweep(rows, config.plot)
    print(f"monotonicity violations: {violations}")
    return 0 if violations == 0 else 1


def _run_embed(config: ExperimentConfig) -> int:
    data = load_json(config.inputs[0])
    try:
        h = hamiltonian_from_json(data)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read {config.inputs[0]}: {exc}") from exc
    basis = embedding_basis(list(h.energies))
    lo, hi = config.params.get("truncation", (-8, 8))
    try:
        embedding = embed_into_ladders(h, basis, (lo, hi))
    except ValueError as exc:
        print(f"embedding failed: {exc}", file=sys.stderr)
        return 1
    for j, value in enumerate(basis):
        print(f"basis[{j}]: {value}")
    for i, (e, coords) in enumerate(zip(h.energies, embedding.coords)):
        alpha = embedding.alphas[i]
        suffix = f" alpha={alpha}" if max(embedding.alphas) > 0 else ""
        print(f"level {i}: {e} -> ({', '.join(map(str, coords))}){suffix}")
    return 0


def _run_verdict(config: ExperimentConfig) -> int:
    source = _load(config.inputs[0], state_from_json)
    target = _load(config.inputs[1], state_from_json)
    verdict = transform_verdict(source, target, config.threshold)
    print(verdict.value)
    return 0


_HANDLERS = {
    "modes": _run_modes,
    "check-subset": _run_check_subset,
    "covariance": _run_covariance,
    "catalyst": _run_catalyst,
    "counterexample": _run_counterexample,
    "schedule": _run_schedule,
    "measures": _run_measures,
    "embed": _run_embed,
    "verdict": _run_verdict,
}


def run(config: ExperimentConfig) -> int:
    return _HANDLERS[config.command](config)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coherence-lab",
        description="Simulate and verify coherence manipulation under covariant operations.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("modes", help="print the mode generators of a state")
    p.add_argument("state")
    p.add_argument("--threshold", type=float, default=1e-12)

    p = sub.add_parser("check-subset", help="span inclusion of mode sets (target, source)")
    p.add_argument("--variant", choices=["z", "q"], required=True)
    p.add_argument("target")
    p.add_argument("source")
    p.add_argument("--threshold", type=float, default=1e-12)

    p = sub.add_parser("covariance", help="Choi commutator norm of a channel")
    p.add_argument("channel")
    p.add_argument("--valuation")
    p.add_argument("--tol", type=float, default=1e-10)

    p = sub.add_parser("catalyst", help="catalyst operations")
    csub = p.add_subparsers(dest="subcommand", required=True)
    pb = csub.add_parser("build", help="build a correlated catalyst from an n-copy channel")
    pb.add_argument("--n", type=int)
    pb.add_argument("--state", required=True)
    pb.add_argument("--channel", required=True)
    pb.add_argument("--out")
    pb.add_argument("--tol", type=float, default=1e-12)

    p = sub.add_parser("counterexample", help="good-local bad-global family report")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--csv")
    p.add_argument("--plot")

    p = sub.add_parser("schedule", help="catalyst recombination schedule")
    p.add_argument("--N", type=int, required=True, dest="n_roles")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--csv")

    p = sub.add_parser("measures", help="asymmetry measures of a state")
    p.add_argument("state")
    p.add_argument("--valuation")
    p.add_argument("--csv")
    p.add_argument("--plot")
    p.add_argument("--sweep", type=int, default=0, help="random covariant channels to sample")
    p.add_argument("--seed", type=int)
    p.add_argument("--ancilla", type=int, default=2)

    p = sub.add_parser("embed", help="ladder embedding of a Hamiltonian")
    p.add_argument("hamiltonian")
    p.add_argument("--truncation", default="-8:8", help="level range lo:hi")

    p = sub.add_parser("verdict", help="transformability verdict (source, target)")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--threshold", type=float, default=1e-12)

    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    command = args.command
    if command == "modes":
        return ExperimentConfig(command, (args.state,), threshold=args.threshold)
    if command == "check-subset":
        return ExperimentConfig(
            command,
            (args.target, args.source),
            threshold=args.threshold,
            params={"variant": args.variant},
        )
    if command == "covariance":
        return ExperimentConfig(
            command,
            (args.channel,),
            tolerance=args.tol,
            params={"valuation": args.valuation},
        )
    if command == "catalyst":
        if args.subcommand != "build":
            raise UsageError("unknown catalyst subcommand")
        return ExperimentConfig(
            command,
            (args.state, args.channel),
            output=args.out,
            tolerance=args.tol,
            params={"n": args.n},
        )
    if command == "counterexample":
        if args.m < 1:
            raise UsageError("--m must be at least 1")
        return ExperimentConfig(
            command,
            output=args.csv,
            plot=args.plot,
            params={"m": args.m, "eps": args.eps, "delta": args.delta},
        )
    if command == "schedule":
        return ExperimentConfig(
            command, output=args.csv, params={"N": args.n_roles, "k": args.k}
        )
    if command == "measures":
        return ExperimentConfig(
            command,
            (args.state,),
            output=args.csv,
            plot=args.plot,
            seed=args.seed,
            params={
                "valuation": args.valuation,
                "sweep": args.sweep,
                "ancilla": args.ancilla,
            },
        )
    if command == "embed":
        try:
            lo, hi = (int(part) for part in args.truncation.split(":"))
        except ValueError as exc:
            raise UsageError(f"bad truncation {args.truncation!r}, expected lo:hi") from exc
        return ExperimentConfig(
            command, (args.hamiltonian,), params={"truncation": (lo, hi)}
        )
    if command == "verdict":
        return ExperimentConfig(
            command, (args.source, args.target), threshold=args.threshold
        )
    raise UsageError(f"unknown command {command!r}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        return run(config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
