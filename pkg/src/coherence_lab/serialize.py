"""JSON and CSV interchange for states, channels and energy values.

Rationals are stored as [numerator, denominator] pairs, so they round-trip
bit-stably; complex entries are stored as [re, im] floats and round-trip
exactly through the shortest-repr decimal encoding used by ``json``.
File writes are atomic (temp file then rename).
"""

from __future__ import annotations

import json
import os
import tempfile
from fractions import Fraction
from typing import Any, Mapping, Sequence

import numpy as np

from .channels import CovariantChannel
from .energy import EnergyValue
from .states import DensityMatrix, LabeledHamiltonian


def energy_value_to_json(value: EnergyValue) -> dict[str, list[int]]:
    return {sym: [coeff.numerator, coeff.denominator] for sym, coeff in value.coeffs.items()}


def energy_value_from_json(data: Mapping[str, Sequence[int]]) -> EnergyValue:
    return EnergyValue({sym: Fraction(int(pair[0]), int(pair[1])) for sym, pair in data.items()})


def hamiltonian_to_json(h: LabeledHamiltonian) -> dict[str, Any]:
    return {
        "dim": h.dim,
        "symbols": list(h.symbols),
        "energies": [
            [[frac.numerator, frac.denominator] for frac in e.vector(h.symbols)]
            for e in h.energies
        ],
    }


def hamiltonian_from_json(data: Mapping[str, Any]) -> LabeledHamiltonian:
    symbols = tuple(data["symbols"])
    energies = []
    for row in data["energies"]:
        coeffs = {sym: Fraction(int(pair[0]), int(pair[1])) for sym, pair in zip(symbols, row)}
        energies.append(EnergyValue(coeffs))
    if len(energies) != int(data["dim"]):
        raise ValueError("energies length does not match dim")
    return LabeledHamiltonian(tuple(energies), symbols)


def _matrix_to_json(mat: np.ndarray) -> list[list[float]]:
    flat = np.asarray(mat, dtype=complex).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def _matrix_from_json(entries: Sequence[Sequence[float]], rows: int, cols: int) -> np.ndarray:
    if len(entries) != rows * cols:
        raise ValueError(f"expected {rows * cols} matrix entries, got {len(entries)}")
    flat = np.array([complex(re, im) for re, im in entries])
    return flat.reshape(rows, cols)


def state_to_json(state: DensityMatrix) -> dict[str, Any]:
    data = hamiltonian_to_json(state.hamiltonian)
    data["matrix"] = _matrix_to_json(state.matrix)
    return data


def state_from_json(data: Mapping[str, Any]) -> DensityMatrix:
    h = hamiltonian_from_json(data)
    mat = _matrix_from_json(data["matrix"], h.dim, h.dim)
    return DensityMatrix(mat, h)


def channel_to_json(channel: CovariantChannel) -> dict[str, Any]:
    return {
        "kraus": [
            {"shift": energy_value_to_json(shift), "matrix": _matrix_to_json(mat)}
            for mat, shift in channel.kraus
        ],
        "in_hamiltonian": hamiltonian_to_json(channel.in_h),
        "out_hamiltonian": hamiltonian_to_json(channel.out_h),
    }


def channel_from_json(data: Mapping[str, Any]) -> CovariantChannel:
    in_h = hamiltonian_from_json(data["in_hamiltonian"])
    out_h = hamiltonian_from_json(data["out_hamiltonian"])
    kraus = []
    for item in data["kraus"]:
        shift = energy_value_from_json(item["shift"])
        mat = _matrix_from_json(item["matrix"], out_h.dim, in_h.dim)
        kraus.append((mat, shift))
    return CovariantChannel(kraus, in_h, out_h)


def valuation_from_json(data: Mapping[str, Any]) -> dict[str, float]:
    return {str(sym): float(val) for sym, val in data.items()}


def load_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_text_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json_atomic(path: str, obj: Any) -> None:
    write_text_atomic(path, json.dumps(obj, indent=2) + "\n")


def format_cell(value) -> str:
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def csv_text(columns: Sequence[str], rows: Sequence[Sequence], comment: str | None = None) -> str:
    """CSV with one leading comment line (seed, tolerances) and a header row."""
    lines = []
    if comment is not None:
        lines.append(f"# {comment}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    return "\n".join(lines) + "\n"
