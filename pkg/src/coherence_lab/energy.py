"""Exact energy values as rational combinations of declared frequency symbols.

Every energy handled by this package is a finite rational-linear combination
of named symbols (for example ``u`` and ``r2`` standing for 1 and sqrt(2)).
Symbols are opaque: the library never evaluates them except through an
explicit valuation, and it treats distinct symbols as rationally independent
by declaration.  All lattice logic downstream relies on this exactness, so
:class:`EnergyValue` never stores floats.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Union

RationalLike = Union[int, str, Fraction]


class EnergyValue:
    """Immutable sparse vector of exact rational coefficients per symbol.

    Canonical form: zero coefficients are dropped and every coefficient is a
    reduced :class:`~fractions.Fraction`.  Instances are hashable and support
    addition, subtraction, negation and scaling by rationals.
    """

    __slots__ = ("_items",)

    def __init__(self, coeffs: Mapping[str, RationalLike] | None = None):
        items = []
        if coeffs:
            for symbol, value in coeffs.items():
                if not isinstance(symbol, str) or not symbol:
                    raise ValueError(f"symbol must be a nonempty string, got {symbol!r}")
                frac = Fraction(value)
                if frac != 0:
                    items.append((symbol, frac))
        items.sort(key=lambda kv: kv[0])
        object.__setattr__(self, "_items", tuple(items))

    def __setattr__(self, name, value):
        raise AttributeError("EnergyValue is immutable")

    @property
    def coeffs(self) -> dict[str, Fraction]:
        return dict(self._items)

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(sym for sym, _ in self._items)

    def coeff(self, symbol: str) -> Fraction:
        for sym, val in self._items:
            if sym == symbol:
                return val
        return Fraction(0)

    def is_zero(self) -> bool:
        return not self._items

    def __bool__(self) -> bool:
        return bool(self._items)

    def __add__(self, other: "EnergyValue") -> "EnergyValue":
        if not isinstance(other, EnergyValue):
            return NotImplemented
        out = dict(self._items)
        for sym, val in other._items:
            out[sym] = out.get(sym, Fraction(0)) + val
        return EnergyValue(out)

    def __sub__(self, other: "EnergyValue") -> "EnergyValue":
        if not isinstance(other, EnergyValue):
            return NotImplemented
        out = dict(self._items)
        for sym, val in other._items:
            out[sym] = out.get(sym, Fraction(0)) - val
        return EnergyValue(out)

    def __neg__(self) -> "EnergyValue":
        return EnergyValue({sym: -val for sym, val in self._items})

    def __mul__(self, scalar: RationalLike) -> "EnergyValue":
        factor = Fraction(scalar)
        return EnergyValue({sym: val * factor for sym, val in self._items})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, EnergyValue):
            return NotImplemented
        return self._items == other._items

    def __hash__(self) -> int:
        return hash(self._items)

    def evaluate(self, valuation: Mapping[str, float]) -> float:
        """Numeric value under a symbol valuation.

        Raises ``KeyError`` naming the first symbol missing from the map.
        """
        total = 0.0
        for sym, val in self._items:
            if sym not in valuation:
                raise KeyError(f"valuation is missing symbol {sym!r}")
            total += float(val) * float(valuation[sym])
        return total

    def vector(self, symbols: Iterable[str]) -> tuple[Fraction, ...]:
        """Dense coefficient tuple in the given symbol order.

        Raises ``ValueError`` if this value uses a symbol outside ``symbols``.
        """
        order = tuple(symbols)
        missing = set(self.symbols) - set(order)
        if missing:
            raise ValueError(f"symbols {sorted(missing)} not in context {order}")
        return tuple(self.coeff(sym) for sym in order)

    def __str__(self) -> str:
        if not self._items:
            return "0"
        parts = []
        for sym, val in self._items:
            prefix = "" if not parts else ("+ " if val >= 0 else "- ")
            mag = val if not parts else abs(val)
            parts.append(f"{prefix}{mag} {sym}")
        return " ".join(parts)

    def __repr__(self) -> str:
        inner = ", ".join(f"{sym!r}: {str(val)!r}" for sym, val in self._items)
        return f"EnergyValue({{{inner}}})"


ZERO_ENERGY = EnergyValue()


def energy(**coeffs: RationalLike) -> EnergyValue:
    """Convenience constructor: ``energy(u=1, r2="1/2")``."""
    return EnergyValue(coeffs)


def symbol_union(values: Iterable[EnergyValue]) -> tuple[str, ...]:
    """Sorted tuple of all symbols occurring in the given values."""
    seen: set[str] = set()
    for value in values:
        seen.update(value.symbols)
    return tuple(sorted(seen))
