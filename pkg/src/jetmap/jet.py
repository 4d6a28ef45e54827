"""Truncated multivariate power series ("jets") over a shared monomial table.

A jet is a dense vector of ``L(m, p)`` coefficients; entry ``r`` multiplies
the monomial of rank ``r`` in modified glex order.  Addition and scalar
multiplication are coordinate-wise; multiplication contracts the box tables
of the shared :class:`~jetmap.monoidx.MonomialTable`, which truncates the
product beyond total degree ``p`` implicitly.

Because the arithmetic operators are overloaded, any Python expression built
from ``+``, ``-``, ``*`` and integer ``**`` evaluates equally well on floats
and on jets.  Evaluating a polynomial on the jets ``c + x_a`` (constant plus
first-order variable part) yields its Taylor expansion about ``c``; this is
what lets one numerical integrator propagate whole Taylor maps.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .monoidx import MonomialTable, TableMismatchError

_SCALARS = (int, float, np.integer, np.floating)


class Jet:
    """Dense coefficient vector over a shared monomial table."""

    __slots__ = ("table", "coeffs")

    def __init__(self, table: MonomialTable, coeffs):
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.shape != (table.L,):
            raise ValueError(
                f"expected {table.L} coefficients for (m={table.m}, p={table.p}), "
                f"got shape {coeffs.shape}"
            )
        # jets are value-semantic: the buffer is owned and frozen
        coeffs.setflags(write=False)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("Jet is immutable")

    # -- helpers ---------------------------------------------------------

    def _check_companion(self, other: "Jet") -> None:
        if not self.table.same_shape(other.table):
            raise TableMismatchError(
                f"cannot combine jets over (m={self.table.m}, p={self.table.p}) "
                f"and (m={other.table.m}, p={other.table.p})"
            )

    def copy(self) -> "Jet":
        return Jet(self.table, self.coeffs.copy())

    def __repr__(self) -> str:
        return f"Jet(m={self.table.m}, p={self.table.p}, coeffs={self.coeffs!r})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Jet):
            return NotImplemented
        return self.table.same_shape(other.table) and np.array_equal(
            self.coeffs, other.coeffs
        )

    __hash__ = None

    # -- ring operations --------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check_companion(other)
            return Jet(self.table, self.coeffs + other.coeffs)
        if isinstance(other, _SCALARS):
            out = self.coeffs.copy()
            out[0] += other
            return Jet(self.table, out)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.table, -self.coeffs)

    def __sub__(self, other):
        if isinstance(other, (Jet,) + _SCALARS):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, _SCALARS):
            return (-self) + other
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Jet):
            return prod(self, other)
        if isinstance(other, _SCALARS):
            return Jet(self.table, self.coeffs * float(other))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, _SCALARS):
            return Jet(self.table, self.coeffs / float(other))
        return NotImplemented  # jet-by-jet division is out of scope

    def __pow__(self, n):
        if isinstance(n, (int, np.integer)):
            return power(self, int(n))
        return NotImplemented

    # -- evaluation and calculus ------------------------------------------

    def __call__(self, x: Sequence[float]) -> float:
        return self.evaluate(x)

    def evaluate(self, x: Sequence[float]) -> float:
        """Value of the underlying polynomial at the point x (length m)."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.table.m,):
            raise ValueError(f"expected {self.table.m} coordinates, got {x.shape}")
        return float(self.coeffs @ monomial_values(self.table, x))

    def partial(self, a: int) -> "Jet":
        """Jet of the partial derivative with respect to variable a (1-based)."""
        t = self.table
        if not 1 <= a <= t.m:
            raise IndexError(f"variable index {a} outside [1, {t.m}]")
        src, dst, mult = _diff_arrays(t, a)
        out = np.zeros(t.L)
        out[dst] = mult * self.coeffs[src]
        return Jet(t, out)


def monomial_values(table: MonomialTable, x: np.ndarray) -> np.ndarray:
    """Vector of all L monomial values at the point x."""
    # per-variable power lookup keeps this O(m*p + L*m)
    powers = x[:, None] ** np.arange(table.p + 1)[None, :]
    g = powers[0][table.exponents[:, 0]]
    for a in range(1, table.m):
        g = g * powers[a][table.exponents[:, a]]
    return g


@lru_cache(maxsize=None)
def _diff_arrays(table: MonomialTable, a: int):
    from .monoidx import rank as _rank

    src, dst, mult = [], [], []
    for i in range(table.L):
        j = table.exponents[i]
        if j[a - 1] >= 1:
            lowered = j.copy()
            lowered[a - 1] -= 1
            src.append(i)
            dst.append(_rank(lowered.tolist()) - 1)
            mult.append(float(j[a - 1]))
    return (np.array(src, dtype=np.intp), np.array(dst, dtype=np.intp), np.array(mult))


# -- constructors ----------------------------------------------------------


def constant(table: MonomialTable, c: float) -> Jet:
    """Jet of the constant polynomial c."""
    coeffs = np.zeros(table.L)
    coeffs[0] = c
    return Jet(table, coeffs)


def variable(table: MonomialTable, a: int) -> Jet:
    """Jet of the bare variable z_a (1-based index)."""
    r = table.variable_rank(a)
    coeffs = np.zeros(table.L)
    coeffs[r - 1] = 1.0
    return Jet(table, coeffs)


def state_about(table: MonomialTable, center: Sequence[float]) -> tuple[Jet, ...]:
    """Jets ``center_a + x_a`` for every variable: the expansion-point state.

    Feeding this state through any polynomial recipe produces Taylor
    expansions about ``center``.
    """
    if len(center) != table.m:
        raise ValueError(f"expected {table.m} center coordinates, got {len(center)}")
    return tuple(
        constant(table, float(c)) + variable(table, a + 1)
        for a, c in enumerate(center)
    )


# -- named operations (operator sugar above delegates here) -----------------


def add(u: Jet, v: Jet) -> Jet:
    return u + v


def scale(c: float, u: Jet) -> Jet:
    return u * c


def prod(u: Jet, v: Jet) -> Jet:
    """Truncated product via the precomputed box tables."""
    u._check_companion(v)
    t = u.table
    terms = u.coeffs[t.flat_box] * v.coeffs[t.flat_box_rev]
    return Jet(t, np.add.reduceat(terms, t.seg_starts))


def power(u: Jet, n: int) -> Jet:
    """n-th power by repeated multiplication (n >= 0)."""
    if n < 0:
        raise ValueError("negative powers are not defined on truncated series")
    if n == 0:
        return constant(u.table, 1.0)
    out = u
    for _ in range(n - 1):
        out = prod(u, out)
    return out


def polyval_on_jets(expr: Callable[..., object], args: Sequence[Jet]) -> Jet:
    """Evaluate a polynomial callable with jet arguments.

    ``expr`` may use +, -, scalar *, jet *, and integer ** only; operator
    overloading substitutes the jet operations, so the result is the jet of
    the expression.  A scalar result (constant expression) is promoted.
    """
    if not args:
        raise ValueError("need at least one jet argument")
    table = args[0].table
    for u in args[1:]:
        args[0]._check_companion(u)
    out = expr(*args)
    if isinstance(out, Jet):
        return out
    if isinstance(out, _SCALARS):
        return constant(table, float(out))
    raise TypeError(f"expression returned {type(out)!r}, expected a Jet or scalar")


# -- serialization ----------------------------------------------------------


def jet_to_dict(u: Jet, suppress_zeros: bool = False) -> dict:
    """JSON-ready dict {m, p, coeffs: [{r, exponents, value}]}."""
    entries = []
    for i, value in enumerate(u.coeffs):
        if suppress_zeros and value == 0.0:
            continue
        entries.append(
            {
                "r": i + 1,
                "exponents": [int(j) for j in u.table.exponents[i]],
                "value": float(value),
            }
        )
    return {"m": u.table.m, "p": u.table.p, "coeffs": entries}


def jet_from_dict(table: MonomialTable, data: dict) -> Jet:
    if data["m"] != table.m or data["p"] != table.p:
        raise TableMismatchError(
            f"serialized jet is (m={data['m']}, p={data['p']}), "
            f"table is (m={table.m}, p={table.p})"
        )
    coeffs = np.zeros(table.L)
    for entry in data["coeffs"]:
        coeffs[entry["r"] - 1] = entry["value"]
    return Jet(table, coeffs)
