"""Exact rational scalars and sparse Laurent polynomials.

Scalars are :class:`fractions.Fraction` throughout; nothing in the kernel
touches floating point.  :class:`LaurentPoly` is an immutable sparse
polynomial in ``t`` and ``t^-1`` over the rationals.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union

Scalar = Fraction
ScalarLike = Union[int, Fraction, str]

__all__ = [
    "Scalar",
    "LaurentPoly",
    "as_scalar",
    "scalar_to_str",
    "parse_scalar",
]


def as_scalar(x: ScalarLike) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_scalar(x)
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


def scalar_to_str(x: Fraction) -> str:
    """Serialize as ``"p/q"``, or ``"p"`` when the denominator is 1."""
    x = as_scalar(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def parse_scalar(s: str) -> Fraction:
    s = s.strip()
    if not s:
        raise ValueError("empty scalar string")
    if any(ch in s for ch in ".eE"):
        raise ValueError(f"scalar {s!r} must be an integer or p/q, not a decimal")
    return Fraction(s)


class LaurentPoly:
    """Sparse Laurent polynomial ``sum c_e t^e`` with rational coefficients.

    Terms are kept sorted by increasing exponent with no zero coefficients,
    so equality and hashing are structural.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[int, ScalarLike] | Iterable[tuple[int, ScalarLike]] = ()):
        acc: dict[int, Fraction] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for e, c in items:
            if not isinstance(e, int) or isinstance(e, bool):
                raise TypeError(f"exponent {e!r} is not an integer")
            acc[e] = acc.get(e, Fraction(0)) + as_scalar(c)
        self._terms: tuple[tuple[int, Fraction], ...] = tuple(
            (e, c) for e, c in sorted(acc.items()) if c != 0
        )
        self._hash = hash(self._terms)

    @classmethod
    def _from_sorted(cls, terms: tuple[tuple[int, Fraction], ...]) -> "LaurentPoly":
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._hash = hash(terms)
        return obj

    @classmethod
    def monomial(cls, e: int, c: ScalarLike = 1) -> "LaurentPoly":
        return cls({e: c})

    @classmethod
    def constant(cls, c: ScalarLike) -> "LaurentPoly":
        return cls({0: c})

    @classmethod
    def from_coeffs(cls, coeffs: Iterable[ScalarLike], low: int = 0) -> "LaurentPoly":
        """``from_coeffs([c0, c1, ...], low)`` is ``sum c_i t^(low+i)``."""
        return cls({low + i: c for i, c in enumerate(coeffs)})

    @classmethod
    def from_roots(cls, roots: Iterable[ScalarLike]) -> "LaurentPoly":
        """Monic polynomial ``prod (t - r)`` (the constant 1 for no roots)."""
        p = cls.constant(1)
        for r in roots:
            p = p * cls({1: 1, 0: -as_scalar(r)})
        return p

    # --- inspection -----------------------------------------------------
    @property
    def terms(self) -> tuple[tuple[int, Fraction], ...]:
        return self._terms

    def support(self) -> tuple[int, ...]:
        return tuple(e for e, _ in self._terms)

    def coeff(self, e: int) -> Fraction:
        for ee, c in self._terms:
            if ee == e:
                return c
        return Fraction(0)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def max_exp(self) -> int:
        if not self._terms:
            raise ValueError("zero polynomial has no exponents")
        return self._terms[-1][0]

    @property
    def min_exp(self) -> int:
        if not self._terms:
            raise ValueError("zero polynomial has no exponents")
        return self._terms[0][0]

    def span(self) -> int:
        """``max_exp - min_exp``; the degree after clearing powers of t."""
        return self.max_exp - self.min_exp

    def __iter__(self) -> Iterator[tuple[int, Fraction]]:
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    # --- ring operations -----------------------------------------------
    def __add__(self, other: "LaurentPoly | ScalarLike") -> "LaurentPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        acc = dict(self._terms)
        for e, c in other._terms:
            acc[e] = acc.get(e, Fraction(0)) + c
        return LaurentPoly(acc)

    __radd__ = __add__

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly._from_sorted(tuple((e, -c) for e, c in self._terms))

    def __sub__(self, other: "LaurentPoly | ScalarLike") -> "LaurentPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other: ScalarLike) -> "LaurentPoly":
        return (-self) + other

    def __mul__(self, other: "LaurentPoly | ScalarLike") -> "LaurentPoly":
        if isinstance(other, LaurentPoly):
            acc: dict[int, Fraction] = {}
            for e1, c1 in self._terms:
                for e2, c2 in other._terms:
                    acc[e1 + e2] = acc.get(e1 + e2, Fraction(0)) + c1 * c2
            return LaurentPoly(acc)
        try:
            s = as_scalar(other)
        except TypeError:
            return NotImplemented
        if s == 0:
            return LaurentPoly()
        return LaurentPoly._from_sorted(tuple((e, c * s) for e, c in self._terms))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "LaurentPoly":
        if k < 0:
            if len(self._terms) != 1:
                raise ValueError("only monomials are units in the Laurent ring")
            (e, c), = self._terms
            return LaurentPoly({e * k: Fraction(1) / c ** (-k)})
        out = LaurentPoly.constant(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def shift(self, m: int) -> "LaurentPoly":
        """Multiply by ``t^m``."""
        return LaurentPoly._from_sorted(tuple((e + m, c) for e, c in self._terms))

    def __call__(self, x: ScalarLike) -> Fraction:
        x = as_scalar(x)
        return sum((c * x**e for e, c in self._terms), Fraction(0))

    # --- equality, display, serialization -------------------------------
    def __eq__(self, other: object) -> bool:
        if isinstance(other, LaurentPoly):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self._terms == LaurentPoly.constant(other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"LaurentPoly({self})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for e, c in reversed(self._terms):
            if e == 0:
                mono = ""
            elif e == 1:
                mono = "t"
            else:
                mono = f"t^{e}"
            if not mono:
                body = scalar_to_str(abs(c))
            elif abs(c) == 1:
                body = mono
            else:
                body = f"{scalar_to_str(abs(c))}*{mono}"
            parts.append(("-" if c < 0 else "+", body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def to_json(self) -> list[list]:
        return [[e, scalar_to_str(c)] for e, c in self._terms]

    @classmethod
    def from_json(cls, data: Iterable) -> "LaurentPoly":
        out = {}
        for item in data:
            if not isinstance(item, (list, tuple)) or len(item) != 2:
                raise ValueError(f"Laurent term must be [exponent, scalar], got {item!r}")
            e, c = item
            if e in out:
                raise ValueError(f"duplicate exponent {e} in Laurent polynomial")
            out[int(e)] = as_scalar(c)
        return cls(out)


def _coerce(x):
    if isinstance(x, LaurentPoly):
        return x
    try:
        return LaurentPoly.constant(as_scalar(x))
    except TypeError:
        return NotImplemented


T = LaurentPoly.monomial(1)
