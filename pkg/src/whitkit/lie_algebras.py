"""Generators and structure constants of the three loop algebras.

``loop-witt``      d_n (x) t^k with n >= -1, ``[d_n t^k, d_m t^l] = (m-n) d_{n+m} t^{k+l}``
``loop-virasoro``  d_n (x) t^k, c (x) t^k with the central term
                   ``delta_{n,-m} (n^3-n)/12 c t^{k+l}``
``sl2-hat``        e, h, f (x) t^k and the central khat, with
                   ``[x t^k, y t^l] = [x,y] t^{k+l} + k (x,y) delta_{k+l,0} khat``
                   for the trace form (e,f) = 1, (h,h) = 2.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Iterable, Iterator, Mapping, NamedTuple

from .exact_arith import ScalarLike, as_scalar, scalar_to_str

__all__ = [
    "WITT",
    "VIRASORO",
    "SL2",
    "ALGEBRAS",
    "Generator",
    "LieElement",
    "AlgebraMismatch",
    "witt_d",
    "vir_d",
    "vir_c",
    "sl2",
    "sl2_khat",
    "bracket",
    "bracket_generators",
    "involution",
    "is_central",
]

WITT = "loop-witt"
VIRASORO = "loop-virasoro"
SL2 = "sl2-hat"
ALGEBRAS = (WITT, VIRASORO, SL2)

_SL2_KINDS = ("e", "h", "f")


class AlgebraMismatch(ValueError):
    pass


class Generator(NamedTuple):
    """Basis element ``kind_n (x) t^k`` of one of the algebras.

    ``kind`` is ``d`` or ``c`` for Witt/Virasoro and ``e``, ``h``, ``f``,
    ``K`` (the central khat) for sl2-hat.  ``n`` is the Witt/Virasoro degree
    and 0 otherwise.  ``k`` is the loop exponent.
    """

    alg: str
    kind: str
    n: int
    k: Any

    @property
    def degree(self) -> int:
        return self.n

    def __str__(self) -> str:
        if self.kind == "d":
            return f"D({self.n},{self.k})"
        if self.kind == "K":
            return "khat"
        return f"{self.kind}(x)t^{self.k}"

    def to_json(self) -> dict:
        if self.kind == "d":
            return {"alg": self.alg, "gen": "d", "n": self.n, "k": self.k}
        if self.kind == "K":
            return {"alg": self.alg, "gen": "khat"}
        return {"alg": self.alg, "gen": self.kind, "k": self.k}

    @classmethod
    def from_json(cls, data: Mapping, alg: str | None = None) -> "Generator":
        a = data.get("alg", alg)
        if a is None:
            raise ValueError("generator needs an 'alg' field")
        if alg is not None and a != alg:
            raise AlgebraMismatch(f"generator of {a} used with {alg}")
        gen = data.get("gen")
        if gen == "d":
            return witt_d(int(data["n"]), int(data["k"])) if a == WITT else _check(a, VIRASORO, vir_d(int(data["n"]), int(data["k"])))
        if gen == "c":
            return _check(a, VIRASORO, vir_c(int(data.get("k", 0))))
        if gen in _SL2_KINDS:
            return _check(a, SL2, sl2(gen, int(data["k"])))
        if gen == "khat":
            return _check(a, SL2, sl2_khat())
        raise ValueError(f"unknown generator {gen!r}")


def _check(alg: str, expected: str, g: Generator) -> Generator:
    if alg != expected:
        raise AlgebraMismatch(f"generator {g} does not belong to {alg}")
    return g


def witt_d(n: int, k: int) -> Generator:
    if n < -1:
        raise ValueError(f"loop Witt generators need n >= -1, got {n}")
    return Generator(WITT, "d", n, k)


def vir_d(n: int, k: int) -> Generator:
    return Generator(VIRASORO, "d", n, k)


def vir_c(k: int) -> Generator:
    return Generator(VIRASORO, "c", 0, k)


def sl2(x: str, k: int) -> Generator:
    if x not in _SL2_KINDS:
        raise ValueError(f"sl2 generator must be one of e/h/f, got {x!r}")
    return Generator(SL2, x, 0, k)


def sl2_khat() -> Generator:
    return Generator(SL2, "K", 0, 0)


def is_central(g: Generator) -> bool:
    return g.kind in ("c", "K")


# sl2 structure: [x, y] as {z: coeff}, and the trace form
_SL2_BRACKET = {
    ("e", "f"): (("h", 1),),
    ("f", "e"): (("h", -1),),
    ("h", "e"): (("e", 2),),
    ("e", "h"): (("e", -2),),
    ("h", "f"): (("f", -2),),
    ("f", "h"): (("f", 2),),
}
_SL2_FORM = {("e", "f"): 1, ("f", "e"): 1, ("h", "h"): 2}


def bracket_generators(g1: Generator, g2: Generator) -> list[tuple[Generator, Fraction]]:
    """Structure constants: ``[g1, g2]`` as a list of (generator, coefficient)."""
    alg = g1.alg
    if g2.alg != alg:
        raise AlgebraMismatch(f"cannot bracket {g1.alg} with {g2.alg}")
    if g1.kind in ("c", "K") or g2.kind in ("c", "K"):
        return []
    if alg == SL2:
        out = [(Generator(SL2, z, 0, g1.k + g2.k), Fraction(c)) for z, c in _SL2_BRACKET.get((g1.kind, g2.kind), ())]
        form = _SL2_FORM.get((g1.kind, g2.kind))
        # loop exponents may be symbolic; the delta is only tested, never multiplied
        if form and g1.k + g2.k == 0:
            out.append((Generator(SL2, "K", 0, 0), Fraction(g1.k * form)))
        return out
    n, m = g1.n, g2.n
    out = []
    if m != n:
        out.append((Generator(alg, "d", n + m, g1.k + g2.k), Fraction(m - n)))
    if alg == VIRASORO and n == -m and n * n * n != n:
        out.append((Generator(VIRASORO, "c", 0, g1.k + g2.k), Fraction(n**3 - n, 12)))
    return out


class LieElement:
    """Finite rational combination of generators of a single algebra."""

    __slots__ = ("alg", "_terms")

    def __init__(self, alg: str, terms: Mapping[Generator, ScalarLike] | Iterable[tuple[Generator, ScalarLike]] = ()):
        if alg not in ALGEBRAS:
            raise ValueError(f"unknown algebra {alg!r}")
        self.alg = alg
        acc: dict[Generator, Fraction] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for g, c in items:
            if g.alg != alg:
                raise AlgebraMismatch(f"generator {g} does not belong to {alg}")
            acc[g] = acc.get(g, Fraction(0)) + as_scalar(c)
        self._terms = {g: c for g, c in sorted(acc.items(), key=lambda gc: _gen_key(gc[0])) if c}

    @classmethod
    def of(cls, g: Generator, c: ScalarLike = 1) -> "LieElement":
        return cls(g.alg, {g: c})

    @property
    def terms(self) -> dict[Generator, Fraction]:
        return dict(self._terms)

    def __iter__(self) -> Iterator[tuple[Generator, Fraction]]:
        return iter(self._terms.items())

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __add__(self, other: "LieElement") -> "LieElement":
        if not isinstance(other, LieElement):
            return NotImplemented
        if other.alg != self.alg:
            raise AlgebraMismatch(f"cannot add {self.alg} and {other.alg} elements")
        return LieElement(self.alg, list(self._terms.items()) + list(other._terms.items()))

    def __neg__(self) -> "LieElement":
        return LieElement(self.alg, {g: -c for g, c in self._terms.items()})

    def __sub__(self, other: "LieElement") -> "LieElement":
        return self + (-other)

    def __mul__(self, s: ScalarLike) -> "LieElement":
        s = as_scalar(s)
        return LieElement(self.alg, {g: c * s for g, c in self._terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LieElement):
            return NotImplemented
        return self.alg == other.alg and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.alg, tuple(self._terms.items())))

    def __repr__(self) -> str:
        if not self._terms:
            return "0"
        return " + ".join(f"{scalar_to_str(c)}*{g}" for g, c in self._terms.items())

    def to_json(self) -> list:
        return [{"coeff": scalar_to_str(c), "gen": g.to_json()} for g, c in self._terms.items()]


def _gen_key(g: Generator):
    return (g.kind, g.n, g.k)


def bracket(alg: str, x: LieElement | Generator, y: LieElement | Generator) -> LieElement:
    """Bilinear extension of :func:`bracket_generators`."""
    if isinstance(x, Generator):
        x = LieElement.of(x)
    if isinstance(y, Generator):
        y = LieElement.of(y)
    if x.alg != alg or y.alg != alg:
        raise AlgebraMismatch(f"bracket in {alg} got elements of {x.alg} and {y.alg}")
    acc: dict[Generator, Fraction] = {}
    for g1, c1 in x:
        for g2, c2 in y:
            for g, c in bracket_generators(g1, g2):
                acc[g] = acc.get(g, Fraction(0)) + c1 * c2 * c
    return LieElement(alg, acc)


def involution(x: LieElement | Generator) -> LieElement:
    """Loop Virasoro involution ``d_n t^k -> -d_{-n} t^k``, ``c t^k -> -c t^k``."""
    if isinstance(x, Generator):
        x = LieElement.of(x)
    if x.alg != VIRASORO:
        raise AlgebraMismatch("the involution is only defined on the loop Virasoro algebra")
    acc = {}
    for g, c in x:
        if g.kind == "d":
            acc[vir_d(-g.n, g.k)] = -c
        else:
            acc[g] = -c
    return LieElement(VIRASORO, acc)
