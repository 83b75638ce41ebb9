"""PBW normal forms and the action on universal Whittaker modules.

A vector of the universal Whittaker module ``U(L) (x)_{U(a)} C v`` is a
rational combination of ordered monomials ``x_1 x_2 ... x_r v`` in the free
part (a complement of the acting subalgebra ``a``).  A monomial is stored as
a flat tuple of factors ``(tag, k)`` in non-increasing order: for the
Witt/Virasoro pairs ``tag`` is the degree ``n`` of ``d_n (x) t^k``; for sl2
``tag`` is 1 for ``f`` and 0 for ``h``, so the F-block precedes the H-block.

Rewriting (``g . x_1 x_2 ... v``):

* ``g`` free and ``g >= x_1``: prepend.
* otherwise ``g x_1 R = x_1 (g R) + [g, x_1] R``, recursively.
* ``g`` acting on ``v``: the Whittaker function value.
* central ``g``: multiplication by its value.

Every swap either shortens the word or removes an inversion, so the
recursion terminates.

Symbolic residuals
------------------
To decide ``(x_k - phi(x_k)) u = 0`` *for all integers k* the acting
generator is given the exponent :class:`SymExp` ``k + 0`` with ``k`` treated
as larger than every concrete exponent.  The only exponent-dependent steps
of the rewriting are (i) ordering two same-tag factors, which commute in the
Witt/Virasoro loop algebras, and (ii) evaluating an acting element on ``v``,
which is recorded as a tag ``(source, offset)`` meaning the scalar
``source(t^(k+offset))`` instead of being computed.  The resulting
*obligations* ``(template, coefficient functional)`` are therefore valid
for every ``k`` for Witt and Virasoro.  For sl2 the central term
``k (x,y) delta_{k+l,0}`` can also fire, but only when ``k`` equals minus a
sum of exponents of ``u``; those finitely many values are re-checked
concretely.

Completeness: templates that differ (shape or slot offset) instantiate to
different monomials once ``k`` exceeds every exponent in ``u``, and a
nonzero exp-polynomial cannot vanish on ``d+1`` consecutive integers (it
satisfies a two-sided recurrence with nonzero end coefficients), so it is
nonzero for arbitrarily large ``k``.  Hence ``u`` is a Whittaker vector iff
every merged obligation coefficient is the zero functional.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Iterable, Mapping, Sequence

from .exact_arith import ScalarLike, as_scalar, scalar_to_str
from .functionals import DEFAULT_WINDOW, Functional, Verdict, is_zero
from .lie_algebras import (
    SL2,
    VIRASORO,
    WITT,
    AlgebraMismatch,
    Generator,
    LieElement,
    bracket_generators,
)

__all__ = [
    "GEQ",
    "MINUS",
    "E_PAIR",
    "SetupError",
    "EngineError",
    "SymExp",
    "WhittakerSetup",
    "PBWMonomial",
    "MonomialStats",
    "ModuleElement",
    "Obligation",
    "engine_for",
    "compare",
    "stats",
    "act",
    "act_word",
    "degree_bound",
    "acting_families",
    "residual_family",
    "concrete_residual",
    "is_whittaker",
    "single_factor",
]

GEQ = "geq"
MINUS = "minus"
E_PAIR = "e"

_SL2_TAG = {"f": 1, "h": 0}
_SL2_KIND = {1: "f", 0: "h"}


class SetupError(ValueError):
    """Malformed Whittaker setup; ``violations`` lists every problem found."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class EngineError(RuntimeError):
    pass


PSI_RULE = "psi_i = 0 for all i >= 2N+1 (a Whittaker function kills [a, a])"


# ---------------------------------------------------------------------------
# symbolic exponent
# ---------------------------------------------------------------------------


class SymExp:
    """Loop exponent ``k + offset`` for a generic (arbitrarily large) ``k``."""

    __slots__ = ("offset",)

    def __init__(self, offset: int = 0):
        self.offset = offset

    def __add__(self, other):
        if isinstance(other, int):
            return SymExp(self.offset + other)
        if isinstance(other, SymExp):
            raise EngineError("two symbolic exponents met in one bracket")
        return NotImplemented

    __radd__ = __add__

    def __eq__(self, other):
        return isinstance(other, SymExp) and other.offset == self.offset

    def __hash__(self):
        return hash(("SymExp", self.offset))

    def __lt__(self, other):
        if isinstance(other, SymExp):
            return self.offset < other.offset
        if isinstance(other, int):
            return False
        return NotImplemented

    def __gt__(self, other):
        if isinstance(other, SymExp):
            return self.offset > other.offset
        if isinstance(other, int):
            return True
        return NotImplemented

    def __le__(self, other):
        return self == other or self < other

    def __ge__(self, other):
        return self == other or self > other

    def __repr__(self):
        if self.offset == 0:
            return "k"
        return f"k{self.offset:+d}"

    def instantiate(self, k: int) -> int:
        return k + self.offset


# ---------------------------------------------------------------------------
# setups
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WhittakerSetup:
    """Algebra, Whittaker pair and the functional data defining the type.

    Pair variants: ``(loop-witt, geq)`` with ``psi_n`` for ``N <= n <= 2N``;
    ``(loop-witt, minus)`` with the single ``phi`` on ``d_{-1} (x) A``;
    ``(loop-virasoro, geq)`` with ``psi_n`` and ``phi_c`` (value on
    ``c (x) t^k``); ``(sl2-hat, e)`` with ``phi`` on ``e (x) A`` and the level.
    Indices outside ``[N, 2N]`` cannot be stored.
    """

    algebra: str
    pair: str
    N: int | None = None
    psi: tuple[tuple[int, Functional], ...] = ()
    phi: Functional | None = None
    phi_c: Functional | None = None
    level: Fraction | None = None

    def __post_init__(self) -> None:
        problems = _structural_violations(self)
        if problems:
            raise SetupError(problems)

    # --- constructors --------------------------------------------------------
    @classmethod
    def witt_geq(cls, N: int, psi: Mapping[int, Functional]) -> "WhittakerSetup":
        return cls(WITT, GEQ, N, _psi_tuple(N, psi))

    @classmethod
    def witt_minus(cls, phi: Functional) -> "WhittakerSetup":
        return cls(WITT, MINUS, phi=phi)

    @classmethod
    def vir_geq(cls, N: int, psi: Mapping[int, Functional], phi_c: Functional | None = None) -> "WhittakerSetup":
        return cls(VIRASORO, GEQ, N, _psi_tuple(N, psi), phi_c=phi_c if phi_c is not None else Functional.zero())

    @classmethod
    def sl2_e(cls, phi: Functional, level: ScalarLike = 0) -> "WhittakerSetup":
        return cls(SL2, E_PAIR, phi=phi, level=as_scalar(level))

    # --- accessors -----------------------------------------------------------
    @property
    def variant(self) -> str:
        return {
            (WITT, GEQ): "GeqN",
            (WITT, MINUS): "GMinus",
            (VIRASORO, GEQ): "VirGeqN",
            (SL2, E_PAIR): "Sl2E",
        }[(self.algebra, self.pair)]

    def psi_of(self, n: int) -> Functional:
        for m, f in self.psi:
            if m == n:
                return f
        return Functional.zero()

    def source(self, name: str) -> Functional:
        if name.startswith("psi:"):
            return self.psi_of(int(name[4:]))
        if name == "phi":
            return self.phi
        if name == "phi_c":
            return self.phi_c
        raise KeyError(name)

    def sources(self) -> dict[str, Functional]:
        out = {f"psi:{n}": f for n, f in self.psi}
        if self.phi is not None:
            out["phi"] = self.phi
        if self.phi_c is not None:
            out["phi_c"] = self.phi_c
        return out

    def criterion_sources(self) -> list[str]:
        if self.pair == GEQ:
            return [f"psi:{2 * self.N - 1}", f"psi:{2 * self.N}"]
        return ["phi"]

    def describe(self) -> str:
        if self.pair == GEQ:
            return f"{self.algebra} pair (L, L_>=N) with N={self.N}"
        if self.pair == MINUS:
            return f"{self.algebra} pair (g, g_-1)"
        return f"{self.algebra} pair (sl2-hat, e(x)A + C khat) at level {scalar_to_str(self.level)}"

    # --- serialization -------------------------------------------------------
    def to_json(self) -> dict:
        out: dict[str, Any] = {"algebra": self.algebra}
        if self.pair == GEQ:
            out["pair"] = {"kind": GEQ, "N": self.N}
            out["psi"] = {str(n): f.to_json() for n, f in self.psi if not f.is_structurally_zero()}
            if self.algebra == VIRASORO:
                out["phi_c"] = self.phi_c.to_json()
        elif self.pair == MINUS:
            out["pair"] = {"kind": MINUS}
            out["phi"] = self.phi.to_json()
        else:
            out["pair"] = {"kind": E_PAIR}
            out["phi"] = self.phi.to_json()
            out["level"] = scalar_to_str(self.level)
        return out

    @classmethod
    def from_json(cls, data: Mapping, path: str = "setup") -> "WhittakerSetup":
        """Parse a setup; every problem is reported with its field path."""
        problems: list[str] = []
        if not isinstance(data, Mapping):
            raise SetupError([f"{path}: expected an object"])
        alg = data.get("algebra")
        if alg not in (WITT, VIRASORO, SL2):
            problems.append(f"{path}.algebra: expected one of loop-witt, loop-virasoro, sl2-hat, got {alg!r}")
        pair = data.get("pair")
        kind = pair.get("kind") if isinstance(pair, Mapping) else None
        if kind not in (GEQ, MINUS, E_PAIR):
            problems.append(f"{path}.pair.kind: expected geq, minus or e, got {kind!r}")
        if problems:
            raise SetupError(problems)
        allowed = {"algebra", "pair"}

        def functional(key: str) -> Functional | None:
            try:
                return Functional.from_json(data[key])
            except (KeyError, TypeError, ValueError) as exc:
                problems.append(f"{path}.{key}: {exc}")
                return None

        N = None
        psi: dict[int, Functional] = {}
        phi = phi_c = None
        level = None
        if kind == GEQ:
            if alg == SL2:
                problems.append(f"{path}.pair.kind: sl2-hat only supports the 'e' pair")
            N = pair.get("N")
            if not isinstance(N, int) or isinstance(N, bool) or N < 1:
                problems.append(f"{path}.pair.N: expected an integer >= 1, got {N!r}")
                N = None
            allowed |= {"psi", "phi_c"} if alg == VIRASORO else {"psi"}
            raw = data.get("psi", {})
            if not isinstance(raw, Mapping):
                problems.append(f"{path}.psi: expected an object mapping degree to functional")
                raw = {}
            for key, val in raw.items():
                try:
                    n = int(key)
                except ValueError:
                    problems.append(f"{path}.psi.{key}: degree must be an integer")
                    continue
                if N is not None and n >= 2 * N + 1:
                    problems.append(f"{path}.psi.{key}: psi_{n} given with N={N} violates {PSI_RULE}")
                    continue
                if N is not None and n < N:
                    problems.append(f"{path}.psi.{key}: psi_{n} is not in the acting subalgebra (needs N <= n <= 2N, N={N})")
                    continue
                try:
                    psi[n] = Functional.from_json(val)
                except (KeyError, TypeError, ValueError) as exc:
                    problems.append(f"{path}.psi.{key}: {exc}")
            if alg == VIRASORO:
                phi_c = functional("phi_c") if "phi_c" in data else Functional.zero()
        elif kind == MINUS:
            if alg != WITT:
                problems.append(f"{path}.pair.kind: the 'minus' pair is only defined for loop-witt")
            allowed |= {"phi"}
            phi = functional("phi") if "phi" in data else None
            if "phi" not in data:
                problems.append(f"{path}.phi: required for the 'minus' pair")
        else:
            if alg != SL2:
                problems.append(f"{path}.pair.kind: the 'e' pair is only defined for sl2-hat")
            allowed |= {"phi", "level"}
            phi = functional("phi") if "phi" in data else None
            if "phi" not in data:
                problems.append(f"{path}.phi: required for the 'e' pair")
            try:
                level = as_scalar(data.get("level", "0"))
            except (TypeError, ValueError) as exc:
                problems.append(f"{path}.level: {exc}")
        for key in sorted(set(data) - allowed):
            problems.append(f"{path}.{key}: unexpected field for this pair")
        if problems:
            raise SetupError(problems)
        if kind == GEQ:
            return cls(alg, GEQ, N, _psi_tuple(N, psi), phi_c=phi_c)
        if kind == MINUS:
            return cls(alg, MINUS, phi=phi)
        return cls(alg, E_PAIR, phi=phi, level=level)


def _psi_tuple(N: int, psi: Mapping[int, Functional]) -> tuple[tuple[int, Functional], ...]:
    bad = sorted(n for n in psi if not (N <= n <= 2 * N))
    if bad:
        msgs = []
        for n in bad:
            if n >= 2 * N + 1:
                msgs.append(f"psi_{n} given with N={N} violates {PSI_RULE}")
            else:
                msgs.append(f"psi_{n} is not in the acting subalgebra (needs N <= n <= 2N, N={N})")
        raise SetupError(msgs)
    return tuple((n, psi.get(n, Functional.zero())) for n in range(N, 2 * N + 1))


def _structural_violations(s: WhittakerSetup) -> list[str]:
    out = []
    key = (s.algebra, s.pair)
    if key not in ((WITT, GEQ), (WITT, MINUS), (VIRASORO, GEQ), (SL2, E_PAIR)):
        return [f"unsupported algebra/pair combination {key}"]
    if s.pair == GEQ:
        if not isinstance(s.N, int) or s.N < 1:
            out.append(f"N must be an integer >= 1, got {s.N!r}")
        else:
            idx = [n for n, _ in s.psi]
            if idx != list(range(s.N, 2 * s.N + 1)):
                out.append(f"psi must be indexed exactly by N..2N; {PSI_RULE}")
        if s.algebra == VIRASORO and not isinstance(s.phi_c, Functional):
            out.append("loop Virasoro setups need phi_c")
        if s.phi is not None or s.level is not None:
            out.append("geq pairs carry psi_n only")
    else:
        if not isinstance(s.phi, Functional):
            out.append("phi must be a Functional")
        if s.psi or s.N is not None or s.phi_c is not None:
            out.append(f"the {s.pair!r} pair stores exactly one functional")
        if s.pair == E_PAIR and not isinstance(s.level, Fraction):
            out.append("sl2-hat setups need a rational level")
    return out


# ---------------------------------------------------------------------------
# monomials and module elements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MonomialStats:
    lth: int
    lth_by_degree: dict[int, int]
    D_tuple: tuple[int, ...]
    T_tuple: tuple[Any, ...]
    D_set: frozenset[int]
    T_set: frozenset[Any]
    T_set_by_degree: dict[int, frozenset[Any]]


class PBWMonomial(tuple):
    """Ordered monomial; a flat tuple of ``(tag, k)`` factors, non-increasing.

    The empty monomial is the cyclic vector.
    """

    __slots__ = ()

    def __new__(cls, factors: Iterable[tuple[int, Any]] = ()):
        return super().__new__(cls, factors)

    @classmethod
    def from_factors(cls, factors: Iterable[tuple[int, Any]]) -> "PBWMonomial":
        return cls(sorted((tuple(f) for f in factors), reverse=True))

    @classmethod
    def from_blocks(cls, blocks: Iterable[tuple[int, Any, int]]) -> "PBWMonomial":
        flat = []
        for tag, k, mult in blocks:
            if mult < 1:
                raise ValueError("multiplicities must be positive")
            flat.extend([(tag, k)] * mult)
        return cls.from_factors(flat)

    @property
    def lth(self) -> int:
        return len(self)

    def blocks(self) -> list[tuple[int, Any, int]]:
        out: list[list] = []
        for tag, k in self:
            if out and out[-1][0] == tag and out[-1][1] == k:
                out[-1][2] += 1
            else:
                out.append([tag, k, 1])
        return [tuple(b) for b in out]

    def sort_key(self):
        return (len(self), tuple(t for t, _ in self), tuple(k for _, k in self))

    def marked_offset(self) -> int | None:
        for _, k in self:
            if isinstance(k, SymExp):
                return k.offset
        return None

    def is_canonical(self) -> bool:
        return all(self[i] >= self[i + 1] for i in range(len(self) - 1))

    def __repr__(self) -> str:
        return f"PBWMonomial({list(self)!r})"


def stats(u: PBWMonomial) -> MonomialStats:
    """lth, degree and exponent tuples/sets of a monomial."""
    by_deg: dict[int, int] = {}
    tset: dict[int, set] = {}
    for tag, k in u:
        by_deg[tag] = by_deg.get(tag, 0) + 1
        tset.setdefault(tag, set()).add(k)
    return MonomialStats(
        lth=len(u),
        lth_by_degree=by_deg,
        D_tuple=tuple(t for t, _ in u),
        T_tuple=tuple(k for _, k in u),
        D_set=frozenset(by_deg),
        T_set=frozenset(k for _, k in u),
        T_set_by_degree={t: frozenset(s) for t, s in tset.items()},
    )


def compare(u: PBWMonomial, v: PBWMonomial) -> int:
    """Principal total order: lth, then degree tuple, then exponent tuple."""
    a, b = PBWMonomial(u).sort_key(), PBWMonomial(v).sort_key()
    return (a > b) - (a < b)


def format_monomial(alg: str, m: PBWMonomial) -> str:
    if not m:
        return "v"
    parts = []
    for tag, k, mult in m.blocks():
        if alg == SL2:
            base = f"({_SL2_KIND[tag]}(x)t^{k})"
        else:
            base = f"D({tag},{k})"
        parts.append(base if mult == 1 else f"{base}^{mult}")
    return "".join(parts) + "v"


class ModuleElement:
    """Finite rational combination of PBW monomials (one setup)."""

    __slots__ = ("alg", "_terms")

    def __init__(self, alg: str, terms: Mapping[PBWMonomial, ScalarLike] | Iterable = ()):
        self.alg = alg
        acc: dict[PBWMonomial, Fraction] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for m, c in items:
            m = m if isinstance(m, PBWMonomial) else PBWMonomial.from_factors(m)
            acc[m] = acc.get(m, Fraction(0)) + as_scalar(c)
        self._terms = {
            m: c for m, c in sorted(acc.items(), key=lambda mc: mc[0].sort_key(), reverse=True) if c
        }

    @classmethod
    def vacuum(cls, alg: str) -> "ModuleElement":
        return cls(alg, {PBWMonomial(): 1})

    @classmethod
    def zero(cls, alg: str) -> "ModuleElement":
        return cls(alg)

    @property
    def terms(self) -> dict[PBWMonomial, Fraction]:
        return dict(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def __len__(self) -> int:
        return len(self._terms)

    def monomials(self) -> list[PBWMonomial]:
        return list(self._terms)

    def coeff(self, m: Iterable) -> Fraction:
        return self._terms.get(PBWMonomial(m), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def lth(self) -> int:
        return max((len(m) for m in self._terms), default=0)

    def leading(self) -> tuple[PBWMonomial, Fraction] | None:
        return next(iter(self._terms.items()), None)

    def is_multiple_of_vacuum(self) -> bool:
        return all(len(m) == 0 for m in self._terms)

    def __add__(self, other: "ModuleElement") -> "ModuleElement":
        if not isinstance(other, ModuleElement):
            return NotImplemented
        return ModuleElement(self.alg, list(self._terms.items()) + list(other._terms.items()))

    def __neg__(self) -> "ModuleElement":
        return ModuleElement(self.alg, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other: "ModuleElement") -> "ModuleElement":
        return self + (-other)

    def __mul__(self, s: ScalarLike) -> "ModuleElement":
        s = as_scalar(s)
        return ModuleElement(self.alg, {m: c * s for m, c in self._terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ModuleElement):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(tuple(self._terms.items()))

    def __repr__(self) -> str:
        return f"ModuleElement({self})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        out = ""
        for i, (m, c) in enumerate(self._terms.items()):
            mono = format_monomial(self.alg, m)
            mag = abs(c)
            body = mono if mag == 1 else f"{scalar_to_str(mag)}*{mono}"
            if i == 0:
                out = ("-" if c < 0 else "") + body
            else:
                out += (" - " if c < 0 else " + ") + body
        return out

    def to_json(self) -> list:
        out = []
        for m, c in self._terms.items():
            if self.alg == SL2:
                mono = [{"gen": _SL2_KIND[t], "k": k, "mult": mult} for t, k, mult in m.blocks()]
            else:
                mono = [{"deg": t, "k": k, "mult": mult} for t, k, mult in m.blocks()]
            out.append({"coeff": scalar_to_str(c), "monomial": mono})
        return out

    @classmethod
    def from_json(cls, alg: str, data: Iterable) -> "ModuleElement":
        terms = []
        for item in data:
            blocks = []
            for f in item["monomial"]:
                mult = int(f.get("mult", 1))
                if alg == SL2:
                    if f.get("gen") not in _SL2_TAG:
                        raise ValueError(f"sl2 module factors must be f or h, got {f.get('gen')!r}")
                    blocks.append((_SL2_TAG[f["gen"]], int(f["k"]), mult))
                else:
                    blocks.append((int(f["deg"]), int(f["k"]), mult))
            terms.append((PBWMonomial.from_blocks(blocks), as_scalar(item["coeff"])))
        return cls(alg, terms)


def single_factor(setup: WhittakerSetup, tag_or_kind, k: int) -> PBWMonomial:
    tag = _SL2_TAG[tag_or_kind] if setup.algebra == SL2 else tag_or_kind
    return PBWMonomial(((tag, k),))


# ---------------------------------------------------------------------------
# the rewriting engine
# ---------------------------------------------------------------------------

_Key = tuple  # (monomial tuple, tag or None)


class Engine:
    """Memoized rewriting for one setup.

    :meth:`act_mono` returns ``{(monomial, tag): coeff}``.  ``tag`` is None
    for ordinary terms; ``(source, offset)`` marks a term whose coefficient
    is additionally multiplied by ``source(t^(k+offset))`` for the symbolic
    ``k`` (this only happens when the acting generator is symbolic).
    """

    def __init__(self, setup: WhittakerSetup):
        self.setup = setup
        self.alg = setup.algebra
        self._cache: dict[tuple, dict] = {}
        self._residual_cache: dict[tuple, dict] = {}
        self._values: dict[tuple[str, int], Fraction] = {}

    # --- classification of generators ---------------------------------------
    def is_free(self, g: Generator) -> bool:
        s = self.setup
        if s.pair == GEQ:
            return g.kind == "d" and g.n <= s.N - 1
        if s.pair == MINUS:
            return g.n >= 0
        return g.kind in ("f", "h")

    def factor(self, g: Generator) -> tuple[int, Any]:
        if self.alg == SL2:
            return (_SL2_TAG[g.kind], g.k)
        return (g.n, g.k)

    def gen(self, f: tuple[int, Any]) -> Generator:
        if self.alg == SL2:
            return Generator(SL2, _SL2_KIND[f[0]], 0, f[1])
        return Generator(self.alg, "d", f[0], f[1])

    def source_of(self, g: Generator) -> str | None:
        """Name of the functional giving ``g``'s value on ``v`` (None: zero)."""
        s = self.setup
        if g.kind == "c":
            return "phi_c"
        if s.pair == GEQ:
            return f"psi:{g.n}" if g.n <= 2 * s.N else None
        if s.pair == MINUS:
            return "phi"
        if g.kind == "e":
            return "phi"
        raise EngineError(f"{g} has no vacuum value")

    def value(self, src: str, k: int) -> Fraction:
        key = (src, k)
        v = self._values.get(key)
        if v is None:
            v = self.setup.source(src).evaluate(k)
            self._values[key] = v
        return v

    def vacuum_value(self, g: Generator) -> tuple[Fraction, Any]:
        if g.kind == "K":
            return (self.setup.level, None)
        src = self.source_of(g)
        if src is None or self.setup.source(src).is_structurally_zero():
            return (Fraction(0), None)
        if isinstance(g.k, SymExp):
            return (Fraction(1), (src, g.k.offset))
        return (self.value(src, g.k), None)

    def check(self, g: Generator) -> None:
        if g.alg != self.alg:
            raise AlgebraMismatch(f"{g} does not belong to {self.alg}")
        if self.setup.pair == MINUS and g.kind == "d" and g.n < -1:
            raise AlgebraMismatch(f"{g} is not in the loop Witt algebra")

    # --- rewriting ---------------------------------------------------------
    def act_mono(self, g: Generator, mono: tuple) -> dict[_Key, Fraction]:
        key = (g, mono)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        out = self._act_mono(g, mono)
        self._cache[key] = out
        return out

    def _act_mono(self, g: Generator, mono: tuple) -> dict[_Key, Fraction]:
        if g.kind in ("c", "K"):
            coef, tag = self.vacuum_value(g)
            return {(mono, tag): coef} if coef else {}
        free = self.is_free(g)
        if not mono:
            if free:
                return {((self.factor(g),), None): Fraction(1)}
            coef, tag = self.vacuum_value(g)
            return {((), tag): coef} if coef else {}
        x1 = mono[0]
        if free:
            fg = self.factor(g)
            if fg >= x1:
                return {((fg,) + mono, None): Fraction(1)}
        rest = mono[1:]
        out: dict[_Key, Fraction] = defaultdict(Fraction)
        gx1 = self.gen(x1)
        # g x1 R = x1 (g R) + [g, x1] R
        for (m, tag), c in self.act_mono(g, rest).items():
            for (m2, tag2), c2 in self.act_mono(gx1, m).items():
                if tag is not None and tag2 is not None:
                    raise EngineError("two vacuum evaluations of the symbolic generator")
                out[(m2, tag if tag is not None else tag2)] += c * c2
        for h, cb in bracket_generators(g, gx1):
            for k2, c2 in self.act_mono(h, rest).items():
                out[k2] += cb * c2
        return {k: v for k, v in out.items() if v}

    # --- element level -----------------------------------------------------
    def act_element(self, g: Generator, u: ModuleElement) -> ModuleElement:
        self.check(g)
        acc: dict[tuple, Fraction] = defaultdict(Fraction)
        for m, c in u:
            for (m2, tag), c2 in self.act_mono(g, tuple(m)).items():
                if tag is not None:
                    raise EngineError("symbolic tag in a concrete action")
                acc[m2] += c * c2
        return ModuleElement(self.alg, {PBWMonomial(m): c for m, c in acc.items() if c})

    def residual_mono(self, family, mono: tuple) -> dict[_Key, Fraction]:
        """Symbolic ``(x_k - src(t^k)) . mono`` for the acting family."""
        key = (family, mono)
        hit = self._residual_cache.get(key)
        if hit is not None:
            return hit
        g = family_generator(self.setup, family, SymExp(0))
        out = dict(self.act_mono(g, mono))
        src = family_source(self.setup, family)
        if src is not None and not self.setup.source(src).is_structurally_zero():
            k = (mono, (src, 0))
            out[k] = out.get(k, Fraction(0)) - 1
            if not out[k]:
                del out[k]
        self._residual_cache[key] = out
        return out


@lru_cache(maxsize=64)
def engine_for(setup: WhittakerSetup) -> Engine:
    return Engine(setup)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def _as_lie(setup: WhittakerSetup, g) -> LieElement:
    if isinstance(g, Generator):
        return LieElement.of(g)
    if isinstance(g, LieElement):
        if g.alg != setup.algebra:
            raise AlgebraMismatch(f"element of {g.alg} acting on a {setup.algebra} module")
        return g
    raise TypeError(f"cannot act with {g!r}")


def act(setup: WhittakerSetup, g: Generator | LieElement, u: ModuleElement) -> ModuleElement:
    """Exact action of a Lie algebra element on a module element, in PBW form."""
    eng = engine_for(setup)
    x = _as_lie(setup, g)
    acc = ModuleElement.zero(setup.algebra)
    for gen, c in x:
        acc = acc + eng.act_element(gen, u) * c
    return acc


def act_word(setup: WhittakerSetup, word: Sequence[Generator | LieElement], u: ModuleElement) -> ModuleElement:
    """Left action of the product ``word[0] word[1] ... word[-1]``."""
    for x in reversed(list(word)):
        u = act(setup, x, u)
    return u


def degree_bound(setup: WhittakerSetup, u: ModuleElement) -> int:
    """Conservative ``n_max`` past which ``d_n (x) t^k`` acts on ``u`` by ``psi_n = 0``.

    ``2N + lth(u) * (N + max(0, -d_min(u)))``.
    """
    if setup.pair != GEQ:
        raise ValueError(f"degree_bound applies to geq pairs, not {setup.variant}")
    N = setup.N
    tags = [t for m in u.monomials() for t, _ in m]
    d_min = min(tags, default=0)
    return 2 * N + u.lth() * (N + max(0, -d_min))


def acting_families(setup: WhittakerSetup, u: ModuleElement) -> list:
    """The acting generator families whose residuals decide Whittaker-ness."""
    if setup.pair == GEQ:
        fams: list = list(range(setup.N, degree_bound(setup, u) + 1))
        if setup.algebra == VIRASORO:
            fams.append("c")
        return fams
    if setup.pair == MINUS:
        return [-1]
    return ["e"]


def family_generator(setup: WhittakerSetup, family, k) -> Generator:
    if family == "c":
        return Generator(VIRASORO, "c", 0, k)
    if family == "e":
        return Generator(SL2, "e", 0, k)
    return Generator(setup.algebra, "d", family, k)


def family_source(setup: WhittakerSetup, family) -> str | None:
    if family == "c":
        return "phi_c"
    if family == "e" or setup.pair == MINUS:
        return "phi"
    return f"psi:{family}" if family <= 2 * setup.N else None


def _validate_family(setup: WhittakerSetup, family) -> None:
    if setup.pair == GEQ:
        if family == "c" and setup.algebra == VIRASORO:
            return
        if isinstance(family, int) and family >= setup.N:
            return
    elif setup.pair == MINUS and family == -1:
        return
    elif setup.pair == E_PAIR and family == "e":
        return
    raise ValueError(f"{family!r} is not an acting family of the {setup.variant} pair")


@dataclass(frozen=True)
class Obligation:
    """``coefficient(k) * instantiate(template, k)`` summand of a residual.

    ``template`` may contain one factor whose exponent is ``k + offset``.
    """

    template: PBWMonomial
    coefficient: Functional

    @property
    def marked_offset(self) -> int | None:
        return self.template.marked_offset()

    def instantiate(self, setup: WhittakerSetup, k: int) -> ModuleElement:
        u = ModuleElement.vacuum(setup.algebra)
        eng = engine_for(setup)
        for tag, e in reversed(self.template):
            e = e.instantiate(k) if isinstance(e, SymExp) else e
            u = eng.act_element(eng.gen((tag, e)), u)
        return u

    def to_json(self, alg: str) -> dict:
        mono = []
        for tag, k, mult in self.template.blocks():
            entry: dict[str, Any] = {"gen": _SL2_KIND[tag]} if alg == SL2 else {"deg": tag}
            if isinstance(k, SymExp):
                entry["k"] = "k" if k.offset == 0 else f"k{k.offset:+d}"
                entry["marked_offset"] = k.offset
            else:
                entry["k"] = k
            entry["mult"] = mult
            mono.append(entry)
        return {"template": mono, "coefficient": self.coefficient.to_json(), "coefficient_str": str(self.coefficient)}


def lin_to_functional(setup: WhittakerSetup, lin: Mapping[Any, Fraction]) -> Functional:
    total = Functional.zero()
    for tag, c in lin.items():
        if tag is None:
            total = total + Functional.constant(c)
        else:
            src, off = tag
            total = total + setup.source(src).shift(off) * c
    return total


def residual_lin(setup: WhittakerSetup, family, u: ModuleElement) -> dict[PBWMonomial, dict[Any, Fraction]]:
    """Merged residual: template -> {tag: coeff} (tag None = constant)."""
    eng = engine_for(setup)
    acc: dict[tuple, dict[Any, Fraction]] = {}
    for m, c in u:
        for (m2, tag), c2 in eng.residual_mono(family, tuple(m)).items():
            slot = acc.setdefault(m2, {})
            slot[tag] = slot.get(tag, Fraction(0)) + c * c2
    out = {}
    for m2, lin in acc.items():
        lin = {t: v for t, v in lin.items() if v}
        if lin:
            out[PBWMonomial(m2)] = lin
    return out


def _template_key(m: PBWMonomial):
    return tuple((t, (1, k.offset) if isinstance(k, SymExp) else (0, k)) for t, k in m)


def residual_family(setup: WhittakerSetup, family, u: ModuleElement) -> list[Obligation]:
    """Obligations whose vanishing encodes ``(x_k - src(t^k)) u = 0`` for all k.

    ``family`` is the degree ``n`` of ``d_n (x) t^k`` for geq pairs, ``-1``
    for the minus pair, ``"e"`` for sl2 and ``"c"`` for the Virasoro centre.
    Obligations with structurally zero coefficient are dropped and the rest
    are sorted by template.
    """
    _validate_family(setup, family)
    out = []
    for m, lin in residual_lin(setup, family, u).items():
        f = lin_to_functional(setup, lin)
        if not f.is_structurally_zero():
            out.append(Obligation(m, f))
    out.sort(key=lambda ob: _template_key(ob.template))
    return out


def concrete_residual(setup: WhittakerSetup, family, k: int, u: ModuleElement) -> ModuleElement:
    """``(x_k - src(t^k)) u`` for a concrete integer ``k``."""
    g = family_generator(setup, family, k)
    src = family_source(setup, family)
    val = setup.source(src).evaluate(k) if src is not None else Fraction(0)
    return act(setup, g, u) - u * val


def _sl2_exceptional_ks(u: ModuleElement) -> list[int]:
    """Loop exponents where a central delta can fire while acting on ``u``."""
    out: set[int] = set()
    for m in u.monomials():
        ks = [k for _, k in m]
        for r in range(1, len(ks) + 1):
            for combo in itertools.combinations(ks, r):
                out.add(-sum(combo))
    return sorted(out)


def _search_k(limit: int = 512):
    yield 0
    for s in range(1, limit + 1):
        yield s
        yield -s


def is_whittaker(setup: WhittakerSetup, u: ModuleElement, window: tuple[int, int] = DEFAULT_WINDOW) -> Verdict:
    """Decide whether ``u`` is a Whittaker vector (of the setup's type).

    Exact when every obligation coefficient is an exp-polynomial; windowed
    when an oracle-bearing coefficient could only be tested on ``window``.
    A negative answer always carries a concrete witness ``(family, k)``
    checked by direct action.
    """
    if u.is_zero():
        return Verdict(Verdict.EXACT_TRUE, detail="zero vector (Whittaker by convention)")
    windowed = False
    for fam in acting_families(setup, u):
        for ob in residual_family(setup, fam, u):
            z = is_zero(ob.coefficient, window)
            if z.kind == Verdict.EXACT_TRUE:
                continue
            if z.kind == Verdict.WINDOWED_TRUE:
                windowed = True
                continue
            hints = [z.witness - (ob.marked_offset or 0)] if isinstance(z.witness, int) else []
            for k in itertools.chain(hints, _search_k()):
                if not concrete_residual(setup, fam, k, u).is_zero():
                    return Verdict(Verdict.EXACT_FALSE, witness=(fam, k))
            raise EngineError(f"nonzero obligation for family {fam} without a concrete witness")
    if setup.algebra == SL2:
        for k in _sl2_exceptional_ks(u):
            if not concrete_residual(setup, "e", k, u).is_zero():
                return Verdict(Verdict.EXACT_FALSE, witness=("e", k))
    if windowed:
        return Verdict(Verdict.WINDOWED_TRUE, window=tuple(window))
    return Verdict(Verdict.EXACT_TRUE)
