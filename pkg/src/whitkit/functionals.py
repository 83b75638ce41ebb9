"""Linear functionals on the Laurent ring and decision procedures for them.

A functional ``phi`` is identified with the two-sided sequence
``n -> phi(t^n)``.  Two kinds are supported and may be mixed linearly:

* exp-polynomials ``n -> sum c_{k,lam} n^k lam^n`` with nonzero rational
  bases ``lam``, held in canonical form so equality is structural;
* closed-form oracles from a small catalog (``half_square_power``,
  ``abs_factorial``, ``alt_factorial``), each carrying a *declared*
  membership status that classification never trusts blindly.

A :class:`Functional` is ``E + sum_R p_R . R`` with ``E`` exp-polynomial,
``R`` ranging over oracle rules and ``p_R`` Laurent polynomials acting by
the shift action ``(t^m . phi)(t^n) = phi(t^(n+m))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Iterable, Mapping

from .exact_arith import LaurentPoly, ScalarLike, as_scalar, scalar_to_str
from .linalg import RowEchelon

__all__ = [
    "OracleRule",
    "Functional",
    "Verdict",
    "Classification",
    "ClassificationError",
    "ORACLE_CATALOG",
    "DEFAULT_DEGREE_BOUND",
    "DEFAULT_WINDOW",
    "evaluate",
    "shift",
    "annihilator_generator",
    "annihilator_lcm",
    "is_zero",
    "classify",
]

DEFAULT_DEGREE_BOUND = 6
DEFAULT_WINDOW = (-16, 16)


class ClassificationError(ValueError):
    """A catalog oracle's declared class is contradicted by computation."""


# ---------------------------------------------------------------------------
# oracle catalog
# ---------------------------------------------------------------------------


def _half_square_power(base: Fraction, n: int) -> Fraction:
    return base ** (n * (n - 1) // 2)


def _abs_factorial(base: Fraction, n: int) -> Fraction:
    return base**n * math.factorial(abs(n))


def _alt_factorial(base: Fraction, n: int) -> Fraction:
    return (-1) ** (n % 2) * base**n * math.factorial(abs(n))


ORACLE_CATALOG = {
    "half_square_power": _half_square_power,
    "abs_factorial": _abs_factorial,
    "alt_factorial": _alt_factorial,
}


@dataclass(frozen=True, order=True)
class OracleRule:
    """A catalog closed form ``n -> value`` total on the integers.

    ``half_square_power`` with base ``a`` is ``a^(n(n-1)/2)`` and needs an
    integer ``a >= 2``.  The factorial rules are ``b^n |n|!`` and
    ``(-1)^n b^n |n|!`` for a nonzero rational ``b``.
    """

    rule: str
    base: Fraction = Fraction(2)
    declared_in_E: bool = False

    def __post_init__(self) -> None:
        if self.rule not in ORACLE_CATALOG:
            raise ValueError(f"unknown oracle rule {self.rule!r}; catalog: {sorted(ORACLE_CATALOG)}")
        base = as_scalar(self.base)
        object.__setattr__(self, "base", base)
        if self.rule == "half_square_power":
            if base.denominator != 1 or base < 2:
                raise ValueError("half_square_power needs an integer base >= 2")
        elif base == 0:
            raise ValueError(f"{self.rule} needs a nonzero base (else undefined at negative n)")

    def value(self, n: int) -> Fraction:
        return _oracle_value(self, n)

    def to_json(self) -> dict:
        return {"rule": self.rule, "base": scalar_to_str(self.base), "declared_in_E": self.declared_in_E}

    @classmethod
    def from_json(cls, data: Mapping) -> "OracleRule":
        unknown = set(data) - {"rule", "base", "declared_in_E"}
        if unknown:
            raise ValueError(f"unknown oracle fields {sorted(unknown)}")
        return cls(
            rule=data["rule"],
            base=as_scalar(data.get("base", "2")),
            declared_in_E=bool(data.get("declared_in_E", False)),
        )


@lru_cache(maxsize=65536)
def _oracle_value(rule: OracleRule, n: int) -> Fraction:
    return Fraction(ORACLE_CATALOG[rule.rule](rule.base, n))


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------


def _canon_exp(components) -> tuple[tuple[Fraction, tuple[Fraction, ...]], ...]:
    out = []
    for lam, coeffs in sorted(components.items()):
        coeffs = list(coeffs)
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        if coeffs:
            if lam == 0:
                raise ValueError("exp-polynomial bases must be nonzero")
            out.append((lam, tuple(coeffs)))
    return tuple(out)


class Functional:
    """Exact functional ``E + sum_R p_R . R`` (see module docstring)."""

    __slots__ = ("_exp", "_oracles", "_hash")

    def __init__(
        self,
        exp: Mapping[ScalarLike, Iterable[ScalarLike]] | None = None,
        oracles: Mapping[OracleRule, LaurentPoly] | None = None,
    ):
        comps: dict[Fraction, list[Fraction]] = {}
        for lam, coeffs in (exp or {}).items():
            lam = as_scalar(lam)
            acc = comps.setdefault(lam, [])
            for i, c in enumerate(coeffs):
                if i >= len(acc):
                    acc.append(Fraction(0))
                acc[i] += as_scalar(c)
        self._exp = _canon_exp(comps)
        self._oracles = tuple(sorted(((r, p) for r, p in (oracles or {}).items() if p), key=lambda rp: rp[0]))
        self._hash = hash((self._exp, self._oracles))

    # --- constructors ------------------------------------------------------
    @classmethod
    def zero(cls) -> "Functional":
        return cls()

    @classmethod
    def constant(cls, c: ScalarLike) -> "Functional":
        return cls({1: [c]})

    @classmethod
    def exp_poly(cls, components: Mapping[ScalarLike, Iterable[ScalarLike]]) -> "Functional":
        """``{lam: (c_0, ..., c_d)}`` meaning ``sum_k c_k n^k lam^n``."""
        return cls(components)

    @classmethod
    def geometric(cls, lam: ScalarLike, c: ScalarLike = 1) -> "Functional":
        return cls({lam: [c]})

    @classmethod
    def oracle(cls, rule: str | OracleRule, base: ScalarLike = 2, declared_in_E: bool = False) -> "Functional":
        if not isinstance(rule, OracleRule):
            rule = OracleRule(rule, as_scalar(base), declared_in_E)
        return cls(oracles={rule: LaurentPoly.constant(1)})

    # --- inspection -------------------------------------------------------
    @property
    def components(self) -> dict[Fraction, tuple[Fraction, ...]]:
        return dict(self._exp)

    @property
    def oracle_terms(self) -> tuple[tuple[OracleRule, LaurentPoly], ...]:
        return self._oracles

    @property
    def exp_part(self) -> "Functional":
        return Functional(dict(self._exp))

    def is_exp_poly(self) -> bool:
        return not self._oracles

    def is_structurally_zero(self) -> bool:
        return not self._exp and not self._oracles

    def declared_in_E(self) -> bool | None:
        """Declared membership in the exp-polynomial space.

        Exact for pure exp-polynomials.  With a single oracle rule the
        declared status of that rule carries over (a nonzero shift of a
        non-member stays a non-member); with several rules it is unknown.
        """
        if not self._oracles:
            return True
        rules = {r for r, _ in self._oracles}
        if all(r.declared_in_E for r in rules):
            return True
        if len(rules) == 1:
            return False
        return None

    # --- evaluation and module structure ---------------------------------
    def __call__(self, n: int) -> Fraction:
        return self.evaluate(n)

    def evaluate(self, n: int) -> Fraction:
        total = Fraction(0)
        for lam, coeffs in self._exp:
            poly = Fraction(0)
            for c in reversed(coeffs):
                poly = poly * n + c
            if poly:
                total += poly * lam**n
        for rule, p in self._oracles:
            for m, c in p:
                total += c * _oracle_value(rule, n + m)
        return total

    def shift(self, f: LaurentPoly | int) -> "Functional":
        """``f . phi``; an integer ``m`` means ``t^m``."""
        if isinstance(f, int):
            f = LaurentPoly.monomial(f)
        comps: dict[Fraction, list[Fraction]] = {}
        for m, a in f:
            for lam, coeffs in _shift_component(self._exp, m):
                acc = comps.setdefault(lam, [])
                for j, c in enumerate(coeffs):
                    if j >= len(acc):
                        acc.append(Fraction(0))
                    acc[j] += a * c
        oracles = {r: f * p for r, p in self._oracles}
        return Functional(comps, oracles)

    def __add__(self, other: "Functional") -> "Functional":
        if not isinstance(other, Functional):
            if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
                other = Functional.constant(other)
            else:
                return NotImplemented
        comps: dict[Fraction, list[Fraction]] = {}
        for src in (self._exp, other._exp):
            for lam, coeffs in src:
                acc = comps.setdefault(lam, [])
                for j, c in enumerate(coeffs):
                    if j >= len(acc):
                        acc.append(Fraction(0))
                    acc[j] += c
        oracles = dict(self._oracles)
        for r, p in other._oracles:
            oracles[r] = oracles.get(r, LaurentPoly()) + p
        return Functional(comps, oracles)

    __radd__ = __add__

    def __neg__(self) -> "Functional":
        return self * -1

    def __sub__(self, other: "Functional") -> "Functional":
        return self + (-other)

    def __mul__(self, s: ScalarLike) -> "Functional":
        s = as_scalar(s)
        if s == 0:
            return Functional()
        return Functional(
            {lam: [c * s for c in coeffs] for lam, coeffs in self._exp},
            {r: p * s for r, p in self._oracles},
        )

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Functional):
            return NotImplemented
        return self._exp == other._exp and self._oracles == other._oracles

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Functional({self})"

    def __str__(self) -> str:
        if self.is_structurally_zero():
            return "0"
        parts = []
        for lam, coeffs in self._exp:
            for k, c in enumerate(coeffs):
                if c == 0:
                    continue
                nk = "" if k == 0 else ("n" if k == 1 else f"n^{k}")
                ln = "" if lam == 1 else f"({scalar_to_str(lam)})^n"
                body = "*".join(x for x in (nk, ln) if x)
                if not body:
                    parts.append(scalar_to_str(c))
                elif c == 1:
                    parts.append(body)
                else:
                    parts.append(f"{scalar_to_str(c)}*{body}")
        for r, p in self._oracles:
            name = f"{r.rule}[{scalar_to_str(r.base)}]"
            parts.append(name if p == LaurentPoly.constant(1) else f"({p}).{name}")
        return " + ".join(parts)

    # --- serialization ------------------------------------------------------
    def to_json(self) -> dict:
        if self._oracles and not self._exp and len(self._oracles) == 1 and self._oracles[0][1] == LaurentPoly.constant(1):
            return {"oracle": self._oracles[0][0].to_json()}
        out: dict[str, Any] = {
            "exp_poly": [
                {"lambda": scalar_to_str(lam), "coeffs": [scalar_to_str(c) for c in coeffs]}
                for lam, coeffs in self._exp
            ]
        }
        if self._oracles:
            out["oracle_terms"] = [{"oracle": r.to_json(), "shift": p.to_json()} for r, p in self._oracles]
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "Functional":
        if not isinstance(data, Mapping):
            raise ValueError(f"functional must be an object, got {type(data).__name__}")
        unknown = set(data) - {"exp_poly", "oracle", "oracle_terms"}
        if unknown:
            raise ValueError(f"unknown functional fields {sorted(unknown)}")
        comps: dict[Fraction, list[Fraction]] = {}
        for item in data.get("exp_poly", []):
            lam = as_scalar(item["lambda"])
            if lam == 0:
                raise ValueError("exp-polynomial bases must be nonzero")
            if lam in comps:
                raise ValueError(f"duplicate exp-polynomial base {scalar_to_str(lam)}")
            comps[lam] = [as_scalar(c) for c in item["coeffs"]]
        oracles: dict[OracleRule, LaurentPoly] = {}
        if "oracle" in data:
            oracles[OracleRule.from_json(data["oracle"])] = LaurentPoly.constant(1)
        for item in data.get("oracle_terms", []):
            r = OracleRule.from_json(item["oracle"])
            oracles[r] = oracles.get(r, LaurentPoly()) + LaurentPoly.from_json(item["shift"])
        return cls(comps, oracles)


@lru_cache(maxsize=None)
def _shift_component(exp, m: int):
    """Binomial re-expansion of ``t^m . sum c_k n^k lam^n``.

    ``c'_j = lam^m sum_{k>=j} c_k binom(k, j) m^(k-j)``.
    """
    out = []
    for lam, coeffs in exp:
        scale = lam**m
        d = len(coeffs)
        new = [
            scale * sum(coeffs[k] * math.comb(k, j) * m ** (k - j) for k in range(j, d))
            for j in range(d)
        ]
        out.append((lam, tuple(new)))
    return tuple(out)


def evaluate(phi: Functional, n: int) -> Fraction:
    return phi.evaluate(n)


def shift(f: LaurentPoly | int, phi: Functional) -> Functional:
    return phi.shift(f)


def annihilator_generator(phi: Functional) -> LaurentPoly:
    """Monic generator ``prod_lam (t - lam)^(d_lam + 1)`` of ``Ann(phi)``."""
    if not phi.is_exp_poly():
        raise ValueError("annihilator generators are only computed for exp-polynomial functionals")
    return LaurentPoly.from_roots(_ann_roots({lam: len(c) for lam, c in phi.components.items()}))


def annihilator_lcm(*phis: Functional) -> LaurentPoly:
    """Generator of the intersection of the annihilators (their lcm)."""
    mult: dict[Fraction, int] = {}
    for phi in phis:
        if not phi.is_exp_poly():
            raise ValueError("annihilator generators are only computed for exp-polynomial functionals")
        for lam, coeffs in phi.components.items():
            mult[lam] = max(mult.get(lam, 0), len(coeffs))
    return LaurentPoly.from_roots(_ann_roots(mult))


def _ann_roots(mult: Mapping[Fraction, int]) -> list[Fraction]:
    return [lam for lam in sorted(mult) for _ in range(mult[lam])]


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    """Outcome of a zero / Whittaker test with its epistemic status.

    ``kind`` is one of ``exact_true``, ``exact_false``, ``windowed_true``,
    ``windowed_false``.  ``witness`` is the falsifying point (an integer for
    functionals, an ``(family, k)`` pair for Whittaker tests).
    """

    kind: str
    window: tuple[int, int] | None = None
    witness: Any = None
    detail: str = ""

    EXACT_TRUE = "exact_true"
    EXACT_FALSE = "exact_false"
    WINDOWED_TRUE = "windowed_true"
    WINDOWED_FALSE = "windowed_false"

    @property
    def holds(self) -> bool:
        return self.kind in (self.EXACT_TRUE, self.WINDOWED_TRUE)

    @property
    def exact(self) -> bool:
        return self.kind in (self.EXACT_TRUE, self.EXACT_FALSE)

    def to_json(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind}
        if self.window is not None:
            out["window"] = list(self.window)
        if self.witness is not None:
            out["witness"] = list(self.witness) if isinstance(self.witness, tuple) else self.witness
        if self.detail:
            out["detail"] = self.detail
        return out


def _window_points(window: tuple[int, int]):
    lo, hi = window
    if lo > hi:
        raise ValueError(f"empty window {window}")
    # scan outward from the point nearest 0 for small witnesses
    centre = min(max(0, lo), hi)
    yield centre
    step = 1
    while centre - step >= lo or centre + step <= hi:
        if centre + step <= hi:
            yield centre + step
        if centre - step >= lo:
            yield centre - step
        step += 1


def is_zero(phi: Functional, window: tuple[int, int] = DEFAULT_WINDOW) -> Verdict:
    """Decide ``phi == 0``.

    Exact for exp-polynomials (the functions ``n^k lam^n`` are linearly
    independent, so only the empty canonical form is zero).  Anything with an
    oracle term is evaluated on ``window``.
    """
    if phi.is_exp_poly():
        if phi.is_structurally_zero():
            return Verdict(Verdict.EXACT_TRUE)
        order = sum(len(c) for c in phi.components.values())
        for n in _window_points((-order, order)):
            if phi.evaluate(n) != 0:
                return Verdict(Verdict.EXACT_FALSE, witness=n)
        raise AssertionError("nonzero exp-polynomial vanished on order+1 consecutive points")
    for n in _window_points(window):
        if phi.evaluate(n) != 0:
            return Verdict(Verdict.WINDOWED_FALSE, window=tuple(window), witness=n)
    return Verdict(Verdict.WINDOWED_TRUE, window=tuple(window))


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Classification:
    """``kind`` is ``in_E``, ``not_in_E_declared`` or ``undecided``."""

    kind: str
    annihilator: LaurentPoly | None = None
    evidence: dict = field(default_factory=dict)

    IN_E = "in_E"
    NOT_IN_E_DECLARED = "not_in_E_declared"
    UNDECIDED = "undecided"

    @property
    def windowed(self) -> bool:
        return self.kind != self.IN_E or bool(self.evidence.get("windowed"))

    def to_json(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind}
        if self.annihilator is not None:
            out["annihilator"] = self.annihilator.to_json()
            out["annihilator_str"] = str(self.annihilator)
        if self.evidence:
            out["evidence"] = self.evidence
        return out


def _window_annihilators(phi: Functional, degree_bound: int, window: tuple[int, int]) -> list[dict[int, Fraction]]:
    """Nullspace of ``h -> (h.phi)(n)``, ``n`` in window, ``deg h <= degree_bound``."""
    lo, hi = window
    ech = RowEchelon()
    for n in range(lo, hi + 1):
        ech.add_row({j: phi.evaluate(n + j) for j in range(degree_bound + 1)})
    return ech.nullspace(degree_bound + 1)


def classify(
    phi: Functional,
    degree_bound: int = DEFAULT_DEGREE_BOUND,
    window: tuple[int, int] = DEFAULT_WINDOW,
) -> Classification:
    """Membership of ``phi`` in the exp-polynomial space.

    Exp-polynomials are classified exactly together with their annihilator
    generator.  For oracle-bearing functionals a nonzero ``h`` of degree at
    most ``degree_bound`` with ``h.phi`` vanishing on ``window`` is searched
    by exact nullspace; finding none while the declared class says
    "not in E" yields ``not_in_E_declared`` with the failed search as
    evidence.  Any candidate found makes the result ``undecided``, unless it
    also annihilates on a window four times wider while the class is
    declared "not in E", which is treated as a broken catalog entry.
    """
    if degree_bound < 1:
        raise ValueError("degree_bound must be >= 1")
    lo, hi = window
    if hi - lo + 1 < 2 * degree_bound + 2:
        raise ValueError(f"window {window} too short for degree bound {degree_bound}")
    if phi.is_exp_poly():
        return Classification(Classification.IN_E, annihilator_generator(phi), {"method": "canonical exp-polynomial"})
    declared = phi.declared_in_E()
    kernel = _window_annihilators(phi, degree_bound, window)
    evidence = {
        "method": "window nullspace",
        "degree_bound": degree_bound,
        "window": [lo, hi],
        "system": f"{hi - lo + 1}x{degree_bound + 1}",
        "nullity": len(kernel),
        "declared_in_E": declared,
        "windowed": True,
    }
    if not kernel:
        if declared is False:
            return Classification(Classification.NOT_IN_E_DECLARED, None, evidence)
        return Classification(Classification.UNDECIDED, None, evidence)
    h = LaurentPoly(kernel[0])
    evidence["candidate"] = h.to_json()
    if declared is False:
        wide = (lo - 2 * (hi - lo), hi + 2 * (hi - lo))
        shifted = phi.shift(h)
        if all(shifted.evaluate(n) == 0 for n in range(wide[0], wide[1] + 1)):
            raise ClassificationError(
                f"functional {phi} is declared outside E but {h} annihilates it on {wide}"
            )
    return Classification(Classification.UNDECIDED, None, evidence)
