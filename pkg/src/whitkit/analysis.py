"""Simplicity verdicts, constructive Whittaker vectors and bounded search.

Criteria (the acting functionals that decide simplicity):

* loop Witt / loop Virasoro with ``L_{>=N}``: simple iff ``psi_{2N-1}`` or
  ``psi_{2N}`` is not an exp-polynomial.  ``phi_c`` plays no role.
* loop Witt with ``d_{-1} (x) A``: simple iff ``phi`` is not an
  exp-polynomial.
* sl2-hat with ``e (x) A + C khat``: the constructive witness
  ``sum c_j (h (x) t^j) w`` is a Whittaker vector whenever ``phi`` is an
  exp-polynomial, so the verdict follows the "not in E" reading.  The
  published statement of this criterion has the opposite direction; the
  report carries an annotation saying so.

The "simple" direction cannot be checked on an infinite-dimensional module,
so every Simple verdict is corroborated by a bounded search that must find
only the cyclic vector.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

from .exact_arith import LaurentPoly
from .functionals import (
    DEFAULT_DEGREE_BOUND,
    DEFAULT_WINDOW,
    Classification,
    Functional,
    Verdict,
    annihilator_lcm,
    classify,
    is_zero,
)
from .lie_algebras import SL2, VIRASORO, Generator, LieElement
from .linalg import RowEchelon
from .pbw_engine import (
    E_PAIR,
    GEQ,
    MINUS,
    ModuleElement,
    PBWMonomial,
    WhittakerSetup,
    acting_families,
    act,
    engine_for,
    is_whittaker,
)

__all__ = [
    "SL2_ANNOTATION",
    "PreconditionError",
    "CorroborationFailure",
    "SearchParams",
    "SearchResult",
    "SimplicityVerdict",
    "validate_setup",
    "reducibility_witness",
    "product_whittaker_vector",
    "free_factors",
    "search_whittaker",
    "structural_violations",
    "simplicity_verdict",
]

SL2_ANNOTATION = "∉ ℰ (reading consistent with Theorem 4.1; printed statement conflicts)"
VIR_PHI_C_NOTE = "phi_c (the value on c (x) t^k) does not enter the simplicity criterion"


class PreconditionError(ValueError):
    pass


class CorroborationFailure(RuntimeError):
    """A bounded search found a nontrivial Whittaker vector for a Simple verdict."""


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def validate_setup(setup: WhittakerSetup) -> list[str]:
    """Problems that make the setup not a Whittaker function for its pair.

    Index ranges are enforced when the setup is built; what remains are
    malformed functional payloads.
    """
    out = []
    for name, f in setup.sources().items():
        if not isinstance(f, Functional):
            out.append(f"{name}: not a functional")
            continue
        for lam in f.components:
            if lam == 0:
                out.append(f"{name}: exp-polynomial base 0 is not allowed")
        for rule, p in f.oracle_terms:
            try:
                rule.value(0)
            except (ValueError, ArithmeticError) as exc:
                out.append(f"{name}: oracle {rule.rule} cannot be evaluated ({exc})")
    return out


# ---------------------------------------------------------------------------
# constructive Whittaker vectors
# ---------------------------------------------------------------------------


def _criterion_functionals(setup: WhittakerSetup) -> list[tuple[str, Functional]]:
    return [(name, setup.source(name)) for name in setup.criterion_sources()]


def _witness_generator(setup: WhittakerSetup, k: int) -> Generator:
    if setup.pair == GEQ:
        return Generator(setup.algebra, "d", setup.N - 1, k)
    if setup.pair == MINUS:
        return Generator(setup.algebra, "d", 0, k)
    return Generator(SL2, "h", 0, k)


def _witness_element(setup: WhittakerSetup, f: LaurentPoly) -> LieElement:
    return LieElement(setup.algebra, {_witness_generator(setup, e): c for e, c in f})


def required_annihilator(setup: WhittakerSetup) -> LaurentPoly:
    """Generator of the intersection of the criterion functionals' annihilators."""
    fs = _criterion_functionals(setup)
    bad = [name for name, f in fs if not f.is_exp_poly()]
    if bad:
        raise PreconditionError(f"criterion functionals {bad} are not exp-polynomials")
    return annihilator_lcm(*(f for _, f in fs))


def reducibility_witness(setup: WhittakerSetup) -> ModuleElement:
    """``sum_j c_j x_j v`` for the annihilator generator ``c(t) = sum c_j t^j``.

    ``x_j`` is ``d_{N-1} (x) t^j`` (geq pairs), ``d_0 (x) t^j`` (minus pair)
    or ``h (x) t^j`` (sl2).  The result is verified to be Whittaker.
    """
    c = required_annihilator(setup)
    u = act(setup, _witness_element(setup, c), ModuleElement.vacuum(setup.algebra))
    v = is_whittaker(setup, u)
    if v.kind != Verdict.EXACT_TRUE or u.lth() < 1:
        raise AssertionError(f"constructed witness {u} failed verification: {v}")
    return u


def product_whittaker_vector(setup: WhittakerSetup, fs: Sequence[LaurentPoly]) -> ModuleElement:
    """``prod_j x(f_j) v`` for annihilating Laurent polynomials ``f_j``."""
    crit = _criterion_functionals(setup)
    for i, f in enumerate(fs):
        for name, phi in crit:
            shifted = phi.shift(f)
            z = is_zero(shifted)
            if not z.holds:
                raise PreconditionError(
                    f"f_{i + 1} = {f} does not annihilate {name}: shifted functional {shifted} is nonzero"
                )
    u = ModuleElement.vacuum(setup.algebra)
    for f in reversed(list(fs)):
        u = act(setup, _witness_element(setup, f), u)
    v = is_whittaker(setup, u)
    if not v.holds:
        raise AssertionError(f"product vector is not Whittaker: {v}")
    return u


# ---------------------------------------------------------------------------
# bounded search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchParams:
    lth_max: int = 3
    exp_window: tuple[int, int] = (-4, 4)
    deg_window: tuple[int, int] | None = None
    class_degree: int = DEFAULT_DEGREE_BOUND
    class_window: tuple[int, int] = DEFAULT_WINDOW

    def resolved_deg_window(self, setup: WhittakerSetup) -> tuple[int, int] | None:
        if self.deg_window is not None:
            return tuple(self.deg_window)
        if setup.pair == MINUS:
            return (0, 3)
        if setup.algebra == VIRASORO:
            return (setup.N - 3, setup.N - 1)
        return None

    def to_json(self, setup: WhittakerSetup | None = None) -> dict:
        out: dict[str, Any] = {
            "lth_max": self.lth_max,
            "exp_window": list(self.exp_window),
            "class_degree": self.class_degree,
            "class_window": list(self.class_window),
        }
        dw = self.resolved_deg_window(setup) if setup is not None else self.deg_window
        if dw is not None:
            out["deg_window"] = list(dw)
        return out


def free_factors(setup: WhittakerSetup, exp_window: tuple[int, int], deg_window: tuple[int, int] | None = None) -> list[tuple[int, int]]:
    """Free-part factors ``(tag, k)`` inside the truncation, ascending."""
    lo, hi = exp_window
    if lo > hi:
        raise ValueError(f"empty exponent window {exp_window}")
    ks = range(lo, hi + 1)
    if setup.pair == E_PAIR:
        tags = [0, 1]
    elif setup.pair == GEQ and setup.algebra != VIRASORO:
        tags = list(range(-1, setup.N))
        if deg_window is not None:
            tags = [t for t in tags if deg_window[0] <= t <= deg_window[1]]
    else:
        if deg_window is None:
            raise ValueError(f"{setup.variant} needs a degree window")
        dlo, dhi = deg_window
        if setup.pair == MINUS:
            dlo = max(dlo, 0)
        else:
            dhi = min(dhi, setup.N - 1)
        tags = list(range(dlo, dhi + 1))
    return [(t, k) for t in tags for k in ks]


def _enumerate_monomials(factors: list[tuple[int, int]], lth_max: int) -> list[PBWMonomial]:
    out = [PBWMonomial()]
    for r in range(1, lth_max + 1):
        for combo in itertools.combinations_with_replacement(factors, r):
            out.append(PBWMonomial.from_factors(combo))
    out.sort(key=PBWMonomial.sort_key)
    return out


@dataclass
class SearchResult:
    basis: list[ModuleElement]
    mode: str
    n_columns: int
    n_rows: int
    rank: int
    params: dict = field(default_factory=dict)

    @property
    def windowed(self) -> bool:
        return self.mode != "exact"

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def only_cyclic(self) -> bool:
        return len(self.basis) == 1 and self.basis[0].is_multiple_of_vacuum()

    def to_json(self) -> dict:
        return {
            "dimension": self.dimension,
            "mode": self.mode,
            "windowed": self.windowed,
            "columns": self.n_columns,
            "equations": self.n_rows,
            "rank": self.rank,
            "params": self.params,
            "basis": [u.to_json() for u in self.basis],
            "basis_str": [str(u) for u in self.basis],
        }


def _row_mode(setup: WhittakerSetup) -> str:
    rules = set()
    for f in setup.sources().values():
        rules.update(r for r, _ in f.oracle_terms)
    if not rules:
        return "exact"
    if len(rules) == 1 and not next(iter(rules)).declared_in_E:
        return "declared"
    return "window"


def _expand_functional(f: Functional, mode: str, window: tuple[int, int]) -> list[tuple[tuple, Fraction]]:
    """Linear equations whose vanishing is equivalent to ``f == 0``.

    Exact mode: one per exp-polynomial component.  Declared mode: also one
    per Laurent coefficient of each oracle term; valid because a nonzero
    shift of a non-member never lies in E.  Window mode: values on the window.
    """
    if mode == "window":
        return [(("pt", n), f.evaluate(n)) for n in range(window[0], window[1] + 1)]
    out = []
    for lam, coeffs in f.components.items():
        for j, c in enumerate(coeffs):
            if c:
                out.append((("exp", lam, j), c))
    for rule, p in f.oracle_terms:
        for e, c in p:
            out.append((("orc", rule, e), c))
    return out


class _Expander:
    def __init__(self, setup: WhittakerSetup, mode: str, window: tuple[int, int]):
        self.setup = setup
        self.mode = mode
        self.window = window
        self._cache: dict = {}

    def __call__(self, tag) -> list[tuple[tuple, Fraction]]:
        hit = self._cache.get(tag)
        if hit is None:
            if tag is None:
                f = Functional.constant(1)
            else:
                src, off = tag
                f = self.setup.source(src).shift(off)
            # window mode evaluates every coefficient so equations stay comparable
            if self.mode == "window":
                hit = [(("pt", n), f.evaluate(n)) for n in range(self.window[0], self.window[1] + 1)]
            else:
                hit = _expand_functional(f, self.mode, self.window)
            self._cache[tag] = hit
        return hit


def search_whittaker(
    setup: WhittakerSetup,
    lth_max: int = 3,
    exp_window: tuple[int, int] = (-4, 4),
    deg_window: tuple[int, int] | None = None,
    class_window: tuple[int, int] = DEFAULT_WINDOW,
) -> SearchResult:
    """Basis of the Whittaker vectors inside a finite truncation.

    Columns are the monomials with ``lth <= lth_max`` built from free
    factors in the windows, sorted ascending by the principal order (the
    cyclic vector first).  Every basis vector has a distinct leading
    monomial with coefficient 1 and other support only on smaller pivot
    monomials, so the output is reproducible.
    """
    if lth_max < 0:
        raise ValueError("lth_max must be >= 0")
    if deg_window is None:
        deg_window = SearchParams().resolved_deg_window(setup)
    factors = free_factors(setup, exp_window, deg_window)
    cols = _enumerate_monomials(factors, lth_max)
    if not cols:
        raise ValueError("empty truncation")
    mode = _row_mode(setup)
    expand = _Expander(setup, mode, class_window)
    eng = engine_for(setup)
    rows: dict[tuple, dict[int, Fraction]] = {}
    probe = ModuleElement(setup.algebra, {m: 1 for m in cols})
    for fam in acting_families(setup, probe):
        for j, m in enumerate(cols):
            for (m2, tag), c in eng.residual_mono(fam, tuple(m)).items():
                for suffix, val in expand(tag):
                    key = (fam, m2, suffix)
                    row = rows.get(key)
                    if row is None:
                        row = rows[key] = {}
                    row[j] = row.get(j, Fraction(0)) + c * val
    if setup.pair == E_PAIR and lth_max > 0:
        lo, hi = exp_window
        for k in range(-lth_max * hi, -lth_max * lo + 1):
            g = Generator(SL2, "e", 0, k)
            val = setup.phi.evaluate(k)
            for j, m in enumerate(cols):
                r = dict(eng.act_mono(g, tuple(m)))
                r[(tuple(m), None)] = r.get((tuple(m), None), Fraction(0)) - val
                for (m2, _), c in r.items():
                    if c:
                        rows.setdefault((("e", k), m2), {})[j] = c
    ech = RowEchelon()
    for key in sorted(rows, key=_row_sort_key):
        ech.add_row(rows[key])
    basis = []
    for vec in ech.nullspace(len(cols)):
        basis.append(ModuleElement(setup.algebra, {cols[j]: c for j, c in vec.items()}))
    basis.sort(key=lambda u: u.leading()[0].sort_key())
    params = {"lth_max": lth_max, "exp_window": list(exp_window)}
    if deg_window is not None:
        params["deg_window"] = list(deg_window)
    if mode == "window":
        params["class_window"] = list(class_window)
    return SearchResult(basis, mode, len(cols), len(rows), ech.rank, params)


def _row_sort_key(key):
    return repr(key)


def structural_violations(setup: WhittakerSetup, basis: Iterable[ModuleElement]) -> list[str]:
    """Shape constraints every nontrivial Whittaker vector is known to satisfy.

    geq Witt: no ``d_{-1}`` factors; geq Virasoro: no negative-degree
    factors; minus pair: only degree-0 factors; sl2: no ``f`` factors.
    """
    out = []
    for u in basis:
        if u.is_multiple_of_vacuum():
            continue
        for m in u.monomials():
            tags = {t for t, _ in m}
            if setup.pair == E_PAIR:
                bad = 1 in tags
            elif setup.pair == MINUS:
                bad = bool(m) and tags != {0}
            elif setup.algebra == VIRASORO:
                bad = any(t < 0 for t in tags)
            else:
                bad = -1 in tags
            if bad:
                out.append(f"{setup.variant}: vector {u} has forbidden monomial {m!r}")
                break
    return out


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------


@dataclass
class SimplicityVerdict:
    status: str
    classification: dict
    witness: ModuleElement | None = None
    witness_check: Verdict | None = None
    corroboration: SearchResult | None = None
    epistemic: str = "exact"
    basis: str = ""
    notes: list[str] = field(default_factory=list)

    SIMPLE = "simple"
    REDUCIBLE = "reducible"
    UNDECIDED = "undecided"

    def headline(self) -> str:
        if self.status == self.SIMPLE:
            return "SIMPLE (windowed)" if self.epistemic == "windowed" else "SIMPLE"
        return self.status.upper()

    def to_json(self) -> dict:
        out: dict[str, Any] = {"status": self.status, "epistemic": self.epistemic}
        out["witness"] = self.witness.to_json() if self.witness is not None else None
        if self.witness is not None:
            out["witness_str"] = str(self.witness)
            out["witness_check"] = self.witness_check.to_json()
        out["classification"] = self.classification
        out["basis"] = self.basis
        out["corroboration"] = self.corroboration.to_json() if self.corroboration is not None else None
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def _criterion_text(setup: WhittakerSetup) -> str:
    if setup.pair == GEQ:
        a, b = 2 * setup.N - 1, 2 * setup.N
        return f"simple iff psi_{a} or psi_{b} is not an exp-polynomial"
    if setup.pair == MINUS:
        return "simple iff phi is not an exp-polynomial"
    return f"simple iff phi {SL2_ANNOTATION}"


def simplicity_verdict(setup: WhittakerSetup, params: SearchParams | None = None) -> SimplicityVerdict:
    """Classify the criterion functionals and decide simplicity.

    Reducible comes with a verified constructive witness; Simple with a
    bounded search that must return only the cyclic vector (otherwise
    :class:`CorroborationFailure`); anything else is Undecided.
    """
    params = params or SearchParams()
    problems = validate_setup(setup)
    if problems:
        raise PreconditionError("; ".join(problems))
    classes: dict[str, Classification] = {
        name: classify(f, params.class_degree, params.class_window) for name, f in _criterion_functionals(setup)
    }
    cjson = {name: c.to_json() for name, c in classes.items()}
    notes = []
    if setup.algebra == VIRASORO:
        notes.append(VIR_PHI_C_NOTE)
    if setup.pair == E_PAIR:
        notes.append(f"criterion direction: {SL2_ANNOTATION}")
    basis = _criterion_text(setup)
    kinds = [c.kind for c in classes.values()]
    if all(k == Classification.IN_E for k in kinds):
        u = reducibility_witness(setup)
        check = is_whittaker(setup, u)
        return SimplicityVerdict(
            SimplicityVerdict.REDUCIBLE, cjson, witness=u, witness_check=check,
            epistemic="exact", basis=basis + "; proper submodule generated by the witness", notes=notes,
        )
    if any(k == Classification.NOT_IN_E_DECLARED for k in kinds):
        res = search_whittaker(
            setup, params.lth_max, params.exp_window, params.resolved_deg_window(setup), params.class_window
        )
        if not res.only_cyclic():
            raise CorroborationFailure(
                f"bounded search found {res.dimension} independent Whittaker vectors: {[str(u) for u in res.basis]}"
            )
        return SimplicityVerdict(
            SimplicityVerdict.SIMPLE, cjson, corroboration=res, epistemic="windowed",
            basis=basis + "; proved by the cited criterion, corroborated by bounded search", notes=notes,
        )
    return SimplicityVerdict(SimplicityVerdict.UNDECIDED, cjson, epistemic="windowed", basis=basis, notes=notes)
