from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from samplers import dense_rank
from whitkit.exact_arith import LaurentPoly, T
from whitkit.functionals import (
    ORACLE_CATALOG,
    Classification,
    ClassificationError,
    Functional,
    OracleRule,
    Verdict,
    annihilator_generator,
    annihilator_lcm,
    classify,
    is_zero,
    shift,
)


def lin():
    return Functional.exp_poly({1: [0, 1]})


def mixed():
    return Functional.exp_poly({2: [0, 1], 3: [1]})


HALF_SQUARE = Functional.oracle("half_square_power", 2)


def test_evaluate_examples():
    assert Functional.exp_poly({2: [0, 1]}).evaluate(3) == 24
    assert Functional.zero().evaluate(-7) == 0
    assert mixed().evaluate(2) == 17
    assert HALF_SQUARE.evaluate(3) == 8
    assert HALF_SQUARE.evaluate(-2) == 8
    assert Functional.oracle("abs_factorial", 2).evaluate(-3) == Fraction(6, 8)
    assert Functional.oracle("alt_factorial", 1).evaluate(3) == -6


def test_oracle_catalog_validation():
    with pytest.raises(ValueError):
        OracleRule("half_square_power", Fraction(3, 2))
    with pytest.raises(ValueError):
        OracleRule("abs_factorial", Fraction(0))
    with pytest.raises(ValueError):
        OracleRule("no_such_rule")
    assert set(ORACLE_CATALOG) == {"half_square_power", "abs_factorial", "alt_factorial"}


def test_canonical_form():
    f = Functional({2: [1, 0, 0], 3: [0]})
    assert f == Functional.geometric(2)
    assert Functional({2: [1]}) + Functional({2: [-1]}) == Functional.zero()
    assert Functional.zero().is_structurally_zero()


def test_shift_identity_and_annihilation():
    phi = mixed()
    assert shift(LaurentPoly.constant(1), phi) == phi
    assert shift(T - 2, Functional.geometric(2)) == Functional.zero()


def test_shift_closed_form_matches_pointwise():
    phi = Functional.exp_poly({3: [0, 1]})
    out = shift(T, phi)
    assert out == Functional.exp_poly({3: [3, 3]})
    for n in range(-10, 11):
        assert out.evaluate(n) == phi.evaluate(n + 1)


def test_annihilator_examples():
    assert annihilator_generator(Functional.geometric(2)) == T - 2
    assert annihilator_generator(lin()) == (T - 1) ** 2
    assert annihilator_generator(Functional.zero()) == LaurentPoly.constant(1)
    c = annihilator_generator(mixed())
    assert c == (T - 2) ** 2 * (T - 3)
    shifted = shift(c, mixed())
    assert all(shifted.evaluate(n) == 0 for n in range(-20, 21))
    # no polynomial of degree 2 annihilates on [-20, 20]: the 41x3 system has full rank
    rows = [[mixed().evaluate(n + j) for j in range(3)] for n in range(-20, 21)]
    assert dense_rank(rows) == 3


def test_annihilator_lcm():
    assert annihilator_lcm(Functional.geometric(2), mixed()) == (T - 2) ** 2 * (T - 3)
    with pytest.raises(ValueError):
        annihilator_lcm(HALF_SQUARE)


def test_is_zero_examples():
    assert is_zero(shift(T - 2, Functional.geometric(2))).kind == Verdict.EXACT_TRUE
    v = is_zero(lin())
    assert v.kind == Verdict.EXACT_FALSE and lin().evaluate(v.witness) != 0
    w = is_zero(HALF_SQUARE, (-8, 8))
    assert w.kind == Verdict.WINDOWED_FALSE
    assert -8 <= w.witness <= 8 and HALF_SQUARE.evaluate(w.witness) != 0
    zero_oracle = HALF_SQUARE - HALF_SQUARE
    assert is_zero(zero_oracle).kind == Verdict.EXACT_TRUE


def test_classify_examples():
    c = classify(Functional.exp_poly({2: [0, 1]}))
    assert c.kind == Classification.IN_E and c.annihilator == (T - 2) ** 2
    assert classify(Functional.zero()).annihilator == LaurentPoly.constant(1)
    d = classify(HALF_SQUARE, 4, (-10, 10))
    assert d.kind == Classification.NOT_IN_E_DECLARED
    assert d.evidence["system"] == "21x5" and d.evidence["nullity"] == 0


def test_classify_window_must_be_long_enough():
    with pytest.raises(ValueError):
        classify(HALF_SQUARE, 4, (-4, 4))
    with pytest.raises(ValueError):
        classify(HALF_SQUARE, 0, (-4, 4))


def test_declared_in_E_oracle_is_undecided():
    in_e = Functional.oracle("abs_factorial", 1, declared_in_E=True)
    assert classify(in_e).kind == Classification.UNDECIDED


def test_broken_catalog_entry_is_a_hard_error(monkeypatch):
    # a "non-member" that is secretly geometric must be caught
    monkeypatch.setitem(ORACLE_CATALOG, "fake_geometric", lambda base, n: base**n)
    bad = Functional(oracles={OracleRule("fake_geometric", Fraction(2), False): LaurentPoly.constant(1)})
    with pytest.raises(ClassificationError):
        classify(bad)


def test_cancelling_oracle_terms_are_structurally_exp():
    r = OracleRule("half_square_power", Fraction(2), False)
    f = Functional({1: [1]}, {r: LaurentPoly.constant(1)}) - Functional(oracles={r: LaurentPoly.constant(1)})
    assert f.is_exp_poly()
    assert classify(f).kind == Classification.IN_E


def test_json_round_trip():
    for f in (mixed(), HALF_SQUARE, HALF_SQUARE.shift(T + 1) + lin()):
        assert Functional.from_json(f.to_json()) == f
    assert HALF_SQUARE.to_json() == {"oracle": {"rule": "half_square_power", "base": "2", "declared_in_E": False}}
    assert mixed().to_json() == {
        "exp_poly": [{"lambda": "2", "coeffs": ["0", "1"]}, {"lambda": "3", "coeffs": ["1"]}]
    }
    with pytest.raises(ValueError):
        Functional.from_json({"exp_poly": [{"lambda": "0", "coeffs": ["1"]}]})
    with pytest.raises(ValueError):
        Functional.from_json({"weird": 1})


# --- properties -------------------------------------------------------------

small = st.fractions(min_value=-5, max_value=5, max_denominator=3)
bases = st.sampled_from([Fraction(1), Fraction(-1), Fraction(2), Fraction(3), Fraction(1, 2), Fraction(-2)])
exp_polys = st.dictionaries(bases, st.lists(small, min_size=1, max_size=3), max_size=3).map(Functional)
oracles = st.sampled_from(
    [
        Functional.oracle("half_square_power", 2),
        Functional.oracle("half_square_power", 3),
        Functional.oracle("abs_factorial", 2),
        Functional.oracle("alt_factorial", Fraction(1, 2)),
    ]
)
functionals = st.one_of(exp_polys, oracles, st.tuples(exp_polys, oracles).map(lambda p: p[0] + p[1]))
polys = st.dictionaries(st.integers(-3, 3), small, max_size=4).map(LaurentPoly)


@settings(max_examples=200)
@given(polys, polys, functionals)
def test_shift_composition(f, g, phi):
    lhs = shift(f, shift(g, phi))
    rhs = shift(f * g, phi)
    for n in range(-6, 7):
        assert lhs.evaluate(n) == rhs.evaluate(n)


@given(polys, functionals)
def test_shift_is_pointwise(f, phi):
    out = shift(f, phi)
    for n in range(-5, 6):
        assert out.evaluate(n) == sum((c * phi.evaluate(n + m) for m, c in f), Fraction(0))


@settings(max_examples=60)
@given(exp_polys)
def test_annihilator_minimality(phi):
    c = annihilator_generator(phi)
    assert is_zero(shift(c, phi)).kind == Verdict.EXACT_TRUE
    D = c.max_exp
    if D == 0:
        return
    rows = [[phi.evaluate(n + j) for j in range(D)] for n in range(-3 * D - 3, 3 * D + 4)]
    assert dense_rank(rows) == D


@settings(max_examples=40)
@given(oracles, polys.filter(lambda p: not p.is_zero() and p.span() <= 3))
def test_shift_of_non_member_stays_outside(phi, f):
    c = classify(shift(f, phi), 4, (-12, 12))
    assert c.kind == Classification.NOT_IN_E_DECLARED


@settings(max_examples=60)
@given(exp_polys)
def test_recurrence_propagation(phi):
    # vanishing on deg(c)+1 consecutive points with nonzero end coefficients
    # forces vanishing everywhere
    c = annihilator_generator(phi)
    s = shift(c, phi)
    D = c.span()
    assert all(s.evaluate(n) == 0 for n in range(D + 1))
    assert all(s.evaluate(n) == 0 for n in range(-30, 31))
