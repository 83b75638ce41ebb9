"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

All equalities are exact (rational arithmetic, zero tolerance). Random
instances come from fixed seeds so every run checks the same cases.
"""

import random
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

from samplers import GEO2, HALF_SQUARE, LIN, MIXED, dense_rank, random_element, random_lie, random_scalar, standard_setups
from whitkit.analysis import (
    SL2_ANNOTATION,
    SearchParams,
    SimplicityVerdict,
    product_whittaker_vector,
    reducibility_witness,
    required_annihilator,
    search_whittaker,
    simplicity_verdict,
    structural_violations,
)
from whitkit.cli import InputError, load_scenario
from whitkit.exact_arith import LaurentPoly, T
from whitkit.functionals import ORACLE_CATALOG, Classification, Functional, Verdict, annihilator_generator, classify, is_zero, shift
from whitkit.lie_algebras import SL2, VIRASORO, WITT, Generator, LieElement, bracket, involution
from whitkit.pbw_engine import GEQ, MINUS, ModuleElement, PBWMonomial, WhittakerSetup, act, is_whittaker

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def report(capsys, n, failures, summary):
    status = "PASS" if not failures else "FAIL"
    with capsys.disabled():
        print(f"\n[criterion {n}] {status}: {summary}")
        for f in failures[:5]:
            print(f"    {f}")
    assert not failures, failures[:5]


def d(n, k):
    return Generator(WITT, "d", n, k)


def element(alg, factors):
    return ModuleElement(alg, {PBWMonomial.from_factors(factors): 1})


# --- 1. bracket laws -----------------------------------------------------------


def _generator(rng, alg):
    k = rng.randint(-5, 5)
    if alg == WITT:
        return Generator(WITT, "d", rng.randint(-1, 5), k)
    if alg == VIRASORO:
        if rng.random() < 0.2:
            return Generator(VIRASORO, "c", 0, k)
        return Generator(VIRASORO, "d", rng.randint(-5, 5), k)
    kind = rng.choice("efhK")
    return Generator(SL2, kind, 0, 0 if kind == "K" else k)


def _lie(rng, alg):
    return LieElement(alg, [(_generator(rng, alg), random_scalar(rng) or 1) for _ in range(rng.randint(1, 3))])


def test_criterion_1_bracket_laws(capsys):
    rng = random.Random(1)
    failures = []
    triples = 500
    for alg in (WITT, VIRASORO, SL2):
        for _ in range(triples):
            x, y, z = _lie(rng, alg), _lie(rng, alg), _lie(rng, alg)
            if bracket(alg, x, y) != -bracket(alg, y, x):
                failures.append(f"{alg} antisymmetry: {x}, {y}")
            jac = bracket(alg, x, bracket(alg, y, z)) + bracket(alg, y, bracket(alg, z, x)) + bracket(alg, z, bracket(alg, x, y))
            if not jac.is_zero():
                failures.append(f"{alg} Jacobi: {x}, {y}, {z}")
    pairs = 200
    for _ in range(pairs):
        x, y = _lie(rng, VIRASORO), _lie(rng, VIRASORO)
        if involution(bracket(VIRASORO, x, y)) != bracket(VIRASORO, involution(x), involution(y)):
            failures.append(f"involution: {x}, {y}")
    report(capsys, 1, failures, f"antisymmetry + Jacobi on {triples} triples x 3 algebras; involution on {pairs} pairs")


# --- 2. module axiom ------------------------------------------------------------


def test_criterion_2_module_axiom(capsys):
    rng = random.Random(2)
    failures = []
    setups = standard_setups()
    per_variant = 300
    for name, s in sorted(setups.items()):
        for _ in range(per_variant):
            x, y = random_lie(rng, s.algebra), random_lie(rng, s.algebra)
            u = random_element(rng, s, lth_max=3)
            lhs = act(s, x, act(s, y, u)) - act(s, y, act(s, x, u))
            if lhs != act(s, bracket(s.algebra, x, y), u):
                failures.append(f"{name}: x={x} y={y} u={u}")
    report(capsys, 2, failures, f"x(yu) - y(xu) = [x,y]u on {per_variant} triples for each of {sorted(setups)}")


# --- 3. acting degrees never lengthen --------------------------------------------


def _geq_setup(N):
    return WhittakerSetup.witt_geq(N, {n: [GEO2, LIN, MIXED][n % 3] for n in range(N, 2 * N + 1)})


def _geq_monomial(rng, N, lth_max=4, need_minus_one=False):
    r = rng.randint(1 if need_minus_one else 0, lth_max)
    factors = [(rng.randint(-1, N - 1), rng.randint(-3, 3)) for _ in range(r)]
    if need_minus_one:
        factors[0] = (-1, factors[0][1])
    return PBWMonomial.from_factors(factors)


def test_criterion_3_length_bound(capsys):
    rng = random.Random(3)
    failures = []
    cases = 210
    for i in range(cases):
        N = 1 + i % 3
        s = _geq_setup(N)
        u = element(WITT, _geq_monomial(rng, N))
        if rng.random() < 0.5:
            u = u + random_element(rng, s)
        g = d(rng.randint(N, 2 * N + 3), rng.randint(-4, 4))
        out = act(s, g, u)
        if any(len(m) > u.lth() for m in out.monomials()):
            failures.append(f"N={N} {g} on {u}")
    report(capsys, 3, failures, f"lth(D(m,k)u) <= lth(u) for m >= N on {cases} cases, N in 1..3")


# --- 4. coefficient laws ---------------------------------------------------------


def _replace(mono, old, new):
    factors = list(mono)
    factors.remove(old)
    return PBWMonomial.from_factors(factors + [new])


def test_criterion_4_coefficient_laws(capsys):
    rng = random.Random(4)
    failures = []
    geq_cases = minus_cases = 0
    # replacing a D(-1, a) factor by D(N-1, k+a) has coefficient -l(N+1)
    for i in range(60):
        N = 1 + i % 3
        s = _geq_setup(N)
        mono = _geq_monomial(rng, N, need_minus_one=True)
        k = rng.randint(-4, 4)
        u = element(WITT, mono)
        out = act(s, d(N, k), u) - u * s.psi_of(N).evaluate(k)
        for tag, a, mult in mono.blocks():
            if tag != -1:
                continue
            target = _replace(mono, (-1, a), (N - 1, k + a))
            geq_cases += 1
            if out.coeff(target) != -mult * (N + 1):
                failures.append(f"GeqN N={N} k={k} u={u}: {out.coeff(target)} != {-mult * (N + 1)}")
    # leading coefficient of (D(-1,k) - phi(t^k)) u is (r+1) l for minimal degree r > 0
    for i in range(60):
        s = WhittakerSetup.witt_minus([GEO2, LIN, MIXED][i % 3])
        r = rng.randint(1, 4)
        factors = [(rng.randint(1, 4), rng.randint(-3, 3)) for _ in range(rng.randint(0, 3))]
        factors += [(r, rng.randint(-3, 3)) for _ in range(rng.randint(1, 2))]
        mono = PBWMonomial.from_factors(factors)
        r_min = min(t for t, _ in mono)
        k_min = min(e for t, e in mono if t == r_min)
        mult = sum(1 for f in mono if f == (r_min, k_min))
        k = rng.randint(-4, 4)
        u = element(WITT, mono)
        out = act(s, d(-1, k), u) - u * s.phi.evaluate(k)
        expect = (_replace(mono, (r_min, k_min), (r_min - 1, k + k_min)), (r_min + 1) * mult)
        minus_cases += 1
        if out.leading() != expect:
            failures.append(f"GMinus k={k} u={u}: leading {out.leading()} != {expect}")
    report(
        capsys,
        4,
        failures,
        f"coefficient -l(N+1) on {geq_cases} GeqN instances (N in 1..3); leading (r+1)l on {minus_cases} GMinus instances",
    )


# --- 5. reducibility witnesses ------------------------------------------------------

EXP_FUNCTIONALS = [
    GEO2,
    LIN,
    MIXED,
    Functional.geometric(3),
    Functional.geometric(-1),
    Functional.geometric(Fraction(1, 2)),
    Functional.exp_poly({2: [1, 1]}),
    Functional.constant(5),
    Functional.exp_poly({-2: [0, 0, 1]}),
    Functional.exp_poly({3: [2], 1: [-1]}),
    Functional.exp_poly({Fraction(1, 2): [1], 2: [1]}),
    Functional.zero(),
]


def witness_setups():
    """Ten or more exp-polynomial setups for each pair variant."""
    fs = EXP_FUNCTIONALS
    out = []
    for i, f in enumerate(fs):
        g = fs[(i + 1) % len(fs)]
        N = 1 + i % 3
        psi = {n: fs[(i + n) % len(fs)] for n in range(N, 2 * N + 1)}
        psi[2 * N - 1], psi[2 * N] = f, g
        out.append(("GeqN", WhittakerSetup.witt_geq(N, psi)))
        out.append(("GMinus", WhittakerSetup.witt_minus(f)))
        out.append(("VirGeqN", WhittakerSetup.vir_geq(N, psi, fs[(i + 5) % len(fs)])))
        out.append(("Sl2E", WhittakerSetup.sl2_e(f, Fraction(i, 2))))
    return out


def _with_other_data(s):
    """Same criterion functionals, different non-criterion data."""
    other = Functional.geometric(7)
    if s.pair == GEQ:
        crit = {int(name[4:]) for name in s.criterion_sources()}
        psi = {n: (f if n in crit else other) for n, f in s.psi}
        if s.algebra == VIRASORO:
            return WhittakerSetup.vir_geq(s.N, psi, other)
        return WhittakerSetup.witt_geq(s.N, psi)
    if s.algebra == SL2:
        return WhittakerSetup.sl2_e(s.phi, s.level + 3)
    return None


def test_criterion_5_reducibility_witnesses(capsys):
    failures = []
    counts = {}
    for variant, s in witness_setups():
        counts[variant] = counts.get(variant, 0) + 1
        w = reducibility_witness(s)
        if is_whittaker(s, w).kind != Verdict.EXACT_TRUE:
            failures.append(f"{variant} {s.describe()}: witness {w} not Whittaker")
        if w.is_zero() or w.is_multiple_of_vacuum():
            failures.append(f"{variant} {s.describe()}: witness {w} is a multiple of v")
        t = _with_other_data(s)
        if t is not None and reducibility_witness(t) != w:
            failures.append(f"{variant} {s.describe()}: witness depends on non-criterion data")
    summary = ", ".join(f"{k}={v}" for k, v in sorted(counts.items()))
    report(capsys, 5, failures, f"witnesses ExactTrue and not in span(v) for exp-polynomial setups ({summary})")


# --- 6. product vectors -----------------------------------------------------------


def test_criterion_6_product_vectors(capsys):
    failures = []
    checked = 0
    for variant, s in witness_setups():
        c = required_annihilator(s)
        for n_factors in (1, 2, 3):
            fs = [c * T**j for j in range(n_factors)]
            u = product_whittaker_vector(s, fs)
            checked += 1
            if is_whittaker(s, u).kind != Verdict.EXACT_TRUE:
                failures.append(f"{variant} {s.describe()} s={n_factors}: product vector not Whittaker")
    report(capsys, 6, failures, f"product vectors ExactTrue for s in {{1,2,3}} ({checked} vectors)")


# --- 7. simple direction --------------------------------------------------------------


def test_criterion_7_oracle_search_is_cyclic(capsys):
    setups = [
        ("GeqN N=1", WhittakerSetup.witt_geq(1, {1: GEO2, 2: HALF_SQUARE})),
        ("GeqN N=1 both", WhittakerSetup.witt_geq(1, {1: HALF_SQUARE, 2: HALF_SQUARE})),
        ("GeqN N=2", WhittakerSetup.witt_geq(2, {2: LIN, 3: HALF_SQUARE, 4: GEO2})),
        ("GMinus", WhittakerSetup.witt_minus(HALF_SQUARE)),
        ("VirGeqN N=1", WhittakerSetup.vir_geq(1, {1: GEO2, 2: HALF_SQUARE}, Functional.geometric(3))),
        ("Sl2E", WhittakerSetup.sl2_e(HALF_SQUARE, 1)),
    ]
    params = SearchParams(lth_max=3, exp_window=(-4, 4))
    failures = []
    for name, s in setups:
        r = search_whittaker(s, params.lth_max, params.exp_window, params.resolved_deg_window(s), params.class_window)
        if r.dimension != 1 or not r.basis[0].is_multiple_of_vacuum() or r.basis[0].is_zero():
            failures.append(f"{name}: dimension {r.dimension}")
    report(capsys, 7, failures, f"search at lth_max 3, exponents [-4,4] is span(v) for {len(setups)} oracle setups")


# --- 8. structural filters ---------------------------------------------------------------


def _direct_violations(s, basis):
    out = []
    for u in basis:
        for m in u.monomials():
            tags = {t for t, _ in m}
            if s.algebra == SL2 and 1 in tags:
                out.append(f"f factor in {m}")
            elif s.pair == MINUS and tags - {0}:
                out.append(f"degree other than 0 in {m}")
            elif s.pair == GEQ and any(t < 0 for t in tags):
                out.append(f"negative degree in {m}")
    return out


def test_criterion_8_structural_filters(capsys):
    failures = []
    names = []
    for path in sorted(CORPUS.glob("*.json")):
        try:
            sc = load_scenario(str(path))
        except InputError:
            continue
        names.append(sc.name)
        q = sc.params
        r = search_whittaker(sc.setup, q.lth_max, q.exp_window, q.resolved_deg_window(sc.setup), q.class_window)
        bad = structural_violations(sc.setup, r.basis) + _direct_violations(sc.setup, r.basis)
        failures += [f"{sc.name}: {v}" for v in bad]
    report(capsys, 8, failures, f"search bases obey the structural filters on {len(names)} corpus scenarios")


# --- 9. functional layer ---------------------------------------------------------------------


def _random_poly(rng, lo=-3, hi=3):
    return LaurentPoly({rng.randint(lo, hi): random_scalar(rng) for _ in range(rng.randint(1, 4))})


def test_criterion_9_functional_layer(capsys):
    rng = random.Random(9)
    failures = []
    for phi in EXP_FUNCTIONALS:
        c = annihilator_generator(phi)
        if is_zero(shift(c, phi)).kind != Verdict.EXACT_TRUE:
            failures.append(f"{phi}: {c} does not annihilate")
        D = c.max_exp
        rows = [[phi.evaluate(n + j) for j in range(D)] for n in range(-3 * D - 3, 3 * D + 4)]
        if D and dense_rank(rows) != D:
            failures.append(f"{phi}: an annihilator of degree < {D} exists")
    bases = {"half_square_power": (2, 3)}
    oracles = [Functional.oracle(rule, b) for rule in sorted(ORACLE_CATALOG) for b in bases.get(rule, (2, Fraction(1, 2)))]
    pool = EXP_FUNCTIONALS + oracles + [a + b for a, b in zip(EXP_FUNCTIONALS, oracles)]
    compositions = 220
    for _ in range(compositions):
        f, g, phi = _random_poly(rng), _random_poly(rng), rng.choice(pool)
        lhs, rhs = shift(f, shift(g, phi)), shift(f * g, phi)
        if any(lhs.evaluate(n) != rhs.evaluate(n) for n in range(-6, 7)):
            failures.append(f"composition: f={f} g={g} phi={phi}")
    non_members = 0
    for phi in oracles:
        for _ in range(4):
            f = _random_poly(rng, 0, 3)
            if f.is_zero():
                continue
            non_members += 1
            if classify(shift(f, phi), 4, (-12, 12)).kind == Classification.IN_E:
                failures.append(f"shift({f}, {phi}) classified in E")
    report(
        capsys,
        9,
        failures,
        f"{len(EXP_FUNCTIONALS)} annihilators exact and minimal; {compositions} shift compositions; "
        f"{non_members} oracle shifts stay outside E at degree_bound 4",
    )


# --- 10. sl2-hat record -----------------------------------------------------------------------


def test_criterion_10_sl2_record(capsys):
    failures = []
    expect = ModuleElement(SL2, {PBWMonomial(((0, 1),)): 1, PBWMonomial(((0, 0),)): -2})
    for level in (0, 1):
        s = WhittakerSetup.sl2_e(GEO2, level)
        v = simplicity_verdict(s)
        if v.status != SimplicityVerdict.REDUCIBLE:
            failures.append(f"level {level}: status {v.status}")
        if v.witness != expect:
            failures.append(f"level {level}: witness {v.witness}")
        if is_whittaker(s, expect).kind != Verdict.EXACT_TRUE:
            failures.append(f"level {level}: witness not ExactTrue")
        if not any(SL2_ANNOTATION in n for n in v.to_json()["notes"]):
            failures.append(f"level {level}: annotation missing")
    report(capsys, 10, failures, "sl2 phi=2^n, level 0 and 1: REDUCIBLE with (h t^1 - 2 h t^0)v and annotation")


# --- 11. determinism ---------------------------------------------------------------------------


def _corpus_run():
    return subprocess.run(
        [sys.executable, "-m", "whitkit", "corpus", str(CORPUS), "--json"],
        capture_output=True,
        check=False,
    )


def test_criterion_11_determinism(capsys):
    first, second = _corpus_run(), _corpus_run()
    failures = []
    if first.returncode != 0:
        failures.append(f"corpus run exited {first.returncode}: {first.stderr.decode()[-300:]}")
    if first.stdout != second.stdout:
        failures.append("corpus reports differ between runs")
    report(capsys, 11, failures, f"two corpus runs in separate processes give byte-identical reports ({len(first.stdout)} bytes)")
