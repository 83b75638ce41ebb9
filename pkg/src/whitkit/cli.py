"""Command-line front end.

Scenario files are JSON::

    {"name": "...",
     "setup": {"algebra": "loop-witt", "pair": {"kind": "geq", "N": 1},
               "psi": {"1": {...functional...}, "2": {...}}},
     "params": {"lth_max": 3, "exp_window": [-4, 4]},
     "expected": {"status": "reducible"}}

Exit codes: 0 success, 1 schema or input error, 2 undecided verdict (or a
failed Whittaker check), 3 corroboration failure, 4 corpus regression
mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

from .analysis import CorroborationFailure, PreconditionError, SearchParams, search_whittaker, simplicity_verdict
from .functionals import ClassificationError, Functional, annihilator_generator, classify
from .lie_algebras import AlgebraMismatch, Generator, LieElement
from .pbw_engine import ModuleElement, SetupError, WhittakerSetup, act, is_whittaker

EXIT_OK = 0
EXIT_SCHEMA = 1
EXIT_UNDECIDED = 2
EXIT_CORROBORATION = 3
EXIT_MISMATCH = 4


class InputError(ValueError):
    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass
class Scenario:
    name: str
    setup: WhittakerSetup
    params: SearchParams
    expected: dict | None = None


def parse_window(text: str) -> tuple[int, int]:
    """``"LO..HI"`` (both ends inclusive, negatives allowed)."""
    try:
        lo, hi = text.split("..")
        out = (int(lo), int(hi))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like LO..HI, got {text!r}") from None
    if out[0] > out[1]:
        raise argparse.ArgumentTypeError(f"empty window {text!r}")
    return out


def _window_field(data: Mapping, key: str, path: str, problems: list[str]):
    if key not in data:
        return None
    val = data[key]
    if (
        isinstance(val, list)
        and len(val) == 2
        and all(isinstance(x, int) and not isinstance(x, bool) for x in val)
        and val[0] <= val[1]
    ):
        return (val[0], val[1])
    problems.append(f"{path}.{key}: expected [lo, hi] with integers lo <= hi, got {val!r}")
    return None


def parse_params(data: Any, path: str = "params") -> SearchParams:
    problems: list[str] = []
    if data is None:
        return SearchParams()
    if not isinstance(data, Mapping):
        raise InputError([f"{path}: expected an object"])
    known = {"lth_max", "exp_window", "deg_window", "class_degree", "class_window"}
    for key in sorted(set(data) - known):
        problems.append(f"{path}.{key}: unknown parameter")
    kw: dict[str, Any] = {}
    for key in ("lth_max", "class_degree"):
        if key in data:
            val = data[key]
            if not isinstance(val, int) or isinstance(val, bool) or val < 0:
                problems.append(f"{path}.{key}: expected a nonnegative integer, got {val!r}")
            else:
                kw[key] = val
    for key in ("exp_window", "deg_window", "class_window"):
        w = _window_field(data, key, path, problems)
        if w is not None:
            kw[key] = w
    if problems:
        raise InputError(problems)
    return SearchParams(**kw)


def parse_scenario(data: Any, default_name: str = "scenario") -> Scenario:
    if not isinstance(data, Mapping):
        raise InputError(["scenario: expected a JSON object"])
    problems = [f"scenario.{k}: unknown field" for k in sorted(set(data) - {"name", "setup", "params", "expected"})]
    if "setup" not in data:
        problems.append("scenario.setup: required")
    setup = params = None
    try:
        if "setup" in data:
            setup = WhittakerSetup.from_json(data["setup"], "setup")
    except SetupError as exc:
        problems.extend(exc.violations)
    try:
        params = parse_params(data.get("params"))
    except InputError as exc:
        problems.extend(exc.violations)
    expected = data.get("expected")
    if expected is not None and not isinstance(expected, Mapping):
        problems.append("scenario.expected: expected an object")
    if problems:
        raise InputError(problems)
    return Scenario(str(data.get("name", default_name)), setup, params, dict(expected) if expected else None)


def _read_json(source: str) -> Any:
    """A file path, or inline JSON when the argument starts with ``{`` or ``[``."""
    text = source if source.lstrip()[:1] in ("{", "[") else None
    try:
        if text is None:
            text = Path(source).read_text()
        return json.loads(text)
    except OSError as exc:
        raise InputError([f"{source}: {exc.strerror}"]) from None
    except json.JSONDecodeError as exc:
        raise InputError([f"{source}: invalid JSON ({exc.msg} at line {exc.lineno})"]) from None


def load_scenario(path: str) -> Scenario:
    return parse_scenario(_read_json(path), Path(path).stem)


def _override(params: SearchParams, args: argparse.Namespace) -> SearchParams:
    kw = {}
    for key in ("lth_max", "exp_window", "deg_window", "class_degree", "class_window"):
        val = getattr(args, key, None)
        if val is not None:
            kw[key] = val
    return replace(params, **kw)


def _dump(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def run_verdict(sc: Scenario) -> tuple[int, dict, str]:
    """Verdict report for one scenario: (exit code, json report, text)."""
    report: dict[str, Any] = {"name": sc.name, "setup": sc.setup.to_json(), "params": sc.params.to_json(sc.setup)}
    try:
        v = simplicity_verdict(sc.setup, sc.params)
    except CorroborationFailure as exc:
        report["status"] = "corroboration_failure"
        report["error"] = str(exc)
        return EXIT_CORROBORATION, report, f"{sc.name}: CORROBORATION FAILURE\n  {exc}\n"
    except (PreconditionError, ClassificationError) as exc:
        report["status"] = "error"
        report["error"] = str(exc)
        return EXIT_SCHEMA, report, f"{sc.name}: ERROR\n  {exc}\n"
    report.update(v.to_json())
    lines = [f"{sc.name}: {v.headline()}", f"  setup: {sc.setup.describe()}", f"  criterion: {v.basis}"]
    for name, c in v.classification.items():
        extra = f" annihilator {c['annihilator_str']}" if "annihilator_str" in c else ""
        ev = c.get("evidence", {})
        if ev.get("method") == "window nullspace":
            extra += f" (window {ev['window']}, degree <= {ev['degree_bound']}, nullity {ev['nullity']})"
        lines.append(f"  {name}: {c['kind']}{extra}")
    if v.witness is not None:
        lines.append(f"  witness: {v.witness}")
        lines.append(f"  witness check: {v.witness_check.kind}")
        lines.append(f"  witness json: {json.dumps(v.witness.to_json())}")
    if v.corroboration is not None:
        r = v.corroboration
        lines.append(
            f"  corroboration: {r.dimension}-dimensional solution space over {r.n_columns} monomials "
            f"({r.n_rows} equations, {r.mode} rows)"
        )
    for note in v.notes:
        lines.append(f"  note: {note}")
    code = EXIT_UNDECIDED if v.status == v.UNDECIDED else EXIT_OK
    return code, report, "\n".join(lines) + "\n"


def _expected_mismatch(sc: Scenario, report: dict) -> list[str]:
    out = []
    for key, want in (sc.expected or {}).items():
        got = report.get(key)
        if got != want:
            out.append(f"{key}: expected {want!r}, got {got!r}")
    return out


def _corpus_one(path: str) -> tuple[str, int, dict, str]:
    try:
        sc = load_scenario(path)
    except InputError as exc:
        report = {"name": Path(path).stem, "status": "schema_error", "violations": exc.violations}
        text = f"{Path(path).stem}: SCHEMA ERROR\n" + "".join(f"  {v}\n" for v in exc.violations)
        if isinstance(_read_json_quiet(path), Mapping):
            exp = _read_json_quiet(path).get("expected") or {}
            if exp.get("status") == "schema_error":
                return path, EXIT_OK, report, text + "  matches expected\n"
        return path, EXIT_SCHEMA, report, text
    code, report, text = run_verdict(sc)
    if sc.expected:
        bad = _expected_mismatch(sc, report)
        if bad:
            text += "".join(f"  MISMATCH {b}\n" for b in bad)
            return path, EXIT_MISMATCH, report, text
        text += "  matches expected\n"
        code = EXIT_OK
    return path, code, report, text


def _read_json_quiet(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError):
        return None


def cmd_verdict(args: argparse.Namespace) -> int:
    sc = load_scenario(args.scenario)
    sc.params = _override(sc.params, args)
    code, report, text = run_verdict(sc)
    print(_dump(report) if args.json else text, end="\n" if args.json else "")
    return code


def cmd_check(args: argparse.Namespace) -> int:
    sc = load_scenario(args.scenario)
    data = _read_json(args.vector)
    if isinstance(data, Mapping):
        data = data.get("vector", data.get("element"))
    try:
        u = ModuleElement.from_json(sc.setup.algebra, data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError([f"vector: {exc}"]) from None
    window = args.class_window or sc.params.class_window
    v = is_whittaker(sc.setup, u, window)
    if args.json:
        print(_dump({"name": sc.name, "vector": u.to_json(), "verdict": v.to_json()}))
    else:
        print(f"{sc.name}: {u}")
        print(f"  is_whittaker: {v.kind}" + (f" witness {v.witness}" if v.witness is not None else ""))
    return EXIT_OK if v.holds else EXIT_UNDECIDED


def cmd_search(args: argparse.Namespace) -> int:
    sc = load_scenario(args.scenario)
    p = _override(sc.params, args)
    r = search_whittaker(sc.setup, p.lth_max, p.exp_window, p.resolved_deg_window(sc.setup), p.class_window)
    if args.json:
        print(_dump({"name": sc.name, **r.to_json()}))
    else:
        tag = " (windowed)" if r.windowed else ""
        print(f"{sc.name}: {r.dimension}-dimensional Whittaker space in truncation{tag}")
        print(f"  {r.n_columns} monomials, {r.n_rows} equations, rank {r.rank}, params {json.dumps(r.params)}")
        for u in r.basis:
            print(f"  {u}")
    return EXIT_OK


def cmd_ann(args: argparse.Namespace) -> int:
    try:
        phi = Functional.from_json(_read_json(args.functional))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError([f"functional: {exc}"]) from None
    if phi.is_exp_poly():
        c = annihilator_generator(phi)
        out = {"functional": str(phi), "annihilator": c.to_json(), "annihilator_str": str(c)}
        text = f"Ann({phi}) = ({c})"
    else:
        cl = classify(phi, args.class_degree or 6, args.class_window or (-16, 16))
        out = {"functional": str(phi), "classification": cl.to_json()}
        text = f"{phi}: {cl.kind} (no annihilator of degree <= {cl.evidence['degree_bound']} on window {cl.evidence['window']})"
    print(_dump(out) if args.json else text)
    return EXIT_OK


def _parse_lie(alg: str, data: Any) -> LieElement:
    try:
        if isinstance(data, Mapping):
            return LieElement.of(Generator.from_json(data, alg))
        terms = []
        for item in data:
            terms.append((Generator.from_json(item["gen"], alg), item.get("coeff", "1")))
        return LieElement(alg, terms)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError([f"generator: {exc}"]) from None


def cmd_act(args: argparse.Namespace) -> int:
    sc = load_scenario(args.scenario)
    x = _parse_lie(sc.setup.algebra, _read_json(args.generator))
    data = _read_json(args.element) if args.element else [{"coeff": "1", "monomial": []}]
    try:
        u = ModuleElement.from_json(sc.setup.algebra, data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError([f"element: {exc}"]) from None
    out = act(sc.setup, x, u)
    if args.json:
        print(_dump({"result": out.to_json(), "result_str": str(out)}))
    else:
        print(out)
    return EXIT_OK


def cmd_corpus(args: argparse.Namespace) -> int:
    root = Path(args.directory)
    paths = sorted(str(p) for p in root.glob("*.json"))
    if not paths:
        raise InputError([f"{root}: no scenario files"])
    if args.jobs and args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_corpus_one, paths))
    else:
        results = [_corpus_one(p) for p in paths]
    worst = EXIT_OK
    failures = 0
    for _, code, _, _ in results:
        if code != EXIT_OK:
            failures += 1
            worst = max(worst, code)
    if args.json:
        print(_dump({"scenarios": [r for _, _, r, _ in results], "failures": failures}))
    else:
        for _, _, _, text in results:
            print(text, end="")
        print(f"{len(results)} scenarios, {failures} failing")
    return worst


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="whitkit", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def search_flags(p):
        p.add_argument("--lth-max", dest="lth_max", type=int)
        p.add_argument("--exp-window", dest="exp_window", type=parse_window, metavar="LO..HI")
        p.add_argument("--deg-window", dest="deg_window", type=parse_window, metavar="LO..HI")
        p.add_argument("--class-degree", dest="class_degree", type=int)
        p.add_argument("--class-window", dest="class_window", type=parse_window, metavar="LO..HI")

    p = sub.add_parser("verdict", help="simplicity verdict for a scenario")
    p.add_argument("scenario")
    search_flags(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verdict)

    p = sub.add_parser("check", help="decide whether a vector is a Whittaker vector")
    p.add_argument("scenario")
    p.add_argument("vector", help="file or inline JSON module element")
    p.add_argument("--class-window", dest="class_window", type=parse_window, metavar="LO..HI")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("search", help="bounded Whittaker-vector search")
    p.add_argument("scenario")
    search_flags(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("ann", help="annihilator generator / classification of a functional")
    p.add_argument("functional", help="file or inline JSON functional")
    p.add_argument("--class-degree", dest="class_degree", type=int)
    p.add_argument("--class-window", dest="class_window", type=parse_window, metavar="LO..HI")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_ann)

    p = sub.add_parser("act", help="act with a Lie algebra element on a module element")
    p.add_argument("scenario")
    p.add_argument("generator", help="file or inline JSON generator (or list of {coeff, gen})")
    p.add_argument("element", nargs="?", help="file or inline JSON module element (default: the cyclic vector)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_act)

    p = sub.add_parser("corpus", help="run every scenario in a directory")
    p.add_argument("directory")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        for v in exc.violations:
            print(f"error: {v}", file=sys.stderr)
        return EXIT_SCHEMA
    except (SetupError, AlgebraMismatch, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
