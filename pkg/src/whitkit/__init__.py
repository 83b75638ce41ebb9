"""Exact PBW-normal-form kernel for universal Whittaker modules.

Covers the loop Witt algebra, the loop Virasoro algebra and affine sl2:
module actions in normal form, exp-polynomial functionals and their
annihilators, Whittaker-vector decisions and searches, and simplicity
verdicts with constructive witnesses.
"""

from .exact_arith import LaurentPoly, as_scalar, scalar_to_str
from .functionals import Functional, OracleRule, Verdict, Classification, annihilator_generator, classify, is_zero
from .lie_algebras import Generator, LieElement, bracket, involution
from .pbw_engine import ModuleElement, PBWMonomial, WhittakerSetup, act, act_word, is_whittaker

__all__ = [
    "Classification",
    "Functional",
    "Generator",
    "LaurentPoly",
    "LieElement",
    "ModuleElement",
    "OracleRule",
    "PBWMonomial",
    "Verdict",
    "WhittakerSetup",
    "act",
    "act_word",
    "annihilator_generator",
    "as_scalar",
    "bracket",
    "classify",
    "involution",
    "is_whittaker",
    "is_zero",
    "scalar_to_str",
]

__version__ = "0.1.0"
