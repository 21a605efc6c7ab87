"""Exact construction of numbers in missing-digit Cantor sets whose convergents
stay in the set, with independently checkable certificates."""

from .build import Certificate, ConstructionParams, run
from .verify import VerifyOptions, overall_pass, verify_all
from .words import DigitPair

__all__ = [
    "Certificate",
    "ConstructionParams",
    "DigitPair",
    "VerifyOptions",
    "overall_pass",
    "run",
    "verify_all",
]
__version__ = "0.1.0"
