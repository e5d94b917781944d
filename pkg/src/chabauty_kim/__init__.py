"""p-adic polylogarithms and a Chabauty-Kim check for P^1 minus three points."""

from .padic import PadicContext, PadicNumber, padic_log, rational_reconstruction, teichmuller
from .polylog import PolylogFamily, build_family
from .series import DiskSeries, find_roots

__all__ = [
    "DiskSeries",
    "PadicContext",
    "PadicNumber",
    "PolylogFamily",
    "build_family",
    "find_roots",
    "padic_log",
    "rational_reconstruction",
    "teichmuller",
]
__version__ = "0.1.0"
