"""Word algebra with exact rational coefficients and Lie-series integrators for linear SDEs."""
from .freealg import (
    CONTINUOUS,
    EMPTY,
    FREE,
    ZERO,
    BracketMode,
    Poly,
    TensorPoly,
    format_word,
    parse_word,
    qshuffle,
    shuffle,
    word,
)

__all__ = [
    "CONTINUOUS",
    "EMPTY",
    "FREE",
    "ZERO",
    "BracketMode",
    "Poly",
    "TensorPoly",
    "format_word",
    "parse_word",
    "qshuffle",
    "shuffle",
    "word",
]

__version__ = "0.1.0"
