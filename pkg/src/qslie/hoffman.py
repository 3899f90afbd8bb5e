"""Compositions, Hoffman's exponential and logarithm, and the Ito/Stratonovich word conversions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import FrozenSet, List, Tuple

from .freealg import (
    CONTINUOUS,
    EMPTY,
    BracketMode,
    Letter,
    Poly,
    Word,
    _acc,
    letter_splits,
    merge_letters,
)


@dataclass(frozen=True)
class Composition:
    parts: Tuple[int, ...]

    def __post_init__(self):
        if not self.parts or any(p < 1 for p in self.parts):
            raise ValueError(f"invalid composition {self.parts}")

    def __len__(self):
        return len(self.parts)

    @property
    def total(self) -> int:
        return sum(self.parts)

    @property
    def prod(self) -> int:
        return math.prod(self.parts)

    @property
    def gamma(self) -> int:
        return math.prod(math.factorial(p) for p in self.parts)

    def blocks(self):
        """Half-open index ranges of the blocks."""
        start = 0
        for p in self.parts:
            yield start, start + p
            start += p


@lru_cache(maxsize=None)
def compositions(n: int) -> Tuple[Composition, ...]:
    """All ``2**(n-1)`` compositions of ``n``, lexicographic by parts."""
    if n < 1:
        raise ValueError("n must be positive")

    def rec(m):
        if m == 0:
            return [()]
        return [(first,) + rest for first in range(1, m + 1) for rest in rec(m - first)]

    return tuple(Composition(p) for p in sorted(rec(n)))


def comp_action(lam: Composition, w: Word, mode: BracketMode) -> Poly:
    """Bracket the consecutive blocks of ``w`` given by ``lam``; zero if a block vanishes."""
    if lam.total != len(w):
        raise ValueError(f"composition of {lam.total} cannot act on a word of length {len(w)}")
    out = []
    for a, b in lam.blocks():
        c = merge_letters(w[a:b], mode)
        if c is None:
            return Poly()
        out.append(c)
    return Poly._raw({tuple(out): Fraction(1)})


def hoffman_exp(w: Word, mode: BracketMode) -> Poly:
    if not w:
        return Poly.from_word(EMPTY)
    out = Poly()
    for lam in compositions(len(w)):
        out = out + comp_action(lam, w, mode) * Fraction(1, lam.gamma)
    return out


def hoffman_log(w: Word, mode: BracketMode) -> Poly:
    if not w:
        return Poly.from_word(EMPTY)
    out = Poly()
    for lam in compositions(len(w)):
        sign = (-1) ** (lam.total - len(lam))
        out = out + comp_action(lam, w, mode) * Fraction(sign, lam.prod)
    return out


@lru_cache(maxsize=None)
def letter_factorizations(a: Letter, mode: BracketMode) -> Tuple[Word, ...]:
    """Ordered letter sequences ``(a1, ..., an)`` whose iterated bracket is ``a``, n >= 1."""
    out = [(a,)]
    for b, c in letter_splits(a, mode):
        for rest in letter_factorizations(c, mode):
            out.append((b,) + rest)
    return tuple(out)


def _letter_adjoint(a: Letter, mode: BracketMode, coeff) -> dict:
    out: dict = {}
    for seq in letter_factorizations(a, mode):
        _acc(out, seq, coeff(len(seq)))
    return out


def _homomorphism(w: Word, mode: BracketMode, coeff) -> Poly:
    out = {EMPTY: Fraction(1)}
    for a in w:
        images = _letter_adjoint(a, mode, coeff)
        nxt: dict = {}
        for u, x in out.items():
            for v, y in images.items():
                _acc(nxt, u + v, x * y)
        out = nxt
    return Poly._raw(out)


def hoffman_exp_adjoint(w: Word, mode: BracketMode) -> Poly:
    """Concatenation homomorphism with ``a -> sum_{[a1..an]=a} a1...an / n!``."""
    return _homomorphism(w, mode, lambda n: Fraction(1, math.factorial(n)))


def hoffman_log_adjoint(w: Word, mode: BracketMode) -> Poly:
    """Concatenation homomorphism with ``a -> sum_{[a1..an]=a} (-1)^(n-1) a1...an / n``."""
    return _homomorphism(w, mode, lambda n: Fraction((-1) ** (n - 1), n))


def _check_continuous(w: Word):
    for a in w:
        if len(a) > 2 or (len(a) == 2 and a[0] != a[1]):
            raise ValueError(f"letter {a} does not belong to the continuous alphabet")


def bracket_contractions(w: Word) -> FrozenSet[Word]:
    """Words from one or more replacements of adjacent equal base letters ``ii -> [i,i]``."""
    _check_continuous(w)
    out = set()

    def rec(pos, prefix, contracted):
        if pos >= len(w):
            if contracted:
                out.add(prefix)
            return
        rec(pos + 1, prefix + (w[pos],), contracted)
        if pos + 1 < len(w) and len(w[pos]) == 1 and w[pos] == w[pos + 1]:
            i = w[pos][0]
            rec(pos + 2, prefix + ((i, i),), True)

    rec(0, EMPTY, False)
    return frozenset(out)


def bracket_expansions(w: Word) -> FrozenSet[Word]:
    """Words from replacing one or more ``[i,i]`` letters by ``ii``; excludes ``w`` itself."""
    _check_continuous(w)
    options: List[List[Word]] = []
    for a in w:
        if len(a) == 2:
            options.append([(a,), ((a[0],), (a[0],))])
        else:
            options.append([(a,)])
    out = set()
    for pick in product(*options):
        u = tuple(x for part in pick for x in part)
        if u != w:
            out.add(u)
    return frozenset(out)


def ito_strat_word_conversion(w: Word) -> Poly:
    """Ito-basis expansion of the Stratonovich integral ``J_w``: ``w + sum_{u in [[w]]} 2^-(|w|-|u|) u``."""
    out = {w: Fraction(1)}
    for u in bracket_contractions(w):
        _acc(out, u, Fraction(1, 2 ** (len(w) - len(u))))
    return Poly._raw(out)


def strat_from_ito_word(w: Word) -> Poly:
    """Inverse conversion: the Ito integral ``I_w`` in the Stratonovich basis."""
    return hoffman_log(w, CONTINUOUS)
