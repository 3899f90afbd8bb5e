"""Convolution calculus of word endomorphisms.

Endomorphisms are plain callables ``Word -> Poly``; everything here is
weight-homogeneous, so a matrix on the finite word basis of a fixed weight is
available on demand for adjoints.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Iterable

from .freealg import (
    EMPTY,
    ZERO,
    BracketMode,
    Poly,
    TensorPoly,
    Word,
    _acc,
    deshuffle,
    dequasishuffle,
    qshuffle_poly,
    weight,
    words_of_weight,
)

Endo = Callable[[Word], Poly]


def identity(w: Word) -> Poly:
    return Poly._raw({w: Fraction(1)})


def counit(w: Word) -> Poly:
    """The convolution unit: keeps the empty word, kills the rest."""
    return identity(w) if not w else Poly()


def aug_proj(w: Word) -> Poly:
    """Augmented ideal projector ``J = id - counit``."""
    return identity(w) if w else Poly()


def conv_qshuffle(X: Endo, Y: Endo, w: Word, mode: BracketMode) -> Poly:
    """``(X * Y)(w) = sum_{uv=w} X(u) * Y(v)``."""
    out = Poly()
    for k in range(len(w) + 1):
        out = out + qshuffle_poly(X(w[:k]), Y(w[k:]), mode)
    return out


@lru_cache(maxsize=None)
def _conv_power(k: int, w: Word, mode: BracketMode) -> Poly:
    if k == 1:
        return aug_proj(w)
    out = Poly()
    # first block nonempty, remainder must split into k-1 nonempty blocks
    for i in range(1, len(w) - k + 2):
        out = out + qshuffle_poly(Poly._raw({w[:i]: Fraction(1)}), _conv_power(k - 1, w[i:], mode), mode)
    return out


def conv_power_qshuffle(k: int, w: Word, mode: BracketMode) -> Poly:
    """k-th quasi-shuffle convolution power of J; zero when k exceeds the length."""
    if k < 1:
        raise ValueError("k must be positive")
    if k > len(w):
        return Poly()
    return _conv_power(k, w, mode)


def log_star(w: Word, mode: BracketMode) -> Poly:
    """Quasi-shuffle convolution logarithm of the identity applied to ``w``."""
    out = Poly()
    for k in range(1, len(w) + 1):
        out = out + conv_power_qshuffle(k, w, mode) * Fraction((-1) ** (k - 1), k)
    return out


def log_shuffle(w: Word) -> Poly:
    return log_star(w, ZERO)


@lru_cache(maxsize=None)
def _conc_power(k: int, w: Word) -> Poly:
    # k-fold nonempty deshuffle splittings, concatenated
    if k == 1:
        return aug_proj(w)
    out: dict = {}
    for (u, v), c in deshuffle(w).items():
        if not u or len(v) < k - 1:
            continue
        for x, b in _conc_power(k - 1, v).items():
            _acc(out, u + x, c * b)
    return Poly._raw(out)


def conc_power(k: int, w: Word) -> Poly:
    """k-th concatenation convolution power of J, computed with the deshuffle coproduct."""
    if k > len(w):
        return Poly()
    return _conc_power(k, w)


def eulerian(w: Word) -> Poly:
    """Concatenation convolution logarithm of the identity (Solomon's Eulerian idempotent)."""
    out = Poly()
    for k in range(1, len(w) + 1):
        out = out + conc_power(k, w) * Fraction((-1) ** (k - 1), k)
    return out


class LiePoly:
    """Linear combination of left-bracketed words ``[a1,[a2,...,[a(n-1),an]]]``.

    The bracketed words span the free Lie algebra but are not independent, so
    equality is decided on the concatenation-algebra expansion.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms: Dict[Word, Fraction] = {}
        for w, c in dict(terms or {}).items():
            if not w:
                raise ValueError("the empty word has no left bracketing")
            _acc(self.terms, w, Fraction(c))

    def items(self):
        return self.terms.items()

    def __bool__(self):
        return bool(self.terms)

    def __add__(self, other: "LiePoly") -> "LiePoly":
        out = LiePoly(self.terms)
        for w, c in other.terms.items():
            _acc(out.terms, w, c)
        return out

    def __mul__(self, scalar) -> "LiePoly":
        return LiePoly({w: c * Fraction(scalar) for w, c in self.terms.items()})

    __rmul__ = __mul__

    def expand(self) -> Poly:
        out: dict = {}
        for w, c in self.terms.items():
            for x, b in expand_left_bracket(w).items():
                _acc(out, x, c * b)
        return Poly._raw(out)

    def __eq__(self, other):
        if isinstance(other, LiePoly):
            return self.expand() == other.expand()
        return NotImplemented

    def __hash__(self):
        return hash(self.expand())

    def __repr__(self):
        from .freealg import format_word

        body = " + ".join(f"{c}*[{format_word(w)}]_L" for w, c in self.terms.items())
        return f"LiePoly({body or '0'})"


@lru_cache(maxsize=None)
def expand_left_bracket(w: Word) -> Poly:
    """Concatenation expansion of ``[w]_L``; ``2**(len(w)-1)`` signed words."""
    if not w:
        raise ValueError("the empty word has no left bracketing")
    if len(w) == 1:
        return Poly._raw({w: Fraction(1)})
    a = w[:1]
    rest = expand_left_bracket(w[1:])
    out: dict = {}
    for x, c in rest.items():
        _acc(out, a + x, c)
        _acc(out, x + a, -c)
    return Poly._raw(out)


def left_bracketing(w: Word) -> LiePoly:
    return LiePoly({w: 1})


def dynkin(p: Poly) -> Poly:
    """Dynkin operator ``w -> [w]_L / |w|`` on a length-homogeneous polynomial."""
    lengths = {len(w) for w in p}
    if len(lengths) > 1:
        raise ValueError(f"dynkin needs a length-homogeneous input, got lengths {sorted(lengths)}")
    out: dict = {}
    for w, c in p.items():
        if not w:
            continue
        s = c / len(w)
        for x, b in expand_left_bracket(w).items():
            _acc(out, x, s * b)
    return Poly._raw(out)


def dynkin_word(w: Word) -> Poly:
    return dynkin(Poly._raw({w: Fraction(1)}))


def apply_endo(X: Endo, p: Poly) -> Poly:
    return p.map(X)


def adjoint_matrix(X: Endo, n: int, alphabet: Iterable) -> Endo:
    """Adjoint of a weight-homogeneous endomorphism on the weight-``n`` word basis.

    ``<X_adj(u), v> = <u, X(v)>`` for all words u, v of weight ``n``.
    """
    basis = words_of_weight(tuple(alphabet), n)
    columns: Dict[Word, dict] = {}
    for v in basis:
        for u, c in X(v).items():
            if weight(u) != n:
                raise ValueError("endomorphism is not weight-homogeneous")
            columns.setdefault(u, {})[v] = c

    def adj(u: Word) -> Poly:
        if weight(u) != n:
            raise ValueError(f"adjoint was materialised for weight {n}, got weight {weight(u)}")
        return Poly._raw(dict(columns.get(u, {})))

    return adj


def is_primitive(p: Poly, coproduct: Callable[[Word], TensorPoly]) -> bool:
    """``coproduct(p) == p (x) e + e (x) p``."""
    lhs: dict = {}
    for w, c in p.items():
        for k, b in coproduct(w).items():
            _acc(lhs, k, c * b)
    rhs: dict = {}
    for w, c in p.items():
        _acc(rhs, (w, EMPTY), c)
        _acc(rhs, (EMPTY, w), c)
    return lhs == rhs


def is_lie_element(p: Poly, method: str = "dynkin") -> bool:
    """Lie-element test: Dynkin fixed point per length component, or Friedrichs primitivity."""
    if p.coeff(EMPTY):
        return False
    if method == "friedrichs":
        return is_primitive(p, deshuffle)
    if method != "dynkin":
        raise ValueError(f"unknown method {method!r}")
    return all(dynkin(part) == part for part in p.by_length().values())


def is_quasi_primitive(p: Poly, mode: BracketMode) -> bool:
    """Primitivity for the de-quasi-shuffle coproduct."""
    return is_primitive(p, lambda w: dequasishuffle(w, mode))


def signed_reversal(w: Word) -> Poly:
    """Antipode of the concatenation/deshuffle Hopf algebra: ``(-1)^|w|`` times the reversed word."""
    return Poly._raw({tuple(reversed(w)): Fraction((-1) ** len(w))})
