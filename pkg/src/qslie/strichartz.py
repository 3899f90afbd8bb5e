"""Surjections, quasi-permutations and the log-flowmap Lie series.

A surjection is a tuple ``zeta`` with ``zeta[i-1]`` the position of letter ``i``.
The matching quasi-permutation is a tuple of blocks, block ``j`` holding the
sorted letters sent to position ``j``; ``3221`` corresponds to ``4[2,3]1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations, product
from typing import List, Tuple

from .freealg import (
    CONTINUOUS,
    EMPTY,
    ZERO,
    BracketMode,
    Poly,
    TensorPoly,
    Word,
    _acc,
    extended_alphabet,
    format_word,
    merge_letters,
    words_up_to,
)
from .hoffman import bracket_expansions, hoffman_exp_adjoint, ito_strat_word_conversion
from .hopf import LiePoly

Surjection = Tuple[int, ...]
QuasiPerm = Tuple[Tuple[int, ...], ...]


def is_surjection(zeta) -> bool:
    return len(zeta) > 0 and set(zeta) == set(range(1, max(zeta) + 1))


@lru_cache(maxsize=None)
def surjections(p: int) -> Tuple[Surjection, ...]:
    """All surjections from {1..p} onto some {1..q}, lexicographic on image sequences."""
    if p < 1:
        raise ValueError("p must be positive")
    return tuple(z for z in product(range(1, p + 1), repeat=p) if is_surjection(z))


def surjection_to_quasiperm(zeta: Surjection) -> QuasiPerm:
    if not is_surjection(zeta):
        raise ValueError(f"{zeta} is not a surjection onto an initial segment")
    q = max(zeta)
    blocks = [[] for _ in range(q)]
    for i, j in enumerate(zeta, start=1):
        blocks[j - 1].append(i)
    return tuple(tuple(b) for b in blocks)


def quasiperm_to_surjection(sigma: QuasiPerm) -> Surjection:
    p = sum(len(b) for b in sigma)
    zeta = [0] * p
    for j, block in enumerate(sigma, start=1):
        for i in block:
            zeta[i - 1] = j
    if 0 in zeta or sorted(i for b in sigma for i in b) != list(range(1, p + 1)):
        raise ValueError(f"{sigma} is not a quasi-permutation")
    return tuple(zeta)


def format_quasiperm(sigma: QuasiPerm) -> str:
    return "".join(str(b[0]) if len(b) == 1 else "[" + ",".join(map(str, b)) + "]" for b in sigma)


def descent_set(zeta: Surjection) -> frozenset:
    """Quasi-descents: indices k with ``zeta(k+1) <= zeta(k)`` (1-based)."""
    return frozenset(k for k in range(1, len(zeta)) if zeta[k] <= zeta[k - 1])


def descent_count(zeta: Surjection) -> int:
    return len(descent_set(zeta))


def coefficient(p: int, d: int) -> Fraction:
    """``(-1)^d / p * binom(p-1, d)^-1``."""
    return Fraction((-1) ** d, p * math.comb(p - 1, d))


def log_star_coeffs(p: int) -> List[Tuple[Surjection, Fraction]]:
    return [(z, coefficient(p, descent_count(z))) for z in surjections(p)]


def apply_quasiperm(sigma: QuasiPerm, w: Word, mode: BracketMode) -> Poly:
    """Permute letters then bracket the blocks; zero if a bracket vanishes."""
    p = sum(len(b) for b in sigma)
    if p != len(w):
        raise ValueError(f"quasi-permutation of size {p} cannot act on a word of length {len(w)}")
    out = []
    for block in sigma:
        c = merge_letters([w[i - 1] for i in block], mode)
        if c is None:
            return Poly()
        out.append(c)
    return Poly._raw({tuple(out): Fraction(1)})


def log_star_via_surjections(w: Word, mode: BracketMode) -> Poly:
    if not w:
        return Poly()
    out: dict = {}
    for zeta, c in log_star_coeffs(len(w)):
        for x, b in apply_quasiperm(surjection_to_quasiperm(zeta), w, mode).items():
            _acc(out, x, c * b)
    return Poly._raw(out)


def conv_power_via_descents(k: int, w: Word, mode: BracketMode) -> Poly:
    """``J^{*k}(w)`` as a sum over descent-set supersets of size ``k-1``."""
    if k < 1:
        raise ValueError("k must be positive")
    p = len(w)
    if p == 0 or k > p:
        return Poly()
    out: dict = {}
    zetas = [(z, descent_set(z)) for z in surjections(p)]
    for S in combinations(range(1, p), k - 1):
        S = frozenset(S)
        for zeta, des in zetas:
            if des <= S:
                for x, b in apply_quasiperm(surjection_to_quasiperm(zeta), w, mode).items():
                    _acc(out, x, b)
    return Poly._raw(out)


def permutation_coeffs(p: int) -> List[Tuple[Tuple[int, ...], Fraction]]:
    """``(sigma, c_sigma)`` over the symmetric group, ``c`` from classical descents."""
    out = []
    for sigma in permutations(range(1, p + 1)):
        out.append((sigma, coefficient(p, descent_count(sigma))))
    return out


def permute(sigma: Tuple[int, ...], w: Word) -> Word:
    """``sigma(w) = a_sigma(1) ... a_sigma(p)``."""
    return tuple(w[i - 1] for i in sigma)


def inverse(sigma: Tuple[int, ...]) -> Tuple[int, ...]:
    inv = [0] * len(sigma)
    for i, s in enumerate(sigma, start=1):
        inv[s - 1] = i
    return tuple(inv)


def log_shuffle_via_permutations(w: Word) -> Poly:
    """Chen-Strichartz form ``sum_sigma c_sigma sigma^{-1}(w)``."""
    if not w:
        return Poly()
    out: dict = {}
    for sigma, c in permutation_coeffs(len(w)):
        _acc(out, permute(inverse(sigma), w), c)
    return Poly._raw(out)


def flowmap_expansion(d: int, max_weight: int, alphabet=None) -> TensorPoly:
    """``sum w (x) w`` over words of weight at most ``max_weight``."""
    alphabet = extended_alphabet(d) if alphabet is None else alphabet
    return TensorPoly._raw({(w, w): Fraction(1) for w in words_up_to(alphabet, max_weight)})


def tensor_log(g: TensorPoly, mode: BracketMode, max_weight: int) -> TensorPoly:
    """Formal logarithm of a group-like element with unit ``e (x) e``, truncated by weight."""
    unit = ((EMPTY, EMPTY))
    if g.coeff(*unit) != 1:
        raise ValueError("logarithm needs constant term e (x) e with coefficient 1")
    x = TensorPoly._raw({k: c for k, c in g.items() if k != unit})
    out = TensorPoly()
    power = x
    k = 1
    while power:
        out = out + power * Fraction((-1) ** (k - 1), k)
        power = power.product(x, mode, max_weight)
        k += 1
    return out


def tensor_exp(x: TensorPoly, mode: BracketMode, max_weight: int) -> TensorPoly:
    out = TensorPoly({(EMPTY, EMPTY): 1})
    power = TensorPoly({(EMPTY, EMPTY): 1})
    k = 1
    while True:
        power = power.product(x, mode, max_weight) * Fraction(1, k)
        if not power:
            return out
        out = out + power
        k += 1


STRATONOVICH = "stratonovich"
ITO = "ito"
EXPANDED = "expanded"
RESUMMED = "resummed"


@dataclass
class LieSeriesTerm:
    """One term: an integral combination paired with a Lie polynomial of vector fields."""

    base_word: Word
    integral: Poly
    bracket: LiePoly


@dataclass
class LieSeries:
    flavor: str
    d: int
    weight: int
    form: str = EXPANDED
    terms: List[LieSeriesTerm] = field(default_factory=list)

    def canonical(self) -> TensorPoly:
        """Ito words on the left, concatenation words (vector-field compositions) on the right."""
        out: dict = {}
        for t in self.terms:
            left = t.integral
            if self.flavor == STRATONOVICH:
                left = left.map(ito_strat_word_conversion)
            right = t.bracket.expand()
            for u, a in left.items():
                for v, b in right.items():
                    _acc(out, (u, v), a * b)
        return TensorPoly._raw(out)

    def canonical_stratonovich(self) -> TensorPoly:
        """Stratonovich words on the left; only defined for the Stratonovich flavor."""
        if self.flavor != STRATONOVICH:
            raise ValueError("series is not in Stratonovich form")
        out = TensorPoly()
        for t in self.terms:
            out = out + TensorPoly.from_polys(t.integral, t.bracket.expand())
        return out

    def truncated(self, keep) -> "LieSeries":
        return LieSeries(self.flavor, self.d, self.weight, self.form, [t for t in self.terms if keep(t.base_word)])


def _series_words(d: int, max_weight: int):
    return [w for w in words_up_to(extended_alphabet(d), max_weight) if w]


def strat_lie_series(d: int, max_weight: int) -> LieSeries:
    """``sum_w J_{log_sh(w)} / |w|  V_[w]_L`` over the extended alphabet."""
    if d < 1 or max_weight < 1:
        raise ValueError("d and max_weight must be positive")
    terms = []
    for w in _series_words(d, max_weight):
        integral = log_shuffle_via_permutations(w) * Fraction(1, len(w))
        if integral:
            terms.append(LieSeriesTerm(w, integral, LiePoly({w: 1})))
    return LieSeries(STRATONOVICH, d, max_weight, EXPANDED, terms)


def _resummed_bracket(u: Word) -> LiePoly:
    # sum_sigma c_sigma / |sigma| [sigma(u)]_L
    terms: dict = {}
    p = len(u)
    for sigma, c in permutation_coeffs(p):
        _acc(terms, permute(sigma, u), c / p)
    return LiePoly(terms)


def ito_lie_series(d: int, max_weight: int, form: str = EXPANDED) -> LieSeries:
    if d < 1 or max_weight < 1:
        raise ValueError("d and max_weight must be positive")
    terms = []
    if form == EXPANDED:
        for w in _series_words(d, max_weight):
            p = len(w)
            integral: dict = {}
            for sigma, c in permutation_coeffs(p):
                for x, b in ito_strat_word_conversion(permute(inverse(sigma), w)).items():
                    _acc(integral, x, c * b / p)
            if integral:
                terms.append(LieSeriesTerm(w, Poly._raw(integral), LiePoly({w: 1})))
    elif form == RESUMMED:
        for w in _series_words(d, max_weight):
            br = _resummed_bracket(w)
            for u in sorted(bracket_expansions(w)):
                br = br + _resummed_bracket(u) * Fraction(1, 2 ** (len(u) - len(w)))
            if br.expand():
                terms.append(LieSeriesTerm(w, Poly.from_word(w), br))
    else:
        raise ValueError(f"unknown form {form!r}")
    return LieSeries(ITO, d, max_weight, form, terms)


def direct_ito_log(d: int, max_weight: int) -> TensorPoly:
    """Formal log of the Ito flowmap ``sum I_w D_w``, right leg rewritten in vector-field words.

    The operator maps satisfy ``D = V o exp_H^dagger``, so each D-word becomes
    ``hoffman_exp_adjoint`` of itself read as V-words.
    """
    log = tensor_log(flowmap_expansion(d, max_weight), CONTINUOUS, max_weight)
    return log.map_right(lambda v: hoffman_exp_adjoint(v, CONTINUOUS))


def direct_strat_log(d: int, max_weight: int) -> TensorPoly:
    """Formal log of the Stratonovich flowmap, left leg converted to Ito words."""
    log = tensor_log(flowmap_expansion(d, max_weight), ZERO, max_weight)
    return log.map_left(ito_strat_word_conversion)


def describe_term(t: LieSeriesTerm) -> str:
    return f"{t.integral} (x) {t.bracket!r} [{format_word(t.base_word)}]"
