"""Words over semimartingale alphabets and exact-rational linear combinations.

A letter is a sorted tuple of positive integers: ``(i,)`` is the base letter
``i`` and ``(i, j, ...)`` is the bracket letter ``[i,j,...]``.  A word is a
tuple of letters; the empty tuple is the empty word.  Keeping both as plain
tuples makes them hashable, immutable and cheap to build in the inner loops of
the quasi-shuffle recursion.
"""
from __future__ import annotations

import enum
import itertools
from collections import Counter
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Iterable, Iterator, Tuple

Letter = Tuple[int, ...]
Word = Tuple[Letter, ...]

EMPTY: Word = ()


class BracketMode(enum.Enum):
    """How the commutative bracket on letters behaves.

    CONTINUOUS: quadratic covariation of orthogonal continuous drivers;
    only ``[i,i]`` survives and every triple bracket vanishes.
    FREE: brackets merge multisets and never vanish.
    ZERO: bracket identically zero, which turns the quasi-shuffle into the
    shuffle.
    """

    CONTINUOUS = "continuous"
    FREE = "free"
    ZERO = "zero"


CONTINUOUS = BracketMode.CONTINUOUS
FREE = BracketMode.FREE
ZERO = BracketMode.ZERO


def letter(*indices: int) -> Letter:
    if not indices or any(int(i) < 1 for i in indices):
        raise ValueError(f"letter indices must be positive integers, got {indices}")
    return tuple(sorted(int(i) for i in indices))


def word(*letters) -> Word:
    """Build a word from ints (base letters) and iterables (bracket letters).

    >>> word(1, (2, 2), 3)
    ((1,), (2, 2), (3,))
    """
    out = []
    for a in letters:
        if isinstance(a, int):
            out.append(letter(a))
        else:
            out.append(letter(*a))
    return tuple(out)


def is_bracket(a: Letter) -> bool:
    return len(a) > 1


def weight(w: Word) -> int:
    """Sum of letter weights; a bracket letter weighs the size of its multiset."""
    return sum(len(a) for a in w)


def word_key(w: Word):
    """Deterministic order: weight, then length, then letters."""
    return (weight(w), len(w), w)


def bracket_letters(a: Letter, b: Letter, mode: BracketMode):
    """The bracket of two letters as a letter, or None when it vanishes."""
    if mode is ZERO:
        return None
    if mode is CONTINUOUS:
        if len(a) == 1 and a == b:
            return (a[0], a[0])
        return None
    return tuple(sorted(a + b))


def bracket(a: Letter, b: Letter, mode: BracketMode) -> "Poly":
    c = bracket_letters(a, b, mode)
    if c is None:
        return Poly()
    return Poly({(c,): Fraction(1)})


def merge_letters(letters: Iterable[Letter], mode: BracketMode):
    """Iterated bracket ``[a1, ..., an]``; None if it vanishes in ``mode``."""
    letters = tuple(letters)
    out = letters[0]
    for b in letters[1:]:
        out = bracket_letters(out, b, mode)
        if out is None:
            return None
    return out


def concat(u: Word, v: Word) -> Word:
    return u + v


def format_letter(a: Letter) -> str:
    if len(a) == 1:
        return str(a[0])
    return "[" + ",".join(str(i) for i in a) + "]"


def format_word(w: Word) -> str:
    if not w:
        return "e"
    return ".".join(format_letter(a) for a in w)


class WordSyntaxError(ValueError):
    def __init__(self, text: str, pos: int, msg: str):
        self.text = text
        self.pos = pos
        super().__init__(f"{msg} at position {pos} in {text!r}")


def parse_word(text: str) -> Word:
    """Parse ``e`` or ``letter("." letter)*`` with ``letter := int | "[" int ("," int)+ "]"``.

    A base letter may carry a cosmetic ``a`` prefix (``a1.a2``), read as ``1.2``.
    """
    s = text.strip()
    if s == "e":
        return EMPTY
    out = []
    pos = 0
    n = len(s)

    def read_int(p):
        q = p
        while q < n and s[q].isdigit():
            q += 1
        if q == p:
            raise WordSyntaxError(text, p, "expected integer")
        val = int(s[p:q])
        if val < 1:
            raise WordSyntaxError(text, p, "letter indices start at 1")
        return val, q

    while True:
        if pos >= n:
            raise WordSyntaxError(text, pos, "expected letter")
        if s[pos] == "[":
            pos += 1
            items = []
            while True:
                val, pos = read_int(pos)
                items.append(val)
                if pos < n and s[pos] == ",":
                    pos += 1
                    continue
                if pos < n and s[pos] == "]":
                    pos += 1
                    break
                raise WordSyntaxError(text, pos, "expected ',' or ']'")
            if len(items) < 2:
                raise WordSyntaxError(text, pos, "bracket letters need at least two entries")
            out.append(tuple(sorted(items)))
        else:
            if s[pos] == "a":
                pos += 1
            val, pos = read_int(pos)
            out.append((val,))
        if pos == n:
            return tuple(out)
        if s[pos] != ".":
            raise WordSyntaxError(text, pos, "expected '.'")
        pos += 1


def format_coeff(c: Fraction) -> str:
    """Exact rational as ``p/q`` in lowest terms with q > 0."""
    c = Fraction(c)
    return f"{c.numerator}/{c.denominator}"


def parse_coeff(text: str) -> Fraction:
    return Fraction(text)


def _acc(d: dict, key, c):
    v = d.get(key, 0) + c
    if v:
        d[key] = v
    else:
        d.pop(key, None)


class Poly:
    """Finite linear combination of words with Fraction coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms: Dict[Word, Fraction] = {}
        if terms:
            for w, c in dict(terms).items():
                _acc(self.terms, w, Fraction(c))

    @classmethod
    def from_word(cls, w: Word, c=1) -> "Poly":
        return cls({w: c})

    @classmethod
    def _raw(cls, terms: dict) -> "Poly":
        p = cls.__new__(cls)
        p.terms = terms
        return p

    def __iter__(self) -> Iterator[Word]:
        return iter(self.terms)

    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def items(self):
        return self.terms.items()

    def sorted_items(self):
        return sorted(self.terms.items(), key=lambda t: word_key(t[0]))

    def coeff(self, w: Word) -> Fraction:
        return self.terms.get(w, Fraction(0))

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for w, c in other.terms.items():
            _acc(out, w, c)
        return Poly._raw(out)

    def __sub__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for w, c in other.terms.items():
            _acc(out, w, -c)
        return Poly._raw(out)

    def __neg__(self):
        return Poly._raw({w: -c for w, c in self.terms.items()})

    def __mul__(self, scalar) -> "Poly":
        if isinstance(scalar, Poly):
            return NotImplemented
        s = Fraction(scalar)
        if not s:
            return Poly()
        return Poly._raw({w: c * s for w, c in self.terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "Poly":
        return self * (1 / Fraction(scalar))

    def concat(self, other: "Poly") -> "Poly":
        out: dict = {}
        for u, a in self.terms.items():
            for v, b in other.terms.items():
                _acc(out, u + v, a * b)
        return Poly._raw(out)

    def map(self, f: Callable[[Word], "Poly"]) -> "Poly":
        """Linear extension of a word map."""
        out: dict = {}
        for w, c in self.terms.items():
            for v, b in f(w).terms.items():
                _acc(out, v, c * b)
        return Poly._raw(out)

    def filter(self, pred: Callable[[Word], bool]) -> "Poly":
        return Poly._raw({w: c for w, c in self.terms.items() if pred(w)})

    def by_length(self) -> Dict[int, "Poly"]:
        out: Dict[int, dict] = {}
        for w, c in self.terms.items():
            out.setdefault(len(w), {})[w] = c
        return {n: Poly._raw(t) for n, t in out.items()}

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"{c}*{format_word(w)}" for w, c in self.sorted_items())

    def __repr__(self):
        return f"Poly({self})"


class TensorPoly:
    """Finite linear combination of word pairs ``u (x) v``."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms: Dict[Tuple[Word, Word], Fraction] = {}
        if terms:
            for k, c in dict(terms).items():
                _acc(self.terms, k, Fraction(c))

    @classmethod
    def _raw(cls, terms: dict) -> "TensorPoly":
        p = cls.__new__(cls)
        p.terms = terms
        return p

    @classmethod
    def from_polys(cls, left: Poly, right: Poly) -> "TensorPoly":
        out: dict = {}
        for u, a in left.items():
            for v, b in right.items():
                _acc(out, (u, v), a * b)
        return cls._raw(out)

    def items(self):
        return self.terms.items()

    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def coeff(self, u: Word, v: Word) -> Fraction:
        return self.terms.get((u, v), Fraction(0))

    def __eq__(self, other):
        if isinstance(other, TensorPoly):
            return self.terms == other.terms
        return NotImplemented

    def __add__(self, other):
        out = dict(self.terms)
        for k, c in other.terms.items():
            _acc(out, k, c)
        return TensorPoly._raw(out)

    def __sub__(self, other):
        out = dict(self.terms)
        for k, c in other.terms.items():
            _acc(out, k, -c)
        return TensorPoly._raw(out)

    def __mul__(self, scalar):
        if isinstance(scalar, TensorPoly):
            return NotImplemented
        s = Fraction(scalar)
        if not s:
            return TensorPoly()
        return TensorPoly._raw({k: c * s for k, c in self.terms.items()})

    __rmul__ = __mul__

    def product(self, other: "TensorPoly", mode: BracketMode, max_weight=None) -> "TensorPoly":
        """``(u (x) u')(v (x) v') = (u * v) (x) (u'v')`` with ``*`` the quasi-shuffle of ``mode``.

        Terms whose weight exceeds ``max_weight`` are dropped.
        """
        out: dict = {}
        for (u, u2), a in self.terms.items():
            wu = weight(u)
            for (v, v2), b in other.terms.items():
                if max_weight is not None and wu + weight(v) > max_weight:
                    continue
                right = u2 + v2
                for x, c in qshuffle(u, v, mode).items():
                    _acc(out, (x, right), a * b * c)
        return TensorPoly._raw(out)

    def map_left(self, f: Callable[[Word], Poly]) -> "TensorPoly":
        out: dict = {}
        for (u, v), c in self.terms.items():
            for x, b in f(u).items():
                _acc(out, (x, v), c * b)
        return TensorPoly._raw(out)

    def map_right(self, f: Callable[[Word], Poly]) -> "TensorPoly":
        out: dict = {}
        for (u, v), c in self.terms.items():
            for x, b in f(v).items():
                _acc(out, (u, x), c * b)
        return TensorPoly._raw(out)

    def filter(self, pred) -> "TensorPoly":
        return TensorPoly._raw({k: c for k, c in self.terms.items() if pred(*k)})

    def sorted_items(self):
        return sorted(self.terms.items(), key=lambda t: (word_key(t[0][1]), word_key(t[0][0])))

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(
            f"{c}*{format_word(u)}(x){format_word(v)}" for (u, v), c in self.sorted_items()
        )

    def __repr__(self):
        return f"TensorPoly({self})"


@lru_cache(maxsize=None)
def _qshuffle_terms(u: Word, v: Word, mode: BracketMode) -> Tuple[Tuple[Word, Fraction], ...]:
    if not u:
        return ((v, Fraction(1)),)
    if not v:
        return ((u, Fraction(1)),)
    a, b = u[-1], v[-1]
    out: dict = {}
    for x, c in _qshuffle_terms(u[:-1], v, mode):
        _acc(out, x + (a,), c)
    for x, c in _qshuffle_terms(u, v[:-1], mode):
        _acc(out, x + (b,), c)
    ab = bracket_letters(a, b, mode)
    if ab is not None:
        for x, c in _qshuffle_terms(u[:-1], v[:-1], mode):
            _acc(out, x + (ab,), c)
    return tuple(out.items())


def qshuffle(u: Word, v: Word, mode: BracketMode) -> Poly:
    """Quasi-shuffle ``ua * vb = (u * vb)a + (ua * v)b + (u * v)[a,b]``."""
    return Poly._raw(dict(_qshuffle_terms(u, v, mode)))


def shuffle(u: Word, v: Word) -> Poly:
    return qshuffle(u, v, ZERO)


def qshuffle_poly(p: Poly, q: Poly, mode: BracketMode) -> Poly:
    out: dict = {}
    for u, a in p.items():
        for v, b in q.items():
            for x, c in _qshuffle_terms(u, v, mode):
                _acc(out, x, a * b * c)
    return Poly._raw(out)


def pairing(p: Poly, q: Poly) -> Fraction:
    if len(q) < len(p):
        p, q = q, p
    return sum((c * q.coeff(w) for w, c in p.items()), Fraction(0))


def deconcat(w: Word) -> TensorPoly:
    return TensorPoly._raw({(w[:k], w[k:]): Fraction(1) for k in range(len(w) + 1)})


def _sub_multisets(m: Letter):
    """Distinct sub-multisets of a sorted tuple, as sorted tuples."""
    counts = sorted(Counter(m).items())
    ranges = [range(k + 1) for _, k in counts]
    for pick in itertools.product(*ranges):
        yield tuple(x for (x, _), k in zip(counts, pick) for _ in range(k))


def letter_splits(a: Letter, mode: BracketMode):
    """Ordered letter pairs (b, c) with ``[b, c] = a``; finite for canonical letters."""
    if mode is ZERO or len(a) < 2:
        return []
    if mode is CONTINUOUS:
        if len(a) == 2 and a[0] == a[1]:
            return [((a[0],), (a[0],))]
        return []
    out = []
    full = Counter(a)
    for b in _sub_multisets(a):
        if 0 < len(b) < len(a):
            c = tuple(sorted((full - Counter(b)).elements()))
            out.append((b, c))
    return out


def _letter_coproduct(a: Letter, mode: BracketMode) -> dict:
    out = {((a,), EMPTY): Fraction(1), (EMPTY, (a,)): Fraction(1)}
    for b, c in letter_splits(a, mode):
        _acc(out, ((b,), (c,)), Fraction(1))
    return out


def _conc_tensor(x: dict, y: dict) -> dict:
    out: dict = {}
    for (u, u2), a in x.items():
        for (v, v2), b in y.items():
            _acc(out, (u + v, u2 + v2), a * b)
    return out


def dequasishuffle(w: Word, mode: BracketMode) -> TensorPoly:
    """De-quasi-shuffle coproduct, built letterwise and multiplied out over concatenation."""
    out = {(EMPTY, EMPTY): Fraction(1)}
    for a in w:
        out = _conc_tensor(out, _letter_coproduct(a, mode))
    return TensorPoly._raw(out)


def deshuffle(w: Word) -> TensorPoly:
    out: dict = {}
    n = len(w)
    for mask in range(1 << n):
        left = tuple(w[i] for i in range(n) if mask >> i & 1)
        right = tuple(w[i] for i in range(n) if not mask >> i & 1)
        _acc(out, (left, right), Fraction(1))
    return TensorPoly._raw(out)


def extended_alphabet(d: int) -> Tuple[Letter, ...]:
    """Letters ``1..d`` followed by ``[1,1]..[d,d]``."""
    return tuple((i,) for i in range(1, d + 1)) + tuple((i, i) for i in range(1, d + 1))


def words_up_to(alphabet: Iterable[Letter], max_weight: int, by: str = "weight"):
    """All words over ``alphabet`` with weight (or length) at most ``max_weight``, sorted."""
    alphabet = tuple(alphabet)
    size = (lambda a: len(a)) if by == "weight" else (lambda a: 1)
    out = [EMPTY]
    frontier = [(EMPTY, 0)]
    while frontier:
        nxt = []
        for w, s in frontier:
            for a in alphabet:
                t = s + size(a)
                if t <= max_weight:
                    nxt.append((w + (a,), t))
        out.extend(w for w, _ in nxt)
        frontier = nxt
    return sorted(out, key=word_key)


def words_of_weight(alphabet: Iterable[Letter], n: int):
    return [w for w in words_up_to(alphabet, n) if weight(w) == n]
