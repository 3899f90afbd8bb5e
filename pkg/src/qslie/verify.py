"""Exact oracle suites behind ``qslie verify``.

Every check stops at its first mismatch and keeps the offending input, which is
the smallest one in enumeration order since words are visited by weight.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Callable, Iterable, List, Optional

from . import freealg as F
from . import hoffman as H
from . import hopf as P
from . import strichartz as S
from .freealg import CONTINUOUS, FREE, format_word


@dataclass
class CheckResult:
    name: str
    checked: int = 0
    failure: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.failure is None


@dataclass
class SuiteReport:
    suite: str
    results: List[CheckResult] = field(default_factory=list)
    summary: str = ""

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def lines(self) -> List[str]:
        out = []
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            tail = f"  counterexample: {r.failure}" if r.failure else ""
            out.append(f"{status} {r.name} ({r.checked} cases){tail}")
        if self.summary:
            out.append(self.summary)
        out.append(f"{self.suite}: {'PASS' if self.passed else 'FAIL'}")
        return out


def _run(name: str, cases: Iterable, check: Callable) -> CheckResult:
    res = CheckResult(name)
    for case in cases:
        res.checked += 1
        msg = check(case)
        if msg:
            res.failure = msg
            break
    return res


def _fmt(*words) -> str:
    return ", ".join(format_word(w) for w in words)


def free_alphabet(d: int, max_weight: int):
    """Free-mode letters: every multiset of base indices of size at most ``max_weight``."""
    out = []
    for k in range(1, max_weight + 1):
        out.extend(combinations_with_replacement(range(1, d + 1), k))
    return tuple(out)


def mode_alphabet(mode, d: int, max_weight: int):
    return F.extended_alphabet(d) if mode is CONTINUOUS else free_alphabet(d, max_weight)


def _nonempty(alphabet, n, by="weight"):
    return [w for w in F.words_up_to(alphabet, n, by=by) if w]


def algebra_suite(max_weight: int = 4, d: int = 2) -> SuiteReport:
    n = max_weight
    rep = SuiteReport("algebra")
    letters = tuple((i,) for i in range(1, d + 1))
    base_words = [w for w in F.words_up_to(letters, n) if w]
    for mode in (FREE, CONTINUOUS):
        tag = mode.name.lower()
        alpha = mode_alphabet(mode, d, n)
        words = _nonempty(alpha, n)

        pairs = [(u, v) for u in words for v in words if F.weight(u) + F.weight(v) <= n]
        rep.results.append(_run(
            f"quasi-shuffle commutativity [{tag}]", pairs,
            lambda uv: None if F.qshuffle(*uv, mode) == F.qshuffle(uv[1], uv[0], mode) else _fmt(*uv)))

        triples = [(u, v, w) for (u, v) in pairs for w in words if F.weight(u) + F.weight(v) + F.weight(w) <= n]

        def assoc(t, mode=mode):
            u, v, w = t
            lhs = F.qshuffle_poly(F.qshuffle(u, v, mode), F.Poly.from_word(w), mode)
            rhs = F.qshuffle_poly(F.Poly.from_word(u), F.qshuffle(v, w, mode), mode)
            return None if lhs == rhs else _fmt(u, v, w)

        rep.results.append(_run(f"quasi-shuffle associativity [{tag}]", triples, assoc))

        def iso(uv, mode=mode):
            u, v = uv
            lhs = F.shuffle(u, v).map(lambda x: H.hoffman_exp(x, mode))
            rhs = F.qshuffle_poly(H.hoffman_exp(u, mode), H.hoffman_exp(v, mode), mode)
            return None if lhs == rhs else _fmt(u, v)

        iso_pairs = [(u, v) for u in base_words for v in base_words if len(u) + len(v) <= n]
        rep.results.append(_run(f"Hoffman exponential is a shuffle-to-quasi-shuffle morphism [{tag}]", iso_pairs, iso))

        def roundtrip(w, mode=mode):
            a = H.hoffman_exp(w, mode).map(lambda x: H.hoffman_log(x, mode))
            b = H.hoffman_log(w, mode).map(lambda x: H.hoffman_exp(x, mode))
            c = H.hoffman_exp_adjoint(w, mode).map(lambda x: H.hoffman_log_adjoint(x, mode))
            one = F.Poly.from_word(w)
            return None if a == one and b == one and c == one else _fmt(w)

        rep.results.append(_run(f"exp/log and adjoint round trips [{tag}]", words, roundtrip))

        small = [w for w in words if F.weight(w) <= min(n, 3)]

        def duality(uv, mode=mode):
            u, v = uv
            ok = (F.pairing(H.hoffman_exp_adjoint(u, mode), F.Poly.from_word(v))
                  == F.pairing(F.Poly.from_word(u), H.hoffman_exp(v, mode)))
            ok = ok and (F.pairing(H.hoffman_log_adjoint(u, mode), F.Poly.from_word(v))
                         == F.pairing(F.Poly.from_word(u), H.hoffman_log(v, mode)))
            return None if ok else _fmt(u, v)

        dual_pairs = [(u, v) for u in small for v in small if F.weight(u) == F.weight(v)]
        rep.results.append(_run(f"adjoint duality under the word pairing [{tag}]", dual_pairs, duality))

        def derivation(uv, mode=mode):
            u, v = uv
            return None if not F.qshuffle(u, v, mode).map(lambda x: P.log_star(x, mode)) else _fmt(u, v)

        rep.results.append(_run(f"log_star vanishes on products [{tag}]", pairs, derivation))

        def primitive(k, mode=mode, alpha=alpha):
            adj = P.adjoint_matrix(lambda x: P.log_star(x, mode), k, alpha)
            for w in F.words_of_weight(alpha, k):
                if not P.is_quasi_primitive(adj(w), mode):
                    return _fmt(w)
            return None

        rep.results.append(_run(f"log_star adjoint outputs are primitive [{tag}]", range(1, n + 1), primitive))

    lengths = [w for w in F.words_up_to(letters, n, by="length") if w]
    rep.results.append(_run(
        "Dynkin operator is idempotent", lengths,
        lambda w: None if P.dynkin(P.dynkin_word(w)) == P.dynkin_word(w) else _fmt(w)))

    def eul_lie(w):
        e = P.eulerian(w)
        ok = P.is_lie_element(e, "dynkin") and P.is_lie_element(e, "friedrichs")
        return None if ok else _fmt(w)

    rep.results.append(_run("Eulerian outputs are Lie elements", lengths, eul_lie))
    return rep


def coeffs_suite(max_p: int = 4, d: int = 3) -> SuiteReport:
    rep = SuiteReport("coeffs")

    def roundtrip(z):
        sigma = S.surjection_to_quasiperm(z)
        return None if S.quasiperm_to_surjection(sigma) == z else f"{''.join(map(str, z))} -> {S.format_quasiperm(sigma)}"

    counts = []
    res = CheckResult("surjection <-> quasi-permutation round trip")
    for p in range(1, max_p + 1):
        sub = _run("", S.surjections(p), roundtrip)
        res.checked += sub.checked
        counts.append(sub.checked)
        if sub.failure and not res.failure:
            res.failure = sub.failure
    rep.results.append(res)

    letters = tuple((i,) for i in range(1, d + 1))
    for mode in (FREE, CONTINUOUS):
        tag = mode.name.lower()
        words = [w for w in F.words_up_to(letters, max_p, by="length") if w]
        rep.results.append(_run(
            f"log_star from surjection coefficients [{tag}]", words,
            lambda w, mode=mode: None if S.log_star_via_surjections(w, mode) == P.log_star(w, mode) else _fmt(w)))
        cases = [(k, w) for w in words for k in range(1, min(len(w), 4) + 1)]
        rep.results.append(_run(
            f"convolution powers from quasi-descents [{tag}]", cases,
            lambda kw, mode=mode: None if S.conv_power_via_descents(kw[0], kw[1], mode)
            == P.conv_power_qshuffle(kw[0], kw[1], mode) else f"k={kw[0]}, {_fmt(kw[1])}"))

    words = [w for w in F.words_up_to(letters, max_p, by="length") if w]
    rep.results.append(_run(
        "shuffle logarithm from permutation coefficients", words,
        lambda w: None if S.log_shuffle_via_permutations(w) == P.log_shuffle(w) else _fmt(w)))
    rep.summary = "surjections checked: " + "+".join(str(c) for c in reversed(counts))
    return rep


def coincidence_suite(d: int = 2, max_weight: int = 3) -> SuiteReport:
    rep = SuiteReport("coincidence")
    cases = [(dd, n) for dd in range(1, d + 1) for n in range(1, max_weight + 1)]

    def first_diff(a: F.TensorPoly, b: F.TensorPoly) -> Optional[str]:
        diff = a - b
        if not diff:
            return None
        (u, v), c = diff.sorted_items()[0]
        return f"{format_word(u)} (x) {format_word(v)} differs by {c}"

    def make(label, other):
        def check(case):
            dd, n = case
            base = S.strat_lie_series(dd, n).canonical()
            msg = first_diff(base, other(dd, n))
            return f"d={dd}, weight={n}: {msg}" if msg else None
        return _run(label, cases, check)

    rep.results.append(make("Stratonovich vs Ito expanded", lambda dd, n: S.ito_lie_series(dd, n, S.EXPANDED).canonical()))
    rep.results.append(make("Stratonovich vs Ito resummed", lambda dd, n: S.ito_lie_series(dd, n, S.RESUMMED).canonical()))
    rep.results.append(make("Stratonovich vs log of the Ito flowmap", S.direct_ito_log))
    rep.results.append(make("Stratonovich vs log of the Stratonovich flowmap", S.direct_strat_log))
    return rep
