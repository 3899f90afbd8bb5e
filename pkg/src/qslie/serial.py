"""JSON round trip for Lie series; rationals travel as exact ``"p/q"`` strings."""
from __future__ import annotations

import json
from typing import Any, Dict

from .freealg import Poly, format_coeff, format_word, parse_coeff, parse_word, word_key
from .hopf import LiePoly
from .strichartz import LieSeries, LieSeriesTerm


def series_to_dict(series: LieSeries) -> Dict[str, Any]:
    terms = []
    for t in sorted(series.terms, key=lambda t: word_key(t.base_word)):
        terms.append({
            "word": format_word(t.base_word),
            "integral": {format_word(w): format_coeff(c) for w, c in t.integral.sorted_items()},
            "bracket": [
                {"lword": format_word(w), "coeff": format_coeff(c)}
                for w, c in sorted(t.bracket.items(), key=lambda it: word_key(it[0]))
            ],
        })
    return {
        "flavor": series.flavor,
        "d": series.d,
        "weight": series.weight,
        "form": series.form,
        "terms": terms,
    }


def series_from_dict(data: Dict[str, Any]) -> LieSeries:
    try:
        terms = []
        for t in data["terms"]:
            integral = Poly({parse_word(w): parse_coeff(c) for w, c in t["integral"].items()})
            bracket = LiePoly({parse_word(b["lword"]): parse_coeff(b["coeff"]) for b in t["bracket"]})
            terms.append(LieSeriesTerm(parse_word(t["word"]), integral, bracket))
        return LieSeries(data["flavor"], int(data["d"]), int(data["weight"]), data.get("form", "expanded"), terms)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed series document: missing or invalid {exc}") from exc


def dumps(series: LieSeries) -> str:
    return json.dumps(series_to_dict(series), indent=2) + "\n"


def load(path: str) -> LieSeries:
    with open(path) as fh:
        return series_from_dict(json.load(fh))
