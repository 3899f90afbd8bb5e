"""Command-line entry point: ``qslie {alg,series,verify,num}``.

Exit status is 0 on success, 1 when a verification or comparison fails and 2
for usage, syntax or configuration errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

import jsonschema

from . import hoffman, hopf, serial, strichartz, verify
from .freealg import (
    CONTINUOUS,
    FREE,
    Poly,
    TensorPoly,
    WordSyntaxError,
    deconcat,
    dequasishuffle,
    format_coeff,
    format_word,
    parse_word,
    qshuffle,
    shuffle,
)
from .semimartingale import ConfigError, InvariantConfig, StrongErrorConfig, invariant_study, strong_error_study

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _word(text: str, mode):
    try:
        w = parse_word(text)
    except WordSyntaxError as exc:
        raise UsageError(f"cannot parse word: {exc}") from exc
    if mode is CONTINUOUS:
        for a in w:
            if len(a) > 2 or (len(a) == 2 and a[0] != a[1]):
                raise UsageError(f"letter [{','.join(map(str, a))}] in {text!r} is not allowed in continuous mode")
    return w


def _poly_lines(p: Poly) -> List[str]:
    return [f"{c}*{format_word(w)}" for w, c in p.sorted_items()]


def _poly_json(p: Poly) -> dict:
    return {format_word(w): format_coeff(c) for w, c in p.sorted_items()}


def _tensor_lines(t: TensorPoly) -> List[str]:
    return [f"{c}*{format_word(u)} (x) {format_word(v)}" for (u, v), c in _tensor_sorted(t)]


def _tensor_sorted(t: TensorPoly):
    from .freealg import word_key

    return sorted(t.items(), key=lambda it: (word_key(it[0][0]), word_key(it[0][1])))


def cmd_alg(args) -> int:
    mode = CONTINUOUS if args.mode == "continuous" else FREE
    op = args.op
    if op in ("qshuffle", "shuffle"):
        if len(args.words) != 2:
            raise UsageError(f"{op} takes two words")
        u, v = (_word(x, mode) for x in args.words)
        result = qshuffle(u, v, mode) if op == "qshuffle" else shuffle(u, v)
    else:
        if len(args.words) != 1:
            raise UsageError(f"{op} takes one word")
        w = _word(args.words[0], mode)
        result = {
            "logstar": lambda: hopf.log_star(w, mode),
            "hexp": lambda: hoffman.hoffman_exp(w, mode),
            "hlog": lambda: hoffman.hoffman_log(w, mode),
            "decon": lambda: deconcat(w),
            "dequasi": lambda: dequasishuffle(w, mode),
        }[op]()
    if isinstance(result, TensorPoly):
        if args.json:
            body = {f"{format_word(u)} (x) {format_word(v)}": format_coeff(c) for (u, v), c in _tensor_sorted(result)}
            print(json.dumps(body, indent=2))
        else:
            for line in _tensor_lines(result):
                print(line)
    elif args.json:
        print(json.dumps(_poly_json(result), indent=2))
    else:
        for line in _poly_lines(result):
            print(line)
    return EXIT_OK


def cmd_series(args) -> int:
    if args.flavor == "check":
        if len(args.files) != 2:
            raise UsageError("series check takes two files")
        try:
            a, b = (serial.load(f) for f in args.files)
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
        diff = a.canonical() - b.canonical()
        if not diff:
            print(f"MATCH: {len(a.canonical().terms)} canonical terms")
            return EXIT_OK
        (u, v), c = _tensor_sorted(diff)[0]
        print(f"MISMATCH at {format_word(u)} (x) {format_word(v)}: difference {c}")
        return EXIT_FAIL
    if args.files:
        raise UsageError("unexpected positional arguments")
    if args.d < 1 or args.weight < 1:
        raise UsageError("--d and --weight must be positive")
    if args.flavor == "stratonovich":
        series = strichartz.strat_lie_series(args.d, args.weight)
    else:
        series = strichartz.ito_lie_series(args.d, args.weight, args.form)
    text = serial.dumps(series)
    if args.out:
        try:
            with open(args.out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise UsageError(f"cannot write {args.out}: {exc}") from exc
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.scope == "algebra":
        report = verify.algebra_suite(args.max_weight)
    elif args.scope == "coeffs":
        report = verify.coeffs_suite(args.max_p)
    else:
        report = verify.coincidence_suite(args.d, args.max_weight)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_FAIL


_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["study", "d", "matrices", "y0"],
    "additionalProperties": False,
    "properties": {
        "study": {"enum": ["strong_error", "invariant"]},
        "d": {"type": "integer", "minimum": 1},
        "matrices": {"type": "array", "items": _MATRIX, "minItems": 1},
        "y0": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "step_exponents": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2},
        "refinement": {"type": "integer", "minimum": 1},
        "paths": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "weights": {"type": "array", "items": {"enum": [1, 2]}, "minItems": 1},
        "flavor": {"enum": ["ito", "stratonovich"]},
        "batch": {"type": "integer", "minimum": 1},
    },
}


def _field_path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else p)
    return out or "<root>"


def validate_config(data) -> object:
    """Check a config document; raises ``ConfigError`` naming the offending field."""
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(_field_path(exc.absolute_path), exc.message) from None
    d = data["d"]
    mats = data["matrices"]
    if len(mats) != d:
        raise ConfigError("matrices", f"expected {d} matrices, got {len(mats)}")
    n = len(data["y0"])
    for i, m in enumerate(mats):
        if len(m) != n:
            raise ConfigError(f"matrices[{i}]", f"expected {n} rows to match y0")
        for r, row in enumerate(m):
            if len(row) != n:
                raise ConfigError(f"matrices[{i}][{r}]", f"expected {n} entries")
    ref = data.get("refinement")
    if ref is not None and ref & (ref - 1):
        raise ConfigError("refinement", "must be a power of two so step counts stay powers of two")
    kwargs = {k: v for k, v in data.items() if k not in ("study", "d")}
    for key in ("step_exponents", "weights"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    if data["study"] == "strong_error":
        return StrongErrorConfig(**kwargs)
    return InvariantConfig(**kwargs)


def _json_ready(obj):
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    return obj


def cmd_num(args) -> int:
    try:
        with open(args.config) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    try:
        config = validate_config(data)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if isinstance(config, StrongErrorConfig):
        result = strong_error_study(config, workers=args.workers)
    else:
        result = invariant_study(config, workers=args.workers)
    result["config"] = data
    text = json.dumps(_json_ready(result), indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qslie", description="Quasi-shuffle algebra and Lie-series tools.")
    sub = parser.add_subparsers(dest="command", required=True)

    alg = sub.add_parser("alg", help="algebra queries on words")
    alg.add_argument("op", choices=["qshuffle", "shuffle", "logstar", "hexp", "hlog", "decon", "dequasi"])
    alg.add_argument("words", nargs="+")
    alg.add_argument("--mode", choices=["continuous", "free"], default="free")
    alg.add_argument("--json", action="store_true", help="print a JSON map with p/q coefficients")
    alg.set_defaults(func=cmd_alg)

    ser = sub.add_parser("series", help="generate, serialize and compare Lie series")
    ser.add_argument("flavor", choices=["stratonovich", "ito", "check"])
    ser.add_argument("files", nargs="*", help="two series files for 'check'")
    ser.add_argument("--d", type=int, default=2)
    ser.add_argument("--weight", type=int, default=2)
    ser.add_argument("--form", choices=["expanded", "resummed"], default="expanded")
    ser.add_argument("--out")
    ser.set_defaults(func=cmd_series)

    ver = sub.add_parser("verify", help="run exact oracle suites")
    ver.add_argument("scope", choices=["algebra", "coeffs", "coincidence"])
    ver.add_argument("--max-weight", type=int, default=None)
    ver.add_argument("--max-p", type=int, default=4)
    ver.add_argument("--d", type=int, default=2)
    ver.set_defaults(func=cmd_verify)

    num = sub.add_parser("num", help="run a numerical study from a JSON config")
    num.add_argument("config")
    num.add_argument("--out")
    num.add_argument("--workers", type=int, default=None, help="threads; default from QSLIE_THREADS")
    num.set_defaults(func=cmd_num)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "scope", None) and args.max_weight is None:
        args.max_weight = 4 if args.scope == "algebra" else 3
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
