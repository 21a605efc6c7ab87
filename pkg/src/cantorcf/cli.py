"""Command-line front end: construct, verify, expand, cf and demo."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from fractions import Fraction
from pathlib import Path

import gmpy2

from . import build
from .build import EXHAUSTED, ConstructionParams
from .errors import CantorError, CertificateError, PsiSyntaxError
from .psi import short_int
from .verify import (
    CHECK_NAMES,
    VerifyOptions,
    continued_fraction,
    convergents_of,
    format_table,
    overall_pass,
    record_results,
    reports_to_json,
    verify_all,
    verify_text,
)
from .words import DIGIT_CHARS, DigitPair, compose, iter_digits

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3

log = logging.getLogger("cantorcf")


class UsageError(Exception):
    pass


def parse_int_list(text: str, what: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated integers, got {text!r}") from None
    if not vals:
        raise UsageError(f"{what} is empty")
    return vals


def parse_rational(text: str, what: str = "value") -> Fraction:
    t = text.strip()
    num, _, den = t.partition("/")
    if not num.isdigit() or (den and not den.isdigit()):
        raise UsageError(f"{what} must be an integer or 'a/b', got {text!r}")
    if den and int(den) == 0:
        raise UsageError(f"{what} has a zero denominator")
    return Fraction(int(num), int(den or 1))


def _fmt_int(n: int, full: bool) -> str:
    return gmpy2.digits(n) if full else short_int(n)


def decimal_digits(n: int) -> int:
    return len(gmpy2.digits(abs(n)))


def make_params(args) -> ConstructionParams:
    digits = parse_int_list(args.digits, "--digits")
    if len(set(digits)) != len(digits):
        raise UsageError("--digits lists a digit twice")
    pair = tuple(parse_int_list(args.pair, "--pair")) if args.pair else None
    if pair is not None and len(pair) != 2:
        raise UsageError("--pair needs exactly two digits")
    try:
        dp = DigitPair.from_digits(args.base, digits, pair)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    eps = parse_rational(args.epsilon, "--epsilon")
    try:
        return ConstructionParams(dp, args.psi, eps, args.mode, args.depth, args.max_bits)
    except PsiSyntaxError as exc:
        raise UsageError(f"--psi: {exc}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _summary(cert) -> list[str]:
    lines = [
        f"base {cert.b}, D={{{','.join(map(str, sorted(cert.pair.full)))}}}, pair ({cert.pair.d1},{cert.pair.d2}), "
        f"mode {cert.params.mode}, Psi = {cert.params.psi_text}",
        f"m1={cert.m1}, q0={short_int(cert.q0)}, c1={short_int(cert.c1)}",
    ]
    for st in cert.steps:
        lines.append(f"  step {st.i}: m={short_int(st.m)}, N={short_int(st.N)}, q has {decimal_digits(st.q)} digits")
    if cert.lookahead is not None:
        lines.append(f"  next: m={short_int(cert.lookahead[0])}, N={short_int(cert.lookahead[1])} (not built)")
    lines.append(f"status: {cert.status}")
    return lines


def _options(args) -> VerifyOptions:
    return VerifyOptions(digit_budget=args.digit_budget, max_precision=args.max_precision)


def cmd_construct(args) -> int:
    params = make_params(args)
    t0 = time.perf_counter()
    cert = build.run(params)
    opts = _options(args)
    reports = verify_all(cert, opts)
    cert = record_results(cert, reports, opts)
    if args.out:
        build.save(cert, args.out)
    else:
        sys.stdout.write(build.dumps(cert))
    out = sys.stderr if not args.out else sys.stdout
    for line in _summary(cert):
        print(line, file=out)
    ok = overall_pass(reports)
    print(f"verification: {'pass' if ok else 'FAIL'} ({time.perf_counter() - t0:.2f}s)", file=out)
    if not ok:
        return EXIT_FAIL
    return EXIT_BUDGET if cert.status == EXHAUSTED else EXIT_OK


def cmd_verify(args) -> int:
    checks = None
    if args.checks:
        checks = frozenset(c.strip() for c in args.checks.split(",") if c.strip())
        unknown = checks - set(CHECK_NAMES)
        if unknown:
            raise UsageError(f"unknown checks: {', '.join(sorted(unknown))}")
    try:
        text = _read_cert_text(args.certificate)
    except OSError as exc:
        raise UsageError(f"cannot read {args.certificate}: {exc.strerror or exc}") from None
    opts = VerifyOptions(args.digit_budget, args.max_precision, checks)
    reports = verify_text(text, opts)
    print(reports_to_json(reports) if args.json else format_table(reports))
    ok = overall_pass(reports)
    if not args.json:
        print(f"overall: {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def _read_cert_text(path) -> str:
    import gzip

    data = Path(path).read_bytes()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return data.decode()


def _load(path):
    try:
        return build.loads(_read_cert_text(path))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def guaranteed_prefix(cert) -> tuple[list, int]:
    """Words whose concatenation starts every expansion of xi, and its length."""
    last = cert.steps[-1]
    if cert.lookahead is not None:
        word = compose(last.word, cert.lookahead[0], cert.pair)
        return [cert.v, word], cert.m1 + cert.lookahead[1]
    return [cert.v, last.word], cert.m1 + last.N


def expand_xi(cert, k: int) -> tuple[str, int]:
    words, guarantee = guaranteed_prefix(cert)
    n = min(k, guarantee)
    out: list[str] = []
    for w in words:
        for d in iter_digits(w):
            if len(out) >= n:
                break
            out.append(DIGIT_CHARS[d])
    return "".join(out), guarantee


def cmd_expand(args) -> int:
    if args.count < 0:
        raise UsageError("K must be non-negative")
    cert = _load(args.certificate)
    digits, guarantee = expand_xi(cert, args.count)
    print(digits)
    if args.count > guarantee:
        print(f"notice: only {guarantee} digits are certified at depth {cert.depth}", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_cf(args) -> int:
    if args.certificate:
        cert = _load(args.certificate)
        idx = args.index if args.index is not None else cert.depth
        if not 1 <= idx <= cert.depth:
            raise UsageError(f"--index must lie in 1..{cert.depth}")
        p, q = cert.steps[idx - 1].p, cert.steps[idx - 1].q
    else:
        if args.p is None or args.q is None:
            raise UsageError("give --p and --q, or a certificate")
        p, q = args.p, args.q
    if not 0 <= p < q or gmpy2.gcd(p, q) != 1:
        raise UsageError("need 0 <= p < q with gcd(p, q) = 1")
    quotients = continued_fraction(p, q)
    head = _fmt_int(quotients[0], args.full)
    tail = ", ".join(_fmt_int(a, args.full) for a in quotients[1:])
    print(f"[{head}; {tail}]" if tail else f"[{head}]")
    for cp, cq in convergents_of(quotients):
        print(f"{_fmt_int(cp, args.full)}/{_fmt_int(cq, args.full)}")
    return EXIT_OK


# what each check certifies, in words
STORY = {
    "initial": "m1 makes u1 divide b^m1 and u2*q1 = b^(m1+1) - 1; q0*p1 is a unit mod q1",
    "structure": "N and the words chain as w_(i+1) = w_i^m w_i' with alternating signs",
    "budget": "status agrees with the depth reached and the bit budget",
    "selection": "each m is the least admissible candidate meeting the gap condition",
    "identity": "b^m1 (b^N_i - 1) = u q_(i-1) q_i exactly",
    "determinant": "consecutive fractions have determinant +-1, so they are neighbours",
    "membership": "p_i/q_i is the periodic expansion v w_i w_i ... with digits from D",
    "membership_digits": "long division reproduces those digits",
    "gap_bounds": "1/(q_i q_(i+1)) < Psi(q_i) and the alternating tail sandwich",
    "growth": "b^(m_i N_(i-1)) <= q_i < b^N_i",
    "theorem_upper": "|xi - p/q| < min(Psi(q), q^-q)",
    "theorem_lower": "|xi - p/q| > Psi(q) q^-(1+eps)q from a threshold index on",
    "convergent_chain": "the Euclidean algorithm finds exactly these fractions as convergents",
    "recorded": "results stored in the certificate are reproduced",
}

DEMOS = {
    "0,1": dict(base=3, digits="0,1", psi="1", mode="relaxed", depth=3),
    "0,2": dict(base=3, digits="0,2", psi="1", mode="strict", depth=2),
}


def cmd_demo(args) -> int:
    keys = list(DEMOS)
    if args.only:
        wanted = ",".join(str(d) for d in parse_int_list(args.only, "--only"))
        if wanted not in DEMOS:
            raise UsageError(f"--only must be one of {', '.join(DEMOS)}")
        keys = [wanted]
    results = []
    all_ok = True
    for key in keys:
        spec = DEMOS[key]
        dp = DigitPair.from_digits(spec["base"], parse_int_list(spec["digits"], "digits"))
        params = ConstructionParams(dp, spec["psi"], Fraction(1), spec["mode"], spec["depth"])
        t0 = time.perf_counter()
        cert = build.run(params)
        reports = verify_all(cert)
        ok = overall_pass(reports)
        all_ok &= ok
        elapsed = time.perf_counter() - t0
        results.append((key, cert, reports, ok, elapsed))
    if args.json:
        doc = [
            {
                "digits": key,
                "mode": cert.params.mode,
                "q_digits": [decimal_digits(st.q) for st in cert.steps],
                "overall": "pass" if ok else "fail",
                "seconds": round(elapsed, 3),
                "checks": [r.to_dict() for r in reports],
            }
            for key, cert, reports, ok, elapsed in results
        ]
        print(json.dumps(doc, indent=2))
    else:
        for key, cert, reports, ok, elapsed in results:
            print(f"== D={{{key}}} ==")
            for line in _summary(cert):
                print(line)
            seen = set()
            for r in reports:
                if r.check in seen:
                    continue
                seen.add(r.check)
                group = [x for x in reports if x.check == r.check]
                verdicts = sorted({x.verdict.value for x in group})
                print(f"  {r.check:<18} {'/'.join(verdicts):<14} {STORY.get(r.check, '')}")
            print(f"overall: {'pass' if ok else 'FAIL'} in {elapsed:.2f}s\n")
    return EXIT_OK if all_ok else EXIT_FAIL


def _add_verify_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--digit-budget", type=int, default=10**5, help="digits for the long-division check")
    p.add_argument("--max-precision", type=int, default=4096, help="bits for log comparisons")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cantorcf", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="run the construction and write a certificate")
    c.add_argument("--base", type=int, required=True)
    c.add_argument("--digits", required=True, help="digit set D, e.g. 0,2")
    c.add_argument("--pair", help="the two digits to use, default (0,1) or the two smallest")
    c.add_argument("--psi", default="1", help="gap function of q, e.g. 'min(1, q^-2)'")
    c.add_argument("--epsilon", default="1", help="integer or a/b")
    c.add_argument("--mode", choices=build.MODES, default=build.STRICT)
    c.add_argument("--depth", type=int, default=2)
    c.add_argument("--max-bits", type=int, default=build.DEFAULT_MAX_BITS)
    c.add_argument("--out", help="certificate path (.gz compresses); stdout if omitted")
    _add_verify_opts(c)
    c.set_defaults(func=cmd_construct)

    v = sub.add_parser("verify", help="check a certificate")
    v.add_argument("certificate")
    v.add_argument("--checks", help="comma-separated subset of: " + ", ".join(CHECK_NAMES))
    v.add_argument("--json", action="store_true")
    _add_verify_opts(v)
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("expand", help="print the first K digits of xi")
    e.add_argument("certificate")
    e.add_argument("count", type=int, metavar="K")
    e.set_defaults(func=cmd_expand)

    f = sub.add_parser("cf", help="continued fraction and convergents")
    f.add_argument("certificate", nargs="?")
    f.add_argument("--index", type=int)
    f.add_argument("--p", type=int)
    f.add_argument("--q", type=int)
    f.add_argument("--full", action="store_true", help="print big integers in full")
    f.set_defaults(func=cmd_cf)

    d = sub.add_parser("demo", help="construct and verify the two worked base-3 examples")
    d.add_argument("--only", help="0,1 or 0,2")
    d.add_argument("--json", action="store_true")
    d.set_defaults(func=cmd_demo)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cantorcf {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CertificateError as exc:
        print(f"cantorcf {args.command}: bad certificate: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except CantorError as exc:
        print(f"cantorcf {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
