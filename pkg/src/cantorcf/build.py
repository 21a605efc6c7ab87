"""The construction: initial data, choice of the m-sequence, exact recurrences.

A run produces a :class:`Certificate` holding every p_i/q_i in exact integer
form together with the compressed words w_i, so that :mod:`cantorcf.verify`
can re-check everything without trusting this module.
"""

from __future__ import annotations

import gzip
import json
import logging
import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import gcd
from pathlib import Path

import gmpy2

from .errors import CertificateError, ConstructionInvariantError
from .numth import choose_m1, mod_inverse, split_u
from .psi import ExpForm, PsiExpr, eval_psi, parse_psi, ratio_below, short_int
from .words import (
    Composite,
    DigitPair,
    DigitWord,
    Literal,
    compose,
    periodic_to_rational,
)

log = logging.getLogger(__name__)

STRICT = "strict"
RELAXED = "relaxed"
MODES = (STRICT, RELAXED)
COMPLETE = "complete"
EXHAUSTED = "budget-exhausted"
CERT_VERSION = 1
DEFAULT_MAX_BITS = 10**6


@dataclass(frozen=True)
class ConstructionParams:
    pair: DigitPair
    psi_text: str = "1"
    epsilon: Fraction = Fraction(1)
    mode: str = STRICT
    max_depth: int = 3
    max_bits: int = DEFAULT_MAX_BITS
    psi: PsiExpr = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        object.__setattr__(self, "psi", parse_psi(self.psi_text))
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.max_bits < 64:
            raise ValueError("max_bits must be at least 64")


@dataclass(frozen=True)
class ConstructionStep:
    i: int
    m: int
    N: int
    sigma: int
    p: int
    q: int
    word: DigitWord = field(repr=False)


@dataclass(frozen=True)
class Certificate:
    params: ConstructionParams
    m1: int
    N: int
    u: int
    u1: int
    u2: int
    q0: int
    v: Literal
    steps: tuple
    status: str = COMPLETE
    c1: int = 0
    # (m, N) of the step after the last one, chosen but never built
    lookahead: tuple | None = None
    recorded: tuple = ()
    recorded_options: dict | None = None

    @property
    def pair(self) -> DigitPair:
        return self.params.pair

    @property
    def b(self) -> int:
        return self.params.pair.b

    @property
    def depth(self) -> int:
        return len(self.steps)


def sigma_of(word: DigitWord, pair: DigitPair) -> int:
    """+1 when the next correction pushes the value up (word ends in d1)."""
    return 1 if word.last_digit == pair.d1 else -1


def bits_upper(n: int, b: int) -> int:
    """An upper bound on the bit length of any q < b**n."""
    if n > 1 << 40:
        return n * b.bit_length()
    return math.ceil(n * math.log2(b)) + 1


def initial_data(params: ConstructionParams):
    """Return (m1, v, w1, step1, q0) and check condition (i)."""
    pair = params.pair
    b = pair.b
    m1, n = choose_m1(pair)
    s = split_u(pair.u, b)
    v = Literal.of([pair.d1] * m1)
    w1 = Literal.of([pair.d2] + [pair.d1] * m1)
    x = periodic_to_rational(v, w1, b)
    p1, q1 = x.numerator, x.denominator
    q0 = b**m1 // s.u1
    if b**m1 % s.u1 or s.u2 * q1 != b ** (m1 + 1) - 1:
        raise ConstructionInvariantError("condition (i) fails for the chosen m1")
    if gcd(q0 * p1, q1) != 1:
        raise ConstructionInvariantError("q0*p1 is not a unit modulo q1")
    step1 = ConstructionStep(1, m1, n, sigma_of(w1, pair), p1, q1, w1)
    return m1, v, w1, step1, q0


def m2_residue(q0: int, first: ConstructionStep) -> int:
    """r in [0, q1) with q0*p1*(m2 + 1) = -sigma1 (mod q1) exactly when m2 = r (mod q1)."""
    q1 = first.q
    return (-first.sigma * mod_inverse(q0 * first.p, q1) - 1) % q1


def _search_start(cert: Certificate) -> tuple[int, int]:
    steps = cert.steps
    last = steps[-1]
    if len(steps) == 1:
        r = m2_residue(cert.q0, last)
        if cert.params.mode == STRICT:
            return r + last.q, last.q
        return (r or last.q), last.q
    return last.q, last.q


def gap_holds(cert: Certificate, m: int) -> bool:
    """1/(q_i q_{i+1}) < Psi(q_i) for the candidate m_{i+1}, via the closed form."""
    last = cert.steps[-1]
    bound = eval_psi(cert.params.psi, last.q, cert.b)
    return ratio_below(cert.u, cert.m1, (m + 1) * last.N, bound)


def next_m(cert: Certificate) -> int:
    """Smallest admissible m_{i+1} satisfying the gap condition for the last step i."""
    start, stride = _search_start(cert)
    last = cert.steps[-1]
    bound = eval_psi(cert.params.psi, last.q, cert.b)

    def ok(j: int) -> bool:
        return ratio_below(cert.u, cert.m1, (start + j * stride + 1) * last.N, bound)

    if ok(0):
        return start
    # the gap shrinks as m grows, so gallop then bisect
    lo, hi = 0, 1
    while not ok(hi):
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return start + hi * stride


def step(cert: Certificate, m: int) -> ConstructionStep:
    steps = cert.steps
    b, pair = cert.b, cert.pair
    cur = steps[-1]
    q_prev = cert.q0 if len(steps) == 1 else steps[-2].q
    n_next = (m + 1) * cur.N
    block = b**cur.N - 1
    s_next, rem = divmod(b**n_next - 1, block)
    if rem:
        raise ConstructionInvariantError("geometric sum is not an integer")
    numerator = q_prev * cur.p * s_next + cur.sigma
    p_next, rem = divmod(numerator, cur.q)
    if rem:
        raise ConstructionInvariantError(
            f"q_{cur.i} does not divide R_{cur.i + 1}; sign or congruence is wrong"
        )
    word = compose(cur.word, m, pair)
    sigma = -cur.sigma
    if sigma != sigma_of(word, pair):
        raise ConstructionInvariantError("sign does not follow the last digit of the word")
    return ConstructionStep(cur.i + 1, m, n_next, sigma, p_next, q_prev * s_next, word)


def run(params: ConstructionParams) -> Certificate:
    pair = params.pair
    b = pair.b
    m1, v, w1, step1, q0 = initial_data(params)
    s = split_u(pair.u, b)
    c1 = 1 if (pair.d1, pair.d2) == (0, 1) and 0 in pair.full else step1.q
    cert = Certificate(params, m1, step1.N, pair.u, s.u1, s.u2, q0, v, (step1,), COMPLETE, c1)
    while True:
        m = next_m(cert)
        n_next = (m + 1) * cert.steps[-1].N
        cert = replace(cert, lookahead=(m, n_next))
        if cert.depth >= params.max_depth:
            break
        if bits_upper(n_next, b) > params.max_bits:
            log.info("step %d would need about %s bits; stopping", cert.depth + 1, short_int(bits_upper(n_next, b)))
            cert = replace(cert, status=EXHAUSTED)
            break
        nxt = step(cert, m)
        log.debug("built step %d: m=%s, q has %d bits", nxt.i, short_int(m), nxt.q.bit_length())
        cert = replace(cert, steps=cert.steps + (nxt,), lookahead=None)
    return cert


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

_INT_RE = re.compile(r"-?\d+\Z")


def _dec(n: int) -> str:
    return gmpy2.digits(n)


def _int(text, where: str) -> int:
    if not isinstance(text, str) or not _INT_RE.match(text):
        raise CertificateError(f"{where}: expected a decimal integer string, got {str(text)[:40]!r}")
    return int(gmpy2.mpz(text))


def _rational(text, where: str) -> Fraction:
    if not isinstance(text, str) or not re.match(r"\d+(/\d+)?\Z", text):
        raise CertificateError(f"{where}: expected a rational 'a/b', got {text!r}")
    return Fraction(text)


def to_dict(cert: Certificate) -> dict:
    p = cert.params
    steps = []
    for st in cert.steps:
        if st.i == 1:
            word = {"literal": st.word.text}
        else:
            word = {"base_word": st.i - 1, "power": _dec(st.word.power), "flip": st.word.flip}
        steps.append(
            {"i": st.i, "m": _dec(st.m), "N": _dec(st.N), "sigma": st.sigma,
             "p": _dec(st.p), "q": _dec(st.q), "word": word}
        )
    doc = {
        "version": CERT_VERSION,
        "b": cert.b,
        "digits": sorted(p.pair.full),
        "pair": [p.pair.d1, p.pair.d2],
        "mode": p.mode,
        "psi": p.psi_text,
        "epsilon": f"{p.epsilon.numerator}/{p.epsilon.denominator}",
        "max_depth": p.max_depth,
        "max_bits": p.max_bits,
        "m1": _dec(cert.m1),
        "N": _dec(cert.N),
        "u": _dec(cert.u),
        "u1": _dec(cert.u1),
        "u2": _dec(cert.u2),
        "q0": _dec(cert.q0),
        "v": cert.v.text,
        "c1": _dec(cert.c1),
        "status": cert.status,
        "steps": steps,
        "next": None if cert.lookahead is None else {"m": _dec(cert.lookahead[0]), "N": _dec(cert.lookahead[1])},
    }
    if cert.recorded_options is not None:
        doc["verification"] = {"options": cert.recorded_options, "results": [dict(r) for r in cert.recorded]}
    return doc


def _get(doc: dict, key: str, where: str = ""):
    if not isinstance(doc, dict) or key not in doc:
        raise CertificateError(f"{where or 'certificate'}: missing field {key!r}")
    return doc[key]


def from_dict(doc: dict) -> Certificate:
    if _get(doc, "version") != CERT_VERSION:
        raise CertificateError(f"unsupported certificate version {doc.get('version')!r}")
    try:
        pair = DigitPair(int(_get(doc, "b")), *_get(doc, "pair"), frozenset(_get(doc, "digits")))
        params = ConstructionParams(
            pair,
            _get(doc, "psi"),
            _rational(_get(doc, "epsilon"), "epsilon"),
            _get(doc, "mode"),
            int(_get(doc, "max_depth")),
            int(_get(doc, "max_bits")),
        )
    except (TypeError, ValueError) as exc:
        raise CertificateError(f"invalid parameters: {exc}") from exc
    v_text = _get(doc, "v")
    if not isinstance(v_text, str) or not re.match(r"[0-9a-z]*\Z", v_text):
        raise CertificateError("v: expected a digit string")
    steps: list[ConstructionStep] = []
    for k, rec in enumerate(_get(doc, "steps")):
        where = f"steps[{k}]"
        wrec = _get(rec, "word", where)
        try:
            if "literal" in wrec:
                text = wrec["literal"]
                if not isinstance(text, str) or not re.match(r"[0-9a-z]+\Z", text):
                    raise CertificateError(f"{where}.word: bad literal")
                word: DigitWord = Literal(text)
            else:
                base_idx = int(_get(wrec, "base_word", where + ".word"))
                if not 1 <= base_idx <= len(steps):
                    raise CertificateError(f"{where}.word: base_word {base_idx} does not name an earlier step")
                word = Composite(
                    steps[base_idx - 1].word,
                    _int(_get(wrec, "power", where + ".word"), where + ".word.power"),
                    bool(_get(wrec, "flip", where + ".word")),
                    (pair.d1, pair.d2),
                )
        except (TypeError, ValueError) as exc:
            raise CertificateError(f"{where}.word: {exc}") from exc
        sigma = _get(rec, "sigma", where)
        if sigma not in (1, -1):
            raise CertificateError(f"{where}.sigma must be +1 or -1")
        steps.append(
            ConstructionStep(
                int(_get(rec, "i", where)),
                _int(_get(rec, "m", where), where + ".m"),
                _int(_get(rec, "N", where), where + ".N"),
                sigma,
                _int(_get(rec, "p", where), where + ".p"),
                _int(_get(rec, "q", where), where + ".q"),
                word,
            )
        )
    if not steps:
        raise CertificateError("steps: at least one step is required")
    nxt = _get(doc, "next")
    lookahead = None if nxt is None else (_int(_get(nxt, "m", "next"), "next.m"), _int(_get(nxt, "N", "next"), "next.N"))
    status = _get(doc, "status")
    if status not in (COMPLETE, EXHAUSTED):
        raise CertificateError(f"status: unknown value {status!r}")
    verification = doc.get("verification")
    recorded, options = (), None
    if verification is not None:
        options = _get(verification, "options", "verification")
        recorded = tuple(dict(r) for r in _get(verification, "results", "verification"))
    return Certificate(
        params,
        _int(_get(doc, "m1"), "m1"),
        _int(_get(doc, "N"), "N"),
        _int(_get(doc, "u"), "u"),
        _int(_get(doc, "u1"), "u1"),
        _int(_get(doc, "u2"), "u2"),
        _int(_get(doc, "q0"), "q0"),
        Literal(v_text),
        tuple(steps),
        status,
        _int(_get(doc, "c1"), "c1"),
        lookahead,
        recorded,
        options,
    )


def dumps(cert: Certificate) -> str:
    return json.dumps(to_dict(cert), indent=2) + "\n"


def loads(text: str) -> Certificate:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CertificateError(f"not valid JSON: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return from_dict(doc)


def save(cert: Certificate, path) -> None:
    path = Path(path)
    data = dumps(cert).encode()
    if path.suffix == ".gz":
        data = gzip.compress(data, mtime=0)
    path.write_bytes(data)


def load(path) -> Certificate:
    path = Path(path)
    data = path.read_bytes()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return loads(data.decode())
