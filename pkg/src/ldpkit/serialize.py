"""Textual interchange: distribution/observable grammars, JSON and CSV.

Distribution grammar (whitespace-insensitive):

    finite:v1:p1,v2:p2,...   |   gaussian:mu,sigma   |   exponential:rate

Observable grammar: identity | affine:a,b (a*x+b) | indicator:c (1{x==c}).

JSON numbers are emitted with 17 significant digits so that re-parsing
reproduces the exact doubles; rendering is insertion-ordered and therefore
byte-stable for a fixed payload.
"""

from __future__ import annotations

import json
import math
import re
from importlib import resources
from typing import Callable

import numpy as np

from .dist import Dist, Exponential, FiniteDist, Gaussian
from .errors import DomainError, ParseError

_NUM_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[a-z]+")


class _Cursor:
    def __init__(self, s: str):
        self.s = s
        self.i = 0

    def _skip(self) -> None:
        while self.i < len(self.s) and self.s[self.i].isspace():
            self.i += 1

    def ident(self) -> str:
        self._skip()
        m = _IDENT_RE.match(self.s, self.i)
        if not m:
            raise ParseError("expected a name", self.i)
        self.i = m.end()
        return m.group()

    def number(self) -> float:
        self._skip()
        m = _NUM_RE.match(self.s, self.i)
        if not m:
            raise ParseError("expected a number", self.i)
        self.i = m.end()
        return float(m.group())

    def expect(self, ch: str) -> None:
        self._skip()
        if self.i >= len(self.s) or self.s[self.i] != ch:
            raise ParseError(f"expected '{ch}'", self.i)
        self.i += 1

    def accept(self, ch: str) -> bool:
        self._skip()
        if self.i < len(self.s) and self.s[self.i] == ch:
            self.i += 1
            return True
        return False

    def done(self) -> None:
        self._skip()
        if self.i < len(self.s):
            raise ParseError("unexpected trailing input", self.i)


def parse_dist(s: str) -> Dist:
    """Parse the distribution grammar; malformed input reports the column."""
    c = _Cursor(s)
    start = c.i
    name = c.ident()
    c.expect(":")
    if name == "finite":
        values, probs = [], []
        while True:
            values.append(c.number())
            c.expect(":")
            probs.append(c.number())
            if not c.accept(","):
                break
        c.done()
        p = np.array(probs)
        if np.any(p < 0):
            raise DomainError("not-normalized", "negative probability")
        total = float(p.sum())
        if abs(total - 1.0) > 1e-9:
            raise DomainError("not-normalized", f"probabilities sum to {total!r}")
        if abs(total - 1.0) > 1e-12:
            # renormalize only when outside the constructor's tolerance, so a
            # rendered distribution parses back to the identical doubles
            p = p / total
        try:
            return FiniteDist(np.array(values), p)
        except ValueError as exc:
            raise ParseError(str(exc))
    if name == "gaussian":
        mu = c.number()
        c.expect(",")
        sigma = c.number()
        c.done()
        try:
            return Gaussian(mu, sigma)
        except ValueError as exc:
            raise ParseError(str(exc))
    if name == "exponential":
        rate = c.number()
        c.done()
        try:
            return Exponential(rate)
        except ValueError as exc:
            raise ParseError(str(exc))
    raise ParseError(f"unknown family {name!r}", start)


def render_dist(d: Dist) -> str:
    """Canonical string form; parse_dist(render_dist(d)) reproduces d exactly."""
    if isinstance(d, FiniteDist):
        atoms = ",".join(f"{float(v)!r}:{float(p)!r}" for v, p in zip(d.values, d.probs))
        return f"finite:{atoms}"
    if isinstance(d, Gaussian):
        return f"gaussian:{float(d.mu)!r},{float(d.sigma)!r}"
    return f"exponential:{float(d.rate)!r}"


def parse_f(s: str) -> tuple[Callable[[float], float] | None, str]:
    """Parse the observable grammar; returns (callable or None, canonical form)."""
    c = _Cursor(s)
    name = c.ident()
    if name == "identity":
        c.done()
        return None, "identity"
    c.expect(":")
    if name == "affine":
        a = c.number()
        c.expect(",")
        b = c.number()
        c.done()
        return (lambda x: a * x + b), f"affine:{a!r},{b!r}"
    if name == "indicator":
        v = c.number()
        c.done()
        return (lambda x: np.where(np.asarray(x) == v, 1.0, 0.0)), f"indicator:{v!r}"
    raise ParseError(f"unknown observable {name!r}", 0)


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if x == math.inf:
        return "Infinity"
    if x == -math.inf:
        return "-Infinity"
    return format(x, ".17g")


def render_json(obj, level: int = 0) -> str:
    """Deterministic JSON with 17-significant-digit floats."""
    pad = "  " * level
    inner = "  " * (level + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool | np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, int | np.integer):
        return str(int(obj))
    if isinstance(obj, float | np.floating):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f"{inner}{json.dumps(str(k))}: {render_json(v, level + 1)}" for k, v in obj.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, list | tuple | np.ndarray):
        seq = list(obj)
        if not seq:
            return "[]"
        items = ",\n".join(f"{inner}{render_json(v, level + 1)}" for v in seq)
        return "[\n" + items + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj)!r}")


def render_csv(columns: list[str], rows: list[dict]) -> str:
    """CSV with the same float formatting as the JSON output."""
    out = [",".join(columns)]
    for row in rows:
        cells = []
        for col in columns:
            v = row[col]
            if isinstance(v, float | np.floating):
                cells.append(_fmt_float(float(v)))
            else:
                cells.append(str(v))
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


def load_schema() -> dict:
    """The frozen output schema shipped with the package."""
    text = resources.files("ldpkit").joinpath("schema.json").read_text()
    return json.loads(text)
