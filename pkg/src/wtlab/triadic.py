"""Exact triadic geometry and nonnegative step functions on [0, 1].

Endpoints live on the lattice 3^-e Z and are handled exactly; piece values
are floats.  A :class:`StepFunction` stores its breakpoints as int64
numerators over a common power of three (``grid / 3**scale``) so that every
length and offset used downstream is an exact integer difference.
"""

from __future__ import annotations

import functools
import json
import math
import re
import struct
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import CapacityError, ParameterError

# 3**39 < 2**63, so every numerator on a scale-39 grid fits in int64.
MAX_GRID_SCALE = 39

Side = Literal["left", "right"]


@functools.total_ordering
@dataclass(frozen=True)
class Rational3:
    """The number ``num / 3**scale`` in canonical form."""

    num: int
    scale: int = 0

    def __post_init__(self):
        num, scale = int(self.num), int(self.scale)
        if scale < 0:
            num, scale = num * 3 ** (-scale), 0
        if num == 0:
            scale = 0
        while scale > 0 and num % 3 == 0:
            num //= 3
            scale -= 1
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "scale", scale)

    @classmethod
    def coerce(cls, value) -> "Rational3":
        if isinstance(value, Rational3):
            return value
        if isinstance(value, int):
            return cls(value, 0)
        if isinstance(value, Fraction):
            return cls.from_fraction(value)
        raise TypeError(f"cannot convert {value!r} to Rational3")

    @classmethod
    def from_fraction(cls, q: Fraction) -> "Rational3":
        den = q.denominator
        scale = 0
        while den % 3 == 0:
            den //= 3
            scale += 1
        if den != 1:
            raise ParameterError(f"{q} is not a triadic rational")
        return cls(q.numerator, scale)

    def to_fraction(self) -> Fraction:
        return Fraction(self.num, 3**self.scale)

    def at_scale(self, scale: int) -> int:
        """Numerator over ``3**scale``; raises if not representable."""
        if scale < self.scale:
            raise ValueError(f"{self} is not on the 3^-{scale} grid")
        return self.num * 3 ** (scale - self.scale)

    def shift(self, j: int) -> "Rational3":
        """Return ``self / 3**j``."""
        return Rational3(self.num, self.scale + j)

    def _align(self, other: "Rational3"):
        s = max(self.scale, other.scale)
        return self.at_scale(s), other.at_scale(s), s

    def __add__(self, other):
        try:
            other = Rational3.coerce(other)
        except TypeError:
            return NotImplemented
        a, b, s = self._align(other)
        return Rational3(a + b, s)

    __radd__ = __add__

    def __sub__(self, other):
        try:
            other = Rational3.coerce(other)
        except TypeError:
            return NotImplemented
        a, b, s = self._align(other)
        return Rational3(a - b, s)

    def __rsub__(self, other):
        return Rational3.coerce(other) - self

    def __mul__(self, other):
        try:
            other = Rational3.coerce(other)
        except TypeError:
            return NotImplemented
        return Rational3(self.num * other.num, self.scale + other.scale)

    __rmul__ = __mul__

    def __neg__(self):
        return Rational3(-self.num, self.scale)

    def __eq__(self, other):
        if isinstance(other, Rational3):
            return self.num == other.num and self.scale == other.scale
        if isinstance(other, (int, Fraction)):
            return self.to_fraction() == other
        return NotImplemented

    def __lt__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.to_fraction() < other
        if not isinstance(other, Rational3):
            return NotImplemented
        a, b, _ = self._align(other)
        return a < b

    def __hash__(self):
        return hash(self.to_fraction())

    def __float__(self):
        return float(self.to_fraction())

    def render(self) -> str:
        return str(self.num) if self.scale == 0 else f"{self.num}/3^{self.scale}"

    __str__ = render

    def __repr__(self):
        return f"Rational3({self.render()})"

    _PARSE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(?:3\^(\d+)|(\d+)))?\s*$")

    @classmethod
    def parse(cls, text: str) -> "Rational3":
        """Parse ``"n"``, ``"n/3^e"`` or ``"n/d"`` with ``d`` a power of 3."""
        m = cls._PARSE.match(text)
        if not m:
            raise ParameterError(f"cannot parse triadic rational: {text!r}")
        num = int(m.group(1))
        if m.group(2) is not None:
            return cls(num, int(m.group(2)))
        if m.group(3) is not None:
            return cls.from_fraction(Fraction(num, int(m.group(3))))
        return cls(num, 0)


@dataclass(frozen=True)
class TriadicInterval:
    """``[index * 3^-level, (index + 1) * 3^-level)`` inside [0, 1)."""

    level: int
    index: int

    def __post_init__(self):
        if self.level < 0 or not 0 <= self.index < 3**self.level:
            raise ParameterError(
                f"triadic interval (level={self.level}, index={self.index}) "
                "does not lie in [0,1)"
            )

    @property
    def left(self) -> Rational3:
        return Rational3(self.index, self.level)

    @property
    def right(self) -> Rational3:
        return Rational3(self.index + 1, self.level)

    @property
    def length(self) -> Rational3:
        return Rational3(1, self.level)

    @property
    def center(self) -> Fraction:
        return Fraction(2 * self.index + 1, 2 * 3**self.level)

    def contains(self, x) -> bool:
        x = Rational3.coerce(x) if not isinstance(x, Rational3) else x
        return self.left <= x < self.right

    def contains_interval(self, other: "TriadicInterval") -> bool:
        if other.level < self.level:
            return False
        return other.index // 3 ** (other.level - self.level) == self.index

    def __repr__(self):
        return f"[{self.left}, {self.right})"


def children(interval: TriadicInterval) -> tuple[TriadicInterval, TriadicInterval, TriadicInterval]:
    j, n = interval.level + 1, 3 * interval.index
    return TriadicInterval(j, n), TriadicInterval(j, n + 1), TriadicInterval(j, n + 2)


def middle_third(interval: TriadicInterval) -> TriadicInterval:
    return TriadicInterval(interval.level + 1, 3 * interval.index + 1)


def adjacent_scaled(interval: TriadicInterval, side: Side, k: int) -> TriadicInterval:
    """Triadic interval of length ``3^-k |I|`` touching the middle third of I.

    ``side="left"`` puts it against the left end of the middle third,
    ``side="right"`` against its right end.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    level = interval.level + k
    if side == "left":
        index = (3 * interval.index + 1) * 3 ** (k - 1) - 1
    elif side == "right":
        index = (3 * interval.index + 2) * 3 ** (k - 1)
    else:
        raise ParameterError(f"side must be 'left' or 'right', got {side!r}")
    return TriadicInterval(level, index)


def as_fraction(x) -> Fraction:
    """Exact value of a Rational3, int, float or Fraction."""
    if isinstance(x, Rational3):
        return x.to_fraction()
    return Fraction(x)


def _anchor(x, scale: int) -> tuple[int, float]:
    """Split ``x * 3**scale`` into an integer part and a float remainder in [0, 1)."""
    if isinstance(x, Rational3):
        if x.scale <= scale:
            return x.num * 3 ** (scale - x.scale), 0.0
        q, r = divmod(x.num, 3 ** (x.scale - scale))
        return q, r / 3 ** (x.scale - scale)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ParameterError(f"non-finite point {x!r}")
        x = Fraction(x)
    elif isinstance(x, (int, np.integer)):
        return int(x) * 3**scale, 0.0
    elif not isinstance(x, Fraction):
        x = Fraction(x)
    y = x * 3**scale
    q = y.numerator // y.denominator
    return q, float(y - q)


class StepFunction:
    """Nonnegative piecewise-constant function, zero outside its breakpoints.

    Piece ``i`` is the right-open interval ``[grid[i], grid[i+1]) / 3**scale``
    with value ``values[i]``.  Instances are immutable; prefix integrals of
    ``f**power`` are built lazily and cached per power.
    """

    def __init__(self, breakpoints: Sequence[Rational3], values: Iterable[float]):
        bps = [Rational3.coerce(b) for b in breakpoints]
        if not bps:
            raise ParameterError("a step function needs at least one breakpoint")
        scale = max(b.scale for b in bps)
        self._init(np.array([b.at_scale(scale) for b in bps], dtype=object), scale, values)

    @classmethod
    def from_grid(cls, grid, scale: int, values) -> "StepFunction":
        self = cls.__new__(cls)
        self._init(grid, scale, values)
        return self

    def _init(self, grid, scale, values):
        if scale > MAX_GRID_SCALE:
            raise CapacityError(
                f"breakpoint scale 3^-{scale} exceeds the exact int64 grid (max {MAX_GRID_SCALE})"
            )
        grid = np.asarray(grid).astype(np.int64)
        values = np.asarray(values, dtype=np.float64)
        if grid.ndim != 1 or values.ndim != 1 or len(grid) != len(values) + 1:
            raise ParameterError("need len(breakpoints) == len(values) + 1")
        if np.any(np.diff(grid) <= 0):
            raise ParameterError("breakpoints must be strictly increasing")
        if grid[0] < 0 or grid[-1] > 3**scale:
            raise ParameterError("breakpoints must lie in [0, 1]")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ParameterError("piece values must be finite and nonnegative")
        grid.setflags(write=False)
        values.setflags(write=False)
        self.grid = grid
        self.scale = int(scale)
        self.values = values
        self._prefix: dict[bytes, tuple[np.ndarray, np.ndarray]] = {}
        self._derived: dict = {}
        self._lock = threading.RLock()

    @classmethod
    def from_pieces(cls, pieces: Iterable[tuple], scale: int | None = None) -> "StepFunction":
        """Build from disjoint ``(left, right, value)`` triples; gaps become zero pieces.

        ``left``/``right`` may be :class:`Rational3` values; a
        :class:`TriadicInterval` may stand in for the pair.
        """
        triples = []
        for p in pieces:
            if isinstance(p[0], TriadicInterval):
                triples.append((p[0].left, p[0].right, float(p[1])))
            else:
                triples.append((Rational3.coerce(p[0]), Rational3.coerce(p[1]), float(p[2])))
        if scale is None:
            scale = max([max(a.scale, b.scale) for a, b, _ in triples] or [0])
        lo = [a.at_scale(scale) for a, _, _ in triples]
        hi = [b.at_scale(scale) for _, b, _ in triples]
        return cls.from_intervals(np.array(lo, dtype=np.int64), np.array(hi, dtype=np.int64),
                                  [v for _, _, v in triples], scale)

    @classmethod
    def from_intervals(cls, lo, hi, values, scale: int) -> "StepFunction":
        """Vectorized :meth:`from_pieces` for integer endpoints on one grid.

        Intervals must be sorted and disjoint; touching intervals are kept as
        separate pieces.
        """
        lo = np.asarray(lo, dtype=np.int64)
        hi = np.asarray(hi, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if len(lo) == 0:
            return cls.from_grid(np.array([0, 3**scale]), scale, [0.0])
        if np.any(hi <= lo) or np.any(lo[1:] < hi[:-1]):
            raise ParameterError("pieces must be sorted, nonempty and disjoint")
        gap = lo[1:] > hi[:-1]
        n = len(lo)
        # piece i contributes lo_i, and a zero gap piece starting at hi_i when needed
        grid = np.empty(n + int(gap.sum()) + 1, dtype=np.int64)
        vals = np.zeros(len(grid) - 1)
        pos = np.arange(n) + np.concatenate(([0], np.cumsum(gap)))
        grid[pos] = lo
        vals[pos] = values
        gap_pos = pos[:-1][gap] + 1
        grid[gap_pos] = hi[:-1][gap]
        grid[-1] = hi[-1]
        return cls.from_grid(grid, scale, vals)

    # -- basic accessors -------------------------------------------------

    @property
    def n_pieces(self) -> int:
        return len(self.values)

    @property
    def n_support_pieces(self) -> int:
        return int(np.count_nonzero(self.values))

    @property
    def unit(self) -> float:
        return 3.0 ** (-self.scale)

    @property
    def breakpoints(self) -> tuple[Rational3, ...]:
        return tuple(Rational3(int(g), self.scale) for g in self.grid)

    def lengths(self) -> np.ndarray:
        """Piece lengths in grid units (exact integers)."""
        return np.diff(self.grid)

    def scaled(self, c: float) -> "StepFunction":
        return StepFunction.from_grid(self.grid, self.scale, self.values * c)

    def refined(self, scale: int) -> "StepFunction":
        """Same function with breakpoints expressed on a finer grid."""
        if scale < self.scale:
            raise ParameterError("cannot coarsen a grid")
        if scale > MAX_GRID_SCALE:
            raise CapacityError(f"scale {scale} exceeds the exact int64 grid")
        return StepFunction.from_grid(self.grid * 3 ** (scale - self.scale), scale, self.values)

    def derived(self, key, build):
        """Memoize ``build()`` under ``key``; safe under concurrent callers."""
        try:
            return self._derived[key]
        except KeyError:
            pass
        with self._lock:
            if key not in self._derived:
                self._derived[key] = build()
            return self._derived[key]

    # -- prefix integrals -------------------------------------------------

    def prefix(self, power: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        """Prefix integrals of ``f**power`` in grid units, as a (hi, lo) float pair.

        ``hi + lo`` carries the extended-precision running sum, so that
        differences of nearby prefixes keep full double accuracy.
        """
        key = struct.pack("<d", float(power))
        cached = self._prefix.get(key)
        if cached is not None:
            return cached
        with self._lock:
            cached = self._prefix.get(key)
            if cached is None:
                vp = np.power(self.values.astype(np.longdouble), np.longdouble(power))
                acc = np.concatenate(([np.longdouble(0)],
                                      np.cumsum(vp * self.lengths().astype(np.longdouble))))
                hi = acc.astype(np.float64)
                lo = (acc - hi.astype(np.longdouble)).astype(np.float64)
                hi.setflags(write=False)
                lo.setflags(write=False)
                cached = (hi, lo)
                self._prefix[key] = cached
        return cached

    def locate(self, x) -> tuple[int, float]:
        """Piece index ``i`` with ``grid[i] <= x < grid[i+1]`` and the offset ``x - grid[i]``.

        The offset is in grid units.  ``i == -1`` left of the first breakpoint
        (offset measured from it, negative) and ``i == n_pieces`` at or right of
        the last one.
        """
        anchor, frac = _anchor(x, self.scale)
        i = int(np.searchsorted(self.grid, anchor, side="right")) - 1
        if i < 0:
            return -1, float(anchor - int(self.grid[0])) + frac
        return i, float(anchor - int(self.grid[i])) + frac

    def _prefix_at(self, i: int, offset: float, power: float) -> tuple[float, float]:
        hi, lo = self.prefix(power)
        if i < 0:
            return 0.0, 0.0
        if i >= self.n_pieces:
            return float(hi[-1]), float(lo[-1])
        return float(hi[i]), float(lo[i]) + float(self.values[i]) ** power * offset

    def integrate(self, a, b, power: float = 1.0) -> float:
        """``∫_a^b f(t)**power dt`` for ``a <= b``."""
        ia, oa = self.locate(a)
        ib, ob = self.locate(b)
        if (ia, oa) > (ib, ob):
            raise ParameterError("integrate requires a <= b")
        ha, la = self._prefix_at(ia, oa, power)
        hb, lb = self._prefix_at(ib, ob, power)
        return ((hb - ha) + (lb - la)) * self.unit

    def integrate_grid(self, a, b, power: float = 1.0) -> np.ndarray:
        """Vectorized :meth:`integrate` for integer endpoints on ``self.grid``'s scale."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        hi, lo = self.prefix(power)
        vp = np.power(self.values, power)

        def at(x):
            i = np.searchsorted(self.grid, x, side="right") - 1
            inside = (i >= 0) & (i < self.n_pieces)
            ic = np.clip(i, 0, self.n_pieces)
            h = np.where(i < 0, 0.0, hi[ic])
            lo_part = np.where(i < 0, 0.0, lo[ic])
            off = (x - self.grid[np.clip(i, 0, self.n_pieces)]).astype(np.float64)
            extra = np.where(inside, vp[np.clip(i, 0, self.n_pieces - 1)] * off, 0.0)
            return h, lo_part + extra

        ha, la = at(a)
        hb, lb = at(b)
        return ((hb - ha) + (lb - la)) * self.unit

    def evaluate(self, x) -> float:
        i, _ = self.locate(x)
        if 0 <= i < self.n_pieces:
            return float(self.values[i])
        return 0.0

    @property
    def mass(self) -> float:
        hi, lo = self.prefix(1.0)
        return (float(hi[-1]) + float(lo[-1])) * self.unit

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        records = []
        for g, v in zip(self.grid.tolist(), list(self.values) + [0.0]):
            q = Rational3(g, self.scale)
            records.append({"num": str(q.num), "scale": q.scale, "value": float(v)})
        return {"format": "stepfn-v1", "records": records}

    def to_json(self, **extra) -> str:
        doc = self.to_dict()
        doc.update(extra)
        return json.dumps(doc)

    @classmethod
    def from_dict(cls, doc: dict) -> "StepFunction":
        if doc.get("format") != "stepfn-v1":
            raise ParameterError(f"unsupported step function format {doc.get('format')!r}")
        recs = doc["records"]
        bps = [Rational3(int(r["num"]), int(r["scale"])) for r in recs]
        if recs and float(recs[-1]["value"]) != 0.0:
            raise ParameterError("last stepfn-v1 record must carry value 0")
        return cls(bps, [float(r["value"]) for r in recs[:-1]])

    @classmethod
    def from_json(cls, text: str) -> "StepFunction":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        s = max(self.scale, other.scale)
        return (np.array_equal(self.grid * 3 ** (s - self.scale), other.grid * 3 ** (s - other.scale))
                and np.array_equal(self.values, other.values))

    __hash__ = None

    def __repr__(self):
        return f"StepFunction(pieces={self.n_pieces}, scale={self.scale})"


def indicator(a=0, b=1, value: float = 1.0) -> StepFunction:
    """``value * χ_[a, b)``."""
    return StepFunction([Rational3.coerce(a), Rational3.coerce(b)], [value])
