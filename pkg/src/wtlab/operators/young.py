"""Young functions used as Orlicz averaging kernels."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..errors import ParameterError

KINDS = ("linear", "power", "log", "loglog")


@dataclass(frozen=True)
class YoungFunction:
    """One of ``t``, ``t^r``, ``t log^ε(e+t)`` or ``t (log log(e^e+t))^α``.

    ``param`` is ``r``, ``ε`` or ``α`` respectively and is ignored for the
    linear kernel.
    """

    kind: str
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown Young function kind {self.kind!r}")
        p = float(self.param)
        if not math.isfinite(p):
            raise ParameterError(f"non-finite Young parameter {self.param!r}")
        if self.kind == "power" and p < 1:
            raise ParameterError(f"power Young function needs r >= 1, got {p}")
        if self.kind in ("log", "loglog") and p <= 0:
            raise ParameterError(f"{self.kind} Young function needs a positive parameter, got {p}")
        object.__setattr__(self, "param", 1.0 if self.kind == "linear" else p)

    @classmethod
    def parse(cls, text: str) -> "YoungFunction":
        """Parse ``linear``, ``psi`` or ``kind:param`` (e.g. ``power:1.5``)."""
        token = text.strip().lower()
        if token == "linear":
            return cls("linear")
        if token == "psi":
            return cls("loglog", 1.0)
        kind, sep, param = token.partition(":")
        if not sep or kind not in KINDS or kind == "linear":
            raise ParameterError(f"cannot parse Young function {text!r}")
        try:
            value = float(param)
        except ValueError:
            raise ParameterError(f"bad Young function parameter {param!r} in {text!r}") from None
        return cls(kind, value)

    def spec(self) -> str:
        if self.kind == "linear":
            return "linear"
        return f"{self.kind}:{self.param!r}"

    __str__ = spec

    @property
    def power_exponent(self) -> float | None:
        """``r`` when ``Φ(t) = t^r`` (linear counts as ``r = 1``), else None."""
        if self.kind == "linear":
            return 1.0
        if self.kind == "power":
            return self.param
        return None

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        if self.kind == "linear":
            out = t
        elif self.kind == "power":
            out = np.power(t, self.param)
        elif self.kind == "log":
            out = t * np.power(np.log(math.e + t), self.param)
        else:
            out = t * np.power(np.log(np.log(math.exp(math.e) + t)), self.param)
        return out if out.ndim else float(out)

    def log_value(self, u):
        """``log Φ(e^u)``, stable for large ``|u|``."""
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "linear":
            out = u
        elif self.kind == "power":
            out = self.param * u
        elif self.kind == "log":
            out = u + self.param * np.log(np.logaddexp(1.0, u))
        else:
            out = u + self.param * np.log(np.log(np.logaddexp(math.e, u)))
        return out if out.ndim else float(out)

    def inverse(self, y: float) -> float:
        """``Φ^{-1}(y)`` for ``y >= 0``."""
        y = float(y)
        if y < 0:
            raise ParameterError("Young inverse needs y >= 0")
        if y == 0:
            return 0.0
        if self.kind == "linear":
            return y
        if self.kind == "power":
            return y ** (1.0 / self.param)
        # Φ(t) >= t here, so the root lies at u <= log y
        target = math.log(y)
        hi = target
        lo = target - 1.0
        while self.log_value(lo) > target:
            lo = target - 2 * (target - lo)
        u = brentq(lambda s: self.log_value(s) - target, lo, hi, xtol=1e-15, rtol=1e-15)
        return math.exp(u)
