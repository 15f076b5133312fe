"""Triadic step functions, the Reguera-Thiele weight and the operators acting on it."""

from .triadic import Rational3, StepFunction, TriadicInterval, indicator

__all__ = ["Rational3", "StepFunction", "TriadicInterval", "indicator"]
