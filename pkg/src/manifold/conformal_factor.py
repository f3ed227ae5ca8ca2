import re
from typing import List, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator


class TrigTerm(BaseModel):
    """One plane-wave term ``amplitude * cos(k . x)`` (or ``sin``) in chart coordinates."""

    model_config = ConfigDict(frozen=True)

    amplitude: float
    wavevector: List[float]
    kind: Literal["cos", "sin"] = "cos"

    @field_validator("wavevector")
    @classmethod
    def validate_wavevector(cls, value) -> List[float]:
        if not value:
            raise ValueError("wavevector of a TrigTerm cannot be empty")
        return value


class TrigConformalFactor(BaseModel):
    """Conformal exponent Upsilon built from a finite trigonometric expression.

    The rescaled metric is ``exp(2 * Upsilon) * g``. Value, gradient and Hessian
    in chart coordinates are exact.
    """

    model_config = ConfigDict(frozen=True)

    dimension: int
    constant: float = 0.0
    terms: List[TrigTerm] = []

    @field_validator("dimension")
    @classmethod
    def validate_dimension(cls, value) -> int:
        if value < 1:
            raise ValueError("dimension must be at least 1")
        return value

    def _phases(self, x: np.ndarray):
        x = np.atleast_2d(x)
        for term in self.terms:
            k = np.zeros(self.dimension)
            k[: len(term.wavevector)] = term.wavevector
            yield term, k, x @ k

    def value(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        out = np.full(x.shape[0], self.constant, dtype=float)
        for term, _, phase in self._phases(x):
            trig = np.cos if term.kind == "cos" else np.sin
            out += term.amplitude * trig(phase)
        return out

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        out = np.zeros((x.shape[0], self.dimension))
        for term, k, phase in self._phases(x):
            if term.kind == "cos":
                out -= term.amplitude * np.sin(phase)[:, None] * k
            else:
                out += term.amplitude * np.cos(phase)[:, None] * k
        return out

    def hessian(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        out = np.zeros((x.shape[0], self.dimension, self.dimension))
        for term, k, phase in self._phases(x):
            trig = np.cos if term.kind == "cos" else np.sin
            out -= term.amplitude * trig(phase)[:, None, None] * np.outer(k, k)
        return out

    @property
    def is_constant(self) -> bool:
        return all(term.amplitude == 0.0 for term in self.terms)

    @property
    def is_zonal(self) -> bool:
        """True when Upsilon depends on the first chart coordinate through cos(k x1) only."""
        for term in self.terms:
            if term.kind != "cos" or any(w != 0.0 for w in term.wavevector[1:]):
                return False
            if not float(term.wavevector[0]).is_integer():
                return False
        return True

    def describe(self) -> str:
        parts = [f"{self.constant:g}"] if self.constant or not self.terms else []
        for term in self.terms:
            k = "+".join(
                f"{w:g}*x{i + 1}" for i, w in enumerate(term.wavevector) if w != 0.0
            ) or "0"
            parts.append(f"{term.amplitude:g}*{term.kind}({k})")
        return " + ".join(parts)


_NUMBER = r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
_TRIG_TERM = re.compile(
    rf"^(?:(?P<amp>{_NUMBER})\s*\*\s*)?(?P<kind>cos|sin)\(\s*(?:(?P<freq>{_NUMBER})\s*\*\s*)?x(?P<index>\d+)\s*\)$"
)
_CONSTANT_TERM = re.compile(rf"^(?P<amp>{_NUMBER})$")


def _split_terms(expr: str) -> List[str]:
    terms, depth, current = [], 0, ""
    for i, ch in enumerate(expr):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        exponent_sign = i >= 2 and expr[i - 1] in "eE" and expr[i - 2].isdigit()
        if ch in "+-" and depth == 0 and current.strip() and not exponent_sign:
            terms.append(current)
            current = ch
        else:
            current += ch
    if current.strip():
        terms.append(current)
    return [t.replace(" ", "") for t in terms]


def parse_upsilon(expr: str, dimension: int) -> TrigConformalFactor:
    """Parse expressions such as ``0.1*cos(x1) - 0.05*cos(2*x1) + 0.2``."""
    constant = 0.0
    terms: List[TrigTerm] = []
    for raw in _split_terms(expr.strip()):
        sign = -1.0 if raw.startswith("-") else 1.0
        body = raw.lstrip("+-")
        match = _CONSTANT_TERM.match(body)
        if match:
            constant += sign * float(match.group("amp"))
            continue
        match = _TRIG_TERM.match(body)
        if not match:
            raise ValueError(f"Cannot parse Upsilon term '{raw}' in '{expr}'")
        index = int(match.group("index"))
        if not 1 <= index <= dimension:
            raise ValueError(f"Coordinate x{index} out of range for dimension {dimension}")
        wavevector = [0.0] * dimension
        wavevector[index - 1] = float(match.group("freq") or 1.0)
        terms.append(
            TrigTerm(
                amplitude=sign * float(match.group("amp") or 1.0),
                wavevector=wavevector,
                kind=match.group("kind"),
            )
        )
    return TrigConformalFactor(dimension=dimension, constant=constant, terms=terms)
