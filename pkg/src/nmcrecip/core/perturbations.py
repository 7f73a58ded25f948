"""Time perturbations ``u`` on [0, 1] with ``u(0) = u(1) = 0``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Perturbation", "Sine", "Bump", "perturbation_from_config"]


class Perturbation:
    kind = "abstract"
    amplitude: float

    def __call__(self, t):
        raise NotImplementedError

    def derivative(self, t):
        raise NotImplementedError

    @property
    def sup_abs_derivative(self) -> float:
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Sine(Perturbation):
    """``u(t) = amplitude * sin(k pi t)``."""

    k: int = 1
    amplitude: float = 1.0
    kind = "sine"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("sine perturbation needs a positive integer frequency")

    def __call__(self, t):
        return self.amplitude * np.sin(self.k * math.pi * np.asarray(t, dtype=float))

    def derivative(self, t):
        w = self.k * math.pi
        return self.amplitude * w * np.cos(w * np.asarray(t, dtype=float))

    @property
    def sup_abs_derivative(self) -> float:
        return abs(self.amplitude) * self.k * math.pi

    def __str__(self):
        return f"Sine({self.k})" if self.amplitude == 1.0 else f"{self.amplitude:g}*Sine({self.k})"

    def to_config(self):
        return {"kind": self.kind, "k": int(self.k), "amplitude": float(self.amplitude)}


@dataclass(frozen=True)
class Bump(Perturbation):
    """``u(t) = amplitude * t (1 - t) t**m``."""

    m: int = 0
    amplitude: float = 1.0
    kind = "bump"

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise ValueError("bump exponent must be a nonnegative integer")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.amplitude * t ** (self.m + 1) * (1.0 - t)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        m = self.m
        return self.amplitude * ((m + 1) * t**m - (m + 2) * t ** (m + 1))

    @property
    def sup_abs_derivative(self) -> float:
        # |u'| peaks at an endpoint or where u'' = 0, i.e. t = m / (m + 2)
        cands = np.array([0.0, 1.0, self.m / (self.m + 2)])
        return float(np.max(np.abs(self.derivative(cands))))

    def __str__(self):
        return f"Bump({self.m})" if self.amplitude == 1.0 else f"{self.amplitude:g}*Bump({self.m})"

    def to_config(self):
        return {"kind": self.kind, "m": int(self.m), "amplitude": float(self.amplitude)}


def perturbation_from_config(cfg) -> Perturbation:
    if isinstance(cfg, str):
        name, _, arg = cfg.partition("(")
        arg = arg.rstrip(")").strip()
        cfg = {"kind": name.strip().lower()}
        if arg:
            cfg["k" if cfg["kind"] == "sine" else "m"] = int(arg)
    kind = str(cfg.get("kind", "")).lower()
    amp = float(cfg.get("amplitude", 1.0))
    if kind == "sine":
        return Sine(int(cfg.get("k", 1)), amp)
    if kind == "bump":
        return Bump(int(cfg.get("m", 0)), amp)
    raise ValueError(f"unknown perturbation kind {kind!r}")
