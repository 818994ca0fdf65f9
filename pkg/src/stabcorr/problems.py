"""Model problems: manufactured heat solutions, a traveling wave, Schnakenberg."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class HeatVariant(str, Enum):
    POLY = "POLY"          # sin(t) ((1+2x^2)(1+y^2) - 1)
    LINEAR_T = "LINEAR_T"  # 1 - t x^2 / 2


def heat_exact(variant, x, y, t):
    variant = HeatVariant(variant)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if variant is HeatVariant.POLY:
        return math.sin(t) * ((1 + 2 * x**2) * (1 + y**2) - 1)
    return 1.0 - 0.5 * t * x**2 + 0.0 * y


def heat_source(variant, x, y, t):
    """f = u_t - u_xx - u_yy for the chosen exact solution."""
    variant = HeatVariant(variant)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if variant is HeatVariant.POLY:
        p = (1 + 2 * x**2) * (1 + y**2)
        return math.cos(t) * (p - 1) - math.sin(t) * (4 * (1 + y**2) + 2 * (1 + 2 * x**2))
    return -0.5 * x**2 + t + 0.0 * y


def heat_mms_eval(variant, x, y, t):
    """(u, f) at (x, y, t)."""
    return heat_exact(variant, x, y, t), heat_source(variant, x, y, t)


@dataclass(frozen=True)
class TravelingWaveParams:
    """u_t = eps (u_xx + u_yy) + gamma u^2 (1 - u), planar front at angle alpha."""

    epsilon: float = 1.0
    gamma: float = 50.0
    alpha: float = math.pi / 6
    r0: float | None = None  # defaults to 1 - c

    @property
    def beta(self) -> float:
        return 0.5 * math.sqrt(2.0 * self.gamma / self.epsilon)

    @property
    def c(self) -> float:
        return math.sqrt(self.gamma * self.epsilon / 2.0)

    @property
    def shift(self) -> float:
        return 1.0 - self.c if self.r0 is None else self.r0


def traveling_wave_exact(p: TravelingWaveParams, x, y, t):
    r = math.cos(p.alpha) * np.asarray(x, dtype=float) + math.sin(p.alpha) * np.asarray(y, dtype=float) - p.c * t
    # 1/(1+exp(z)) written via tanh: no overflow for large |z|
    return 0.5 * (1.0 - np.tanh(0.5 * p.beta * (r - p.shift)))


def traveling_wave_reaction(p: TravelingWaveParams):
    def reaction(u):
        return p.gamma * u * u * (1.0 - u)
    return reaction


@dataclass(frozen=True)
class SchnakParams:
    D1: float = 0.05
    D2: float = 1.0
    kappa: float = 100.0
    a: float = 0.1305
    b: float = 0.7695
    amplitude: float = 1e-3
    centre: tuple = field(default=(0.25, 1.0 / 6.0))

    @property
    def steady_state(self) -> tuple[float, float]:
        s = self.a + self.b
        return s, self.b / s**2


def schnakenberg_reaction(u, v, p: SchnakParams):
    uuv = u * u * v
    return p.kappa * (p.a - u + uuv), p.kappa * (p.b - uuv)


def schnakenberg_initial(x, y, p: SchnakParams):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    u_ss, v_ss = p.steady_state
    cx, cy = p.centre
    u0 = u_ss + p.amplitude * np.exp(-100.0 * ((x - cx) ** 2 + (y - cy) ** 2))
    v0 = np.full_like(u0, v_ss)
    return u0, v0
