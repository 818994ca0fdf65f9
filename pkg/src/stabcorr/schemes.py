"""One-step maps of the Douglas stabilizing-correction family.

All schemes share the same building blocks: an explicit predictor from
t_{n-1}, followed by one implicit correction per affine part F_j.  Only
g_j(t_{n-1}) and g_j(t_n) are ever evaluated, and A_j u_{n-1} is formed
once per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import SplitSystem, StageSolveError

THETA_L = 1.0 - 0.5 * math.sqrt(2.0)


class SchemeId(str, Enum):
    DOUGLAS = "DOUGLAS"
    SC1A = "SC1A"
    SC1B = "SC1B"
    HV = "HV"
    HW = "HW"


@dataclass(frozen=True)
class SchemeConfig:
    scheme_id: SchemeId
    theta: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "scheme_id", SchemeId(self.scheme_id))
        if self.scheme_id is SchemeId.DOUGLAS and self.theta < 0.5:
            raise ValueError("Douglas scheme needs theta >= 1/2")
        if self.scheme_id in (SchemeId.HV, SchemeId.HW) and self.theta <= 0:
            raise ValueError("extended schemes need theta > 0")

    @property
    def label(self) -> str:
        if self.scheme_id is SchemeId.HW and self.theta == 0.5:
            return "CS"
        return self.scheme_id.value

    @property
    def extended(self) -> bool:
        """Two implicit passes per step (HV, HW)."""
        return self.scheme_id in (SchemeId.HV, SchemeId.HW)


# named configurations used throughout the experiments
PRESETS = {
    "DOUGLAS": SchemeConfig(SchemeId.DOUGLAS, 0.5),
    "SC1A": SchemeConfig(SchemeId.SC1A, 0.5),
    "SC1B": SchemeConfig(SchemeId.SC1B, 0.5),
    "HV": SchemeConfig(SchemeId.HV, THETA_L),
    "HW": SchemeConfig(SchemeId.HW, THETA_L),
    "CS": SchemeConfig(SchemeId.HW, 0.5),
}


def get_scheme(name: str | SchemeConfig) -> SchemeConfig:
    if isinstance(name, SchemeConfig):
        return name
    try:
        return PRESETS[name.upper()]
    except KeyError:
        raise ValueError(f"unknown scheme {name!r}; choose from {sorted(PRESETS)}") from None


class _StepData:
    """Quantities at (t_{n-1}, u_{n-1}) and the sources at t_n."""

    def __init__(self, sys: SplitSystem, u_prev, t_prev, dt):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.t_prev = t_prev
        self.t_n = t_prev + dt
        self.f0_prev = np.asarray(sys.explicit_part(t_prev, u_prev), dtype=float)
        self.au_prev = [op.apply(u_prev) for op in sys.implicit_parts]
        self.g_prev = [op.source(t_prev) for op in sys.implicit_parts]
        self.g_n = [op.source(self.t_n) for op in sys.implicit_parts]
        # F_j(t_{n-1}, u_{n-1}) for j = 1..s
        self.fj_prev = [a + g for a, g in zip(self.au_prev, self.g_prev)]
        total = self.f0_prev.copy()
        for f in self.fj_prev:
            total += f
        self.f_prev = total


def _solve(op, rhs, gamma, j, pass_index):
    try:
        w = op.stage_solve(rhs, gamma)
    except StageSolveError:
        raise
    except Exception as exc:
        raise StageSolveError(j, pass_index, str(exc)) from exc
    return w


def _correct_from_prev(sys, d: _StepData, v, theta, dt, pass_index=None):
    """v_j = v_{j-1} + theta*dt*(F_j(t_n, v_j) - F_j(t_{n-1}, u_{n-1})), j = 1..s."""
    gamma = theta * dt
    for j, op in enumerate(sys.implicit_parts, start=1):
        rhs = v + gamma * (d.g_n[j - 1] - d.fj_prev[j - 1])
        v = _solve(op, rhs, gamma, j, pass_index)
    return v


def douglas_step(sys: SplitSystem, u_prev, t_prev: float, dt: float, theta: float = 0.5):
    u_prev = np.asarray(u_prev, dtype=float)
    d = _StepData(sys, u_prev, t_prev, dt)
    v = u_prev + dt * d.f_prev
    return _correct_from_prev(sys, d, v, theta, dt)


def sc1a_step(sys: SplitSystem, u_prev, t_prev: float, dt: float):
    """Douglas with the explicit part upgraded to the explicit trapezoidal rule
    before the implicit corrections."""
    u_prev = np.asarray(u_prev, dtype=float)
    d = _StepData(sys, u_prev, t_prev, dt)
    v_star = u_prev + dt * d.f_prev
    v = v_star + 0.5 * dt * (sys.explicit_part(d.t_n, v_star) - d.f0_prev)
    return _correct_from_prev(sys, d, v, 0.5, dt)


def sc1b_step(sys: SplitSystem, u_prev, t_prev: float, dt: float):
    """As :func:`sc1a_step` but the explicit trapezoidal correction comes last."""
    u_prev = np.asarray(u_prev, dtype=float)
    d = _StepData(sys, u_prev, t_prev, dt)
    v = u_prev + dt * d.f_prev
    v = _correct_from_prev(sys, d, v, 0.5, dt)
    return v + 0.5 * dt * (sys.explicit_part(d.t_n, v) - d.f0_prev)


def _first_pass(sys, d, u_prev, theta, dt):
    v0_star = u_prev + dt * d.f_prev
    vs_star = _correct_from_prev(sys, d, v0_star, theta, dt, pass_index=1)
    f0_star = np.asarray(sys.explicit_part(d.t_n, vs_star), dtype=float)
    # A_j v*_s, reused by the second pass
    a_star = [op.apply(vs_star) for op in sys.implicit_parts]
    return v0_star, vs_star, f0_star, a_star


def hv_step(sys: SplitSystem, u_prev, t_prev: float, dt: float, theta: float = 0.5):
    """Two-pass scheme: a Douglas pass, a trapezoidal re-prediction, and a
    second set of corrections anchored at F_j(t_n, v*_s)."""
    u_prev = np.asarray(u_prev, dtype=float)
    d = _StepData(sys, u_prev, t_prev, dt)
    _, vs_star, f0_star, a_star = _first_pass(sys, d, u_prev, theta, dt)

    f_star = f0_star.copy()
    for a, g in zip(a_star, d.g_n):
        f_star += a + g
    v = u_prev + 0.5 * dt * (d.f_prev + f_star)

    gamma = theta * dt
    for j, op in enumerate(sys.implicit_parts, start=1):
        # F_j(t_n, v_j) - F_j(t_n, v*_s) = A_j (v_j - v*_s): g_j(t_n) cancels
        v = _solve(op, v - gamma * a_star[j - 1], gamma, j, 2)
    return v


def hw_step(sys: SplitSystem, u_prev, t_prev: float, dt: float, theta: float = 0.5):
    """Two-pass scheme with a (1/2 - theta) correction of the implicit parts;
    theta = 1/2 is the CS preset."""
    u_prev = np.asarray(u_prev, dtype=float)
    d = _StepData(sys, u_prev, t_prev, dt)
    v0_star, _, f0_star, a_star = _first_pass(sys, d, u_prev, theta, dt)

    v = v0_star + 0.5 * dt * (f0_star - d.f0_prev)
    if theta != 0.5:
        w = 0.5 - theta
        for a, g, fp in zip(a_star, d.g_n, d.fj_prev):
            v = v + w * dt * (a + g - fp)
    return _correct_from_prev(sys, d, v, theta, dt, pass_index=2)


def step(sys: SplitSystem, scheme: SchemeConfig | str, u_prev, t_prev: float, dt: float):
    """Advance one step with the given scheme configuration."""
    cfg = get_scheme(scheme)
    sid = cfg.scheme_id
    if sid is SchemeId.DOUGLAS:
        return douglas_step(sys, u_prev, t_prev, dt, cfg.theta)
    if sid is SchemeId.SC1A:
        return sc1a_step(sys, u_prev, t_prev, dt)
    if sid is SchemeId.SC1B:
        return sc1b_step(sys, u_prev, t_prev, dt)
    if sid is SchemeId.HV:
        return hv_step(sys, u_prev, t_prev, dt, cfg.theta)
    return hw_step(sys, u_prev, t_prev, dt, cfg.theta)
