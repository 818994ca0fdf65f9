"""Split ODE systems, affine implicit parts, state layouts and error norms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

ExplicitFn = Callable[[float, np.ndarray], np.ndarray]


class StageSolveError(RuntimeError):
    """A stage solve failed inside a time step.

    ``stage`` is the 1-based implicit part index, ``pass_index`` is 1 or 2
    for two-pass schemes and ``None`` otherwise.
    """

    def __init__(self, stage: int, pass_index: int | None = None, reason: str = ""):
        self.stage = stage
        self.pass_index = pass_index
        where = f"stage {stage}" if pass_index is None else f"pass {pass_index}, stage {stage}"
        super().__init__(f"stage solve failed at {where}: {reason}")


@dataclass(frozen=True)
class Layout:
    """Describes how a flat state vector maps onto space.

    kind is ``"scalar"``, ``"cartesian"`` (shape = (nx, ny)) or ``"mesh"``
    (shape = (n_nodes,)). Multi-species states are stored node-major,
    i.e. species are interleaved: index = node * species + s.
    """

    kind: str = "scalar"
    shape: tuple[int, ...] = ()
    species: int = 1

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=int)) * self.species if self.shape else self.species


@dataclass
class AffineOperator:
    """Implicit part F_j(t, v) = A_j v + g_j(t).

    ``stage_solve(rhs, gamma)`` must return w with (I - gamma*A_j) w = rhs.
    """

    apply: Callable[[np.ndarray], np.ndarray]
    source: Callable[[float], np.ndarray]
    stage_solve: Callable[[np.ndarray, float], np.ndarray]
    name: str = ""

    def __call__(self, t: float, v: np.ndarray) -> np.ndarray:
        return self.apply(v) + self.source(t)


@dataclass
class SplitSystem:
    """F(t, u) = F_0(t, u) + F_1(t, u) + ... + F_s(t, u).

    F_0 is evaluated explicitly; every F_j with j >= 1 is affine and is
    only ever handled through its own stage solve.
    """

    explicit_part: ExplicitFn
    implicit_parts: Sequence[AffineOperator]
    dimension: int
    layout: Layout = field(default_factory=Layout)

    def __post_init__(self):
        if len(self.implicit_parts) < 1:
            raise ValueError("a split system needs at least one implicit part")
        if self.dimension < 1:
            raise ValueError("dimension must be positive")

    @property
    def s(self) -> int:
        return len(self.implicit_parts)

    def parts(self, t: float, v: np.ndarray) -> list[np.ndarray]:
        """All s+1 parts [F_0, F_1, ..., F_s] evaluated at (t, v)."""
        out = [np.asarray(self.explicit_part(t, v), dtype=float)]
        out.extend(op(t, v) for op in self.implicit_parts)
        return out

    def __call__(self, t: float, v: np.ndarray) -> np.ndarray:
        parts = self.parts(t, v)
        total = parts[0].copy()
        for p in parts[1:]:
            total += p
        return total


def _check_state(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("empty state")
    return v


def norm_l2_discrete(v) -> float:
    """Scaled Euclidean norm sqrt(mean(v**2))."""
    v = _check_state(v)
    return float(np.sqrt(np.mean(v * v)))


def norm_max(v) -> float:
    v = _check_state(v)
    return float(np.max(np.abs(v)))


NORMS = {"L2": norm_l2_discrete, "MAX": norm_max}


def diagonal_system(lam0, lams: Sequence, sources: Sequence | None = None) -> SplitSystem:
    """Decoupled linear system u' = (lam0 + sum lams_j) u with elementwise rates.

    Each rate may be a scalar or an array (one entry per unknown).  Mostly
    useful as the scalar test equation and for checks against the stability
    function.  ``sources`` optionally gives g_j(t) callables.
    """
    lam0 = np.atleast_1d(np.asarray(lam0, dtype=float))
    rates = [np.atleast_1d(np.asarray(lam, dtype=float)) for lam in lams]
    m = max([lam0.size] + [r.size for r in rates])
    lam0 = np.broadcast_to(lam0, (m,)).copy()
    rates = [np.broadcast_to(r, (m,)).copy() for r in rates]
    if sources is None:
        sources = [None] * len(rates)

    def make(rate, src):
        zero = np.zeros(m)

        def source(t):
            return zero if src is None else np.broadcast_to(np.asarray(src(t), dtype=float), (m,)).copy()

        return AffineOperator(
            apply=lambda v: rate * v,
            source=source,
            stage_solve=lambda rhs, gamma: rhs / (1.0 - gamma * rate),
        )

    return SplitSystem(
        explicit_part=lambda t, v: lam0 * v,
        implicit_parts=[make(r, g) for r, g in zip(rates, sources)],
        dimension=m,
        layout=Layout("scalar", (m,)),
    )
