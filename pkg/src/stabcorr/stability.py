"""Linear stability of the modified Douglas schemes.

The stability function on the scalar test equation u' = (l_0 + ... + l_s) u
with z_j = dt*l_j is

    r(z) = 1 + (1 + z_0/2) * (z_0 + ... + z_s) / prod_{j>=1} (1 - z_j/2),

and r_star is its limit as the last implicit eigenvalue z_s -> -inf.
Functions accept numpy arrays and broadcast over leading axes, the last axis
being the (z_0, ..., z_s) tuple.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

UNIT_TOL = 1e-12


class StabilityPole(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class Wedge:
    alpha: float

    def __contains__(self, z) -> bool:
        return bool(in_wedge(z, self.alpha))


@dataclass(frozen=True)
class AdvDiffParams:
    """1D model u_t + a u_x = d u_xx + c u on a grid of width h."""

    a: float
    d: float
    h: float
    c: float = 0.0

    def __post_init__(self):
        if not (self.a > 0 and self.d > 0 and self.h > 0):
            raise ValueError("a, d and h must be positive")

    @property
    def mu(self) -> float:
        """Cell Peclet number a*h/d."""
        return self.a * self.h / self.d

    def nu(self, dt: float) -> float:
        """Courant number dt*a/h."""
        return dt * self.a / self.h

    @classmethod
    def from_numbers(cls, mu: float, nu: float, a: float = 1.0, h: float = 1.0):
        """Parameters with the given Peclet number; returns (params, dt)."""
        p = cls(a=a, d=a * h / mu, h=h)
        return p, nu * h / a


def _denominator(z_impl):
    den = np.prod(1.0 - 0.5 * z_impl, axis=-1)
    if np.any(den == 0):
        raise StabilityPole("stability function pole")
    return den


def stability_r(z):
    """r(z_0, z_1, ..., z_s) for z of shape (..., s+1)."""
    z = np.asarray(z, dtype=complex)
    if z.shape[-1] < 2:
        raise ValueError("need at least (z_0, z_1)")
    den = _denominator(z[..., 1:])
    r = 1.0 + (1.0 + 0.5 * z[..., 0]) * np.sum(z, axis=-1) / den
    return r[()] if r.ndim == 0 else r


def stability_r_star(z0, z_head: Sequence = ()):
    """Limit of r(z_0, z_head..., z_s) for z_s -> -inf.

    ``z_head`` holds z_1..z_{s-1}; empty for s = 1, where r_star = -(1 + z_0).
    """
    z0 = np.asarray(z0, dtype=complex)
    z_head = np.asarray(z_head, dtype=complex)
    den = 1.0 if z_head.size == 0 else _denominator(z_head)
    r = np.asarray(1.0 - 2.0 * (1.0 + 0.5 * z0) / den)
    return r[()] if r.ndim == 0 else r


def in_wedge(z, alpha: float):
    """True where z == 0 or |arg(-z)| <= alpha."""
    z = np.asarray(z, dtype=complex)
    # small slack so points constructed exactly on the boundary rays count
    res = (z == 0) | (np.abs(np.angle(-z)) <= alpha + 1e-14)
    return bool(res) if res.ndim == 0 else res


def _wedge_ray_samples(rng, n, alpha, log_lo=-3.0, log_hi=3.0):
    """Points -rho*exp(+-i*alpha), rho log-uniform in [10**log_lo, 10**log_hi]."""
    rho = 10.0 ** rng.uniform(log_lo, log_hi, size=n)
    sign = rng.choice([-1.0, 1.0], size=n)
    return -rho * np.exp(1j * sign * alpha)


def sample_wedge_max(
    s: int,
    alpha: float,
    n_samples: int,
    seed: int = 0,
    z0_mode: str = "zero",
    alphas: Sequence[float] | None = None,
) -> float:
    """Largest |r| found by sampling wedge boundaries.

    Every implicit z_j is drawn on the boundary rays of W_alpha (or of
    W_{alphas[j-1]} if per-part angles are given) with modulus log-uniform in
    [1e-3, 1e3]; z_0 is either 0 or on the circle |1 + z_0| = 1.  The limit
    z_s -> -inf is included through r_star for every sample.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    if alphas is None:
        alphas = [alpha] * s
    if len(alphas) != s:
        raise ValueError("need one wedge angle per implicit part")
    rng = np.random.default_rng(seed)
    if z0_mode == "zero":
        z0 = np.zeros(n_samples, dtype=complex)
    elif z0_mode == "unit_disk_shifted":
        z0 = -1.0 + np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=n_samples))
    else:
        raise ValueError(f"unknown z0_mode {z0_mode!r}")

    cols = [z0] + [_wedge_ray_samples(rng, n_samples, a) for a in alphas]
    z = np.stack(cols, axis=-1)
    worst = float(np.max(np.abs(stability_r(z))))
    r_lim = stability_r_star(z[:, 0], z[:, 1:s])
    return max(worst, float(np.max(np.abs(r_lim))))


def advdiff_eigenvalues(nu: float, mu: float, phi, discretization: str = "central"):
    """Fourier symbols (z_0, z_1) of explicit advection / implicit diffusion.

    ``phi`` may be an array of mode angles.
    """
    phi = np.asarray(phi, dtype=float)
    s2 = np.sin(2.0 * phi)
    z1 = -4.0 * (nu / mu) * np.sin(phi) ** 2 + 0j
    if discretization == "central":
        z0 = 1j * nu * s2
    elif discretization == "upwind":
        z0 = -nu * (1.0 - np.cos(2.0 * phi)) + 1j * nu * s2
    else:
        raise ValueError(f"unknown discretization {discretization!r}")
    return z0, z1


def advdiff_eigenvalues_params(p: AdvDiffParams, dt: float, phi, discretization="central"):
    return advdiff_eigenvalues(p.nu(dt), p.mu, phi, discretization)


def _amplification(z0, z1, condition):
    r_star = np.abs(1.0 - 2.0 * (1.0 + 0.5 * z0) / (1.0 - 0.5 * z1))
    if condition in ("rstar", "r_star"):
        return r_star
    if condition in ("r", "r_full"):
        r = np.abs(1.0 + (1.0 + 0.5 * z0) * (z0 + z1) / (1.0 - 0.5 * z1))
        return np.maximum(r, r_star)
    raise ValueError(f"unknown condition {condition!r}")


def max_amplification(mu: float, nu: float, condition: str = "r", phi_samples: int = 1024,
                      discretization: str = "central") -> float:
    """max over phi of |r| for the advection-diffusion symbols.

    condition ``"r"`` takes the worst case over an arbitrary stiff z_2 <= 0,
    which is max(|r(z_0, z_1)|, |r_star(z_0, z_1)|); ``"rstar"`` only the limit.
    """
    # endpoint excluded: phi and phi + 2*pi give the same mode
    phi = np.linspace(0.0, 2.0 * np.pi, phi_samples, endpoint=False)
    z0, z1 = advdiff_eigenvalues(nu, mu, phi, discretization)
    return float(_amplification(z0, z1, condition).max())


def scan_stability_region(mu_grid: Iterable[float], nu_grid: Iterable[float], condition: str = "r",
                          phi_samples: int = 1024, discretization: str = "central") -> np.ndarray:
    """Boolean mask, entry (i, j) stable for (mu_grid[i], nu_grid[j])."""
    mu_grid = np.asarray(list(mu_grid), dtype=float)
    nu_grid = np.asarray(list(nu_grid), dtype=float)
    if mu_grid.size == 0 or nu_grid.size == 0:
        raise ValueError("empty grid")
    if phi_samples < 64:
        raise ValueError("phi_samples must be at least 64")
    phi = np.linspace(0.0, 2.0 * np.pi, phi_samples, endpoint=False)
    mask = np.zeros((mu_grid.size, nu_grid.size), dtype=bool)
    for i, mu in enumerate(mu_grid):
        z0, z1 = advdiff_eigenvalues(nu_grid[:, None], mu, phi[None, :], discretization)
        mask[i] = _amplification(z0, z1, condition).max(axis=1) <= 1.0 + UNIT_TOL
    return mask


def write_region_csv(path_or_file, mu_grid, nu_grid, mask) -> None:
    """CSV with header ``mu,nu,stable``, one row per grid cell."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mu", "nu", "stable"])
        for i, mu in enumerate(mu_grid):
            for j, nu in enumerate(nu_grid):
                w.writerow([repr(float(mu)), repr(float(nu)), int(mask[i, j])])
    finally:
        if own:
            fh.close()


class PecletBoundError(ValueError):
    pass


def upwind_equivalent_split(a: float, d: float, h: float):
    """h-dependent advection-diffusion splitting with an upwind-like explicit part.

    Returns stencils (left, centre, right) for A_0 = S_a + mu/2 S_d and
    A_1 = (1 - mu/2) S_d, with S_a = a/(2h) [1, 0, -1], S_d = d/h^2 [1, -2, 1].
    """
    mu = a * h / d
    if mu > 2.0:
        raise PecletBoundError(f"Peclet bound violated: mu = {mu:g} > 2")
    stencil0 = (a / h) * np.array([1.0, -1.0, 0.0])
    stencil1 = (1.0 - 0.5 * mu) * (d / h**2) * np.array([1.0, -2.0, 1.0])
    return stencil0, stencil1


def critical_wedge_angle(s: int) -> float:
    """Largest alpha with |r(0, z_1..z_s)| <= 1 on W_alpha^s (s >= 2)."""
    return 0.5 * math.pi / (s - 1)
