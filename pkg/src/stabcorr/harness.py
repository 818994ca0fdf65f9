"""Time loops, error measurement and the convergence studies."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import femdd
from .core import NORMS, AffineOperator, SplitSystem
from .fdgrid import CartesianGrid, DirichletData, build_heat_dimsplit
from .problems import (HeatVariant, SchnakParams, TravelingWaveParams, heat_exact, heat_source,
                       traveling_wave_exact, traveling_wave_reaction)
from .schemes import SchemeConfig, get_scheme, step

BLOWUP_FACTOR = 1e6
CSV_HEADER = ["scheme", "theta", "dt", "h", "norm", "error", "order"]

# reference errors for the manufactured heat problem at 1/dt = 50, 100, 200, 400
REFERENCE_ERRORS = {
    1: {  # local L2 errors after one step
        "DOUGLAS": [1.31e-3, 3.58e-4, 9.54e-5, 2.49e-5],
        "SC1A": [2.14e-4, 4.91e-5, 1.10e-5, 2.40e-6],
        "SC1B": [6.70e-4, 1.42e-4, 3.02e-5, 6.40e-6],
    },
    2: {  # global L2 errors at t = 1
        "DOUGLAS": [2.52e-3, 1.22e-3, 6.04e-4, 3.00e-4],
        "SC1A": [1.21e-4, 3.04e-5, 7.64e-6, 1.91e-6],
        "SC1B": [6.63e-4, 1.60e-4, 3.90e-5, 9.60e-6],
    },
    3: {  # global max-norm errors at t = 1
        "DOUGLAS": [4.37e-3, 2.16e-3, 1.07e-3, 5.36e-4],
        "SC1A": [3.11e-4, 7.93e-5, 2.00e-5, 5.04e-6],
        "SC1B": [1.05e-2, 5.04e-3, 2.46e-3, 1.21e-3],
    },
}
TABLE_STEPS = [50, 100, 200, 400]


class BlowUpError(ArithmeticError):
    def __init__(self, step: int):
        self.step = step
        super().__init__(f"blow-up at step {step}")


def n_steps(t0: float, T: float, dt: float) -> int:
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = round((T - t0) / dt)
    if n < 0 or abs(n * dt - (T - t0)) > 1e-9 * max(1.0, abs(T)):
        raise ValueError(f"(T - t0)/dt = {(T - t0) / dt!r} is not a whole number of steps")
    return n


def integrate(sys: SplitSystem, scheme, u0, t0: float, T: float, dt: float,
              blowup_factor: float = BLOWUP_FACTOR) -> np.ndarray:
    """u_N after N = (T - t0)/dt fixed steps.

    Raises BlowUpError if the state turns non-finite or its max norm exceeds
    ``blowup_factor`` times the initial one.
    """
    cfg = get_scheme(scheme)
    N = n_steps(t0, T, dt)
    u = np.array(u0, dtype=float)
    limit = blowup_factor * max(float(np.max(np.abs(u))), 1.0)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, N + 1):
            u = step(sys, cfg, u, t0 + (n - 1) * dt, dt)
            if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > limit:
                raise BlowUpError(n)
    return u


# --- problems on the Cartesian grid --------------------------------------

@dataclass
class GridProblem:
    """A PDE on the unit square with known exact solution."""

    name: str
    eps: float
    exact: Callable          # (x, y, t) -> u
    source: Callable | None = None
    reaction: Callable | None = None

    def system(self, grid: CartesianGrid) -> SplitSystem:
        return build_heat_dimsplit(grid, self.eps, DirichletData(self.exact), self.source, self.reaction)

    def exact_state(self, grid: CartesianGrid, t: float) -> np.ndarray:
        return grid.restrict(self.exact, t)


def heat_problem(variant=HeatVariant.POLY) -> GridProblem:
    variant = HeatVariant(variant)
    return GridProblem(
        name=f"heat:{variant.value}",
        eps=1.0,
        exact=lambda x, y, t: heat_exact(variant, x, y, t),
        source=lambda x, y, t: heat_source(variant, x, y, t),
    )


def wave_problem(params: TravelingWaveParams) -> GridProblem:
    return GridProblem(
        name=f"wave:eps={params.epsilon:g}",
        eps=params.epsilon,
        exact=lambda x, y, t: traveling_wave_exact(params, x, y, t),
        reaction=traveling_wave_reaction(params),
    )


def local_error(problem: GridProblem, scheme, dt: float, h: float, norm: str = "L2", t0: float = 0.0) -> float:
    """Error after one step started from the exact solution at t0."""
    grid = CartesianGrid.from_h(h)
    sys = problem.system(grid)
    u1 = step(sys, scheme, problem.exact_state(grid, t0), t0, dt)
    return NORMS[norm](problem.exact_state(grid, t0 + dt) - u1)


def global_error(problem: GridProblem, scheme, dt: float, h: float, T: float = 1.0, norm: str = "L2") -> float:
    grid = CartesianGrid.from_h(h)
    sys = problem.system(grid)
    u = integrate(sys, scheme, problem.exact_state(grid, 0.0), 0.0, T, dt)
    return NORMS[norm](problem.exact_state(grid, T) - u)


# --- records ------------------------------------------------------------

@dataclass
class ConvergenceRecord:
    scheme: str
    theta: float
    dt: float
    h: float
    norm: str
    error: float | None           # None marks an unstable run
    order: float | None = None

    @property
    def unstable(self) -> bool:
        return self.error is None

    def row(self) -> list[str]:
        err = "unstable" if self.error is None else f"{self.error:.6e}"
        order = "" if self.order is None else f"{self.order:.4f}"
        return [self.scheme, f"{self.theta:.12g}", f"{self.dt:.12g}", f"{self.h:.12g}", self.norm, err, order]


def _order(e_prev, e, dt_prev, dt):
    if e_prev is None or e is None or e_prev <= 0 or e <= 0 or dt_prev == dt:
        return None
    return math.log(e_prev / e) / math.log(dt_prev / dt)


def observed_orders(records: Sequence) -> list:
    """log(e_{k-1}/e_k) / log(dt_{k-1}/dt_k) for consecutive records.

    Accepts ConvergenceRecords or bare error values (then dt is taken to
    halve).  Undefined entries (zero or unstable errors) are None.
    """
    out = []
    for prev, cur in zip(records[:-1], records[1:]):
        if isinstance(cur, ConvergenceRecord):
            out.append(_order(prev.error, cur.error, prev.dt, cur.dt))
        else:
            out.append(_order(prev, cur, 2.0, 1.0))
    return out


def fill_orders(records: list) -> list:
    """Set .order on each record from its predecessor in the same (scheme, theta, norm) series."""
    last = {}
    for rec in records:
        key = (rec.scheme, rec.theta, rec.norm)
        prev = last.get(key)
        rec.order = None if prev is None else _order(prev.error, rec.error, prev.dt, rec.dt)
        last[key] = rec
    return records


def write_records_csv(records: Iterable[ConvergenceRecord], out=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rec in records:
        w.writerow(rec.row())
    text = buf.getvalue()
    if out is not None:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    return text


def read_records_csv(path) -> list:
    recs = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            err = None if row["error"] == "unstable" else float(row["error"])
            order = float(row["order"]) if row["order"] else None
            recs.append(ConvergenceRecord(row["scheme"], float(row["theta"]), float(row["dt"]),
                                          float(row["h"]), row["norm"], err, order))
    return recs


# --- run plans ------------------------------------------------------------

@dataclass
class RunPlan:
    """A convergence study on a Cartesian-grid problem.

    For every h in ``h_list`` (decreasing), Douglas-type schemes step with
    dt = dt_factor*h and the two-pass schemes with dt = extended_factor*h.
    A dt that does not divide T is shrunk to T/ceil(T/dt).
    """

    problem: GridProblem
    schemes: list
    h_list: list
    T: float = 1.0
    dt_factor: float = 1.0
    extended_factor: float = 1.0
    norms: tuple = ("L2", "MAX")
    local: bool = False

    def __post_init__(self):
        if any(b >= a for a, b in zip(self.h_list, self.h_list[1:])):
            raise ValueError("h_list must be strictly decreasing")

    def dt_for(self, cfg: SchemeConfig, h: float) -> float:
        dt = (self.extended_factor if cfg.extended else self.dt_factor) * h
        if self.local:
            return dt
        n = self.T / dt
        if abs(n - round(n)) > 1e-9:
            dt = self.T / math.ceil(n)
        return dt


def run_plan(plan: RunPlan) -> list:
    records = []
    for name in plan.schemes:
        cfg = get_scheme(name)
        by_norm = {nm: [] for nm in plan.norms}
        for h in plan.h_list:
            dt = plan.dt_for(cfg, h)
            grid = CartesianGrid.from_h(h)
            sys = plan.problem.system(grid)
            try:
                if plan.local:
                    u = step(sys, cfg, plan.problem.exact_state(grid, 0.0), 0.0, dt)
                    t_end = dt
                else:
                    u = integrate(sys, cfg, plan.problem.exact_state(grid, 0.0), 0.0, plan.T, dt)
                    t_end = plan.T
                err = plan.problem.exact_state(grid, t_end) - u
                errors = {nm: NORMS[nm](err) for nm in plan.norms}
            except BlowUpError:
                errors = {nm: None for nm in plan.norms}
            for nm in plan.norms:
                by_norm[nm].append(ConvergenceRecord(cfg.label, cfg.theta, dt, h, nm, errors[nm]))
        for nm in plan.norms:
            records.extend(fill_orders(by_norm[nm]))
    return records


def heat_table(table: int, schemes=("DOUGLAS", "SC1A", "SC1B"), steps=TABLE_STEPS) -> list:
    """Error rows for the manufactured heat problem with dt = h."""
    if table not in REFERENCE_ERRORS:
        raise ValueError("table must be 1, 2 or 3")
    norm = "MAX" if table == 3 else "L2"
    plan = RunPlan(heat_problem(HeatVariant.POLY), list(schemes), [1.0 / n for n in steps],
                   norms=(norm,), local=(table == 1))
    return run_plan(plan)


def wave_study(epsilon: float, h_list=(1 / 25, 1 / 50, 1 / 100),
               schemes=("DOUGLAS", "SC1A", "SC1B", "HV", "HW", "CS"), T: float = 1.0) -> list:
    """Traveling-wave errors at T with dt = h (Douglas type) and dt = 2h (two-pass)."""
    plan = RunPlan(wave_problem(TravelingWaveParams(epsilon=epsilon)), list(schemes), list(h_list), T=T,
                   dt_factor=1.0, extended_factor=2.0)
    return run_plan(plan)


# --- Schnakenberg on the hexagon -----------------------------------------------

@dataclass
class SchnakSetup:
    mesh: femdd.MeshHex
    system: SplitSystem
    y0: np.ndarray
    params: SchnakParams = field(default_factory=SchnakParams)


def schnak_setup(n_sub: int, params: SchnakParams | None = None, pou=None, perturbed: bool = True) -> SchnakSetup:
    p = params or SchnakParams()
    if not perturbed:
        p = SchnakParams(p.D1, p.D2, p.kappa, p.a, p.b, amplitude=0.0, centre=p.centre)
    mesh = femdd.triangulate_hexagon(n_sub)
    pou = pou or femdd.PartitionOfUnity()
    sys = femdd.build_schnakenberg_system(mesh, pou, p)
    return SchnakSetup(mesh, sys, femdd.schnakenberg_state(mesh, p), p)


def make_reference(setup: SchnakSetup, T: float, dt_ref: float, scheme="SC1A") -> np.ndarray:
    """Time-accurate solution on the same mesh, by default SC1A at dt_ref."""
    return integrate(setup.system, scheme, setup.y0, 0.0, T, dt_ref)


def schnak_study(n_sub: int, T: float, dt_list, schemes=("DOUGLAS", "SC1A", "SC1B", "HV", "HW", "CS"),
                 dt_ref: float | None = None, setup: SchnakSetup | None = None) -> list:
    """Temporal L2 errors of the u-component against a fine reference run."""
    dt_list = list(dt_list)
    if dt_ref is None:
        dt_ref = min(dt_list) / 8
    for dt in dt_list:
        ratio = dt / dt_ref
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("dt_ref must divide every dt")
    setup = setup or schnak_setup(n_sub)
    ref = make_reference(setup, T, dt_ref)
    h = setup.mesh.h
    records = []
    for name in schemes:
        cfg = get_scheme(name)
        series = []
        for dt in dt_list:
            try:
                y = integrate(setup.system, cfg, setup.y0, 0.0, T, dt)
                err = NORMS["L2"](y[0::2] - ref[0::2])
            except BlowUpError:
                err = None
            series.append(ConvergenceRecord(cfg.label, cfg.theta, dt, h, "L2", err))
        records.extend(fill_orders(series))
    return records


# --- work accounting -----------------------------------------------------------

def count_stage_solves(sys: SplitSystem):
    """Copy of ``sys`` whose stage solves are counted; returns (system, counter dict)."""
    counter = {"solves": 0}

    def wrap(op: AffineOperator):
        def solve(rhs, gamma):
            counter["solves"] += 1
            return op.stage_solve(rhs, gamma)
        return AffineOperator(op.apply, op.source, solve, op.name)

    wrapped = SplitSystem(sys.explicit_part, [wrap(op) for op in sys.implicit_parts], sys.dimension, sys.layout)
    return wrapped, counter
