"""Explicit time stepping for u_t = c(x,t)|Du| + gamma * curvature term.

The update is forward Euler on the monotone Godunov advection term plus the
central-difference regularised curvature trace, clamped to [-1, 1], with the
far field outside B(0, far_radius) overwritten to -1 each step.  Time steps
obey dt <= safety * min(h/max|c|, h^2/(4*gamma)); `advance` refuses anything
larger.  A guard aborts if the zero set ever reaches the containment ring
B(0, far_radius - 4h) from inside, since past that point the overwrite would
be carving the front itself.
"""

import bisect
from dataclasses import dataclass, field as dataclass_field
from functools import lru_cache

import numpy as np

from .errors import FrontEscapeError, StabilityError
from .grid import (
    EPS_DENOM,
    GridSpec,
    ScalarField,
    central_gradient_norm,
    constant_field,
    curvature_term,
    upwind_gradient_norm,
)


class ConstantSpeed:
    """Speed provider for a fixed field (or constant) c(x)."""

    chi_independent = True

    def __init__(self, spec: GridSpec, value):
        if isinstance(value, ScalarField):
            self.field = value
        else:
            self.field = constant_field(spec, float(value))
        self._max = float(np.abs(self.field.values).max())

    def speed_at(self, t: float) -> ScalarField:
        return self.field

    def max_abs(self, t: float) -> float:
        return self._max


class PiecewiseConstantSpeed:
    """Left-continuous piecewise-constant-in-time speed over snapshot times."""

    chi_independent = False

    def __init__(self, times, fields):
        self.times = [float(t) for t in times]
        if sorted(self.times) != self.times:
            raise ValueError("speed snapshot times must be increasing")
        if len(fields) != len(self.times):
            raise ValueError("one speed field per snapshot time required")
        self.fields = list(fields)
        self._max = [float(np.abs(f.values).max()) for f in fields]

    def _index(self, t: float) -> int:
        i = bisect.bisect_right(self.times, t) - 1
        return min(max(i, 0), len(self.fields) - 1)

    def speed_at(self, t: float) -> ScalarField:
        return self.fields[self._index(t)]

    def max_abs(self, t: float) -> float:
        return self._max[self._index(t)]


@dataclass
class LocalProblem:
    """A frozen-speed level-set evolution on [0, horizon]."""

    speed: object
    gamma: float
    horizon: float
    far_radius: float
    spec: GridSpec
    eps_reg: float | None = None
    # the cfl_timestep formula is the one-axis bound; the default operating
    # point halves it so the two-axis upwind update stays monotone
    cfl_safety: float = 0.45
    escape_guard: bool = True

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.horizon < 0:
            raise ValueError(f"horizon must be nonnegative, got {self.horizon}")
        if not (0 < self.cfl_safety <= 1):
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        limit = self.spec.half_extent - 2 * self.spec.h
        if self.far_radius > limit + 1e-12:
            raise ValueError(
                f"far_radius {self.far_radius:.4g} violates the bound L-2h={limit:.4g}"
            )
        if self.eps_reg is None:
            self.eps_reg = self.spec.h


def default_far_radius(spec: GridSpec, c_max: float, horizon: float, R0: float) -> float:
    """Containment radius max-speed * T + R0 + sqrt(2), capped by the domain."""
    return min(c_max * horizon + R0 + np.sqrt(2.0), spec.half_extent - 2 * spec.h)


def cfl_timestep(c_max: float, gamma: float, h: float, safety: float = 0.9) -> float:
    """safety * min(h / max|c|, h^2 / (4 gamma)), guarded denominators."""
    if c_max < 0 or gamma < 0 or h <= 0 or not (0 < safety <= 1):
        raise ValueError("cfl_timestep arguments out of range")
    return safety * min(h / (c_max + EPS_DENOM), h * h / (4.0 * gamma + EPS_DENOM))


@lru_cache(maxsize=64)
def _far_mask(spec: GridSpec, far_radius: float) -> np.ndarray:
    mask = spec.radius() > far_radius
    mask.setflags(write=False)
    return mask


def advance(
    u: ScalarField,
    c_t: ScalarField | float,
    gamma: float,
    dt: float,
    eps_reg: float | None = None,
    far_radius: float | None = None,
) -> ScalarField:
    """One explicit Euler step; refuses dt beyond the CFL bound."""
    spec = u.spec
    if isinstance(c_t, ScalarField):
        u.check_same_grid(c_t)
        cvals = c_t.values
    else:
        cvals = np.full((spec.n, spec.n), float(c_t))
    c_max = float(np.abs(cvals).max())
    bound = cfl_timestep(c_max, gamma, spec.h, safety=1.0)
    if dt > bound * (1.0 + 1e-9):
        raise StabilityError(
            f"dt={dt:.3e} exceeds the CFL bound {bound:.3e} (max|c|={c_max:.3g}, "
            f"gamma={gamma:.3g}, h={spec.h:.3e})"
        )

    update = np.zeros_like(u.values)
    if c_max > 0.0:
        update += cvals * upwind_gradient_norm(u, cvals)
    if gamma > 0.0:
        update += gamma * curvature_term(u, eps_reg)

    out = np.clip(u.values + dt * update, -1.0, 1.0)
    if far_radius is not None:
        out[_far_mask(spec, float(far_radius))] = -1.0
    return ScalarField(spec, out)


@dataclass
class Trajectory:
    """Snapshots of one evolution at requested output times."""

    times: np.ndarray
    snapshots: list
    dt_used: list
    lipschitz_log: list
    far_radius: float
    gamma: float
    eps_reg: float

    @property
    def spec(self) -> GridSpec:
        return self.snapshots[0].spec

    def field_at(self, t: float) -> ScalarField:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t={t}")
        return self.snapshots[i]


def _normalise_output_times(output_times, horizon: float) -> np.ndarray:
    raw = [float(t) for t in output_times]
    if any(b < a for a, b in zip(raw, raw[1:])):
        raise ValueError("output times must be nondecreasing")
    times = np.asarray(sorted(set(raw)), dtype=np.float64)
    if times.size and (times[0] < -1e-15 or times[-1] > horizon * (1 + 1e-12)):
        raise ValueError("output times must lie in [0, horizon]")
    if not times.size or times[0] > 0.0:
        times = np.concatenate([[0.0], times])
    if times[-1] < horizon:
        times = np.concatenate([times, [horizon]])
    return times


def solve(problem: LocalProblem, u0: ScalarField, output_times) -> Trajectory:
    """March to the horizon, landing exactly on every output time."""
    spec = u0.spec
    if spec != problem.spec:
        raise ValueError("initial field grid does not match the problem grid")
    times = _normalise_output_times(output_times, problem.horizon)
    h = spec.h

    measure_mask = spec.radius() <= problem.far_radius - 2 * h
    guard_mask = spec.radius() >= problem.far_radius - 4 * h

    u = ScalarField(spec, np.clip(u0.values, -1.0, 1.0))
    u.values[_far_mask(spec, problem.far_radius)] = -1.0

    def check_guard(t):
        if problem.escape_guard and np.any(u.values[guard_mask] >= 0.0):
            raise FrontEscapeError(
                f"zero set reached the containment ring at t={t:.6g} "
                f"(far_radius={problem.far_radius:.4g})"
            )

    def seminorm():
        return float(central_gradient_norm(u)[measure_mask].max())

    check_guard(0.0)
    traj = Trajectory(
        times=times,
        snapshots=[u.copy()],
        dt_used=[0.0],
        lipschitz_log=[seminorm()],
        far_radius=problem.far_radius,
        gamma=problem.gamma,
        eps_reg=problem.eps_reg,
    )

    t = 0.0
    for t_next in times[1:]:
        last_dt = 0.0
        while t < t_next:
            c_field = problem.speed.speed_at(t)
            nominal = cfl_timestep(
                problem.speed.max_abs(t), problem.gamma, h, problem.cfl_safety
            )
            remaining = t_next - t
            if remaining <= nominal * (1.0 + 1e-9):
                dt = remaining
                t = t_next
            else:
                dt = nominal
                t += dt
            u = advance(
                u, c_field, problem.gamma, dt,
                eps_reg=problem.eps_reg, far_radius=problem.far_radius,
            )
            last_dt = dt
        check_guard(t)
        traj.snapshots.append(u.copy())
        traj.dt_used.append(last_dt)
        traj.lipschitz_log.append(seminorm())
    return traj


@dataclass
class RegularityReport:
    times: np.ndarray
    lipschitz_values: np.ndarray
    K_fit: float
    holder_const: float


def regularity_report(traj: Trajectory) -> RegularityReport:
    """Exponential-growth fit of the Lipschitz log and the worst parabolic
    time-Hoelder quotient |u(x,t) - u(x,s)| / sqrt|t-s| over snapshot pairs.

    The containment ring is excluded from both measurements.
    """
    if len(traj.snapshots) < 3:
        raise ValueError("regularity_report needs at least 3 snapshots")
    times = np.asarray(traj.times, dtype=np.float64)
    lip = np.asarray(traj.lipschitz_log, dtype=np.float64)
    slope = np.polyfit(times, np.log(np.maximum(lip, 1e-300) / max(lip[0], 1e-300)), 1)[0]
    K_fit = float(max(slope, 0.0))

    mask = traj.spec.radius() <= traj.far_radius - 2 * traj.spec.h
    holder = 0.0
    for i in range(len(times)):
        vi = traj.snapshots[i].values[mask]
        for j in range(i + 1, len(times)):
            gap = times[j] - times[i]
            if gap <= 0:
                continue
            diff = float(np.abs(traj.snapshots[j].values[mask] - vi).max())
            holder = max(holder, diff / np.sqrt(gap))
    return RegularityReport(times, lip, K_fit, float(holder))


# ---------------------------------------------------------------------------
# trajectory serialisation: t_<index>.txt plus a manifest CSV


def dump_trajectory(traj: Trajectory, directory):
    import os

    from .grid import dump_field

    os.makedirs(directory, exist_ok=True)
    rows = ["index,time,dt_used,lipschitz_seminorm"]
    for i, (t, snap) in enumerate(zip(traj.times, traj.snapshots)):
        dump_field(snap, os.path.join(directory, f"t_{i:03d}.txt"))
        rows.append(
            f"{i},{t:.17g},{traj.dt_used[i]:.17g},{traj.lipschitz_log[i]:.17g}"
        )
    with open(os.path.join(directory, "manifest.csv"), "w") as fh:
        fh.write("\n".join(rows) + "\n")
    with open(os.path.join(directory, "meta.txt"), "w") as fh:
        fh.write(
            f"far_radius = {traj.far_radius:.17g}\n"
            f"gamma = {traj.gamma:.17g}\n"
            f"eps_reg = {traj.eps_reg:.17g}\n"
        )


def load_trajectory(directory) -> Trajectory:
    import os

    from .grid import load_field

    rows = np.loadtxt(
        os.path.join(directory, "manifest.csv"), delimiter=",", skiprows=1, ndmin=2
    )
    meta = {}
    with open(os.path.join(directory, "meta.txt")) as fh:
        for raw in fh:
            key, _, val = raw.partition("=")
            if val:
                meta[key.strip()] = float(val)
    snapshots = [
        load_field(os.path.join(directory, f"t_{int(i):03d}.txt")) for i in rows[:, 0]
    ]
    return Trajectory(
        times=rows[:, 1].copy(),
        snapshots=snapshots,
        dt_used=list(rows[:, 2]),
        lipschitz_log=list(rows[:, 3]),
        far_radius=meta["far_radius"],
        gamma=meta["gamma"],
        eps_reg=meta["eps_reg"],
    )
