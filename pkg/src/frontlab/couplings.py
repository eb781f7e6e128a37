"""Nonlocal speed laws and the distances that compare occupation histories.

Three couplings turn an occupation history chi (indicator snapshots on a
shared time grid) into a speed field for the local solver:

* dislocation:     c(x, t) = (c0 * chi(t))(x) + c1(x), unit mobility;
* fitzhugh-nagumo: c(x, t) = alpha(v(x, t)) where v solves the explicit heat
                   equation v_t - lap v = g+(v) chi + g-(v)(1 - chi);
* volume:          c(t) = beta(area of {chi(t) = 1}), spatially constant.

Occupation histories are compared by kappa(t) = ||chi1(t) - chi2(t)||_L1 and
by the heat-kernel-weighted kappa_bar(x, t) = int_0^t int G(x-y, t-s)
|chi1 - chi2|(y, s) dy ds with G the unit-mass Gaussian; the s -> t endpoint
is handled by the delta limit of G, and each discrete slice is normalised to
unit mass so kappa_bar <= t holds exactly.
"""

import bisect
import re
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.signal import fftconvolve

from .grid import GridSpec, ScalarField, constant_field, lebesgue_measure
from .solver import ConstantSpeed, PiecewiseConstantSpeed

_trapezoid = getattr(np, "trapezoid", np.trapz)

# ---------------------------------------------------------------------------
# scalar maps r -> f(r) with recorded Lipschitz constants and bounds


@dataclass(frozen=True)
class ScalarMap:
    """A 1-D map with its Lipschitz constant and range, parseable from text."""

    kind: str
    params: tuple
    lip: float
    lower: float
    upper: float

    def __call__(self, r):
        r = np.asarray(r, dtype=np.float64)
        if self.kind == "constant":
            out = np.full_like(r, self.params[0])
        elif self.kind == "affine":
            a, b = self.params
            out = a + b * r
        elif self.kind == "clamp_affine":
            a, b, lo, hi = self.params
            out = np.clip(a + b * r, lo, hi)
        else:
            raise ValueError(f"unknown scalar map kind {self.kind!r}")
        return float(out) if out.ndim == 0 else out

    def __str__(self):
        args = ",".join(f"{p:g}" for p in self.params)
        return f"{self.kind}({args})"


def constant_map(a: float) -> ScalarMap:
    return ScalarMap("constant", (float(a),), 0.0, float(a), float(a))


def affine_map(a: float, b: float) -> ScalarMap:
    return ScalarMap("affine", (float(a), float(b)), abs(float(b)), -np.inf, np.inf)


def clamp_affine_map(a: float, b: float, lo: float, hi: float) -> ScalarMap:
    if hi < lo:
        raise ValueError(f"clamp bounds out of order: [{lo}, {hi}]")
    return ScalarMap(
        "clamp_affine", (float(a), float(b), float(lo), float(hi)),
        abs(float(b)), float(lo), float(hi),
    )


_MAP_BUILDERS = {
    "constant": constant_map,
    "affine": affine_map,
    "clamp_affine": clamp_affine_map,
}


def _parse_call(text: str) -> tuple[str, list[float]]:
    m = re.fullmatch(r"\s*([a-z_]+)\s*\(([^)]*)\)\s*", text)
    if not m:
        raise ValueError(f"expected name(arg, ...), got {text!r}")
    name = m.group(1)
    args = [float(a) for a in m.group(2).split(",")] if m.group(2).strip() else []
    return name, args


def parse_scalar_map(text: str) -> ScalarMap:
    name, args = _parse_call(text)
    if name not in _MAP_BUILDERS:
        raise ValueError(f"unknown scalar map {name!r}; choose from {sorted(_MAP_BUILDERS)}")
    try:
        return _MAP_BUILDERS[name](*args)
    except TypeError:
        raise ValueError(f"wrong number of arguments for {name}: {text!r}") from None


# ---------------------------------------------------------------------------
# convolution kernels


def disc_bump_kernel(spec: GridSpec, mass: float, rho: float) -> ScalarField:
    """Uniform density mass / (pi rho^2) on the disc |x| <= rho."""
    r = spec.radius()
    vals = np.where(r <= rho, mass / (np.pi * rho * rho), 0.0)
    return ScalarField(spec, vals)


def core_ring_kernel(
    spec: GridSpec, core_mass: float, core_rho: float,
    ring_mass: float, ring_inner: float, ring_outer: float,
) -> ScalarField:
    """Uniform core plus a uniform annulus; masses may carry either sign."""
    if not (0 < core_rho and core_rho <= ring_inner < ring_outer):
        raise ValueError("core_ring radii must satisfy 0 < core <= inner < outer")
    r = spec.radius()
    vals = np.where(r <= core_rho, core_mass / (np.pi * core_rho**2), 0.0)
    ring = (r > ring_inner) & (r <= ring_outer)
    vals = vals + np.where(ring, ring_mass / (np.pi * (ring_outer**2 - ring_inner**2)), 0.0)
    return ScalarField(spec, vals)


def gaussian_kernel(spec: GridSpec, mass: float, sigma: float) -> ScalarField:
    r = spec.radius()
    vals = mass * np.exp(-0.5 * (r / sigma) ** 2) / (2.0 * np.pi * sigma * sigma)
    return ScalarField(spec, vals)


_KERNEL_BUILDERS = {
    "disc_bump": disc_bump_kernel,
    "core_ring": core_ring_kernel,
    "gaussian": gaussian_kernel,
}


def parse_kernel(text: str, spec: GridSpec) -> ScalarField:
    name, args = _parse_call(text)
    if name not in _KERNEL_BUILDERS:
        raise ValueError(f"unknown kernel {name!r}; choose from {sorted(_KERNEL_BUILDERS)}")
    try:
        return _KERNEL_BUILDERS[name](spec, *args)
    except TypeError:
        raise ValueError(f"wrong number of arguments for {name}: {text!r}") from None


def support_radius(f: ScalarField) -> float:
    nz = np.abs(f.values) > 0.0
    if not nz.any():
        return 0.0
    return float(f.spec.radius()[nz].max())


def convolve_kernel(c0: ScalarField, chi: ScalarField) -> ScalarField:
    """(c0 * chi)(x_i) = h^2 sum_j c0(x_i - x_j) chi(x_j).

    FFT implementation; agrees with the direct double sum to roundoff (the
    dual-route test pins this to 1e-10 relative).  Offsets falling outside
    the kernel grid contribute zero, i.e. the kernel is not wrapped.
    """
    c0.check_same_grid(chi)
    h = c0.spec.h
    vals = fftconvolve(chi.values, c0.values, mode="same") * (h * h)
    return ScalarField(c0.spec, vals)


def convolution_truncated(c0: ScalarField, chi: ScalarField) -> bool:
    """True when kernel support centred on the occupied set sticks out of the
    domain, so the zero-extension truncates the convolution."""
    occupied = chi.values > 0.0
    if not occupied.any():
        return False
    chi_radius = float(chi.spec.radius()[occupied].max())
    return support_radius(c0) + chi_radius > chi.spec.half_extent


# ---------------------------------------------------------------------------
# occupation histories and coupling distances


@dataclass
class OccupationHistory:
    """Indicator snapshots chi(t_k) on an increasing time grid, extended to
    arbitrary t as a left-continuous step function."""

    times: np.ndarray
    fields: list

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        if self.times.ndim != 1 or len(self.fields) != self.times.size:
            raise ValueError("one indicator field per time required")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("history times must be strictly increasing")
        for f in self.fields:
            vals = f.values
            if not np.all((vals == 0.0) | (vals == 1.0)):
                raise ValueError("occupation fields must be 0/1 valued")

    @property
    def spec(self) -> GridSpec:
        return self.fields[0].spec

    def index_at(self, t: float) -> int:
        i = bisect.bisect_right(list(self.times), float(t)) - 1
        return min(max(i, 0), len(self.fields) - 1)

    def chi_at(self, t: float) -> ScalarField:
        return self.fields[self.index_at(t)]


def constant_history(chi: ScalarField, times) -> OccupationHistory:
    return OccupationHistory(np.asarray(times, dtype=np.float64),
                             [chi] * len(np.asarray(times)))


def kappa(chi1: ScalarField, chi2: ScalarField) -> float:
    """L1 distance h^2 sum |chi1 - chi2| between two indicator fields."""
    chi1.check_same_grid(chi2)
    h = chi1.spec.h
    return float(h * h * np.abs(chi1.values - chi2.values).sum())


def _shared_times(h1: OccupationHistory, h2: OccupationHistory, t: float) -> np.ndarray:
    if h1.times.size != h2.times.size or np.any(h1.times != h2.times):
        raise ValueError("histories must share their time grid")
    times = h1.times[h1.times <= t + 1e-15]
    if times.size == 0 or times[0] > 0:
        raise ValueError("histories must start at time 0")
    if times[-1] < t:
        times = np.concatenate([times, [t]])
    return times

def gauss_slice(diff: np.ndarray, spec: GridSpec, x: np.ndarray, tau: float) -> float:
    """Unit-mass discrete average of diff against G(x - ., tau)."""
    if tau <= spec.h**2 / 16.0:
        # sharper than the grid: use the delta limit at the nearest node
        L = spec.half_extent
        ix = int(np.clip(np.round((x[0] + L) / spec.h), 0, spec.n - 1))
        iy = int(np.clip(np.round((x[1] + L) / spec.h), 0, spec.n - 1))
        return float(diff[iy, ix])
    ax = spec.axis()
    gx = np.exp(-((x[0] - ax) ** 2) / (4.0 * tau))
    gy = np.exp(-((x[1] - ax) ** 2) / (4.0 * tau))
    w = np.outer(gy, gx)
    return float((w * diff).sum() / w.sum())


def kappa_bar(
    hist1: OccupationHistory, hist2: OccupationHistory, x, t: float
) -> float:
    """Heat-kernel-weighted separation of two histories at (x, t).

    Trapezoidal quadrature in s over the shared time grid; each slice is the
    unit-mass Gaussian average of |chi1 - chi2|(., s), so the result is
    bounded by t whenever the difference is bounded by 1.
    """
    x = np.asarray(x, dtype=np.float64)
    spec = hist1.spec
    times = _shared_times(hist1, hist2, t)
    if t <= 0:
        return 0.0
    slices = []
    for s in times:
        diff = np.abs(hist1.chi_at(s).values - hist2.chi_at(s).values)
        slices.append(gauss_slice(diff, spec, x, t - s))
    return float(_trapezoid(slices, times))


def kappa_bar_bound(hist1: OccupationHistory, hist2: OccupationHistory, t: float) -> float:
    """int_0^t min(1, kappa(s) / (4 pi (t-s))) ds, the sup-norm envelope of
    kappa_bar in the plane; same quadrature grid as kappa_bar."""
    times = _shared_times(hist1, hist2, t)
    if t <= 0:
        return 0.0
    vals = []
    for s in times:
        k = kappa(hist1.chi_at(s), hist2.chi_at(s))
        gap = t - s
        if gap <= 0:
            vals.append(1.0 if k > 0 else 0.0)
        else:
            vals.append(min(1.0, k / (4.0 * np.pi * gap)))
    return float(_trapezoid(vals, times))


# ---------------------------------------------------------------------------
# dislocation coupling


@dataclass
class DislocationCoupling:
    """c[chi] = c0 * chi + c1 with unit mobility and isotropic anisotropy."""

    c0: ScalarField
    c1: object = 0.0   # float or ScalarField

    @property
    def chi_independent(self) -> bool:
        return bool(np.all(self.c0.values == 0.0))

    def speed_field(self, chi_t: ScalarField) -> ScalarField:
        out = convolve_kernel(self.c0, chi_t)
        c1 = self.c1.values if isinstance(self.c1, ScalarField) else float(self.c1)
        return ScalarField(out.spec, out.values + c1)

    def speed_provider(self, chi_hist: OccupationHistory):
        if self.chi_independent:
            return ConstantSpeed(self.c0.spec, self.speed_field(chi_hist.fields[0]))
        fields = [self.speed_field(f) for f in chi_hist.fields]
        return PiecewiseConstantSpeed(chi_hist.times, fields)


def dislocation_speed(coupling: DislocationCoupling, chi_t: ScalarField, t: float = 0.0) -> ScalarField:
    """Speed field for one occupation snapshot (t only disambiguates c1(x,t)
    generalisations; the law itself is autonomous)."""
    return coupling.speed_field(chi_t)


# ---------------------------------------------------------------------------
# fitzhugh-nagumo coupling


@dataclass
class FitzhughNagumoCoupling:
    """Speed alpha(v) with v driven by chi through a reaction-diffusion step."""

    alpha: ScalarMap
    g_plus: ScalarMap
    g_minus: ScalarMap
    v0: object = 0.0   # float or ScalarField
    heat_safety: float = 0.9
    g_lower: float = dataclass_field(init=False, default=0.0)
    g_upper: float = dataclass_field(init=False, default=0.0)

    chi_independent = False

    def __post_init__(self):
        for name, m in (("alpha", self.alpha), ("g_plus", self.g_plus),
                        ("g_minus", self.g_minus)):
            if not np.isfinite([m.lower, m.upper]).all():
                raise ValueError(f"{name} must be a bounded map, got {m}")
        self.g_lower = min(self.g_minus.lower, self.g_plus.lower)
        self.g_upper = max(self.g_minus.upper, self.g_plus.upper)
        probe = np.linspace(-10.0, 10.0, 401)
        if np.any(self.g_minus(probe) > self.g_plus(probe) + 1e-12):
            raise ValueError("g_minus must not exceed g_plus")

    def initial_v(self, spec: GridSpec) -> ScalarField:
        if isinstance(self.v0, ScalarField):
            return self.v0.copy()
        return constant_field(spec, float(self.v0))

    def speed_provider(self, chi_hist: OccupationHistory):
        _, provider = fn_evolve(self, chi_hist, float(chi_hist.times[-1]))
        return provider


def _neumann_laplacian(v: np.ndarray, h: float) -> np.ndarray:
    p = np.pad(v, 1, mode="edge")
    return (p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] - 4.0 * v) / (h * h)


class FNSpeed:
    """alpha(v) with v linearly interpolated in time between stored slices."""

    chi_independent = False

    def __init__(self, coupling: FitzhughNagumoCoupling, times, v_fields):
        self.coupling = coupling
        self.times = np.asarray(times, dtype=np.float64)
        self.v_fields = v_fields

    def v_at(self, t: float) -> ScalarField:
        ts = self.times
        if t <= ts[0]:
            return self.v_fields[0]
        if t >= ts[-1]:
            return self.v_fields[-1]
        i = int(np.searchsorted(ts, t, side="right")) - 1
        lam = (t - ts[i]) / (ts[i + 1] - ts[i])
        vals = (1.0 - lam) * self.v_fields[i].values + lam * self.v_fields[i + 1].values
        return ScalarField(self.v_fields[0].spec, vals)

    def speed_at(self, t: float) -> ScalarField:
        v = self.v_at(t)
        return ScalarField(v.spec, self.coupling.alpha(v.values))

    def max_abs(self, t: float) -> float:
        return float(np.abs(self.speed_at(t).values).max())


def fn_evolve(
    coupling: FitzhughNagumoCoupling, chi_hist: OccupationHistory, horizon: float
):
    """March v_t = lap v + g+(v) chi + g-(v)(1 - chi) to the horizon.

    Explicit 5-point heat stepping with zero-flux edges, dt limited by
    heat_safety * h^2/4; chi enters as the left-continuous step history.
    Returns (v snapshots at the history times, FNSpeed provider).
    """
    spec = chi_hist.spec
    h = spec.h
    dt_max = coupling.heat_safety * h * h / 4.0
    store_times = np.asarray(chi_hist.times, dtype=np.float64)
    store_times = store_times[store_times <= horizon + 1e-15]
    if store_times[-1] < horizon:
        store_times = np.concatenate([store_times, [horizon]])

    v = coupling.initial_v(spec).values.copy()
    stored = [ScalarField(spec, v.copy())]
    t = float(store_times[0])
    for t_next in store_times[1:]:
        while t < t_next:
            remaining = t_next - t
            if remaining <= dt_max * (1.0 + 1e-9):
                dt = remaining
                t_new = t_next
            else:
                dt = dt_max
                t_new = t + dt
            chi = chi_hist.chi_at(t).values
            source = coupling.g_plus(v) * chi + coupling.g_minus(v) * (1.0 - chi)
            v = v + dt * (_neumann_laplacian(v, h) + source)
            t = t_new
        stored.append(ScalarField(spec, v.copy()))
    return stored, FNSpeed(coupling, store_times, stored)


# ---------------------------------------------------------------------------
# volume coupling


@dataclass
class VolumeCoupling:
    """Spatially constant speed beta(area of the occupied set)."""

    beta: ScalarMap

    @property
    def chi_independent(self) -> bool:
        return self.beta.lip == 0.0

    def speed_provider(self, chi_hist: OccupationHistory):
        spec = chi_hist.spec
        if self.chi_independent:
            return ConstantSpeed(spec, self.beta(0.0))
        fields = [
            constant_field(spec, volume_speed(self, f)) for f in chi_hist.fields
        ]
        return PiecewiseConstantSpeed(chi_hist.times, fields)


def volume_speed(coupling: VolumeCoupling, chi_t: ScalarField) -> float:
    """beta evaluated at the marching-squares area of {chi = 1}."""
    return float(coupling.beta(lebesgue_measure(chi_t, 0.5)))


# ---------------------------------------------------------------------------
# constant coupling (plain local problems run through the same pipeline)


@dataclass
class ConstantCoupling:
    c: object = 0.0   # float or ScalarField

    chi_independent = True

    def speed_provider(self, chi_hist: OccupationHistory):
        spec = chi_hist.spec
        return ConstantSpeed(spec, self.c)
