"""Measured-inequality reports: schedules, serialization, and the detectors.

Closed forms for the unit-slope disc u = clip(r0 - |x|) with radial nu = -x,
all on the 101-node grid (h = 0.03, r0 = 0.6, delta0 = 0.2):

* the push quotient [u(x + lam nu) - u(x)] / lam equals |x| off the clamp,
  so eta_emp = min |x| over the band {|u| <= delta0/4} = r0 - delta0/4;
* constant-speed flows keep the unit slope, so eta_emp(t) tracks the front
  radius: constant under c = 0, linearly decaying under c = -1;
* |{-d <= u < 0}| = pi d (2 r0 + d), so the per-delta band ratios are flat;
* |{|u| <= eps}| = 4 pi r0 eps, a zero-intercept line in eps.

Every adversarial case below must make its report fail: a detector that
cannot fail verifies nothing.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from frontlab.couplings import ConstantCoupling
from frontlab.geometry import star_shaped_u0
from frontlab.grid import GridSpec, ScalarField, constant_field
from frontlab.solver import ConstantSpeed, LocalProblem, Trajectory, solve
from frontlab.verify import (
    EtaSchedule,
    VerificationReport,
    band_measure_report,
    cone_report,
    continuous_dependence_report,
    dependence_stability,
    dump_report,
    eta_empirical,
    fattening_report,
    gamma_sweep_star_shape,
    key_estimate_report,
    load_report,
    lower_gradient_report,
    perimeter_report,
    star_shape_report,
)

SPEC = GridSpec(101, 1.5)
TIMES = [0.0, 0.025, 0.05, 0.075, 0.1]


def _run(u0, c, times, gamma=0.0):
    prob = LocalProblem(
        speed=ConstantSpeed(SPEC, c), gamma=gamma, horizon=float(times[-1]),
        far_radius=SPEC.half_extent - 2 * SPEC.h, spec=SPEC,
    )
    return solve(prob, u0, times)


def _disc(r):
    return ScalarField(SPEC, np.clip(r - SPEC.radius(), -1.0, 1.0))


def _hand_traj(times, snapshots):
    return Trajectory(
        times=np.asarray(times, dtype=np.float64), snapshots=list(snapshots),
        dt_used=[0.0] * len(snapshots), lipschitz_log=[1.0] * len(snapshots),
        far_radius=SPEC.half_extent - 2 * SPEC.h, gamma=0.0, eps_reg=SPEC.h,
    )


def _tamper_last(traj, edit):
    """Copy of traj with edit(values) applied to the final snapshot."""
    vals = traj.snapshots[-1].values.copy()
    edit(vals)
    snaps = list(traj.snapshots[:-1]) + [ScalarField(SPEC, vals)]
    return _hand_traj(traj.times, snaps)


@pytest.fixture(scope="module")
def init():
    return star_shaped_u0(SPEC, [(0.0, 0.0)], 0.6)


@pytest.fixture(scope="module")
def frozen(init):
    return _run(init.u0, 0.0, TIMES)


@pytest.fixture(scope="module")
def shrink(init):
    return _run(init.u0, -1.0, TIMES)


@pytest.fixture(scope="module")
def grow(init):
    return _run(init.u0, 1.0, TIMES)


# ---------------------------------------------------------------------------
# schedule and report plumbing
# ---------------------------------------------------------------------------


def test_schedule_positivity_horizon():
    sched = EtaSchedule(0.4, 0.2)
    assert sched.t_bar == pytest.approx((0.4 / 0.2) ** 2, rel=1e-12)
    assert sched.eta(0.0) == pytest.approx(0.4)
    assert sched.eta(sched.t_bar) == pytest.approx(0.0, abs=1e-15)
    assert sched.eta(-1.0) == pytest.approx(0.4)  # clamped below t = 0
    assert EtaSchedule(0.4, 0.0).t_bar == np.inf
    assert EtaSchedule(0.4, -0.1).t_bar == np.inf


def test_report_round_trip(tmp_path):
    rep = VerificationReport(
        name="synthetic",
        passed=False,
        rows=[(0.0, 1.0, 2.0, 1.0), (0.1, -3.5e-17, 0.25, 0.25 + 3.5e-17)],
        constants={"m_fit": 0.125, "slack": 3e-2},
        notes=["hand-made row set"],
    )
    dump_report(rep, tmp_path)
    back = load_report(tmp_path, "synthetic")
    assert back.passed is False
    assert back.constants == rep.constants
    assert back.notes == rep.notes
    # %.17g reproduces doubles exactly
    for got, want in zip(back.rows, rep.rows):
        assert got == want
    text = (tmp_path / "synthetic.verdict").read_text()
    assert "passed = false" in text


def test_report_round_trip_keeps_nan_constants(tmp_path, frozen, init):
    _, rep = key_estimate_report(frozen, init)
    assert math.isnan(rep.constants["decay_exponent"])
    dump_report(rep, tmp_path)
    back = load_report(tmp_path, "key_estimate")
    assert math.isnan(back.constants["decay_exponent"])
    assert any("exponent" in note for note in back.notes)


def test_verdict_line_and_min_margin():
    ok = VerificationReport("a", True, [(0.0, 1.0, 0.5, 0.5)], {})
    bad = VerificationReport("b", False, [], {})
    assert ok.verdict_line() == "PASS a"
    assert bad.verdict_line() == "FAIL b"
    assert ok.min_margin() == pytest.approx(0.5)
    assert bad.min_margin() == np.inf


def test_load_rejects_foreign_header(tmp_path):
    (tmp_path / "rogue.csv").write_text("t,x,y\n0,1,2\n")
    with pytest.raises(ValueError):
        load_report(tmp_path, "rogue")


# ---------------------------------------------------------------------------
# empirical margin
# ---------------------------------------------------------------------------


def test_eta_empirical_matches_band_radius(init):
    assert eta_empirical(init.u0, init) == pytest.approx(0.55, abs=0.01)
    # the band widened to delta0 reaches down to |x| = r0 - delta0
    wide = eta_empirical(init.u0, init, band_width=init.delta0)
    assert wide == pytest.approx(0.4, abs=0.01)


def test_eta_empirical_drops_nonpositive_lambdas(init):
    lam = init.lambda_bar
    with_zero = eta_empirical(init.u0, init, lambdas=[0.0, lam])
    assert with_zero == eta_empirical(init.u0, init, lambdas=[lam])


def test_eta_empirical_empty_band_is_nan(init):
    assert math.isnan(eta_empirical(constant_field(SPEC, -1.0), init))


# ---------------------------------------------------------------------------
# key estimate
# ---------------------------------------------------------------------------


def test_key_estimate_frozen_flow(frozen, init):
    sched, rep = key_estimate_report(frozen, init)
    assert rep.passed
    assert rep.constants["eta0_fit"] == pytest.approx(0.545, abs=5e-3)
    assert sched.M2 == pytest.approx(0.0, abs=1e-12)
    assert sched.t_bar == np.inf
    assert rep.constants["fit_residual"] == pytest.approx(0.0, abs=1e-12)
    assert rep.constants["t_bar_emp"] == pytest.approx(TIMES[-1])
    # no decline to fit an exponent to
    assert math.isnan(rep.constants["decay_exponent"])


def test_key_estimate_linear_shrink(init):
    # radius r0 - t, so eta_emp drops linearly and the log-log slope of the
    # drop is 1; the horizon is long enough for three samples to clear the
    # noise floor 2 h ||Du0||_inf = 0.06
    traj = _run(init.u0, -1.0, [0.0, 0.04, 0.08, 0.12, 0.16, 0.2])
    sched, rep = key_estimate_report(traj, init)
    assert rep.passed
    etas = [row[1] for row in rep.rows]
    assert all(b < a for a, b in zip(etas, etas[1:]))
    assert sched.M2 > 0.0
    assert rep.constants["decay_exponent"] == pytest.approx(1.0, abs=0.15)
    assert rep.constants["fit_residual"] < 0.2 * rep.constants["eta0_fit"]


def test_key_estimate_growth_pins_initial_margin(grow, init):
    # expanding front: the nonincreasing model degenerates to the t = 0
    # margin and only violations of that lower bound count as residual
    sched, rep = key_estimate_report(grow, init)
    assert rep.passed
    assert sched.M2 == 0.0
    assert sched.eta0 == pytest.approx(0.545, abs=5e-3)
    assert rep.constants["fit_residual"] == pytest.approx(0.0, abs=1e-12)
    etas = [row[1] for row in rep.rows]
    assert all(b > a for a, b in zip(etas, etas[1:]))


def test_key_estimate_single_snapshot(init):
    prob = LocalProblem(
        speed=ConstantSpeed(SPEC, 0.0), gamma=0.0, horizon=0.0,
        far_radius=SPEC.half_extent - 2 * SPEC.h, spec=SPEC,
    )
    traj = solve(prob, init.u0, [0.0])
    sched, rep = key_estimate_report(traj, init)
    assert rep.passed
    assert len(rep.rows) == 1
    assert sched.eta0 == pytest.approx(0.545, abs=5e-3)
    assert sched.M2 == 0.0


def test_key_estimate_rejects_uncertified_lambda(frozen, init):
    with pytest.raises(ValueError):
        key_estimate_report(frozen, init, lambda_bar=1.1 * init.lambda0)


# ---------------------------------------------------------------------------
# lower gradient
# ---------------------------------------------------------------------------


def test_lower_gradient_unit_slope_passes(frozen, init):
    rep = lower_gradient_report(frozen, init, EtaSchedule(0.55, 0.0))
    assert rep.passed
    for _, measured, bound, _ in rep.rows:
        assert measured == pytest.approx(1.0, abs=0.05)
        assert bound == pytest.approx(0.55 / init.nu.sup_norm, rel=1e-12)
    assert rep.min_margin() > 0.5


def test_lower_gradient_flags_flattened_band(frozen, init):
    # scaling u by 0.01 inside the band flattens its gradient while keeping
    # the same band membership
    width = init.delta0 / 4.0

    def edit(vals):
        band = np.abs(vals) < width
        vals[band] *= 0.01

    rep = lower_gradient_report(_tamper_last(frozen, edit), init, EtaSchedule(0.55, 0.0))
    assert not rep.passed
    assert rep.min_margin() < -rep.constants["slack"]


def test_lower_gradient_empty_band_vacuous(init):
    traj = _hand_traj([0.0, 0.1], [constant_field(SPEC, -1.0)] * 2)
    rep = lower_gradient_report(traj, init, EtaSchedule(0.55, 0.0))
    assert rep.passed
    assert all(m == 0.0 for _, m, _, _ in rep.rows)


def test_lower_gradient_respects_t_bar(frozen, init):
    rep = lower_gradient_report(frozen, init, EtaSchedule(0.55, 0.0), t_bar=0.05)
    assert [t for t, *_ in rep.rows] == [0.0, 0.025, 0.05]


# ---------------------------------------------------------------------------
# interior cones
# ---------------------------------------------------------------------------


def test_cone_disc_interior_passes(frozen, init):
    rep = cone_report(frozen, init, EtaSchedule(0.55, 0.0), K_fit=0.0)
    assert rep.passed
    assert rep.constants["failure_fraction"] == 0.0
    assert rep.constants["points_tested"] > 1e4
    assert rep.constants["verdict_flips_at_2k"] == 0.0


def test_cone_flipped_axis_fails(frozen, init):
    rep = cone_report(frozen, init, EtaSchedule(0.55, 0.0), K_fit=0.0, flip_axis=True)
    assert rep.name == "cone_flipped"
    assert not rep.passed
    # outward cones point out of the superlevel set almost everywhere
    assert rep.constants["failure_fraction"] > 0.5


def test_cone_zero_direction_skips_vertices(frozen, init):
    blind = replace(init, nu=replace(init.nu, values=np.zeros_like(init.nu.values)))
    rep = cone_report(frozen, blind, EtaSchedule(0.55, 0.0), K_fit=0.0)
    assert rep.passed  # vacuously: nothing was testable
    assert rep.constants["points_tested"] == 0.0
    assert rep.constants["skipped_zero_axis"] > 0.0


def test_cone_subgrid_height_skipped(frozen, init):
    rep = cone_report(frozen, init, EtaSchedule(1e-4, 0.0), K_fit=0.0)
    assert rep.passed
    assert rep.constants["points_tested"] == 0.0
    assert rep.constants["skipped_small_rho"] > 0.0


# ---------------------------------------------------------------------------
# perimeter
# ---------------------------------------------------------------------------


def test_perimeter_coarea_bound_shrinking_disc(shrink, init):
    rep = perimeter_report(shrink, init, EtaSchedule(0.55, 0.0), K_fit=0.0)
    assert rep.passed
    assert rep.constants["ok_coarea"] == 1.0
    assert rep.constants["ok_initial_doubling"] == 1.0
    # window minimum of the measured margin: eta_emp at t = 0.05
    assert rep.constants["eta_bar"] == pytest.approx(0.49, abs=0.02)


def test_perimeter_schedule_capped_by_measured_margin(frozen, init):
    # an overstated schedule must not inflate the co-area divisor
    rep = perimeter_report(frozen, init, EtaSchedule(5.0, 0.0), K_fit=0.0)
    assert rep.constants["eta_bar"] == pytest.approx(0.545, abs=5e-3)
    assert rep.passed


def test_perimeter_flags_doubling(init):
    traj = _hand_traj([0.0, 0.1], [_disc(0.3), _disc(0.7)])
    rep = perimeter_report(traj, init, EtaSchedule(0.25, 0.0), K_fit=0.0, t_bar=0.2)
    assert not rep.passed
    assert rep.constants["ok_initial_doubling"] == 0.0
    assert rep.constants["ok_coarea"] == 1.0


# ---------------------------------------------------------------------------
# band measures
# ---------------------------------------------------------------------------


def test_band_measure_disc_linear_in_delta(frozen, init):
    rep = band_measure_report(frozen, init, EtaSchedule(0.55, 0.0))
    assert rep.passed
    # delta0/8 and delta0/4 fall below the 2h resolution cut on this grid
    assert rep.constants["deltas_used"] == 2.0
    assert rep.constants["ratio_spread"] < 1.2
    assert rep.constants["green_spread"] < 1.5
    # area/delta ~ pi (2 r0 + delta), eta_bar ~ 0.545
    assert rep.constants["m4_emp"] == pytest.approx(2.26, rel=0.05)
    assert rep.constants["m5_emp"] == pytest.approx(0.387, rel=0.1)


def test_band_measure_flags_flat_shelf(frozen, init):
    # a shelf at u = -0.09 sits inside the 4h band but not the 2h band, so
    # only the larger delta picks up its area and linearity breaks
    def edit(vals):
        x, y = SPEC.meshgrid()
        vals[(x >= 0.75) & (x <= 1.45) & (np.abs(y) <= 0.4)] = -0.09

    rep = band_measure_report(_tamper_last(frozen, edit), init, EtaSchedule(0.55, 0.0))
    assert not rep.passed
    assert rep.constants["ok_linear"] == 0.0
    assert rep.constants["ratio_spread"] > 2.0


# ---------------------------------------------------------------------------
# non-fattening
# ---------------------------------------------------------------------------


def test_fattening_linear_slab_zero_intercept(shrink, init):
    rep = fattening_report(shrink, init, EtaSchedule(0.55, 0.0))
    assert rep.passed
    for _, intercept, bound, _ in rep.rows:
        assert abs(intercept) < 0.02
        assert bound > 0.1
    # slab area 4 pi r eps: slope 4 pi r0 at t = 0
    assert rep.constants["max_slope"] == pytest.approx(4.0 * np.pi * 0.6, rel=0.05)


def test_fattening_flags_zero_plateau(frozen, init):
    # an exact-zero plateau wider than the smallest fit epsilon adds a
    # constant to every slab area, which lands in the intercept
    def edit(vals):
        vals[np.abs(SPEC.radius() - 0.6) <= 4.0 * SPEC.h] = 0.0

    rep = fattening_report(_tamper_last(frozen, edit), init, EtaSchedule(0.55, 0.0))
    assert not rep.passed
    assert rep.min_margin() < -0.1


# ---------------------------------------------------------------------------
# continuous dependence
# ---------------------------------------------------------------------------


def test_dependence_constant_speed_gap(frozen, init):
    # c = 0 versus c = 0.1: gap(t) = 0.1 t, so with kappa1 = 0.1 the fitted
    # M1 is 0.01 / (0.01 + sqrt(0.001)) at the final time
    fast = _run(init.u0, 0.1, TIMES)
    rep = continuous_dependence_report(frozen, fast, kappa_per_time=[0.1, 0.1])
    assert rep.passed
    assert rep.constants["kappa1"] == pytest.approx(0.1)
    assert rep.constants["kappa2"] == pytest.approx(0.01)
    want = 0.01 / (0.01 + np.sqrt(0.001))
    assert rep.constants["m1_fit"] == pytest.approx(want, rel=0.02)
    # rows are rescaled so the fitted bound dominates every gap
    assert rep.min_margin() >= -1e-12


def test_dependence_stable_when_halved(frozen, init):
    full = continuous_dependence_report(frozen, _run(init.u0, 0.1, TIMES), kappa1=0.1)
    half = continuous_dependence_report(frozen, _run(init.u0, 0.05, TIMES), kappa1=0.05)
    change, stable = dependence_stability(full, half)
    assert stable
    assert change < 0.05


def test_dependence_identical_trajectories(frozen):
    # vanishing kappas with a vanishing gap stay finite and pass
    rep = continuous_dependence_report(frozen, frozen, kappa1=0.0, kappa2=0.0)
    assert rep.passed
    assert rep.constants["m1_fit"] == 0.0


def test_dependence_growth_without_kappa_is_flagged(frozen):
    moved = _hand_traj(frozen.times, [_disc(0.6)] + [_disc(0.63)] * (len(TIMES) - 1))
    rep = continuous_dependence_report(frozen, moved, kappa1=0.0, kappa2=0.0)
    assert not rep.passed
    assert rep.constants["m1_fit"] == np.inf


def test_dependence_validations(frozen, init):
    short = _hand_traj([0.0, 0.1], [frozen.snapshots[0]] * 2)
    with pytest.raises(ValueError):
        continuous_dependence_report(frozen, short, kappa1=0.1)
    with pytest.raises(ValueError):
        continuous_dependence_report(frozen, frozen)


# ---------------------------------------------------------------------------
# star-shapedness
# ---------------------------------------------------------------------------


def test_star_shape_radial_cone_margin(frozen, init):
    rep = star_shape_report(frozen, init)
    assert rep.passed
    assert rep.rows[0][2] == pytest.approx(0.5 * init.eta0)
    for _, measured, _, _ in rep.rows:
        assert measured == pytest.approx(0.55, abs=0.01)


def test_star_shape_rejects_off_center_disc(init):
    x, y = SPEC.meshgrid()
    off = ScalarField(SPEC, np.clip(0.6 - np.hypot(x - 0.5, y), -1.0, 1.0))
    rep = star_shape_report(_hand_traj([0.0], [off]), init)
    assert not rep.passed
    # near the left edge the pull toward the origin barely raises u
    assert rep.rows[0][1] == pytest.approx(0.06, abs=0.02)


def test_star_shape_empty_band_vacuous(init):
    rep = star_shape_report(_hand_traj([0.0], [constant_field(SPEC, -1.0)]), init)
    assert rep.passed
    assert rep.rows[0][3] == 0.0


def test_gamma_sweep_reports_largest_passing():
    spec = GridSpec(65, 1.5)
    small = star_shaped_u0(spec, [(0.0, 0.0)], 0.3)
    gamma_bar, results = gamma_sweep_star_shape(
        ConstantCoupling(0.5), small, [0.0, 0.02], horizon=0.05,
        far_radius=spec.half_extent - 2 * spec.h,
    )
    assert gamma_bar == 0.02
    assert all(r.passed for r in results.values())


def test_gamma_sweep_counts_escape_as_failure():
    spec = GridSpec(65, 1.5)
    small = star_shaped_u0(spec, [(0.0, 0.0)], 0.3)
    gamma_bar, results = gamma_sweep_star_shape(
        ConstantCoupling(1.0), small, [0.0], horizon=1.0, far_radius=0.7,
    )
    assert gamma_bar is None
    assert isinstance(results[0.0], str)
    assert results[0.0].startswith("error:")
