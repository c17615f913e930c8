import numpy as np
import pytest

from wrhlab.characterize import (
    ALPHA_GRID_POWER, EPS_GRID, P_GRID,
    bmo_norm, bmo_norm_report, bmo_pairing, classical_probes,
    dilated_weight_ratios, exponential_mean, exponential_mean_on_ball,
    fujii_wilson, integral_conditions, log_integral, log_maximal_bmo_function,
    muckenhoupt_constants, phi_integral, reverse_holder, smallness_envelopes,
    smallness_power_on_ball, sublevel_fraction, weak_log_4b,
    weak_reverse_holder, wrh_infinity, wrh_infinity_checks, wrh_infinity_on_ball,
)
from wrhlab.space import (Ball, BallPolicy, DomainMask, doubling_constant,
                          enumerate_balls, full_family, grid_1d, grid_nd,
                          inside_family)
from wrhlab.weights import Weight, make_weight


def line_family(a, b, h, sigma=2.0, policy=None):
    sp = grid_1d(a, b, h)
    return sp, enumerate_balls(sp, DomainMask(None, sigma), policy)


def closed_form_wrh_inf(r):
    # centered interval of radius r under the exponential weight
    return 4 * r * np.exp(3 * r) / (np.exp(4 * r) - 1.0)


def closed_form_exp_mean(r):
    return np.sinh(r) / r


# -- constant weight: everything collapses to its trivial value ---------------

def test_constant_weight_all_conditions_trivial():
    sp, fam = line_family(0.0, 4.0, 0.25)
    w = make_weight(sp, "constant", c=2.0)
    assert wrh_infinity(w, fam).constant == pytest.approx(1.0, rel=1e-12)
    rep_c = weak_reverse_holder(w, fam, P_GRID)
    assert np.allclose(rep_c.envelope.values, 1.0, rtol=1e-12)
    inside = inside_family(sp)
    assert np.allclose(reverse_holder(w, inside, P_GRID).envelope.values, 1.0, rtol=1e-12)
    assert log_integral(w, fam).constant == 0.0
    assert fujii_wilson(w, fam).constant <= 1.0 + 1e-12
    mk = muckenhoupt_constants(w, inside)
    assert mk["muckenhoupt_ap"].constant == pytest.approx(1.0, rel=1e-12)
    assert mk["muckenhoupt_a1"].constant == pytest.approx(1.0, rel=1e-12)
    probes = classical_probes(w, fam)
    assert probes["exponential_mean"].constant == pytest.approx(1.0, rel=1e-12)
    assert probes["sublevel_fraction"].extras["verdict"] is True
    assert probes["sublevel_fraction"].constant == 0.0


def test_constant_weight_envelope_linear_in_eps():
    sp, fam = line_family(0.0, 4.0, 0.25)
    w = make_weight(sp, "constant")
    reps = smallness_envelopes(w, fam, c_d=2.0)
    eta = reps["smallness_envelope"].envelope
    # fractional optimum fills uniformly: eta(eps) = eps * mass(B)/mass(2B) <= eps
    assert np.all(eta.values <= eta.params + 1e-12)
    assert np.all(np.diff(eta.values) >= -1e-12)  # nondecreasing in eps
    assert reps["smallness_threshold"].extras["verdict"] is True
    # vanishing envelope is the same curve
    assert np.array_equal(eta.values, reps["vanishing_envelope"].envelope.values)


# -- exponential weight: closed forms ------------------------------------------

def test_exponential_wrh_infinity_per_ball_closed_form():
    sp = grid_1d(-5.0, 5.0, 0.01)
    w = make_weight(sp, "exponential")
    center = sp.n // 2
    for r in (0.1, 0.25, 0.5, 1.0):
        got = wrh_infinity_on_ball(w, Ball(center, r), 2.0)
        assert got == pytest.approx(closed_form_wrh_inf(r), rel=0.01)
    # the ratio at r=1 sits near 1.499
    assert closed_form_wrh_inf(1.0) == pytest.approx(1.499, abs=2e-3)


def test_exponential_mean_per_ball_closed_form():
    sp = grid_1d(-7.0, 7.0, 0.01)
    w = make_weight(sp, "exponential")
    center = sp.n // 2
    vals = []
    for r in (0.5, 1.0, 2.0, 3.0):
        got = exponential_mean_on_ball(w, Ball(center, r), 2.0)
        assert got == pytest.approx(closed_form_exp_mean(r), rel=0.01)
        vals.append(got)
    assert np.all(np.diff(vals) > 0)  # strictly increasing in r
    assert closed_form_exp_mean(3.0) == pytest.approx(3.3392, abs=2e-4)


def test_exponential_weak_rh_bounded_by_one_at_p2():
    sp, fam = line_family(-3.0, 3.0, 0.05)
    w = make_weight(sp, "exponential")
    rep = weak_reverse_holder(w, fam, [2.0])
    # centered balls give (2r)/sinh(2r) <= 1; edges cannot push far above 1
    assert rep.constant <= 1.05


# -- log spike: in A_1 but not WRH-infinity -------------------------------------

def test_log_spike_wrh_infinity_diverges_a1_stays():
    wrh_vals, a1_vals = [], []
    for h in (0.04, 0.02, 0.01):
        sp = grid_1d(-1.0, 1.0, h)
        w = make_weight(sp, "log_spike")
        fam = enumerate_balls(sp, DomainMask(None, 2.0))
        wrh_vals.append(wrh_infinity(w, fam).constant)
        a1_vals.append(muckenhoupt_constants(w, inside_family(sp))["muckenhoupt_a1"].constant)
    assert wrh_vals[1] > wrh_vals[0] and wrh_vals[2] > wrh_vals[1]
    assert wrh_vals[2] / wrh_vals[0] > 1.2
    a1 = np.asarray(a1_vals)
    assert np.max(a1) / np.min(a1) < 1.5  # bounded under refinement


# -- slab weight ---------------------------------------------------------------

@pytest.fixture(scope="module")
def slab_setup():
    sp = grid_nd([-8.0, -8.0], [8.0, 8.0], 0.5, metric="chebyshev")
    w = make_weight(sp, "slab_indicator")
    policy = BallPolicy(max_radii_per_center=12, max_centers=300)
    fam = enumerate_balls(sp, DomainMask(None, 2.0), policy)
    return sp, w, fam


def test_slab_dilated_ratio_below_half_plus_slack(slab_setup):
    sp, w, fam = slab_setup
    balls, ratios = dilated_weight_ratios(w, fam)
    h = 0.5
    r_min = min(r for _, r in balls)
    assert len(ratios) >= 200
    assert np.max(ratios) <= 0.5 + h / (4 * r_min)


def test_slab_smallness_threshold_fails(slab_setup):
    sp, w, fam = slab_setup
    c_d = doubling_constant(sp, full_family(sp, BallPolicy(max_centers=200))).c_d_emp
    reps = smallness_envelopes(w, fam, c_d=c_d)
    eta = reps["smallness_envelope"].envelope.values
    # the envelope saturates near 1/2 for every eps: far above c_d^-5
    assert np.max(eta) <= 0.62
    assert np.max(eta) >= 0.4
    assert reps["smallness_threshold"].extras["verdict"] is False


def test_slab_power_ratio_grows_with_side(slab_setup):
    sp, w, _ = slab_setup
    center = sp.n // 2
    assert np.allclose(sp.coords[center], 0.0)
    vals = [smallness_power_on_ball(w, Ball(center, side / 2), 2.0, 0.5)
            for side in (2.0, 4.0, 8.0)]
    growth = np.asarray(vals[1:]) / np.asarray(vals[:-1])
    assert np.all(growth >= 1.3)


def test_slab_ap_infinite_with_witness(slab_setup):
    sp, w, _ = slab_setup
    inside = inside_family(sp, None, BallPolicy(max_radii_per_center=8, max_centers=120))
    rep = muckenhoupt_constants(w, inside)["muckenhoupt_ap"]
    assert rep.constant == np.inf
    wit = rep.witness
    members = sp.member_ids(wit.center, wit.radius)
    assert np.min(w.values[members]) == 0.0


def test_skipped_ball_bookkeeping(slab_setup):
    sp, w, fam = slab_setup
    rep = wrh_infinity(w, fam)
    assert rep.evaluated + rep.skipped == len(fam)
    assert rep.skipped > 0  # squares far from the slab integrate to zero


# -- envelope structure ----------------------------------------------------------

def test_envelope_monotonicity_random_weight():
    sp, fam = line_family(0.0, 6.0, 0.2, policy=BallPolicy(max_radii_per_center=16))
    w = make_weight(sp, "random_lognormal", seed=3)
    reps = smallness_envelopes(w, fam)
    eta = reps["smallness_envelope"].envelope.values
    chat = reps["smallness_power"].envelope.values
    beta = reps["superlevel_mass"].envelope.values
    assert np.all(np.diff(eta) >= -1e-12)       # nondecreasing in eps
    assert np.all(np.diff(chat) >= -1e-12)      # nondecreasing in alpha
    assert np.all(np.diff(beta) <= 1e-12)       # nonincreasing in alpha


def test_envelope_witness_reproducible():
    sp, fam = line_family(0.0, 6.0, 0.2)
    w = make_weight(sp, "random_lognormal", seed=11)
    rep = wrh_infinity(w, fam)
    again = wrh_infinity_on_ball(w, Ball(rep.witness.center, rep.witness.radius), fam.sigma)
    assert again == rep.constant


def test_smallness_power_prefix_matches_bruteforce_small_ball():
    # equal masses: the exact subset optimum is attained on a value prefix
    sp = grid_1d(0.0, 1.2, 0.1)
    rng = np.random.default_rng(5)
    w = Weight(sp, rng.lognormal(size=sp.n))
    ball = Ball(6, 0.5)
    sigma, alpha = 2.0, 0.5
    got = smallness_power_on_ball(w, ball, sigma, alpha)
    members = sp.member_ids(ball.center, ball.radius)
    ws = w.integral(sp.member_ids(ball.center, sigma * ball.radius))
    mu_b = w.measure(members)
    best = 0.0
    for mask in range(1, 1 << len(members)):
        ids = members[[i for i in range(len(members)) if mask >> i & 1]]
        best = max(best, w.integral(ids) / (ws * (w.measure(ids) / mu_b) ** alpha))
    assert got == pytest.approx(best, rel=1e-12)


# -- integral conditions -----------------------------------------------------------

def test_log_and_phi_integral_agree_for_log():
    sp, fam = line_family(-2.0, 2.0, 0.1)
    w = make_weight(sp, "random_lognormal", seed=2)
    kg = log_integral(w, fam).constant
    kj = phi_integral(w, fam, "log").constant
    assert kj == pytest.approx(kg, rel=1e-12)
    # sqrt-log phi gives a smaller integrand on the tail
    kj2 = phi_integral(w, fam, "sqrt_log").constant
    assert kj2 <= kg + 1e-12


def test_exponential_integral_conditions_stable_under_refinement():
    vals_e, vals_g = [], []
    for h in (0.02, 0.01):
        sp, fam = line_family(-2.0, 2.0, h,
                              policy=BallPolicy(max_radii_per_center=24, max_centers=120))
        w = make_weight(sp, "exponential")
        vals_e.append(fujii_wilson(w, fam, ball_budget=40).constant)
        vals_g.append(log_integral(w, fam).constant)
    assert abs(vals_e[1] - vals_e[0]) <= 0.1 * vals_e[0]
    assert abs(vals_g[1] - vals_g[0]) <= 0.1 * vals_g[0]


def test_weak_log_4b_finite_and_skips():
    sp, fam = line_family(-2.0, 2.0, 0.05)
    w = make_weight(sp, "exponential")
    c_d = doubling_constant(sp).c_d_emp
    rep = weak_log_4b(w, fam, c_d)
    assert np.isfinite(rep.constant)
    assert rep.extras["not_4b_admissible"] > 0


# -- classical probes ---------------------------------------------------------------

def test_exponential_probes_fail_as_expected():
    sp, fam = line_family(-6.0, 6.0, 0.05,
                          policy=BallPolicy(max_radii_per_center=40))
    w = make_weight(sp, "exponential")
    rep_a = exponential_mean(w, fam)
    # worst centered-ish ball approaches sinh(r)/r at the domain scale
    assert rep_a.constant > 2.0
    rep_b = sublevel_fraction(w, fam)
    # for any beta, large balls put almost all their mass below beta * avg(2B)
    assert np.min(rep_b.envelope.values) > 0.9
    assert rep_b.extras["verdict"] is False


def test_sublevel_fraction_constant_ok():
    sp, fam = line_family(0.0, 3.0, 0.25)
    w = make_weight(sp, "constant")
    rep = sublevel_fraction(w, fam)
    assert rep.extras["verdict"] is True


# -- BMO ---------------------------------------------------------------------------

def test_bmo_norm_constant_zero():
    sp = grid_1d(0.0, 3.0, 0.25)
    fam = inside_family(sp)
    assert bmo_norm(sp, np.full(sp.n, 4.2), fam) == 0.0


def test_bmo_norm_sign_function():
    # symmetric grid with no point at 0: sign has norm exactly 1, centered witness
    sp = grid_1d(-3.875, 3.875, 0.25)
    assert not np.any(sp.coords[:, 0] == 0.0)
    f = np.sign(sp.coords[:, 0])
    fam = inside_family(sp)
    rep = bmo_norm_report(sp, f, fam)
    assert rep.constant == pytest.approx(1.0, abs=1e-12)
    wc = sp.coords[rep.witness.center, 0]
    members = sp.member_ids(rep.witness.center, rep.witness.radius)
    assert abs(np.sum(np.sign(sp.coords[members, 0]))) < 1e-9  # balanced ball


def test_bmo_norm_log_power_weight_finite():
    sp = grid_1d(0.5, 4.5, 0.05)
    w = make_weight(sp, "power", a=0.5)
    f = np.log(w.values)
    norm = bmo_norm(sp, f, inside_family(sp, None, BallPolicy(max_radii_per_center=24)))
    assert 0.0 < norm < 1.0


def test_bmo_pairing_flat_function_flagged():
    sp = grid_1d(0.0, 30.0, 0.5)
    w = make_weight(sp, "constant")
    fam = enumerate_balls(sp, DomainMask(None, 2.0))
    rep = bmo_pairing(w, np.ones(sp.n), fam)
    assert rep.status.startswith("flat")


def test_bmo_pairing_constant_weight_bounded():
    sp = grid_1d(0.0, 30.0, 0.25)
    w = make_weight(sp, "constant")
    fam = enumerate_balls(sp, DomainMask(None, 2.0),
                          BallPolicy(max_radii_per_center=24, max_centers=60))
    f = np.sign(sp.coords[:, 0] - 15.1)
    rep = bmo_pairing(w, f, fam)
    assert rep.status == "ok"
    # pairing reduces to avg_B |f - f_B| * mass(B)/mass(2B) <= 1 for unit-norm f
    assert rep.constant <= 1.0 + 1e-9


def test_bmo_pairing_small_space_status():
    sp = grid_1d(0.0, 2.0, 0.5)  # far too small for 11-fold dilates
    w = make_weight(sp, "constant")
    fam = enumerate_balls(sp, DomainMask(None, 2.0))
    rep = bmo_pairing(w, np.sign(sp.coords[:, 0] - 1.1), fam)
    assert rep.status == "no admissible balls"


# -- log-maximal test function --------------------------------------------------------

def test_log_maximal_function_of_full_ball_is_small():
    sp = grid_1d(0.0, 10.0, 0.25)
    ball = Ball(20, 1.0)
    f_ids = sp.member_ids(20, 1.0)
    f, norm, a1 = log_maximal_bmo_function(sp, f_ids, ball)
    # M(1_B) = 1 on B and mass(B)/mass(F) = 1: f vanishes on B, stays tiny off it
    members = sp.member_ids(20, 1.0)
    assert np.allclose(f[members], 0.0)
    assert norm <= 0.75
    assert a1 >= 1.0


def test_log_maximal_band_and_a1_stability(rng):
    sp = grid_1d(0.0, 12.0, 0.1)
    ball = Ball(sp.n // 2, 2.0)
    members = sp.member_ids(ball.center, ball.radius)
    norms, a1s = [], []
    for seed in range(10):
        r = np.random.default_rng(seed)
        size = int(r.integers(2, len(members)))
        f_ids = np.sort(r.choice(members, size=size, replace=False))
        _, norm, a1 = log_maximal_bmo_function(
            sp, f_ids, ball, norm_policy=BallPolicy(max_radii_per_center=32))
        norms.append(norm)
        a1s.append(a1)
    norms = np.asarray(norms)
    a1s = np.asarray(a1s)
    assert np.all(a1s >= 1.0)
    # BMO norms land in a common band regardless of mass(F)
    assert np.max(norms) / np.min(norms) < 4.0
    assert np.max(a1s) / np.min(a1s) < 4.0


# -- Muckenhoupt on the straddling grid -------------------------------------------------

def test_power_weight_a1_finite_on_straddling_grid():
    sp = grid_1d(-2.0, 2.0, 0.05)
    w = make_weight(sp, "power", a=0.5)
    rep = muckenhoupt_constants(w, inside_family(sp, None, BallPolicy(max_radii_per_center=32)))
    assert np.isfinite(rep["muckenhoupt_a1"].constant)
    spike = make_weight(sp, "log_spike")
    rep2 = muckenhoupt_constants(spike, inside_family(sp, None, BallPolicy(max_radii_per_center=32)))
    assert np.isfinite(rep2["muckenhoupt_a1"].constant)


# -- WRH-infinity cross checks ------------------------------------------------------------

def test_wrh_infinity_checks_constant_weight():
    sp, fam = line_family(0.0, 4.0, 0.25)
    w = make_weight(sp, "constant")
    rep = wrh_infinity_checks(w, fam)
    assert rep.extras["max_average"] <= 1.0 + 1e-12
    assert rep.extras["localized_max"] <= 1.0 + 1e-12
    assert rep.extras["weighted_tail"] == 0.0
    assert rep.extras["r_chain_holds"]


def test_wrh_infinity_checks_exponential_cross_route():
    sp, fam = line_family(-3.0, 3.0, 0.05,
                          policy=BallPolicy(max_radii_per_center=24, max_centers=60))
    w = make_weight(sp, "exponential")
    rep = wrh_infinity_checks(w, fam, ball_budget=30)
    direct = wrh_infinity(w, fam).constant
    # the extremal-average route reproduces the esssup route exactly
    assert rep.extras["max_average"] == pytest.approx(direct, rel=1e-12)
    assert rep.extras["r_chain_holds"]
    assert np.isfinite(rep.extras["localized_max"])
    assert np.isfinite(rep.extras["weighted_tail"])


def test_wrh_infinity_checks_log_spike_diverges():
    vals = []
    for h in (0.04, 0.02):
        sp, fam = line_family(-1.0, 1.0, h)
        w = make_weight(sp, "log_spike")
        vals.append(wrh_infinity_checks(w, fam, ball_budget=16).extras["max_average"])
    assert vals[1] > vals[0] * 1.1
