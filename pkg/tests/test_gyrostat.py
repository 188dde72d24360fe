import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gyrostab import gyrostat as G
from gyrostab import linalg
from gyrostab.gyrostat import Family, GyrostatParams, make_state
from gyrostab.skewprod import NotAnEquilibrium, Stability

S, U, D = Stability.STABLE, Stability.UNSTABLE, Stability.UNDECIDED
state6 = arrays(float, 6, elements=st.floats(-10, 10))


def eq_state(M, g):
    return make_state(M, g)


# parameters ---------------------------------------------------------------

@pytest.mark.parametrize("I", [(1, 2, 3), (3, 3, 1), (3, 2, 0), (3, 2, -1)])
def test_params_reject_bad_inertia(I):
    with pytest.raises(ValueError):
        GyrostatParams(*I, mu=(1, 0, 0))


def test_params_axis():
    assert GyrostatParams(3, 2, 1, (0, 0, -2)).axis == 3
    assert GyrostatParams(3, 2, 1, (1, 1, 0)).axis is None
    with pytest.raises(G.UnsupportedMu):
        G.analyze(GyrostatParams(3, 2, 1, (1, 1, 0)), np.zeros(6))


# dynamics -----------------------------------------------------------------

def test_rhs_examples(ref):
    np.testing.assert_array_equal(G.rhs(ref, eq_state((0, 0, 0), (0.3, -1, 2))), np.zeros(6))
    np.testing.assert_allclose(G.rhs(ref, eq_state((2, 0, 0), (0, 1, 0))), [0, 0, 0, 0, 0, -2 / 3])


def test_rhs_vanishes_on_e5(ref):
    for beta in (-2.0, 0.7):
        for theta in (0.0, 1.3):
            eq = G.make_equilibrium(ref, "E5", beta=beta, theta=theta)
            assert np.linalg.norm(G.rhs(ref, eq.state)) <= 1e-12


@settings(max_examples=50)
@given(state6)
def test_rhs_general_reduces_without_gravity(x):
    p = GyrostatParams(3, 2, 1, (1, 0, 0), m=2.0)
    np.testing.assert_array_equal(G.rhs_general(p, x), G.rhs(p, x))


def test_rhs_general_gravity_torque():
    p = GyrostatParams(3, 2, 1, (1, 0, 0), m=1.0, r_G=(0, 0, 1))
    np.testing.assert_allclose(G.rhs_general(p, eq_state((0, 0, 0), (1, 0, 0)))[:3], [0, -1, 0])
    p = GyrostatParams(3, 2, 1, (1, 0, 0), m=1.0, r_G=(0, 2, 0))
    np.testing.assert_array_equal(G.rhs_general(p, eq_state((0, 0, 0), (0, -3, 0)))[:3], 0)


def test_conserved_examples(ref):
    assert G.conserved(ref, np.zeros(6)) == (0.0, 0.0, 0.0, 0.5)
    np.testing.assert_allclose(G.conserved(ref, eq_state((3, 0, 0), (0, 1, 0))), (1.5, 0.5, 0.0, 8.0))


def test_conservation_fd_directional_derivative(axis_params, rng):
    h = 1e-6
    for x in rng.normal(size=(1000, 6)) * 2:
        f = G.rhs(axis_params, x)
        dF = (np.array(G.conserved(axis_params, x + h * f)) - np.array(G.conserved(axis_params, x - h * f))) / (2 * h)
        assert np.max(np.abs(dF)) <= 1e-8 * (1 + np.linalg.norm(f))


def test_conserved_gradients_fd(ref, rng):
    h = 1e-6
    for x in rng.normal(size=(20, 6)):
        grads = G.conserved_gradients(ref, x)
        for i in range(6):
            e = np.zeros(6)
            e[i] = h
            fd = (np.array(G.conserved(ref, x + e)) - np.array(G.conserved(ref, x - e))) / (2 * h)
            np.testing.assert_allclose(grads[:, i], fd, atol=1e-7)


def test_poisson_matrix_zero_at_minus_mu(ref):
    np.testing.assert_array_equal(G.poisson_matrix(ref, eq_state((-1, 0, 0), (0, 0, 0))), 0)


def test_poisson_form(axis_params, rng):
    for x in rng.normal(size=(100, 6)) * 3:
        P = G.poisson_matrix(axis_params, x)
        gH, gC1, gC2, _ = G.conserved_gradients(axis_params, x)
        assert np.linalg.norm(G.rhs(axis_params, x) - P @ gH) <= 1e-12
        assert np.linalg.norm(P @ gC1) <= 1e-12
        assert np.linalg.norm(P @ gC2) <= 1e-12
        np.testing.assert_array_equal(P, -P.T)


def test_jacobian_at_zero_M(ref):
    J = G.jacobian(ref, eq_state((0, 0, 0), (0.2, 0.5, 1)))
    np.testing.assert_allclose(J[:3, :3], linalg.hat(ref.mu_vec) @ np.diag(1 / ref.inertia))
    np.testing.assert_array_equal(J[:3, 3:], 0)


def test_jacobian_finite_differences(axis_params, rng):
    h = 1e-6
    for x in rng.normal(size=(50, 6)) * 2:
        fd = np.column_stack([
            (G.rhs(axis_params, x + h * e) - G.rhs(axis_params, x - h * e)) / (2 * h) for e in np.eye(6)
        ])
        np.testing.assert_allclose(G.jacobian(axis_params, x), fd, atol=1e-8)


def test_jacobian_lower_right_spectrum(ref):
    q = 2.5
    C = G.jacobian(ref, eq_state((q, 0, 0), (1, 0, 0)))[3:, 3:]
    assert linalg.spectra_match(linalg.eigenvalues(C), [0, 1j * q / 3, -1j * q / 3], 1e-12)


# families -----------------------------------------------------------------

def test_family_lists():
    names = lambda ax: [t.family.value for t in G.family_templates(GyrostatParams.on_axis((3, 2, 1), ax, 1.0))]
    assert names(1) == ["E0", "E12", "E4", "E5"]
    assert names(2) == ["E0", "E12", "E3", "E5"]
    assert names(3) == ["E0", "E12", "E3", "E4"]


def test_axis1_e4_template(ref):
    beta, theta = 0.8, 1.7
    eq = G.make_equilibrium(ref, "E4", beta=beta, theta=theta)
    I1, I2, mu1 = 3.0, 2.0, 1.0
    want = [I1 * mu1 / (I2 - I1), beta, 0, theta * mu1 / (I2 - I1), theta * beta / I2, 0]
    np.testing.assert_allclose(eq.state, want, rtol=1e-15)


def test_axis3_e3_template():
    p = GyrostatParams.on_axis((3, 2, 1), 3, 2.0)
    beta, theta = -1.2, 0.4
    eq = G.make_equilibrium(p, "E3", beta=beta, theta=theta)
    I1, I3, mu3 = 3.0, 1.0, 2.0
    want = [beta, 0, I3 * mu3 / (I1 - I3), theta * beta / I1, 0, theta * mu3 / (I1 - I3)]
    np.testing.assert_allclose(eq.state, want, rtol=1e-15)


def test_enumerated_states_are_equilibria(axis_params):
    eqs = G.enumerate_families(axis_params)
    assert len(eqs) > 10
    for eq in eqs:
        assert np.linalg.norm(G.rhs(axis_params, eq.state)) <= 1e-12


def test_make_equilibrium_rejects_zero_q_and_beta(ref):
    with pytest.raises(ValueError):
        G.make_equilibrium(ref, "E12", q=0.0, alpha=1.0)
    with pytest.raises(ValueError):
        G.make_equilibrium(ref, "E4", beta=0.0, theta=1.0)
    with pytest.raises(ValueError):
        G.make_equilibrium(ref, "E3", beta=1.0)  # not an axis-1 family


def test_classify_examples(ref):
    ok, eq = G.classify_state(ref, eq_state((0, 0, 0), (0.3, -2, 5)))
    assert ok and eq.family is Family.E0
    ok, eq = G.classify_state(ref, eq_state((2.5, 0, 0), (0.4, 0, 0)))
    assert ok and eq.family is Family.E12
    assert eq.params["q"] == 2.5 and eq.params["alpha"] == 0.4
    assert eq.params["theta"] == pytest.approx(0.4 * 3 / 2.5)
    ok, eq = G.classify_state(ref, eq_state((2, 0, 0), (0, 1, 0)))
    assert not ok and eq is None


def test_classify_recovers_beta_families(axis_params):
    for eq in G.enumerate_families(axis_params):
        ok, got = G.classify_state(axis_params, eq.state)
        assert ok and got.family is eq.family
        for k, v in eq.params.items():
            if k in got.params:
                assert got.params[k] == pytest.approx(v, abs=1e-12)


def test_char_poly_factored_examples(ref):
    fac = G.char_poly_factored(ref, eq_state((0, 0, 0), (1, 0, 0)))
    assert fac.omega == 0
    np.testing.assert_allclose(fac.cubic, linalg.char_poly(linalg.hat(ref.mu_vec) @ np.diag(1 / ref.inertia)))
    fac = G.char_poly_factored(ref, eq_state((2, 0, 0), (1, 0, 0)))
    assert fac.omega == pytest.approx(2 / 3)
    with pytest.raises(NotAnEquilibrium):
        G.char_poly_factored(ref, eq_state((2, 0, 0), (0, 1, 0)))


def test_factorization_matches_full_char_poly(axis_params):
    for eq in G.enumerate_families(axis_params):
        fac = G.char_poly_factored(axis_params, eq)
        full = linalg.char_poly(G.jacobian(axis_params, eq.state))
        np.testing.assert_allclose(fac.coefficients(), full, atol=1e-8)


# classifiers --------------------------------------------------------------

def verdicts(p, x):
    r = G.analyze(p, np.asarray(x, float))
    return r.spectral.value, r.cq.value, r.lyapunov.value, r.y_partial.value, r.z_partial.value


def test_tf_examples(ref):
    assert G.tf_spectral(ref, (-2, 0, 0)).is_unstable
    assert G.tf_spectral(ref, (-3, 0, 0)).is_stable
    assert G.tf_spectral(ref, G.make_equilibrium(ref, "E4", beta=1, theta=0).M).is_unstable
    assert G.tf_cq(ref, (-3, 0, 0)).is_unstable
    assert G.tf_lyapunov(ref, (2, 0, 0)).is_stable
    assert G.tf_lyapunov(ref, (-3, 0, 0)).is_unstable
    assert G.tf_lyapunov(ref, G.make_equilibrium(ref, "E4", beta=1, theta=0).M).is_unstable


def test_tf_cq_axis2_interval():
    p = GyrostatParams.on_axis((3, 2, 1), 2, 1.0)
    lo, hi = -2.0 / (2 - 1), 2.0 / (3 - 2)  # [-I2 mu2/(I2-I3), I2 mu2/(I1-I2)]
    for q in np.linspace(lo, hi, 9):
        if q != 0:
            assert G.tf_cq(p, (0, q, 0)).is_stable, q
    for q in (lo - 0.1, hi + 0.1, -5.0, 7.0):
        assert G.tf_cq(p, (0, q, 0)).is_unstable, q


def test_tf_cq_axis3_tilted_stable():
    p = GyrostatParams.on_axis((3, 2, 1), 3, 1.0)
    assert G.tf_cq(p, G.make_equilibrium(p, "E3", beta=0.9, theta=0).M).is_stable


def test_spectral_table_agrees_with_eigenvalues(axis_params):
    # the tables and a direct eigenvalue computation must agree off the Jordan endpoints
    for eq in G.enumerate_families(axis_params, {"q": np.linspace(-5, 5, 41)}):
        spec = linalg.eigenvalues(G.jacobian(axis_params, eq.state))
        numeric = spec.real.max() <= 1e-6
        assert G.tf_spectral(axis_params, eq.M).is_stable == numeric, eq.state


def test_isolation_examples(ref):
    assert G.isolation_test(ref, (3, 1, 0), (0, 0, 0)).is_stable
    assert G.isolation_test(ref, (-1, 0, 0), (1, 0, 0)).is_unstable
    assert G.isolation_test(ref, (2, 0, 0), (0, 1, 0)).is_unstable
    assert G.isolation_test(ref, (2, 0, 0), (1, 0, 0)).is_stable


def test_cq_stability_examples(ref):
    assert G.cq_stability(ref, eq_state((0, 0, 0), (5, 0, 0))).is_stable
    assert G.cq_stability(ref, eq_state((0, 0, 0), (0, 1, 0))).is_unstable
    assert G.cq_stability(ref, eq_state((-1, 0, 0), (2, 0, 0))).is_unstable
    p3 = GyrostatParams.on_axis((3, 2, 1), 3, 1.0)
    assert G.cq_stability(p3, G.make_equilibrium(p3, "E4", beta=1.0, theta=0.5)).is_unstable


def test_lyapunov_examples(ref):
    assert G.lyapunov_stability(ref, eq_state((-1, 0, 0), (0.5, 0, 0))).is_undecided
    for alpha in (0.0, 1.0, -2.0):
        assert G.lyapunov_stability(ref, eq_state((2, 0, 0), (alpha, 0, 0))).is_stable
    assert G.lyapunov_stability(ref, eq_state((0, 0, 0), (0, 1, 0))).is_unstable


def test_gamma_and_m_examples(ref):
    e4 = lambda th: G.make_equilibrium(ref, "E4", beta=1.0, theta=th)
    assert G.gamma_stability(ref, e4(0.0)).is_stable
    assert G.gamma_stability(ref, e4(1.0)).is_unstable
    assert G.gamma_stability(ref, eq_state((-3, 0, 0), (1, 0, 0))).is_unstable
    assert G.gamma_stability(ref, eq_state((-1, 0, 0), (1, 0, 0))).is_undecided
    assert G.m_stability(ref, eq_state((2, 0, 0), (1, 0, 0))).is_stable
    assert G.m_stability(ref, e4(1.0)).is_unstable
    assert G.m_stability(ref, eq_state((0, 0, 0), (0, 1, 0))).is_stable


def test_endpoint_tuple(ref):
    assert verdicts(ref, (-3, 0, 0, 1, 0, 0))[:3] == (S, U, U)


@pytest.mark.parametrize("axis", [1, 2, 3])
def test_undecided_family(axis):
    p = GyrostatParams.on_axis((3, 2, 1), axis, 1.0)
    x = np.zeros(6)
    x[axis - 1] = -1.0
    x[axis + 2] = 1.0
    assert verdicts(p, x) == (S, U, D, S, D)
    assert G.is_undecided_family(p, x)


def test_tables_match_pipeline(axis_params):
    ranges = {"q": np.linspace(-4, 4, 33), "alpha": (0.0, 0.5), "theta": (0.0, 0.7, -1.1)}
    for eq in G.enumerate_families(axis_params, ranges):
        assert G.cq_stability(axis_params, eq).value == G.cq_stability_pipeline(axis_params, eq).value
        assert G.gamma_stability(axis_params, eq).value == G.gamma_stability_pipeline(axis_params, eq).value
        rep = G.analyze(axis_params, eq)
        assert rep.violations(G.tf_lyapunov(axis_params, eq.M)) == []


def test_negative_mu_canonicalized(axis_params):
    for eq in G.enumerate_families(axis_params):
        pn, xn = G.flip_sign(axis_params, eq.state)
        assert verdicts(axis_params, eq.state) == verdicts(pn, xn)


def test_analyze_rejects_non_equilibrium(ref):
    with pytest.raises(NotAnEquilibrium):
        G.analyze(ref, eq_state((2, 0, 0), (0, 1, 0)))


# exact solutions and the invariant set ------------------------------------

def test_closed_form_q_zero(ref):
    g0 = np.array([0.3, 0.4, -1.0])
    np.testing.assert_allclose(G.closed_form_gamma(ref, 0.0, g0, 7.3)[3:], g0)


def test_closed_form_quarter_turn(ref):
    t = (np.pi / 2) * 3 / 2  # q t / I1 = pi/2
    x = G.closed_form_gamma(ref, 2.0, (0, 1, 0), t)
    np.testing.assert_allclose(x[3:], (0, 0, -1), atol=1e-15)
    np.testing.assert_array_equal(x[:3], (2, 0, 0))


def test_closed_form_satisfies_ode(axis_params):
    k = axis_params.axis - 1
    q = 1.7
    g0 = np.array([0.2, -0.5, 0.9])
    h = 1e-5
    for t in (0.0, 0.4, 3.0):
        x = G.closed_form_gamma(axis_params, q, g0, t)
        dx = (G.closed_form_gamma(axis_params, q, g0, t + h) - G.closed_form_gamma(axis_params, q, g0, t - h)) / (2 * h)
        np.testing.assert_allclose(dx, G.rhs(axis_params, x), atol=1e-8)
        assert x[3 + k] == pytest.approx(g0[k])


def test_invariant_set_examples(ref):
    ok, delta = G.invariant_set_membership(ref, eq_state((2, 0, 0), (1, 0, 0)))
    assert ok and delta == pytest.approx(3.0)
    assert not G.invariant_set_membership(ref, eq_state((-1, 0, 0), (0, 0, 0)))[0]
    assert not G.invariant_set_membership(ref, eq_state((2, 0, 0), (0, 1, 0)))[0]


def test_invariant_set_criteria_agree(ref, rng):
    for i in range(200):
        g = rng.normal(size=3)
        M = rng.normal(size=3) if i % 2 else rng.normal() * g - ref.mu_vec
        x = eq_state(M, g)
        in_set, delta = G.invariant_set_membership(ref, x)
        assert in_set == (G.gradient_rank(ref, x) == 2)
        if in_set:
            assert np.linalg.norm(M + ref.mu_vec - delta * g) <= 1e-10 * (1 + np.linalg.norm(M + ref.mu_vec))
