import numpy as np
import pytest

from gyrostab import gyrostat as G
from gyrostab import numerics
from gyrostab.numerics import gyrostat_field, integrate


def test_zero_field_constant():
    x0 = np.array([1.0, -2.0, 0.5])
    traj = integrate(lambda x: np.zeros(3), x0, 1.0, 0.01)
    assert len(traj) == 101
    np.testing.assert_array_equal(traj.states, np.tile(x0, (101, 1)))
    np.testing.assert_array_equal(numerics.drift(traj, [lambda x: x @ x]), [0.0])


def test_equilibrium_start_constant(ref):
    for eq in G.enumerate_families(ref):
        traj = integrate(gyrostat_field(ref), eq.state, 5.0, 1e-3, stride=100)
        assert np.max(np.abs(traj.states - eq.state)) <= 1e-12


def test_python_loop_matches_kernel(ref, rng):
    x0 = rng.normal(size=6)
    fast = integrate(gyrostat_field(ref), x0, 2.0, 1e-3)
    slow = integrate(lambda x: G.rhs(ref, x), x0, 2.0, 1e-3)
    np.testing.assert_allclose(fast.states, slow.states, atol=1e-13)
    np.testing.assert_allclose(fast.times, slow.times)


def test_closed_form_match(ref):
    x0 = G.make_state((2, 0, 0), (0, 1, 0))
    traj = integrate(gyrostat_field(ref), x0, 50.0, 1e-3)
    exact = G.closed_form_gamma(ref, 2.0, (0, 1, 0), traj.times)
    assert np.max(np.abs(traj.states - exact)) <= 1e-6
    # the (g2, g3) norm is preserved along the rotation
    r = np.linalg.norm(traj.gamma[:, 1:], axis=1)
    assert np.max(np.abs(r - 1.0)) <= 1e-9


def test_integrate_validates(ref):
    f = gyrostat_field(ref)
    with pytest.raises(ValueError):
        integrate(f, np.zeros(6), 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate(f, np.zeros(6), -1.0, 0.1)


def test_stride_and_backward(ref, rng):
    f = gyrostat_field(ref)
    x0 = rng.normal(size=6)
    full = integrate(f, x0, 1.0, 1e-3)
    sub = integrate(f, x0, 1.0, 1e-3, stride=10)
    np.testing.assert_array_equal(sub.states, full.states[::10])
    back = integrate(f, full.states[-1], 1.0, 1e-3, backward=True)
    assert back.times[-1] == pytest.approx(-1.0)
    np.testing.assert_allclose(back.states[-1], x0, atol=1e-10)


def test_blowup_flagged_and_raised():
    traj = integrate(lambda x: x * x, np.array([1.0]), 10.0, 0.01)
    assert traj.blowup and len(traj) < 1001
    with pytest.raises(numerics.BlowUp) as info:
        integrate(lambda x: x * x, np.array([1.0]), 10.0, 0.01, raise_on_blowup=True)
    assert info.value.trajectory.blowup


def test_kernel_blowup(ref):
    traj = integrate(gyrostat_field(ref), [5, 5, 5, 1, 1, 1], 1000.0, 5.0)
    assert traj.blowup
    assert np.all(np.isfinite(traj.states))


def test_batch_matches_single(ref, rng):
    f = gyrostat_field(ref)
    X = rng.normal(size=(4, 6))
    times, states, nvalid = numerics.integrate_batch(f, X, 1.0, 1e-2)
    assert np.all(nvalid == len(times))
    for i, x0 in enumerate(X):
        np.testing.assert_array_equal(states[i], integrate(f, x0, 1.0, 1e-2).states)


def test_conserved_series_matches_scalar(ref, rng):
    X = rng.normal(size=(10, 6))
    np.testing.assert_allclose(numerics.conserved_series(ref, X), [G.conserved(ref, x) for x in X], rtol=1e-14)


def test_drift_bounds_and_order(ref, rng):
    f = gyrostat_field(ref)
    X = rng.normal(size=(4, 6)) * 3
    coarse, fine = [], []
    for x0 in X:
        traj = integrate(f, x0, 100.0, 1e-3)
        assert np.all(numerics.relative_drift(traj) <= 1e-6)
        coarse.append(numerics.drift(integrate(f, x0, 20.0, 1e-2)))
        fine.append(numerics.drift(integrate(f, x0, 20.0, 5e-3)))
    # doubling dt grows drift by about 2^4 (the worst state per quantity)
    ratio = np.max(coarse, axis=0) / np.max(fine, axis=0)
    assert np.all(ratio >= 8) and np.all(ratio <= 40), ratio


def test_relative_drift_floor():
    traj = numerics.Trajectory(np.arange(3.0), np.array([[0.0], [1e-13], [0.0]]))
    np.testing.assert_allclose(numerics.relative_drift(traj, [lambda x: x[0]]), [0.1])


def test_perturb_zero_delta(ref):
    xe = G.make_state((2, 0, 0), (1, 0, 0))
    res = numerics.perturb_experiment(ref, xe, 0.0, 3, T=1.0, dt=1e-2, escape_threshold=1.0)
    assert res.max_dev_full == 0.0


def test_perturb_unstable_escapes(ref):
    xe = G.make_state((-2, 0, 0), (1, 0, 0))
    res = numerics.perturb_experiment(ref, xe, 1e-4, 4, T=100.0, dt=1e-3, seed=3)
    assert res.max_dev_full >= 0.1
    assert numerics.empirical_verdict(res).is_unstable


def test_perturb_stable_stays_close(ref):
    xe = G.make_state((2, 0, 0), (1, 0, 0))
    res = numerics.perturb_experiment(ref, xe, 1e-3, 4, T=200.0, dt=1e-3, seed=5)
    assert res.max_dev_full <= 0.1
    v = numerics.empirical_verdict(res)
    assert v.is_undecided and v.justification == "consistent-with-stable"


def test_perturb_deterministic_and_thread_invariant(ref):
    xe = G.make_state((-2, 0, 0), (1, 0, 0))
    a = numerics.perturb_experiment(ref, xe, 1e-3, 6, T=5.0, dt=1e-2, seed=11)
    b = numerics.perturb_experiment(ref, xe, 1e-3, 6, T=5.0, dt=1e-2, seed=11, workers=3)
    np.testing.assert_array_equal(a.per_sample, b.per_sample)
    assert a.to_dict() == b.to_dict()


def test_empirical_verdict_threshold_check(ref):
    xe = G.make_state((2, 0, 0), (1, 0, 0))
    res = numerics.perturb_experiment(ref, xe, 1e-3, 2, T=1.0, dt=1e-2)
    with pytest.raises(ValueError):
        numerics.empirical_verdict(res, escape_threshold=1e-3)
    res.per_sample[0, 2] = 10.0
    assert numerics.empirical_verdict(res).is_unstable


def test_uniform_sphere(rng):
    v = numerics.uniform_sphere(rng, 2000)
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0)
    assert np.all(np.abs(v.mean(axis=0)) < 0.05)
