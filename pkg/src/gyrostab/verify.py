"""Oracle checks behind ``gyrostab verify``.

Each check returns a :class:`CheckResult` with the measured quantity and
the tolerance it is held to.  Everything is seeded, so two runs with the
same seed produce identical reports.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import gyrostat as G
from . import linalg, numerics, skewprod

REFERENCE = G.GyrostatParams(3.0, 2.0, 1.0, (1.0, 0.0, 0.0))


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    tol: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: measured={self.measured:.3e} tol={self.tol:.1e} {self.detail}".rstrip()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "measured": float(self.measured),
            "tol": float(self.tol),
            "detail": self.detail,
        }


def _faulty_rhs(params, x):
    out = G.rhs(params, x)
    out[:3] = -out[:3]
    return out


FAULTS: dict[str, Callable] = {"rhs-sign": _faulty_rhs}


def all_axis_params(inertia=(3.0, 2.0, 1.0), mu=1.0):
    return [G.GyrostatParams.on_axis(inertia, ax, mu) for ax in (1, 2, 3)]


def sample_equilibria(rng: np.random.Generator, per_family: int = 3):
    """Random members of every family on all three axes (reference inertia)."""
    out = []
    for p in all_axis_params():
        for tmpl in G.family_templates(p):
            for _ in range(per_family):
                vals = {}
                for name in tmpl.free:
                    v = rng.uniform(-3, 3)
                    if name in tmpl.nonzero and abs(v) < 0.1:
                        v = 0.5
                    vals[name] = v
                out.append((p, G.make_equilibrium(p, tmpl.family, **vals)))
    return out


def random_states(rng, n, radius=10.0):
    d = numerics.uniform_sphere(rng, n)
    r = radius * rng.random(n) ** (1 / 6)
    return d * r[:, None]


def brute_force_isolated(n, g0, n_theta: int = 20000, eps: float = 1e-3) -> bool:
    """Isolation of ``g0`` in ``{|g| = |g0|, n.g = n.g0}`` by sampling the solution set.

    The solutions are swept explicitly (whole sphere when ``n = 0``, the
    plane section circle otherwise) and ``g0`` counts as isolated when no
    sampled solution other than ``g0`` lies within ``eps`` of it.
    """
    n = np.asarray(n, float)
    g0 = np.asarray(g0, float)
    r = np.linalg.norm(g0)
    if r == 0.0:
        return True
    if np.linalg.norm(n) < 1e-14:
        # sphere: sweep a great circle through g0
        u = g0 / r
        v = np.cross(u, [1.0, 0.0, 0.0])
        if np.linalg.norm(v) < 1e-8:
            v = np.cross(u, [0.0, 1.0, 0.0])
        v /= np.linalg.norm(v)
        phi = np.linspace(-np.pi, np.pi, n_theta, endpoint=False)
        pts = r * (np.cos(phi)[:, None] * u + np.sin(phi)[:, None] * v)
    else:
        nh = n / np.linalg.norm(n)
        center = (nh @ g0) * nh
        rho2 = r * r - center @ center
        if rho2 <= (1e-6 * r) ** 2:
            return True  # circle degenerates to the single point g0
        rho = np.sqrt(rho2)
        u = g0 - center
        u -= (u @ nh) * nh
        u /= np.linalg.norm(u)
        v = np.cross(nh, u)
        phi = np.linspace(-np.pi, np.pi, n_theta, endpoint=False)
        pts = center + rho * (np.cos(phi)[:, None] * u + np.sin(phi)[:, None] * v)
        # every sampled point must satisfy both equations
        assert np.allclose(np.einsum("ij,ij->i", pts, pts), r * r, rtol=1e-9, atol=1e-12)
        assert np.allclose(pts @ n, n @ g0, rtol=1e-9, atol=1e-12)
    d = np.linalg.norm(pts - g0, axis=1)
    near = d[(d > 1e-12 * max(r, 1.0)) & (d < eps * max(r, 1.0))]
    return near.size == 0


def isolation_cases(rng, n: int = 200):
    """Mixed random cases: generic, parallel, zero gamma, and M0 = -mu."""
    cases = []
    for i in range(n):
        p = all_axis_params()[i % 3]
        kind = i % 4
        M0 = rng.normal(size=3) * 2
        g0 = rng.normal(size=3)
        if kind == 1:
            g0 = rng.uniform(-2, 2) * (M0 + p.mu_vec)
        elif kind == 2:
            g0 = np.zeros(3)
        elif kind == 3:
            M0 = -p.mu_vec
        cases.append((p, M0, g0))
    return cases


# --------------------------------------------------------------------------
# the checks


def check_factorization(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    eqs = sample_equilibria(rng, per_family=3)
    for p, eq in eqs:
        fac = G.char_poly_factored(p, eq)
        full = linalg.char_poly(G.jacobian(p, eq.state))
        worst = max(worst, float(np.max(np.abs(fac.coefficients() - full))))
    return CheckResult("char-poly factorization", worst <= 1e-8, worst, 1e-8, f"{len(eqs)} equilibria")


def check_block_spectrum(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed + 1)
    worst = 0.0
    ok = True
    for _ in range(100):
        A, B, C = rng.normal(size=(3, 3, 3))
        J = np.block([[A, np.zeros((3, 3))], [B, C]])
        full = linalg.eigenvalues(J)
        union = np.concatenate([linalg.eigenvalues(A), linalg.eigenvalues(C)])
        ok &= linalg.spectra_match(full, union, 1e-7)
        worst = max(worst, _spectrum_distance(full, union))
    return CheckResult("block spectrum", bool(ok), worst, 1e-7, "100 random matrices")


def _spectrum_distance(a, b) -> float:
    b = list(b)
    worst = 0.0
    for lam in a:
        j = int(np.argmin([abs(lam - m) for m in b]))
        worst = max(worst, abs(lam - b[j]))
        b.pop(j)
    return worst


def check_poisson(seed: int, rhs_fn=G.rhs) -> CheckResult:
    rng = np.random.default_rng(seed + 2)
    worst = 0.0
    for p in all_axis_params():
        for x in random_states(rng, 334):
            P = G.poisson_matrix(p, x)
            gH, gC1, gC2, _ = G.conserved_gradients(p, x)
            worst = max(
                worst,
                float(np.linalg.norm(rhs_fn(p, x) - P @ gH)),
                float(np.linalg.norm(P @ gC1)),
                float(np.linalg.norm(P @ gC2)),
            )
    return CheckResult("poisson form", worst <= 1e-12, worst, 1e-12, "1002 states")


def check_drift(seed: int, n_states: int = 5) -> CheckResult:
    rng = np.random.default_rng(seed + 3)
    p = REFERENCE
    f = numerics.gyrostat_field(p)
    worst = 0.0
    for x0 in random_states(rng, n_states):
        traj = numerics.integrate(f, x0, 100.0, 1e-3)
        worst = max(worst, float(numerics.relative_drift(traj).max()))
    return CheckResult("conservation drift", worst <= 1e-6, worst, 1e-6, f"{n_states} states, T=100")


def check_closed_form(seed: int) -> CheckResult:
    p = REFERENCE
    f = numerics.gyrostat_field(p)
    worst = 0.0
    for q, g0 in ((2.0, (0.0, 1.0, 0.0)), (-p.mu[0], (0.3, 0.8, -0.5))):
        x0 = G.make_state((q, 0, 0), g0)
        traj = numerics.integrate(f, x0, 50.0, 1e-3)
        exact = G.closed_form_gamma(p, q, g0, traj.times)
        worst = max(worst, float(np.max(np.abs(traj.states - exact))))
    return CheckResult("closed-form rotation", worst <= 1e-6, worst, 1e-6, "q=2 and leaf M=-mu")


def check_invariant_set(seed: int, n: int = 5) -> CheckResult:
    rng = np.random.default_rng(seed + 4)
    p = REFERENCE
    f = numerics.gyrostat_field(p)
    worst = 0.0
    for _ in range(n):
        g0 = rng.normal(size=3)
        delta = rng.uniform(0.5, 2.0) * rng.choice([-1, 1])
        x0 = G.make_state(delta * g0 - p.mu_vec, g0)
        traj = numerics.integrate(f, x0, 100.0, 1e-3, stride=10)
        gg = np.einsum("ij,ij->i", traj.gamma, traj.gamma)
        ratio = np.einsum("ij,ij->i", traj.M + p.mu_vec, traj.gamma) / gg
        s = traj.M - delta * traj.gamma + p.mu_vec
        worst = max(worst, float(np.max(np.abs(ratio - delta))), float(np.max(np.linalg.norm(s, axis=1))))
    return CheckResult("invariant set", worst <= 1e-6, worst, 1e-6, f"{n} trajectories")


def report_violations(p, eq) -> list[str]:
    rep = G.analyze(p, eq)
    reduced = G.tf_lyapunov(p, eq.state[:3])
    out = rep.violations(reduced)
    if G.cq_stability(p, eq).value != G.cq_stability_pipeline(p, eq).value:
        out.append("cq table != pipeline")
    if G.gamma_stability(p, eq).value != G.gamma_stability_pipeline(p, eq).value:
        out.append("gamma table != pipeline")
    return out


def check_coherence(seed: int) -> CheckResult:
    bad = 0
    count = 0
    for p in all_axis_params():
        ranges = {
            "q": (-4.0, -3.0, -2.5, -2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 2.0, 2.5, 4.0),
            "alpha": (0.0, 1.0),
            "theta": (0.0, 0.7),
        }
        for eq in G.enumerate_families(p, ranges):
            count += 1
            bad += len(report_violations(p, eq))
    return CheckResult("classifier coherence", bad == 0, float(bad), 0.0, f"{count} equilibria")


def check_instability(seed: int) -> CheckResult:
    p = REFERENCE
    xe = G.make_state((-2.0, 0, 0), (1.0, 0, 0))
    lam = linalg.eigenvalues(G.jacobian(p, xe)).real.max()
    res = numerics.perturb_experiment(p, xe, 1e-4, 4, T=100.0, dt=1e-3, seed=seed)
    ok = lam > 0 and res.max_dev_full >= 1e-1
    return CheckResult(
        "instability reproduction", bool(ok), res.max_dev_full, 1e-1,
        f"max Re(lambda)={lam:.4f}",
    )


def check_isolation(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed + 5)
    bad = 0
    cases = isolation_cases(rng)
    for p, M0, g0 in cases:
        v = G.isolation_test(p, M0, g0)
        if v.is_stable != brute_force_isolated(M0 + p.mu_vec, g0):
            bad += 1
    return CheckResult("isolation oracle", bad == 0, float(bad), 0.0, f"{len(cases)} cases")


def check_endpoint_and_undecided(seed: int) -> CheckResult:
    p = REFERENCE
    rep = G.analyze(p, G.make_state((-3.0, 0, 0), (1.0, 0, 0)))
    ok = (rep.spectral.is_stable, rep.cq.is_unstable, rep.lyapunov.is_unstable) == (True, True, True)
    for pa in all_axis_params():
        k = pa.axis - 1
        M = -pa.mu_vec
        g = np.zeros(3)
        g[k] = 1.0
        r = G.analyze(pa, G.make_state(M, g))
        ok &= (
            r.spectral.is_stable and r.cq.is_unstable and r.lyapunov.is_undecided
            and r.z_partial.is_undecided and r.y_partial.is_stable
        )
    return CheckResult("endpoint and undecided verdicts", bool(ok), 0.0 if ok else 1.0, 0.0)


def check_sign_symmetry(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed + 6)
    worst = 0.0
    mismatches = 0
    eqs = sample_equilibria(rng, per_family=1)[:10]
    for p, eq in eqs:
        pn, xn = G.flip_sign(p, eq.state)
        a, b = G.analyze(p, eq), G.analyze(pn, xn)
        for f in ("spectral", "cq", "lyapunov", "y_partial", "z_partial"):
            mismatches += getattr(a, f).value != getattr(b, f).value
    p = REFERENCE
    for x0 in random_states(rng, 5, radius=3.0):
        pn, xn = G.flip_sign(p, x0)
        fwd = numerics.integrate(numerics.gyrostat_field(p), x0, 10.0, 1e-3)
        bwd = numerics.integrate(numerics.gyrostat_field(pn), xn, 10.0, 1e-3, backward=True)
        mapped = np.hstack([-bwd.M, bwd.gamma])
        worst = max(worst, float(np.max(np.abs(mapped - fwd.states))))
    ok = mismatches == 0 and worst <= 1e-9
    return CheckResult("sign symmetry", ok, worst, 1e-9, f"{mismatches} verdict mismatches")


CHECKS = [
    ("factorization", check_factorization),
    ("block-spectrum", check_block_spectrum),
    ("poisson", check_poisson),
    ("drift", check_drift),
    ("closed-form", check_closed_form),
    ("invariant-set", check_invariant_set),
    ("coherence", check_coherence),
    ("instability", check_instability),
    ("isolation", check_isolation),
    ("endpoints", check_endpoint_and_undecided),
    ("sign-symmetry", check_sign_symmetry),
]


def run_suite(seed: int = 0, fault: str | None = None) -> list[CheckResult]:
    results = []
    for name, check in CHECKS:
        if name == "poisson" and fault is not None:
            results.append(check(seed, rhs_fn=FAULTS[fault]))
        else:
            results.append(check(seed))
    return results
