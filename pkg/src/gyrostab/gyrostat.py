"""The heavy gyrostat with its center of gravity at the fixed point.

State vectors are flat arrays ``x = (M1, M2, M3, g1, g2, g3)`` holding the
body angular momentum ``M`` and the gravity direction ``gamma``.  The
equations of motion are

    M'     = (M + mu) x I^-1 M   (+ m gamma x r_G in the general heavy case)
    gamma' = gamma x I^-1 M

Axes are numbered 1..3 in everything user facing (family names, tags,
``axis`` fields) and 0..2 internally.

All stability classifiers assume the gyrostatic moment ``mu`` lies along
one principal axis.  A negative component is handled through the
symmetry ``(M, gamma, mu) -> (-M, gamma, -mu)``, which maps solutions to
time-reversed solutions and preserves every verdict.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import linalg, skewprod
from .linalg import hat
from .skewprod import NotAnEquilibrium, Stability, StabilityReport, Verdict

__all__ = [
    "GyrostatParams",
    "Family",
    "EquilibriumState",
    "FamilyTemplate",
    "FactoredCharPoly",
    "UnsupportedMu",
    "UnsupportedCase",
    "UnsupportedInitialCondition",
    "NotAnEquilibrium",
    "make_state",
    "split_state",
    "rhs",
    "rhs_general",
    "conserved",
    "conserved_gradients",
    "poisson_matrix",
    "torque_free_rhs",
    "torque_free_jacobian",
    "jacobian",
    "char_poly_factored",
    "family_templates",
    "make_equilibrium",
    "enumerate_families",
    "classify_state",
    "tf_spectral",
    "tf_cq",
    "tf_lyapunov",
    "isolation_test",
    "cq_stability",
    "cq_stability_pipeline",
    "lyapunov_stability",
    "m_stability",
    "gamma_stability",
    "gamma_stability_pipeline",
    "is_undecided_family",
    "closed_form_gamma",
    "invariant_set_membership",
    "fiber_ratio",
    "analyze",
    "as_skew_product",
    "flip_sign",
]

COLINEAR_RTOL = 1e-10
# relative slack for "q sits on an interval endpoint" and "parameter is zero"
ENDPOINT_RTOL = 1e-12
EQ_STATE_TOL = 1e-12


class UnsupportedMu(ValueError):
    """The gyrostatic moment is not aligned with a single principal axis."""


class UnsupportedCase(ValueError):
    """The state matches no tabulated family of uniform rotations."""


class UnsupportedInitialCondition(ValueError):
    pass


# --------------------------------------------------------------------------
# parameters and states


@dataclass(frozen=True)
class GyrostatParams:
    """Principal moments of inertia and the gyrostatic moment.

    ``m`` and ``r_G`` (mass and center-of-gravity offset) only enter the
    general heavy-gyrostat vector field used for simulation.
    """

    I1: float
    I2: float
    I3: float
    mu: tuple = (0.0, 0.0, 0.0)
    m: float = 0.0
    r_G: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        I = (float(self.I1), float(self.I2), float(self.I3))
        if not all(math.isfinite(v) for v in I):
            raise ValueError("moments of inertia must be finite")
        if not (I[0] > I[1] > I[2] > 0):
            raise ValueError(f"need I1 > I2 > I3 > 0, got {I}")
        object.__setattr__(self, "I1", I[0])
        object.__setattr__(self, "I2", I[1])
        object.__setattr__(self, "I3", I[2])
        object.__setattr__(self, "mu", tuple(float(v) for v in self.mu))
        object.__setattr__(self, "r_G", tuple(float(v) for v in self.r_G))
        object.__setattr__(self, "m", float(self.m))
        if len(self.mu) != 3 or len(self.r_G) != 3:
            raise ValueError("mu and r_G must be 3-vectors")

    @classmethod
    def on_axis(cls, inertia, axis: int, mu: float, **kw) -> "GyrostatParams":
        """Parameters with ``mu`` of magnitude ``mu`` along ``axis`` (1..3)."""
        vec = [0.0, 0.0, 0.0]
        vec[axis - 1] = float(mu)
        return cls(*inertia, mu=tuple(vec), **kw)

    @property
    def inertia(self) -> np.ndarray:
        return np.array([self.I1, self.I2, self.I3])

    @property
    def mu_vec(self) -> np.ndarray:
        return np.array(self.mu)

    @property
    def r_G_vec(self) -> np.ndarray:
        return np.array(self.r_G)

    @property
    def axis(self) -> int | None:
        """Axis (1..3) carrying ``mu`` when exactly one component is nonzero."""
        nz = [i for i, v in enumerate(self.mu) if v != 0.0]
        return nz[0] + 1 if len(nz) == 1 else None

    def require_axis(self) -> int:
        ax = self.axis
        if ax is None:
            raise UnsupportedMu(f"mu={self.mu} is not aligned with a principal axis")
        return ax

    def with_mu(self, mu) -> "GyrostatParams":
        return GyrostatParams(self.I1, self.I2, self.I3, tuple(mu), self.m, self.r_G)


def make_state(M, gamma) -> np.ndarray:
    return np.concatenate([np.asarray(M, float), np.asarray(gamma, float)])


def split_state(x) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    return x[:3], x[3:]


# --------------------------------------------------------------------------
# dynamics and first integrals


def torque_free_rhs(params: GyrostatParams, M) -> np.ndarray:
    M = np.asarray(M, float)
    return linalg.cross(M + params.mu_vec, M / params.inertia)


def rhs(params: GyrostatParams, x) -> np.ndarray:
    M, g = split_state(x)
    w = M / params.inertia
    return np.concatenate([linalg.cross(M + params.mu_vec, w), linalg.cross(g, w)])


def rhs_general(params: GyrostatParams, x) -> np.ndarray:
    """Heavy gyrostat field including the gravity torque ``m gamma x r_G``."""
    out = rhs(params, x)
    if params.m != 0.0:
        out[:3] += params.m * linalg.cross(x[3:], params.r_G_vec)
    return out


def conserved(params: GyrostatParams, x) -> tuple[float, float, float, float]:
    """``(H, C1, C2, F)`` at the state ``x``."""
    M, g = split_state(x)
    n = M + params.mu_vec
    H = 0.5 * float(M @ (M / params.inertia))
    C1 = 0.5 * float(g @ g)
    C2 = float(n @ g)
    F = 0.5 * float(n @ n)
    return H, C1, C2, F


def conserved_gradients(params: GyrostatParams, x) -> np.ndarray:
    """Rows are the gradients of ``H, C1, C2, F`` with respect to ``(M, gamma)``."""
    M, g = split_state(x)
    n = M + params.mu_vec
    z = np.zeros(3)
    return np.array(
        [
            np.concatenate([M / params.inertia, z]),
            np.concatenate([z, g]),
            np.concatenate([g, n]),
            np.concatenate([n, z]),
        ]
    )


def poisson_matrix(params: GyrostatParams, x) -> np.ndarray:
    M, g = split_state(x)
    hg = hat(g)
    return np.block([[hat(M + params.mu_vec), hg], [hg, np.zeros((3, 3))]])


def torque_free_jacobian(params: GyrostatParams, M) -> np.ndarray:
    """Linearization of ``M' = (M + mu) x I^-1 M``."""
    M = np.asarray(M, float)
    Iinv = np.diag(1.0 / params.inertia)
    return hat(M + params.mu_vec) @ Iinv - hat(M / params.inertia)


def jacobian(params: GyrostatParams, x) -> np.ndarray:
    """Analytic 6x6 Jacobian of :func:`rhs`.

    The lower right block is ``-hat(I^-1 M)`` (``d(g x w)/dg``); it has the
    same spectrum ``{0, +-i|I^-1 M|}`` as ``hat(I^-1 M)``.
    """
    M, g = split_state(x)
    Iinv = np.diag(1.0 / params.inertia)
    return np.block(
        [
            [torque_free_jacobian(params, M), np.zeros((3, 3))],
            [hat(g) @ Iinv, -hat(M / params.inertia)],
        ]
    )


# --------------------------------------------------------------------------
# equilibrium families


class Family(str, enum.Enum):
    E0 = "E0"
    E12 = "E12"
    E3 = "E3"
    E4 = "E4"
    E5 = "E5"

    def __str__(self) -> str:
        return self.value


def _beta_family(beta_index: int) -> Family:
    return Family(f"E{beta_index + 3}")


def _beta_index(family: Family) -> int:
    return int(family.value[1:]) - 3


def _families_for_axis(axis: int) -> list[Family]:
    k = axis - 1
    return [Family.E0, Family.E12] + [_beta_family(b) for b in range(3) if b != k]


@dataclass(frozen=True)
class EquilibriumState:
    state: np.ndarray
    family: Family
    axis: int | None
    params: Mapping[str, float] = field(default_factory=dict)

    @property
    def M(self) -> np.ndarray:
        return self.state[:3]

    @property
    def gamma(self) -> np.ndarray:
        return self.state[3:]

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "axis": self.axis,
            "params": {k: float(v) for k, v in sorted(self.params.items())},
            "state": [float(v) for v in self.state],
        }


@dataclass(frozen=True)
class FamilyTemplate:
    family: Family
    axis: int
    free: tuple[str, ...]
    M: tuple[str, str, str]
    gamma: tuple[str, str, str]
    nonzero: tuple[str, ...] = ()

    def describe(self) -> str:
        comps = ", ".join(self.M + self.gamma)
        return f"{self.family.value}: ({comps})"


def family_templates(params: GyrostatParams) -> list[FamilyTemplate]:
    """Symbolic equilibrium families for the axis carrying ``mu``."""
    axis = params.require_axis()
    k = axis - 1
    out = [
        FamilyTemplate(
            Family.E0, axis, ("alpha1", "alpha2", "alpha3"), ("0", "0", "0"),
            ("alpha1", "alpha2", "alpha3"),
        )
    ]
    M = ["0", "0", "0"]
    g = ["0", "0", "0"]
    M[k], g[k] = "q", "alpha"
    out.append(FamilyTemplate(Family.E12, axis, ("q", "alpha"), tuple(M), tuple(g), ("q",)))
    for b in range(3):
        if b == k:
            continue
        c = f"I{axis}*mu{axis}/(I{b + 1}-I{axis})"
        M = ["0", "0", "0"]
        g = ["0", "0", "0"]
        M[k], M[b] = c, "beta"
        g[k], g[b] = f"theta*mu{axis}/(I{b + 1}-I{axis})", f"theta*beta/I{b + 1}"
        out.append(
            FamilyTemplate(_beta_family(b), axis, ("beta", "theta"), tuple(M), tuple(g), ("beta",))
        )
    return out


def _beta_family_offset(params: GyrostatParams, axis: int, b: int) -> float:
    k = axis - 1
    I = params.inertia
    return I[k] * params.mu[k] / (I[b] - I[k])


def make_equilibrium(params: GyrostatParams, family, **values) -> EquilibriumState:
    """Instantiate one member of ``family`` from its free parameters.

    E0 takes ``alpha1..alpha3``; E12 takes ``q`` and ``alpha``; the
    remaining families take ``beta`` and ``theta``.  ``q`` and ``beta``
    must be nonzero.
    """
    family = Family(family)
    axis = params.require_axis()
    if family not in _families_for_axis(axis):
        raise ValueError(f"family {family} does not exist for mu along axis {axis}")
    k = axis - 1
    I = params.inertia
    M = np.zeros(3)
    g = np.zeros(3)
    if family is Family.E0:
        vals = {n: float(values.get(n, 0.0)) for n in ("alpha1", "alpha2", "alpha3")}
        g[:] = [vals["alpha1"], vals["alpha2"], vals["alpha3"]]
    elif family is Family.E12:
        q = float(values["q"])
        alpha = float(values.get("alpha", 0.0))
        if q == 0.0:
            raise ValueError("q must be nonzero (q = 0 is the E0 family)")
        M[k], g[k] = q, alpha
        vals = {"q": q, "alpha": alpha}
    else:
        b = _beta_index(family)
        beta = float(values["beta"])
        theta = float(values.get("theta", 0.0))
        if beta == 0.0:
            raise ValueError("beta must be nonzero")
        c = _beta_family_offset(params, axis, b)
        M[k], M[b] = c, beta
        g = theta * M / I + 0.0  # no negative zeros
        vals = {"beta": beta, "theta": theta}
    return EquilibriumState(make_state(M, g), family, axis, vals)


_DEFAULT_RANGES = {
    "alpha1": (0.0, 1.5),
    "alpha2": (0.0, -0.7),
    "alpha3": (0.0, 0.4),
    "q": (-4.0, -2.0, 1.0, 2.0),
    "alpha": (0.0, 1.0),
    "beta": (-1.5, 0.8),
    "theta": (0.0, 1.0),
}


def enumerate_families(
    params: GyrostatParams, ranges: Mapping[str, Iterable[float]] | None = None
) -> list[EquilibriumState]:
    """All equilibria on the Cartesian grid of parameter values in ``ranges``.

    Missing parameters use a small default grid; zero values of ``q`` or
    ``beta`` are skipped.
    """
    grid = dict(_DEFAULT_RANGES)
    if ranges:
        grid.update({k: tuple(v) for k, v in ranges.items()})
    out = []
    for tmpl in family_templates(params):
        names = tmpl.free
        for combo in itertools.product(*(grid[n] for n in names)):
            vals = dict(zip(names, combo))
            if any(vals.get(n, 1.0) == 0.0 for n in tmpl.nonzero):
                continue
            out.append(make_equilibrium(params, tmpl.family, **vals))
    return out


def _is_zero(v: float, scale: float = 1.0) -> bool:
    return abs(v) <= ENDPOINT_RTOL * (1.0 + abs(scale))


def classify_state(params: GyrostatParams, x, tol: float = 1e-10):
    """Decide whether ``x`` is an equilibrium and which family it belongs to.

    Returns ``(is_equilibrium, EquilibriumState or None)``.  The family is
    None for equilibria of a gyrostat whose ``mu`` is not axis aligned.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = np.asarray(x, float)
    if np.linalg.norm(rhs(params, x)) > tol:
        return False, None
    M, g = split_state(x)
    axis = params.axis
    if np.linalg.norm(M) <= tol:
        return True, EquilibriumState(
            make_state(np.zeros(3), g), Family.E0, axis,
            {"alpha1": g[0], "alpha2": g[1], "alpha3": g[2]},
        )
    if axis is None:
        return True, None
    k = axis - 1
    Mscale = max(np.linalg.norm(M), 1.0)
    others = [i for i in range(3) if i != k]
    w = M / params.inertia
    if all(abs(M[i]) <= tol * Mscale for i in others):
        q = M[k]
        return True, EquilibriumState(
            x.copy(), Family.E12, axis,
            {"q": q, "alpha": g[k], "theta": g[k] * params.inertia[k] / q},
        )
    for b in others:
        z = 3 - k - b
        c = _beta_family_offset(params, axis, b)
        if abs(M[z]) <= tol * Mscale and abs(M[k] - c) <= tol * Mscale:
            theta = float(g @ w) / float(w @ w)
            if np.linalg.norm(g - theta * w) > tol * max(np.linalg.norm(g), 1.0):
                return True, None
            return True, EquilibriumState(
                x.copy(), _beta_family(b), axis, {"beta": M[b], "theta": theta}
            )
    return True, None


def flip_sign(params: GyrostatParams, x) -> tuple[GyrostatParams, np.ndarray]:
    """Apply ``(M, gamma, mu) -> (-M, gamma, -mu)``."""
    M, g = split_state(x)
    return params.with_mu(-params.mu_vec), make_state(-M, g)


def _canonical(params: GyrostatParams, eq) -> tuple[GyrostatParams, EquilibriumState]:
    """Canonical form with positive ``mu`` and the family re-derived from the state."""
    axis = params.require_axis()
    x = eq.state if isinstance(eq, EquilibriumState) else np.asarray(eq, float)
    if params.mu[axis - 1] < 0:
        params, x = flip_sign(params, x)
    ok, ceq = classify_state(params, x, tol=1e-9)
    if not ok:
        raise NotAnEquilibrium(f"state {x} is not an equilibrium")
    if ceq is None:
        raise UnsupportedCase(f"equilibrium {x} matches no family")
    return params, ceq


# --------------------------------------------------------------------------
# spectrum


@dataclass(frozen=True)
class FactoredCharPoly:
    """``det(tI - J) = t (t^2 + w^2) * cubic(t)`` at an equilibrium.

    ``scalar_roots`` are ``{0, +-i w}`` with ``w = |I^-1 M_e|`` and ``cubic``
    holds the monic coefficients of ``det(tI - L_M)``.  In the
    ``det(J - tI)`` convention this reads ``-t (t^2 + w^2) P(t)`` with
    ``P(t) = det(L_M - tI)``.
    """

    scalar_roots: tuple[complex, complex, complex]
    cubic: np.ndarray
    omega: float

    def coefficients(self) -> np.ndarray:
        return np.polymul([1.0, 0.0, self.omega**2, 0.0], self.cubic)

    def spectrum(self) -> np.ndarray:
        return linalg.sort_spectrum(np.concatenate([self.scalar_roots, np.roots(self.cubic)]))


def char_poly_factored(params: GyrostatParams, eq) -> FactoredCharPoly:
    x = eq.state if isinstance(eq, EquilibriumState) else np.asarray(eq, float)
    resid = np.linalg.norm(rhs(params, x))
    if resid > skewprod.EQUILIBRIUM_TOL * max(1.0, np.linalg.norm(x)):
        raise NotAnEquilibrium(f"field residual {resid:.3e} at {x}")
    M = x[:3]
    omega = float(np.linalg.norm(M / params.inertia))
    cubic = linalg.char_poly(torque_free_jacobian(params, M))
    return FactoredCharPoly((0j, 1j * omega, -1j * omega), cubic, omega)


def _factored_spectrum(params: GyrostatParams, x) -> np.ndarray:
    M = np.asarray(x[:3], float)
    omega = float(np.linalg.norm(M / params.inertia))
    return linalg.sort_spectrum(
        np.concatenate(
            [[0.0, 1j * omega, -1j * omega], linalg.eigenvalues(torque_free_jacobian(params, M))]
        )
    )


# --------------------------------------------------------------------------
# uniform rotations of the torque-free gyrostat


def _in(q: float, lo: float, hi: float, lo_closed: bool, hi_closed: bool) -> bool:
    """Interval membership with tolerant endpoint detection (None = infinite)."""
    if lo is not None:
        if _is_zero(q - lo, lo):
            if not lo_closed:
                return False
        elif q < lo:
            return False
    if hi is not None:
        if _is_zero(q - hi, hi):
            if not hi_closed:
                return False
        elif q > hi:
            return False
    return True


def _tf_kind(params: GyrostatParams, M) -> tuple[str, float, int | None]:
    """Classify a torque-free uniform rotation as ('zero'|'axial'|'beta', value, b)."""
    axis = params.require_axis()
    k = axis - 1
    M = np.asarray(M, float)
    scale = max(np.linalg.norm(M), np.linalg.norm(params.mu_vec), 1.0)
    if np.linalg.norm(torque_free_rhs(params, M)) > 1e-9 * scale**2:
        raise UnsupportedCase(f"M={M} is not a uniform rotation")
    if np.linalg.norm(M) <= 1e-12 * scale:
        return "zero", 0.0, None
    others = [i for i in range(3) if i != k]
    if all(abs(M[i]) <= 1e-9 * scale for i in others):
        return "axial", float(M[k]), None
    for b in others:
        z = 3 - k - b
        c = _beta_family_offset(params, axis, b)
        if abs(M[z]) <= 1e-9 * scale and abs(M[k] - c) <= 1e-9 * scale:
            return "beta", float(M[b]), b
    raise UnsupportedCase(f"uniform rotation M={M} matches no tabulated family")


def _axial_intervals(params: GyrostatParams, axis: int):
    """Spectral and CQ sets for the axial rotation ``M = q e_axis`` (mu_axis > 0).

    Each set is a list of ``(lo, hi, lo_closed, hi_closed)`` pieces; the
    spectral entry is None where no interval is tabulated.
    """
    I1, I2, I3 = params.inertia
    mu = params.mu[axis - 1]
    if axis == 1:
        a12 = -I1 * mu / (I1 - I2)
        a13 = -I1 * mu / (I1 - I3)
        spectral = [(None, a12, False, True), (a13, None, True, False)]
        cq = [(None, a12, False, False), (a13, None, True, False)]
    elif axis == 2:
        lo = -I2 * mu / (I2 - I3)
        hi = I2 * mu / (I1 - I2)
        spectral = None
        cq = [(lo, hi, True, True)]
    else:
        c13 = I3 * mu / (I1 - I3)
        c23 = I3 * mu / (I2 - I3)
        spectral = [(None, c13, False, True), (c23, None, True, False)]
        cq = [(None, c13, False, True), (c23, None, False, False)]
    return spectral, cq


def _in_set(q: float, pieces) -> bool:
    return any(_in(q, *p) for p in pieces)


def _canonical_M(params: GyrostatParams, M):
    axis = params.require_axis()
    M = np.asarray(M, float)
    if params.mu[axis - 1] < 0:
        return params.with_mu(-params.mu_vec), -M
    return params, M


def _numeric_spectral(params: GyrostatParams, M) -> Verdict:
    L = torque_free_jacobian(params, M)
    lams = linalg.eigenvalues(L)
    if np.all(lams.real <= linalg.spectral_tolerance(L)):
        return Verdict.stable("numeric")
    return Verdict.unstable("numeric")


def tf_spectral(params: GyrostatParams, M_e) -> Verdict:
    """Spectral stability of the uniform rotation ``M_e``.

    Tabulated intervals are used where they exist (tag ``table``); other
    rotations fall back to the eigenvalues of the torque-free
    linearization (tag ``numeric``).
    """
    params, M = _canonical_M(params, M_e)
    axis = params.require_axis()
    kind, val, b = _tf_kind(params, M)
    spectral, _ = _axial_intervals(params, axis)
    if kind == "axial" and spectral is not None:
        ok = _in_set(val, spectral)
        return Verdict.stable("table") if ok else Verdict.unstable("table")
    if kind == "beta" and b == 1 and axis in (1, 3):
        return Verdict.unstable("table")
    return _numeric_spectral(params, M)


def tf_cq(params: GyrostatParams, M_e) -> Verdict:
    """Stability of a uniform rotation with respect to ``{H, F}``."""
    params, M = _canonical_M(params, M_e)
    axis = params.require_axis()
    kind, val, b = _tf_kind(params, M)
    if kind == "zero":
        return Verdict.stable("table: rest state")
    if kind == "axial":
        _, cq = _axial_intervals(params, axis)
        return Verdict.stable("table") if _in_set(val, cq) else Verdict.unstable("table")
    # tilted rotations: the one leaning toward the intermediate axis is unstable
    if b == 1:
        return Verdict.unstable("table: spectrally unstable")
    return Verdict.stable("table")


def tf_lyapunov(params: GyrostatParams, M_e) -> Verdict:
    """Lyapunov stability of a uniform rotation; coincides with :func:`tf_cq`."""
    v = tf_cq(params, M_e)
    return Verdict(v.value, "lyapunov<=>cq")


def isolation_test(params: GyrostatParams, M0, gamma0) -> Verdict:
    """Is ``gamma0`` an isolated solution of ``|g| = |gamma0|, (M0+mu).g = (M0+mu).gamma0``?

    Stable means yes (isolated), Unstable means no.
    """
    n = np.asarray(M0, float) + params.mu_vec
    g0 = np.asarray(gamma0, float)
    ng = np.linalg.norm(g0)
    nn = np.linalg.norm(n)
    if ng == 0.0:
        return Verdict.stable("isolated: unique solution")
    if nn <= ENDPOINT_RTOL * (1.0 + np.linalg.norm(params.mu_vec)):
        return Verdict.unstable("not isolated: whole sphere")
    if np.linalg.norm(linalg.cross(n, g0)) <= COLINEAR_RTOL * nn * ng:
        return Verdict.stable("isolated: tangent plane")
    return Verdict.unstable("not isolated: circle")


# --------------------------------------------------------------------------
# classifiers for the full system


def is_undecided_family(params: GyrostatParams, eq) -> bool:
    """The rotations ``M = -mu`` with ``gamma = alpha e_axis``, ``alpha != 0``."""
    params, ceq = _canonical(params, eq)
    if ceq.family is not Family.E12:
        return False
    mu = params.mu[ceq.axis - 1]
    return _is_zero(ceq.params["q"] + mu, mu) and not _is_zero(ceq.params["alpha"])


def cq_stability(params: GyrostatParams, eq) -> Verdict:
    """Stability with respect to ``{H, C1, C2, F}``, from the per-axis theorems."""
    params, ceq = _canonical(params, eq)
    axis = ceq.axis
    k = axis - 1
    mu = params.mu[k]
    fam = ceq.family
    if fam is Family.E0:
        g = ceq.gamma
        if all(_is_zero(g[i]) for i in range(3) if i != k):
            return Verdict.stable("cq: gamma along mu")
        return Verdict.unstable("cq: gamma off the mu axis")
    if fam is Family.E12:
        q, alpha = ceq.params["q"], ceq.params["alpha"]
        _, cq = _axial_intervals(params, axis)
        if _is_zero(q + mu, mu):
            if _is_zero(alpha):
                return Verdict.stable("cq: M=-mu, gamma=0")
            return Verdict.unstable("cq: M=-mu, gamma!=0")
        if _in_set(q, cq):
            return Verdict.stable("cq: q in stable set")
        return Verdict.unstable("cq: q outside stable set")
    if _beta_index(fam) == 1:
        return Verdict.unstable("cq: tilted toward intermediate axis")
    return Verdict.stable("cq: tilted rotation")


def cq_stability_pipeline(params: GyrostatParams, eq) -> Verdict:
    """The same verdict derived from the generic skew-product machinery."""
    params, ceq = _canonical(params, eq)
    M, g = ceq.M, ceq.gamma
    return skewprod.cq_verdict(
        tf_cq(params, M), tf_lyapunov(params, M), isolation_test(params, M, g)
    )


def lyapunov_stability(params: GyrostatParams, eq) -> Verdict:
    """Lyapunov stability; Undecided exactly on the ``M = -mu, gamma != 0`` family."""
    if is_undecided_family(params, eq):
        return Verdict.undecided("undecided family: M=-mu, gamma on axis")
    v = cq_stability(params, eq)
    return Verdict(v.value, "lyapunov<=>cq")


def m_stability(params: GyrostatParams, eq) -> Verdict:
    params, ceq = _canonical(params, eq)
    v = tf_lyapunov(params, ceq.M)
    return Verdict(v.value, "M-partial = reduced lyapunov")


def gamma_stability(params: GyrostatParams, eq) -> Verdict:
    """gamma-stability from the per-axis theorems, Undecided where they are silent."""
    params, ceq = _canonical(params, eq)
    axis = ceq.axis
    k = axis - 1
    mu = params.mu[k]
    fam = ceq.family
    if fam is Family.E0:
        g = ceq.gamma
        if all(_is_zero(g[i]) for i in range(3) if i != k):
            return Verdict.stable("gamma: gamma along mu")
        return Verdict.unstable("gamma: gamma off the mu axis")
    if fam is Family.E12:
        q, alpha = ceq.params["q"], ceq.params["alpha"]
        _, cq = _axial_intervals(params, axis)
        if _is_zero(alpha):
            return Verdict.stable("gamma: gamma=0, C1 bound")
        if _is_zero(q + mu, mu):
            return Verdict.undecided("gamma: no result for M=-mu, gamma!=0")
        if _in_set(q, cq):
            return Verdict.stable("gamma: lyapunov stable")
        return Verdict.unstable("gamma: invariant set instability")
    b = _beta_index(fam)
    if b == 1:
        if _is_zero(ceq.params["theta"]):
            return Verdict.stable("gamma: gamma=0, C1 bound")
        return Verdict.unstable("gamma: invariant set instability")
    return Verdict.stable("gamma: lyapunov stable")


def _m_invariant_s_jacobians(delta: float):
    """Jacobian blocks of ``s(M, g) = M - delta g + mu``."""
    return np.eye(3), -delta * np.eye(3)


def gamma_stability_pipeline(params: GyrostatParams, eq) -> Verdict:
    """gamma-stability assembled from the generic partial-stability results.

    Order: an equilibrium with ``gamma = 0`` is gamma-stable because
    ``C1 = |gamma|^2 / 2`` is conserved; otherwise the partial-stability
    relations decide, and the invariant set ``M + mu = delta gamma`` is
    tried when they are silent.
    """
    params, ceq = _canonical(params, eq)
    M, g = ceq.M, ceq.gamma
    if np.linalg.norm(g) <= ENDPOINT_RTOL:
        return Verdict.stable("C1 bound")
    reduced = tf_lyapunov(params, M)
    full = lyapunov_stability(params, ceq)
    _, z = skewprod.partial_verdicts(reduced, full)
    if not z.is_undecided:
        return z
    in_M, delta = invariant_set_membership(params, ceq.state)
    if in_M and delta is not None:
        Sy, Sz = _m_invariant_s_jacobians(delta)
        _, z2 = skewprod.invariant_set_instability(Sy, Sz, reduced)
        return z2
    return z


def analyze(params: GyrostatParams, eq) -> StabilityReport:
    """Full stability report for an equilibrium (or raw equilibrium state)."""
    x = eq.state if isinstance(eq, EquilibriumState) else np.asarray(eq, float)
    params.require_axis()
    ok, _ = classify_state(params, x, tol=1e-9)
    if not ok:
        raise NotAnEquilibrium(f"state {x} is not an equilibrium")
    return StabilityReport(
        spectral=tf_spectral(params, x[:3]),
        cq=cq_stability(params, x),
        lyapunov=lyapunov_stability(params, x),
        y_partial=m_stability(params, x),
        z_partial=gamma_stability(params, x),
        spectrum=tuple(_factored_spectrum(params, x)),
    )


# --------------------------------------------------------------------------
# exact solutions and the invariant set


def _axis_rotation(axis_index: int, angle):
    """Rotation matrices about a coordinate axis; ``angle`` may be an array."""
    angle = np.asarray(angle, float)
    c, s = np.cos(angle), np.sin(angle)
    R = np.zeros(angle.shape + (3, 3))
    i, j = (axis_index + 1) % 3, (axis_index + 2) % 3
    R[..., axis_index, axis_index] = 1.0
    R[..., i, i] = c
    R[..., j, j] = c
    R[..., i, j] = -s
    R[..., j, i] = s
    return R


def closed_form_gamma(params: GyrostatParams, q: float, gamma0, t):
    """Exact solution from ``M = q e_axis`` (axis of ``mu``), any ``gamma0``.

    ``M`` stays fixed while ``gamma`` turns about the axis at rate
    ``q / I_axis``.  Returns a state (or an array of states when ``t`` is
    an array).
    """
    axis = params.axis
    if axis is None:
        raise UnsupportedInitialCondition("mu must be axis aligned to place M on its axis")
    k = axis - 1
    rate = q / params.inertia[k]
    t_arr = np.asarray(t, float)
    R = _axis_rotation(k, -rate * t_arr)
    g = R @ np.asarray(gamma0, float)
    M = np.zeros(3)
    M[k] = q
    if t_arr.ndim == 0:
        return make_state(M, g)
    return np.hstack([np.broadcast_to(M, g.shape), g])


def fiber_ratio(params: GyrostatParams, x) -> float:
    """``(M + mu) . gamma / (gamma . gamma)``, constant along the flow on the invariant set."""
    M, g = split_state(x)
    return float((M + params.mu_vec) @ g) / float(g @ g)


def invariant_set_membership(params: GyrostatParams, x, tol: float = COLINEAR_RTOL):
    """Is ``x`` in the set where ``M + mu`` and ``gamma`` are linearly dependent?

    The point ``(-mu, 0)`` is excluded.  Returns ``(in_set, delta)`` where
    ``M + mu = delta gamma`` and ``delta`` is None when ``gamma = 0``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M, g = split_state(x)
    n = M + params.mu_vec
    nn, ng = np.linalg.norm(n), np.linalg.norm(g)
    if nn == 0.0 and ng == 0.0:
        return False, None
    colinear = np.linalg.norm(linalg.cross(n, g)) <= tol * nn * ng
    if not colinear:
        return False, None
    if ng == 0.0:
        return True, None
    return True, fiber_ratio(params, x)


def gradient_rank(params: GyrostatParams, x, tol: float = COLINEAR_RTOL) -> int:
    """Rank of the stacked gradients of ``(C1, C2, F)``."""
    G = conserved_gradients(params, x)[1:]
    return linalg.numerical_rank(G, tol)


def as_skew_product(params: GyrostatParams) -> skewprod.SkewProductSystem:
    """The gyrostat as ``y = M`` (reduced) and ``z = gamma`` (fiber)."""
    I = params.inertia
    mu = params.mu_vec
    Iinv = np.diag(1.0 / I)
    return skewprod.SkewProductSystem(
        dim_y=3,
        dim_z=3,
        g=lambda M: torque_free_rhs(params, M),
        h=lambda M, g: linalg.cross(g, M / I),
        reduced_conserved=[
            lambda M: 0.5 * float(M @ (M / I)),
            lambda M: 0.5 * float((M + mu) @ (M + mu)),
        ],
        joint_conserved=[
            lambda M, g: 0.5 * float(g @ g),
            lambda M, g: float((M + mu) @ g),
        ],
        reduced_gradients=[lambda M: M / I, lambda M: M + mu],
        joint_gradients=[
            lambda M, g: np.concatenate([np.zeros(3), g]),
            lambda M, g: np.concatenate([g, M + mu]),
        ],
        jac_g_y=lambda M: torque_free_jacobian(params, M),
        jac_h_y=lambda M, g: hat(g) @ Iinv,
        jac_h_z=lambda M, g: -hat(M / I),
        name="zhukovski-gyrostat",
    )
