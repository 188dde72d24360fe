"""Fixed-step RK4 integration and empirical stability experiments.

The gyrostat field runs through a compiled kernel when the extension is
built, and through a vectorized numpy kernel otherwise.  Set
``GYROSTAB_PURE_PYTHON=1`` to force the fallback.  Arbitrary callables
go through a plain Python RK4 loop.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels_py
from .gyrostat import EquilibriumState, GyrostatParams, conserved, rhs, rhs_general
from .skewprod import Verdict

log = logging.getLogger(__name__)

if os.environ.get("GYROSTAB_PURE_PYTHON"):
    _kernels = _kernels_py
else:
    try:
        from . import _kernels
    except ImportError:  # extension not built
        _kernels = _kernels_py

BACKEND = "compiled" if _kernels is not _kernels_py else "python"
BLOWUP = 1e12

__all__ = [
    "BACKEND",
    "BlowUp",
    "GyrostatField",
    "gyrostat_field",
    "Trajectory",
    "integrate",
    "integrate_batch",
    "conserved_series",
    "drift",
    "relative_drift",
    "PerturbationResult",
    "perturb_experiment",
    "empirical_verdict",
    "uniform_sphere",
]


class BlowUp(RuntimeError):
    """The state norm exceeded the blow-up bound; carries the truncated trajectory."""

    def __init__(self, traj: "Trajectory"):
        super().__init__(f"state norm exceeded {BLOWUP:g} at t={traj.times[-1]:g}")
        self.trajectory = traj


@dataclass(frozen=True)
class GyrostatField:
    """Gyrostat vector field that the compiled kernel recognizes."""

    params: GyrostatParams
    general: bool = False

    def __call__(self, x):
        return rhs_general(self.params, x) if self.general else rhs(self.params, x)

    def kernel_args(self):
        p = self.params
        m = p.m if self.general else 0.0
        return (
            np.ascontiguousarray(p.inertia),
            np.ascontiguousarray(p.mu_vec),
            float(m),
            np.ascontiguousarray(p.r_G_vec),
        )


def gyrostat_field(params: GyrostatParams, general: bool = False) -> GyrostatField:
    return GyrostatField(params, general)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    params: GyrostatParams | None = None
    dt: float = 0.0
    blowup: bool = False

    def __len__(self) -> int:
        return len(self.times)

    @property
    def M(self) -> np.ndarray:
        return self.states[:, :3]

    @property
    def gamma(self) -> np.ndarray:
        return self.states[:, 3:]


def _nsteps(T: float, dt: float) -> int:
    if dt <= 0 or T <= 0:
        raise ValueError("T and dt must be positive")
    n = int(round(T / dt))
    if n < 1:
        raise ValueError("T must be at least one step")
    return n


def _rk4_python(f: Callable, x0, h: float, nsteps: int, stride: int):
    x = np.array(x0, dtype=float)
    out = [x.copy()]
    for n in range(1, nsteps + 1):
        k1 = np.asarray(f(x), float)
        k2 = np.asarray(f(x + 0.5 * h * k1), float)
        k3 = np.asarray(f(x + 0.5 * h * k2), float)
        k4 = np.asarray(f(x + h * k3), float)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        nrm = np.linalg.norm(x)
        if not np.isfinite(nrm) or nrm > BLOWUP:
            return np.array(out), True
        if n % stride == 0:
            out.append(x.copy())
    return np.array(out), False


def integrate(
    field,
    x0,
    T: float,
    dt: float,
    *,
    stride: int = 1,
    backward: bool = False,
    raise_on_blowup: bool = False,
) -> Trajectory:
    """Classic fixed-step RK4 from ``x0`` over ``[0, T]``.

    ``field`` is a :class:`GyrostatField` (fast path) or any callable
    ``x -> dx/dt``.  ``backward=True`` integrates toward ``-T``; the
    returned times are then ``0, -dt, -2 dt, ...``.  States are saved
    every ``stride`` steps.  On blow-up the trajectory is truncated and
    flagged (or :class:`BlowUp` is raised).
    """
    nsteps = _nsteps(T, dt)
    h = -dt if backward else dt
    x0 = np.asarray(x0, dtype=float)
    params = None
    if isinstance(field, GyrostatField):
        params = field.params
        states, nvalid = _kernels.rk4_gyrostat(
            np.ascontiguousarray(x0.reshape(1, -1)), *field.kernel_args(), h, nsteps, stride
        )
        states = states[0, : nvalid[0]]
        blown = nvalid[0] < nsteps // stride + 1
    else:
        states, blown = _rk4_python(field, x0, h, nsteps, stride)
    times = h * stride * np.arange(len(states))
    traj = Trajectory(times, states, params, dt, bool(blown))
    if blown:
        log.warning("integration blew up at t=%g", times[-1])
        if raise_on_blowup:
            raise BlowUp(traj)
    return traj


def integrate_batch(field: GyrostatField, x0s, T: float, dt: float, *, stride: int = 1):
    """Integrate many initial states at once; returns ``(times, states, nvalid)``."""
    nsteps = _nsteps(T, dt)
    x0s = np.ascontiguousarray(np.atleast_2d(np.asarray(x0s, float)))
    states, nvalid = _kernels.rk4_gyrostat(x0s, *field.kernel_args(), dt, nsteps, stride)
    times = dt * stride * np.arange(states.shape[1])
    return times, states, nvalid


def conserved_series(params: GyrostatParams, states) -> np.ndarray:
    """``(H, C1, C2, F)`` along an array of states, shape ``(n, 4)``."""
    X = np.atleast_2d(np.asarray(states, float))
    M, g = X[:, :3], X[:, 3:]
    n = M + params.mu_vec
    H = 0.5 * np.einsum("ij,ij->i", M, M / params.inertia)
    C1 = 0.5 * np.einsum("ij,ij->i", g, g)
    C2 = np.einsum("ij,ij->i", n, g)
    F = 0.5 * np.einsum("ij,ij->i", n, n)
    return np.stack([H, C1, C2, F], axis=1)


def _values(traj: Trajectory, fns) -> np.ndarray:
    if fns is None:
        if traj.params is None:
            raise ValueError("pass conserved functions for a trajectory without params")
        return conserved_series(traj.params, traj.states)
    return np.array([[float(F(x)) for F in fns] for x in traj.states])


def drift(traj: Trajectory, fns: Sequence[Callable] | None = None) -> np.ndarray:
    """Per-quantity ``max_t |F(x(t)) - F(x(0))|``.

    With ``fns=None`` the gyrostat quantities ``H, C1, C2, F`` are used.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    vals = _values(traj, fns)
    return np.max(np.abs(vals - vals[0]), axis=0)


def relative_drift(traj: Trajectory, fns: Sequence[Callable] | None = None, floor: float = 1e-12):
    """:func:`drift` divided by ``max(|F(x(0))|, floor)``."""
    vals = _values(traj, fns)
    return np.max(np.abs(vals - vals[0]), axis=0) / np.maximum(np.abs(vals[0]), floor)


# --------------------------------------------------------------------------
# perturbation experiments


def uniform_sphere(rng: np.random.Generator, n: int, dim: int = 6) -> np.ndarray:
    """``n`` directions uniform on the unit sphere in ``R^dim``."""
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass
class PerturbationResult:
    delta0: float
    T: float
    dt: float
    n_samples: int
    seed: int
    escape_threshold: float
    per_sample: np.ndarray = field(repr=False)  # (n, 3): M, gamma, full sup-deviations
    escaped: np.ndarray = field(repr=False)
    blown: np.ndarray = field(repr=False)

    @property
    def max_dev_M(self) -> float:
        return float(self.per_sample[:, 0].max()) if self.n_samples else 0.0

    @property
    def max_dev_gamma(self) -> float:
        return float(self.per_sample[:, 1].max()) if self.n_samples else 0.0

    @property
    def max_dev_full(self) -> float:
        return float(self.per_sample[:, 2].max()) if self.n_samples else 0.0

    def to_dict(self) -> dict:
        return {
            "delta0": self.delta0,
            "T": self.T,
            "dt": self.dt,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "escape_threshold": self.escape_threshold,
            "max_dev_M": self.max_dev_M,
            "max_dev_gamma": self.max_dev_gamma,
            "max_dev_full": self.max_dev_full,
            "samples": [
                {
                    "dev_M": float(r[0]),
                    "dev_gamma": float(r[1]),
                    "dev_full": float(r[2]),
                    "escaped": bool(e),
                }
                for r, e in zip(self.per_sample, self.escaped)
            ],
        }


def perturb_experiment(
    params: GyrostatParams,
    eq,
    delta0: float,
    n_samples: int,
    T: float = 100.0,
    dt: float = 1e-3,
    seed: int = 0,
    escape_threshold: float | None = None,
    workers: int = 1,
) -> PerturbationResult:
    """Integrate ``n_samples`` starts at distance ``delta0`` from ``eq``.

    Directions are uniform on the 5-sphere in state space.  Samples are
    split into contiguous chunks for ``workers`` threads and merged back in
    sample order, so the result does not depend on scheduling.
    """
    if delta0 < 0:
        raise ValueError("delta0 must be nonnegative")
    xe = np.asarray(eq.state if isinstance(eq, EquilibriumState) else eq, float)
    if escape_threshold is None:
        escape_threshold = 1e3 * delta0
    rng = np.random.default_rng(seed)
    x0s = np.ascontiguousarray(xe + delta0 * uniform_sphere(rng, n_samples))
    nsteps = _nsteps(T, dt)
    args = gyrostat_field(params).kernel_args()

    def run(chunk):
        return _kernels.rk4_max_deviation(
            np.ascontiguousarray(chunk), *args, dt, nsteps, np.ascontiguousarray(xe)
        )

    if workers > 1 and n_samples > 1:
        chunks = np.array_split(x0s, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
        dev = np.concatenate([p[0] for p in parts])
        blown = np.concatenate([p[1] for p in parts])
    else:
        dev, blown = run(x0s)
    escaped = (dev[:, 2] > escape_threshold) | blown
    return PerturbationResult(
        float(delta0), float(T), float(dt), int(n_samples), int(seed),
        float(escape_threshold), dev, escaped, blown,
    )


def empirical_verdict(result: PerturbationResult, escape_threshold: float | None = None) -> Verdict:
    """Unstable if any sample escaped; otherwise Undecided tagged consistent-with-stable.

    A finite-horizon experiment never proves stability, so it never
    returns Stable.
    """
    thr = result.escape_threshold if escape_threshold is None else escape_threshold
    if thr <= result.delta0:
        raise ValueError("escape threshold must exceed delta0")
    if np.any(result.per_sample[:, 2] > thr) or np.any(result.blown):
        return Verdict.unstable("empirical: escaped")
    return Verdict.undecided("consistent-with-stable")
