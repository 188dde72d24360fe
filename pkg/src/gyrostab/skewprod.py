"""Skew-product systems ``y' = g(y), z' = h(y, z)`` and their stability logic.

The reduced system ``y' = g(y)`` evolves on its own, so the verdicts for
the full system are assembled from verdicts about the reduced one plus a
few extra ingredients (isolation of the fiber solution, an invariant set).
Every verdict is three-valued; ``UNDECIDED`` marks the gaps where no
theorem applies.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import linalg

__all__ = [
    "Stability",
    "Verdict",
    "StabilityReport",
    "SkewProductSystem",
    "NotAnEquilibrium",
    "InconsistentInput",
    "EQUILIBRIUM_TOL",
    "check_conservation",
    "spectral_verdict",
    "cq_verdict",
    "partial_verdicts",
    "invariant_set_instability",
]

#: Absolute bound on ``||g(y_e)|| + ||h(y_e, z_e)||`` for an equilibrium.
EQUILIBRIUM_TOL = 1e-10
FD_STEP = 1e-6


class NotAnEquilibrium(ValueError):
    pass


class InconsistentInput(ValueError):
    pass


class Stability(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    UNDECIDED = "Undecided"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Verdict:
    """A three-valued stability outcome with the reason that produced it."""

    value: Stability
    justification: str

    def __post_init__(self):
        object.__setattr__(self, "value", Stability(self.value))
        if not self.justification:
            raise ValueError("a verdict needs a justification tag")

    @classmethod
    def stable(cls, why: str) -> "Verdict":
        return cls(Stability.STABLE, why)

    @classmethod
    def unstable(cls, why: str) -> "Verdict":
        return cls(Stability.UNSTABLE, why)

    @classmethod
    def undecided(cls, why: str) -> "Verdict":
        return cls(Stability.UNDECIDED, why)

    @property
    def is_stable(self) -> bool:
        return self.value is Stability.STABLE

    @property
    def is_unstable(self) -> bool:
        return self.value is Stability.UNSTABLE

    @property
    def is_undecided(self) -> bool:
        return self.value is Stability.UNDECIDED

    def to_dict(self) -> dict:
        return {"value": self.value.value, "justification": self.justification}

    @classmethod
    def from_dict(cls, d: dict) -> "Verdict":
        return cls(Stability(d["value"]), d["justification"])


@dataclass(frozen=True)
class StabilityReport:
    spectral: Verdict
    cq: Verdict
    lyapunov: Verdict
    y_partial: Verdict
    z_partial: Verdict
    spectrum: tuple = ()

    def violations(self, reduced_lyapunov: Verdict | None = None) -> list[str]:
        """Names of the consistency rules this report breaks (empty if none)."""
        out = []
        if self.cq.is_stable and not self.lyapunov.is_stable:
            out.append("cq=Stable but lyapunov!=Stable")
        if self.spectral.is_unstable and not self.lyapunov.is_unstable:
            out.append("spectral=Unstable but lyapunov!=Unstable")
        if self.lyapunov.is_stable and not (
            self.y_partial.is_stable and self.z_partial.is_stable
        ):
            out.append("lyapunov=Stable but a partial verdict is not Stable")
        if self.lyapunov.is_stable and self.spectral.is_unstable:
            out.append("lyapunov=Stable but spectral=Unstable")
        if reduced_lyapunov is not None and self.y_partial.value != reduced_lyapunov.value:
            out.append("y_partial differs from the reduced Lyapunov verdict")
        return out

    def to_dict(self) -> dict:
        return {
            "spectral": self.spectral.to_dict(),
            "cq": self.cq.to_dict(),
            "lyapunov": self.lyapunov.to_dict(),
            "y_partial": self.y_partial.to_dict(),
            "z_partial": self.z_partial.to_dict(),
            "spectrum": [[float(np.real(l)), float(np.imag(l))] for l in self.spectrum],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StabilityReport":
        return cls(
            spectral=Verdict.from_dict(d["spectral"]),
            cq=Verdict.from_dict(d["cq"]),
            lyapunov=Verdict.from_dict(d["lyapunov"]),
            y_partial=Verdict.from_dict(d["y_partial"]),
            z_partial=Verdict.from_dict(d["z_partial"]),
            spectrum=tuple(complex(re, im) for re, im in d.get("spectrum", [])),
        )


def _fd_jacobian(f: Callable, x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x), dtype=float)
    J = np.empty((f0.size, x.size))
    for k in range(x.size):
        dx = np.zeros_like(x)
        dx[k] = step
        J[:, k] = (np.asarray(f(x + dx)) - np.asarray(f(x - dx))) / (2 * step)
    return J


def _fd_gradient(F: Callable, x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    return _fd_jacobian(lambda u: np.atleast_1d(F(u)), x, step)[0]


@dataclass(frozen=True)
class SkewProductSystem:
    """Container for ``y' = g(y)``, ``z' = h(y, z)`` and its first integrals.

    ``reduced_conserved`` hold functions of ``y`` only; ``joint_conserved``
    take ``(y, z)``.  Gradients may be supplied as parallel lists of
    callables (same signatures, returning arrays); otherwise central
    differences are used.  The optional ``jac_*`` callables return the
    analytic Jacobian blocks.
    """

    dim_y: int
    dim_z: int
    g: Callable
    h: Callable
    reduced_conserved: Sequence[Callable]
    joint_conserved: Sequence[Callable]
    reduced_gradients: Sequence[Callable] | None = None
    joint_gradients: Sequence[Callable] | None = None
    jac_g_y: Callable | None = None
    jac_h_y: Callable | None = None
    jac_h_z: Callable | None = None
    name: str = field(default="skew-product")

    def __post_init__(self):
        if len(self.reduced_conserved) < 1 or len(self.joint_conserved) < 1:
            raise ValueError("need at least one reduced and one joint conserved quantity")

    @property
    def dim(self) -> int:
        return self.dim_y + self.dim_z

    def split(self, x):
        x = np.asarray(x, dtype=float)
        return x[: self.dim_y], x[self.dim_y :]

    def field(self, x) -> np.ndarray:
        y, z = self.split(x)
        return np.concatenate([np.asarray(self.g(y), float), np.asarray(self.h(y, z), float)])

    def conserved_values(self, x) -> np.ndarray:
        y, z = self.split(x)
        vals = [F(y) for F in self.reduced_conserved] + [F(y, z) for F in self.joint_conserved]
        return np.array(vals, dtype=float)

    def conserved_gradients(self, x) -> list[np.ndarray]:
        """Gradients of all conserved quantities with respect to ``(y, z)``."""
        x = np.asarray(x, dtype=float)
        y, z = self.split(x)
        grads = []
        for i, F in enumerate(self.reduced_conserved):
            if self.reduced_gradients is not None:
                gy = np.asarray(self.reduced_gradients[i](y), float)
            else:
                gy = _fd_gradient(F, y)
            grads.append(np.concatenate([gy, np.zeros(self.dim_z)]))
        for i, F in enumerate(self.joint_conserved):
            if self.joint_gradients is not None:
                grads.append(np.asarray(self.joint_gradients[i](y, z), float))
            else:
                grads.append(_fd_gradient(lambda u: F(u[: self.dim_y], u[self.dim_y :]), x))
        return grads

    def jacobian_blocks(self, y, z):
        """``(dg/dy, dh/dy, dh/dz)`` at ``(y, z)``, analytic when available."""
        y = np.asarray(y, float)
        z = np.asarray(z, float)
        A = self.jac_g_y(y) if self.jac_g_y else _fd_jacobian(self.g, y)
        B = self.jac_h_y(y, z) if self.jac_h_y else _fd_jacobian(lambda u: self.h(u, z), y)
        C = self.jac_h_z(y, z) if self.jac_h_z else _fd_jacobian(lambda u: self.h(y, u), z)
        return np.asarray(A, float), np.asarray(B, float), np.asarray(C, float)

    def jacobian(self, y, z) -> np.ndarray:
        A, B, C = self.jacobian_blocks(y, z)
        return np.block([[A, np.zeros((self.dim_y, self.dim_z))], [B, C]])


def check_conservation(sys: SkewProductSystem, samples) -> float:
    """Largest ``|dF/dt| = |grad F . f|`` over the samples and all first integrals."""
    worst = 0.0
    for x in samples:
        f = sys.field(x)
        for grad in sys.conserved_gradients(x):
            worst = max(worst, abs(float(grad @ f)))
    return worst


def spectral_verdict(sys: SkewProductSystem, y_e, z_e) -> tuple[Verdict, np.ndarray]:
    """Spectral stability from the two diagonal blocks of the linearization.

    The Jacobian is block lower triangular, so its spectrum is the union
    of the spectra of ``dg/dy`` and ``dh/dz``.
    """
    y_e = np.asarray(y_e, float)
    z_e = np.asarray(z_e, float)
    resid = np.linalg.norm(sys.g(y_e)) + np.linalg.norm(sys.h(y_e, z_e))
    if resid > EQUILIBRIUM_TOL:
        raise NotAnEquilibrium(f"field residual {resid:.3e} exceeds {EQUILIBRIUM_TOL:g}")
    A, _, C = sys.jacobian_blocks(y_e, z_e)
    spectrum = linalg.sort_spectrum(
        np.concatenate([linalg.eigenvalues(A), linalg.eigenvalues(C)])
    )
    tol = max(linalg.spectral_tolerance(A), linalg.spectral_tolerance(C))
    if np.all(spectrum.real <= tol):
        return Verdict.stable("spectral"), spectrum
    return Verdict.unstable("spectral"), spectrum


def cq_verdict(reduced_cq: Verdict, reduced_lyapunov: Verdict, isolation: Verdict) -> Verdict:
    """Stability of the full equilibrium with respect to all conserved quantities.

    ``isolation`` is Stable when the fiber point ``z_e`` is an isolated
    solution of the joint level-set equations at ``y = y_e``, Unstable when
    it is not.
    """
    if reduced_cq.is_stable and reduced_lyapunov.is_unstable:
        raise InconsistentInput(
            "reduced equilibrium cannot be CQ-stable and Lyapunov unstable"
        )
    if reduced_lyapunov.is_unstable:
        return Verdict.unstable("reduced-unstable")
    if reduced_cq.is_stable:
        if isolation.is_stable:
            return Verdict.stable("cq-lift: isolated")
        if isolation.is_unstable:
            return Verdict.unstable("cq-lift: not isolated")
        return Verdict.undecided("isolation-unknown")
    if reduced_cq.is_unstable and reduced_lyapunov.is_stable:
        return Verdict.undecided("reduced-cq-unstable: silent")
    return Verdict.undecided("reduced-verdict-unknown")


def partial_verdicts(reduced_lyapunov: Verdict, full_lyapunov: Verdict) -> tuple[Verdict, Verdict]:
    """``(y_partial, z_partial)`` from the reduced and full Lyapunov verdicts."""
    y_partial = Verdict(reduced_lyapunov.value, "partial: y follows reduced")
    if full_lyapunov.is_stable:
        return y_partial, Verdict.stable("partial: full stable")
    if reduced_lyapunov.is_stable:
        return y_partial, Verdict(full_lyapunov.value, "partial: z follows full")
    return y_partial, Verdict.undecided("partial: z silent")


def invariant_set_instability(
    s_jacobian_y, s_jacobian_z, reduced_lyapunov: Verdict, det_rtol: float = 1e-10
) -> tuple[Verdict, Verdict]:
    """Partial instability for an equilibrium on an invariant set ``{s = 0}``.

    Applies when both Jacobian blocks of ``s`` are invertible and the
    reduced equilibrium is Lyapunov unstable; otherwise both outputs are
    Undecided.
    """
    Sy = np.atleast_2d(np.asarray(s_jacobian_y, float))
    Sz = np.atleast_2d(np.asarray(s_jacobian_z, float))

    def invertible(S):
        scale = max(np.linalg.norm(S, 2), 1.0) ** S.shape[0]
        return abs(np.linalg.det(S)) > det_rtol * scale

    if not reduced_lyapunov.is_unstable:
        return Verdict.undecided("invariant-set: reduced not unstable"), Verdict.undecided(
            "invariant-set: reduced not unstable"
        )
    if not (invertible(Sy) and invertible(Sz)):
        return Verdict.undecided("invariant-set: singular ds"), Verdict.undecided(
            "invariant-set: singular ds"
        )
    return Verdict.unstable("invariant-set instability"), Verdict.unstable("invariant-set instability")
