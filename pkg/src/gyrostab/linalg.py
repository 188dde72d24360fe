"""Small dense linear algebra for the 3- and 6-dimensional problems.

Everything here works on plain ``numpy`` arrays.  Characteristic
polynomials are expanded directly (Faddeev-LeVerrier) so that they stay
independent of the eigenvalue routine, which goes through LAPACK.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "NonConvergence",
    "hat",
    "vee",
    "cross",
    "char_poly",
    "eigenvalues",
    "sort_spectrum",
    "spectra_match",
    "is_conjugate_closed",
    "spectral_tolerance",
    "numerical_rank",
]

#: Residual bound used to certify each computed eigenpair, relative to ``||A||``.
EIG_RESIDUAL_RTOL = 1e-8


class NonConvergence(ArithmeticError):
    """Raised when the eigenvalue iteration fails or cannot be certified."""


def hat(v) -> np.ndarray:
    """Skew-symmetric matrix of ``v`` so that ``hat(v) @ w == cross(v, w)``."""
    p, q, r = np.asarray(v, dtype=float)
    return np.array([[0.0, -r, q], [r, 0.0, -p], [-q, p, 0.0]])


def vee(S) -> np.ndarray:
    """Inverse of :func:`hat` (reads the three independent entries)."""
    S = np.asarray(S, dtype=float)
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def cross(u, v) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.array(
        [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ]
    )


def char_poly(A) -> np.ndarray:
    """Coefficients of ``det(t I - A)``, highest degree first.

    The leading coefficient is always 1.  Multiply by ``(-1)**n`` to get the
    ``det(A - t I)`` convention.  Computed with the Faddeev-LeVerrier
    recursion, which is exact in rational arithmetic and well behaved for
    the small matrices used here.
    """
    A = np.asarray(A, dtype=float)
    n, m = A.shape
    if n != m:
        raise ValueError(f"square matrix required, got shape {A.shape}")
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    Mk = np.zeros_like(A)
    eye = np.eye(n)
    for k in range(1, n + 1):
        Mk = A @ Mk + coeffs[k - 1] * eye
        coeffs[k] = -np.trace(A @ Mk) / k
    return coeffs


def sort_spectrum(lams) -> np.ndarray:
    """Lexicographic ``(re, im)`` ordering."""
    lams = np.asarray(lams, dtype=complex)
    order = np.lexsort((lams.imag, lams.real))
    return lams[order]


def eigenvalues(A, certify: bool = True) -> np.ndarray:
    """Complex spectrum of a real square matrix, sorted by ``(re, im)``.

    Parameters
    ----------
    A : array_like, shape (n, n)
    certify : bool
        Check ``||A v - lam v|| <= 1e-8 ||A||`` for a unit eigenvector of
        every eigenvalue.  Defective eigenvalues (Jordan blocks) still pass
        because LAPACK returns a valid, if nearly parallel, eigenvector.

    Raises
    ------
    NonConvergence
        If the QR iteration does not converge, or an eigenpair fails the
        residual certificate.
    """
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    try:
        lams, vecs = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NonConvergence(str(exc)) from exc
    if certify:
        scale = max(np.linalg.norm(A, 2), 1.0)
        for lam, v in zip(lams, vecs.T):
            res = np.linalg.norm(A @ v - lam * v) / max(np.linalg.norm(v), 1e-300)
            if res > EIG_RESIDUAL_RTOL * scale:
                raise NonConvergence(f"eigenpair residual {res:.3e} for lambda={lam}")
    return sort_spectrum(lams)


def spectra_match(a, b, tol: float) -> bool:
    """True when two spectra agree as multisets within ``tol``.

    Sorting alone is fragile when real parts tie up to rounding, so this
    does a greedy nearest-partner match instead.
    """
    a = list(np.asarray(a, dtype=complex))
    b = list(np.asarray(b, dtype=complex))
    if len(a) != len(b):
        return False
    for lam in a:
        j = int(np.argmin([abs(lam - mu) for mu in b]))
        if abs(lam - b[j]) > tol:
            return False
        b.pop(j)
    return True


def is_conjugate_closed(lams, tol: float = 1e-8) -> bool:
    lams = np.asarray(lams, dtype=complex)
    return spectra_match(lams, np.conj(lams), tol)


def spectral_tolerance(A) -> float:
    """Largest real part still counted as nonpositive: ``1e-9 (1 + ||A||)``."""
    return 1e-9 * (1.0 + np.linalg.norm(np.asarray(A, dtype=float), 2))


def numerical_rank(A, tol: float = 1e-10) -> int:
    """Number of singular values above ``tol`` times the largest one."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))
