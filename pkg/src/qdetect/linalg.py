"""Dense complex Hermitian linear algebra.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Functions that
take a Hermitian argument symmetrize it first with ``(A + A^H) / 2`` so that
accumulated rounding never leaks an anti-Hermitian part into eigenvalues.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import EigenError, NotHermitianError, NotPsdError, SingularError

HERMITICITY_TOL = 1e-12
RANK_TOL = 1e-10


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # real, ascending
    eigenvectors: np.ndarray  # unitary, eigenvectors in columns


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def as_matrix(a) -> np.ndarray:
    """Coerce to a finite 2-D complex array."""
    m = np.array(a, dtype=complex)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def hermitian(a, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Validate ``a`` as Hermitian and return its symmetrized copy.

    The check is relative: ``max|A - A^H| <= tol * max|A|``.
    """
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise NotHermitianError(f"matrix is not square: shape {m.shape}")
    scale = float(np.max(np.abs(m))) if m.size else 0.0
    skew = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if skew > tol * max(scale, np.finfo(float).tiny):
        raise NotHermitianError(f"matrix is not Hermitian (max |A - A^H| = {skew:.3g})")
    return sym(m)


def sym(a: np.ndarray) -> np.ndarray:
    """Hermitian part ``(A + A^H) / 2``; works on stacks of matrices."""
    return 0.5 * (a + dagger(a))


def eigh(h, method: str = "lapack", tol: float = 1e-14, max_sweeps: int = 100) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    ``method="lapack"`` dispatches to ``numpy.linalg.eigh``; ``"jacobi"`` runs
    the cyclic Jacobi iteration in :func:`jacobi_eigh`.
    """
    h = sym(as_matrix(h))
    if method == "jacobi":
        return jacobi_eigh(h, tol=tol, max_sweeps=max_sweeps)
    if method != "lapack":
        raise ValueError(f"unknown eigensolver {method!r}")
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        off = h - np.diag(np.diag(h))
        raise EigenError(f"eigensolver did not converge: {exc}", residual=float(np.linalg.norm(off))) from exc
    return EigenDecomposition(w, v)


def jacobi_eigh(h: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100) -> EigenDecomposition:
    """Cyclic Jacobi eigensolver for complex Hermitian matrices.

    Each rotation first removes the phase of the pivot ``a_pq`` and then applies
    the real symmetric Jacobi rotation that annihilates it. Sweeps stop once the
    off-diagonal Frobenius norm drops below ``tol * ||H||_F``.
    """
    a = sym(as_matrix(h)).copy()
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    total = np.linalg.norm(a)
    threshold = tol * max(total, np.finfo(float).tiny)

    def off_norm(m):
        # direct sum, ||A||^2 - ||diag A||^2 cancels catastrophically
        return float(np.linalg.norm(m - np.diag(np.diag(m))))

    for _ in range(max_sweeps):
        if off_norm(a) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= threshold * 1e-3:
                    continue
                phase = apq / mag
                theta = 0.5 * math.atan2(2.0 * mag, a[p, p].real - a[q, q].real)
                c, s = math.cos(theta), math.sin(theta)
                # G = diag(1, conj(phase)) @ [[c, -s], [s, c]]
                g = np.array([[c, -s], [s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ g
    else:
        residual = off_norm(a)
        if residual > threshold:
            raise EigenError(f"Jacobi iteration did not converge in {max_sweeps} sweeps", residual=residual)
    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return EigenDecomposition(w[order], v[:, order])


def _psd_spectrum(h, rank_tol: float):
    w, v = eigh(h)
    lam_max = max(float(w[-1]), 0.0) if w.size else 0.0
    if w.size and w[0] < -rank_tol * max(lam_max, 1e-300):
        raise NotPsdError(f"matrix is not PSD (min eigenvalue {w[0]:.3g})", min_eigenvalue=float(w[0]))
    return w, v, lam_max


def matrix_inv_sqrt(h, rank_tol: float = RANK_TOL, pseudo: bool = False) -> np.ndarray:
    """Inverse square root ``H^{-1/2}`` of a PSD matrix.

    Eigenvalues at or below ``rank_tol * lambda_max`` count as zero. By default
    such eigenvalues raise :class:`SingularError`; with ``pseudo=True`` they are
    dropped, giving the inverse root on the support of ``H``.
    """
    w, v, lam_max = _psd_spectrum(h, rank_tol)
    small = w <= rank_tol * lam_max
    if lam_max == 0.0 or (small.any() and not pseudo):
        raise SingularError(
            f"matrix is singular: {int(small.sum())} of {w.size} eigenvalues below "
            f"{rank_tol:g} * lambda_max"
        )
    inv = np.where(small, 0.0, 1.0 / np.sqrt(np.where(small, 1.0, w)))
    return sym((v * inv) @ v.conj().T)


def matrix_sqrt(h, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Unique PSD square root of a PSD matrix."""
    w, v, _ = _psd_spectrum(h, rank_tol)
    root = np.sqrt(np.clip(w, 0.0, None))
    return sym((v * root) @ v.conj().T)


def is_psd(h, tol: float = 1e-9) -> bool:
    """True iff ``lambda_min(H) >= -tol * max(1, lambda_max(H))``."""
    w = np.linalg.eigvalsh(sym(as_matrix(h)))
    if w.size == 0:
        return True
    return bool(w[0] >= -tol * max(1.0, float(w[-1])))


def min_eigenvalue(h) -> float:
    return float(np.linalg.eigvalsh(sym(as_matrix(h)))[0])


def factorize(rho, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Factor a PSD matrix as ``phi @ phi^H``.

    Uses the eigendecomposition, keeping one column per eigenvalue above
    ``rank_tol * lambda_max``; the result has as many columns as the numerical
    rank of ``rho``. Any ``phi @ Q`` with ``Q`` unitary is an equally valid factor.
    """
    w, v, lam_max = _psd_spectrum(rho, rank_tol)
    keep = w > rank_tol * lam_max
    # largest eigenvalue first
    keep_idx = np.nonzero(keep)[0][::-1]
    return v[:, keep_idx] * np.sqrt(w[keep_idx])


def numerical_rank(a, rank_tol: float = RANK_TOL) -> int:
    s = np.linalg.svd(as_matrix(a), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def hermitian_basis(n: int) -> np.ndarray:
    """Orthonormal basis of n-by-n Hermitian matrices under ``Re tr(A B)``.

    Returns an array of shape ``(n*n, n, n)``: the diagonal units first, then
    for each pair ``j < k`` the real-symmetric and imaginary-antisymmetric units.
    """
    basis = np.zeros((n * n, n, n), dtype=complex)
    idx = 0
    for j in range(n):
        basis[idx, j, j] = 1.0
        idx += 1
    r = 1.0 / math.sqrt(2.0)
    for j in range(n):
        for k in range(j + 1, n):
            basis[idx, j, k] = basis[idx, k, j] = r
            idx += 1
            basis[idx, j, k] = -1j * r
            basis[idx, k, j] = 1j * r
            idx += 1
    return basis


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density(n: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    """Random density operator of the given rank (Wishart-type)."""
    g = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    rho = g @ g.conj().T
    return sym(rho / np.trace(rho).real)
