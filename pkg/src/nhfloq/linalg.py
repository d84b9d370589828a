"""Dense non-Hermitian linear algebra primitives.

Biorthogonal eigendecompositions, robust matrix exponentials and the
principal quasienergy branch. Everything downstream (Floquet operators,
winding numbers, dynamical probes) is built on these three operations.

Conventions
-----------
Right eigenvectors |n> and left eigenvectors |n~> are stored as columns of
``right_vectors`` and ``left_vectors``; biorthonormality means
``left_vectors[:, n].conj() @ right_vectors[:, m] = delta_nm``.
Eigenvalues are sorted by ascending real part, ties by ascending
imaginary part.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NonConvergence, OverflowRisk, ZeroEigenvalue

__all__ = [
    "SpectralDecomposition",
    "eig_biorthogonal",
    "matrix_exp",
    "principal_quasienergy",
]

#: condition estimates below this are flagged as near-defective
DEFECTIVE_FLOOR = 1e-10

#: matrix_exp refuses arguments with 1-norm above this
EXP_NORM_CEILING = 500.0


@dataclass
class SpectralDecomposition:
    """Result of a biorthogonal eigendecomposition.

    Attributes
    ----------
    eigenvalues : (n,) complex array, sorted by (Re, Im) ascending.
    right_vectors : (n, n) complex array, unit-norm columns.
    left_vectors : (n, n) complex array, columns scaled so that
        ``left_vectors.conj().T @ right_vectors == I``.
    residual_norm : max over columns of ``|M r - lambda r|_2`` (absolute).
    condition_estimate : min over eigenpairs of the normalized left/right
        overlap ``|<l|r>| / (|l| |r|)``; 1 for normal matrices, -> 0 at an
        exceptional point.
    near_defective : True when ``condition_estimate`` fell below the
        1e-10 floor. The decomposition is still returned; downstream
        quantities built from it are unreliable.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    residual_norm: float
    condition_estimate: float
    near_defective: bool = False

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        """Return sum_n E_n |n><n~| (should reproduce the input matrix)."""
        return (self.right_vectors * self.eigenvalues) @ self.left_vectors.conj().T


def _as_square_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    return a


def eig_biorthogonal(m) -> SpectralDecomposition:
    """Full biorthogonal eigendecomposition of a square complex matrix.

    Left vectors are obtained by inverting the right eigenvector matrix,
    which yields an exact dual basis whenever that matrix is invertible.
    If it is numerically singular (defective to machine precision), an
    adjoint-matrix eigendecomposition with eigenvalue matching is used as
    a fallback and the result is flagged near-defective.

    Raises
    ------
    NonConvergence
        If the underlying QR iteration fails.
    """
    a = _as_square_matrix(m)
    n = a.shape[0]
    try:
        evals, vr = sla.eig(a)
    except (sla.LinAlgError, ValueError) as exc:  # pragma: no cover - rare
        raise NonConvergence(f"eigensolver failed: {exc}") from None

    order = np.lexsort((evals.imag, evals.real))
    evals = evals[order]
    vr = vr[:, order]
    # LAPACK returns unit-norm columns already; renormalize defensively.
    vr = vr / np.linalg.norm(vr, axis=0, keepdims=True)

    near_defective = False
    try:
        vl = np.linalg.inv(vr).conj().T
    except np.linalg.LinAlgError:
        vl = _left_vectors_adjoint(a, evals, vr)
        near_defective = True

    # per-pair normalized overlap of the *unit-norm* left/right vectors;
    # the left columns carry the biorthonormal scaling, so normalize here.
    lnorm = np.linalg.norm(vl, axis=0)
    cond = float(np.min(1.0 / np.maximum(lnorm, 1e-300)))
    if cond < DEFECTIVE_FLOOR:
        near_defective = True

    resid = a @ vr - vr * evals
    residual_norm = float(np.max(np.linalg.norm(resid, axis=0)))

    return SpectralDecomposition(
        eigenvalues=evals,
        right_vectors=vr,
        left_vectors=vl,
        residual_norm=residual_norm,
        condition_estimate=cond,
        near_defective=near_defective,
    )


def _left_vectors_adjoint(a, evals, vr) -> np.ndarray:
    """Fallback left vectors from eig(a^dagger), matched and rescaled."""
    wl, u = sla.eig(a.conj().T)
    # eigenvalues of a^dagger are conjugates of those of a; match greedily
    vl = np.empty_like(vr)
    used = np.zeros(len(wl), dtype=bool)
    for j, lam in enumerate(evals):
        dist = np.abs(wl.conj() - lam)
        dist[used] = np.inf
        i = int(np.argmin(dist))
        used[i] = True
        col = u[:, i]
        s = col.conj() @ vr[:, j]
        if abs(s) < 1e-300:
            s = 1e-300  # defective pair: keep finite, caller flags it
        vl[:, j] = col / np.conj(s)
    return vl


def matrix_exp(m, scale: complex = 1.0) -> np.ndarray:
    """exp(scale * m) without assuming diagonalizability.

    Uses scaling-and-squaring with Pade approximants. Accurate to ~1e-10
    relative error for ``|scale * m|_1 <= 50``; arguments with 1-norm above
    500 raise OverflowRisk instead of returning garbage.
    """
    a = _as_square_matrix(m) * complex(scale)
    norm1 = float(np.linalg.norm(a, 1)) if a.size else 0.0
    if norm1 > EXP_NORM_CEILING:
        raise OverflowRisk(
            f"|scale*M|_1 = {norm1:.3g} exceeds {EXP_NORM_CEILING}; "
            "split the evolution interval instead"
        )
    out = sla.expm(a)
    if not np.all(np.isfinite(out)):
        raise NonConvergence("matrix exponential produced non-finite entries")
    return out


def principal_quasienergy(eigval, period: float = 1.0):
    """Quasienergy E = i ln(lambda) / period on the principal branch.

    Re(E * period) lies in [-pi, pi), closed at -pi: an eigenvalue on the
    negative real axis maps to Re E = -pi/period, not +pi/period.
    Accepts scalars or arrays.

    Raises
    ------
    ZeroEigenvalue
        If any eigenvalue is exactly zero (log divergence).
    """
    lam = np.asarray(eigval, dtype=complex)
    if np.any(lam == 0):
        raise ZeroEigenvalue("cannot take the Floquet logarithm of 0")
    if period <= 0:
        raise ValueError("period must be positive")
    e = (-np.angle(lam) + 1j * np.log(np.abs(lam))) / period
    if np.isscalar(eigval) or np.ndim(eigval) == 0:
        return complex(e)
    return e
