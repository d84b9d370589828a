"""Closed-form helpers for 2x2 (and batched) non-Hermitian matrices.

Two-band Bloch Hamiltonians dominate this package's models, so the hot
loops (momentum sweeps, stroboscopic averages) use these vectorized
formulas instead of per-sample calls into LAPACK.

All functions accept stacks: shape (..., 2, 2) in, (...) or (..., 2, 2) out.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla

__all__ = [
    "SIGMA_0",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "pauli_compose",
    "pauli_decompose",
    "expm_minus_i_batch",
    "log_branch_two_band",
]

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def pauli_compose(c0, hx, hy, hz) -> np.ndarray:
    """c0*I + hx*sx + hy*sy + hz*sz, broadcasting over leading axes."""
    c0, hx, hy, hz = np.broadcast_arrays(
        *(np.asarray(c, dtype=complex) for c in (c0, hx, hy, hz))
    )
    out = np.empty(c0.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c0 + hz
    out[..., 1, 1] = c0 - hz
    out[..., 0, 1] = hx - 1j * hy
    out[..., 1, 0] = hx + 1j * hy
    return out


def pauli_decompose(m) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of pauli_compose: (c0, hx, hy, hz) coefficients."""
    m = np.asarray(m, dtype=complex)
    c0 = 0.5 * (m[..., 0, 0] + m[..., 1, 1])
    hz = 0.5 * (m[..., 0, 0] - m[..., 1, 1])
    hx = 0.5 * (m[..., 0, 1] + m[..., 1, 0])
    hy = 0.5j * (m[..., 0, 1] - m[..., 1, 0])
    return c0, hx, hy, hz


def _cos_sinc(e2):
    """(cos E, sin E / E) as entire functions of E^2 (branch-free)."""
    e2 = np.asarray(e2, dtype=complex)
    e = np.sqrt(e2)
    small = np.abs(e) < 1e-6
    e_safe = np.where(small, 1.0, e)
    cos = np.cos(e)
    sinc = np.where(small, 1.0 - e2 / 6.0, np.sin(e_safe) / e_safe)
    return cos, sinc


def expm_minus_i_batch(h) -> np.ndarray:
    """exp(-i H) for a stack of matrices.

    2x2 stacks use the closed Pauli form (exact, vectorized); other sizes
    fall back to a scipy loop.
    """
    h = np.asarray(h, dtype=complex)
    if h.shape[-2:] == (2, 2):
        c0, hx, hy, hz = pauli_decompose(h)
        e2 = hx * hx + hy * hy + hz * hz
        cos, sinc = _cos_sinc(e2)
        phase = np.exp(-1j * c0)
        out = pauli_compose(cos, -1j * sinc * hx, -1j * sinc * hy, -1j * sinc * hz)
        return phase[..., None, None] * out
    flat = h.reshape(-1, *h.shape[-2:])
    out = np.stack([sla.expm(-1j * a) for a in flat])
    return out.reshape(h.shape)


def log_branch_two_band(u) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Principal-branch effective Hamiltonian H = i ln U for 2x2 stacks.

    Returns (c0, hx, hy, hz) with H = c0*I + h.sigma and the eigenvalues of
    H equal to c0 +/- E, E = sqrt(hx^2+hy^2+hz^2), Re(c0 +/- E) in the
    principal zone. Uses U = e^{-ic0}[cos(E) I - i sinc(E) h.sigma].
    """
    u = np.asarray(u, dtype=complex)
    det = u[..., 0, 0] * u[..., 1, 1] - u[..., 0, 1] * u[..., 1, 0]
    # det U = e^{-2i c0}; principal c0 from the branch of sqrt(det)
    c0 = (-np.angle(det) * 0.5 + 0.5j * np.log(np.abs(det)))
    phase = np.exp(1j * c0)  # strips e^{-i c0}
    v = u * phase[..., None, None]  # now det v = 1, v = cos E - i sinc h.s
    half_tr = 0.5 * (v[..., 0, 0] + v[..., 1, 1])  # = cos E
    e = np.arccos(half_tr)  # principal: Re in [0, pi]
    _, ax, ay, az = pauli_decompose(v)  # = -i sinc(E) * h
    small = np.abs(np.sin(e)) < 1e-14
    scale = np.where(small, 1.0, e / np.where(small, 1.0, np.sin(e)))
    hx = 1j * ax * scale
    hy = 1j * ay * scale
    hz = 1j * az * scale
    return c0, hx, hy, hz
