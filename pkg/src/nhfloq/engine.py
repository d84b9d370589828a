"""Floquet propagators and spectra from driving protocols.

Builds one-period propagators (exact piecewise products, split-operator
integration), symmetric time frames, extended-zone (frequency-lattice)
quasienergies, high-frequency effective Hamiltonians with kick operators,
operator logarithms, and stroboscopic state evolution.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DimensionMismatch,
    NotTwoPart,
    Overflow,
    TruncationTooSmall,
    Underflow,
    UnsupportedCombination,
)
from .linalg import eig_biorthogonal, matrix_exp, principal_quasienergy
from .protocols import (
    ContinuousSampled,
    DrivingProtocol,
    HarmonicFourier,
    Kicked,
    PiecewiseConstant,
)

__all__ = [
    "floquet_piecewise",
    "floquet_split_operator",
    "two_part_exponents",
    "symmetric_time_frames",
    "sambe_quasienergies",
    "HighFreqExpansion",
    "high_freq_effective",
    "effective_hamiltonian",
    "EvolveResult",
    "stroboscopic_evolve",
]

#: hard cap on the extended-zone truncation (matrix dim grows linearly)
SAMBE_TRUNCATION_CAP = 64

#: norms outside [NORM_FLOOR, NORM_CEIL] abort stroboscopic evolution
NORM_FLOOR = 1e-300
NORM_CEIL = 1e300


def floquet_piecewise(protocol) -> np.ndarray:
    """Exact one-period propagator of a piecewise-constant or kicked drive.

    Piecewise: U = exp(-i H_n d_n) ... exp(-i H_1 d_1) (first segment acts
    first). Kicked: each kick contributes exp(-i h_kick * period) after the
    free evolution up to its offset.
    """
    if isinstance(protocol, PiecewiseConstant):
        u = np.eye(protocol.dim, dtype=complex)
        for h, d in protocol.segments:
            u = matrix_exp(h, -1j * d) @ u
        return u
    if isinstance(protocol, Kicked):
        u = np.eye(protocol.dim, dtype=complex)
        prev = 0.0
        for h_kick, offset in protocol.kicks:
            if offset > prev:
                u = matrix_exp(protocol.h_free, -1j * (offset - prev)) @ u
            u = matrix_exp(h_kick, -1j * protocol.period) @ u
            prev = offset
        if protocol.period > prev:
            u = matrix_exp(protocol.h_free, -1j * (protocol.period - prev)) @ u
        return u
    raise UnsupportedCombination(
        f"floquet_piecewise needs a piecewise or kicked protocol, "
        f"got {type(protocol).__name__}; use floquet_split_operator for "
        "continuous drives"
    )


def floquet_split_operator(protocol, steps: int = 4096) -> np.ndarray:
    """One-period propagator by midpoint-sampled exponential splitting.

    U = prod_j exp(-i H(t_j + dt/2) dt) over `steps` equal sub-intervals
    (second-order accurate in dt). Any protocol with a `sample` method
    works except delta kicks, which are not integrable this way.
    """
    if isinstance(protocol, Kicked):
        raise UnsupportedCombination(
            "delta kicks cannot be split-stepped; use floquet_piecewise"
        )
    if steps < 1:
        raise ValueError("steps must be positive")
    dim = protocol.dim
    period = protocol.period
    dt = period / steps
    u = np.eye(dim, dtype=complex)
    for j in range(steps):
        h = protocol.sample((j + 0.5) * dt)
        u = matrix_exp(h, -1j * dt) @ u
    return u


def two_part_exponents(protocol) -> tuple[np.ndarray, np.ndarray]:
    """Extract (A, B) with U = exp(-iA) exp(-iB), B acting first.

    Works for a two-segment piecewise drive (A = H2*d2, B = H1*d1) and a
    kicked drive with a single kick at offset 0 (A = h_free*T, B =
    h_kick*T). Anything else raises NotTwoPart.
    """
    if isinstance(protocol, PiecewiseConstant) and len(protocol.segments) == 2:
        (h1, d1), (h2, d2) = protocol.segments
        return h2 * d2, h1 * d1
    if isinstance(protocol, Kicked) and len(protocol.kicks) == 1:
        h_kick, offset = protocol.kicks[0]
        if offset == 0.0:
            return protocol.h_free * protocol.period, h_kick * protocol.period
    raise NotTwoPart(
        "symmetric time frames need a drive with exactly two parts "
        "(two piecewise segments, or free evolution plus one kick at t=0)"
    )


def symmetric_time_frames(protocol) -> tuple[np.ndarray, np.ndarray]:
    """Propagators in the two symmetric time frames of a two-part drive.

    For U = exp(-iA) exp(-iB):
        U_1 = exp(-iB/2) exp(-iA) exp(-iB/2)
        U_2 = exp(-iA/2) exp(-iB) exp(-iA/2)
    Both are similar to U (shifted starting time), so they share its
    spectrum; their symmetrized products expose the chiral symmetry.
    """
    a, b = two_part_exponents(protocol)
    eb2 = matrix_exp(b, -0.5j)
    ea2 = matrix_exp(a, -0.5j)
    u1 = eb2 @ matrix_exp(a, -1j) @ eb2
    u2 = ea2 @ matrix_exp(b, -1j) @ ea2
    return u1, u2


def _sambe_matrix(protocol: HarmonicFourier, truncation: int) -> np.ndarray:
    d = protocol.dim
    nblk = 2 * truncation + 1
    big = np.zeros((nblk * d, nblk * d), dtype=complex)
    eye = np.eye(d)
    for i, n in enumerate(range(-truncation, truncation + 1)):
        big[i * d:(i + 1) * d, i * d:(i + 1) * d] = protocol.h0 - n * protocol.omega * eye
        for m, v in protocol.components.items():
            j = i + m  # column block index for harmonic m: A[n, n+m] = V_m
            if 0 <= j < nblk:
                big[i * d:(i + 1) * d, j * d:(j + 1) * d] += v
    return big


def _fold(eps: np.ndarray, omega: float) -> np.ndarray:
    """Fold Re(eps) into [-omega/2, omega/2); exact edge ties fold down."""
    re = eps.real
    n = np.floor(re / omega + 0.5)
    return (re - n * omega) + 1j * eps.imag


def sambe_quasienergies(
    protocol: HarmonicFourier,
    truncation: int = 12,
    count: int | None = None,
    self_check: bool = True,
) -> np.ndarray:
    """Quasienergies from the extended-zone (frequency-lattice) eigenproblem.

    Builds the block matrix with diagonal blocks H0 - n*omega and
    off-diagonal blocks V_{m-n}, diagonalizes it, and returns the `count`
    eigenvalues closest to the central zone (smallest |Re|), folded into
    one zone of width omega. The default count is the physical dimension.

    A self-consistency check recomputes at truncation+4 and raises
    TruncationTooSmall when the returned values shift by more than
    1e-8 (absolute, after folding).
    """
    if truncation < 1:
        raise ValueError("truncation must be at least 1")
    if truncation > SAMBE_TRUNCATION_CAP:
        raise ValueError(f"truncation capped at {SAMBE_TRUNCATION_CAP}")
    if count is None:
        count = protocol.dim

    def _solve(tr: int) -> np.ndarray:
        big = _sambe_matrix(protocol, tr)
        eps = np.linalg.eigvals(big)
        order = np.argsort(np.abs(eps.real), kind="stable")
        sel = eps[order[:count]]
        folded = _fold(sel, protocol.omega)
        return folded[np.lexsort((folded.imag, folded.real))]

    vals = _solve(truncation)
    if self_check:
        if truncation + 4 > SAMBE_TRUNCATION_CAP:
            raise ValueError(
                "truncation too close to the cap for the self-check; "
                "pass self_check=False or lower the truncation"
            )
        ref = _solve(truncation + 4)
        # nearest-match comparison: folding can reorder degenerate pairs
        drift = max(np.min(np.abs(ref - v)) for v in vals)
        if drift > 1e-8:
            raise TruncationTooSmall(
                f"zone values moved by {drift:.3g} when the truncation was "
                f"raised from {truncation} to {truncation + 4}"
            )
    return vals


@dataclass
class HighFreqExpansion:
    """Inverse-frequency expansion of a harmonically driven system.

    h_eff: static effective Hamiltonian summed to the requested order.
    kick1, kick2: the 1/omega and 1/omega^2 micromotion generators as
    callables of t (kick2 is None below second order). The full kick
    operator to this order is K(t) = kick1(t)/omega + kick2(t)/omega^2;
    stroboscopically U(T) ~ e^{-iK(0)} e^{-i h_eff T} e^{+iK(0)}.
    """

    h_eff: np.ndarray
    kick1: Callable[[float], np.ndarray]
    kick2: Callable[[float], np.ndarray] | None
    order: int
    omega: float

    def kick(self, t: float) -> np.ndarray:
        k = self.kick1(t) / self.omega
        if self.kick2 is not None:
            k = k + self.kick2(t) / self.omega**2
        return k

    def propagator(self, n_periods: int = 1) -> np.ndarray:
        """Stroboscopic propagator over n periods, including the t=0 kick."""
        t = n_periods * 2.0 * np.pi / self.omega
        ek = matrix_exp(self.kick(0.0), -1j)
        ek_inv = matrix_exp(self.kick(0.0), 1j)
        return ek @ matrix_exp(self.h_eff, -1j * t) @ ek_inv


def _commutator(a, b):
    return a @ b - b @ a


def high_freq_effective(protocol: HarmonicFourier, order: int = 2) -> HighFreqExpansion:
    """Effective Hamiltonian and kick operators to order 0, 1 or 2 in 1/omega.

    order 0: h_eff = H0
    order 1: + (1/omega)  sum_{m!=0} V_m V_{-m} / m
    order 2: + (1/omega^2)[ (1/2) sum_{m!=0} [[V_m, H0], V_{-m}] / m^2
                          + (1/3) sum_{l,m!=0} [V_l, [V_m, V_{-l-m}]] / (l m) ]

    kick1(t) = sum_{m!=0} V_m e^{im omega t} / (im)
    kick2(t) = sum_{m!=0} [V_m, H0] e^{im omega t} / (im^2)
             + sum_{m,m'!=0, m'!=-m} [V_m, V_{m'}] e^{i(m+m') omega t}
               / (2im(m+m'))
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    w = protocol.omega
    h0 = protocol.h0.astype(complex)
    comps = protocol.components
    dim = protocol.dim

    def v_of(m: int) -> np.ndarray | None:
        return comps.get(m)

    h_eff = h0.copy()
    if order >= 1:
        h1 = np.zeros((dim, dim), dtype=complex)
        for m, vm in comps.items():
            vmm = v_of(-m)
            if vmm is not None:
                h1 += vm @ vmm / m
        h_eff = h_eff + h1 / w
    if order >= 2:
        h2 = np.zeros((dim, dim), dtype=complex)
        for m, vm in comps.items():
            vmm = v_of(-m)
            if vmm is not None:
                h2 += 0.5 * _commutator(_commutator(vm, h0), vmm) / m**2
        for l, vl in comps.items():
            for m, vm in comps.items():
                vr = v_of(-l - m)
                if vr is not None:
                    h2 += _commutator(vl, _commutator(vm, vr)) / (3.0 * l * m)
        h_eff = h_eff + h2 / w**2

    def kick1(t: float) -> np.ndarray:
        k = np.zeros((dim, dim), dtype=complex)
        for m, vm in comps.items():
            k += vm * np.exp(1j * m * w * t) / (1j * m)
        return k

    kick2 = None
    if order >= 2:
        def kick2(t: float) -> np.ndarray:
            k = np.zeros((dim, dim), dtype=complex)
            for m, vm in comps.items():
                k += _commutator(vm, h0) * np.exp(1j * m * w * t) / (1j * m**2)
            for m, vm in comps.items():
                for mp, vmp in comps.items():
                    if mp == -m:
                        continue
                    k += (
                        _commutator(vm, vmp)
                        * np.exp(1j * (m + mp) * w * t)
                        / (2j * m * (m + mp))
                    )
            return k

    return HighFreqExpansion(h_eff=h_eff, kick1=kick1, kick2=kick2, order=order, omega=w)


def effective_hamiltonian(u, period: float = 1.0) -> np.ndarray:
    """Principal-branch operator logarithm H_eff = (i/T) ln U.

    Built from the biorthogonal eigensystem: H = sum_n E_n |n><n~| with
    E_n the principal quasienergy of each Floquet eigenvalue. Satisfies
    exp(-i H_eff T) = U up to the decomposition's conditioning.
    """
    dec = eig_biorthogonal(u)
    energies = principal_quasienergy(dec.eigenvalues, period)
    return (dec.right_vectors * energies) @ dec.left_vectors.conj().T


@dataclass
class EvolveResult:
    """Stroboscopic trajectory: states[j] is the state after j periods."""

    states: np.ndarray  # (n_periods+1, dim)
    norms: np.ndarray  # (n_periods+1,) norms before any renormalization
    renormalized: bool


def stroboscopic_evolve(
    u, psi0, n_periods: int, renormalize: bool = False
) -> EvolveResult:
    """Apply the one-period propagator repeatedly to an initial state.

    norms[j] records the accumulated norm: with renormalize=True the
    stored states are unit vectors and norms[j] is the running product of
    per-period growth factors; otherwise states carry their raw norms.

    Raises Underflow/Overflow when the running norm leaves
    [1e-300, 1e300]; renormalize avoids the abort but the norm record
    itself can still overflow for pathological growth rates.
    """
    u = np.asarray(u, dtype=complex)
    psi = np.asarray(psi0, dtype=complex).ravel()
    if u.shape[0] != psi.shape[0]:
        raise DimensionMismatch(
            f"propagator dim {u.shape[0]} != state dim {psi.shape[0]}"
        )
    if n_periods < 0:
        raise ValueError("n_periods must be non-negative")
    states = np.empty((n_periods + 1, psi.shape[0]), dtype=complex)
    norms = np.empty(n_periods + 1, dtype=float)
    nrm = float(np.linalg.norm(psi))
    scale = 1.0
    if renormalize and nrm > 0:
        psi = psi / nrm
        scale = nrm
    states[0] = psi
    norms[0] = nrm
    for j in range(1, n_periods + 1):
        psi = u @ psi
        nrm = float(np.linalg.norm(psi))
        if renormalize:
            if nrm == 0.0:
                raise Underflow("state annihilated by the propagator")
            psi = psi / nrm
            scale *= nrm
            total = scale
        else:
            total = nrm
        if total < NORM_FLOOR:
            raise Underflow(
                f"norm {total:.3g} below representable floor after {j} periods; "
                "consider renormalize=True"
            )
        if total > NORM_CEIL:
            raise Overflow(
                f"norm {total:.3g} above representable ceiling after {j} periods; "
                "consider renormalize=True"
            )
        states[j] = psi
        norms[j] = total
    return EvolveResult(states=states, norms=norms, renormalized=renormalize)
