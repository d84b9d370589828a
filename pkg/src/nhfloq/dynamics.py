"""Dynamical probes of driven chiral chains.

Four observables live here:

- dynamic_winding: winding of the long-time averaged spin texture of a
  two-band Bloch family, evolved biorthogonally in one symmetric frame.
- mean_chiral_displacement: stroboscopic average of the chiral-weighted
  displacement, reduced to a momentum-space trace over the Brillouin zone.
- wavepacket_stats: center, spread, and speed of a single-site wavepacket
  under repeated application of a real-space propagator.
- adiabatic_evolve_first_order / pumped_number: slow-cycle evolution with
  the leading non-adiabatic correction, and the particle number pumped by
  a filled band over one cycle.

The first two converge to the frame winding numbers of the topology
module: nu_alpha equals w_alpha exactly after rounding, and twice the mean
chiral displacement tends to w_alpha.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import (
    BadInitialState,
    ComplexGapViolation,
    DimensionMismatch,
    GapClosure,
    GaplessAtSample,
    NormCollapse,
    VanishingTexture,
)
from .linalg import principal_quasienergy
from .protocols import BlochFamily, Frame
from .topology import _ORIENT
from .twoband import SIGMA_X, SIGMA_Y


def _batched_eig(us: np.ndarray):
    """Eigen-system of a stack of small matrices with biorthogonal lefts.

    Returns (evals, rights, lefts) with lefts[g, :, n] the left vector
    paired to rights[g, :, n], normalized so <n~|m> = delta_nm.
    """
    evals, rights = np.linalg.eig(us)
    lefts = np.conjugate(np.transpose(np.linalg.inv(rights), (0, 2, 1)))
    return evals, rights, lefts


def _frame_stack(
    family: BlochFamily, frame: Frame, grid: int, half_offset: bool = False
):
    if family.internal_dim != 2:
        raise DimensionMismatch(
            f"two-band family required, got internal_dim={family.internal_dim}"
        )
    shift = 0.5 if half_offset else 0.0
    ks = -np.pi + 2.0 * np.pi * (np.arange(grid) + shift) / grid
    return ks, family.u_batch(ks, frame)


# ---------------------------------------------------------------------------
# dynamic winding number from averaged spin textures
# ---------------------------------------------------------------------------


@dataclass
class DynamicWindingResult:
    """Winding of the time-averaged spin texture in one time frame."""

    nu: int
    raw: float
    angles: np.ndarray  # sampled winding angles theta(k)
    r_x: np.ndarray  # averaged sigma_x texture over the grid (complex)
    r_y: np.ndarray
    periods: int
    grid: int

    def __int__(self) -> int:
        return self.nu


def dynamic_winding(
    family: BlochFamily,
    frame: Frame = Frame.SYMMETRIC_1,
    periods: int = 1000,
    grid: int = 512,
    c_plus: complex = 1.0 / np.sqrt(2.0),
    c_minus: complex = 1.0 / np.sqrt(2.0),
) -> DynamicWindingResult:
    """Dynamic winding number of a two-band chiral family in one frame.

    The state c_plus |+> + c_minus |-> (band labels by the sign of Re E)
    is evolved stroboscopically at each momentum; the right component
    advances with the frame propagator and the left component with the
    dual generator sum_n E_n |n~><n|, so both acquire the same
    e^{-i l E_n} factors. The biorthogonal averages of sigma_x and
    sigma_y over `periods` periods give a texture (r_x, r_y)(k); the
    planar angle theta = Re arctan(r_y / r_x) is accumulated around the
    Brillouin zone and the total divided by 2 pi, rounded, is nu.

    Both coefficients must be nonzero: a pure band state has no
    interference term and its texture carries no winding information.
    """
    if abs(c_plus) == 0.0 or abs(c_minus) == 0.0:
        raise BadInitialState(
            "both band coefficients must be nonzero at every momentum"
        )
    if periods < 1:
        raise ValueError("periods must be positive")
    # The grid is offset by half a spacing: at symmetric momenta (0, pi,
    # pi/2) the quasienergy is often exactly real, where the averaged
    # texture degenerates to an interference residue whose ray is rotated
    # a quarter turn. Sampling between those points keeps every sample on
    # the band ray.
    ks, us = _frame_stack(family, frame, grid, half_offset=True)
    evals, rights, lefts = _batched_eig(us)

    # Order bands as (+, -) by the real part of the quasienergy.
    e_phase = principal_quasienergy(evals, family.period)
    order = np.argsort(-e_phase.real, axis=1, kind="stable")
    lam = np.take_along_axis(evals, order, axis=1)
    vr = np.take_along_axis(rights, order[:, None, :], axis=2)
    vl = np.take_along_axis(lefts, order[:, None, :], axis=2)

    # Matrix elements <n~| sigma_j |m> of the two Pauli observables.
    m_x = np.einsum("gcn,cd,gdm->gnm", vl.conj(), SIGMA_X, vr)
    m_y = np.einsum("gcn,cd,gdm->gnm", vl.conj(), SIGMA_Y, vr)

    c = np.array([c_plus, c_minus], dtype=complex)
    scale = np.max(np.abs(lam), axis=1)
    if np.any(scale == 0.0):
        raise NormCollapse("propagator is singular at a momentum sample")
    mu = lam / scale[:, None]

    r_x = np.zeros(grid, dtype=complex)
    r_y = np.zeros(grid, dtype=complex)
    pw = np.ones_like(mu)
    for _ in range(periods):
        pw = pw * mu
        amp = c[None, :] * pw  # (grid, band)
        den = np.sum(np.abs(amp) ** 2, axis=1)
        r_x += np.einsum("gn,gm,gnm->g", amp.conj(), amp, m_x) / den
        r_y += np.einsum("gn,gm,gnm->g", amp.conj(), amp, m_y) / den
    r_x /= periods
    r_y /= periods

    tex = np.abs(r_x) + np.abs(r_y)
    if np.min(tex) < 1e-8:
        j = int(np.argmin(tex))
        raise VanishingTexture(
            f"averaged texture vanishes at k={ks[j]:.6f} "
            f"(|r_x|+|r_y|={tex[j]:.2e})"
        )
    # Samples whose texture has collapsed relative to the rest of the
    # zone (an isolated real-quasienergy momentum caught mid-window) carry
    # an unreliable ray; drop them from the accumulation.
    keep = tex >= 0.01 * np.median(tex)
    if np.count_nonzero(keep) < 8:
        raise VanishingTexture("texture collapses over most of the zone")

    # Re arctan(r_y / r_x) without dividing by r_x: arctan z =
    # (1/2i) ln[(1+iz)/(1-iz)] and (1+iz)/(1-iz) = (r_x+ir_y)/(r_x-ir_y),
    # so the real part is half the principal argument of that ratio.
    theta = 0.5 * np.angle((r_x + 1j * r_y) / (r_x - 1j * r_y))
    kept = theta[keep]
    diffs = np.diff(kept, append=kept[0])
    # The angle is defined modulo pi (a texture and its negative give the
    # same ray), so increments are reduced to (-pi/2, pi/2].
    diffs = diffs - np.pi * np.round(diffs / np.pi)
    raw = float(np.sum(diffs) / (2.0 * np.pi))
    return DynamicWindingResult(
        nu=int(np.rint(raw)),
        raw=raw,
        angles=theta,
        r_x=r_x,
        r_y=r_y,
        periods=periods,
        grid=grid,
    )


# ---------------------------------------------------------------------------
# mean chiral displacement
# ---------------------------------------------------------------------------


@dataclass
class MCDResult:
    """Mean chiral displacement of one time frame."""

    average: float
    series: np.ndarray  # C(t) for t = 1..periods
    running: np.ndarray  # running average of the series
    periods: int
    grid: int

    def __float__(self) -> float:
        return self.average


def mean_chiral_displacement(
    family: BlochFamily,
    frame: Frame = Frame.SYMMETRIC_1,
    periods: int = 1000,
    grid: int = 512,
) -> MCDResult:
    """Stroboscopic mean chiral displacement of a chiral Bloch family.

    Evaluates the momentum integral of

        tr[ Ud^t(k) S i d/dk U^t(k) ] / tr[ Ud^t(k) U^t(k) ]

    averaged over t = 1..periods, where U is the frame propagator and
    Ud^t = sum_n (lambda_n^*)^t |n><n~| is the t-th power of the adjoint
    of the dual propagator built from the biorthogonal eigensystem. The
    momentum integral uses the trapezoid rule on the periodic grid. The
    long-time average converges to half the matching frame winding.

    The trace is evaluated in its spectral form. Differentiating U^t
    directly is hopeless at large t (the phase of lambda^t oscillates in
    momentum far below any fixed grid), but in the eigenbasis the trace
    splits into t-independent coefficients times eigenvalue powers:

        num(t) = sum_n |l_n|^{2t} A_n
               + sum_{n != m} (l_n^* l_m)^t B_nm,
        den(t) = sum_n |l_n|^{2t},

    with A_n = i <n~|S|dn/dk> and B_nm = i <n~|S|m><dm~/dk|n> from
    first-order perturbation theory in dU/dk (the band-drift term carries
    <n~|S|n> = 0 by chirality). Powers are rescaled per momentum by the
    largest eigenvalue modulus, which cancels between numerator and
    denominator.
    """
    if family.chiral_op is None:
        raise ValueError("family must declare a chiral operator")
    s = np.asarray(family.chiral_op, dtype=complex)
    if periods < 1:
        raise ValueError("periods must be positive")
    ks, us = _frame_stack(family, frame, grid)
    evals, rights, lefts = _batched_eig(us)
    dim = us.shape[1]

    scale2 = np.max(np.abs(evals), axis=1) ** 2
    if np.any(scale2 < 1e-12):
        raise NormCollapse("propagator norm collapses at a momentum sample")
    gap = evals[:, :, None] - evals[:, None, :]  # gap[g, n, m] = l_n - l_m
    off = ~np.eye(dim, dtype=bool)
    if np.min(np.abs(gap[:, off])) < 1e-9:
        raise GaplessAtSample(
            "propagator eigenvalues degenerate at a momentum sample"
        )

    h = 2.0 * np.pi / grid
    du = (np.roll(us, -1, axis=0) - np.roll(us, 1, axis=0)) / (2.0 * h)
    # <n~|U'|m> and <n~|S|m> in the biorthogonal basis.
    vm = np.einsum("gcn,gcd,gdm->gnm", lefts.conj(), du, rights)
    sm = np.einsum("gcn,cd,gdm->gnm", lefts.conj(), s, rights)
    # G[g, n, m] = <n~|S|m><m~|U'|n> / (l_n - l_m) for n != m.
    g_nm = np.zeros_like(sm)
    g_nm[:, off] = (sm * np.swapaxes(vm, 1, 2))[:, off] / gap[:, off]
    a_diag = 1j * np.sum(g_nm, axis=2)  # (g, n)
    b_off = -1j * g_nm  # zero on the diagonal already

    rho = (np.abs(evals) ** 2) / scale2[:, None]
    cross = evals.conj()[:, :, None] * evals[:, None, :] / scale2[:, None, None]

    series = np.empty(periods, dtype=float)
    running = np.empty(periods, dtype=float)
    p_rho = np.ones_like(rho)
    p_cross = np.ones_like(cross)
    total = 0.0
    for t in range(1, periods + 1):
        p_rho = p_rho * rho
        p_cross = p_cross * cross
        den = np.sum(p_rho, axis=1)
        if np.any(np.abs(den) < 1e-12):
            raise NormCollapse(f"denominator trace below 1e-12 at period {t}")
        num = np.sum(p_rho * a_diag, axis=1) + np.sum(
            p_cross * b_off, axis=(1, 2)
        )
        c_t = float(np.mean(num / den).real)
        series[t - 1] = c_t
        total += c_t
        running[t - 1] = total / t
    return MCDResult(
        average=float(running[-1]),
        series=series,
        running=running,
        periods=periods,
        grid=grid,
    )


def combine_mcd(c1: float, c2: float) -> tuple[float, float]:
    """Zero- and pi-gap combination (C1 + C2, C1 - C2) of frame averages."""
    a, b = float(c1), float(c2)
    return a + b, a - b


# ---------------------------------------------------------------------------
# wavepacket transport statistics
# ---------------------------------------------------------------------------


@dataclass
class WavepacketStats:
    """Per-period center, spread, and speed of a single-site wavepacket."""

    x_mean: np.ndarray  # <x>(t), cells relative to the initial site
    x_std: np.ndarray  # sqrt(<x^2> - <x>^2)
    v: np.ndarray  # sqrt(<x^2>)/t with x relative to the initial site
    periods: int


def wavepacket_stats(op, init_site: int, periods: int) -> WavepacketStats:
    """Transport statistics of a delta wavepacket under repeated periods.

    `op` is a real-space Floquet operator (or a bare matrix); init_site
    indexes the lattice degree of freedom carrying the initial amplitude,
    and positions are measured in unit cells relative to that site. The
    state is renormalized after every period, and the moments of |psi|^2
    are taken from the renormalized state.
    """
    mat = np.asarray(getattr(op, "matrix", op), dtype=complex)
    dim = mat.shape[0]
    if not 0 <= init_site < dim:
        raise ValueError(f"init_site {init_site} outside 0..{dim - 1}")
    if periods < 1:
        raise ValueError("periods must be positive")
    d = max(1, int(getattr(op, "internal_dim", 1) or 1))
    cells = np.arange(dim) // d
    x = (cells - cells[init_site]).astype(float)

    psi = np.zeros(dim, dtype=complex)
    psi[init_site] = 1.0
    x_mean = np.empty(periods)
    x_std = np.empty(periods)
    v = np.empty(periods)
    for t in range(1, periods + 1):
        psi = mat @ psi
        nrm = np.linalg.norm(psi)
        if nrm == 0.0:
            raise NormCollapse(f"state annihilated at period {t}")
        psi = psi / nrm
        prob = np.abs(psi) ** 2
        m1 = float(prob @ x)
        m2 = float(prob @ (x * x))
        x_mean[t - 1] = m1
        x_std[t - 1] = float(np.sqrt(max(m2 - m1 * m1, 0.0)))
        v[t - 1] = float(np.sqrt(m2)) / t
    return WavepacketStats(x_mean=x_mean, x_std=x_std, v=v, periods=periods)


# ---------------------------------------------------------------------------
# first-order adiabatic evolution and the pumped particle number
# ---------------------------------------------------------------------------


def _gap_checks(energies: np.ndarray, where: str) -> None:
    e = np.asarray(energies)
    n = e.shape[-1]
    if n < 2:
        return
    diff = e[..., :, None] - e[..., None, :]
    off = ~np.eye(n, dtype=bool)
    gaps = diff[..., off]
    if np.min(np.abs(gaps)) < 1e-9:
        raise GapClosure(f"instantaneous spectrum closes {where}")
    if np.max(np.abs(gaps.imag)) > 1e-8:
        raise ComplexGapViolation(
            f"level spacing acquires an imaginary part {where}; the "
            "first-order theory assumes real gaps"
        )


def _transport_gauge(rights: np.ndarray, lefts: np.ndarray):
    """Parallel-transport gauge along axis 0 of an eigenvector path.

    Rescales each right eigenvector so its overlap with the previous left
    partner is one, nulling the discrete overlap derivative <n~|dn/ds>;
    the left vectors are counter-scaled to keep <n~|n> = 1.
    """
    vr = rights.copy()
    vl = lefts.copy()
    steps = vr.shape[0]
    for j in range(1, steps):
        ov = np.einsum("cn,cn->n", vl[j - 1].conj(), vr[j])
        if np.any(np.abs(ov) < 1e-12):
            raise GapClosure(
                "eigenvector path discontinuous; refine the step grid"
            )
        vr[j] = vr[j] / ov[None, :]
        vl[j] = vl[j] * ov.conj()[None, :]
    return vr, vl


def _sorted_eigensystem(mats: np.ndarray):
    """Batched eigensystem ordered by ascending real part per sample."""
    evals, rights = np.linalg.eig(mats)
    lefts = np.conjugate(np.transpose(np.linalg.inv(rights), (0, 2, 1)))
    order = np.argsort(evals.real, axis=1, kind="stable")
    idx = np.arange(mats.shape[0])[:, None]
    evals = evals[idx, order]
    rights = np.take_along_axis(rights, order[:, None, :], axis=2)
    lefts = np.take_along_axis(lefts, order[:, None, :], axis=2)
    return evals, rights, lefts


@dataclass
class AdiabaticEvolution:
    """First-order adiabatic trajectory of one band."""

    s: np.ndarray  # scaled-time grid on [0, 1]
    states: np.ndarray  # (steps+1, dim) evolved right states
    left_states: np.ndarray  # (steps+1, dim) evolved left states
    omega: np.ndarray  # accumulated dynamical phase of the tracked band
    band: int
    period: float


def adiabatic_evolve_first_order(
    h_fn: Callable[[float], np.ndarray],
    period: float,
    band: int,
    steps: int = 2048,
) -> AdiabaticEvolution:
    """Evolve one instantaneous band through a slow cycle h(s), s in [0,1].

    Returns the right and left trajectories including the leading 1/T
    non-adiabatic correction, in the parallel-transport gauge fixed by
    <n~|dn/ds> = 0. The instantaneous spectrum must stay nondegenerate
    with real level spacings; GapClosure and ComplexGapViolation report
    violations. For an s-independent matrix the corrections vanish and
    the trajectory is exp(-i Omega_band(s)) times the eigenvector.
    """
    if steps < 8:
        raise ValueError("steps too small for the finite-difference gauge")
    s_grid = np.linspace(0.0, 1.0, steps + 1)
    hs = np.stack([np.asarray(h_fn(float(s)), dtype=complex) for s in s_grid])
    dim = hs.shape[1]
    if not 0 <= band < dim:
        raise ValueError(f"band {band} outside 0..{dim - 1}")
    evals, rights, lefts = _sorted_eigensystem(hs)
    _gap_checks(evals, "along the cycle")

    vr, vl = _transport_gauge(rights, lefts)
    # Band derivative d|n>/ds and its left mirror, in the fixed gauge.
    dvr = np.gradient(vr, s_grid, axis=0)
    dvl = np.gradient(vl, s_grid, axis=0)

    # cumulative_simpson silently casts complex input to real, so the real
    # and imaginary parts of the dynamical phase integrate separately.
    omega = np.zeros((steps + 1, dim), dtype=complex)
    omega[1:] = period * (
        cumulative_simpson(evals.real, x=s_grid, axis=0)
        + 1j * cumulative_simpson(evals.imag, x=s_grid, axis=0)
    )

    ell = band
    others = [m for m in range(dim) if m != ell]
    states = np.empty((steps + 1, dim), dtype=complex)
    left_states = np.empty((steps + 1, dim), dtype=complex)
    for j in range(steps + 1):
        e = evals[j]
        psi = vr[j][:, ell].astype(complex)
        phi = vl[j][:, ell].astype(complex)
        for m in others:
            # Running correction <m~(s)|dl/ds> / Delta_ml ...
            mix = np.vdot(vl[j][:, m], dvr[j][:, ell]) / (e[m] - e[ell])
            psi = psi + (1j / period) * mix * vr[j][:, m]
            # ... and the initial-condition echo that cancels it at s=0.
            mix0 = np.vdot(vl[0][:, m], dvr[0][:, ell]) / (
                evals[0, m] - evals[0, ell]
            )
            psi = psi - (1j / period) * np.exp(
                -1j * (omega[j, m] - omega[j, ell])
            ) * mix0 * vr[j][:, m]
            # Left trajectory: the same construction for the dual
            # equation i d|psi~>/dt = H^dagger |psi~>, whose bands are
            # |m~> with energies E_m^*.
            mixl = np.vdot(dvl[j][:, ell], vr[j][:, m]) / (e[ell] - e[m])
            phi = phi - (1j / period) * np.conj(mixl) * vl[j][:, m]
            mixl0 = np.vdot(dvl[0][:, ell], vr[0][:, m]) / (
                evals[0, ell] - evals[0, m]
            )
            phi = phi + (1j / period) * np.exp(
                -1j * np.conj(omega[j, m] - omega[j, ell])
            ) * np.conj(mixl0) * vl[j][:, m]
        states[j] = np.exp(-1j * omega[j, ell]) * psi
        left_states[j] = np.exp(-1j * np.conj(omega[j, ell])) * phi
    return AdiabaticEvolution(
        s=s_grid,
        states=states,
        left_states=left_states,
        omega=omega[:, ell],
        band=ell,
        period=period,
    )


def pumped_number(
    h_ks: Callable[[float, float], np.ndarray],
    period: float,
    band: int,
    k_grid: int = 64,
    s_steps: int = 512,
) -> float:
    """Particles pumped by one filled band over a slow cycle h(k, s).

    Integrates the first-order biorthogonal average of the band velocity
    dh/dk over the Brillouin zone and one cycle s in [0, 1], times the
    period. The zeroth-order term integrates to zero around the zone, so
    the result is period-independent and equals the band's Chern number
    on the (k, s) torus for a gapped cycle.
    """
    ks = -np.pi + 2.0 * np.pi * np.arange(k_grid) / k_grid
    s_grid = np.linspace(0.0, 1.0, s_steps + 1)
    stack = np.stack(
        [
            np.stack(
                [np.asarray(h_ks(float(k), float(s)), dtype=complex) for s in s_grid]
            )
            for k in ks
        ]
    )  # (k, s, dim, dim)
    dim = stack.shape[-1]
    if not 0 <= band < dim:
        raise ValueError(f"band {band} outside 0..{dim - 1}")
    evals, rights, lefts = _sorted_eigensystem(stack.reshape(-1, dim, dim))
    evals = evals.reshape(k_grid, s_steps + 1, dim)
    rights = rights.reshape(k_grid, s_steps + 1, dim, dim)
    lefts = lefts.reshape(k_grid, s_steps + 1, dim, dim)
    _gap_checks(evals, "on the (k, s) torus")

    dk = 2.0 * np.pi / k_grid
    dh_dk = (np.roll(stack, -1, axis=0) - np.roll(stack, 1, axis=0)) / (2.0 * dk)

    ell = band
    flux = np.empty(k_grid)
    for i in range(k_grid):
        vr, vl = _transport_gauge(rights[i], lefts[i])
        dvr = np.gradient(vr, s_grid, axis=0)
        dvl = np.gradient(vl, s_grid, axis=0)
        e = evals[i]
        o = dh_dk[i]  # (s, dim, dim)
        acc = np.einsum("sc,scd,sd->s", vl[:, :, ell].conj(), o, vr[:, :, ell])
        for m in range(dim):
            if m == ell:
                continue
            mix_r = np.einsum("sc,sc->s", vl[:, :, m].conj(), dvr[:, :, ell])
            olm = np.einsum("sc,scd,sd->s", vl[:, :, ell].conj(), o, vr[:, :, m])
            acc = acc + (1j / period) * (mix_r / (e[:, m] - e[:, ell])) * olm
            mix_l = np.einsum("sc,sc->s", dvl[:, :, ell].conj(), vr[:, :, m])
            oml = np.einsum("sc,scd,sd->s", vl[:, :, m].conj(), o, vr[:, :, ell])
            acc = acc + (1j / period) * (mix_l / (e[:, ell] - e[:, m])) * oml
        flux[i] = float(np.trapezoid(acc.real, s_grid))
    # Same global orientation as the winding and Chern routines, so that
    # a pump cycle and chern_number of its filled band report the same
    # signed integer.
    return float(_ORIENT * period * np.mean(flux))


# ---------------------------------------------------------------------------
# aggregate report
# ---------------------------------------------------------------------------


@dataclass
class DynamicsReport:
    """Everything the dynamics tasks can report for one parameter point."""

    dwn_angles: np.ndarray | None = None
    nu1: int | None = None
    nu2: int | None = None
    mcd_series: dict = field(default_factory=dict)
    mcd_avg: dict = field(default_factory=dict)
    x_mean: np.ndarray | None = None
    x_std: np.ndarray | None = None
    v: np.ndarray | None = None
