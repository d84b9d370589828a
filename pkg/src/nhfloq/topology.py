"""Topological invariants and boundary-mode accounting.

Winding conventions. All chiral winding numbers here share one orientation,
fixed by the calibration example H(k) = cos k sigma_x + sin k sigma_y whose
winding is defined to be +1 (see _ORIENT below). Frame windings are computed
from the operator Q(k) = sum_n sgn(Re E_n) |n><n~| built out of biorthogonal
eigenstates of the one-period propagator in a symmetric time frame.

Q(k) is only defined up to a global sign flip at momenta where Re E crosses
zero (both bands trade signs there, sending Q to -Q). Phases with
half-integer winding necessarily contain such crossings, so a naive central
difference of Q has O(1) errors at them. The integrand tr[S Q dQ] is
invariant under Q -> -Q, so we integrate a continuous lift of Q instead:
walking the momentum grid, flip the sign of Q whenever tr(Q_j Q_{j+1}) goes
negative, and allow the lift to come back antiperiodic after a full loop.
The lifted integral reproduces the continuously tracked winding angle, and
an odd number of flips is exactly what produces the half-integer values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    BaseEnergyOnSpectrum,
    EdgeWindowTooSmall,
    EPOnGBZ,
    GapClosureOnTorus,
    GaplessAtSample,
    GaplessAtZero,
    InvalidParams,
    NonConvergent,
)
from .linalg import eig_biorthogonal, principal_quasienergy
from .protocols import BlochFamily, Boundary, FloquetOperator, Frame
from .twoband import SIGMA_X, SIGMA_Y, SIGMA_Z

__all__ = [
    "WindingResult",
    "GapReport",
    "ModeCount",
    "InvariantReport",
    "FluxLoopFamily",
    "spectral_winding",
    "frame_winding",
    "combine_windings",
    "open_bulk_winding",
    "non_bloch_winding",
    "gap_functions",
    "circle_gap",
    "mode_profile_1d",
    "mode_profile_2d",
    "edge_weight",
    "corner_weight",
    "count_boundary_modes",
    "count_modes",
    "count_corner_modes",
    "chern_number",
    "hamiltonian_band",
]

# Global orientation of every chiral winding integral in this module,
# calibrated so that the single-winding two-band example
# H(k) = cos k sigma_x + sin k sigma_y comes out as +1.
_ORIENT = -1.0

# |Re E| below this counts as an exact gap closing: sgn is undefined.
GAPLESS_TOL = 1e-9

# Quantities are accepted once they sit this close to the allowed quantum.
QUANTIZATION_TOL = 1e-3


@dataclass(frozen=True)
class WindingResult:
    """A quantized invariant with its convergence diagnostics."""

    value: float
    raw: float
    deviation: float
    grid: int
    # change of the raw value under the final grid doubling
    grid_delta: float = 0.0

    def __float__(self) -> float:
        return float(self.value)


def _quantize(raw: float, quantum: float) -> tuple[float, float]:
    q = round(raw / quantum) * quantum
    return q, abs(raw - q)


# ---------------------------------------------------------------------------
# spectral winding of a flux loop
# ---------------------------------------------------------------------------


@dataclass
class FluxLoopFamily:
    """theta -> H(theta): a boundary flux threaded through a periodic chain.

    The phase e^{i theta} multiplies the wrap-around block that hops the
    last cell onto the first (the +1 offset), e^{-i theta} its reverse.
    Only nearest-cell wrap bonds are dressed; chains whose hopping range
    crosses the boundary further than one cell need a hand-built family.
    """

    base: np.ndarray
    cells: int
    internal_dim: int = 1

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=complex)
        n = self.base.shape[0]
        if self.base.ndim != 2 or self.base.shape[1] != n:
            raise InvalidParams("flux loop needs a square matrix")
        if self.cells * self.internal_dim != n:
            raise InvalidParams(
                f"cells*internal_dim = {self.cells}*{self.internal_dim} != {n}"
            )

    def __call__(self, theta: float) -> np.ndarray:
        h = self.base.copy()
        d = self.internal_dim
        last = slice((self.cells - 1) * d, self.cells * d)
        first = slice(0, d)
        h[last, first] = h[last, first] * np.exp(1j * theta)
        h[first, last] = h[first, last] * np.exp(-1j * theta)
        return h


def _phase_accumulation(family, e0: complex, grid: int) -> float:
    thetas = 2.0 * np.pi * np.arange(grid) / grid
    phases = np.empty(grid)
    for j, th in enumerate(thetas):
        h = np.asarray(family(float(th)), dtype=complex)
        a = h - e0 * np.eye(h.shape[0])
        sign, logabs = np.linalg.slogdet(a)
        # |det| shrinks exponentially with matrix size even far from any
        # eigenvalue, so the underflow test uses the geometric-mean
        # distance |det|^(1/n) of the spectrum from E0.
        if sign == 0 or not math.isfinite(logabs) or (
            logabs / a.shape[0] < math.log(1e-12)
        ):
            raise BaseEnergyOnSpectrum(
                f"det[H(theta)-E0] magnitude underflows at theta={th:.6f}; "
                f"E0={e0} sits on (or too close to) the spectrum"
            )
        phases[j] = np.angle(sign)
    inc = np.diff(np.concatenate([phases, phases[:1]]))
    inc = (inc + np.pi) % (2.0 * np.pi) - np.pi
    return float(np.sum(inc) / (2.0 * np.pi))


def spectral_winding(
    family: Callable[[float], np.ndarray],
    e0: complex | None = None,
    grid: int = 64,
    max_grid: int = 4096,
) -> WindingResult:
    """Winding of det[H(theta) - E0] around zero as theta runs one loop.

    family must be 2 pi periodic in theta. E0 defaults to the spectral
    centroid of family(0). The determinant phase is accumulated over the
    discretized loop with grid doubling until the value is quantized.
    """
    if e0 is None:
        h0 = np.asarray(family(0.0), dtype=complex)
        e0 = complex(np.mean(np.linalg.eigvals(h0)))
    e0 = complex(e0)

    raw_prev = None
    n = int(grid)
    while True:
        raw = _phase_accumulation(family, e0, n)
        value, dev = _quantize(raw, 1.0)
        delta = abs(raw - raw_prev) if raw_prev is not None else 0.0
        if dev <= QUANTIZATION_TOL and (raw_prev is None or delta <= QUANTIZATION_TOL):
            return WindingResult(value=value, raw=raw, deviation=dev, grid=n,
                                 grid_delta=delta)
        if 2 * n > max_grid:
            if dev > 0.1:
                raise NonConvergent(
                    f"spectral winding deviation {dev:.3g} at grid cap {n}"
                )
            return WindingResult(value=value, raw=raw, deviation=dev, grid=n,
                                 grid_delta=delta)
        raw_prev = raw
        n *= 2


# ---------------------------------------------------------------------------
# frame windings from Bloch families
# ---------------------------------------------------------------------------


def _band_projector_stack(us: np.ndarray) -> np.ndarray:
    """Q(k) = sum_n sgn(Re E_n) |n><n~| for a stack of propagators us (n,d,d)."""
    evals, vr = np.linalg.eig(us)
    re_e = -np.angle(evals)  # Re of the principal quasienergy, up to 1/period
    if np.min(np.abs(re_e)) < GAPLESS_TOL:
        j = int(np.argmin(np.abs(re_e).min(axis=1)))
        raise GaplessAtSample(
            f"Re E within {GAPLESS_TOL:g} of zero at sample {j}; "
            "the band sign is undefined at a gap closing"
        )
    signs = np.sign(re_e)
    vl = np.linalg.inv(vr)
    return (vr * signs[:, None, :]) @ vl


def _lift_sign_flips(qs: np.ndarray) -> tuple[np.ndarray, float]:
    """Continuous lift of a projector-difference loop defined up to +-Q.

    Returns the lifted stack and the loop monodromy (+1 periodic,
    -1 antiperiodic).
    """
    n, d, _ = qs.shape
    overlaps = np.einsum("nij,nji->n", qs, np.roll(qs, -1, axis=0)).real / d
    flips = overlaps < 0.0
    signs = np.ones(n)
    for j in range(n - 1):
        signs[j + 1] = -signs[j] if flips[j] else signs[j]
    monodromy = -signs[-1] if flips[-1] else signs[-1]
    return qs * signs[:, None, None], float(monodromy)


def _chiral_loop_integral(qs: np.ndarray, s: np.ndarray) -> float:
    """(i / 8 pi) sum_j tr[S Q_j (Q_{j+1} - Q_{j-1})] over a closed loop,
    allowing the lift to be antiperiodic."""
    lifted, monodromy = _lift_sign_flips(qs)
    nxt = np.roll(lifted, -1, axis=0)
    prv = np.roll(lifted, 1, axis=0)
    nxt[-1] = monodromy * lifted[0]
    prv[0] = monodromy * lifted[-1]
    diff = nxt - prv
    total = np.einsum("ij,njk,nki->", s, lifted, diff)
    return complex(1j * total / (8.0 * np.pi))


def _winding_with_doubling(
    raw_at: Callable[[int], float],
    grid: int,
    max_grid: int,
    quantum: float,
    label: str,
) -> WindingResult:
    n = int(grid)
    raw_prev = None
    while True:
        raw_c = raw_at(n)
        raw = raw_c.real if isinstance(raw_c, complex) else float(raw_c)
        stray = abs(raw_c.imag) if isinstance(raw_c, complex) else 0.0
        value, dev = _quantize(raw, quantum)
        dev += stray
        delta = abs(raw - raw_prev) if raw_prev is not None else 0.0
        if dev <= QUANTIZATION_TOL and (raw_prev is None or delta <= QUANTIZATION_TOL):
            return WindingResult(value=value, raw=raw, deviation=dev, grid=n,
                                 grid_delta=delta)
        if 2 * n > max_grid:
            raise NonConvergent(
                f"{label} deviation {dev:.3g} (grid delta {delta:.3g}) at "
                f"grid cap {n}"
            )
        raw_prev = raw
        n *= 2


def frame_winding(
    family: BlochFamily,
    frame: Frame = Frame.SYMMETRIC_1,
    grid: int = 512,
    max_grid: int = 8192,
) -> WindingResult:
    """Chiral winding number of a Bloch family in a symmetric time frame.

    Integrates (1/4 pi) dk tr[S Q i dQ/dk] with Q(k) from the biorthogonal
    eigenstates of U(k) in the requested frame, by central differences of
    the sign-lifted Q. The result is quantized to the nearest half-integer.
    """
    if family.chiral_op is None:
        raise InvalidParams("frame winding needs the family's chiral operator")
    s = family.chiral_op

    def raw_at(n: int) -> complex:
        ks = -np.pi + 2.0 * np.pi * np.arange(n) / n
        us = family.u_batch(ks, frame)
        qs = _band_projector_stack(us)
        return _ORIENT * _chiral_loop_integral(qs, s)

    return _winding_with_doubling(raw_at, grid, max_grid, 0.5, "frame winding")


def combine_windings(w1, w2) -> tuple[float, float]:
    """Winding pair at the two gap targets from the two frame windings."""
    a = float(w1.value if isinstance(w1, WindingResult) else w1)
    b = float(w2.value if isinstance(w2, WindingResult) else w2)
    return (a + b) / 2.0, (a - b) / 2.0


# ---------------------------------------------------------------------------
# open-bulk (real-space) winding
# ---------------------------------------------------------------------------


def open_bulk_winding(
    op: FloquetOperator,
    edge_fraction: float = 0.25,
    e_tol: float = 0.05,
    loc_threshold: float = 0.6,
) -> WindingResult:
    """Real-space winding of an open chain from its biorthogonal eigenstates.

    W = -(1/L_B) Tr_B(S Q [Q, N]) with N the unit-cell position operator,
    Q assembled from bulk eigenstates with band sign sgn(Re E), and the
    trace restricted to the central L - 2*floor(edge_fraction*L) cells.
    L_B counts bulk degrees of freedom (cells times internal dimension):
    with that normalization the clean Hermitian limit reduces exactly to
    the Bloch frame winding, which fixes the convention ([Q, N] maps to
    -i dQ/dk under Fourier transform, so a per-cell normalization would
    double-count the two-band trace).

    Eigenstates inside the zero/pi gap windows that are localized at the
    edges (the boundary modes the invariant predicts) are excluded from
    Q; their Re E sits at a band-sign boundary by construction.
    """
    if op.boundary is not Boundary.OBC:
        raise InvalidParams("open-bulk winding is defined for open boundaries")
    if op.chiral_op is None:
        raise InvalidParams("open-bulk winding needs the chiral operator")
    cells, d = op.cells, op.internal_dim
    edge_cells = int(math.floor(edge_fraction * cells))
    bulk_cells = cells - 2 * edge_cells
    if edge_cells < 1 or bulk_cells < 2:
        raise EdgeWindowTooSmall(
            f"edge_fraction={edge_fraction} leaves edge={edge_cells}, "
            f"bulk={bulk_cells} cells on a chain of {cells}"
        )

    dec = eig_biorthogonal(op.matrix)
    e_phase = principal_quasienergy(dec.eigenvalues, 1.0)
    profile = mode_profile_1d(dec.right_vectors, cells, d)
    edge_w = edge_weight(profile)
    in_gap = np.minimum(circle_gap(e_phase, 0.0), circle_gap(e_phase, np.pi))
    boundary_like = (in_gap < e_tol) & (edge_w > loc_threshold)
    bulk = ~boundary_like

    re_e = e_phase.real[bulk]
    if re_e.size == 0:
        raise GaplessAtZero("no bulk states left after boundary-mode removal")
    if np.min(np.abs(re_e)) < GAPLESS_TOL:
        raise GaplessAtZero(
            "an open-chain bulk eigenvalue has |Re E| below the gapless "
            "tolerance; band signs are ambiguous"
        )

    signs = np.sign(re_e)
    vr = dec.right_vectors[:, bulk]
    vl = dec.left_vectors[:, bulk]
    q = (vr * signs) @ vl.conj().T
    n_op = np.repeat(np.arange(cells, dtype=float), d)
    comm = q * n_op[None, :] - n_op[:, None] * q  # [Q, N]
    w_mat = op.chiral_op @ q @ comm
    bulk_dof = bulk_cells * d
    diag = np.real(np.diagonal(w_mat)).reshape(cells, d).sum(axis=1)
    raw_c = -np.sum(diag[edge_cells : cells - edge_cells]) / bulk_dof
    stray = abs(np.imag(np.diagonal(w_mat)).reshape(cells, d).sum(axis=1)[
        edge_cells : cells - edge_cells
    ].sum()) / bulk_dof
    raw = _ORIENT * float(raw_c)
    value, dev = _quantize(raw, 1.0)
    return WindingResult(value=value, raw=raw, deviation=dev + stray, grid=cells)


# ---------------------------------------------------------------------------
# non-Bloch winding on the generalized momentum circle
# ---------------------------------------------------------------------------


def non_bloch_winding(
    mu: float,
    omega: float,
    gamma: float,
    grid: int = 512,
    max_grid: int = 8192,
) -> WindingResult:
    """Winding of the driven two-level chain over its generalized zone.

    The squared band function a beta^2 + b beta + c fixes a circular
    generalized zone of radius r; the integrand tr[S Q dQ] is evaluated on
    beta = r e^{i phi} with Q = (hx sx + hz sz)/E and the same sign-lift
    used for frame windings.
    """
    from .models import two_level_analytics

    analytics = two_level_analytics(mu, omega, gamma)
    r = analytics.gbz_radius()

    def raw_at(n: int) -> complex:
        phi = 2.0 * np.pi * np.arange(n) / n
        beta = r * np.exp(1j * phi)
        hx = (beta - 1.0 / beta) / 2j + 0.5j * gamma
        hz = mu - omega / 2.0 + (beta + 1.0 / beta) / 2.0
        e2 = hx**2 + hz**2
        scale = max(1.0, float(np.max(np.abs(e2))))
        if np.min(np.abs(e2)) < 1e-12 * scale:
            j = int(np.argmin(np.abs(e2)))
            raise EPOnGBZ(
                f"bands coalesce on the generalized zone at phi={phi[j]:.6f}"
            )
        e = np.sqrt(e2)
        qs = np.empty((n, 2, 2), dtype=complex)
        qs[:, 0, 0] = hz / e
        qs[:, 0, 1] = hx / e
        qs[:, 1, 0] = hx / e
        qs[:, 1, 1] = -hz / e
        return _ORIENT * _chiral_loop_integral(qs, SIGMA_Y)

    return _winding_with_doubling(
        raw_at, grid, max_grid, 1.0, "non-Bloch winding"
    )


# ---------------------------------------------------------------------------
# gap functions and mode counting
# ---------------------------------------------------------------------------


def circle_gap(e, target: float) -> np.ndarray:
    """Distance of quasienergies from `target` on the quasienergy circle,
    in units of pi: sqrt(wrap(Re E - target)^2 + (Im E)^2) / pi."""
    e = np.asarray(e, dtype=complex)
    dre = (e.real - target + np.pi) % (2.0 * np.pi) - np.pi
    return np.sqrt(dre**2 + e.imag**2) / np.pi


@dataclass
class GapReport:
    """Gap functions of a quasienergy spectrum at the standard targets."""

    f_zero: np.ndarray
    f_pi: np.ndarray
    f_eps: dict[float, np.ndarray]
    min_f_zero: float
    min_f_pi: float
    n_zero: int
    n_pi: int
    n_frac: dict[float, int]
    threshold: float
    mode_states: np.ndarray | None = None


def gap_functions(
    spectrum,
    targets: Sequence[float] = (),
    threshold: float = 0.05,
) -> GapReport:
    """Gap functions F_0, F_pi and the raw F_eps for extra targets.

    F_0 = |E|/pi and F_pi = sqrt((|Re E|-pi)^2 + Im E^2)/pi vanish on
    zero/pi modes; F_eps = sqrt((Re E - eps)^2 + Im E^2) is the unscaled
    distance used for fractional targets. Counts are the number of states
    with the respective function below `threshold` (no localization
    filter; see count_boundary_modes for the full criterion).
    """
    e = np.asarray(spectrum, dtype=complex)
    f0 = np.sqrt(e.real**2 + e.imag**2) / np.pi
    fpi = np.sqrt((np.abs(e.real) - np.pi) ** 2 + e.imag**2) / np.pi
    feps = {
        float(t): np.sqrt((e.real - float(t)) ** 2 + e.imag**2) for t in targets
    }
    return GapReport(
        f_zero=f0,
        f_pi=fpi,
        f_eps=feps,
        min_f_zero=float(f0.min()) if f0.size else math.inf,
        min_f_pi=float(fpi.min()) if fpi.size else math.inf,
        n_zero=int(np.sum(f0 < threshold)),
        n_pi=int(np.sum(fpi < threshold)),
        n_frac={t: int(np.sum(v < threshold)) for t, v in feps.items()},
        threshold=threshold,
    )


def mode_profile_1d(vectors: np.ndarray, cells: int, internal_dim: int) -> np.ndarray:
    """Per-cell probability profile of each eigenvector column.

    Returns shape (n_states, cells); rows sum to 1.
    """
    v = np.asarray(vectors)
    prob = np.abs(v) ** 2
    prob = prob.reshape(cells, internal_dim, -1).sum(axis=1).T
    norm = prob.sum(axis=1, keepdims=True)
    norm[norm == 0] = 1.0
    return prob / norm


def mode_profile_2d(
    vectors: np.ndarray, cells_x: int, cells_y: int, dx: int = 2, dy: int = 2
) -> np.ndarray:
    """Per-site probability on a 2D lattice with tensor-product layout.

    The state index is (ix*dx + a)*(cells_y*dy) + (iy*dy + b); returns
    shape (n_states, cells_x, cells_y), normalized per state.
    """
    v = np.asarray(vectors)
    n_states = v.shape[1]
    prob = (np.abs(v) ** 2).T.reshape(n_states, cells_x, dx, cells_y, dy)
    prob = prob.sum(axis=(2, 4))
    norm = prob.sum(axis=(1, 2), keepdims=True)
    norm[norm == 0] = 1.0
    return prob / norm


def edge_weight(profile: np.ndarray, fraction: float = 0.1) -> np.ndarray:
    """Probability in the outer `fraction` of cells at each end."""
    cells = profile.shape[1]
    w = max(1, int(math.floor(fraction * cells)))
    return profile[:, :w].sum(axis=1) + profile[:, cells - w :].sum(axis=1)


def corner_weight(profile: np.ndarray, fraction: float = 0.1) -> np.ndarray:
    """Probability in the four fraction x fraction corner windows."""
    nx, ny = profile.shape[1], profile.shape[2]
    wx = max(1, int(math.floor(fraction * nx)))
    wy = max(1, int(math.floor(fraction * ny)))
    mask_x = np.zeros(nx, dtype=bool)
    mask_x[:wx] = mask_x[nx - wx :] = True
    mask_y = np.zeros(ny, dtype=bool)
    mask_y[:wy] = mask_y[ny - wy :] = True
    corner = np.outer(mask_x, mask_y)
    return (profile * corner[None, :, :]).sum(axis=(1, 2))


@dataclass
class ModeCount:
    """Result of a boundary/corner mode count with margin diagnostics."""

    count: int
    indices: np.ndarray
    gap_values: np.ndarray
    weights: np.ndarray
    ambiguous: list[int]
    e_tol: float
    loc_threshold: float

    def __int__(self) -> int:
        return self.count


def count_modes(
    eigenvalues,
    weights,
    target: float,
    e_tol: float = 0.05,
    loc_threshold: float = 0.6,
) -> ModeCount:
    """Count eigenstates near the quasienergy target that live on the boundary.

    weights is the per-state boundary weight (edge or corner probability).
    A state counts when its circle gap at the target is below e_tol and
    its weight exceeds loc_threshold. States within 10% of either
    threshold are listed as ambiguous (counted by the strict criterion).
    """
    e = np.asarray(eigenvalues, dtype=complex)
    w = np.asarray(weights, dtype=float)
    gap = circle_gap(e, target)
    selected = (gap < e_tol) & (w > loc_threshold)
    near_gap = (gap > 0.9 * e_tol) & (gap < 1.1 * e_tol)
    near_loc = (gap < 1.1 * e_tol) & (w > 0.9 * loc_threshold) & (w < 1.1 * loc_threshold)
    ambiguous = sorted(set(np.nonzero(near_gap | near_loc)[0].tolist()))
    idx = np.nonzero(selected)[0]
    return ModeCount(
        count=int(idx.size),
        indices=idx,
        gap_values=gap[idx],
        weights=w[idx],
        ambiguous=ambiguous,
        e_tol=e_tol,
        loc_threshold=loc_threshold,
    )


def count_boundary_modes(
    op: FloquetOperator,
    target: float,
    e_tol: float = 0.05,
    loc_threshold: float = 0.6,
    decomposition=None,
) -> ModeCount:
    """Boundary-mode count of an open chain at one quasienergy target.

    Pass `decomposition` (from eig_biorthogonal) to reuse a factorization
    across several targets.
    """
    if op.boundary is not Boundary.OBC:
        raise InvalidParams("boundary modes are counted on open chains")
    dec = decomposition if decomposition is not None else eig_biorthogonal(op.matrix)
    e_phase = principal_quasienergy(dec.eigenvalues, 1.0)
    profile = mode_profile_1d(dec.right_vectors, op.cells, op.internal_dim)
    return count_modes(e_phase, edge_weight(profile), target, e_tol, loc_threshold)


def count_corner_modes(
    op: FloquetOperator,
    cells_x: int,
    cells_y: int,
    target: float,
    e_tol: float = 0.05,
    loc_threshold: float = 0.6,
    dx: int = 2,
    dy: int = 2,
    decomposition=None,
) -> ModeCount:
    """Corner-mode count of an open 2D lattice at one quasienergy target."""
    if op.boundary is not Boundary.OBC:
        raise InvalidParams("corner modes are counted on open lattices")
    dec = decomposition if decomposition is not None else eig_biorthogonal(op.matrix)
    e_phase = principal_quasienergy(dec.eigenvalues, 1.0)
    profile = mode_profile_2d(dec.right_vectors, cells_x, cells_y, dx, dy)
    return count_modes(e_phase, corner_weight(profile), target, e_tol, loc_threshold)


# ---------------------------------------------------------------------------
# Chern number on a parameter torus
# ---------------------------------------------------------------------------


def hamiltonian_band(
    h_fn: Callable[[float, float], np.ndarray],
    band: int,
) -> Callable[[float, float], tuple[np.ndarray, np.ndarray]]:
    """Band-state sampler for chern_number from a Hamiltonian function.

    Bands are ordered by ascending Re of the eigenvalue; returns the
    (right, left) biorthogonal pair of the chosen band at each point.
    """

    def states(k: float, t: float) -> tuple[np.ndarray, np.ndarray]:
        dec = eig_biorthogonal(h_fn(k, t))
        order = np.argsort(dec.eigenvalues.real, kind="stable")
        j = order[band]
        return dec.right_vectors[:, j], dec.left_vectors[:, j]

    return states


def chern_number(
    band_states: Callable[[float, float], tuple[np.ndarray, np.ndarray]],
    grid: tuple[int, int] = (24, 24),
    max_grid: int = 192,
) -> WindingResult:
    """Chern number of one biorthogonal band over a 2-torus.

    band_states(k, t) returns the (right, left) states of the band.
    Plaquette field strengths are built from biorthogonal link overlaps
    <l~(x)|r(x')>; the lattice field strength sums to an exact integer
    whenever every link is nonzero, so grid refinement only needs to
    confirm stability of that integer.
    """

    def compute(nk: int, nt: int) -> float:
        ks = -np.pi + 2.0 * np.pi * np.arange(nk) / nk
        ts = 2.0 * np.pi * np.arange(nt) / nt
        rights = np.empty((nk, nt), dtype=object)
        lefts = np.empty((nk, nt), dtype=object)
        for i, k in enumerate(ks):
            for j, t in enumerate(ts):
                r, l = band_states(float(k), float(t))
                rights[i, j] = np.asarray(r, dtype=complex)
                lefts[i, j] = np.asarray(l, dtype=complex)

        def link(i1, j1, i2, j2) -> complex:
            ov = np.vdot(lefts[i1, j1], rights[i2, j2])
            if abs(ov) < 1e-6:
                raise GapClosureOnTorus(
                    f"band link overlap {abs(ov):.2e} at plaquette "
                    f"({i1},{j1})-({i2},{j2}); the band touches another"
                )
            return ov

        total = 0.0
        for i in range(nk):
            i2 = (i + 1) % nk
            for j in range(nt):
                j2 = (j + 1) % nt
                u = (
                    link(i, j, i2, j)
                    * link(i2, j, i2, j2)
                    * link(i2, j2, i, j2)
                    * link(i, j2, i, j)
                )
                total += np.angle(u)
        # Orientation calibrated so a charge pump whose lower band carries
        # one pumped particle per cycle reports +1.
        return -total / (2.0 * np.pi)

    nk, nt = int(grid[0]), int(grid[1])
    raw_prev = None
    while True:
        raw = compute(nk, nt)
        value, dev = _quantize(raw, 1.0)
        delta = abs(raw - raw_prev) if raw_prev is not None else 0.0
        if dev <= QUANTIZATION_TOL and (raw_prev is None or delta <= QUANTIZATION_TOL):
            return WindingResult(value=value, raw=raw, deviation=dev,
                                 grid=nk, grid_delta=delta)
        if 2 * max(nk, nt) > max_grid:
            raise NonConvergent(
                f"Chern deviation {dev:.3g} at grid cap ({nk},{nt})"
            )
        raw_prev = raw
        nk *= 2
        nt *= 2


# ---------------------------------------------------------------------------
# aggregate report
# ---------------------------------------------------------------------------


@dataclass
class InvariantReport:
    """Everything the invariant tasks can report for one parameter point."""

    w_spectral: float | None = None
    base_energy: complex | None = None
    w0: float | None = None
    w_pi: float | None = None
    frame_1: WindingResult | None = None
    frame_2: WindingResult | None = None
    open_w0: float | None = None
    open_w_pi: float | None = None
    w_nonbloch: float | None = None
    chern: float | None = None
    grids: dict = field(default_factory=dict)
    deltas: dict = field(default_factory=dict)
