"""Concrete driven-lattice models: descriptors, builders, closed-form analytics.

Conventions used by every builder here:

- Bloch transform: a chain with uniform blocks H[cell n, cell n+m] = B_m has
  Bloch matrix H(k) = sum_m B_m exp(i k m). Real-space builders place the
  same blocks, wrapping cell indices modulo the cell count under periodic
  boundaries and dropping out-of-range bonds under open ones.
- Internal index is fastest: state index = cell * internal_dim + orbital.
- Two-part drives expose exponents (A, B) with U = exp(-iA) exp(-iB), the
  B part acting first in time (see protocols/engine for the frame rules).
- Quasiperiodic potentials cos(2 pi alpha n + offset) use site coordinates
  n = 0 .. cells-1 and store alpha as an exact rational; under periodic
  boundaries the denominator must equal the cell count so the potential
  closes smoothly around the ring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import j0 as bessel_j0

from .engine import floquet_piecewise, floquet_split_operator
from .errors import (
    DimensionMismatch,
    GBZIllDefined,
    InvalidParams,
    NoRootInBracket,
    UnsupportedCombination,
)
from .linalg import matrix_exp, principal_quasienergy
from .protocols import (
    BlochFamily,
    Boundary,
    DrivingProtocol,
    FloquetOperator,
    Frame,
    HarmonicFourier,
    Kicked,
    PiecewiseConstant,
)
from .twoband import SIGMA_0, SIGMA_X, SIGMA_Y, SIGMA_Z, pauli_compose

__all__ = [
    "ModelId",
    "ModelDescriptor",
    "BuiltModel",
    "BlochFamily2D",
    "build",
    "parameter_schema",
    "chain_hamiltonian",
    "two_level_analytics",
    "TwoLevelAnalytics",
    "dimerized_dispersion",
    "cubic_root",
    "quasicrystal_analytics",
    "QuasicrystalAnalytics",
    "soti_y_family",
    "soti_x_winding",
]


class ModelId(str, Enum):
    HarmonicTwoLevel = "HarmonicTwoLevel"
    QuenchedDimerized = "QuenchedDimerized"
    QuenchedNHSSH = "QuenchedNHSSH"
    SOTI2D = "SOTI2D"
    CubicRoot = "CubicRoot"
    KickedKitaev = "KickedKitaev"
    HarmonicHatanoNelsonQC = "HarmonicHatanoNelsonQC"
    KickedHatanoNelsonQC = "KickedHatanoNelsonQC"
    GenericQuadraticLattice = "GenericQuadraticLattice"


# Parameter schemas: name -> (kind, default). A default of REQUIRED marks a
# mandatory parameter. Kinds: "real", "complex", "positive" (real > 0),
# "fraction" (rational 0 < p/q < 1), "site_values" (scalar or 1D array).
_REQUIRED = object()

_SCHEMAS: dict[ModelId, dict[str, tuple[str, object]]] = {
    ModelId.HarmonicTwoLevel: {
        "mu": ("real", _REQUIRED),
        "omega": ("positive", _REQUIRED),
        "gamma": ("real", _REQUIRED),
    },
    ModelId.QuenchedDimerized: {
        "mu": ("real", _REQUIRED),
        "r_x": ("real", _REQUIRED),
        "r_y": ("real", _REQUIRED),
        "gamma": ("real", _REQUIRED),
    },
    ModelId.QuenchedNHSSH: {
        "mu": ("real", _REQUIRED),
        "J1": ("real", _REQUIRED),
        "J2": ("real", _REQUIRED),
        "lambda": ("real", _REQUIRED),
    },
    ModelId.SOTI2D: {
        "Delta": ("real", _REQUIRED),
        "J1": ("real", _REQUIRED),
        "J2": ("real", _REQUIRED),
        "u": ("real", _REQUIRED),
        "v": ("real", _REQUIRED),
        # flat-band internal structure J = delta = Delta/2 is the validated
        # default; passing either explicitly flags the build as unvalidated.
        "J": ("real", None),
        "delta": ("real", None),
    },
    ModelId.CubicRoot: {
        "mu": ("real", _REQUIRED),
        "J1": ("real", _REQUIRED),
        "J2": ("real", _REQUIRED),
        "lambda": ("real", _REQUIRED),
    },
    ModelId.KickedKitaev: {
        "J": ("complex", _REQUIRED),
        "Delta": ("complex", _REQUIRED),
        "mu": ("complex", _REQUIRED),
    },
    ModelId.HarmonicHatanoNelsonQC: {
        "J": ("real", _REQUIRED),
        "V": ("real", _REQUIRED),
        "K": ("real", _REQUIRED),
        "omega": ("positive", _REQUIRED),
        "gamma": ("real", _REQUIRED),
        "alpha": ("fraction", _REQUIRED),
        "offset": ("real", 0.0),
    },
    ModelId.KickedHatanoNelsonQC: {
        "J": ("real", _REQUIRED),
        "V": ("real", _REQUIRED),
        "gamma": ("real", _REQUIRED),
        "alpha": ("fraction", _REQUIRED),
        "offset": ("real", 0.0),
    },
    ModelId.GenericQuadraticLattice: {
        "J": ("site_values", _REQUIRED),
        "gamma": ("site_values", _REQUIRED),
        "V": ("site_values", 0.0),
    },
}

_QUASICRYSTAL_IDS = (ModelId.HarmonicHatanoNelsonQC, ModelId.KickedHatanoNelsonQC)


def _coerce_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        frac = value
    elif isinstance(value, (tuple, list)) and len(value) == 2:
        frac = Fraction(int(value[0]), int(value[1]))
    elif isinstance(value, str):
        frac = Fraction(value)
    elif isinstance(value, int):
        frac = Fraction(value)
    else:
        raise InvalidParams(
            f"quasiperiodic ratio must be an exact rational, got {value!r}"
        )
    if not (0 < frac < 1):
        raise InvalidParams(f"quasiperiodic ratio must lie in (0, 1), got {frac}")
    return frac


def _is_fibonacci_pair(p: int, q: int) -> bool:
    """True when (p, q) are consecutive Fibonacci numbers."""
    a, b = 1, 1
    while b < q:
        a, b = b, a + b
    return b == q and a == p


def _check_scalar(name: str, kind: str, value):
    if kind in ("real", "positive"):
        if isinstance(value, complex):
            if value.imag != 0:
                raise InvalidParams(f"parameter '{name}' must be real, got {value}")
            value = value.real
        value = float(value)
        if kind == "positive" and value <= 0:
            raise InvalidParams(f"parameter '{name}' must be positive, got {value}")
        return value
    if kind == "complex":
        return complex(value)
    raise AssertionError(kind)


@dataclass
class ModelDescriptor:
    """Which model to build, with what parameters, on what lattice.

    cells is the number of unit cells for real-space builds; None selects
    the momentum-space family (periodic boundaries only). 2D models use
    cells_x / cells_y instead.
    """

    model_id: ModelId
    params: dict
    boundary: Boundary = Boundary.PBC
    cells: int | None = None
    cells_x: int | None = None
    cells_y: int | None = None

    def __post_init__(self):
        self.model_id = ModelId(self.model_id)
        schema = _SCHEMAS[self.model_id]
        unknown = sorted(set(self.params) - set(schema))
        if unknown:
            raise InvalidParams(
                f"{self.model_id.value}: unknown parameter(s) {', '.join(unknown)}"
            )
        missing = sorted(
            name
            for name, (_, default) in schema.items()
            if default is _REQUIRED and name not in self.params
        )
        if missing:
            raise InvalidParams(
                f"{self.model_id.value}: missing parameter(s) {', '.join(missing)}"
            )
        clean = {}
        for name, (kind, default) in schema.items():
            if name not in self.params:
                if default is _REQUIRED or default is None:
                    continue
                clean[name] = default
                continue
            value = self.params[name]
            if kind == "fraction":
                clean[name] = _coerce_fraction(value)
            elif kind == "site_values":
                arr = np.asarray(value, dtype=complex)
                if arr.ndim > 1:
                    raise InvalidParams(f"parameter '{name}' must be scalar or 1D")
                clean[name] = complex(arr) if arr.ndim == 0 else arr
            else:
                clean[name] = _check_scalar(name, kind, value)
        self.params = clean

        if self.model_id is ModelId.SOTI2D:
            if self.cells is not None:
                raise InvalidParams("SOTI2D uses cells_x/cells_y, not cells")
            if (self.cells_x is None) != (self.cells_y is None):
                raise InvalidParams("give both cells_x and cells_y or neither")
        else:
            if self.cells_x is not None or self.cells_y is not None:
                raise InvalidParams(
                    f"{self.model_id.value} is one-dimensional; use cells"
                )

        if self.model_id in _QUASICRYSTAL_IDS:
            if self.cells is None:
                raise InvalidParams(
                    "quasiperiodic models have no Bloch form; give cells"
                )
            alpha: Fraction = self.params["alpha"]
            if self.boundary is Boundary.PBC:
                if self.cells != alpha.denominator:
                    raise InvalidParams(
                        f"periodic quasiperiodic chain needs cells = "
                        f"{alpha.denominator} (the ratio denominator), "
                        f"got {self.cells}"
                    )
                if not _is_fibonacci_pair(alpha.numerator, alpha.denominator):
                    raise InvalidParams(
                        f"ratio {alpha} is not a Fibonacci convergent; "
                        "periodic approximants require consecutive "
                        "Fibonacci numbers"
                    )
        if self.model_id is ModelId.GenericQuadraticLattice and self.cells is None:
            raise InvalidParams("GenericQuadraticLattice needs cells")

        for n in ("cells", "cells_x", "cells_y"):
            val = getattr(self, n)
            if val is not None and int(val) < 3:
                raise InvalidParams(f"{n} must be at least 3, got {val}")


@dataclass
class BlochFamily2D:
    """Momentum-space propagator family U(k_x, k_y) on a 2D torus."""

    internal_dim: int
    matrix_fn: Callable[[float, float], np.ndarray]
    chiral_op: np.ndarray | None = None
    period: float = 1.0
    name: str = ""

    def u(self, kx: float, ky: float) -> np.ndarray:
        m = np.asarray(self.matrix_fn(float(kx), float(ky)), dtype=complex)
        if m.shape != (self.internal_dim, self.internal_dim):
            raise DimensionMismatch(
                f"2D family returned shape {m.shape}, expected "
                f"({self.internal_dim}, {self.internal_dim})"
            )
        return m


@dataclass
class BuiltModel:
    """Everything build() produces for one descriptor.

    Momentum-space builds fill `bloch` (or `bloch_2d`); real-space builds
    fill `protocol` and, when the one-period propagator has an exact
    product or closed form, `operator`. `protocol_at` gives the
    momentum-resolved drive of continuously driven models. Static models
    also expose their Hamiltonian directly.
    """

    descriptor: ModelDescriptor
    protocol: DrivingProtocol | None = None
    bloch: BlochFamily | None = None
    bloch_2d: BlochFamily2D | None = None
    operator: FloquetOperator | None = None
    protocol_at: Callable[[float], DrivingProtocol] | None = None
    static_hamiltonian: np.ndarray | None = None
    flagged_unvalidated: bool = False


def chain_hamiltonian(
    blocks: Mapping[int, np.ndarray],
    cells: int,
    boundary: Boundary,
) -> np.ndarray:
    """Assemble a chain Hamiltonian from uniform hopping blocks.

    blocks maps the cell offset m to the block placed at
    H[cell n, cell n+m]; periodic boundaries wrap the cell index, open
    ones drop the bond. Scalars are treated as 1x1 blocks.
    """
    mats = {}
    dim = None
    for m, b in blocks.items():
        arr = np.atleast_2d(np.asarray(b, dtype=complex))
        if arr.shape[0] != arr.shape[1]:
            raise DimensionMismatch(f"block at offset {m} is not square")
        if dim is None:
            dim = arr.shape[0]
        elif arr.shape[0] != dim:
            raise DimensionMismatch("all chain blocks must share one dimension")
        mats[int(m)] = arr
    if dim is None:
        raise InvalidParams("no blocks given")
    reach = max(abs(m) for m in mats)
    if boundary is Boundary.PBC and cells <= 2 * reach:
        raise InvalidParams(
            f"periodic chain of {cells} cells is too short for hopping "
            f"range {reach}; bonds would double-wrap"
        )
    h = np.zeros((cells * dim, cells * dim), dtype=complex)
    for m, b in mats.items():
        for n in range(cells):
            n2 = n + m
            if not 0 <= n2 < cells:
                if boundary is Boundary.OBC:
                    continue
                n2 %= cells
            h[n * dim : (n + 1) * dim, n2 * dim : (n2 + 1) * dim] += b
    return h


def _site_chiral(op: np.ndarray, cells: int) -> np.ndarray:
    return np.kron(np.eye(cells), op)


# ---------------------------------------------------------------------------
# harmonically driven two-level chain
# ---------------------------------------------------------------------------


def _two_level_rotating_exponent(mu, omega, gamma, x_op, z_op, ident):
    """The static rotating-frame generator of the circularly driven chain.

    The drive (x_op + i gamma/2)(cos wt sx + sin wt sy) + z_op sz becomes
    time independent after the rotation exp(i w t sz / 2); over one period
    the frame returns with a factor exp(-i pi sz) = -1, so
        U(T) = -exp(-i H_rot T),   H_rot = hx sx + (hz - w/2) sz.
    """
    hx = np.kron(x_op + 0.5j * gamma * ident, SIGMA_X)
    hz = np.kron(z_op - 0.5 * omega * ident, SIGMA_Z)
    return hx + hz


def _build_harmonic_two_level(d: ModelDescriptor) -> BuiltModel:
    mu, omega, gamma = d.params["mu"], d.params["omega"], d.params["gamma"]
    period = 2.0 * np.pi / omega

    def drive_at(k: float) -> HarmonicFourier:
        hx = math.sin(k) + 0.5j * gamma
        h0 = (mu + math.cos(k)) * SIGMA_Z
        v_plus = hx * (SIGMA_X - 1j * SIGMA_Y) / 2.0
        v_minus = hx * (SIGMA_X + 1j * SIGMA_Y) / 2.0
        return HarmonicFourier(h0=h0, components={1: v_plus, -1: v_minus}, omega=omega)

    if d.cells is None:
        if d.boundary is not Boundary.PBC:
            raise UnsupportedCombination(
                "momentum-space build requires periodic boundaries; "
                "give cells for an open chain"
            )

        def u_batch_exact(ks):
            ks = np.atleast_1d(np.asarray(ks, dtype=float))
            hx = np.sin(ks) + 0.5j * gamma
            hz = mu + np.cos(ks) - omega / 2.0
            h_rot = pauli_compose(np.zeros_like(hz), hx, np.zeros_like(hx), hz)
            from .twoband import expm_minus_i_batch

            return -expm_minus_i_batch(h_rot * period)

        family = BlochFamily(
            internal_dim=2,
            matrix_fn=lambda k: u_batch_exact(k)[0],
            chiral_op=SIGMA_Y,  # chiral op of the shifted effective Hamiltonian
            period=period,
            name="harmonic_two_level",
        )
        return BuiltModel(descriptor=d, bloch=family, protocol_at=drive_at)

    cells = int(d.cells)
    ident = np.eye(cells)
    x_op = chain_hamiltonian({1: -0.5j, -1: 0.5j}, cells, d.boundary)
    z_op = chain_hamiltonian({0: mu, 1: 0.5, -1: 0.5}, cells, d.boundary)

    h0 = np.kron(z_op, SIGMA_Z)
    ladder_dn = (SIGMA_X - 1j * SIGMA_Y) / 2.0
    ladder_up = (SIGMA_X + 1j * SIGMA_Y) / 2.0
    hx_site = x_op + 0.5j * gamma * ident
    protocol = HarmonicFourier(
        h0=h0,
        components={1: np.kron(hx_site, ladder_dn), -1: np.kron(hx_site, ladder_up)},
        omega=omega,
    )

    h_rot = _two_level_rotating_exponent(mu, omega, gamma, x_op, z_op, ident)
    u = -matrix_exp(h_rot, -1j * period)
    op = FloquetOperator(
        matrix=u,
        period=period,
        boundary=d.boundary,
        cells=cells,
        internal_dim=2,
        chiral_op=_site_chiral(SIGMA_Y, cells),
    )
    return BuiltModel(descriptor=d, protocol=protocol, operator=op, protocol_at=drive_at)


# ---------------------------------------------------------------------------
# piecewise-quenched two-band chains
# ---------------------------------------------------------------------------


def _dimerized_exponents(mu, r_x, r_y, gamma):
    def exps(k):
        k = np.asarray(k, dtype=float)
        zero = np.zeros_like(k)
        a = pauli_compose(zero, mu + r_x * np.cos(k), zero, zero)
        b = pauli_compose(zero, zero, r_y * np.sin(k) + 1j * gamma, zero)
        return a, b

    return exps


def _build_quenched_dimerized(d: ModelDescriptor) -> BuiltModel:
    p = d.params
    mu, r_x, r_y, gamma = p["mu"], p["r_x"], p["r_y"], p["gamma"]
    exps = _dimerized_exponents(mu, r_x, r_y, gamma)

    if d.cells is None:
        if d.boundary is not Boundary.PBC:
            raise UnsupportedCombination(
                "momentum-space build requires periodic boundaries"
            )
        family = BlochFamily(
            internal_dim=2,
            exponents=exps,
            exponents_batch=exps,
            chiral_op=SIGMA_Z,
            name="quenched_dimerized",
        )
        return BuiltModel(descriptor=d, bloch=family)

    cells = int(d.cells)
    h_first = chain_hamiltonian(
        {0: 2j * gamma * SIGMA_Y, 1: -1j * r_y * SIGMA_Y, -1: 1j * r_y * SIGMA_Y},
        cells,
        d.boundary,
    )
    h_second = chain_hamiltonian(
        {0: 2 * mu * SIGMA_X, 1: r_x * SIGMA_X, -1: r_x * SIGMA_X},
        cells,
        d.boundary,
    )
    protocol = PiecewiseConstant([(h_first, 0.5), (h_second, 0.5)])
    op = FloquetOperator(
        matrix=floquet_piecewise(protocol),
        boundary=d.boundary,
        cells=cells,
        internal_dim=2,
        chiral_op=_site_chiral(SIGMA_Z, cells),
    )
    return BuiltModel(descriptor=d, protocol=protocol, operator=op)


def _nhssh_segment_blocks(mu, j1, j2, lam):
    """Full-strength segment Hamiltonians of the quenched hopping chain.

    First half: the bond-alternating part along sigma_x; second half: the
    staggered part along sigma_y. Both carry the asymmetric hopping i*lam.
    """
    first = {
        0: 2 * mu * SIGMA_X,
        1: (j1 + lam) * SIGMA_X,
        -1: (j1 - lam) * SIGMA_X,
    }
    second = {
        1: 1j * (lam - j2) * SIGMA_Y,
        -1: 1j * (lam + j2) * SIGMA_Y,
    }
    return first, second


def _nhssh_exponents(mu, j1, j2, lam):
    def exps(k):
        k = np.asarray(k, dtype=float)
        zero = np.zeros_like(k)
        # later factor: the sigma_y part; earlier factor: the sigma_x part
        a = pauli_compose(zero, zero, j2 * np.sin(k) + 1j * lam * np.cos(k), zero)
        b = pauli_compose(zero, mu + j1 * np.cos(k) + 1j * lam * np.sin(k), zero, zero)
        return a, b

    return exps


def _build_quenched_nhssh(d: ModelDescriptor) -> BuiltModel:
    p = d.params
    mu, j1, j2, lam = p["mu"], p["J1"], p["J2"], p["lambda"]
    exps = _nhssh_exponents(mu, j1, j2, lam)

    if d.cells is None:
        if d.boundary is not Boundary.PBC:
            raise UnsupportedCombination(
                "momentum-space build requires periodic boundaries"
            )
        family = BlochFamily(
            internal_dim=2,
            exponents=exps,
            exponents_batch=exps,
            chiral_op=SIGMA_Z,
            name="quenched_nhssh",
        )
        return BuiltModel(descriptor=d, bloch=family)

    cells = int(d.cells)
    first_blocks, second_blocks = _nhssh_segment_blocks(mu, j1, j2, lam)
    h1 = chain_hamiltonian(first_blocks, cells, d.boundary)
    h2 = chain_hamiltonian(second_blocks, cells, d.boundary)
    protocol = PiecewiseConstant([(h1, 0.5), (h2, 0.5)])
    op = FloquetOperator(
        matrix=floquet_piecewise(protocol),
        boundary=d.boundary,
        cells=cells,
        internal_dim=2,
        chiral_op=_site_chiral(SIGMA_Z, cells),
    )
    return BuiltModel(descriptor=d, protocol=protocol, operator=op)


def complex_quench_family(
    u1: float, u2: float, v1: float = 0.0, v2: float = 0.0
) -> BlochFamily:
    """Two-band quench cycle with complexified rotation strengths.

    One period applies a cos(k) sigma_x rotation of strength u1 + i*v1
    followed by a sin(k) sigma_y rotation of strength u2 + i*v2. Large
    real strengths wind the quasienergy bands many times around the
    circle, so this family reaches frame windings of order u1 / pi; the
    imaginary parts make it non-Hermitian without closing the frame gaps
    for moderate v. Chiral operator sigma_z in both symmetric frames.
    """
    j1 = complex(u1, v1)
    j2 = complex(u2, v2)

    def exps(k):
        k = np.asarray(k, dtype=float)
        zero = np.zeros_like(k)
        a = pauli_compose(zero, zero, j2 * np.sin(k), zero)
        b = pauli_compose(zero, j1 * np.cos(k), zero, zero)
        return a, b

    return BlochFamily(
        internal_dim=2,
        exponents=exps,
        exponents_batch=exps,
        chiral_op=SIGMA_Z,
        name="complex_quench",
    )


# ---------------------------------------------------------------------------
# 2D corner-mode model: static x chain (tensor) periodically quenched y chain
# ---------------------------------------------------------------------------


def _soti_x_blocks(params):
    delta_big = params["Delta"]
    j = params.get("J")
    dl = params.get("delta")
    flat = j is None and dl is None
    if flat:
        j = dl = delta_big / 2.0
    sig_plus = np.array([[0, 1], [0, 0]], dtype=complex)
    sig_minus = np.array([[0, 0], [1, 0]], dtype=complex)
    blocks = {1: (j + dl) * sig_minus, -1: (j + dl) * sig_plus}
    if abs(j - dl) > 0:
        blocks[0] = (j - dl) * SIGMA_X
    return blocks, flat


def _soti_y_exponents(j1, j2, u, v):
    def exps(ky):
        ky = np.asarray(ky, dtype=float)
        zero = np.zeros_like(ky)
        a = pauli_compose(zero, zero, zero, (u + 1j * v) + j2 * np.sin(ky))
        b = pauli_compose(zero, j1 * np.cos(ky), zero, zero)
        return a, b

    return exps


def soti_y_family(params: Mapping[str, float]) -> BlochFamily:
    """The periodically quenched y-leg of the 2D model as a two-band family.

    The driving cycle is taken to start with the onsite half-step (the
    tau_z part) and the declared chiral operator is -tau_y. With the loop
    orientation used by the topology module, this labeling puts the
    zero-gap winding in the first symmetric frame, so the combined pair
    (nu_0, nu_pi) counts the corner modes at quasienergies 0 and pi with
    positive sign in the flat-band limit. The 2D builder composes the
    same two half-steps in the complementary order; the two sequencings
    are similar matrices and share their quasienergy spectrum.
    """
    pinned = _soti_y_exponents(params["J1"], params["J2"], params["u"], params["v"])

    def exps(ky):
        onsite, hop = pinned(ky)
        return hop, onsite

    return BlochFamily(
        internal_dim=2,
        exponents=exps,
        exponents_batch=exps,
        chiral_op=-SIGMA_Y,
        name="soti_y_leg",
    )


def soti_x_winding(params: Mapping[str, float]) -> int:
    """Winding of the static x-leg Hamiltonian, in the orientation that
    assigns +1 to the flat-band limit (the calibration used throughout
    the topology module)."""
    delta_big = params["Delta"]
    j = params.get("J")
    dl = params.get("delta")
    if j is None and dl is None:
        j = dl = delta_big / 2.0
    if abs(j + dl) > abs(j - dl):
        return 1
    if abs(j + dl) < abs(j - dl):
        return 0
    raise InvalidParams(
        "x-leg gap closes at |J + delta| = |J - delta|; winding undefined"
    )


def _build_soti(d: ModelDescriptor) -> BuiltModel:
    p = d.params
    delta_big, j1, j2, u, v = p["Delta"], p["J1"], p["J2"], p["u"], p["v"]
    x_blocks, flat = _soti_x_blocks(p)
    y_exps = _soti_y_exponents(j1, j2, u, v)
    chiral_internal = np.kron(SIGMA_Z, SIGMA_Y)

    if d.cells_x is None:
        if d.boundary is not Boundary.PBC:
            raise UnsupportedCombination(
                "momentum-space build requires periodic boundaries"
            )

        def u2d(kx: float, ky: float) -> np.ndarray:
            hx = sum(b * np.exp(1j * kx * m) for m, b in x_blocks.items())
            ux = matrix_exp(hx, -1j)
            a, b = y_exps(ky)
            uy = matrix_exp(a, -1j) @ matrix_exp(b, -1j)
            return np.kron(ux, uy)

        family = BlochFamily2D(
            internal_dim=4, matrix_fn=u2d, chiral_op=chiral_internal, name="soti_2d"
        )
        return BuiltModel(descriptor=d, bloch_2d=family, flagged_unvalidated=not flat)

    nx, ny = int(d.cells_x), int(d.cells_y)
    hx_real = chain_hamiltonian(x_blocks, nx, d.boundary)
    hy_first = chain_hamiltonian({1: j1 * SIGMA_X, -1: j1 * SIGMA_X}, ny, d.boundary)
    hy_second = chain_hamiltonian(
        {0: 2 * (u + 1j * v) * SIGMA_Z, 1: -1j * j2 * SIGMA_Z, -1: 1j * j2 * SIGMA_Z},
        ny,
        d.boundary,
    )
    ux = matrix_exp(hx_real, -1j)
    uy = matrix_exp(hy_second, -0.5j) @ matrix_exp(hy_first, -0.5j)
    u2d = np.kron(ux, uy)

    ix = np.eye(2 * nx)
    iy = np.eye(2 * ny)
    protocol = PiecewiseConstant(
        [
            (np.kron(hx_real, iy) + np.kron(ix, hy_first), 0.5),
            (np.kron(hx_real, iy) + np.kron(ix, hy_second), 0.5),
        ]
    )
    chiral = np.kron(_site_chiral(SIGMA_Z, nx), _site_chiral(SIGMA_Y, ny))
    op = FloquetOperator(
        matrix=u2d,
        boundary=d.boundary,
        cells=nx * ny,
        internal_dim=4,
        chiral_op=chiral,
    )
    return BuiltModel(
        descriptor=d, protocol=protocol, operator=op, flagged_unvalidated=not flat
    )


# ---------------------------------------------------------------------------
# cubic root of a quenched chain
# ---------------------------------------------------------------------------


def cubic_root(h1, h2, h3, *, period: float = 1.0, **operator_kwargs) -> FloquetOperator:
    """Cube-root propagator of a three-part drive, on a tripled space.

    h1, h2, h3 are the segment Hamiltonians of the parent drive (each
    acting for a third of the period, h3 first). The returned operator is
    the block-cyclic matrix

        [[0,  exp(-i h1/3), 0           ],
         [0,  0,            exp(-i h2/3)],
         [exp(-i h3/3), 0,  0           ]]

    whose cube is block diagonal with three similar copies of the parent
    propagator exp(-i h1/3) exp(-i h2/3) exp(-i h3/3).
    """
    blocks = [np.asarray(h, dtype=complex) for h in (h1, h2, h3)]
    dims = {b.shape for b in blocks}
    if len(dims) != 1 or any(b.ndim != 2 or b.shape[0] != b.shape[1] for b in blocks):
        raise DimensionMismatch(
            f"the three parent parts must share one square shape, got "
            f"{[b.shape for b in blocks]}"
        )
    n = blocks[0].shape[0]
    e1 = matrix_exp(blocks[0], -1j / 3)
    e2 = matrix_exp(blocks[1], -1j / 3)
    e3 = matrix_exp(blocks[2], -1j / 3)
    big = np.zeros((3 * n, 3 * n), dtype=complex)
    big[0:n, n : 2 * n] = e1
    big[n : 2 * n, 2 * n : 3 * n] = e2
    big[2 * n : 3 * n, 0:n] = e3
    return FloquetOperator(matrix=big, period=period, **operator_kwargs)


def _build_cubic_root(d: ModelDescriptor) -> BuiltModel:
    p = d.params
    mu, j1, j2, lam = p["mu"], p["J1"], p["J2"], p["lambda"]

    if d.cells is None:
        if d.boundary is not Boundary.PBC:
            raise UnsupportedCombination(
                "momentum-space build requires periodic boundaries"
            )
        exps = _nhssh_exponents(mu, j1, j2, lam)

        def u13(k: float) -> np.ndarray:
            a, b = exps(float(k))
            # parent drive: (3/4 * sigma_y part, 3/2 * sigma_x part,
            # 3/4 * sigma_y part), thirds of which are B/2, A, B/2
            x = matrix_exp(a, -0.5j)
            y = matrix_exp(b, -1j)
            big = np.zeros((6, 6), dtype=complex)
            big[0:2, 2:4] = x
            big[2:4, 4:6] = y
            big[4:6, 0:2] = x
            return big

        family = BlochFamily(internal_dim=6, matrix_fn=u13, name="cubic_root")
        return BuiltModel(descriptor=d, bloch=family)

    cells = int(d.cells)
    first_blocks, second_blocks = _nhssh_segment_blocks(mu, j1, j2, lam)
    h_x_part = chain_hamiltonian(first_blocks, cells, d.boundary)
    h_y_part = chain_hamiltonian(second_blocks, cells, d.boundary)
    parent_segments = [
        (0.75 * h_y_part, 1.0 / 3),
        (1.5 * h_x_part, 1.0 / 3),
        (0.75 * h_y_part, 1.0 / 3),
    ]
    protocol = PiecewiseConstant(parent_segments)
    op = cubic_root(
        0.75 * h_y_part,
        1.5 * h_x_part,
        0.75 * h_y_part,
        boundary=d.boundary,
        cells=3 * cells,
        internal_dim=2,
    )
    return BuiltModel(descriptor=d, protocol=protocol, operator=op)


# ---------------------------------------------------------------------------
# kicked superconducting chain (particle-hole doubled)
# ---------------------------------------------------------------------------


def _kitaev_exponents(j, delta, mu):
    # BdG convention: with the Nambu spinor (c_k, c^dag_{-k}) the pairing
    # sum_n (c_n c_{n+1} + h.c.) enters as -sin k on sigma_y. The opposite
    # spinor ordering negates every winding number; this one reproduces the
    # published (w0, w_pi) tables with the MCD-consistent loop orientation.
    def exps(k):
        k = np.asarray(k, dtype=float)
        zero = np.zeros_like(k)
        a = pauli_compose(zero, zero, zero, mu + j * np.cos(k))
        b = pauli_compose(zero, zero, -delta * np.sin(k), zero)
        return a, b

    return exps


def _build_kicked_kitaev(d: ModelDescriptor) -> BuiltModel:
    p = d.params
    j, delta, mu = p["J"], p["Delta"], p["mu"]
    exps = _kitaev_exponents(j, delta, mu)

    if d.cells is None:
        if d.boundary is not Boundary.PBC:
            raise UnsupportedCombination(
                "momentum-space build requires periodic boundaries"
            )
        family = BlochFamily(
            internal_dim=2,
            exponents=exps,
            exponents_batch=exps,
            chiral_op=SIGMA_X,
            name="kicked_kitaev",
        )
        return BuiltModel(descriptor=d, bloch=family)

    cells = int(d.cells)
    # particle-hole doubled basis (c_n, c_n^dag) per site; the stated
    # couplings multiply operators without conjugation, so complex J or mu
    # make the matrix non-Hermitian while keeping hopping reciprocal
    h_free = chain_hamiltonian(
        {0: mu * SIGMA_Z, 1: (j / 2) * SIGMA_Z, -1: (j / 2) * SIGMA_Z},
        cells,
        d.boundary,
    )
    h_kick = chain_hamiltonian(
        {1: 0.5j * delta * SIGMA_Y, -1: -0.5j * delta * SIGMA_Y},
        cells,
        d.boundary,
    )
    protocol = Kicked(h_free=h_free, kicks=[(h_kick, 0.0)])
    op = FloquetOperator(
        matrix=floquet_piecewise(protocol),
        boundary=d.boundary,
        cells=cells,
        internal_dim=2,
        chiral_op=_site_chiral(SIGMA_X, cells),
    )
    return BuiltModel(descriptor=d, protocol=protocol, operator=op)


# ---------------------------------------------------------------------------
# quasiperiodic chains with asymmetric hopping
# ---------------------------------------------------------------------------


def _quasiperiodic_potential(v, alpha: Fraction, cells: int, phase: float) -> np.ndarray:
    n = np.arange(cells)
    return v * np.cos(2.0 * np.pi * float(alpha) * n + phase)


def _build_harmonic_hatano_nelson(d: ModelDescriptor) -> BuiltModel:
    p = d.params
    j, v, kdrive, omega, gamma = p["J"], p["V"], p["K"], p["omega"], p["gamma"]
    alpha, phase = p["alpha"], p["offset"]
    cells = int(d.cells)
    hop = chain_hamiltonian(
        {1: j * math.exp(-gamma), -1: j * math.exp(gamma)}, cells, d.boundary
    )
    h0 = hop + np.diag(_quasiperiodic_potential(v, alpha, cells, phase))
    # the linear-tilt drive -n K cos(wt) on the site occupation; under
    # periodic boundaries the tilt lives on the fundamental domain
    tilt = np.diag(-0.5 * kdrive * np.arange(cells)).astype(complex)
    protocol = HarmonicFourier(h0=h0, components={1: tilt, -1: tilt}, omega=omega)
    return BuiltModel(descriptor=d, protocol=protocol, static_hamiltonian=h0)


def _build_kicked_hatano_nelson(d: ModelDescriptor) -> BuiltModel:
    p = d.params
    j, v, gamma = p["J"], p["V"], p["gamma"]
    alpha, phase = p["alpha"], p["offset"]
    cells = int(d.cells)
    # kicked variant: asymmetry enters with the opposite orientation to the
    # harmonic chain (amplification along +n)
    hop = chain_hamiltonian(
        {1: math.exp(gamma), -1: math.exp(-gamma)}, cells, d.boundary
    )
    pot = np.diag(_quasiperiodic_potential(1.0, alpha, cells, phase)).astype(complex)
    protocol = PiecewiseConstant([(2 * j * hop, 0.5), (2 * v * pot, 0.5)])
    op = FloquetOperator(
        matrix=floquet_piecewise(protocol),
        boundary=d.boundary,
        cells=cells,
        internal_dim=1,
    )
    return BuiltModel(descriptor=d, protocol=protocol, operator=op)


def _build_generic_quadratic(d: ModelDescriptor) -> BuiltModel:
    p = d.params
    cells = int(d.cells)
    n_bonds = cells if d.boundary is Boundary.PBC else cells - 1

    def per_bond(name) -> np.ndarray:
        val = p[name]
        if np.ndim(val) == 0:
            return np.full(n_bonds, complex(val))
        arr = np.asarray(val, dtype=complex)
        if arr.shape != (n_bonds,):
            raise InvalidParams(
                f"parameter '{name}' must be scalar or length {n_bonds} "
                f"({'one per bond, wrapping bond last' if d.boundary is Boundary.PBC else 'one per bond'})"
            )
        return arr

    j_bond = per_bond("J")
    gamma_bond = per_bond("gamma")
    if np.any(np.abs(gamma_bond.imag) > 0):
        raise InvalidParams("parameter 'gamma' must be real per bond")
    gamma_bond = gamma_bond.real

    v_site = p["V"]
    if np.ndim(v_site) == 0:
        v_site = np.full(cells, complex(v_site))
    elif np.asarray(v_site).shape != (cells,):
        raise InvalidParams(f"parameter 'V' must be scalar or length {cells}")

    h = np.diag(np.asarray(v_site, dtype=complex))
    for b in range(n_bonds):
        n, n2 = b, (b + 1) % cells
        h[n, n2] += j_bond[b] * np.exp(gamma_bond[b])
        h[n2, n] += np.conj(j_bond[b]) * np.exp(-gamma_bond[b])

    protocol = PiecewiseConstant([(h, 1.0)])
    op = FloquetOperator(
        matrix=matrix_exp(h, -1j),
        boundary=d.boundary,
        cells=cells,
        internal_dim=1,
    )
    return BuiltModel(
        descriptor=d, protocol=protocol, operator=op, static_hamiltonian=h
    )


_BUILDERS = {
    ModelId.HarmonicTwoLevel: _build_harmonic_two_level,
    ModelId.QuenchedDimerized: _build_quenched_dimerized,
    ModelId.QuenchedNHSSH: _build_quenched_nhssh,
    ModelId.SOTI2D: _build_soti,
    ModelId.CubicRoot: _build_cubic_root,
    ModelId.KickedKitaev: _build_kicked_kitaev,
    ModelId.HarmonicHatanoNelsonQC: _build_harmonic_hatano_nelson,
    ModelId.KickedHatanoNelsonQC: _build_kicked_hatano_nelson,
    ModelId.GenericQuadraticLattice: _build_generic_quadratic,
}


def parameter_schema(model_id) -> dict[str, str]:
    """Parameter names and kinds of one model.

    Kinds: "real", "complex", "positive", "fraction", "site_values".
    Used by the config layer to validate keys before a descriptor exists.
    """
    return {name: kind for name, (kind, _) in _SCHEMAS[ModelId(model_id)].items()}


def build(d: ModelDescriptor) -> BuiltModel:
    """Construct the requested model.

    Momentum-space families come back for translation-invariant models
    built with cells=None (periodic boundaries only); real-space builds
    return the driving protocol plus, where the one-period propagator has
    an exact product or closed form, the Floquet operator itself. The
    continuously driven quasiperiodic chain has no exact propagator; use
    floquet_split_operator on its protocol (or the high-frequency
    effective Hamiltonian) instead.
    """
    return _BUILDERS[d.model_id](d)


# ---------------------------------------------------------------------------
# closed-form analytics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoLevelAnalytics:
    """Closed forms for the circularly driven two-level chain."""

    mu: float
    omega: float
    gamma: float

    def _h_fields(self, k):
        k = np.asarray(k, dtype=float)
        return np.sin(k), self.mu + np.cos(k)

    def quasienergies(self, k):
        """The two quasienergy branches omega/2 +- sqrt(...) at momentum k."""
        hx, hz = self._h_fields(k)
        root = np.sqrt(
            hx**2 + (hz - self.omega / 2) ** 2 - self.gamma**2 / 4
            + 1j * hx * self.gamma
        )
        return self.omega / 2 + root, self.omega / 2 - root

    def instantaneous_energies(self, k):
        """Eigenvalues +-E(k) of the instantaneous Hamiltonian (t-independent)."""
        hx, hz = self._h_fields(k)
        root = np.sqrt(hx**2 + hz**2 - self.gamma**2 / 4 + 1j * hx * self.gamma)
        return root, -root

    def pbc_gap_closings(self) -> dict[float, tuple[float, float]]:
        """Parameter values where the periodic-chain bands touch, keyed by k."""
        half = self.omega / 2
        g = self.gamma / 2
        return {
            0.0: (half + g - 1.0, half - g - 1.0),
            math.pi: (half + g + 1.0, half - g + 1.0),
        }

    def obc_gap_closings(self) -> tuple[float, ...]:
        """Parameter values where the open-chain bulk gap closes."""
        half = self.omega / 2
        s_outer = math.sqrt(self.gamma**2 / 4 + 1.0)
        if abs(self.gamma) <= 2.0:
            return (half - s_outer, half + s_outer)
        s_inner = math.sqrt(self.gamma**2 / 4 - 1.0)
        return (half - s_outer, half - s_inner, half + s_inner, half + s_outer)

    def pi_mode_region(self) -> list[tuple[float, float]]:
        """Intervals of the onsite parameter hosting degenerate edge pairs."""
        half = self.omega / 2
        s_outer = math.sqrt(self.gamma**2 / 4 + 1.0)
        if abs(self.gamma) <= 2.0:
            return [(half - s_outer, half + s_outer)]
        s_inner = math.sqrt(self.gamma**2 / 4 - 1.0)
        return [(half - s_outer, half - s_inner), (half + s_inner, half + s_outer)]

    def gbz_coeffs(self) -> tuple[float, float, float]:
        """Coefficients (a, b, c) of the squared-band numerator
        a*beta^2 + b*beta + c over beta."""
        x = self.mu - self.omega / 2
        return (
            x + self.gamma / 2,
            1.0 + x**2 - self.gamma**2 / 4,
            x - self.gamma / 2,
        )

    def gbz_radius(self) -> float:
        a, _, c = self.gbz_coeffs()
        scale = max(1.0, abs(self.mu - self.omega / 2) + abs(self.gamma) / 2)
        if abs(a) < 1e-12 * scale or abs(c) < 1e-12 * scale:
            raise GBZIllDefined(
                f"generalized-zone radius degenerates (0 or infinity) at "
                f"mu - omega/2 = +-gamma/2; got mu={self.mu}, "
                f"omega={self.omega}, gamma={self.gamma}"
            )
        return math.sqrt(abs(c / a))


def two_level_analytics(mu: float, omega: float, gamma: float) -> TwoLevelAnalytics:
    """Closed-form spectral data of the circularly driven two-level chain."""
    for name, val in (("mu", mu), ("omega", omega), ("gamma", gamma)):
        val = _check_scalar(name, "real", val)
    if omega <= 0:
        raise InvalidParams(f"omega must be positive, got {omega}")
    return TwoLevelAnalytics(mu=float(mu), omega=float(omega), gamma=float(gamma))


def dimerized_dispersion(params: Mapping[str, float], k):
    """Quasienergy branches +-E(k) of the quenched dimerized chain.

    E(k) = arccos[cos(mu + r_x cos k) cos(r_y sin k + i gamma)], with the
    complex arccos branch folded to match principal_quasienergy applied to
    the eigenvalues of the built propagator.
    """
    mu, r_x, r_y, gamma = (
        params["mu"],
        params["r_x"],
        params["r_y"],
        params["gamma"],
    )
    k = np.asarray(k, dtype=float)
    z = np.cos(mu + r_x * np.cos(k)) * np.cos(r_y * np.sin(k) + 1j * gamma)
    e = np.arccos(z + 0j)
    plus = principal_quasienergy(np.exp(-1j * e))
    minus = principal_quasienergy(np.exp(1j * e))
    return plus, minus


@dataclass(frozen=True)
class QuasicrystalAnalytics:
    """High-frequency closed forms for the driven quasiperiodic chain."""

    descriptor: ModelDescriptor

    def _p(self):
        return self.descriptor.params

    def drive_ratio(self) -> float:
        p = self._p()
        return p["K"] / p["omega"]

    def hf_effective(self) -> np.ndarray:
        """Leading high-frequency Hamiltonian: hopping renormalized by the
        zeroth Bessel factor of the drive ratio, potential untouched."""
        p = self._p()
        d = self.descriptor
        bessel = bessel_j0(self.drive_ratio())
        hop = chain_hamiltonian(
            {
                1: bessel * p["J"] * math.exp(-p["gamma"]),
                -1: bessel * p["J"] * math.exp(p["gamma"]),
            },
            int(d.cells),
            d.boundary,
        )
        return hop + np.diag(
            _quasiperiodic_potential(p["V"], p["alpha"], int(d.cells), p["offset"])
        )

    def boundary_potential(self, drive_ratio: float | None = None) -> float:
        """|V| at which the localization transition sits for a given ratio."""
        p = self._p()
        x = self.drive_ratio() if drive_ratio is None else float(drive_ratio)
        return abs(2.0 * p["J"] * bessel_j0(x)) * math.exp(abs(p["gamma"]))

    def transition_boundary(
        self,
        unknown: str = "drive_ratio",
        bracket: tuple[float, float] = (0.0, 10.0),
        scan_step: float = 1e-3,
    ):
        """Solve |V| = |2 J Bessel0(x)| e^{|gamma|} for the requested unknown.

        unknown="V": the boundary potential at the descriptor's own drive
        ratio (a single float). unknown="drive_ratio": all ratios x inside
        `bracket` satisfying the condition at the descriptor's V, found by
        a sign-change scan plus bisection refinement (tuple of floats).
        """
        p = self._p()
        if unknown == "V":
            return self.boundary_potential()
        if unknown != "drive_ratio":
            raise InvalidParams(f"unknown must be 'V' or 'drive_ratio', got {unknown!r}")

        target = abs(p["V"])

        def f(x: float) -> float:
            return abs(2.0 * p["J"] * bessel_j0(x)) * math.exp(abs(p["gamma"])) - target

        lo, hi = float(bracket[0]), float(bracket[1])
        if not hi > lo:
            raise InvalidParams(f"empty bracket {bracket}")
        xs = np.arange(lo, hi + scan_step, scan_step)
        vals = np.array([f(x) for x in xs])
        roots = []
        for i in range(len(xs) - 1):
            if vals[i] == 0.0:
                roots.append(float(xs[i]))
            elif vals[i] * vals[i + 1] < 0:
                roots.append(float(brentq(f, xs[i], xs[i + 1], xtol=1e-12)))
        if vals[-1] == 0.0:
            roots.append(float(xs[-1]))
        if not roots:
            raise NoRootInBracket(
                f"no localization boundary for |V|={target:.6g} with "
                f"drive ratio in [{lo}, {hi}]"
            )
        return tuple(roots)

    def lyapunov(self, drive_ratio: float | None = None) -> float:
        """Inverse localization length of every state in the localized phase."""
        p = self._p()
        x = self.drive_ratio() if drive_ratio is None else float(drive_ratio)
        denom = 2.0 * p["J"] * bessel_j0(x)
        if denom == 0.0:
            raise NoRootInBracket(
                "hopping renormalized to zero; localization length vanishes"
            )
        return math.log(abs(p["V"] * math.exp(-abs(p["gamma"])) / denom))


def quasicrystal_analytics(descriptor: ModelDescriptor) -> QuasicrystalAnalytics:
    """High-frequency analytics of the harmonically driven quasiperiodic chain."""
    if descriptor.model_id is not ModelId.HarmonicHatanoNelsonQC:
        raise UnsupportedCombination(
            "closed-form drive renormalization applies to the harmonically "
            f"driven quasiperiodic chain, not {descriptor.model_id.value}"
        )
    return QuasicrystalAnalytics(descriptor=descriptor)
