"""Driving protocols, Floquet operators and Bloch families.

A driving protocol describes one period of H(t). Time is dimensionless:
the period is 1 unless stated otherwise, and exponents are H*t products.

Product-order convention used everywhere: the factor that acts first on a
state is the rightmost one. A protocol listing segments in temporal order
[(H_1, d_1), (H_2, d_2)] therefore produces

    U = exp(-i H_2 d_2) exp(-i H_1 d_1).

A kick at offset x acts after the free evolution from the previous offset
up to x; a kick at offset 0 is the first factor applied.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, NotTwoPart

__all__ = [
    "Boundary",
    "Frame",
    "PiecewiseConstant",
    "Kicked",
    "ContinuousSampled",
    "HarmonicFourier",
    "DrivingProtocol",
    "FloquetOperator",
    "BlochFamily",
    "check_chiral_op",
]


class Boundary(Enum):
    PBC = "pbc"
    OBC = "obc"


class Frame(Enum):
    """Time frame of a one-period propagator.

    ORIGINAL is the bare product over one period starting at t=0.
    SYMMETRIC_1 and SYMMETRIC_2 shift the starting time by half of the
    first/second part of a two-part drive, which symmetrizes the product.
    """

    ORIGINAL = "original"
    SYMMETRIC_1 = "symmetric_1"
    SYMMETRIC_2 = "symmetric_2"


def _asmat(h) -> np.ndarray:
    a = np.asarray(h, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"Hamiltonian must be square, got {a.shape}")
    return a


@dataclass
class PiecewiseConstant:
    """H(t) constant on consecutive sub-intervals covering one period.

    segments: list of (hamiltonian, duration) in temporal order.
    """

    segments: Sequence[tuple[np.ndarray, float]]
    period: float = 1.0

    def __post_init__(self):
        segs = [(_asmat(h), float(d)) for h, d in self.segments]
        if not segs:
            raise ValueError("need at least one segment")
        if any(d <= 0 for _, d in segs):
            raise ValueError("segment durations must be positive")
        total = sum(d for _, d in segs)
        if abs(total - self.period) > 1e-12 * max(1.0, self.period):
            raise ValueError(
                f"durations sum to {total}, expected period {self.period}"
            )
        dims = {h.shape[0] for h, _ in segs}
        if len(dims) != 1:
            raise DimensionMismatch("segments have inconsistent dimensions")
        self.segments = segs

    @property
    def dim(self) -> int:
        return self.segments[0][0].shape[0]

    def sample(self, t: float) -> np.ndarray:
        """H at time t (mod period)."""
        t = t % self.period
        acc = 0.0
        for h, d in self.segments:
            acc += d
            if t < acc:
                return h
        return self.segments[-1][0]


@dataclass
class Kicked:
    """Free evolution under h_free, interrupted by delta kicks.

    kicks: list of (h_kick, offset) with offsets in [0, period), sorted
    ascending. Each kick contributes a factor exp(-i h_kick * period);
    the kick strength is the full-period integral of its delta pulse.
    """

    h_free: np.ndarray
    kicks: Sequence[tuple[np.ndarray, float]]
    period: float = 1.0

    def __post_init__(self):
        self.h_free = _asmat(self.h_free)
        ks = [(_asmat(h), float(x)) for h, x in self.kicks]
        if any(not (0 <= x < self.period) for _, x in ks):
            raise ValueError("kick offsets must lie in [0, period)")
        if sorted(x for _, x in ks) != [x for _, x in ks]:
            raise ValueError("kick offsets must be sorted ascending")
        if any(h.shape != self.h_free.shape for h, _ in ks):
            raise DimensionMismatch("kick dimension differs from free part")
        self.kicks = ks

    @property
    def dim(self) -> int:
        return self.h_free.shape[0]

    def sample(self, t: float) -> np.ndarray:
        """The free part; delta kicks have measure zero."""
        return self.h_free


@dataclass
class ContinuousSampled:
    """H(t) given as a callable, to be integrated by a split-step rule."""

    hamiltonian: Callable[[float], np.ndarray]
    dim: int
    period: float = 1.0

    def sample(self, t: float) -> np.ndarray:
        h = _asmat(self.hamiltonian(t))
        if h.shape[0] != self.dim:
            raise DimensionMismatch(
                f"H(t) returned shape {h.shape}, expected dim {self.dim}"
            )
        return h


@dataclass
class HarmonicFourier:
    """H(t) = H0 + sum_m V_m exp(i m omega t) with integer m != 0.

    components maps the harmonic index m to its matrix V_m.
    The period is 2 pi / omega.
    """

    h0: np.ndarray
    components: dict[int, np.ndarray]
    omega: float

    def __post_init__(self):
        self.h0 = _asmat(self.h0)
        comps = {}
        for m, v in self.components.items():
            if int(m) == 0:
                raise ValueError("m = 0 belongs in h0, not in components")
            v = _asmat(v)
            if v.shape != self.h0.shape:
                raise DimensionMismatch("component dimension differs from h0")
            comps[int(m)] = v
        self.components = comps
        if self.omega <= 0:
            raise ValueError("omega must be positive")

    @property
    def dim(self) -> int:
        return self.h0.shape[0]

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega

    def sample(self, t: float) -> np.ndarray:
        h = self.h0.astype(complex).copy()
        for m, v in self.components.items():
            h = h + v * np.exp(1j * m * self.omega * t)
        return h


DrivingProtocol = PiecewiseConstant | Kicked | ContinuousSampled | HarmonicFourier


def check_chiral_op(s, dim: int, tol: float = 1e-10) -> np.ndarray:
    """Validate a chiral symmetry operator: Hermitian, unitary, right size."""
    s = np.asarray(s, dtype=complex)
    if s.shape != (dim, dim):
        raise DimensionMismatch(
            f"chiral operator shape {s.shape} does not match dimension {dim}"
        )
    if np.linalg.norm(s - s.conj().T) > tol:
        raise ValueError("chiral operator is not Hermitian")
    if np.linalg.norm(s @ s.conj().T - np.eye(dim)) > tol:
        raise ValueError("chiral operator is not unitary")
    return s


@dataclass
class FloquetOperator:
    """A one-period propagator on a finite lattice, with its metadata.

    cells * internal_dim must equal the matrix dimension. For 2D models
    `cells` is the total number of unit cells.
    """

    matrix: np.ndarray
    period: float = 1.0
    frame: Frame = Frame.ORIGINAL
    boundary: Boundary = Boundary.PBC
    cells: int = 0
    internal_dim: int = 1
    chiral_op: np.ndarray | None = None

    def __post_init__(self):
        self.matrix = _asmat(self.matrix)
        n = self.matrix.shape[0]
        if self.cells == 0:
            self.cells = n // self.internal_dim
        if self.cells * self.internal_dim != n:
            raise DimensionMismatch(
                f"cells*internal_dim = {self.cells}*{self.internal_dim} "
                f"!= matrix dimension {n}"
            )
        if self.chiral_op is not None:
            self.chiral_op = check_chiral_op(self.chiral_op, n)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass
class BlochFamily:
    """Momentum-space propagator family U(k) for a translation-invariant model.

    Either `exponents` (two-part structure: U(k) = exp(-iA(k)) exp(-iB(k)),
    with B acting first) or `matrix_fn` (direct U(k)) must be provided.
    Two-part families support the symmetric time frames; plain ones do not.

    For 2D models the momentum argument is a tuple; 1D families take floats.
    """

    internal_dim: int
    exponents: Callable[[float], tuple[np.ndarray, np.ndarray]] | None = None
    matrix_fn: Callable[[float], np.ndarray] | None = None
    chiral_op: np.ndarray | None = None
    period: float = 1.0
    name: str = ""
    # optional vectorized sampler: ks (n,) -> (A, B) stacks of shape (n, d, d)
    exponents_batch: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] | None = field(
        default=None, repr=False
    )

    def __post_init__(self):
        if self.exponents is None and self.matrix_fn is None:
            raise ValueError("need exponents or matrix_fn")
        if self.chiral_op is not None:
            self.chiral_op = check_chiral_op(self.chiral_op, self.internal_dim)

    @property
    def two_part(self) -> bool:
        return self.exponents is not None

    def u(self, k, frame: Frame = Frame.ORIGINAL) -> np.ndarray:
        """Propagator at momentum k in the requested time frame."""
        from .linalg import matrix_exp  # local import to avoid a cycle

        if not self.two_part:
            if frame != Frame.ORIGINAL:
                raise NotTwoPart(
                    "symmetric frames need a two-part drive; this family "
                    "only provides the full propagator"
                )
            return _asmat(self.matrix_fn(k))
        a, b = self.exponents(k)
        a = _asmat(a)
        b = _asmat(b)
        if frame == Frame.ORIGINAL:
            return matrix_exp(a, -1j) @ matrix_exp(b, -1j)
        if frame == Frame.SYMMETRIC_1:
            eb2 = matrix_exp(b, -0.5j)
            return eb2 @ matrix_exp(a, -1j) @ eb2
        ea2 = matrix_exp(a, -0.5j)
        return ea2 @ matrix_exp(b, -1j) @ ea2

    def u_batch(self, ks: np.ndarray, frame: Frame = Frame.ORIGINAL) -> np.ndarray:
        """Vectorized U(k) over a 1D momentum grid, shape (len(ks), d, d)."""
        if self.exponents_batch is not None:
            from .twoband import expm_minus_i_batch

            a, b = self.exponents_batch(np.asarray(ks, dtype=float))
            if frame == Frame.ORIGINAL:
                return expm_minus_i_batch(a) @ expm_minus_i_batch(b)
            if frame == Frame.SYMMETRIC_1:
                eb2 = expm_minus_i_batch(0.5 * b)
                return eb2 @ expm_minus_i_batch(a) @ eb2
            ea2 = expm_minus_i_batch(0.5 * a)
            return ea2 @ expm_minus_i_batch(b) @ ea2
        return np.stack([self.u(float(k), frame) for k in np.asarray(ks)])
