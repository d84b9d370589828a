"""Spectral-reality indicators, level statistics, and participation ratios.

Diagnostics for disordered or quasiperiodic Floquet chains: how much of the
quasienergy spectrum leaves the real axis, how rigid the real parts are, and
how concentrated the eigenvectors are. A small classifier turns the
participation extremes into an extended / localized / critical label with
explicitly stated heuristic thresholds.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import UnnormalizedState

__all__ = [
    "Phase",
    "ParticipationReport",
    "LocalizationReport",
    "pt_indicators",
    "level_statistics",
    "participation",
    "classify",
    "localization_report",
]


class Phase(enum.Enum):
    Extended = "Extended"
    Localized = "Localized"
    Critical = "Critical"
    Indeterminate = "Indeterminate"


def pt_indicators(
    spectrum, im_threshold: float | None = None
) -> tuple[float, float]:
    """Largest |Im E| and the fraction of levels with complex quasienergy.

    The counting threshold defaults to 1e-10 * (1 + max|Re E|); exact-real
    spectra only stay exactly real in exact arithmetic, so the cutoff is
    scale-relative. Returns (max_im_e, rho) with rho in [0, 1].
    """
    e = np.asarray(spectrum, dtype=complex).ravel()
    if e.size == 0:
        raise ValueError("empty spectrum")
    max_im = float(np.max(np.abs(e.imag)))
    if im_threshold is None:
        im_threshold = 1e-10 * (1.0 + float(np.max(np.abs(e.real))))
    rho = float(np.count_nonzero(np.abs(e.imag) > im_threshold)) / e.size
    return max_im, rho


def level_statistics(spectrum) -> float:
    """Mean adjacent-spacing ratio of the real parts of a spectrum.

    Levels are sorted along the real axis; for consecutive spacings
    eps_j, eps_{j+1} the ratio g_j = min/max is averaged over the chain.
    Equal spacings give 1, strongly uneven (clustered) spacings push the
    mean toward 0. Degenerate levels (zero spacing) contribute g = 0.
    """
    e = np.sort(np.asarray(spectrum, dtype=complex).ravel().real)
    if e.size < 4:
        raise ValueError("need at least four levels for spacing ratios")
    eps = np.diff(e)
    lo = np.minimum(eps[:-1], eps[1:])
    hi = np.maximum(eps[:-1], eps[1:])
    g = np.where(hi > 0.0, lo / np.where(hi > 0.0, hi, 1.0), 0.0)
    return float(np.mean(g))


@dataclass
class ParticipationReport:
    """Per-state participation ratios and their summary statistics."""

    ipr: np.ndarray
    npr: np.ndarray
    ipr_max: float
    ipr_min: float
    ipr_ave: float
    npr_ave: float
    zeta: float


def participation(states, sites: int | None = None) -> ParticipationReport:
    """Inverse and normalized participation ratios of a set of states.

    states holds one state per column, each normalized so the squared
    moduli sum to one (UnnormalizedState otherwise). For state j,
    IPR_j = sum_n |psi_n|^4 ranges from 1/L (uniform) to 1 (single site);
    NPR_j = 1 / (L * IPR_j) inverts that range. zeta = log10 of the
    product of the two averages: near -log10 const for a pure phase,
    increasingly negative with system size when extended and localized
    states coexist. `sites` defaults to the state dimension.
    """
    psi = np.asarray(states, dtype=complex)
    if psi.ndim == 1:
        psi = psi[:, None]
    if psi.ndim != 2:
        raise ValueError("states must be a vector or a (dim, n) matrix")
    dim = psi.shape[0]
    length = dim if sites is None else int(sites)
    dens = np.abs(psi) ** 2
    norms = dens.sum(axis=0)
    worst = float(np.max(np.abs(norms - 1.0)))
    if worst > 1e-8:
        raise UnnormalizedState(
            f"state norm deviates from 1 by {worst:.3e} (threshold 1e-8)"
        )
    ipr = np.sum(dens**2, axis=0)
    npr = 1.0 / (length * ipr)
    ipr_ave = float(np.mean(ipr))
    npr_ave = float(np.mean(npr))
    return ParticipationReport(
        ipr=ipr,
        npr=npr,
        ipr_max=float(np.max(ipr)),
        ipr_min=float(np.min(ipr)),
        ipr_ave=ipr_ave,
        npr_ave=npr_ave,
        zeta=float(np.log10(ipr_ave * npr_ave)),
    )


def classify(
    ipr_max: float,
    ipr_min: float,
    sites: int,
    a: float = 3.0,
    b: float = 0.02,
) -> Phase:
    """Heuristic phase label from the participation extremes at one size.

    Extended: even the most concentrated state spreads (ipr_max below
    a / sqrt(L)). Localized: even the most extended state is concentrated
    (ipr_min above b). Critical: localized and extended states coexist
    (ipr_max above b while ipr_min stays below a / sqrt(L)). Anything
    else is Indeterminate. The constants a and b are avowedly heuristic;
    callers get the raw indicators alongside and can re-threshold.
    """
    finite_size = a / np.sqrt(float(sites))
    if ipr_max < finite_size:
        return Phase.Extended
    if ipr_min > b:
        return Phase.Localized
    if ipr_max > b and ipr_min < finite_size:
        return Phase.Critical
    return Phase.Indeterminate


@dataclass
class LocalizationReport:
    """All localization diagnostics for one spectrum + eigenvector set."""

    max_im_e: float
    rho: float
    g_bar: float
    ipr_max: float
    ipr_min: float
    ipr_ave: float
    npr_ave: float
    zeta: float
    phase: Phase


def localization_report(
    spectrum,
    states,
    sites: int | None = None,
    a: float = 3.0,
    b: float = 0.02,
) -> LocalizationReport:
    """Bundle every diagnostic for one disorder realization."""
    max_im, rho = pt_indicators(spectrum)
    g_bar = level_statistics(spectrum)
    part = participation(states, sites)
    n_sites = np.asarray(states).shape[0] if sites is None else int(sites)
    phase = classify(part.ipr_max, part.ipr_min, n_sites, a=a, b=b)
    return LocalizationReport(
        max_im_e=max_im,
        rho=rho,
        g_bar=g_bar,
        ipr_max=part.ipr_max,
        ipr_min=part.ipr_min,
        ipr_ave=part.ipr_ave,
        npr_ave=part.npr_ave,
        zeta=part.zeta,
        phase=phase,
    )
