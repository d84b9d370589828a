"""Fast self-check behind the `selftest` subcommand.

Runs the documented small examples of every module plus a thinned-down
subset of the acceptance checks. The whole suite is meant to finish in
well under a minute; the full acceptance run lives in the test suite.
"""
from __future__ import annotations

import math
import tempfile
import time
from pathlib import Path

import numpy as np

from .config import parse_config
from .dynamics import combine_mcd, mean_chiral_displacement
from .engine import floquet_split_operator, sambe_quasienergies, symmetric_time_frames
from .errors import InvalidParams, SchemaError
from .linalg import eig_biorthogonal, matrix_exp, principal_quasienergy
from .localization import classify, level_statistics, participation, Phase
from .models import ModelDescriptor, ModelId, build
from .protocols import BlochFamily, Boundary, Frame, HarmonicFourier
from .runner import run_job
from .topology import (
    circle_gap,
    combine_windings,
    count_boundary_modes,
    frame_winding,
    gap_functions,
    non_bloch_winding,
)
from .twoband import SIGMA_X, SIGMA_Y, SIGMA_Z

__all__ = ["run_selftest"]


def _check_principal_branch():
    e = principal_quasienergy(np.array([-1.0 + 0j, 1j, 0.5]))
    assert abs(e[0].real + math.pi) < 1e-12, "negative axis must map to -pi"
    assert abs(e[1].real + math.pi / 2) < 1e-12
    assert abs(e[2].imag - math.log(0.5)) < 1e-12


def _check_biorthogonality():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    dec = eig_biorthogonal(m)
    gram = dec.left_vectors.conj().T @ dec.right_vectors
    assert np.linalg.norm(gram - np.eye(12)) < 1e-8, "left/right pairing"
    assert np.linalg.norm(dec.reconstruct() - m) < 1e-8, "spectral reconstruction"


def _check_matrix_exp():
    theta = 0.7
    u = matrix_exp(theta * SIGMA_X, -1j)
    want = math.cos(theta) * np.eye(2) - 1j * math.sin(theta) * SIGMA_X
    assert np.linalg.norm(u - want) < 1e-12, "Pauli rotation"


def _check_sambe_vs_product():
    drive = HarmonicFourier(
        h0=0.6 * SIGMA_Z,
        components={1: 0.2 * SIGMA_X, -1: 0.2 * SIGMA_X},
        omega=5.0,
    )
    es = sambe_quasienergies(drive, truncation=12)
    u = floquet_split_operator(drive)
    es_exact = np.sort(principal_quasienergy(np.linalg.eigvals(u), drive.period).real)
    assert np.max(np.abs(np.sort(es.real) - es_exact)) < 1e-6, "extended zone"


def _check_frame_windings():
    d = ModelDescriptor(
        ModelId.QuenchedDimerized,
        {"mu": 0.25 * math.pi, "r_x": 1.5 * math.pi, "r_y": 0.5 * math.pi,
         "gamma": 0.3},
    )
    fam = build(d).bloch
    w1 = frame_winding(fam, Frame.SYMMETRIC_1)
    w2 = frame_winding(fam, Frame.SYMMETRIC_2)
    assert (w1.value, w2.value) == (3.0, -1.0), \
        f"frame windings {(w1.value, w2.value)}"
    w0, wpi = combine_windings(w1, w2)
    assert (w0, wpi) == (1.0, 2.0), f"combined windings {(w0, wpi)}"


def _check_mcd_tracks_winding():
    d = ModelDescriptor(
        ModelId.QuenchedDimerized,
        {"mu": 0.25 * math.pi, "r_x": 1.5 * math.pi, "r_y": 0.5 * math.pi,
         "gamma": 0.3},
    )
    fam = build(d).bloch
    c1 = mean_chiral_displacement(fam, Frame.SYMMETRIC_1, periods=200, grid=128)
    c2 = mean_chiral_displacement(fam, Frame.SYMMETRIC_2, periods=200, grid=128)
    assert abs(2 * c1.average - 3.0) < 0.2, f"2*C_1 = {2 * c1.average}"
    assert abs(2 * c2.average + 1.0) < 0.2, f"2*C_2 = {2 * c2.average}"
    c0, cpi = combine_mcd(c1.average, c2.average)
    assert abs(c0 - 1.0) < 0.2, f"C_0 = {c0}"
    assert abs(cpi - 2.0) < 0.2, f"C_pi = {cpi}"


def _check_gap_report():
    es = np.array([0.004, -1.2, math.pi - 0.008, 2.0], dtype=complex)
    gr = gap_functions(es)
    assert gr.n_zero == 1 and gr.n_pi == 1, "threshold counts"
    assert abs(gr.min_f_zero - 0.004 / math.pi) < 1e-12
    assert np.all(circle_gap(np.array([math.pi - 1e-9 + 0j]), -math.pi) < 1e-6), \
        "circle wrap at the zone edge"


def _check_boundary_modes():
    d = ModelDescriptor(
        ModelId.QuenchedNHSSH,
        {"mu": 0.0, "J1": 1.8 * math.pi, "J2": 0.5 * math.pi, "lambda": 0.4},
        boundary=Boundary.OBC,
        cells=80,
    )
    op = build(d).operator
    dec = eig_biorthogonal(op.matrix)
    n0 = count_boundary_modes(op, 0.0, decomposition=dec).count
    npi = count_boundary_modes(op, math.pi, decomposition=dec).count
    assert (n0, npi) == (2, 4), f"(n0, n_pi) = {(n0, npi)} for combined (1, -2)"


def _check_non_bloch():
    assert non_bloch_winding(math.pi, 2 * math.pi, 1.0).value == 1.0
    assert non_bloch_winding(6.0, 2 * math.pi, 1.0).value == 0.0


def _check_participation():
    length = 100
    n = np.arange(length)
    waves = np.exp(2j * math.pi * np.outer(n, n) / length) / math.sqrt(length)
    rep = participation(waves)
    assert np.max(np.abs(rep.ipr - 1.0 / length)) < 1e-12, "plane-wave IPR"
    assert abs(rep.zeta + math.log10(length)) < 1e-9, "zeta of a pure phase"
    assert classify(rep.ipr_max, rep.ipr_min, length) is Phase.Extended


def _check_level_statistics():
    levels = np.cumsum([0.0] + [2.0 ** (-j) for j in range(9)])
    assert abs(level_statistics(levels) - 0.5) < 1e-12, "geometric spacings"


def _check_descriptor_validation():
    try:
        ModelDescriptor(ModelId.KickedKitaev, {"J": 1.0, "Delta": 1.0, "mu": 0.0,
                                               "gama": 0.5})
    except InvalidParams as exc:
        assert "gama" in str(exc)
    else:
        raise AssertionError("unknown parameter accepted")
    try:
        ModelDescriptor(
            ModelId.KickedHatanoNelsonQC,
            {"J": 1.0, "V": 1.0, "gamma": 0.5, "alpha": 0.618},
            cells=55,
        )
    except InvalidParams:
        pass
    else:
        raise AssertionError("inexact quasiperiodic ratio accepted")


_MINIMAL_JOB = """
[model]
id = GenericQuadraticLattice
boundary = pbc
cells = 6
J = 1
gamma = 0

[compute:spectrum]

[output]
dir = {out}
"""


def _check_config_and_determinism():
    try:
        parse_config("[model]\nid = QuenchedDimerized\nmu = 0.1\nr_x = 1\nr_y = 1\ngama = 0.5\n")
    except SchemaError as exc:
        assert exc.key == "gama" and "gamma" in str(exc), "near-miss hint"
    else:
        raise AssertionError("misspelled key accepted")

    with tempfile.TemporaryDirectory() as tmp:
        cfg = parse_config(_MINIMAL_JOB.format(out=Path(tmp) / "a"))
        first = run_job(cfg)
        second = run_job(cfg, out_dir=Path(tmp) / "b", workers=3)
        a = (Path(tmp) / "a" / "spectrum.csv").read_bytes()
        b = (Path(tmp) / "b" / "spectrum.csv").read_bytes()
        assert a == b, "repeated runs must be byte-identical"
        assert not first.partial and not second.partial


def _check_symmetric_frames_share_spectrum():
    d = ModelDescriptor(
        ModelId.QuenchedNHSSH,
        {"mu": 0.2, "J1": 2.2 * math.pi, "J2": 0.7 * math.pi, "lambda": 0.3},
        boundary=Boundary.OBC,
        cells=40,
    )
    built = build(d)
    u1, u2 = symmetric_time_frames(built.protocol)
    e0 = np.linalg.eigvals(built.operator.matrix)
    for u in (u1, u2):
        e = np.linalg.eigvals(u)
        dist = np.abs(e[:, None] - e0[None, :]).min(axis=1)
        assert float(np.max(dist)) < 1e-8, "frame similarity"


_CHECKS = [
    ("principal branch", _check_principal_branch),
    ("biorthogonal eigensystem", _check_biorthogonality),
    ("matrix exponential", _check_matrix_exp),
    ("extended zone vs product", _check_sambe_vs_product),
    ("symmetric frames share the spectrum", _check_symmetric_frames_share_spectrum),
    ("frame windings (3, -1)", _check_frame_windings),
    ("mean chiral displacement tracks windings", _check_mcd_tracks_winding),
    ("gap functions", _check_gap_report),
    ("boundary-mode counts", _check_boundary_modes),
    ("non-Bloch winding window", _check_non_bloch),
    ("participation measures", _check_participation),
    ("level statistics", _check_level_statistics),
    ("descriptor validation", _check_descriptor_validation),
    ("config parsing and determinism", _check_config_and_determinism),
]


def run_selftest(echo=print) -> bool:
    """Run every check; report one line each; True when all pass."""
    failures = 0
    t_start = time.monotonic()
    for name, fn in _CHECKS:
        t0 = time.monotonic()
        try:
            fn()
        except Exception as exc:  # report and keep going
            failures += 1
            echo(f"FAIL {name}: {exc}")
        else:
            echo(f"ok   {name} ({time.monotonic() - t0:.2f}s)")
    total = time.monotonic() - t_start
    echo(f"{len(_CHECKS) - failures}/{len(_CHECKS)} checks passed in {total:.1f}s")
    return failures == 0
