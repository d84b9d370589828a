"""Sweep execution and structured output.

`run_job` resolves every sweep point of a job config into a model
descriptor, evaluates each configured task on a worker pool, and writes
one data file per task plus a run manifest. Tasks are pure functions of
the resolved descriptor and the task options; the main thread is the
single writer, collecting results tagged by sweep index, so output rows
always appear in sweep order no matter which worker finished first.

Data files are deterministic: fixed column order, fixed float formatting
at the configured precision, LF newlines, UTF-8, and no timestamps (the
wall clock lives only in the manifest). Running the same config twice
produces byte-identical data files, with any number of workers.
"""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from .config import JobConfig, TaskSpec, default_options
from .dynamics import (
    DynamicWindingResult,
    MCDResult,
    WavepacketStats,
    combine_mcd,
    dynamic_winding,
    mean_chiral_displacement,
    wavepacket_stats,
)
from .engine import symmetric_time_frames
from .errors import NHFloqError, UnsupportedCombination
from .linalg import SpectralDecomposition, eig_biorthogonal, principal_quasienergy
from .localization import LocalizationReport, localization_report
from .models import (
    ModelDescriptor,
    ModelId,
    build,
    parameter_schema,
    quasicrystal_analytics,
    soti_x_winding,
    soti_y_family,
)
from .protocols import Boundary, FloquetOperator, Frame
from .topology import (
    FluxLoopFamily,
    GapReport,
    InvariantReport,
    ModeCount,
    WindingResult,
    combine_windings,
    count_boundary_modes,
    count_corner_modes,
    frame_winding,
    gap_functions,
    non_bloch_winding,
    open_bulk_winding,
    spectral_winding,
)

__all__ = ["TaskOutcome", "JobResult", "run_job", "write_output"]


def _package_version() -> str:
    try:
        return metadata.version("nhfloq")
    except metadata.PackageNotFoundError:
        return "unknown"


# ---------------------------------------------------------------------------
# value formatting
# ---------------------------------------------------------------------------


def _fmt_float(v: float, precision: int) -> str:
    return f"{float(v):.{precision}g}"


def _fmt_complex(v: complex, precision: int) -> str:
    return f"{v.real:.{precision}g}{v.imag:+.{precision}g}j"


def _cell(v, precision: int) -> str:
    """One CSV cell."""
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _fmt_float(v, precision)
    if isinstance(v, (complex, np.complexfloating)):
        return _fmt_complex(complex(v), precision)
    if isinstance(v, np.ndarray):
        return ";".join(_cell(x, precision) for x in v.tolist())
    return str(v)


def _json_value(v, precision: int):
    if v is None:
        return None
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if not math.isfinite(f) else float(_fmt_float(f, precision))
    if isinstance(v, (complex, np.complexfloating)):
        return _fmt_complex(complex(v), precision)
    if isinstance(v, np.ndarray):
        return _cell(v, precision)
    return str(v)


def _write_rows(columns: list[str], rows: list[dict], path: Path,
                fmt: str, precision: int) -> None:
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow(_cell(row.get(c), precision) for c in columns)
        return
    payload = [
        {c: _json_value(row.get(c), precision) for c in columns} for row in rows
    ]
    with open(path, "w", encoding="utf-8", newline="") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")


# ---------------------------------------------------------------------------
# report objects -> rows (the write_output entry point)
# ---------------------------------------------------------------------------


def _winding_fields(prefix: str, res: WindingResult) -> dict:
    return {
        f"{prefix}": res.value,
        f"{prefix}_raw": res.raw,
        f"{prefix}_deviation": res.deviation,
    }


def _rows_of(report) -> tuple[list[str], list[dict]]:
    if isinstance(report, GapReport):
        row = {
            "F0": report.min_f_zero,
            "F_pi": report.min_f_pi,
            "n0": report.n_zero,
            "n_pi": report.n_pi,
        }
        return list(row), [row]
    if isinstance(report, LocalizationReport):
        row = {
            "max_im_e": report.max_im_e,
            "rho": report.rho,
            "g_bar": report.g_bar,
            "ipr_max": report.ipr_max,
            "ipr_min": report.ipr_min,
            "ipr_ave": report.ipr_ave,
            "npr_ave": report.npr_ave,
            "zeta": report.zeta,
            "phase": report.phase.value,
        }
        return list(row), [row]
    if isinstance(report, InvariantReport):
        row = {}
        for name in ("w_spectral", "w0", "w_pi", "open_w0", "open_w_pi",
                     "w_nonbloch", "chern"):
            value = getattr(report, name)
            if value is not None:
                row[name] = value
        if report.base_energy is not None:
            row["base_energy_re"] = report.base_energy.real
            row["base_energy_im"] = report.base_energy.imag
        return list(row), [row]
    if isinstance(report, WindingResult):
        row = _winding_fields("value", report)
        row["grid"] = report.grid
        return list(row), [row]
    if isinstance(report, ModeCount):
        row = {"count": report.count, "ambiguous": len(report.ambiguous)}
        return list(row), [row]
    if isinstance(report, MCDResult):
        rows = [
            {"t": t + 1, "c": report.series[t], "running": report.running[t]}
            for t in range(report.periods)
        ]
        return ["t", "c", "running"], rows
    if isinstance(report, DynamicWindingResult):
        row = {"nu": report.nu, "raw": report.raw}
        return list(row), [row]
    if isinstance(report, WavepacketStats):
        rows = [
            {"t": t + 1, "x_mean": report.x_mean[t], "x_std": report.x_std[t],
             "v": report.v[t]}
            for t in range(report.periods)
        ]
        return ["t", "x_mean", "x_std", "v"], rows
    if isinstance(report, SpectralDecomposition):
        rows = [
            {"state": i, "value_re": lam.real, "value_im": lam.imag}
            for i, lam in enumerate(report.eigenvalues)
        ]
        return ["state", "value_re", "value_im"], rows
    if isinstance(report, np.ndarray) and report.ndim == 1:
        e = np.asarray(report, dtype=complex)
        rows = [
            {"state": i, "E_re": v.real, "E_im": v.imag} for i, v in enumerate(e)
        ]
        return ["state", "E_re", "E_im"], rows
    if isinstance(report, dict):
        return list(report), [report]
    if isinstance(report, (list, tuple)) and all(isinstance(r, dict) for r in report):
        columns: list[str] = []
        for r in report:
            for key in r:
                if key not in columns:
                    columns.append(key)
        return columns, list(report)
    raise TypeError(f"no output mapping for {type(report).__name__}")


def write_output(report, path, fmt: str = "csv", precision: int = 12) -> Path:
    """Write one report object to a CSV or JSON file.

    Accepts the result dataclasses of the other modules, a 1D complex
    array (treated as a spectrum), a dict, or a list of dicts. Complex
    values become paired _re/_im columns where the mapping defines them;
    floats are written at `precision` significant digits; newlines are LF
    and the encoding UTF-8 in both formats.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    columns, rows = _rows_of(report)
    path = Path(path)
    _write_rows(columns, rows, path, fmt, precision)
    return path


# ---------------------------------------------------------------------------
# task implementations
# ---------------------------------------------------------------------------

# momentum-space stand-in used for Bloch-family quantities of models whose
# own family lacks the two-part structure (the cube-root chain reports the
# windings of its parent drive)
_FAMILY_PARENT = {ModelId.CubicRoot: ModelId.QuenchedNHSSH}


def _momentum_twin(desc: ModelDescriptor):
    """The two-part Bloch family matching a real-space descriptor, or None."""
    model_id = _FAMILY_PARENT.get(desc.model_id, desc.model_id)
    try:
        twin = ModelDescriptor(model_id, dict(desc.params), boundary=Boundary.PBC)
    except NHFloqError:
        return None
    fam = build(twin).bloch
    if fam is None or not fam.two_part or fam.chiral_op is None:
        return None
    return fam


def _target_tag(t: float) -> str:
    if abs(t) < 1e-12:
        return "0"
    if abs(abs(t) - math.pi) < 1e-12:
        return "pi"
    return f"{t / math.pi:.4g}pi"


def _sorted_eigvals(m: np.ndarray) -> np.ndarray:
    e = np.linalg.eigvals(m)
    return e[np.lexsort((e.imag, e.real))]


def _task_spectrum(desc: ModelDescriptor, opt: dict) -> list[dict]:
    built = build(desc)
    if opt["effective"] and desc.model_id is ModelId.HarmonicHatanoNelsonQC:
        h = quasicrystal_analytics(desc).hf_effective()
        return [
            {"state": i, "E_re": v.real, "E_im": v.imag}
            for i, v in enumerate(_sorted_eigvals(h))
        ]
    if built.operator is not None:
        op = built.operator
        dec = eig_biorthogonal(op.matrix)
        es = principal_quasienergy(dec.eigenvalues, op.period)
        return [
            {"state": i, "E_re": e.real, "E_im": e.imag} for i, e in enumerate(es)
        ]
    if built.bloch is not None:
        fam = built.bloch
        n = opt["grid"]
        ks = -np.pi + 2.0 * np.pi * np.arange(n) / n
        rows = []
        for k in ks:
            es = principal_quasienergy(
                _sorted_eigvals(fam.u(float(k), opt["frame"])), fam.period
            )
            es = es[np.lexsort((es.imag, es.real))]
            for band, e in enumerate(es):
                rows.append(
                    {"k": float(k), "band": band, "E_re": e.real, "E_im": e.imag}
                )
        return rows
    if built.bloch_2d is not None:
        fam = built.bloch_2d
        n = opt["grid2"]
        ks = -np.pi + 2.0 * np.pi * np.arange(n) / n
        rows = []
        for kx in ks:
            for ky in ks:
                es = principal_quasienergy(
                    _sorted_eigvals(fam.u(float(kx), float(ky))), fam.period
                )
                es = es[np.lexsort((es.imag, es.real))]
                for band, e in enumerate(es):
                    rows.append(
                        {"kx": float(kx), "ky": float(ky), "band": band,
                         "E_re": e.real, "E_im": e.imag}
                    )
        return rows
    raise UnsupportedCombination(
        "no exact propagator for this build; for the continuously driven "
        "quasicrystal set effective = true to use the high-frequency chain"
    )


def _wants(opt: dict, token: str) -> bool:
    return "auto" in opt["include"] or token in opt["include"]


def _explicit(opt: dict, token: str) -> bool:
    return token in opt["include"]


def _task_invariants(desc: ModelDescriptor, opt: dict) -> list[dict]:
    row: dict = {}

    if desc.model_id is ModelId.SOTI2D and _wants(opt, "frame_windings"):
        fam_y = soti_y_family(desc.params)
        wy1 = frame_winding(fam_y, Frame.SYMMETRIC_1, grid=opt["grid"])
        wy2 = frame_winding(fam_y, Frame.SYMMETRIC_2, grid=opt["grid"])
        w0y, wpiy = combine_windings(wy1, wy2)
        wx = soti_x_winding(desc.params)
        row["nu0"] = wx * w0y
        row["nu_pi"] = wx * wpiy
    elif _wants(opt, "frame_windings"):
        fam = _momentum_twin(desc)
        if fam is not None:
            w1 = frame_winding(fam, Frame.SYMMETRIC_1, grid=opt["grid"])
            w2 = frame_winding(fam, Frame.SYMMETRIC_2, grid=opt["grid"])
            row["w0"], row["w_pi"] = combine_windings(w1, w2)
        elif _explicit(opt, "frame_windings"):
            raise UnsupportedCombination(
                f"{desc.model_id.value} has no two-part chiral Bloch family"
            )

    if _wants(opt, "non_bloch") and desc.model_id is ModelId.HarmonicTwoLevel:
        p = desc.params
        row["w_nonbloch"] = non_bloch_winding(p["mu"], p["omega"], p["gamma"]).value
    elif _explicit(opt, "non_bloch"):
        raise UnsupportedCombination(
            "the non-Bloch winding is defined for the harmonically driven "
            "two-level chain"
        )

    if _wants(opt, "spectral"):
        h_loop = None
        cells = desc.cells
        if desc.model_id is ModelId.HarmonicHatanoNelsonQC:
            h_loop = quasicrystal_analytics(desc).hf_effective()
        elif desc.model_id is ModelId.GenericQuadraticLattice:
            h_loop = build(desc).static_hamiltonian
        if h_loop is not None and desc.boundary is Boundary.PBC:
            res = spectral_winding(
                FluxLoopFamily(h_loop, int(cells)),
                e0=opt["base_energy"],
                grid=opt["winding_grid"],
            )
            row["w_spectral"] = res.value
        elif _explicit(opt, "spectral"):
            raise UnsupportedCombination(
                "spectral winding needs a periodic chain with a static "
                "(or high-frequency effective) Hamiltonian"
            )

    built = None
    if desc.boundary is Boundary.OBC:
        built = build(desc)
    if built is not None and built.operator is not None:
        op = built.operator
        dec = eig_biorthogonal(op.matrix)
        es = principal_quasienergy(dec.eigenvalues, op.period)
        targets = tuple(opt["targets"])
        if _wants(opt, "gaps"):
            extra = [t for t in targets if _target_tag(t) not in ("0", "pi")]
            gr = gap_functions(es, targets=extra)
            for t in targets:
                tag = _target_tag(t)
                if tag == "0":
                    row["gap_F0_min"] = gr.min_f_zero
                elif tag == "pi":
                    row["gap_Fpi_min"] = gr.min_f_pi
                else:
                    row[f"gap_F{tag}_min"] = float(np.min(gr.f_eps[t]))
        if _wants(opt, "mode_counts"):
            for t in targets:
                tag = _target_tag(t)
                name = "n0" if tag == "0" else f"n_{tag}"
                if desc.model_id is ModelId.SOTI2D:
                    mc = count_corner_modes(
                        op, int(desc.cells_x), int(desc.cells_y), t,
                        e_tol=opt["e_tol"], loc_threshold=opt["loc_threshold"],
                        decomposition=dec,
                    )
                else:
                    mc = count_boundary_modes(
                        op, t, e_tol=opt["e_tol"],
                        loc_threshold=opt["loc_threshold"], decomposition=dec,
                    )
                row[name] = mc.count
        if _wants(opt, "open_bulk") and op.chiral_op is not None and built.protocol is not None:
            try:
                u1, u2 = symmetric_time_frames(built.protocol)
            except NHFloqError:
                if _explicit(opt, "open_bulk"):
                    raise
            else:
                nus = []
                for u, frame in ((u1, Frame.SYMMETRIC_1), (u2, Frame.SYMMETRIC_2)):
                    fop = FloquetOperator(
                        matrix=u, period=op.period, frame=frame,
                        boundary=Boundary.OBC, cells=op.cells,
                        internal_dim=op.internal_dim, chiral_op=op.chiral_op,
                    )
                    nus.append(
                        open_bulk_winding(
                            fop, edge_fraction=opt["edge_fraction"],
                            e_tol=opt["e_tol"], loc_threshold=opt["loc_threshold"],
                        ).value
                    )
                row["open_w0"], row["open_w_pi"] = combine_windings(*nus)
    elif _explicit(opt, "mode_counts") or _explicit(opt, "gaps") or _explicit(opt, "open_bulk"):
        raise UnsupportedCombination(
            "mode counts, gap minima and the open-bulk winding need an "
            "open-boundary real-space build (boundary = obc with cells)"
        )

    if not row:
        raise UnsupportedCombination(
            f"no invariant of the requested kinds applies to "
            f"{desc.model_id.value} with this boundary"
        )
    return [row]


def _task_dynamics(desc: ModelDescriptor, opt: dict) -> list[dict]:
    probe = opt["probe"]
    if probe == "wavepacket":
        built = build(desc)
        if built.operator is None:
            raise UnsupportedCombination(
                "the wavepacket probe needs a real-space propagator; give cells"
            )
        op = built.operator
        init = opt["init_site"]
        if init is None:
            init = op.dim // 2
        stats = wavepacket_stats(op, int(init), opt["periods"])
        return [{
            "x_mean_last": stats.x_mean[-1],
            "x_std_last": stats.x_std[-1],
            "v_last": stats.v[-1],
        }]

    fam = _momentum_twin(desc)
    if fam is None:
        raise UnsupportedCombination(
            f"{desc.model_id.value} has no two-part chiral Bloch family; "
            "the momentum-space probes do not apply"
        )
    if probe == "mcd":
        c1 = mean_chiral_displacement(
            fam, Frame.SYMMETRIC_1, periods=opt["periods"], grid=opt["grid"]
        ).average
        c2 = mean_chiral_displacement(
            fam, Frame.SYMMETRIC_2, periods=opt["periods"], grid=opt["grid"]
        ).average
        c0, cpi = combine_mcd(c1, c2)
        return [{"c_1": c1, "c_2": c2, "c_0": c0, "c_pi": cpi}]
    d1 = dynamic_winding(
        fam, Frame.SYMMETRIC_1, periods=opt["periods"], grid=opt["grid"],
        c_plus=opt["c_plus"], c_minus=opt["c_minus"],
    )
    d2 = dynamic_winding(
        fam, Frame.SYMMETRIC_2, periods=opt["periods"], grid=opt["grid"],
        c_plus=opt["c_plus"], c_minus=opt["c_minus"],
    )
    return [{"nu_1": d1.nu, "nu_2": d2.nu, "raw_1": d1.raw, "raw_2": d2.raw}]


def _localization_inputs(desc: ModelDescriptor, opt: dict):
    """(spectrum, states, static_h) for the localization diagnostics."""
    if opt["effective"]:
        if desc.model_id is not ModelId.HarmonicHatanoNelsonQC:
            raise UnsupportedCombination(
                "effective = true applies to the harmonically driven "
                "quasicrystal only"
            )
        h = quasicrystal_analytics(desc).hf_effective()
        evals, vecs = np.linalg.eig(h)
        order = np.lexsort((evals.imag, evals.real))
        evals = evals[order]
        vecs = vecs[:, order] / np.linalg.norm(vecs[:, order], axis=0)
        return evals, vecs, h
    built = build(desc)
    if built.operator is None:
        raise UnsupportedCombination(
            "no exact propagator for this build; set effective = true for "
            "the harmonically driven quasicrystal"
        )
    op = built.operator
    dec = eig_biorthogonal(op.matrix)
    es = principal_quasienergy(dec.eigenvalues, op.period)
    return es, dec.right_vectors, None


def _task_localization(desc: ModelDescriptor, opt: dict) -> list[dict]:
    spectrum, states, static_h = _localization_inputs(desc, opt)
    report = localization_report(spectrum, states, a=opt["a"], b=opt["b"])
    row = {
        "max_im_e": report.max_im_e,
        "rho": report.rho,
        "g_bar": report.g_bar,
        "ipr_max": report.ipr_max,
        "ipr_min": report.ipr_min,
        "ipr_ave": report.ipr_ave,
        "npr_ave": report.npr_ave,
        "zeta": report.zeta,
        "phase": report.phase.value,
    }
    if opt["winding"]:
        if static_h is None or desc.boundary is not Boundary.PBC:
            raise UnsupportedCombination(
                "the flux-loop winding column needs effective = true and "
                "periodic boundaries"
            )
        res = spectral_winding(
            FluxLoopFamily(static_h, int(desc.cells)), grid=opt["winding_grid"]
        )
        row["w_spectral"] = res.value
    return [row]


def _task_phase_diagram(desc: ModelDescriptor, opt: dict) -> list[dict]:
    quantity = opt["quantity"]
    if quantity == "auto":
        is_lattice = desc.model_id in (
            ModelId.HarmonicHatanoNelsonQC,
            ModelId.KickedHatanoNelsonQC,
            ModelId.GenericQuadraticLattice,
        )
        quantity = "phase" if is_lattice else "windings"
    if quantity == "phase":
        loc_opt = default_options("localization")
        loc_opt["effective"] = opt["effective"]
        report = _task_localization(desc, loc_opt)[0]
        return [{"phase": report["phase"], "zeta": report["zeta"]}]
    fam = _momentum_twin(desc)
    if desc.model_id is ModelId.SOTI2D or fam is None:
        inv_opt = default_options("invariants")
        inv_opt["grid"] = opt["grid"]
        row = _task_invariants(desc, inv_opt)[0]
        keep = {k: v for k, v in row.items() if k in ("nu0", "nu_pi", "w0", "w_pi")}
        if not keep:
            raise UnsupportedCombination(
                f"no winding pair applies to {desc.model_id.value}"
            )
        return [keep]
    w1 = frame_winding(fam, Frame.SYMMETRIC_1, grid=opt["grid"])
    w2 = frame_winding(fam, Frame.SYMMETRIC_2, grid=opt["grid"])
    w0, wpi = combine_windings(w1, w2)
    return [{"w0": w0, "w_pi": wpi}]


_TASK_FUNCTIONS = {
    "spectrum": _task_spectrum,
    "invariants": _task_invariants,
    "dynamics": _task_dynamics,
    "localization": _task_localization,
    "phase_diagram": _task_phase_diagram,
}


# ---------------------------------------------------------------------------
# the job runner
# ---------------------------------------------------------------------------


@dataclass
class TaskOutcome:
    """Where one task's results went and how the sweep fared."""

    task: str
    path: Path
    rows: int
    points: int
    failures: int


@dataclass
class JobResult:
    """Every file a job produced, plus failure accounting."""

    out_dir: Path
    outcomes: list[TaskOutcome]
    manifest_path: Path
    wall_time: float

    @property
    def partial(self) -> bool:
        return any(oc.failures for oc in self.outcomes)


def _param_columns(model_id: ModelId) -> list[str]:
    cols = []
    for name, kind in parameter_schema(model_id).items():
        if kind == "complex":
            cols += [f"{name}_re", f"{name}_im"]
        else:
            cols.append(name)
    return cols


def _param_values(desc: ModelDescriptor) -> dict:
    vals: dict = {}
    for name, kind in parameter_schema(desc.model_id).items():
        if name not in desc.params:
            continue
        v = desc.params[name]
        if kind == "complex":
            v = complex(v)
            vals[f"{name}_re"] = v.real
            vals[f"{name}_im"] = v.imag
        elif kind == "fraction":
            vals[name] = str(v)
        else:
            vals[name] = v
    return vals


# exceptions recorded per sweep point instead of aborting the sweep
_POINT_ERRORS = (NHFloqError, ValueError, ArithmeticError, np.linalg.LinAlgError)


def _run_task(cfg: JobConfig, spec: TaskSpec, points: list[dict], workers: int):
    fn = _TASK_FUNCTIONS[spec.task]

    def at_point(args):
        _, point = args
        try:
            desc = cfg.descriptor_at(point)
            result_rows = fn(desc, spec.options)
        except _POINT_ERRORS as exc:
            return point, None, [], exc
        return point, desc, result_rows, None

    tagged = list(enumerate(points))
    if workers <= 1:
        results = [at_point(t) for t in tagged]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(at_point, tagged))

    sweep_cols = [ax.path for ax in cfg.sweep]
    param_cols = _param_columns(cfg.model_id)
    result_cols: list[str] = []
    rows: list[dict] = []
    failures = 0
    first_exc = None
    for point, desc, result_rows, exc in results:
        base = {path: point[path] for path in sweep_cols}
        if desc is not None:
            base.update(_param_values(desc))
        if exc is not None:
            failures += 1
            if first_exc is None:
                first_exc = exc
            rows.append(base | {"errors": f"{type(exc).__name__}: {exc}"})
            continue
        for r in result_rows:
            for key in r:
                if key not in result_cols:
                    result_cols.append(key)
            rows.append(base | r | {"errors": ""})
    columns: list[str] = []
    for col in sweep_cols + param_cols + result_cols + ["errors"]:
        if col not in columns:
            columns.append(col)
    return columns, rows, failures, first_exc


def run_job(
    cfg: JobConfig,
    workers: int = 1,
    out_dir=None,
    fmt: str | None = None,
    tasks=None,
) -> JobResult:
    """Run a job config: one output file per task, plus the manifest.

    `tasks` restricts the run to the named tasks (each uses its config
    section when present, defaults otherwise); None runs every configured
    task. Per-point failures are recorded in the `errors` column of the
    affected row; only a sweep whose points all failed aborts the job, by
    re-raising the first point's exception.
    """
    t0 = time.monotonic()
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    fmt = fmt if fmt is not None else cfg.output_format
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {fmt!r}")

    if tasks is None:
        specs = list(cfg.compute)
        if not specs:
            raise UnsupportedCombination(
                "the config defines no compute tasks; add a [compute:...] "
                "section or name a task on the command line"
            )
    else:
        specs = [cfg.task_spec(name) for name in tasks]

    points = cfg.points()
    out.mkdir(parents=True, exist_ok=True)
    ext = "csv" if fmt == "csv" else "json"

    outcomes = []
    for spec in specs:
        columns, rows, failures, first_exc = _run_task(cfg, spec, points, workers)
        if points and failures == len(points) and first_exc is not None:
            raise first_exc
        path = out / f"{spec.task}.{ext}"
        _write_rows(columns, rows, path, fmt, cfg.precision)
        outcomes.append(
            TaskOutcome(task=spec.task, path=path, rows=len(rows),
                        points=len(points), failures=failures)
        )

    wall = time.monotonic() - t0
    manifest = {
        "config": cfg.text,
        "versions": {
            "nhfloq": _package_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "model": cfg.model_id.value,
        "workers": workers,
        "format": fmt,
        "precision": cfg.precision,
        "seed": cfg.seed,
        "points": len(points),
        "tasks": [
            {"task": oc.task, "file": oc.path.name, "rows": oc.rows,
             "failures": oc.failures}
            for oc in outcomes
        ],
        "wall_time_s": round(wall, 3),
        "finished_utc": datetime.now(timezone.utc).isoformat(),
    }
    manifest_path = out / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8", newline="") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    return JobResult(
        out_dir=out, outcomes=outcomes, manifest_path=manifest_path, wall_time=wall
    )
