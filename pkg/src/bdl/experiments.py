"""Batch experiments: dispatch, CSV/SVG emission, and run manifests.

Every experiment writes RFC-4180 CSV (CRLF line endings, '.' decimal
separator, 17 significant digits) atomically via a temp file and rename,
plus a ``manifest.json`` echoing the configuration, wall times, row counts,
and any numerical failures (which leave partial output in place rather than
aborting the run).  Identical configuration and seed give byte-identical
CSV: all randomness flows through counter-based Philox streams keyed by
(seed, row index), and every reduction has a fixed summation order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .divsolve import (
    bound_ratio_51,
    bound_ratio_52,
    conjugated_ratio,
    GridFunction,
    gradient_norm_ratio,
    make_grid,
    random_mean_zero,
)
from .kernel1d import decay_fit, log_bergman
from .legendre import TauConvergenceError, tau, u_limit
from .potentials import ConvexPotential, parse_potential_spec, PotentialError
from .quadrature import CancellationUnderflowError, QuadratureError
from .scriptf import laplace_log_asymptotic, log_scriptF, weight_context
from .svg import render_svg
from .zeroscan import find_zeros, resonance_deficiency, WindingError


@dataclass
class RunManifest:
    experiment: str
    config: dict
    version: str
    wall_times: dict = field(default_factory=dict)
    row_counts: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.17g}"
    return str(value)


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    _atomic_write(path, buf.getvalue().encode("utf-8"))


def _parallel_map(fn, items, jobs: int):
    """Order-preserving map; rows come back in canonical order regardless
    of scheduling."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _xi_grid(cfg: ExperimentConfig) -> list[float]:
    if cfg.xi_count == 1:
        return [cfg.xi_min]
    step = (cfg.xi_max - cfg.xi_min) / (cfg.xi_count - 1)
    return [cfg.xi_min + step * k for k in range(cfg.xi_count)]


def _run_legendre_check(cfg, p, out_dir, manifest):
    header = ["xi", "tau", "u", "residual", "defect"]
    rows = []
    for xi in _xi_grid(cfg):
        try:
            lp = tau(p, xi)
            x = lp.tau
            xi_back = np.asarray(p.gradient(x), dtype=float)
            lp2 = tau(p, xi_back)
            defect = float(np.max(np.abs(lp2.tau - x)))
            h = 1e-5 * (1.0 + abs(xi))
            du = (u_limit(p, xi + h) - u_limit(p, xi - h)) / (2.0 * h)
            defect = max(defect, abs(du - float(x[0])))
            rows.append([xi, float(lp.tau[0]), lp.u_value, lp.residual, defect])
        except TauConvergenceError as exc:
            manifest.failures.append(f"xi={xi}: {exc}")
    write_csv(out_dir / "legendre-check.csv", header, rows)
    manifest.row_counts["legendre-check.csv"] = len(rows)


def _run_scriptf(cfg, p, out_dir, manifest):
    header = ["re_xi", "im_xi", "lambda", "log_mag", "phase", "r", "laplace_log", "err_est"]
    if cfg.box is not None:
        re0, re1, im0, im1 = cfg.box
        n = max(2, cfg.grid)
        res = [re0 + (re1 - re0) * k / (n - 1) for k in range(n)]
        ims = [im0 + (im1 - im0) * k / (n - 1) for k in range(n)]
    else:
        res = _xi_grid(cfg)
        ims = [0.0]
    tasks = [(lam, s, t) for lam in cfg.lambda_grid() for s in res for t in ims]

    def one(task):
        lam, s, t = task
        xi = complex(s, t)
        try:
            sample = log_scriptF(p, xi, lam, rel_tol=cfg.rel_tol)
            lap = laplace_log_asymptotic(p, s, lam)
            return [
                s, t, lam,
                sample.logF.log_mag, sample.logF.phase,
                sample.logF.log_mag / (2.0 * lam),
                lap, sample.quadrature_error_estimate,
            ]
        except (QuadratureError, TauConvergenceError) as exc:
            return ("fail", f"xi={xi}, lambda={lam}: {exc}")

    results = _parallel_map(one, tasks, cfg.jobs)
    rows = [r for r in results if not (isinstance(r, tuple) and r[0] == "fail")]
    manifest.failures.extend(r[1] for r in results if isinstance(r, tuple) and r[0] == "fail")
    write_csv(out_dir / "scriptf.csv", header, rows)
    manifest.row_counts["scriptf.csv"] = len(rows)


def _deficiency_rows(cfg, p, manifest):
    box = cfg.box if cfg.box is not None else (-0.5, 0.5, -0.2, 0.2)
    region = ((box[0], box[1]), (box[2], box[3]))
    report = resonance_deficiency(
        p, cfg.lambda_grid(), region, cfg.grid, rel_tol=cfg.rel_tol
    )
    rows = [
        [lam, min_d, argmin.real, argmin.imag]
        for (lam, min_d), argmin in zip(report.trend, report.trend_argmin)
    ]
    return report, rows


def _run_zeros(cfg, p, out_dir, manifest):
    box = cfg.box if cfg.box is not None else (-1.0, 1.0, -0.5, 0.5)
    rect = ((box[0], box[1]), (box[2], box[3]))
    lam = cfg.lambda_grid()[-1]
    lines = []
    try:
        cert = find_zeros(p, lam, rect, rel_tol=cfg.rel_tol)
        lines.append(f"lambda {_fmt(lam)}")
        lines.append(
            "rectangle "
            + " ".join(_fmt(v) for pair in cert.rectangle for v in pair)
        )
        lines.append(f"winding {cert.winding}")
        lines.append(f"complete {str(cert.complete).lower()}")
        lines.append(f"boundary_median_log_mag {_fmt(cert.boundary_median_log_mag)}")
        for r in cert.roots:
            lines.append(
                f"root {_fmt(r.xi0.real)} {_fmt(r.xi0.imag)} "
                f"{_fmt(r.residual_log_mag)} {r.newton_steps} {r.multiplicity}"
            )
    except (WindingError, QuadratureError) as exc:
        manifest.failures.append(f"certificate: {exc}")
    _atomic_write(out_dir / "certificate.txt", ("\n".join(lines) + "\n").encode())
    header = ["lambda", "min_deficiency", "re_argmin", "im_argmin"]
    report, rows = _deficiency_rows(cfg, p, manifest)
    write_csv(out_dir / "zeros.csv", header, rows)
    manifest.row_counts["zeros.csv"] = len(rows)
    manifest.notes["min_deficiency"] = _fmt(report.min_deficiency)


def _run_resonance_trend(cfg, p, out_dir, manifest):
    header = ["lambda", "min_deficiency", "re_argmin", "im_argmin"]
    report, rows = _deficiency_rows(cfg, p, manifest)
    write_csv(out_dir / "resonance-trend.csv", header, rows)
    manifest.row_counts["resonance-trend.csv"] = len(rows)
    if cfg.svg:
        pts = [(lam, d) for lam, d in report.trend]
        text, clipped = render_svg(
            [("min deficiency", pts)], title="deficiency trend", log_x=True
        )
        _atomic_write(out_dir / "resonance-trend.svg", text.encode())
        manifest.notes["svg_clipped_markers"] = clipped


def _run_kernel_decay(cfg, p, out_dir, manifest):
    header = ["lambda", "re_z", "im_z", "re_w", "im_w", "log_mag", "normalized"]
    z = complex(cfg.x_offset, cfg.delta)
    w = complex(cfg.x_offset, 0.0)

    def one(lam):
        try:
            s = log_bergman(p, z, w, lam, rel_tol=cfg.rel_tol)
            return [lam, z.real, z.imag, w.real, w.imag, s.logB.log_mag,
                    s.normalized_log_mag]
        except (QuadratureError, TauConvergenceError) as exc:
            return ("fail", f"lambda={lam}: {exc}")

    results = _parallel_map(one, cfg.lambda_grid(), cfg.jobs)
    rows = [r for r in results if not (isinstance(r, tuple) and r[0] == "fail")]
    manifest.failures.extend(r[1] for r in results if isinstance(r, tuple) and r[0] == "fail")

    fit_rows = []
    if len(rows) >= 6:
        fit = decay_fit([(r[0], r[6]) for r in rows])
        fit_rows = [
            ["fit", "c", fit.model_exp[0], "", "", "", ""],
            ["fit", "beta", fit.model_exp[1], "", "", "", ""],
            ["fit", "k_exp", fit.model_exp[2], "", "", "", ""],
            ["fit", "A", fit.model_sub[0], "", "", "", ""],
            ["fit", "k_sub", fit.model_sub[1], "", "", "", ""],
            ["fit", "rss_exp", fit.rss_exp, "", "", "", ""],
            ["fit", "rss_sub", fit.rss_sub, "", "", "", ""],
            ["fit", "preferred", fit.preferred, "", "", "", ""],
        ]
        manifest.notes["preferred"] = fit.preferred
        manifest.notes["c"] = _fmt(fit.model_exp[0])
    else:
        manifest.failures.append("too few kernel samples for a decay fit")
    write_csv(out_dir / "kernel-decay.csv", header, rows + fit_rows)
    manifest.row_counts["kernel-decay.csv"] = len(rows)
    if cfg.svg and rows:
        pts = [(r[0], r[6]) for r in rows]
        text, clipped = render_svg(
            [("normalized log|B|", pts)], title="kernel decay", log_x=True
        )
        _atomic_write(out_dir / "kernel-decay.svg", text.encode())
        manifest.notes["svg_clipped_markers"] = clipped


def _run_divsolve_check(cfg, p, out_dir, manifest):
    header = ["lambda", "xi", "a", "which", "ratio", "lhs", "rhs", "seed"]
    rows = []
    for lam in cfg.lambda_grid():
        for xi in cfg.xi_values:
            try:
                ctx = weight_context(p, xi, lam, a=cfg.a)
                grid = make_grid(ctx)
            except (TauConvergenceError, ValueError) as exc:
                manifest.failures.append(f"context lambda={lam} xi={xi}: {exc}")
                continue
            for k in range(cfg.seeds):
                seed = cfg.seed + k
                try:
                    f = random_mean_zero(ctx, grid, seed)
                    for fn in (bound_ratio_51, bound_ratio_52, gradient_norm_ratio):
                        rep = fn(ctx, f)
                        rows.append([lam, xi, cfg.a, rep.which, rep.ratio,
                                     rep.lhs, rep.rhs, seed])
                    g = GridFunction(
                        grid, f.values * np.exp(-2.0 * ctx.Phi_tilde1(grid.xs))
                    )
                    rep = conjugated_ratio(ctx, g)
                    rows.append([lam, xi, cfg.a, rep.which, rep.ratio,
                                 rep.lhs, rep.rhs, seed])
                except (ValueError, QuadratureError) as exc:
                    manifest.failures.append(
                        f"lambda={lam} xi={xi} seed={seed}: {exc}"
                    )
    write_csv(out_dir / "divsolve-check.csv", header, rows)
    manifest.row_counts["divsolve-check.csv"] = len(rows)


def _run_limit_convergence(cfg, p, out_dir, manifest):
    header = ["lambda", "xi", "r", "u", "abs_err"]
    xis = _xi_grid(cfg)
    u_vals = {xi: u_limit(p, xi) for xi in xis}
    tasks = [(lam, xi) for lam in cfg.lambda_grid() for xi in xis]

    def one(task):
        lam, xi = task
        try:
            r = log_scriptF(p, xi, lam, rel_tol=cfg.rel_tol).logF.log_mag / (2.0 * lam)
            return [lam, xi, r, u_vals[xi], abs(r - u_vals[xi])]
        except (QuadratureError, TauConvergenceError) as exc:
            return ("fail", f"lambda={lam} xi={xi}: {exc}")

    results = _parallel_map(one, tasks, cfg.jobs)
    rows = [r for r in results if not (isinstance(r, tuple) and r[0] == "fail")]
    manifest.failures.extend(r[1] for r in results if isinstance(r, tuple) and r[0] == "fail")

    fit_rows = []
    for lam in cfg.lambda_grid():
        errs = [r[4] for r in rows if r[0] == lam]
        if errs and lam > 1:
            c_fit = max(errs) * lam / math.log(lam)
            fit_rows.append(["fit", lam, c_fit, "", ""])
    write_csv(out_dir / "limit-convergence.csv", header, rows + fit_rows)
    manifest.row_counts["limit-convergence.csv"] = len(rows)


_RUNNERS = {
    "legendre-check": _run_legendre_check,
    "scriptf": _run_scriptf,
    "zeros": _run_zeros,
    "kernel-decay": _run_kernel_decay,
    "divsolve-check": _run_divsolve_check,
    "limit-convergence": _run_limit_convergence,
    "resonance-trend": _run_resonance_trend,
}


def run(cfg: ExperimentConfig) -> RunManifest:
    """Dispatch an experiment; always writes manifest.json in the out dir."""
    out_dir = Path(cfg.out)
    manifest = RunManifest(
        experiment=cfg.experiment,
        config={k: (list(v) if isinstance(v, tuple) else v)
                for k, v in vars(cfg).items()},
        version=__version__,
    )
    t0 = time.perf_counter()
    try:
        p = parse_potential_spec(cfg.potential)
    except PotentialError as exc:
        raise  # config-level error: surfaces as exit code 2 in the CLI
    manifest.wall_times["setup"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    try:
        _RUNNERS[cfg.experiment](cfg, p, out_dir, manifest)
    except CancellationUnderflowError as exc:
        manifest.failures.append(f"cancellation underflow: {exc}")
    manifest.wall_times["experiment"] = time.perf_counter() - t0

    _atomic_write(
        out_dir / "manifest.json",
        json.dumps(
            {
                "experiment": manifest.experiment,
                "config": manifest.config,
                "version": manifest.version,
                "wall_times": manifest.wall_times,
                "row_counts": manifest.row_counts,
                "failures": manifest.failures,
                "notes": manifest.notes,
            },
            indent=2,
            sort_keys=True,
        ).encode(),
    )
    return manifest
