"""Complex zero scanning and near-resonance detection for F(., lambda).

The scanner certifies rectangles of the complex xi-plane by boundary winding
numbers (argument principle), quadrisects until each leaf holds at most one
zero, refines simple zeros by Newton iteration on log F, and quantifies
near-resonances through the deficiency

    D(xi, lambda) = log|F(xi, lambda)| / (2 lambda) - u(Re xi),

which is bounded below on fixed regions for analytic convex potentials and
diverges to -infinity along families of zeros approaching the real axis.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .legendre import u_limit
from .logcomplex import LogComplex
from .potentials import ConvexPotential
from .quadrature import CancellationUnderflowError, QuadratureError
from .scriptf import log_scriptF, log_scriptF_derivative

MAX_BOUNDARY_SAMPLES = 2**16
MAX_SUBDIVISION_DEPTH = 20
ROOT_DEPTH_MARGIN = 30.0  # natural-log units below boundary median


class WindingError(RuntimeError):
    """Boundary phase could not be resolved."""


class BoundaryZeroError(WindingError):
    """Boundary magnitude below the cancellation budget (possible zero on
    the contour); perturb the rectangle and retry."""


@dataclass(frozen=True)
class ZeroRecord:
    xi0: complex
    residual_log_mag: float
    newton_steps: int
    multiplicity: int = 1


@dataclass(frozen=True)
class ZeroCertificate:
    rectangle: tuple[tuple[float, float], tuple[float, float]]
    winding: int
    roots: tuple[ZeroRecord, ...]
    lam: float
    boundary_median_log_mag: float
    complete: bool = True  # False when boundary-zero retries gave up

    def __post_init__(self):
        if self.complete and self.winding != sum(r.multiplicity for r in self.roots):
            raise ValueError(
                f"certificate inconsistency: winding {self.winding} vs "
                f"{sum(r.multiplicity for r in self.roots)} roots"
            )


@dataclass(frozen=True)
class DeficiencyReport:
    lam: float
    region: tuple[tuple[float, float], tuple[float, float]]
    min_deficiency: float
    argmin_xi: complex
    im_at_argmin: float
    trend: tuple[tuple[float, float], ...]
    trend_argmin: tuple[complex, ...] = ()


def _phase_and_logmag(value) -> tuple[float, float]:
    if isinstance(value, LogComplex):
        return value.phase, value.log_mag
    z = complex(value)
    if z == 0:
        raise BoundaryZeroError("exact zero on rectangle boundary; perturb it")
    return cmath.phase(z), math.log(abs(z))


def _wrap(d: float) -> float:
    r = math.remainder(d, 2.0 * math.pi)
    if r <= -math.pi:
        r += 2.0 * math.pi
    return r


def winding_number(f: Callable, rect, n: int) -> tuple[int, float]:
    """Winding of f around a rectangle boundary by adaptive phase tracking.

    ``f`` maps a complex point to a complex value or a LogComplex.  Starting
    from ``n`` samples per side, any adjacent pair with phase difference
    >= pi/2 is bisected, up to 2^16 samples per side.  Returns the integer
    winding; the median boundary log-magnitude is available through
    ``winding_number_detailed``.
    """
    w, _ = winding_number_detailed(f, rect, n)
    return w


def winding_number_detailed(f: Callable, rect, n: int) -> tuple[int, float]:
    (re_lo, re_hi), (im_lo, im_hi) = rect
    if not (re_hi > re_lo and im_hi > im_lo):
        raise ValueError("degenerate rectangle")
    corners = [
        complex(re_lo, im_lo),
        complex(re_hi, im_lo),
        complex(re_hi, im_hi),
        complex(re_lo, im_hi),
    ]
    total = 0.0
    log_mags: list[float] = []
    cache: dict[complex, tuple[float, float]] = {}

    def eval_at(z: complex) -> tuple[float, float]:
        if z not in cache:
            try:
                cache[z] = _phase_and_logmag(f(z))
            except CancellationUnderflowError as exc:
                raise BoundaryZeroError(
                    "boundary magnitude below cancellation budget "
                    "(possible zero on the contour); perturb the rectangle"
                ) from exc
        return cache[z]

    for k in range(4):
        za, zb = corners[k], corners[(k + 1) % 4]
        ts = list(np.linspace(0.0, 1.0, max(2, n)))
        vals = {t: eval_at(za + t * (zb - za)) for t in ts}
        while True:
            gaps = [
                (ts[i], ts[i + 1])
                for i in range(len(ts) - 1)
                if abs(_wrap(vals[ts[i + 1]][0] - vals[ts[i]][0])) >= 0.5 * math.pi
            ]
            if not gaps:
                break
            if len(ts) + len(gaps) > MAX_BOUNDARY_SAMPLES:
                raise WindingError(
                    f"phase not resolved with {MAX_BOUNDARY_SAMPLES} samples per side"
                )
            for t0, t1 in gaps:
                tm = 0.5 * (t0 + t1)
                vals[tm] = eval_at(za + tm * (zb - za))
            ts = sorted(vals.keys())
        for i in range(len(ts) - 1):
            total += _wrap(vals[ts[i + 1]][0] - vals[ts[i]][0])
        log_mags.extend(v[1] for v in vals.values())

    w = total / (2.0 * math.pi)
    wi = int(round(w))
    if abs(w - wi) > 0.25:
        raise WindingError(f"phase sum {w:.6f} turns is not close to an integer")
    return wi, float(np.median(log_mags))


def _newton_refine(
    fl: Callable, dlog: Callable, z0: complex, diam: float, rect
) -> tuple[complex, int]:
    (re_lo, re_hi), (im_lo, im_hi) = rect
    pad = 0.25 * diam
    z = z0
    for step_count in range(1, 61):
        try:
            d = dlog(z)
        except (ZeroDivisionError, OverflowError):
            # Landed exactly on the zero: the log-derivative pole is the root.
            return z, step_count
        if d == 0:
            raise QuadratureError("vanishing logarithmic derivative in Newton")
        if not (math.isfinite(d.real) and math.isfinite(d.imag)):
            return z, step_count
        step = -1.0 / d
        if abs(step) > diam:
            step *= diam / abs(step)
        z = z + step
        if not (re_lo - pad <= z.real <= re_hi + pad and im_lo - pad <= z.imag <= im_hi + pad):
            raise WindingError("Newton iterate escaped the certified leaf")
        if abs(step) <= 1e-13 * (1.0 + abs(z)):
            return z, step_count
    return z, 60


def find_zeros_of(
    fl: Callable,
    dlog: Callable,
    rect,
    lam: float,
    boundary_samples: int = 32,
    max_depth: int = MAX_SUBDIVISION_DEPTH,
) -> ZeroCertificate:
    """Generic scan: fl gives LogComplex values, dlog the log-derivative.

    Recursively quadrisects until every leaf has winding 0 or 1, then runs
    Newton from the leaf center.  Boundary-zero errors trigger up to five
    outward jitters of the offending rectangle; if they persist the
    certificate is returned with ``complete=False``.
    """
    roots: list[ZeroRecord] = []
    complete = True

    def winding_with_jitter(r):
        (a, b), (c, d) = r
        scale = max(b - a, d - c)
        for attempt in range(6):
            try:
                return winding_number_detailed(fl, r, boundary_samples), r
            except BoundaryZeroError:
                if attempt == 5:
                    raise
                eps = (attempt + 1) * 1e-7 * scale
                r = ((a - eps, b + eps), (c - eps, d + eps))
        raise AssertionError("unreachable")

    def scan(r, depth):
        nonlocal complete
        try:
            (w, _median), r_used = winding_with_jitter(r)
        except BoundaryZeroError:
            complete = False
            return
        if w == 0:
            return
        (a, b), (c, d) = r_used
        diam = math.hypot(b - a, d - c)
        if w == 1:
            center = complex(0.5 * (a + b), 0.5 * (c + d))
            try:
                z, steps = _newton_refine(fl, dlog, center, diam, r_used)
                try:
                    res_log = fl(z).log_mag
                except (CancellationUnderflowError, ZeroDivisionError,
                        OverflowError, ValueError):
                    res_log = -math.inf
                roots.append(ZeroRecord(z, res_log, steps, 1))
                return
            except (WindingError, QuadratureError):
                pass  # retry on a smaller leaf below
        if depth >= max_depth:
            # Coincident or unresolved zeros: report the leaf as a cluster.
            center = complex(0.5 * (a + b), 0.5 * (c + d))
            try:
                res_log = fl(center).log_mag
            except (CancellationUnderflowError, ZeroDivisionError,
                    OverflowError, ValueError):
                res_log = -math.inf
            roots.append(ZeroRecord(center, res_log, 0, w))
            return
        mid_re = 0.5 * (a + b)
        mid_im = 0.5 * (c + d)
        scan(((a, mid_re), (c, mid_im)), depth + 1)
        scan(((mid_re, b), (c, mid_im)), depth + 1)
        scan(((a, mid_re), (mid_im, d)), depth + 1)
        scan(((mid_re, b), (mid_im, d)), depth + 1)

    (top_w, top_median), top_rect = winding_with_jitter(rect)
    if top_w != 0:
        scan(top_rect, 0)
    roots.sort(key=lambda r: (r.xi0.real, r.xi0.imag))
    return ZeroCertificate(
        rectangle=tuple((float(x[0]), float(x[1])) for x in top_rect),
        winding=top_w,
        roots=tuple(roots),
        lam=lam,
        boundary_median_log_mag=top_median,
        complete=complete,
    )


def find_zeros(
    p: ConvexPotential,
    lam: float,
    rect,
    boundary_samples: int = 32,
    rel_tol: float = 1e-10,
) -> ZeroCertificate:
    """Scan a rectangle for zeros of xi -> F(xi, lambda), d=1.

    The logarithmic derivative is the companion integral of 2*lambda*x over
    the same contour.
    """
    if p.dimension != 1:
        raise ValueError("zero scanning works on d=1 (use a line slice otherwise)")

    def fl(z: complex) -> LogComplex:
        return log_scriptF(p, z, lam, rel_tol=rel_tol).logF

    def dlog(z: complex) -> complex:
        _, d = log_scriptF_derivative(p, z, lam, rel_tol=rel_tol)
        return d

    return find_zeros_of(fl, dlog, rect, lam, boundary_samples=boundary_samples)


def resonance_deficiency(
    p: ConvexPotential,
    lambdas,
    region,
    grid: int,
    rel_tol: float = 1e-10,
) -> DeficiencyReport:
    """Minimum of D(xi, lambda) over a complex grid, per lambda.

    A cancellation underflow from the integral evaluation is recorded as
    deficiency -infinity at that grid point (data, not failure).  The report
    carries the global minimum and the per-lambda trend.
    """
    if p.dimension != 1:
        raise ValueError("deficiency scan is d=1 only")
    if grid < 8:
        raise ValueError("need at least 8 grid points per axis")
    lambdas = [float(l) for l in lambdas]
    if not lambdas:
        raise ValueError("need at least one lambda")
    (re_lo, re_hi), (im_lo, im_hi) = region
    res = np.linspace(re_lo, re_hi, grid)
    ims = np.linspace(im_lo, im_hi, grid)
    u_vals = {s: u_limit(p, s) for s in res}

    trend: list[tuple[float, float]] = []
    trend_argmin: list[complex] = []
    best = math.inf
    best_xi = complex(res[0], ims[0])
    best_lam = float(lambdas[0])
    for lam in lambdas:
        lam = float(lam)
        m = math.inf
        m_xi = complex(res[0], ims[0])
        for s in res:
            for t in ims:
                z = complex(s, t)
                try:
                    r = log_scriptF(p, z, lam, rel_tol=rel_tol).logF.log_mag / (2.0 * lam)
                    d_val = r - u_vals[s]
                except CancellationUnderflowError:
                    d_val = -math.inf
                if d_val < m:
                    m, m_xi = d_val, z
        trend.append((lam, m))
        trend_argmin.append(m_xi)
        if m < best:
            best, best_xi, best_lam = m, m_xi, lam
    return DeficiencyReport(
        lam=best_lam,
        region=tuple((float(x[0]), float(x[1])) for x in region),
        min_deficiency=best,
        argmin_xi=best_xi,
        im_at_argmin=best_xi.imag,
        trend=tuple(trend),
        trend_argmin=tuple(trend_argmin),
    )
