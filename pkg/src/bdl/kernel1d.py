"""Model Bergman kernel in one complex variable, and off-diagonal decay fits.

The reproducing kernel of the weighted space of entire functions with norm
integral |f|^2 exp(-2*lambda*phi(Re z)) dm(z) diagonalizes in the Fourier
variable dual to Im z: the sections exp(lambda*xi*z) have pairwise inner
products (2*pi/lambda) * delta(xi - xi') * F(xi, lambda), which gives the
direct-integral representation

    B_lambda(z, w) = (lambda / 2 pi) * integral over real xi of
                     exp(lambda * xi * (z + conj(w))) / F(xi, lambda) dxi.

Evaluation runs over a contour shifted to the complex critical point of the
exponent whenever the potential is entire; this keeps every quadrature free
of deep oscillatory cancellation, which is unavoidable on the real contour
once the normalized kernel magnitude drops below exp(-36) of its scale (at
separation delta and weight lambda the drop is roughly lambda*delta^2/4).
The real-contour variant is kept for cross-validation and for potentials
without an entire continuation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .legendre import tau_batch_1d
from .logcomplex import LogComplex
from .potentials import ConvexPotential, grad1, hess1, val1
from .quadrature import QuadratureError, gauss_legendre_panels, integrate_log_integrand
from .scriptf import log_scriptF_real_batch, log_scriptF_saddle_batch

__all__ = [
    "KernelSample",
    "DecayFit",
    "log_bergman",
    "normalized_offdiag",
    "decay_fit",
    "reproducing_residual",
]

_TAIL_LOG = 16.0 * math.log(10.0)
MAX_XI_NODES = 2_000_000 // 15  # ~2e6 integrand nodes at 15 per panel


@dataclass(frozen=True)
class KernelSample:
    z: complex
    w: complex
    lam: float
    logB: LogComplex
    normalized_log_mag: float
    quadrature_nodes: int


class RealAxisNearZeroError(RuntimeError):
    """F dips far below its Laplace size on the integration ray.

    The kernel quadrature is then invalid; this is itself the resonance
    signal, so run the zero scanner on the offending region.
    """


def _require_d1(p: ConvexPotential) -> None:
    if p.dimension != 1:
        raise ValueError("kernel evaluation is d=1 only")


def _log_bergman_saddle(p, z, w, lam, rel_tol) -> tuple[LogComplex, int]:
    m = 0.5 * (z + np.conjugate(w))
    xi_star = complex(grad1(p, np.array([m], dtype=complex))[0])
    r0 = float((1.0 / hess1(p, np.array([m], dtype=complex))).real[0])
    if r0 <= 0:
        raise QuadratureError(
            "no decaying direction at the complex saddle (Re 1/phi'' <= 0); "
            "separation too large for this potential"
        )
    T = 1.3 * math.sqrt(_TAIL_LOG / (lam * r0))
    nodes_used = 0

    def logf(t):
        nonlocal nodes_used
        nodes_used += t.size
        xi = xi_star + t.astype(complex)
        logs = log_scriptF_saddle_batch(p, xi, lam, rel_tol=rel_tol)
        return 2.0 * lam * m * xi - logs

    for _ in range(6):
        probe = np.array([-T, 0.0, T])
        lp = logf(probe)
        if max(lp[0].real, lp[2].real) <= lp[1].real - 2.0 * _TAIL_LOG + 4.0:
            break
        T *= 1.6
    res = integrate_log_integrand(
        logf, -T, T, rel_tol=rel_tol, initial_panels=12, max_nodes=MAX_XI_NODES * 15
    )
    logB = LogComplex(
        res.value.log_mag + math.log(lam / (2.0 * math.pi)), res.value.phase
    )
    return logB, nodes_used


def _log_bergman_direct(p, z, w, lam, rel_tol) -> tuple[LogComplex, int]:
    s2 = z.real + w.real
    delta = z.imag - w.imag
    x_mid = 0.5 * s2
    xi_hat = float(grad1(p, np.array([x_mid]))[0])
    c_loc = float(hess1(p, np.array([x_mid]))[0])
    T = 1.3 * math.sqrt(_TAIL_LOG * c_loc / lam)
    nodes_used = 0

    def logf(t):
        nonlocal nodes_used
        nodes_used += t.size
        xi = xi_hat + t
        logs = log_scriptF_real_batch(p, xi, lam, rel_tol=rel_tol)
        # Guard: the integrand carries 1/F, so a real-axis near-zero of F
        # (possible only for non-convex stress inputs) invalidates the ray.
        taus = tau_batch_1d(p, xi)
        u_vals = xi * taus - val1(p, taus)
        if np.any(logs - 2.0 * lam * u_vals < -30.0):
            raise RealAxisNearZeroError(
                "F is exponentially small on the integration ray; "
                "run the zero scanner on this region"
            )
        return lam * xi * s2 + 1j * lam * xi * delta - logs

    periods = 2.0 * T * lam * abs(delta) / (2.0 * math.pi)
    panels = min(MAX_XI_NODES, max(12, int(math.ceil(1.3 * periods))))
    res = integrate_log_integrand(
        logf, -T, T, rel_tol=rel_tol, initial_panels=panels,
        max_nodes=MAX_XI_NODES * 15,
    )
    logB = LogComplex(
        res.value.log_mag + math.log(lam / (2.0 * math.pi)), res.value.phase
    )
    return logB, nodes_used


def log_bergman(
    p: ConvexPotential,
    z: complex,
    w: complex,
    lam: float,
    rel_tol: float = 1e-10,
    contour: str = "auto",
) -> KernelSample:
    """Evaluate B_lambda(z, w) from the direct-integral representation.

    ``contour="auto"`` uses the complex-saddle contour for entire potentials
    (valid at any separation) and the real contour otherwise; "direct"
    forces the real contour, whose oscillatory cancellation budget limits
    lambda*delta^2/4 to about 30.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    _require_d1(p)
    z = complex(z)
    w = complex(w)
    if contour == "auto":
        contour = "saddle" if p.analytic_flag == "analytic" else "direct"
    if contour == "saddle":
        logB, nodes = _log_bergman_saddle(p, z, w, lam, rel_tol)
    elif contour == "direct":
        logB, nodes = _log_bergman_direct(p, z, w, lam, rel_tol)
    else:
        raise ValueError(f"unknown contour {contour!r}")
    norm = logB.log_mag - lam * float(val1(p, z.real)) - lam * float(val1(p, w.real))
    return KernelSample(z, w, lam, logB, norm, nodes)


def normalized_offdiag(
    p: ConvexPotential, z: complex, w: complex, lam: float, rel_tol: float = 1e-10
) -> float:
    """Gauge-invariant off-diagonal size log|B(z,w)| - lambda(phi(x_z)+phi(x_w)).

    On the diagonal this is log(lambda/2pi) + O(1); it decays in the
    imaginary separation Im(z - w).
    """
    return log_bergman(p, z, w, lam, rel_tol=rel_tol).normalized_log_mag


@dataclass(frozen=True)
class DecayFit:
    """Least-squares comparison of the two decay laws.

    model_exp fits -c*lambda + beta*log(lambda) + k (the analytic-weight
    law); model_sub fits -A*sqrt(lambda*log(lambda)) + k (the generic smooth
    law).  ``preferred`` picks whichever residual sum is at least twice as
    small, with c > 0 required for the exponential verdict.
    """

    samples: tuple[tuple[float, float], ...]
    model_exp: tuple[float, float, float]
    model_sub: tuple[float, float]
    rss_exp: float
    rss_sub: float
    preferred: str


def decay_fit(samples: Sequence[tuple[float, float]]) -> DecayFit:
    samples = tuple((float(l), float(v)) for l, v in samples)
    if len(samples) < 6:
        raise ValueError("need at least 6 (lambda, log-magnitude) samples")
    lams = np.array([s[0] for s in samples])
    vals = np.array([s[1] for s in samples])
    if np.min(lams) <= 1.0:
        raise ValueError("decay models need lambda > 1")
    if np.max(lams) < 8.0 * np.min(lams):
        raise ValueError(
            "ill-conditioned design: lambda span must cover at least a factor 8"
        )

    design_exp = np.stack([-lams, np.log(lams), np.ones_like(lams)], axis=1)
    coef_exp, _, _, _ = np.linalg.lstsq(design_exp, vals, rcond=None)
    rss_exp = float(np.sum((design_exp @ coef_exp - vals) ** 2))

    design_sub = np.stack([-np.sqrt(lams * np.log(lams)), np.ones_like(lams)], axis=1)
    coef_sub, _, _, _ = np.linalg.lstsq(design_sub, vals, rcond=None)
    rss_sub = float(np.sum((design_sub @ coef_sub - vals) ** 2))

    c = float(coef_exp[0])
    A = float(coef_sub[0])
    tiny = 1e-300
    ratio = rss_sub / max(rss_exp, tiny)
    if ratio > 2.0 and c > 0:
        preferred = "exponential"
    elif ratio < 0.5 and A > 0:
        preferred = "subexponential"
    else:
        preferred = "inconclusive"
    return DecayFit(
        samples=samples,
        model_exp=(c, float(coef_exp[1]), float(coef_exp[2])),
        model_sub=(A, float(coef_sub[1])),
        rss_exp=rss_exp,
        rss_sub=rss_sub,
        preferred=preferred,
    )


def _reproducing_once(p, xi0, z, lam, rx, ry, xi_panels) -> tuple[float, float]:
    """One evaluation of the reproducing integral; returns (residual, edge)."""
    x_star = float(tau_batch_1d(p, np.array([xi0]))[0])
    x_lo = min(x_star, z.real) - rx
    x_hi = max(x_star, z.real) + rx
    c_loc = float(hess1(p, np.array([0.5 * (x_lo + x_hi)]))[0])
    sigma_x = 1.0 / math.sqrt(2.0 * lam * p.convexity_bounds[0])
    sigma_y = math.sqrt(2.0 * c_loc / lam)
    nx_panels = max(4, int(math.ceil((x_hi - x_lo) / sigma_x)))
    ny_panels = max(4, int(math.ceil(2.0 * ry / sigma_y)))
    xs, wxs = gauss_legendre_panels(x_lo, x_hi, nx_panels, 8)
    ys, wys = gauss_legendre_panels(z.imag - ry, z.imag + ry, ny_panels, 8)

    # Master xi grid covering every saddle phi'((x_z + x_w)/2) of the w-grid,
    # with panels resolving the worst oscillation frequency lambda*|dy|.
    mids = 0.5 * (z.real + xs)
    xi_hats = grad1(p, mids)
    T = 1.3 * math.sqrt(_TAIL_LOG * c_loc / lam)
    xi_lo, xi_hi = float(np.min(xi_hats)) - T, float(np.max(xi_hats)) + T
    dy_max = max(abs(z.imag - ys[0]), abs(z.imag - ys[-1])) + 1e-12
    width = min(2.0 * math.pi / (lam * dy_max), T / 2.0)
    n_xi = max(xi_panels, int(math.ceil((xi_hi - xi_lo) / width)))
    xis, wq = gauss_legendre_panels(xi_lo, xi_hi, n_xi, 10)
    logF = log_scriptF_real_batch(p, xis, lam)

    # B(z, w_ij) = (lam/2pi) sum_k wq_k exp(A[i,k] + i P[j,k]) with
    # A = lam*xi*(x_z + x_i) - log F(xi), P = lam*xi*(y_z - y_j): separable,
    # so the grid of kernel values is one scaled matrix product.
    A = lam * np.outer(z.real + xs, xis) - logF[None, :]
    m = np.max(A, axis=1)
    M1 = wq[None, :] * np.exp(A - m[:, None])
    P = np.exp(1j * lam * np.outer(z.imag - ys, xis))
    B_scaled = M1 @ P.T  # (nx, ny), true B = B_scaled * exp(m_i) * lam/2pi

    # Reproducing integrand against exp(lam*xi0*w), normalized by the target.
    phi_x = val1(p, xs)
    log_row = (
        m
        + lam * xi0 * xs
        - 2.0 * lam * phi_x
        + math.log(lam / (2.0 * math.pi))
        - lam * xi0 * z.real
    )
    row = np.exp(log_row) * wxs
    col = wys * np.exp(1j * lam * xi0 * (ys - z.imag))
    terms = row[:, None] * B_scaled * col[None, :]
    acc = complex(np.sum(terms))
    edge = float(
        max(
            np.max(np.abs(terms[0, :])),
            np.max(np.abs(terms[-1, :])),
            np.max(np.abs(terms[:, 0])),
            np.max(np.abs(terms[:, -1])),
        )
    )
    return abs(acc - 1.0), edge


def reproducing_residual(
    p: ConvexPotential,
    xi0: float,
    z: complex,
    lam: float,
    box_radius: Optional[tuple[float, float]] = None,
    xi_panels: int = 8,
) -> float:
    """Relative failure of B to reproduce the section exp(lambda*xi0*w).

    Computes | integral B(z,w) exp(lambda*xi0*w) exp(-2*lambda*phi(x_w)) dm(w)
    - exp(lambda*xi0*z) | / |exp(lambda*xi0*z)| by tensor Gauss-Legendre over
    a Gaussian-tail truncation box in w, sharing a single tabulation of
    log F along the real xi ray across the whole grid.  Intended for small
    lambda (cost grows with lambda through the node counts).
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    _require_d1(p)
    z = complex(z)
    xi0 = float(xi0)
    c_low = p.convexity_bounds[0]
    if box_radius is None:
        # exp(-25) tails: keeps the oscillatory drop within budget while
        # leaving truncation far below quadrature error.
        box_radius = (
            math.sqrt(25.0 / (lam * c_low)),
            math.sqrt(4.0 * 25.0 * float(hess1(p, np.array([z.real]))[0]) / lam),
        )
    rx, ry = box_radius
    if rx <= 0 or ry <= 0:
        raise ValueError("degenerate truncation box (zero radius)")

    prev = None
    for k in range(4):
        residual, edge = _reproducing_once(p, xi0, z, lam, rx, ry, xi_panels * 2**k)
        if prev is not None and abs(residual - prev) <= max(1e-8, 0.05 * residual):
            break
        prev = residual
    if edge > 0.3 * residual and edge > 1e-8:
        warnings.warn(
            "reproducing-property estimate may be truncation-dominated; "
            "enlarge the box",
            RuntimeWarning,
        )
    return float(residual)
