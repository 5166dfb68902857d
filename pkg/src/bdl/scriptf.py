"""The dual exponential integral F(xi, lambda) and its weight context.

For a convex potential phi and complex xi this module evaluates

    F(xi, lambda) = integral over R^d of exp(2*lambda*(xi.x - phi(x))) dx

in overflow-safe log form, together with its leading Laplace asymptotic, the
normalized logarithm r = log|F| / (2*lambda), a pluriharmonicity probe for
log|F|, and the weight bundle (Phi, x_dagger, gamma) used by the weighted
divergence solver.

Two evaluation contours are provided.  The default recenters the real
integration variable at the maximizer x_dagger(Re xi) of the real part of
the exponent; strong oscillatory cancellation (more than the cancellation
budget) is reported as an error, which the zero scanner treats as a
resonance flag.  For entire potentials, ``log_scriptF_saddle`` shifts the
contour through the complex critical point of the exponent, removing the
cancellation; it exists because normalized kernel magnitudes decay like
exp(-c*lambda) and quickly fall below what any fixed-precision evaluation on
the real contour can resolve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .legendre import tau, tau_batch_1d, tau_complex_1d
from .logcomplex import LogComplex, logsumexp_complex
from .potentials import ConvexPotential, grad1, hess1, val1
from .quadrature import (
    CancellationUnderflowError,
    QuadratureError,
    gauss_legendre_panels,
    integrate_log_integrand,
)

__all__ = [
    "WeightContext",
    "ScriptFSample",
    "weight_context",
    "log_scriptF",
    "log_scriptF_real_batch",
    "log_scriptF_saddle",
    "log_scriptF_saddle_batch",
    "log_scriptF_derivative",
    "laplace_log_asymptotic",
    "normalized_log",
    "harmonicity_defect",
    "CancellationUnderflowError",
    "QuadratureError",
]

DEFAULT_REL_TOL = 1e-10
# Tail cut: exp(-c_low * R^2 / 2) < 1e-16 for the recentred variable.
_TAIL_LOG = 16.0 * math.log(10.0)


def _tail_halfwidth(c_low: float) -> float:
    return math.sqrt(2.0 * _TAIL_LOG / c_low)


@dataclass(frozen=True)
class WeightContext:
    """The (lambda, xi, a) bundle with derived Phi, x_dagger, gamma.

    Phi(x) = lambda*(Re xi . x - phi(x)) is concave with unique maximizer
    x_dagger; gamma(x) = a*ln(1+|x-x_dagger|^2) is the logarithmic taper.
    Requires a > d/2 so exp(-gamma) is integrable.
    """

    potential: ConvexPotential
    lam: float
    xi: np.ndarray          # complex, shape (d,)
    a: float
    x_dagger: np.ndarray    # shape (d,)
    Phi_max: float

    def Phi(self, x) -> np.ndarray:
        rho = self.xi.real
        x = np.asarray(x, dtype=float)
        return self.lam * (x @ rho - np.asarray(self.potential.value(x)))

    # d=1 vectorized helpers (used heavily by the divergence solver)
    def Phi1(self, x) -> np.ndarray:
        rho = float(self.xi.real[0])
        x = np.asarray(x, dtype=float)
        return self.lam * (rho * x - val1(self.potential, x))

    def Phi_tilde1(self, x) -> np.ndarray:
        return self.Phi1(x) - self.Phi_max

    def dPhi1(self, x) -> np.ndarray:
        rho = float(self.xi.real[0])
        return self.lam * (rho - grad1(self.potential, np.asarray(x, dtype=float)))

    def gamma1(self, x) -> np.ndarray:
        t = np.asarray(x, dtype=float) - float(self.x_dagger[0])
        return self.a * np.log1p(t * t)

    def dgamma1(self, x) -> np.ndarray:
        t = np.asarray(x, dtype=float) - float(self.x_dagger[0])
        return 2.0 * self.a * t / (1.0 + t * t)


def weight_context(
    p: ConvexPotential, xi, lam: float, a: Optional[float] = None
) -> WeightContext:
    """Build the weight bundle; a defaults to d+2 (comfortably above d/2)."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    d = p.dimension
    xi = np.atleast_1d(np.asarray(xi, dtype=complex))
    if xi.shape != (d,):
        raise ValueError(f"xi must have shape ({d},)")
    if a is None:
        a = float(d + 2)
    if not a > 0.5 * d:
        raise ValueError(f"need a > d/2 = {0.5 * d}, got a = {a}")
    lp = tau(p, xi.real)
    x_dagger = lp.tau
    phi_max = lam * float(xi.real @ x_dagger - p.value(x_dagger))
    return WeightContext(p, float(lam), xi, float(a), x_dagger, phi_max)


@dataclass(frozen=True)
class ScriptFSample:
    xi: np.ndarray
    lam: float
    logF: LogComplex
    quadrature_error_estimate: float
    nodes_used: int


def _check_lambda(lam: float) -> None:
    if lam <= 0:
        raise ValueError("lambda must be positive")


def _oscillation_panels(R: float, lam: float, im_xi: float) -> int:
    # Roughly one oscillation period per panel for the linear phase
    # 2*sqrt(lam)*Im(xi)*s, never fewer than 8 panels.
    periods = 2.0 * R * (2.0 * math.sqrt(lam) * abs(im_xi)) / (2.0 * math.pi)
    return min(4096, max(8, int(math.ceil(1.3 * periods))))


def _log_scriptF_1d(p, xi: complex, lam: float, rel_tol: float) -> ScriptFSample:
    x_dag = float(tau_batch_1d(p, np.array([xi.real]))[0])
    c_low = p.convexity_bounds[0]
    R = _tail_halfwidth(c_low)
    sqrt_lam = math.sqrt(lam)

    def logf(s):
        x = x_dag + s / sqrt_lam
        return 2.0 * lam * (xi * x - val1(p, x).astype(complex))

    res = integrate_log_integrand(
        logf,
        -R,
        R,
        rel_tol=rel_tol,
        initial_panels=_oscillation_panels(R, lam, xi.imag),
    )
    logF = LogComplex(res.value.log_mag - 0.5 * math.log(lam), res.value.phase)
    return ScriptFSample(
        np.array([xi]), lam, logF, res.rel_error, res.nodes
    )


def _log_scriptF_tensor(p, xi: np.ndarray, lam: float, rel_tol: float) -> ScriptFSample:
    d = p.dimension
    x_dag = tau(p, xi.real).tau
    c_low = p.convexity_bounds[0]
    R = _tail_halfwidth(c_low)
    sqrt_lam = math.sqrt(lam)
    max_panels = {2: 64, 3: 16}[d]
    im_max = float(np.max(np.abs(xi.imag)))
    start = min(max_panels, max(4, _oscillation_panels(R, lam, im_max) // 2))

    prev = None
    n_panels = start
    while True:
        nodes, weights = gauss_legendre_panels(-R, R, n_panels, 10)
        axes = np.meshgrid(*([nodes] * d), indexing="ij")
        pts = x_dag + np.stack([ax.ravel() for ax in axes], axis=-1) / sqrt_lam
        g = 2.0 * lam * (pts.astype(complex) @ xi - np.asarray(p.value(pts), dtype=complex))
        wmesh = np.meshgrid(*([weights] * d), indexing="ij")
        wprod = np.ones_like(wmesh[0])
        for wm in wmesh:
            wprod = wprod * wm
        total = logsumexp_complex(g.real, g.imag, wprod.ravel())
        value = LogComplex(total.log_mag - 0.5 * d * math.log(lam), total.phase)
        n_nodes = nodes.size**d
        if prev is not None:
            err = abs(value.log_mag - prev.log_mag) + abs(
                np.angle(np.exp(1j * (value.phase - prev.phase)))
            )
            if err <= max(rel_tol, 1e-13):
                max_term = float(np.max(g.real + np.log(np.abs(wprod).ravel())))
                drop = max_term - value.log_mag
                if drop > 36.0:
                    raise CancellationUnderflowError(drop, max_term)
                return ScriptFSample(xi, lam, value, err, n_nodes)
        if n_panels >= max_panels:
            raise QuadratureError(
                f"tensor quadrature did not converge with {n_panels} panels/axis"
            )
        prev = value
        n_panels = min(max_panels, 2 * n_panels)


def log_scriptF(
    p: ConvexPotential, xi, lam: float, rel_tol: float = DEFAULT_REL_TOL
) -> ScriptFSample:
    """Evaluate F(xi, lambda) on the real contour recentred at x_dagger.

    Works for d <= 3 (tensor-product quadrature beyond d=1).  Raises
    CancellationUnderflowError when oscillatory cancellation exceeds the
    budget (|F| indistinguishable from 0 at working precision) and
    QuadratureError when refinement stalls.
    """
    _check_lambda(lam)
    d = p.dimension
    if d > 3:
        raise ValueError("tensor quadrature supports d <= 3 only")
    xi = np.atleast_1d(np.asarray(xi, dtype=complex))
    if xi.shape != (d,):
        raise ValueError(f"xi must have shape ({d},)")
    if d == 1:
        return _log_scriptF_1d(p, complex(xi[0]), lam, rel_tol)
    return _log_scriptF_tensor(p, xi, lam, rel_tol)


def log_scriptF_real_batch(
    p: ConvexPotential,
    xis: np.ndarray,
    lam: float,
    rel_tol: float = DEFAULT_REL_TOL,
) -> np.ndarray:
    """log F(xi, lambda) for an array of real xi (d=1), vectorized.

    Shares one composite Gauss-Legendre rule in the recentred variable
    across all xi; the panel count is doubled until every row is converged.
    Returns the array of log-magnitudes (F > 0 for real xi).
    """
    _check_lambda(lam)
    if p.dimension != 1:
        raise ValueError("batch evaluation is d=1 only")
    xis = np.asarray(xis, dtype=float)
    x_dag = tau_batch_1d(p, xis)
    c_low = p.convexity_bounds[0]
    R = _tail_halfwidth(c_low)
    sqrt_lam = math.sqrt(lam)

    prev = None
    n_panels = 8
    while True:
        s, w = gauss_legendre_panels(-R, R, n_panels, 10)
        x = x_dag[:, None] + s[None, :] / sqrt_lam
        g = 2.0 * lam * (xis[:, None] * x - val1(p, x))
        m = np.max(g, axis=1)
        sums = np.einsum("j,ij->i", w, np.exp(g - m[:, None]))
        logs = m + np.log(sums) - 0.5 * math.log(lam)
        if prev is not None:
            err = float(np.max(np.abs(logs - prev)))
            if err <= max(rel_tol, 4e-14):
                return logs
        if n_panels >= 4096:
            raise QuadratureError("batch quadrature did not converge")
        prev = logs
        n_panels *= 2


def _saddle_halfwidth(p: ConvexPotential, xc: np.ndarray, lam: float) -> float:
    # Decay rate along the shifted contour is Re phi''(x_c); guard with the
    # global lower bound halved.
    re_h = float(np.min(hess1(p, xc).real))
    c_eff = max(0.5 * p.convexity_bounds[0], min(re_h, p.convexity_bounds[0]))
    return math.sqrt(2.0 * _TAIL_LOG / c_eff)


def log_scriptF_saddle(
    p: ConvexPotential, xi, lam: float, rel_tol: float = DEFAULT_REL_TOL
) -> ScriptFSample:
    """F(xi, lambda) via the contour through the complex critical point.

    Requires an entire potential (analytic_flag == "analytic", d=1).  The
    integration runs over x = tau_c(xi) + t/sqrt(lambda) with real t, where
    tau_c is the holomorphic continuation of the inverse gradient, so the
    phase is stationary at t=0 and deep oscillatory cancellation never
    arises.  Agrees with log_scriptF wherever both converge.
    """
    _check_lambda(lam)
    if p.dimension != 1:
        raise ValueError("saddle contour is d=1 only")
    xi_c = complex(np.atleast_1d(np.asarray(xi, dtype=complex))[0])
    xc = complex(tau_complex_1d(p, np.array([xi_c]))[0])
    R = _saddle_halfwidth(p, np.array([xc]), lam)
    sqrt_lam = math.sqrt(lam)

    def logf(t):
        x = xc + t / sqrt_lam
        return 2.0 * lam * (xi_c * x - val1(p, x))

    res = integrate_log_integrand(logf, -R, R, rel_tol=rel_tol, initial_panels=8)
    logF = LogComplex(res.value.log_mag - 0.5 * math.log(lam), res.value.phase)
    return ScriptFSample(np.array([xi_c]), lam, logF, res.rel_error, res.nodes)


def log_scriptF_saddle_batch(
    p: ConvexPotential,
    xis: np.ndarray,
    lam: float,
    rel_tol: float = DEFAULT_REL_TOL,
) -> np.ndarray:
    """Complex logs of F over an array of complex xi via saddle contours.

    Returns log_mag + i*phase per entry (phases wrapped independently, which
    is harmless for downstream exponentiation).  Entire potentials only.
    """
    _check_lambda(lam)
    if p.dimension != 1:
        raise ValueError("batch evaluation is d=1 only")
    xis = np.asarray(xis, dtype=complex)
    xc = tau_complex_1d(p, xis)
    R = _saddle_halfwidth(p, xc, lam)
    sqrt_lam = math.sqrt(lam)

    prev = None
    n_panels = 8
    while True:
        t, w = gauss_legendre_panels(-R, R, n_panels, 10)
        x = xc[:, None] + t[None, :] / sqrt_lam
        g = 2.0 * lam * (xis[:, None] * x - val1(p, x))
        m = np.max(g.real, axis=1)
        sums = np.einsum("j,ij->i", w, np.exp(g - m[:, None]))
        if np.any(sums == 0):
            raise CancellationUnderflowError(math.inf, float(np.max(m)))
        logs = m + np.log(sums.astype(complex)) - 0.5 * math.log(lam)
        if prev is not None:
            err = float(np.max(np.abs(logs.real - prev.real)))
            if err <= max(rel_tol, 4e-14):
                drops = m + np.log(np.max(w)) - logs.real
                worst = float(np.max(drops))
                if worst > 36.0:
                    raise CancellationUnderflowError(worst, float(np.max(m)))
                return logs
        if n_panels >= 4096:
            raise QuadratureError("saddle batch quadrature did not converge")
        prev = logs
        n_panels *= 2


def log_scriptF_derivative(
    p: ConvexPotential, xi, lam: float, rel_tol: float = DEFAULT_REL_TOL
) -> tuple[ScriptFSample, complex]:
    """(F sample, d/dxi log F) via the companion integral of 2*lambda*x.

    The derivative integral integral 2*lambda*x*exp(2*lambda*(xi*x-phi)) dx
    shares the recentred contour of log_scriptF; the ratio of the two
    integrals is returned as an ordinary complex number.
    """
    sample = log_scriptF(p, xi, lam, rel_tol)
    xi_c = complex(np.atleast_1d(np.asarray(xi, dtype=complex))[0])
    x_dag = float(tau_batch_1d(p, np.array([xi_c.real]))[0])
    c_low = p.convexity_bounds[0]
    R = _tail_halfwidth(c_low)
    sqrt_lam = math.sqrt(lam)

    def logf(s):
        x = x_dag + s / sqrt_lam
        base = 2.0 * lam * (xi_c * x - val1(p, x).astype(complex))
        with np.errstate(divide="ignore", invalid="ignore"):
            lx = np.log(x.astype(complex))
        lx = np.where(x == 0, -np.inf + 0j, lx)
        return base + lx

    res = integrate_log_integrand(
        logf,
        -R,
        R,
        rel_tol=rel_tol,
        initial_panels=_oscillation_panels(R, lam, xi_c.imag),
    )
    log_ratio = (res.value.log_mag - 0.5 * math.log(lam) - sample.logF.log_mag) + 1j * (
        res.value.phase - sample.logF.phase
    )
    dlog = 2.0 * lam * np.exp(log_ratio)
    return sample, complex(dlog)


def laplace_log_asymptotic(p: ConvexPotential, xi, lam: float) -> float:
    """Leading stationary-phase log of F at real xi.

    2*lambda*(xi.tau - phi(tau)) + (d/2)*log(pi/lambda)
    - (1/2)*log det Hessian phi(tau); exact for quadratic potentials.
    """
    _check_lambda(lam)
    d = p.dimension
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    lp = tau(p, xi)
    hess = np.asarray(p.hessian(lp.tau), dtype=float)
    det = float(np.linalg.det(hess.reshape(d, d)))
    return (
        2.0 * lam * lp.u_value
        + 0.5 * d * math.log(math.pi / lam)
        - 0.5 * math.log(det)
    )


def normalized_log(p: ConvexPotential, xi, lam: float, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """r(xi, lambda) = log|F(xi, lambda)| / (2*lambda); tends to u(Re xi)."""
    return log_scriptF(p, xi, lam, rel_tol).logF.log_mag / (2.0 * lam)


def harmonicity_defect(
    p: ConvexPotential,
    box,
    lam: float,
    h: float,
    probe_grid: tuple[int, int] = (9, 7),
    rel_tol: float = 1e-13,
    log_mag_fn=None,
) -> float:
    """Worst 5-point-Laplacian residual of log|F| over a complex box (d=1).

    ``box`` is ((re_lo, re_hi), (im_lo, im_hi)).  The box must be zero-free,
    which is checked through a boundary winding number before probing.  At
    each probe point the discrete Laplacian with step ``h`` is divided by
    h^2; for a genuinely harmonic log|F| the result is pure truncation plus
    quadrature noise.  ``log_mag_fn`` may inject a synthetic function
    xi -> log-magnitude for calibration.
    """
    (re_lo, re_hi), (im_lo, im_hi) = box
    if not (re_hi > re_lo and im_hi > im_lo):
        raise ValueError("degenerate box")
    if log_mag_fn is None:
        from .zeroscan import winding_number

        def f(z):
            s = log_scriptF(p, z, lam, rel_tol=rel_tol)
            return s.logF

        w = winding_number(f, box, 64)
        if w != 0:
            raise ValueError(
                f"box contains {w} zero(s) of F; run the zero scanner first"
            )

        def log_mag(z: complex) -> float:
            return log_scriptF(p, z, lam, rel_tol=rel_tol).logF.log_mag

    else:
        def log_mag(z: complex) -> float:
            return float(log_mag_fn(z))

    margin = 2.0 * h
    res = np.linspace(re_lo + margin, re_hi - margin, probe_grid[0])
    ims = np.linspace(im_lo + margin, im_hi - margin, probe_grid[1])
    worst = 0.0
    for sre in res:
        for sim in ims:
            z = complex(sre, sim)
            lap = (
                log_mag(z + h)
                + log_mag(z - h)
                + log_mag(z + 1j * h)
                + log_mag(z - 1j * h)
                - 4.0 * log_mag(z)
            ) / (h * h)
            worst = max(worst, abs(lap))
    return worst
