"""Inverse gradient map and its Legendre-type value function.

For a strictly convex potential the gradient is a bijection of R^d; ``tau``
inverts it by damped Newton iteration, and ``u_limit`` evaluates

    u(xi) = xi . tau(xi) - phi(tau(xi)),

the large-parameter limit of the normalized log of the dual exponential
integral computed in :mod:`bdl.scriptf`.  The identity grad u = tau makes
``u`` the function whose gradient composed with grad phi is the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .potentials import ConvexPotential, grad1, hess1

MAX_ITERATIONS = 200
RESIDUAL_TOL = 1e-10
DEFAULT_SEARCH_HALFWIDTH = 50.0


class TauConvergenceError(RuntimeError):
    """Newton failed; xi is likely outside the gradient's numerical range."""

    def __init__(self, xi, last_iterate, residual: float, iterations: int):
        super().__init__(
            f"inverse-gradient Newton did not converge for xi={xi} after "
            f"{iterations} iterations (last iterate {last_iterate}, "
            f"residual {residual:.3e})"
        )
        self.xi = xi
        self.last_iterate = last_iterate
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class LegendrePoint:
    xi: np.ndarray
    tau: np.ndarray
    u_value: float
    newton_iterations: int
    residual: float


def _as_vec(xi, d: int) -> np.ndarray:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != (d,):
        raise ValueError(f"xi must have shape ({d},), got {xi.shape}")
    return xi


def tau(
    p: ConvexPotential,
    xi,
    search_halfwidth: float = DEFAULT_SEARCH_HALFWIDTH,
) -> LegendrePoint:
    """Solve grad phi(x) = xi by damped Newton from x0 = 0.

    The step is halved whenever it fails to reduce |grad phi(x) - xi|; by
    strict convexity the solution is unique.  Raises TauConvergenceError
    after MAX_ITERATIONS, carrying the last iterate and residual.
    """
    d = p.dimension
    xi = _as_vec(xi, d)
    tol = RESIDUAL_TOL * (1.0 + float(np.linalg.norm(xi)))
    x = np.zeros(d)
    r = np.asarray(p.gradient(x), dtype=float) - xi
    res = float(np.linalg.norm(r))
    for it in range(1, MAX_ITERATIONS + 1):
        if res <= tol:
            u_value = float(xi @ x - p.value(x))
            return LegendrePoint(xi, x, u_value, it - 1, res)
        H = np.asarray(p.hessian(x), dtype=float)
        try:
            step = np.linalg.solve(H, -r)
        except np.linalg.LinAlgError:
            break
        # Damping: halve until the residual actually decreases.
        t = 1.0
        for _ in range(60):
            cand = x + t * step
            if np.max(np.abs(cand)) <= search_halfwidth:
                rc = np.asarray(p.gradient(cand), dtype=float) - xi
                resc = float(np.linalg.norm(rc))
                if resc < res:
                    x, r, res = cand, rc, resc
                    break
            t *= 0.5
        else:
            break
    if res <= tol:
        u_value = float(xi @ x - p.value(x))
        return LegendrePoint(xi, x, u_value, MAX_ITERATIONS, res)
    raise TauConvergenceError(xi, x, res, MAX_ITERATIONS)


def u_limit(p: ConvexPotential, xi) -> float:
    """xi . tau(xi) - phi(tau(xi)); convex in xi, zero at xi = 0."""
    return tau(p, xi).u_value


def tau_batch_1d(p: ConvexPotential, xis: np.ndarray) -> np.ndarray:
    """Vectorized d=1 inverse gradient over an array of real xi values."""
    if p.dimension != 1:
        raise ValueError("tau_batch_1d requires a 1-d potential")
    xis = np.asarray(xis, dtype=float)
    x = np.zeros_like(xis)
    r = grad1(p, x) - xis
    tol = RESIDUAL_TOL * (1.0 + np.abs(xis))
    for _ in range(MAX_ITERATIONS):
        if np.all(np.abs(r) <= tol):
            return x
        step = -r / hess1(p, x)
        t = np.ones_like(xis)
        for _ in range(60):
            cand = x + t * step
            rc = grad1(p, cand) - xis
            worse = np.abs(rc) >= np.abs(r)
            if not np.any(worse & (np.abs(r) > tol)):
                break
            t = np.where(worse, 0.5 * t, t)
        x = x + t * step
        r = grad1(p, x) - xis
    bad = np.abs(r) > tol
    if np.any(bad):
        i = int(np.argmax(np.abs(r)))
        raise TauConvergenceError(xis[i], x[i], float(abs(r[i])), MAX_ITERATIONS)
    return x


def tau_complex_1d(p: ConvexPotential, xis: np.ndarray) -> np.ndarray:
    """Holomorphic continuation of the d=1 inverse gradient (entire p only).

    Plain Newton in complex arithmetic, seeded with tau(Re xi); valid for
    moderate imaginary parts where grad phi stays invertible.
    """
    if p.analytic_flag != "analytic":
        raise ValueError("complex inverse gradient needs an analytic potential")
    xis = np.asarray(xis, dtype=complex)
    x = tau_batch_1d(p, xis.real).astype(complex)
    tol = RESIDUAL_TOL * (1.0 + np.abs(xis))
    for _ in range(MAX_ITERATIONS):
        r = grad1(p, x) - xis
        if np.all(np.abs(r) <= tol):
            return x
        x = x - r / hess1(p, x)
    r = grad1(p, x) - xis
    i = int(np.argmax(np.abs(r)))
    raise TauConvergenceError(xis[i], x[i], float(abs(r[i])), MAX_ITERATIONS)


def inverse_identity_defect(p: ConvexPotential, samples) -> float:
    """Worst-case failure of grad u (grad phi(x)) = x over the samples.

    grad u is evaluated two ways: exactly as tau (analytic identity) and by
    central finite differences of u_limit; the larger defect is returned.
    """
    d = p.dimension
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    worst = 0.0
    for x in samples:
        xi = np.asarray(p.gradient(x), dtype=float)
        lp = tau(p, xi)
        worst = max(worst, float(np.max(np.abs(lp.tau - x))))
        h = 1e-5 * (1.0 + float(np.linalg.norm(xi)))
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            du = (u_limit(p, xi + e) - u_limit(p, xi - e)) / (2.0 * h)
            worst = max(worst, abs(du - x[j]))
    return worst
