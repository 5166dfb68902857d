"""Convex potential catalog and hypothesis validation.

A potential is a smooth convex phi: R^d -> R with value/gradient/Hessian
callables, normalized so phi(0)=0 and grad phi(0)=0.  The catalog provides
analytic families (quadratic, quartic, cosh, trigonometric perturbation) and
one C-infinity but non-analytic specimen (a compactly supported bump added to
a quadratic).  The validator sweeps a box and checks Hessian positivity plus
finite-difference consistency of the supplied derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

FAMILIES = ("quadratic", "quartic", "cosh", "analytic_trig", "smooth_bump")

# Half-width of the reference box used when convexity bounds need a sweep.
DEFAULT_BOUNDS_HALFWIDTH = 10.0

FD_GRAD_TOL = 1e-6
FD_HESS_TOL = 1e-6


class PotentialError(ValueError):
    """Unknown family or parameters violating convexity."""


@dataclass(frozen=True)
class AffineShift:
    """Record of the affine renormalization phi -> phi - c - g.x."""

    value_offset: float
    gradient_offset: tuple[float, ...]


@dataclass(frozen=True)
class ConvexPotential:
    """A convex potential with exact derivative callables.

    ``value`` maps arrays of shape (..., d) to (...); ``gradient`` to
    (..., d); ``hessian`` to (..., d, d).  All callables are pure and accept
    complex input when ``analytic_flag == "analytic"`` (entire families).
    """

    dimension: int
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    convexity_bounds: tuple[float, float]
    analytic_flag: str = "unknown"  # analytic | smooth-only | unknown
    normalization: Optional[AffineShift] = None
    family: str = ""
    params: tuple[float, ...] = ()
    bound_caveat: Optional[str] = None

    def spec_string(self) -> str:
        if not self.params:
            return self.family
        return self.family + ":" + ",".join(repr(p) for p in self.params)


@dataclass(frozen=True)
class ValidationReport:
    grid_box: tuple[tuple[float, float], ...]
    grid_points: int
    min_eig: float
    max_eig: float
    worst_fd_gradient_error: float
    worst_fd_hessian_error: float
    passed: bool


def _as_points(x, d: int) -> np.ndarray:
    x = np.asarray(x)
    if x.shape == () and d == 1:
        x = x.reshape(1)
    if x.shape[-1] != d:
        raise ValueError(f"expected trailing axis {d}, got shape {x.shape}")
    return x


def _quadratic(q: np.ndarray) -> ConvexPotential:
    d = len(q)
    qv = np.asarray(q, dtype=float)

    def value(x):
        x = _as_points(x, d)
        return 0.5 * np.sum(qv * x * x, axis=-1)

    def gradient(x):
        x = _as_points(x, d)
        return qv * x

    def hessian(x):
        x = _as_points(x, d)
        h = np.zeros(x.shape[:-1] + (d, d), dtype=x.dtype)
        idx = np.arange(d)
        h[..., idx, idx] = qv
        return h

    return ConvexPotential(
        dimension=d,
        value=value,
        gradient=gradient,
        hessian=hessian,
        convexity_bounds=(float(np.min(qv)), float(np.max(qv))),
        analytic_flag="analytic",
        normalization=AffineShift(0.0, (0.0,) * d),
        family="quadratic",
        params=tuple(float(v) for v in qv),
    )


def _quartic(alpha: float, beta: float) -> ConvexPotential:
    # phi = alpha x^2/2 + beta x^4, so quartic[1, 1/4] has grad x + x^3 and
    # Hessian 1 + 3 x^2.
    def value(x):
        x = _as_points(x, 1)[..., 0]
        return 0.5 * alpha * x * x + beta * x**4

    def gradient(x):
        x = _as_points(x, 1)[..., 0]
        return (alpha * x + 4.0 * beta * x**3)[..., None]

    def hessian(x):
        x = _as_points(x, 1)[..., 0]
        return (alpha + 12.0 * beta * x * x)[..., None, None]

    hw = DEFAULT_BOUNDS_HALFWIDTH
    caveat = None
    if beta > 0:
        caveat = (
            "Hessian upper bound 12*beta*x^2 is unbounded on R; "
            f"comparability to the identity certified on |x| <= {hw:g} only"
        )
    return ConvexPotential(
        dimension=1,
        value=value,
        gradient=gradient,
        hessian=hessian,
        convexity_bounds=(alpha, alpha + 12.0 * beta * hw * hw),
        analytic_flag="analytic",
        normalization=AffineShift(0.0, (0.0,)),
        family="quartic",
        params=(alpha, beta),
        bound_caveat=caveat,
    )


def _cosh() -> ConvexPotential:
    def value(x):
        x = _as_points(x, 1)[..., 0]
        return np.cosh(x) - 1.0

    def gradient(x):
        x = _as_points(x, 1)[..., 0]
        return np.sinh(x)[..., None]

    def hessian(x):
        x = _as_points(x, 1)[..., 0]
        return np.cosh(x)[..., None, None]

    hw = DEFAULT_BOUNDS_HALFWIDTH
    return ConvexPotential(
        dimension=1,
        value=value,
        gradient=gradient,
        hessian=hessian,
        convexity_bounds=(1.0, math.cosh(hw)),
        analytic_flag="analytic",
        normalization=AffineShift(0.0, (0.0,)),
        family="cosh",
        params=(),
        bound_caveat=(
            "Hessian cosh(x) is unbounded on R; comparability to the "
            f"identity certified on |x| <= {hw:g} only"
        ),
    )


def _analytic_trig(alpha: float, eps: float, omega: float) -> ConvexPotential:
    low = alpha - eps * omega * omega
    if low <= 0:
        raise PotentialError(
            "analytic_trig requires alpha > eps*omega^2 for convexity; "
            f"minimal Hessian alpha - eps*omega^2 = {low:g} <= 0"
        )

    def value(x):
        x = _as_points(x, 1)[..., 0]
        return 0.5 * alpha * x * x + eps * (1.0 - np.cos(omega * x))

    def gradient(x):
        x = _as_points(x, 1)[..., 0]
        return (alpha * x + eps * omega * np.sin(omega * x))[..., None]

    def hessian(x):
        x = _as_points(x, 1)[..., 0]
        return (alpha + eps * omega * omega * np.cos(omega * x))[..., None, None]

    return ConvexPotential(
        dimension=1,
        value=value,
        gradient=gradient,
        hessian=hessian,
        convexity_bounds=(low, alpha + eps * omega * omega),
        analytic_flag="analytic",
        normalization=AffineShift(0.0, (0.0,)),
        family="analytic_trig",
        params=(alpha, eps, omega),
    )


def _bump_raw(x: np.ndarray) -> np.ndarray:
    """exp(-1/(1-x^2)) on (-1,1), zero outside; C-infinity, not analytic."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (1.0 - xi * xi))
    return out


def _bump_d1(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    u = 1.0 - xi * xi
    out[inside] = np.exp(-1.0 / u) * (-2.0 * xi / (u * u))
    return out


def _bump_d2(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    u = 1.0 - xi * xi
    # d/dx[-2x/u^2] = -2/u^2 - 8x^2/u^3, plus the chain term (2x/u^2)^2
    out[inside] = np.exp(-1.0 / u) * (
        (2.0 * xi / (u * u)) ** 2 - 2.0 / (u * u) - 8.0 * xi * xi / (u**3)
    )
    return out


def _smooth_bump(alpha: float, eps: float) -> ConvexPotential:
    if eps < 0:
        raise PotentialError("smooth_bump requires eps >= 0")
    grid = np.linspace(-1.0, 1.0, 20001)
    min_hess = alpha + eps * float(np.min(_bump_d2(grid)))
    if min_hess <= 0:
        raise PotentialError(
            "smooth_bump parameters violate convexity; minimal Hessian "
            f"alpha + eps*min(B'') = {min_hess:g} <= 0"
        )
    b0 = math.exp(-1.0)  # bump value at 0; subtracted so phi(0) = 0

    def value(x):
        x = _as_points(x, 1)[..., 0]
        return 0.5 * alpha * x * x + eps * (_bump_raw(x) - b0)

    def gradient(x):
        x = _as_points(x, 1)[..., 0]
        return (alpha * x + eps * _bump_d1(x))[..., None]

    def hessian(x):
        x = _as_points(x, 1)[..., 0]
        return (alpha + eps * _bump_d2(x))[..., None, None]

    max_hess = alpha + eps * float(np.max(_bump_d2(grid)))
    return ConvexPotential(
        dimension=1,
        value=value,
        gradient=gradient,
        hessian=hessian,
        convexity_bounds=(min_hess, max(alpha, max_hess)),
        analytic_flag="smooth-only",
        normalization=AffineShift(eps * b0, (0.0,)),
        family="smooth_bump",
        params=(alpha, eps),
    )


def catalog(name: str, params: Sequence[float] = ()) -> ConvexPotential:
    """Instantiate a named potential family.

    Families (d=1 unless noted):
      quadratic   params (q,) or (q_1..q_d): phi = sum q_i x_i^2 / 2, any d
      quartic     params (alpha, beta):      phi = alpha x^2/2 + beta x^4/4
      cosh        no params:                 phi = cosh(x) - 1
      analytic_trig params (alpha, eps, omega): phi = alpha x^2/2 + eps(1-cos(omega x))
      smooth_bump params (alpha, eps):       quadratic plus eps * C-infinity bump

    Raises PotentialError for unknown names or parameters that violate
    convexity (the message carries the failing Hessian bound).
    """
    params = tuple(float(p) for p in params)
    if name == "quadratic":
        if not params:
            raise PotentialError("quadratic requires at least one coefficient")
        if any(q <= 0 for q in params):
            raise PotentialError(
                f"quadratic requires q > 0; minimal Hessian {min(params):g} <= 0"
            )
        return _quadratic(np.array(params))
    if name == "quartic":
        if len(params) != 2:
            raise PotentialError("quartic requires params (alpha, beta)")
        alpha, beta = params
        if alpha <= 0 or beta < 0:
            raise PotentialError(
                f"quartic requires alpha > 0, beta >= 0; minimal Hessian {alpha:g}"
            )
        return _quartic(alpha, beta)
    if name == "cosh":
        if params:
            raise PotentialError("cosh takes no parameters")
        return _cosh()
    if name == "analytic_trig":
        if len(params) != 3:
            raise PotentialError("analytic_trig requires params (alpha, eps, omega)")
        alpha, eps, omega = params
        if alpha <= 0 or eps < 0:
            raise PotentialError("analytic_trig requires alpha > 0, eps >= 0")
        return _analytic_trig(alpha, eps, omega)
    if name == "smooth_bump":
        if len(params) != 2:
            raise PotentialError("smooth_bump requires params (alpha, eps)")
        alpha, eps = params
        if alpha <= 0:
            raise PotentialError("smooth_bump requires alpha > 0")
        return _smooth_bump(alpha, eps)
    raise PotentialError(f"unknown potential family {name!r}; know {FAMILIES}")


def parse_potential_spec(spec: str) -> ConvexPotential:
    """Parse a CLI potential string ``family:param1,param2,...``."""
    name, _, rest = spec.partition(":")
    name = name.strip()
    params = [float(tok) for tok in rest.split(",") if tok.strip()] if rest else []
    return catalog(name, params)


def translate(p: ConvexPotential, b: Sequence[float]) -> ConvexPotential:
    """The shifted potential x -> phi(x - b), without renormalization."""
    b = np.asarray(b, dtype=float)
    if b.shape != (p.dimension,):
        raise ValueError(f"shift must have shape ({p.dimension},)")
    return ConvexPotential(
        dimension=p.dimension,
        value=lambda x: p.value(_as_points(x, p.dimension) - b),
        gradient=lambda x: p.gradient(_as_points(x, p.dimension) - b),
        hessian=lambda x: p.hessian(_as_points(x, p.dimension) - b),
        convexity_bounds=p.convexity_bounds,
        analytic_flag=p.analytic_flag,
        normalization=None,
        family=p.family,
        params=p.params,
        bound_caveat=p.bound_caveat,
    )


def val1(p: ConvexPotential, x) -> np.ndarray:
    """phi on a plain array of scalars (d=1 only)."""
    if p.dimension != 1:
        raise ValueError("val1 requires a 1-d potential")
    return p.value(np.asarray(x)[..., None])


def grad1(p: ConvexPotential, x) -> np.ndarray:
    if p.dimension != 1:
        raise ValueError("grad1 requires a 1-d potential")
    return p.gradient(np.asarray(x)[..., None])[..., 0]


def hess1(p: ConvexPotential, x) -> np.ndarray:
    if p.dimension != 1:
        raise ValueError("hess1 requires a 1-d potential")
    return p.hessian(np.asarray(x)[..., None])[..., 0, 0]


def _grid_points(box, n: int, d: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, n) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _normalize_box(box, d: int):
    box = np.asarray(box, dtype=float)
    if box.shape == (2,):
        box = np.tile(box, (d, 1))
    if box.shape != (d, 2) or np.any(box[:, 1] <= box[:, 0]):
        raise ValueError(f"box must be {d} nondegenerate (lo, hi) pairs")
    return tuple((float(lo), float(hi)) for lo, hi in box)


def validate(p: ConvexPotential, box, n: int) -> ValidationReport:
    """Sweep a box: Hessian eigenvalue range plus finite-difference checks.

    Failures are reported through the ``passed`` flag, never raised.  The
    finite-difference step is 1e-5*(1+|x|) per coordinate.
    """
    if n < 2:
        raise ValueError("need n >= 2 grid points per axis")
    d = p.dimension
    box = _normalize_box(box, d)
    pts = _grid_points(box, n, d)

    hess = np.asarray(p.hessian(pts), dtype=float)
    eigs = np.linalg.eigvalsh(hess) if d > 1 else hess[..., 0, 0]
    min_eig = float(np.min(eigs))
    max_eig = float(np.max(eigs))

    grad = np.asarray(p.gradient(pts), dtype=float)
    val_scale = 1.0 + np.max(np.abs(grad), axis=-1)
    worst_g = 0.0
    worst_h = 0.0
    for j in range(d):
        h = 1e-5 * (1.0 + np.abs(pts[:, j]))
        e = np.zeros(d)
        e[j] = 1.0
        vp = np.asarray(p.value(pts + h[:, None] * e), dtype=float)
        vm = np.asarray(p.value(pts - h[:, None] * e), dtype=float)
        fd_g = (vp - vm) / (2.0 * h)
        worst_g = max(worst_g, float(np.max(np.abs(fd_g - grad[:, j]) / val_scale)))
        gp = np.asarray(p.gradient(pts + h[:, None] * e), dtype=float)
        gm = np.asarray(p.gradient(pts - h[:, None] * e), dtype=float)
        fd_h = (gp - gm) / (2.0 * h[:, None])
        hess_scale = 1.0 + np.abs(hess[:, :, j])
        worst_h = max(
            worst_h, float(np.max(np.abs(fd_h - hess[:, :, j]) / hess_scale))
        )

    passed = min_eig > 0 and worst_g <= FD_GRAD_TOL and worst_h <= FD_HESS_TOL
    return ValidationReport(
        grid_box=box,
        grid_points=n,
        min_eig=min_eig,
        max_eig=max_eig,
        worst_fd_gradient_error=worst_g,
        worst_fd_hessian_error=worst_h,
        passed=passed,
    )
