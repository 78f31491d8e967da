"""Boundary-behavior criteria for the validated process model.

The classifier rests on three scalar diagnostics of the model at state u:

* ``phi`` -- the drift index: negative values mean the log-state drifts
  up, positive values mean it drifts down.  Its sign near zero controls
  extinction, its sign near infinity controls explosion.
* ``k_rho`` -- a curvature kernel comparing log(u+z) against log(u) on a
  power scale rho; strictly positive for z > 0.
* ``h_rho`` -- the fluctuation functional at large states: the diffusion
  term plus the jump measures integrated against ``k_rho``.  Bounded
  h_rho at infinity keeps a high-started process high ("stays infinite");
  super-logarithmic growth drags it down in finite time ("comes down
  from infinity").

For pure power-law models with full jump support the signs and growth
orders are decided exactly from exponents and coefficients; anything
else is evaluated on configurable grids and downgraded to inconclusive
when the evidence is mixed.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .model import ValidatedModel
from .numerics import integrate_semiinfinite, integrate_unit, x_minus_log1p
from .numerics.quadrature import integrate_truncated

__all__ = [
    "CriteriaConfig",
    "TestFunction",
    "Verdict",
    "InfinityBehavior",
    "BoundaryReport",
    "RHO_SCAN",
    "phi",
    "phi_with_scale",
    "phi_by_quadrature",
    "k_rho",
    "stable_k_integral",
    "k_integral_bounds",
    "h_rho",
    "apply_generator",
    "classify",
    "ln_test_function",
    "linear_test_function",
    "log_power_test_function",
]

RHO_SCAN = (0.5, 1.0, 2.0, 4.0)

_EXPONENT_TOL = 1e-12
_COEF_REL_TOL = 1e-12
_K_SERIES_SWITCH = 1e-4


class Verdict(str, Enum):
    HOLDS = "holds"
    INCONCLUSIVE = "inconclusive"


class InfinityBehavior(str, Enum):
    STAYS_INFINITE = "stays_infinite"
    COMES_DOWN_FROM_INFINITY = "comes_down_from_infinity"
    INCONCLUSIVE = "inconclusive"


@dataclass
class CriteriaConfig:
    """Evaluation grids and tolerances for the classifier."""
    rho: float = 1.0
    small_u_grid: Tuple[float, ...] = (1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    large_u_grid: Tuple[float, ...] = (1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8)
    quad_tol: float = 1e-10

    def __post_init__(self):
        if not self.rho > 0.0:
            raise ValueError("rho must be positive")
        if len(self.small_u_grid) == 0 or len(self.large_u_grid) == 0:
            raise ValueError("evaluation grids must be nonempty")
        if any(b >= a for a, b in zip(self.small_u_grid, self.small_u_grid[1:])):
            raise ValueError("small_u_grid must be strictly decreasing")
        if any(u <= 0.0 for u in self.small_u_grid):
            raise ValueError("small_u_grid entries must be positive")
        if any(b <= a for a, b in zip(self.large_u_grid, self.large_u_grid[1:])):
            raise ValueError("large_u_grid must be strictly increasing")
        if any(u <= 3.0 for u in self.large_u_grid):
            raise ValueError("large_u_grid entries must exceed 3")


@dataclass
class TestFunction:
    """A C^2 test function with the pieces the generator needs.

    ``jump_delta`` is g(u+z) - g(u); supply a closed form when one exists,
    the default forms the difference directly.  ``jump_remainder`` is the
    second-order combination g(u+z) - g(u) - z g'(u); the default builds
    it from ``jump_delta``, which loses accuracy for z much smaller than u,
    so closed forms matter for tight generator tolerances at large u.
    """
    g: Callable
    g1: Callable
    g2: Callable
    jump_delta: Optional[Callable] = None
    jump_remainder: Optional[Callable] = None

    def __post_init__(self):
        if self.jump_delta is None:
            self.jump_delta = lambda u, z: self.g(u + z) - self.g(u)
        if self.jump_remainder is None:
            self.jump_remainder = self._difference_remainder

    def _difference_remainder(self, u, z):
        # below z ~ u * 1e-5 the formed difference carries no information
        # (g(u+z) rounds to g(u)); the local second-order value is the
        # same quantity to O(z/u) there
        z = np.asarray(z, dtype=float)
        small = z < 1e-5 * u
        direct = self.jump_delta(u, np.where(small, u, z)) \
            - np.where(small, u, z) * self.g1(u)
        local = 0.5 * self.g2(u) * z * z
        return np.where(small, local, direct)

    def derivative_residuals(self, u: float) -> Tuple[float, float]:
        """Scaled central-difference residuals of (g1, g2) at u."""
        h = 1e-5 * u
        fd1 = (self.g(u + h) - self.g(u - h)) / (2.0 * h)
        fd2 = (self.g(u + h) - 2.0 * self.g(u) + self.g(u - h)) / (h * h)
        r1 = abs(self.g1(u) - fd1) / (1.0 + abs(self.g1(u)))
        r2 = abs(self.g2(u) - fd2) / (1.0 + abs(self.g2(u)))
        return r1, r2

    def check_derivatives(self, u_grid, tol: float = 1e-4) -> None:
        for u in np.atleast_1d(u_grid):
            r1, r2 = self.derivative_residuals(float(u))
            if r1 > tol or r2 > tol:
                raise ValueError(
                    f"test function fails the derivative check at u={u}: "
                    f"residuals ({r1:.2e}, {r2:.2e}) exceed {tol}")


def ln_test_function() -> TestFunction:
    return TestFunction(
        g=np.log,
        g1=lambda u: 1.0 / u,
        g2=lambda u: -1.0 / (u * u),
        jump_delta=lambda u, z: np.log1p(z / u),
        jump_remainder=lambda u, z: -x_minus_log1p(z / u),
    )


def linear_test_function() -> TestFunction:
    return TestFunction(
        g=lambda u: np.asarray(u, dtype=float) + 0.0,
        g1=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        g2=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        jump_delta=lambda u, z: np.asarray(z, dtype=float) + 0.0,
        jump_remainder=lambda u, z: np.zeros_like(np.asarray(z, dtype=float)),
    )


def log_power_test_function(rho: float) -> TestFunction:
    """(ln u)^(-rho) above u=3, smoothly extended below.

    The extension is a quintic on [2, 3] matching value and two
    derivatives at 3 and flattening to a constant (zero first and second
    derivative) at 2.  Only values at u > 3 feed any verdict; the
    extension exists so the function is a total C^2 object.
    """
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    l3 = math.log(3.0)
    v3 = l3 ** -rho
    d3 = -rho * l3 ** (-rho - 1.0) / 3.0
    s3 = (rho * l3 ** (-rho - 1.0) + rho * (rho + 1.0) * l3 ** (-rho - 2.0)) / 9.0
    c2 = v3 - d3  # first-order extrapolation keeps the blend monotone
    a_mat = np.array([[ (x - 2.0) ** k for k in range(6)] for x in (2.0, 3.0)])
    d_mat = np.array([[k * (x - 2.0) ** max(k - 1, 0) for k in range(6)]
                      for x in (2.0, 3.0)])
    dd_mat = np.array([[k * (k - 1) * (x - 2.0) ** max(k - 2, 0)
                        for k in range(6)] for x in (2.0, 3.0)])
    system = np.vstack([a_mat[0], d_mat[0], dd_mat[0],
                        a_mat[1], d_mat[1], dd_mat[1]])
    coef = np.linalg.solve(system, np.array([c2, 0.0, 0.0, v3, d3, s3]))

    def _piece(u, deriv):
        scalar = np.ndim(u) == 0
        u = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.empty_like(u)
        lo, mid, hi = u <= 2.0, (u > 2.0) & (u <= 3.0), u > 3.0
        if deriv == 0:
            out[lo] = c2
            out[hi] = np.log(u[hi]) ** -rho
        elif deriv == 1:
            out[lo] = 0.0
            out[hi] = -rho * np.log(u[hi]) ** (-rho - 1.0) / u[hi]
        else:
            out[lo] = 0.0
            lu = np.log(u[hi])
            out[hi] = (rho * lu ** (-rho - 1.0)
                       + rho * (rho + 1.0) * lu ** (-rho - 2.0)) / u[hi] ** 2
        x = u[mid] - 2.0
        if deriv == 0:
            out[mid] = sum(coef[k] * x ** k for k in range(6))
        elif deriv == 1:
            out[mid] = sum(k * coef[k] * x ** (k - 1) for k in range(1, 6))
        else:
            out[mid] = sum(k * (k - 1) * coef[k] * x ** (k - 2)
                           for k in range(2, 6))
        return float(out[0]) if scalar else out

    def _delta(u, z):
        # for u > 3 both arguments sit on the pure branch and the
        # difference has the cancellation-free form
        # (ln u)^-rho * expm1(-rho * log1p(log1p(z/u)/ln u))
        if u > 3.0:
            lnu = math.log(u)
            d = np.log1p(np.asarray(z, dtype=float) / u) / lnu
            return lnu ** -rho * np.expm1(-rho * np.log1p(d))
        return _piece(u + np.asarray(z, dtype=float), 0) - _piece(u, 0)

    return TestFunction(
        g=lambda u: _piece(u, 0),
        g1=lambda u: _piece(u, 1),
        g2=lambda u: _piece(u, 2),
        jump_delta=_delta,
    )


# ---------------------------------------------------------------------------
# scalar diagnostics


def phi_with_scale(model: ValidatedModel, u: float,
                   quad_tol: float = 1e-10) -> Tuple[float, float]:
    """Drift index at u together with the magnitude scale of its terms.

    The scale (sum of absolute term sizes) is what "phi is numerically
    zero" must be judged against: on critical models the terms cancel
    exactly and the value is roundoff-level relative to the scale.
    """
    if u <= 0.0:
        raise ValueError("u must be positive")
    u = float(u)
    t_drift = -model.a0(u) / u
    t_diff = 0.5 * model.a1(u) / (u * u)
    a2u = float(model.a2(u))
    if a2u == 0.0:
        t_jump = 0.0
    else:
        t_jump = a2u * _quadratic_jump_moment(model, u, quad_tol)
    if model.nu_empty:
        t_atoms = 0.0
    else:
        t_atoms = -float(model.a3(u)) * float(
            (model.nu_w * np.log1p(model.nu_z / u)).sum())
    value = t_drift + t_diff + t_jump + t_atoms
    scale = abs(t_drift) + abs(t_diff) + abs(t_jump) + abs(t_atoms)
    return float(value), float(scale)


def phi(model: ValidatedModel, u: float, quad_tol: float = 1e-10) -> float:
    """Drift index at u (see module docstring)."""
    return phi_with_scale(model, u, quad_tol)[0]


def _quadratic_jump_moment(model: ValidatedModel, u: float, tol: float) -> float:
    """int over U of z^2 mu(dz) * int_0^1 (u+vz)^-2 (1-v) dv.

    The inner integral collapses to (z/u - log1p(z/u)) / z^2; on full
    support the whole expression is gamma(alpha) u^(-alpha) exactly, the
    truncated case is integrated numerically.
    """
    a = model.alpha
    if model.full_support:
        return model.gamma_alpha * u ** (-a)
    c = model.c_alpha

    def f(z):
        return c * z ** (-1.0 - a) * x_minus_log1p(z / u)

    r = integrate_truncated(f, model.u_max, tol, head_power=1.0 - a)
    return r.value


def phi_by_quadrature(model: ValidatedModel, u: float,
                      quad_tol: float = 1e-10) -> float:
    """Independent route to ``phi``: both integrals done by quadrature.

    The jump moment is evaluated as a genuinely nested double integral
    (outer in z, inner in v) rather than through the closed inner form;
    used by the self-test battery to cross-check the fast path.
    """
    if u <= 0.0:
        raise ValueError("u must be positive")
    u = float(u)
    a = model.alpha
    c = model.c_alpha

    def f(z):
        z = np.atleast_1d(z)
        inner = np.array([
            integrate_truncated(
                lambda v: (u + v * zz) ** -2 * (1.0 - v), upper=1.0,
                tol=min(1e-12, quad_tol)).value
            for zz in z
        ])
        return c * z ** (1.0 - a) * inner

    if model.full_support:
        moment = integrate_semiinfinite(f, quad_tol, head_power=1.0 - a,
                                        tail_power=-a).value
    else:
        moment = integrate_truncated(f, model.u_max, quad_tol,
                                     head_power=1.0 - a).value

    t_atoms = 0.0
    if not model.nu_empty:
        for z, w in zip(model.nu_z, model.nu_w):
            inner = integrate_unit(lambda v: (u + v * z) ** -1.0, quad_tol).value
            t_atoms -= float(model.a3(u)) * w * z * inner
    return float(-model.a0(u) / u + 0.5 * model.a1(u) / (u * u)
                 + float(model.a2(u)) * moment + t_atoms)


def k_rho(u: float, z, rho: float):
    """Curvature kernel at state u > 3 for jump sizes z >= 0.

    With y = ln(u+z)/ln(u) the kernel is y^(-rho) + rho y - (rho+1),
    which is nonnegative and vanishes only at z = 0.  Below
    y - 1 < 1e-4 the direct form loses most of its digits to
    cancellation, so the evaluation switches to the expansion of the
    second-order Taylor remainder around y = 1; the two branches agree
    to at least 8 digits across the switch.
    """
    if not u > 3.0:
        raise ValueError(f"k_rho requires u > 3, got {u}")
    if not rho > 0.0:
        raise ValueError("rho must be positive")
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0.0):
        raise ValueError("jump sizes must be >= 0")
    lnu = math.log(u)
    d = np.log1p(z_arr / u) / lnu
    small = d < _K_SERIES_SWITCH

    ds = np.where(small, d, 0.0)
    r2, r3, r4, r5 = rho + 2.0, rho + 3.0, rho + 4.0, rho + 5.0
    bracket = (1.0 / 2.0 + ds * (-r2 / 6.0 + ds * (r2 * r3 / 24.0 + ds * (
        -r2 * r3 * r4 / 120.0 + ds * (r2 * r3 * r4 * r5 / 720.0)))))
    series = rho * (rho + 1.0) * ds * ds * bracket

    y = 1.0 + np.where(small, 0.0, d)
    direct = y ** (-rho) + rho * y - (rho + 1.0)

    out = np.where(small, series, direct)
    if out.ndim == 0:
        return float(out)
    return out


def stable_k_integral(model: ValidatedModel, u: float, rho: float,
                      quad_tol: float = 1e-10) -> float:
    """int over U of k_rho(u, z) mu(dz) by adaptive quadrature."""
    a = model.alpha
    c = model.c_alpha

    def f(z):
        return k_rho(u, z, rho) * c * np.asarray(z, dtype=float) ** (-1.0 - a)

    if model.full_support:
        # the kernel grows only logarithmically, so the bare exponential
        # tail map converges; no tail envelope is declared
        return integrate_semiinfinite(f, quad_tol, head_power=1.0 - a).value
    return integrate_truncated(f, model.u_max, quad_tol,
                               head_power=1.0 - a).value


def k_integral_bounds(u: float, rho: float, alpha: float,
                      c_alpha: float) -> Tuple[float, float]:
    """Closed-form lower/upper bounds for the full-support k-integral.

    Upper: rho(rho+1) u^-alpha (ln u)^-2 times the (z ^ z^2) mass of mu;
    the constant uses sup_z ln(1+z)/(z ^ sqrt z) = 1, attained as z -> 0.
    Lower: the same prefactor damped by (1 + ln3/ln u)^(-rho-2) and the
    explicit mass of mu on [1,2] probed at jump fraction >= 1/2.
    """
    if not u > 3.0:
        raise ValueError("bounds require u > 3")
    pre = rho * (rho + 1.0) * u ** (-alpha) * math.log(u) ** -2
    mass_total = c_alpha * (1.0 / (2.0 - alpha) + 1.0 / (alpha - 1.0))
    upper = pre * mass_total
    mass_12 = c_alpha * (1.0 - 2.0 ** (-alpha)) / alpha
    lower = (pre * (1.0 + math.log(3.0) / math.log(u)) ** (-rho - 2.0)
             * math.log(1.5) ** 2 * mass_12 / 8.0)
    return lower, upper


def h_rho(model: ValidatedModel, u: float, rho: float,
          quad_tol: float = 1e-10) -> float:
    """Fluctuation functional at u > 3 (see module docstring)."""
    if not u > 3.0:
        raise ValueError(f"h_rho requires u > 3, got {u}")
    if not rho > 0.0:
        raise ValueError("rho must be positive")
    u = float(u)
    total = 0.5 * float(model.a1(u)) / (u * u)
    a2u = float(model.a2(u))
    if a2u != 0.0:
        total += a2u * stable_k_integral(model, u, rho, quad_tol)
    if not model.nu_empty:
        total += float(model.a3(u)) * float(
            (model.nu_w * k_rho(u, model.nu_z, rho)).sum())
    return total


def apply_generator(model: ValidatedModel, g: TestFunction, u: float,
                    quad_tol: float = 1e-10) -> float:
    """Generator of the process applied to g at state u.

    Drift and diffusion act through g' and g''; the heavy-jump measure is
    integrated against the second-order remainder g(u+z)-g(u)-z g'(u) and
    the atomic measure against the plain difference g(u+z)-g(u).
    """
    if u <= 0.0:
        raise ValueError("u must be positive")
    u = float(u)
    total = float(model.a0(u)) * float(g.g1(u)) \
        + 0.5 * float(model.a1(u)) * float(g.g2(u))
    a2u = float(model.a2(u))
    if a2u != 0.0:
        a = model.alpha
        c = model.c_alpha

        def f(z):
            z = np.asarray(z, dtype=float)
            return np.asarray(g.jump_remainder(u, z), dtype=float) \
                * c * z ** (-1.0 - a)

        if model.full_support:
            # remainder ~ z g'(u) for large z, hence a -alpha tail envelope
            quad = integrate_semiinfinite(f, quad_tol, head_power=1.0 - a,
                                          tail_power=-a)
        else:
            quad = integrate_truncated(f, model.u_max, quad_tol,
                                       head_power=1.0 - a)
        total += a2u * quad.value
    if not model.nu_empty:
        deltas = np.asarray(g.jump_delta(u, model.nu_z), dtype=float)
        total += float(model.a3(u)) * float((model.nu_w * deltas).sum())
    return total


# ---------------------------------------------------------------------------
# classification


@dataclass
class BoundaryReport:
    """Verdicts for the four boundary behaviors plus their evidence."""
    no_extinction: Verdict
    no_explosion: Verdict
    infinity_behavior: InfinityBehavior
    method: str  # "symbolic" or "numeric"
    evidence: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            "no_extinction": self.no_extinction.value,
            "no_explosion": self.no_explosion.value,
            "infinity_behavior": self.infinity_behavior.value,
            "method": self.method,
            "evidence": self.evidence,
        }


def _merge_power_terms(terms):
    """Group (coefficient, exponent) terms, dropping exact cancellations."""
    groups = []
    for coef, expo in terms:
        for grp in groups:
            if abs(grp[1] - expo) <= _EXPONENT_TOL:
                grp[0] += coef
                grp[2] = max(grp[2], abs(coef))
                break
        else:
            groups.append([coef, expo, abs(coef)])
    kept = [(c, e) for c, e, m in groups if abs(c) > _COEF_REL_TOL * m]
    return sorted(kept, key=lambda t: t[1])


def _symbolic_phi_signs(model: ValidatedModel):
    (b0, r0), (b1, r1), (b2, r2), _ = model.power_coefficients()
    terms = [(-b0, r0 - 1.0)]
    if b1 > 0.0:
        terms.append((0.5 * b1, r1 - 2.0))
    if b2 > 0.0:
        terms.append((model.gamma_alpha * b2, r2 - model.alpha))
    merged = _merge_power_terms(terms)
    if not merged:
        return 0, 0, merged
    sign_zero = int(np.sign(merged[0][0]))   # smallest exponent rules u -> 0
    sign_inf = int(np.sign(merged[-1][0]))   # largest exponent rules u -> inf
    return sign_zero, sign_inf, merged


def _classify_symbolic(model: ValidatedModel, cfg: CriteriaConfig) -> BoundaryReport:
    (b0, r0), (b1, r1), (b2, r2), _ = model.power_coefficients()
    sign_zero, sign_inf, merged = _symbolic_phi_signs(model)
    alpha = model.alpha

    h_bounded = ((b1 == 0.0 or r1 <= 2.0 + _EXPONENT_TOL)
                 and (b2 == 0.0 or r2 <= alpha + _EXPONENT_TOL))
    h_superlog = ((b1 > 0.0 and r1 > 2.0 + _EXPONENT_TOL)
                  or (b2 > 0.0 and r2 > alpha + _EXPONENT_TOL))

    no_extinction = Verdict.HOLDS if sign_zero <= 0 else Verdict.INCONCLUSIVE
    no_explosion = Verdict.HOLDS if sign_inf >= 0 else Verdict.INCONCLUSIVE
    if sign_inf <= 0 and h_bounded:
        infinity = InfinityBehavior.STAYS_INFINITE
    elif sign_inf >= 0 and h_superlog:
        infinity = InfinityBehavior.COMES_DOWN_FROM_INFINITY
    else:
        infinity = InfinityBehavior.INCONCLUSIVE

    evidence = {
        "phi_terms": [[c, e] for c, e in merged],
        "phi_sign_near_zero": sign_zero,
        "phi_sign_near_infinity": sign_inf,
        "h_bounded": h_bounded,
        "h_superlogarithmic": h_superlog,
        "rho": cfg.rho,
        "phi_small": [[u, phi(model, u, cfg.quad_tol)]
                      for u in cfg.small_u_grid],
        "phi_large": [[u, phi(model, u, cfg.quad_tol)]
                      for u in cfg.large_u_grid],
    }
    return BoundaryReport(no_extinction, no_explosion, infinity,
                          "symbolic", evidence)


def _grid_sign(vals, scales):
    """Uniform sign over a grid ordered toward its limit, else None.

    Requires every point on the same side (relative to its own term
    scale) and a monotone trend over the last three points.
    """
    vals = np.asarray(vals, dtype=float)
    tols = 1e-9 * np.asarray(scales, dtype=float)
    if np.all(np.abs(vals) <= tols):
        return 0
    if np.all(vals >= -tols):
        sign = 1
    elif np.all(vals <= tols):
        sign = -1
    else:
        return None
    if len(vals) >= 3:
        a, b, c = vals[-3:]
        slack = 1e-9 * max(abs(a), abs(b), abs(c))
        if not (a <= b + slack <= c + 2 * slack
                or a >= b - slack >= c - 2 * slack):
            return None
    return sign


def _classify_numeric(model: ValidatedModel, cfg: CriteriaConfig) -> BoundaryReport:
    phi_small = [phi_with_scale(model, u, cfg.quad_tol)
                 for u in cfg.small_u_grid]
    phi_large = [phi_with_scale(model, u, cfg.quad_tol)
                 for u in cfg.large_u_grid]
    sign_zero = _grid_sign([v for v, _ in phi_small],
                           [s for _, s in phi_small])
    sign_inf = _grid_sign([v for v, _ in phi_large],
                          [s for _, s in phi_large])

    h_grids = {}
    for rho in RHO_SCAN:
        h_grids[rho] = [h_rho(model, u, rho, cfg.quad_tol)
                        for u in cfg.large_u_grid]

    def bounded_evidence(hs):
        if len(hs) < 3:
            return False
        a, b, c = hs[-3:]
        slack = 1e-9 * max(abs(a), abs(b), abs(c), 1e-300)
        return a >= b - slack >= c - 2 * slack

    def superlog_evidence(hs, rho):
        w = [h * math.log(u) ** (-rho - 2.0)
             for h, u in zip(hs, cfg.large_u_grid)]
        if len(w) < 3:
            return False
        increasing = w[-3] <= w[-2] <= w[-1]
        return increasing and w[-1] >= 10.0 * w[0]

    infinity = InfinityBehavior.INCONCLUSIVE
    rho_used = None
    for rho in RHO_SCAN:
        hs = h_grids[rho]
        if sign_inf is not None and sign_inf <= 0 and bounded_evidence(hs):
            infinity = InfinityBehavior.STAYS_INFINITE
            rho_used = rho
            break
        if sign_inf is not None and sign_inf >= 0 and superlog_evidence(hs, rho):
            infinity = InfinityBehavior.COMES_DOWN_FROM_INFINITY
            rho_used = rho
            break

    no_extinction = (Verdict.HOLDS if sign_zero is not None and sign_zero <= 0
                     else Verdict.INCONCLUSIVE)
    no_explosion = (Verdict.HOLDS if sign_inf is not None and sign_inf >= 0
                    else Verdict.INCONCLUSIVE)
    evidence = {
        "phi_small": [[u, v] for u, (v, _) in zip(cfg.small_u_grid, phi_small)],
        "phi_large": [[u, v] for u, (v, _) in zip(cfg.large_u_grid, phi_large)],
        "phi_sign_near_zero": sign_zero,
        "phi_sign_near_infinity": sign_inf,
        "h_large": {str(r): [[u, h] for u, h in zip(cfg.large_u_grid, hs)]
                    for r, hs in h_grids.items()},
        "rho": rho_used if rho_used is not None else cfg.rho,
    }
    return BoundaryReport(no_extinction, no_explosion, infinity,
                          "numeric", evidence)


def classify(model: ValidatedModel,
             cfg: Optional[CriteriaConfig] = None) -> BoundaryReport:
    """Classify the four boundary behaviors of a validated model.

    Power-law models with full jump support and no atoms are decided
    exactly from exponent/coefficient comparisons; everything else is
    evaluated on the configured grids and any mixed evidence yields an
    inconclusive verdict rather than a guess.
    """
    cfg = cfg or CriteriaConfig()
    if model.is_power_law and model.full_support and model.nu_empty:
        return _classify_symbolic(model, cfg)
    return _classify_numeric(model, cfg)
