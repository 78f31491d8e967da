"""Path simulation of the jump SDE by explicit time stepping.

Each step freezes the four rates at the left endpoint and advances

    X' = X + (a0(X) - a2(X) m_eps) dt
           + sqrt(a1(X) dt) N1 + sqrt(a2(X) sigma2_eps dt) N2
           + sum of heavy jumps above the cutoff + sum of atom jumps,

where the heavy-jump count is Poisson with rate a2(X) lam_eps dt and each
jump is an inverse-CDF draw from the stable tail above the cutoff.  Jumps
below the cutoff are replaced by the variance-matched Gaussian N2 and
their mean by the m_eps compensation drift, so the compensated measure is
honored exactly in expectation.  Zero and the cap level are absorbing:
once a path lands at or below the zero floor (clamped to 0) or at or
above the cap it is frozen.

Barrier crossings are detected at grid points only; no bridge correction
is applied between them, which biases passage probabilities slightly low
at coarse steps.  The Monte Carlo tolerances downstream absorb this.

The engine advances whole lanes of paths as numpy vectors.  Lane i always
consumes random stream i regardless of scheduling, so results are
bit-identical for any thread count or block size.
"""

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .criteria import TestFunction, apply_generator
from .model import ValidatedModel
from .numerics.rng import RngStream, StreamBundle

__all__ = [
    "SimConfig",
    "PathState",
    "PassageRecord",
    "StableStepParams",
    "stable_step_params",
    "step",
    "simulate_until",
    "trace_path",
    "martingale_residual",
]

# keep the adaptive step above this; together with the step budget it
# guards against a stalled clock.  It must sit below 0.01/cap_b or the
# floored step breaks the drift budget for states approaching the cap
# and manufactures spurious explosions.
_DT_FLOOR = 1e-15


@dataclass(frozen=True)
class SimConfig:
    """Discretization and truncation controls.

    ``eps_rule`` selects how the small-jump cutoff scales: "absolute"
    uses ``eps_cut`` as is; "relative" uses ``eps_cut * X`` so the jump
    intensity per step stays bounded when paths wander over many decades
    (essential for long-horizon runs of jump models near criticality).
    ``adaptive`` shrinks the step so the relative drift per step and the
    expected jump count per step stay near 1%.
    """
    dt: float
    eps_cut: float
    horizon_t: float
    cap_b: float = 1e12
    floor_zero: float = 0.0
    adaptive: bool = False
    eps_rule: str = "absolute"
    step_budget: int = 10_000_000

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not self.eps_cut > 0.0:
            raise ValueError("eps_cut must be positive")
        if not self.horizon_t > 0.0:
            raise ValueError("horizon_t must be positive")
        if not self.cap_b > 0.0:
            raise ValueError("cap_b must be positive")
        if self.floor_zero < 0.0:
            raise ValueError("floor_zero must be >= 0")
        if self.eps_rule not in ("absolute", "relative"):
            raise ValueError("eps_rule must be 'absolute' or 'relative'")


@dataclass
class PathState:
    t: float
    x: float
    absorbed_zero: bool = False
    capped: bool = False

    @property
    def frozen(self) -> bool:
        return self.absorbed_zero or self.capped


@dataclass
class PassageRecord:
    """First-crossing times of one path (None where never crossed)."""
    tau_a_minus: Optional[float]
    tau_b_plus: Optional[float]
    tau_zero: Optional[float]
    capped_at: Optional[float]
    final: PathState


@dataclass(frozen=True)
class StableStepParams:
    """Per-unit-rate constants of the cutoff decomposition.

    lam_eps: intensity of jumps above the cutoff; m_eps: their mean (also
    the compensation drift); sigma2_eps: variance of the Gaussian stand-in
    for the jumps below the cutoff.
    """
    lam_eps: float
    m_eps: float
    sigma2_eps: float


def stable_step_params(alpha: float, eps: float,
                       u_max: Optional[float] = None,
                       c_alpha: Optional[float] = None) -> StableStepParams:
    """Closed-form cutoff constants for the stable density on U.

    With full support: lam = c eps^-a / a, m = c eps^(1-a) / (a-1),
    sigma2 = c eps^(2-a) / (2-a).  A support cut at u_max truncates the
    tail pieces accordingly; a cutoff at or above u_max leaves no heavy
    jumps at all.
    """
    if not (1.0 < alpha < 2.0):
        raise ValueError("alpha must lie in (1, 2)")
    if not eps > 0.0:
        raise ValueError("eps must be positive")
    a = alpha
    c = a * (a - 1.0) / math.gamma(2.0 - a) if c_alpha is None else c_alpha
    if u_max is not None and eps >= u_max:
        sigma2 = c * u_max ** (2.0 - a) / (2.0 - a)
        return StableStepParams(0.0, 0.0, sigma2)
    lam = c * eps ** (-a) / a
    m = c * eps ** (1.0 - a) / (a - 1.0)
    if u_max is not None:
        lam -= c * u_max ** (-a) / a
        m -= c * u_max ** (1.0 - a) / (a - 1.0)
    sigma2 = c * eps ** (2.0 - a) / (2.0 - a)
    return StableStepParams(lam, m, sigma2)


class _Engine:
    """Vectorized stepping over a block of lanes."""

    def __init__(self, model: ValidatedModel, cfg: SimConfig):
        self.model = model
        self.cfg = cfg
        self.alpha = model.alpha
        self.c = model.c_alpha
        spec = model.spec
        self.a2_active = not getattr(spec.a2, "is_zero", False)
        self.nu_active = (not model.nu_empty
                          and not getattr(spec.a3, "is_zero", False))
        if self.nu_active:
            self.nu_mass = model.nu_mass
            self.nu_cum = np.cumsum(model.nu_w) / self.nu_mass
            self.nu_z = model.nu_z
        else:
            self.nu_mass = 0.0

    def _cutoff_params(self, x):
        """(lam, m, sigma2) arrays for the per-lane cutoff."""
        a, c, cfg = self.alpha, self.c, self.cfg
        eps = cfg.eps_cut * x if cfg.eps_rule == "relative" \
            else np.full_like(x, cfg.eps_cut)
        lam = c * eps ** (-a) / a
        m = c * eps ** (1.0 - a) / (a - 1.0)
        sigma2 = c * eps ** (2.0 - a) / (2.0 - a)
        if self.model.u_max is not None:
            um = self.model.u_max
            cut = eps < um
            lam = np.where(cut, lam - c * um ** (-a) / a, 0.0)
            m = np.where(cut, m - c * um ** (1.0 - a) / (a - 1.0), 0.0)
            sigma2 = np.where(cut, sigma2, c * um ** (2.0 - a) / (2.0 - a))
        return eps, lam, m, sigma2

    def _heavy_jump(self, eps, u):
        """Inverse-CDF stable tail draw above the per-lane cutoff."""
        a = self.alpha
        if self.model.u_max is None:
            return eps * u ** (-1.0 / a)
        um = self.model.u_max
        lo = eps ** (-a)
        hi = um ** (-a)
        return (lo - u * (lo - hi)) ** (-1.0 / a)

    def advance(self, x, t, bundle, idx):
        """One step for the selected active lanes; returns (x', t', dt)."""
        cfg = self.cfg
        m_ = self.model
        a0v = np.asarray(m_.a0(x), dtype=float)
        a1v = np.asarray(m_.a1(x), dtype=float)
        a2v = np.asarray(m_.a2(x), dtype=float) if self.a2_active else None
        a3v = np.asarray(m_.a3(x), dtype=float) if self.nu_active else None

        if self.a2_active:
            eps, lam, m_eps, sig2 = self._cutoff_params(x)
            rate_big = a2v * lam
        else:
            rate_big = 0.0
        rate_nu = a3v * self.nu_mass if self.nu_active else 0.0

        dt = np.full_like(x, cfg.dt)
        if cfg.adaptive:
            total_rate = np.zeros_like(x)
            if self.a2_active:
                total_rate += rate_big
            if self.nu_active:
                total_rate += rate_nu
            lim_drift = np.where(a0v > 0.0,
                                 0.01 * x / np.where(a0v > 0.0, a0v, 1.0),
                                 np.inf)
            lim_jump = np.where(total_rate > 0.0,
                                0.01 / np.where(total_rate > 0.0,
                                                total_rate, 1.0),
                                np.inf)
            dt = np.minimum(dt, np.minimum(lim_drift, lim_jump))
            dt = np.maximum(dt, _DT_FLOOR)
        remaining = cfg.horizon_t - t
        hit_horizon = dt >= remaining
        dt = np.where(hit_horizon, remaining, dt)

        x_new = x + a0v * dt
        if not getattr(m_.spec.a1, "is_zero", False):
            n1 = bundle.normals(idx)
            x_new = x_new + np.sqrt(a1v * dt) * n1
        if self.a2_active:
            n2 = bundle.normals(idx)
            x_new = x_new - a2v * m_eps * dt \
                + np.sqrt(a2v * sig2 * dt) * n2
            n_big = bundle.poissons(rate_big * dt, idx)
            top = int(n_big.max()) if n_big.size else 0
            if top > 256:
                # huge per-step counts: sum each lane's jumps in one flat
                # pass instead of lock-stepping the whole block top times
                jump_sum = np.zeros_like(x)
                for k in range(idx.size):
                    nk = int(n_big[k])
                    if nk == 0:
                        continue
                    offs = np.arange(nk, dtype=np.uint64)
                    u = bundle.uniforms_at(offs, idx[k:k + 1])
                    jump_sum[k] = float(np.sum(self._heavy_jump(eps[k], u)))
                bundle.advance(n_big, idx)
                x_new = x_new + jump_sum
            elif top > 0:
                jump_sum = np.zeros_like(x)
                for j in range(top):
                    has = n_big > j
                    u = bundle.uniforms_at(j, idx)
                    jump_sum += np.where(has, self._heavy_jump(eps, u), 0.0)
                bundle.advance(n_big, idx)
                x_new = x_new + jump_sum
        if self.nu_active:
            n_nu = bundle.poissons(rate_nu * dt, idx)
            top = int(n_nu.max()) if n_nu.size else 0
            if top > 0:
                atom_sum = np.zeros_like(x)
                for j in range(top):
                    has = n_nu > j
                    u = bundle.uniforms_at(j, idx)
                    k = np.searchsorted(self.nu_cum, u)
                    atom_sum += np.where(has, self.nu_z[np.minimum(
                        k, self.nu_z.size - 1)], 0.0)
                bundle.advance(n_nu, idx)
                x_new = x_new + atom_sum
        return x_new, t + dt, dt, hit_horizon


def _run_block(model, cfg, x0, a, b, bundle, horizon=None,
               g: Optional[TestFunction] = None, quad_tol: float = 1e-8,
               trace: bool = False):
    """Simulate one block of lanes to crossing/absorption/cap/horizon.

    Returns a dict of per-lane arrays (crossing times are nan when the
    event never happened) plus the generator integral when g is given.
    """
    horizon = cfg.horizon_t if horizon is None else float(horizon)
    eng = _Engine(model, replace(cfg, horizon_t=horizon))
    n = bundle.size
    x = np.full(n, float(x0))
    t = np.zeros(n)
    tau_a = np.full(n, np.nan)
    tau_b = np.full(n, np.nan)
    tau_zero = np.full(n, np.nan)
    capped_at = np.full(n, np.nan)
    absorbed = np.zeros(n, dtype=bool)
    capped = np.zeros(n, dtype=bool)
    active = np.ones(n, dtype=bool)
    lg_integral = np.zeros(n) if g is not None else None
    path = [(0.0, float(x0))] if trace else None

    iters = 0
    while True:
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        iters += 1
        if iters > cfg.step_budget:
            break
        xa = x[idx]
        ta = t[idx]
        if g is not None:
            lg = _generator_values(model, g, xa, quad_tol)
        x_new, t_new, dt, hit_horizon = eng.advance(xa, ta, bundle, idx)
        if g is not None:
            lg_integral[idx] += lg * dt

        absorbed_now = x_new <= cfg.floor_zero
        x_new = np.where(absorbed_now, 0.0, x_new)
        capped_now = (~absorbed_now) & (x_new >= cfg.cap_b)
        cross_a = x_new < a
        cross_b = x_new > b

        for times, flags in ((tau_a, cross_a), (tau_b, cross_b),
                             (tau_zero, absorbed_now), (capped_at, capped_now)):
            hit = flags & np.isnan(times[idx])
            times[idx[hit]] = t_new[hit]

        x[idx] = x_new
        t[idx] = t_new
        absorbed[idx] |= absorbed_now
        capped[idx] |= capped_now
        done = absorbed_now | capped_now | cross_a | cross_b | hit_horizon
        active[idx[done]] = False
        if trace:
            path.append((float(t_new[0]), float(x_new[0])))

    out = {
        "x": x, "t": t, "tau_a": tau_a, "tau_b": tau_b,
        "tau_zero": tau_zero, "capped_at": capped_at,
        "absorbed": absorbed, "capped": capped,
    }
    if g is not None:
        out["lg_integral"] = lg_integral
    if trace:
        out["trace"] = path
    return out


def _generator_values(model, g, u_vec, quad_tol):
    """Generator of g at a vector of states (left-endpoint evaluation)."""
    u_vec = np.asarray(u_vec, dtype=float)
    vals = np.asarray(model.a0(u_vec) * g.g1(u_vec)
                      + 0.5 * model.a1(u_vec) * g.g2(u_vec), dtype=float)
    spec = model.spec
    if not getattr(spec.a2, "is_zero", False):
        # heavy-jump part needs one quadrature per distinct state
        extra = np.array([
            apply_generator(model, g, float(u), quad_tol)
            - float(model.a0(u)) * float(g.g1(u))
            - 0.5 * float(model.a1(u)) * float(g.g2(u))
            for u in u_vec
        ])
        vals = vals + extra
        return vals
    if not model.nu_empty and not getattr(spec.a3, "is_zero", False):
        acc = np.zeros_like(u_vec)
        for z, w in zip(model.nu_z, model.nu_w):
            acc += w * np.asarray(g.jump_delta(u_vec, z), dtype=float)
        vals = vals + np.asarray(model.a3(u_vec), dtype=float) * acc
    return vals


def step(state: PathState, model: ValidatedModel, cfg: SimConfig,
         rng: RngStream) -> PathState:
    """Advance a single path state by one step."""
    if state.frozen:
        raise ValueError("cannot step a frozen path state")
    eng = _Engine(model, cfg)
    bundle = rng._bundle
    idx = np.array([0])
    x_new, t_new, _, _ = eng.advance(np.array([state.x]),
                                     np.array([state.t]), bundle, idx)
    x1, t1 = float(x_new[0]), float(t_new[0])
    if x1 <= cfg.floor_zero:
        return PathState(t=t1, x=0.0, absorbed_zero=True)
    if x1 >= cfg.cap_b:
        return PathState(t=t1, x=x1, capped=True)
    return PathState(t=t1, x=x1)


def simulate_until(model: ValidatedModel, cfg: SimConfig, x0: float,
                   a: float, b: float, rng: RngStream) -> PassageRecord:
    """Run one path until crossing below a / above b, absorption, cap or
    the configured horizon."""
    if not (0.0 <= a < x0 < b <= cfg.cap_b):
        raise ValueError("need 0 <= a < x0 < b <= cap_b")
    out = _run_block(model, cfg, x0, a, b, rng._bundle)

    def scalar(arr):
        v = float(arr[0])
        return None if math.isnan(v) else v

    final = PathState(t=float(out["t"][0]), x=float(out["x"][0]),
                      absorbed_zero=bool(out["absorbed"][0]),
                      capped=bool(out["capped"][0]))
    return PassageRecord(
        tau_a_minus=scalar(out["tau_a"]),
        tau_b_plus=scalar(out["tau_b"]),
        tau_zero=scalar(out["tau_zero"]),
        capped_at=scalar(out["capped_at"]),
        final=final,
    )


def trace_path(model: ValidatedModel, cfg: SimConfig, x0: float,
               rng: RngStream, max_points: int = 10_000):
    """One path trace as (t, x) arrays, thinned to at most max_points."""
    out = _run_block(model, cfg, x0, a=-1.0, b=np.inf, bundle=rng._bundle,
                     trace=True)
    pts = out["trace"]
    stride = max(1, int(math.ceil(len(pts) / (max_points - 1))))
    thinned = pts[::stride]
    if thinned[-1] != pts[-1]:
        thinned.append(pts[-1])
    ts = np.array([p[0] for p in thinned])
    xs = np.array([p[1] for p in thinned])
    return ts, xs


def martingale_residual(model: ValidatedModel, cfg: SimConfig,
                        g: TestFunction, x0: float, t: float, a: float,
                        b: float, n_paths: int, seed: int,
                        quad_tol: float = 1e-8):
    """Sample mean of g(X at t or first crossing) - g(x0) - integral of
    the generator along the path; near zero when the stopped process is a
    martingale.

    The generator integral is accumulated per step at the left endpoint,
    which matches the stepping scheme exactly.
    """
    if not (0.0 < a < x0 < b):
        raise ValueError("need 0 < a < x0 < b")
    if t > cfg.horizon_t:
        raise ValueError("t must not exceed the configured horizon")
    g.check_derivatives([a, x0, min(b, 10.0 * x0)])
    bundle = StreamBundle(seed, np.arange(int(n_paths), dtype=np.uint64))
    out = _run_block(model, cfg, x0, a, b, bundle, horizon=t,
                     g=g, quad_tol=quad_tol)
    g_final = np.asarray(g.g(out["x"]), dtype=float)
    if not np.all(np.isfinite(g_final)):
        raise FloatingPointError(
            "test function not finite at a stopped state; tighten (a, b)")
    residuals = g_final - float(g.g(x0)) - out["lg_integral"]
    residual = float(residuals.mean())
    stderr = float(residuals.std(ddof=1) / math.sqrt(len(residuals)))
    return {"residual": residual, "stderr": stderr}
