"""Gaussian-achievable click thresholds via penalized rate maximization.

For a penalty weight alpha > 0 the solver maximizes

    F = p_success - alpha * p_error

over a family of states.  Sweeping alpha traces the upper boundary of
the (p_error, p_success) region the family can reach at a given loss;
a measured point above that boundary is incompatible with every member
of the family.  Single-photon thresholds optimize over displaced
squeezed vacua behind a splitter, pair thresholds over ensembles of
independent two-mode squeezed modes.

Small-rate closed forms of both boundaries are provided as threshold
models with analytic slope and efficiency sensitivity; these are what
the counts analyzer consumes.
"""

import dataclasses
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.optimize import minimize

from .errors import DomainError, SolverError
from .photon_statistics.gaussian import no_click_after_loss
from .photon_statistics.pair_formulas import multimode_click_rates
from .photon_statistics.types import GaussianStateParams

LOG_FLOOR = -690.0  # exp() underflows to zero a bit below this


@dataclass(frozen=True)
class OptimizationConfig:
    """Knobs of the penalized-rate sweeps."""

    alpha_min: float = 1.0
    alpha_max: float = 1e12
    n_points: int = 49
    seed_scales: tuple = (0.5, 1.0, 2.0)
    xatol: float = 1e-10
    maxiter: int = 6000
    warm_maxiter: int = 2000
    mp_dps: int = 50
    residual_tol: float = 1e-5

    def alpha_grid(self):
        if not (0 < self.alpha_min < self.alpha_max):
            raise DomainError("alpha grid bounds must satisfy 0 < min < max")
        return np.geomspace(self.alpha_min, self.alpha_max, self.n_points)


@dataclass(frozen=True)
class RateOptimum:
    """One solved point: the best state of the family at one penalty."""

    alpha: float
    p_success: float
    p_error: float
    objective: float
    residual: float
    params: dict


def _run_simplex(objective, seeds, xatol, maxiter):
    best = None
    for seed in seeds:
        seed = np.asarray(seed, dtype=float)
        # stop once the simplex f-spread is negligible against the
        # objective scale; fatol=0 would spin until exact collapse
        fatol = max(abs(objective(seed)) * 1e-13, 1e-280)
        res = minimize(
            objective,
            seed,
            method="Nelder-Mead",
            options=dict(xatol=xatol, fatol=fatol, maxiter=maxiter, maxfev=2 * maxiter),
        )
        if best is None or res.fun < best.fun:
            best = res
    fvals = best.final_simplex[1]
    scale = max(abs(fvals[0]), 1e-300)
    residual = float((fvals.max() - fvals.min()) / scale)
    return best, residual


def _single_objective(alpha, eta, t_bs):
    def objective(x):
        log_d, log_r, theta = x
        if log_d > 3.0 or log_r > 3.0:
            return 1e10
        params = GaussianStateParams(
            float(np.exp(max(log_d, LOG_FLOOR))),
            float(np.exp(max(log_r, LOG_FLOOR))),
            float(theta),
        )
        q1 = no_click_after_loss(params, eta * t_bs, mathmod=mpmath)
        q2 = no_click_after_loss(params, eta * (1.0 - t_bs), mathmod=mpmath)
        q12 = no_click_after_loss(params, eta, mathmod=mpmath)
        p1 = 1 - q1
        p2 = 1 - q1 - q2 + q12
        return -float(p1 - alpha * p2)

    return objective


def _single_seeds(alpha, eta, t_bs, scales, warm_start):
    # the optimum sits near the locus where one- and two-photon
    # amplitudes cancel: r ~ (d/2)^2, theta = 0, and the success rate
    # scales like sqrt(c / (3 alpha)) with c the small-rate coefficient
    c = eta / (4.0 * (2.0 - eta))
    p1_guess = np.sqrt(c / (3.0 * alpha))
    d0 = 2.0 * np.sqrt(max(p1_guess / (eta * t_bs), 1e-300))
    seeds = []
    if warm_start is not None:
        d, r = warm_start["displacement_amplitude"], warm_start["squeezing"]
        theta = warm_start["relative_angle"]
        if d > 0 and r > 0:
            seeds.append((np.log(d), np.log(r), theta))
        scales = (1.0,)
    for fac in scales:
        d = d0 * fac
        seeds.append((np.log(d), np.log(max((d / 2.0) ** 2, 1e-300)), 0.0))
    if warm_start is None:
        seeds.append((np.log(0.5), np.log(0.05), 0.1))
    return seeds


def maximize_single_rate(alpha, eta, t_bs=0.5, config=OptimizationConfig(),
                         warm_start=None):
    """Best displaced squeezed vacuum at one penalty weight.

    The inner click probabilities run at extended precision because the
    double-click rate at the optimum sits far below the cancellation
    floor of doubles once alpha is large.
    """
    if alpha <= 0:
        raise DomainError(f"alpha must be > 0, got {alpha}")
    with mpmath.workdps(config.mp_dps):
        objective = _single_objective(alpha, eta, t_bs)
        seeds = _single_seeds(alpha, eta, t_bs, config.seed_scales, warm_start)
        maxiter = config.warm_maxiter if warm_start is not None else config.maxiter
        best, residual = _run_simplex(objective, seeds, config.xatol, maxiter)
        log_d, log_r, theta = best.x
        params = GaussianStateParams(
            float(np.exp(max(log_d, LOG_FLOOR))),
            float(np.exp(max(log_r, LOG_FLOOR))),
            float(theta),
        ).canonical()
        q1 = no_click_after_loss(params, eta * t_bs, mathmod=mpmath)
        q2 = no_click_after_loss(params, eta * (1.0 - t_bs), mathmod=mpmath)
        q12 = no_click_after_loss(params, eta, mathmod=mpmath)
        p_success = float(1 - q1)
        p_error = float(1 - q1 - q2 + q12)
    if not np.isfinite(best.fun) or residual > config.residual_tol:
        raise SolverError(
            f"single-rate optimization stalled at alpha={alpha:.3e} "
            f"(residual {residual:.2e})",
            best_point=dataclasses.asdict(params),
            best_value=-best.fun,
        )
    return RateOptimum(
        alpha=float(alpha),
        p_success=p_success,
        p_error=max(p_error, 0.0),
        objective=-float(best.fun),
        residual=residual,
        params=dataclasses.asdict(params),
    )


def _pair_objective(alpha, eta, t_bs):
    def objective(x):
        if np.any(x > -1e-9):
            return 1e10
        mus = np.exp(np.maximum(x, LOG_FLOOR))
        p_s, p_e = multimode_click_rates(mus, eta, t_bs, t_bs)
        return -(p_s - alpha * p_e)

    return objective


def _pair_seeds(alpha, n_modes, scales, warm_start):
    # symmetric brightness is optimal; the small-rate stationarity
    # condition puts it near 1 / (2 alpha (n + 1))
    mu0 = 1.0 / (2.0 * alpha * (n_modes + 1.0))
    seeds = []
    if warm_start is not None:
        mus = np.asarray(warm_start["pair_brightness"], dtype=float)
        if np.all(mus > 0):
            seeds.append(np.log(mus))
        scales = (1.0,)
    for fac in scales:
        seeds.append(np.full(n_modes, np.log(min(mu0 * fac, 0.5))))
    if warm_start is None and n_modes > 1:
        lopsided = np.full(n_modes, np.log(mu0 * 0.1))
        lopsided[0] = np.log(min(0.5, mu0 * n_modes * 5.0))
        seeds.append(lopsided)
    return seeds


def maximize_pair_rate(alpha, eta, n_modes=1, t_bs=0.5, config=OptimizationConfig(),
                       warm_start=None):
    """Best ensemble of two-mode squeezed modes at one penalty weight."""
    if alpha <= 0:
        raise DomainError(f"alpha must be > 0, got {alpha}")
    if n_modes < 1:
        raise DomainError(f"n_modes must be >= 1, got {n_modes}")
    objective = _pair_objective(alpha, eta, t_bs)
    seeds = _pair_seeds(alpha, n_modes, config.seed_scales, warm_start)
    maxiter = config.warm_maxiter if warm_start is not None else config.maxiter
    # simplex iterations needed grow with dimension
    maxiter = maxiter * max(1, n_modes // 2)
    best, residual = _run_simplex(objective, seeds, config.xatol, maxiter)
    mus = np.exp(np.maximum(best.x, LOG_FLOOR))
    p_success, p_error = multimode_click_rates(mus, eta, t_bs, t_bs)
    if not np.isfinite(best.fun) or residual > config.residual_tol:
        raise SolverError(
            f"pair-rate optimization stalled at alpha={alpha:.3e} "
            f"(residual {residual:.2e})",
            best_point={"pair_brightness": mus.tolist()},
            best_value=-best.fun,
        )
    return RateOptimum(
        alpha=float(alpha),
        p_success=float(p_success),
        p_error=float(max(p_error, 0.0)),
        objective=-float(best.fun),
        residual=residual,
        params={"pair_brightness": mus.tolist()},
    )


@dataclass(frozen=True)
class ThresholdCurve:
    """Swept boundary of the Gaussian-reachable click region.

    Points are stored sorted by increasing p_error.  value() and
    slope() interpolate the boundary linearly in log-log space.
    """

    kind: str
    eta: float
    t_bs: float
    n_modes: int
    alphas: np.ndarray
    p_error: np.ndarray
    p_success: np.ndarray
    residuals: np.ndarray
    params: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("single", "pair"):
            raise DomainError(f"unknown curve kind {self.kind!r}")
        order = np.argsort(self.p_error)
        for name in ("alphas", "p_error", "p_success", "residuals"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float)[order])
        object.__setattr__(self, "params", tuple(self.params[i] for i in order))
        if np.any(self.p_error <= 0) or np.any(self.p_success <= 0):
            raise DomainError("curve probabilities must be positive for log interpolation")

    def value(self, p_error):
        """Interpolated success threshold at a given error probability."""
        pe = np.asarray(p_error, dtype=float)
        if np.any(pe < self.p_error[0]) or np.any(pe > self.p_error[-1]):
            raise DomainError(
                f"p_error outside curve support [{self.p_error[0]:.3e}, {self.p_error[-1]:.3e}]"
            )
        out = np.exp(np.interp(np.log(pe), np.log(self.p_error), np.log(self.p_success)))
        return float(out) if out.ndim == 0 else out

    def slope(self, p_error):
        """d(threshold)/d(p_error) of the interpolated boundary."""
        pe = float(p_error)
        t = self.value(pe)
        logs_e = np.log(self.p_error)
        i = min(max(np.searchsorted(logs_e, np.log(pe)) - 1, 0), logs_e.size - 2)
        gamma = (np.log(self.p_success[i + 1]) - np.log(self.p_success[i])) / (
            logs_e[i + 1] - logs_e[i]
        )
        return float(gamma * t / pe)


def single_threshold_curve(eta, t_bs=0.5, config=OptimizationConfig(),
                           on_error="raise"):
    """Sweep the single-photon boundary over the penalty grid.

    on_error "skip" drops points whose solve stalls and records them in
    the curve's meta under "gaps" instead of raising.
    """
    grid = config.alpha_grid()
    # optimum scalings along the sweep: d ~ alpha^(-1/4), r ~ alpha^(-1/2)
    step = grid[1] / grid[0] if grid.size > 1 else 1.0
    optima = []
    gaps = []
    warm = None
    for alpha in grid:
        try:
            opt = maximize_single_rate(alpha, eta, t_bs, config, warm_start=warm)
        except SolverError as exc:
            if on_error != "skip":
                raise
            gaps.append({"alpha": float(alpha), "message": str(exc)})
            warm = None
            continue
        optima.append(opt)
        warm = {
            "displacement_amplitude": opt.params["displacement_amplitude"] * step**-0.25,
            "squeezing": opt.params["squeezing"] * step**-0.5,
            "relative_angle": opt.params["relative_angle"],
        }
    return _curve_from_optima("single", eta, t_bs, 1, optima, config, gaps)


def pair_threshold_curve(eta, n_modes=1, t_bs=0.5, config=OptimizationConfig(),
                         on_error="raise"):
    """Sweep the pair-source boundary over the penalty grid.

    on_error behaves as in single_threshold_curve.
    """
    grid = config.alpha_grid()
    step = grid[1] / grid[0] if grid.size > 1 else 1.0
    optima = []
    gaps = []
    warm = None
    for alpha in grid:
        try:
            opt = maximize_pair_rate(alpha, eta, n_modes, t_bs, config,
                                     warm_start=warm)
        except SolverError as exc:
            if on_error != "skip":
                raise
            gaps.append({"alpha": float(alpha), "message": str(exc)})
            warm = None
            continue
        optima.append(opt)
        # optimal brightness scales like 1 / alpha
        warm = {
            "pair_brightness": [m / step for m in opt.params["pair_brightness"]]
        }
    return _curve_from_optima("pair", eta, t_bs, n_modes, optima, config, gaps)


def _curve_from_optima(kind, eta, t_bs, n_modes, optima, config, gaps=()):
    if len(optima) < 2:
        raise SolverError(
            f"only {len(optima)} of {config.n_points} boundary points solved; "
            "cannot build a curve"
        )
    return ThresholdCurve(
        kind=kind,
        eta=eta,
        t_bs=t_bs,
        n_modes=n_modes,
        alphas=np.array([o.alpha for o in optima]),
        p_error=np.array([o.p_error for o in optima]),
        p_success=np.array([o.p_success for o in optima]),
        residuals=np.array([o.residual for o in optima]),
        params=tuple(o.params for o in optima),
        meta={
            "objective": "p_success - alpha * p_error",
            "optimizer": "nelder-mead, multistart, warm-started sweep",
            "mp_dps": config.mp_dps if kind == "single" else None,
            "alpha_min": config.alpha_min,
            "alpha_max": config.alpha_max,
            "gaps": list(gaps),
        },
    )


@dataclass(frozen=True)
class SinglePhotonThresholdModel:
    """Small-rate single-photon boundary in closed form.

    At low rates the best Gaussian state obeys
    p_success**3 / p_error = eta / (4 (2 - eta)), so the boundary is a
    cube-root law in the error probability.
    """

    eta: float

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise DomainError(f"eta must lie in (0, 1], got {self.eta}")

    @property
    def coefficient(self):
        return self.eta / (4.0 * (2.0 - self.eta))

    def value(self, p_error):
        return np.cbrt(self.coefficient * np.asarray(p_error, dtype=float))

    def slope(self, p_error):
        return self.value(p_error) / (3.0 * np.asarray(p_error, dtype=float))

    def eta_sensitivity(self, p_error):
        dc = 1.0 / (2.0 * (2.0 - self.eta) ** 2)
        return self.value(p_error) * dc / (3.0 * self.coefficient)


@dataclass(frozen=True)
class PairThresholdModel:
    """Small-rate pair boundary, second order in the error probability.

    The many-mode ensemble saturates the boundary, which expands as
    (eta / 2) sqrt(p_error) + (1 - 3 eta / 4 + eta**2 / 8) p_error.
    """

    eta: float

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise DomainError(f"eta must lie in (0, 1], got {self.eta}")

    @property
    def curvature(self):
        return 1.0 - 0.75 * self.eta + self.eta**2 / 8.0

    def value(self, p_error):
        pe = np.asarray(p_error, dtype=float)
        return 0.5 * self.eta * np.sqrt(pe) + self.curvature * pe

    def slope(self, p_error):
        pe = np.asarray(p_error, dtype=float)
        return 0.25 * self.eta / np.sqrt(pe) + self.curvature

    def eta_sensitivity(self, p_error):
        pe = np.asarray(p_error, dtype=float)
        return 0.5 * np.sqrt(pe) + (-0.75 + 0.25 * self.eta) * pe


@dataclass(frozen=True)
class SplitterThresholdModel:
    """Loss-free splitter bound mapped to the success axis.

    Depends only on the splitting ratio; use it when the detection
    efficiency is absorbed into the measured rates rather than modeled.
    It has no efficiency sensitivity by construction.
    """

    t_bs: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.t_bs < 1.0):
            raise DomainError(f"t_bs must lie in (0, 1), got {self.t_bs}")

    @property
    def coefficient(self):
        return self.t_bs**2 / (2.0 * (1.0 - self.t_bs))

    def value(self, p_error):
        return np.cbrt(self.coefficient * np.asarray(p_error, dtype=float))

    def slope(self, p_error):
        return self.value(p_error) / (3.0 * np.asarray(p_error, dtype=float))


def approx_single_threshold(p_error, eta):
    """Closed-form small-rate single-photon success threshold."""
    return SinglePhotonThresholdModel(eta).value(p_error)


def asymptotic_pair_threshold(p_error, eta):
    """Closed-form small-rate pair success threshold."""
    return PairThresholdModel(eta).value(p_error)


def simple_bs_criterion(p_success, t_bs=0.5):
    """Lossless splitter bound: the double-click floor of any Gaussian state.

    Returns the error probability below which a source with the given
    success probability cannot be Gaussian, assuming no loss.
    """
    if not (0.0 < t_bs < 1.0):
        raise DomainError(f"t_bs must lie in (0, 1), got {t_bs}")
    p = np.asarray(p_success, dtype=float)
    return 2.0 * (1.0 - t_bs) * p**3 / t_bs**2


def finite_difference_eta_sensitivity(curve_lo, curve_hi):
    """Numeric d(threshold)/d(eta) from two curves at nearby efficiencies.

    Returns a callable over the overlap of the two supports.
    """
    d_eta = curve_hi.eta - curve_lo.eta
    if d_eta <= 0:
        raise DomainError("curves must be ordered by increasing eta")

    def sensitivity(p_error):
        return (curve_hi.value(p_error) - curve_lo.value(p_error)) / d_eta

    return sensitivity
