"""Distribution distances, the quadrature posterior oracle, and the
noise-stability sweep."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (ConfigError, DegenerateDesignError,
                     DegeneratePosteriorError, DimensionError,
                     InvalidDistributionError)
from .inversion import (InversionConfig, NoiseModel, exact_observations,
                        neg_log_likelihood, run_inversion)
from .ringpoly import RingParams

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteDist:
    """Nonnegative weights summing to one on a shared support indexing."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or w.size == 0:
            raise InvalidDistributionError("weights must be a nonempty 1-D array")
        if np.any(w < 0):
            raise InvalidDistributionError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > _NORM_TOL:
            raise InvalidDistributionError(
                f"weights sum to {w.sum():.15f}, not 1 within {_NORM_TOL}")


def _check_pair(p: DiscreteDist, q: DiscreteDist):
    if p.weights.size != q.weights.size:
        raise DimensionError("distributions must share a support size")


def tv_distance(p: DiscreteDist, q: DiscreteDist) -> float:
    _check_pair(p, q)
    return 0.5 * float(np.abs(p.weights - q.weights).sum())


def hellinger_distance(p: DiscreteDist, q: DiscreteDist) -> float:
    _check_pair(p, q)
    d2 = 0.5 * float(((np.sqrt(p.weights) - np.sqrt(q.weights)) ** 2).sum())
    return math.sqrt(min(d2, 1.0))


def posterior_axes(prior, n_points: int = 61, half_width_sds: float = 6.0):
    """Quadrature axes spanning +-half_width_sds prior SDs for two modes."""
    if prior.L != 1:
        raise ConfigError("quadrature posterior supports exactly 2 modes")
    return tuple(np.linspace(-half_width_sds * g, half_width_sds * g, n_points)
                 for g in prior.gamma)


def brute_force_posterior(surrogate_forward, y_star, noise: NoiseModel,
                          prior, grid) -> DiscreteDist:
    """Prior density times exp(-Phi) on a 2-D grid, normalized over cells.

    surrogate_forward maps a coefficient pair to the observation vector;
    grid is a pair of 1-D cell-center axes (one per mode). Cells flatten in
    row-major order.
    """
    g0, g1 = (np.asarray(g, dtype=float) for g in grid)
    y_star = np.asarray(y_star, dtype=float)
    logw = np.empty((g0.size, g1.size))
    for i, a in enumerate(g0):
        for j, b in enumerate(g1):
            v = np.array([a, b])
            phi = neg_log_likelihood(np.asarray(surrogate_forward(v), dtype=float),
                                     y_star, noise)
            logprior = -0.5 * float(np.sum((v / prior.gamma[:2]) ** 2))
            logw[i, j] = logprior - phi
    logw -= logw.max()
    w = np.exp(logw).ravel()
    total = w.sum()
    if total <= 0 or not np.isfinite(total):
        raise DegeneratePosteriorError("posterior weights vanished on the grid")
    return DiscreteDist(w / total)


def bin_chain(samples: np.ndarray, grid) -> DiscreteDist:
    """Histogram 2-D chain samples onto the quadrature cells of the grid."""
    g0, g1 = (np.asarray(g, dtype=float) for g in grid)
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != 2:
        raise DimensionError("samples must be (n, 2)")

    def edges(g):
        mid = 0.5 * (g[1:] + g[:-1])
        return np.concatenate(([-np.inf], mid, [np.inf]))

    i = np.digitize(samples[:, 0], edges(g0)) - 1
    j = np.digitize(samples[:, 1], edges(g1)) - 1
    counts = np.zeros((g0.size, g1.size))
    np.add.at(counts, (i, j), 1.0)
    return DiscreteDist(counts.ravel() / samples.shape[0])


def fit_loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 2:
        raise DimensionError("need equal-length inputs with at least 2 points")
    lx = np.log(x)
    if np.ptp(lx) == 0:
        raise DegenerateDesignError("all scales equal; slope is unidentifiable")
    return float(np.polyfit(lx, np.log(y), 1)[0])


@dataclass(frozen=True)
class StabilityReport:
    gamma_scales: np.ndarray
    mean_abs_errors: np.ndarray  # (n_scales, n_test)
    fitted_slope: np.ndarray  # (n_test,)

    def to_json(self) -> dict:
        return {
            "gamma_scales": self.gamma_scales.tolist(),
            "mean_abs_errors": self.mean_abs_errors.tolist(),
            "fitted_slope": self.fitted_slope.tolist(),
        }


def stability_sweep(truth, train_obs, test_obs, gamma_scales, cfg: InversionConfig,
                    *, params: RingParams, n_draws: int = 4,
                    prediction_burnin: int | None = None,
                    run_one=None, workers: int = 1) -> StabilityReport:
    """Mean absolute test-prediction error as the observation noise grows.

    For each noise scale, draws n_draws noisy observation vectors around the
    oracle y*, inverts each, and averages |prediction - truth| per test
    observable; the report fits a log-log slope per observable. run_one
    substitutes the inversion call in tests: (noise, y_noisy, draw_seed) ->
    prediction means. workers > 1 spreads the (scale, draw) grid over a
    thread pool; every draw is keyed by (seed, scale index, draw index) so
    the report does not depend on scheduling.
    """
    gamma_scales = np.asarray(gamma_scales, dtype=float)
    if gamma_scales.size < 3:
        raise ConfigError("need at least 3 noise scales")
    if np.any(gamma_scales <= 0):
        raise ConfigError("noise scales must be positive")
    if np.ptp(gamma_scales) == 0:
        raise DegenerateDesignError("all scales equal; slope is unidentifiable")

    y_star = exact_observations(truth, train_obs, params)
    test_truth = exact_observations(truth, test_obs, params)

    def one_draw(sd):
        s, d = sd
        noise = NoiseModel.scalar(float(gamma_scales[s]))
        draw_rng = np.random.default_rng(
            np.random.SeedSequence((cfg.seed, s, d, 0xD0A1)))
        y_noisy = y_star + noise.sample(draw_rng, y_star.size)
        if run_one is not None:
            pred = np.asarray(run_one(noise, y_noisy, (cfg.seed, s, d)),
                              dtype=float)
        else:
            sub = replace(cfg, noise=noise,
                          seed=int(np.random.SeedSequence(
                              (cfg.seed, s, d)).generate_state(1)[0]))
            res = run_inversion(truth, train_obs, test_obs, sub,
                                params=params, y_star=y_noisy,
                                prediction_burnin=prediction_burnin)
            pred = np.array([p.mean for p in res.predictions])
        return np.abs(pred - test_truth)

    grid = [(s, d) for s in range(gamma_scales.size) for d in range(n_draws)]
    if workers > 1 and len(grid) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            draw_errs = list(pool.map(one_draw, grid))
    else:
        draw_errs = [one_draw(sd) for sd in grid]
    errors = np.asarray(draw_errs).reshape(gamma_scales.size, n_draws,
                                           len(test_obs)).mean(axis=1)
    slopes = np.array([fit_loglog_slope(gamma_scales, errors[:, j])
                       for j in range(len(test_obs))])
    return StabilityReport(gamma_scales, errors, slopes)
