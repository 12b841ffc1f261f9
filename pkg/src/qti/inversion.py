"""Metropolis-Hastings inversion over potential functions.

One outer chain proposes potentials with pCN moves, estimates the training
observables with a fresh seeded trajectory per iteration, and accepts on
the negative log likelihood difference. Runs are independent; every random
draw derives from (master seed, run, iteration), so chains replay bitwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .basis import PotentialCoeffs, PriorSpec
from .errors import ConfigError, DimensionError, DivergenceError
from .pimd import LangevinConfig, batch_means, exact_thermal_average, sample_features
from .ringpoly import RingParams
from .twolevel import (CouplingComponent, TwoLevelPotential,
                       exact_thermal_averages_2level, sample_weight_series)

_PROPOSAL_STREAM = 0x50524F50  # distinct from any iteration index


@dataclass(frozen=True)
class NoiseModel:
    """Observation covariance: scalar * identity, diagonal, or full SPD.

    The representation keeps whatever solves Gamma^-1 v cheap; the full form
    caches a Cholesky factor.
    """

    kind: str
    data: np.ndarray
    chol: np.ndarray | None = None

    @classmethod
    def scalar(cls, scale: float) -> "NoiseModel":
        if scale <= 0:
            raise ConfigError("noise scale must be positive")
        return cls("scalar", np.float64(scale))

    @classmethod
    def diagonal(cls, entries) -> "NoiseModel":
        entries = np.asarray(entries, dtype=float)
        if entries.ndim != 1 or entries.size == 0:
            raise DimensionError("diagonal noise needs a 1-D entry vector")
        if not np.all(entries > 0):
            raise ConfigError("diagonal noise entries must be positive")
        return cls("diagonal", entries)

    @classmethod
    def full(cls, matrix) -> "NoiseModel":
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError("full noise needs a square matrix")
        if not np.allclose(matrix, matrix.T, rtol=1e-10, atol=1e-12):
            raise ConfigError("noise covariance must be symmetric")
        try:
            chol = np.linalg.cholesky(matrix)
        except np.linalg.LinAlgError as exc:
            raise ConfigError("noise covariance must be positive definite") from exc
        return cls("full", matrix, chol)

    def solve(self, v: np.ndarray) -> np.ndarray:
        """Gamma^-1 v."""
        v = np.asarray(v, dtype=float)
        if self.kind == "scalar":
            return v / float(self.data)
        if self.kind == "diagonal":
            if v.shape != self.data.shape:
                raise DimensionError("vector length does not match noise dimension")
            return v / self.data
        if v.shape[0] != self.data.shape[0]:
            raise DimensionError("vector length does not match noise dimension")
        return scipy.linalg.cho_solve((self.chol, True), v)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """One draw of Gamma^(1/2) xi."""
        xi = rng.standard_normal(n)
        if self.kind == "scalar":
            return math.sqrt(float(self.data)) * xi
        if self.kind == "diagonal":
            if n != self.data.size:
                raise DimensionError("n does not match noise dimension")
            return np.sqrt(self.data) * xi
        if n != self.data.shape[0]:
            raise DimensionError("n does not match noise dimension")
        return self.chol @ xi

    def mean_scale(self, n: int) -> float:
        """(1/n) tr Gamma, the per-component noise variance."""
        if self.kind == "scalar":
            return float(self.data)
        if self.kind == "diagonal":
            return float(self.data.mean())
        return float(np.trace(self.data) / n)

    def to_json(self) -> dict:
        if self.kind == "scalar":
            return {"kind": "scalar", "scale": float(self.data)}
        if self.kind == "diagonal":
            return {"kind": "diagonal", "entries": self.data.tolist()}
        return {"kind": "full", "matrix": self.data.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "NoiseModel":
        if data["kind"] == "scalar":
            return cls.scalar(data["scale"])
        if data["kind"] == "diagonal":
            return cls.diagonal(data["entries"])
        if data["kind"] == "full":
            return cls.full(data["matrix"])
        raise ConfigError(f"unknown noise kind {data['kind']!r}")


def neg_log_likelihood(y_hat, y_star, noise: NoiseModel) -> float:
    """Phi = <y_hat, Gamma^-1 (y_hat/2 - y_star)>."""
    y_hat = np.asarray(y_hat, dtype=float)
    y_star = np.asarray(y_star, dtype=float)
    if y_hat.shape != y_star.shape or y_hat.ndim != 1:
        raise DimensionError("observation vectors must be 1-D of equal length")
    return float(y_hat @ noise.solve(0.5 * y_hat - y_star))


def mh_decide(phi_old: float, phi_new: float, rng: np.random.Generator) -> bool:
    """Accept with probability exp(min{0, phi_old - phi_new}); one uniform."""
    u = rng.random()
    return u < math.exp(min(0.0, phi_old - phi_new))


def pcn_gaussian(xi: float, rho: float, rng: np.random.Generator) -> float:
    """rho xi + sqrt(1-rho^2) g. Leaves N(0,1) invariant."""
    if not 0 < rho <= 1:
        raise ConfigError("rho must lie in (0, 1]")
    return rho * xi + math.sqrt(1.0 - rho * rho) * rng.standard_normal()


def pcn_exponential(r: float, rho: float, rng: np.random.Generator) -> float:
    """(rho sqrt(r) + rhobar g1)^2 + (rhobar g2)^2, rhobar = sqrt((1-rho^2)/2).

    Leaves the unit-mean exponential law invariant (sum of two squared
    gaussians with the right scales).
    """
    if r <= 0:
        raise ConfigError("r must be positive")
    if not 0 < rho <= 1:
        raise ConfigError("rho must lie in (0, 1]")
    rhobar = math.sqrt(0.5 * (1.0 - rho * rho))
    g1 = rng.standard_normal()
    g2 = rng.standard_normal()
    return (rho * math.sqrt(r) + rhobar * g1) ** 2 + (rhobar * g2) ** 2


def propose_potential(V: PotentialCoeffs, prior: PriorSpec, rho: float,
                      rng: np.random.Generator) -> PotentialCoeffs:
    """pCN move applied per normalized coordinate v_i / gamma_i."""
    if V.L != prior.L:
        raise DimensionError("coefficient count does not match the prior")
    if not 0 < rho <= 1:
        raise ConfigError("rho must lie in (0, 1]")
    g = rng.standard_normal(prior.L + 1)
    v = rho * V.v + math.sqrt(1.0 - rho * rho) * prior.gamma * g
    return PotentialCoeffs(V.L, v)


def propose_two_level(V: TwoLevelPotential, prior: PriorSpec, rho: float,
                      rng: np.random.Generator) -> TwoLevelPotential:
    """pCN on both diagonals, exponential pCN on each coupling amplitude."""
    v00 = propose_potential(V.v00, prior, rho, rng)
    v11 = propose_potential(V.v11, prior, rho, rng)
    comps = tuple(CouplingComponent(pcn_exponential(g.A, rho, rng), g.c, g.sigma)
                  for g in V.v01)
    return TwoLevelPotential(v00, v11, comps)


@dataclass(frozen=True)
class InversionConfig:
    rho: float
    n_proposals: int
    n_runs: int
    t_ac: int
    noise: NoiseModel
    prior: PriorSpec
    forward: LangevinConfig
    seed: int

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise ConfigError("rho must lie in (0, 1)")
        if self.n_proposals < 1 or self.n_runs < 1:
            raise ConfigError("need at least one proposal and one run")
        if self.t_ac < 1:
            raise ConfigError("t_ac must be >= 1")


@dataclass
class ChainRecord:
    iteration: int
    V: object
    y_hat: np.ndarray
    phi: float
    accepted: bool


@dataclass
class RunResult:
    records: list[ChainRecord]
    test_series: np.ndarray  # (n_iterations+1, n_test) prediction of the held state
    accept_rate: float
    diverged: bool = False
    diagnostic: str = ""


@dataclass
class PredictionSummary:
    mean: float
    se_runs: float
    se_pooled: float
    sd_post: float


@dataclass
class InversionResult:
    runs: list[RunResult]
    predictions: list[PredictionSummary]
    y_star: np.ndarray
    test_truth: np.ndarray | None
    accept_rate: float


@dataclass(frozen=True)
class AcfResult:
    values: np.ndarray
    degenerate: bool


def autocorrelation(series, max_lag: int) -> AcfResult:
    """Normalized empirical ACF at lags 0..max_lag; constant series flag."""
    series = np.asarray(series, dtype=float)
    if series.ndim != 1 or series.size <= max_lag:
        raise DimensionError("series must be 1-D and longer than max_lag")
    x = series - series.mean()
    var = float(x @ x)
    if var == 0.0:
        return AcfResult(np.ones(max_lag + 1), True)
    vals = np.empty(max_lag + 1)
    for lag in range(max_lag + 1):
        vals[lag] = float(x[: series.size - lag] @ x[lag:]) / var
    return AcfResult(vals, False)


def _is_two_level(V) -> bool:
    return isinstance(V, TwoLevelPotential)


def exact_observations(truth, observables, params: RingParams) -> np.ndarray:
    """Oracle thermal averages of the observables under the truth potential."""
    if _is_two_level(truth):
        return exact_thermal_averages_2level(truth, observables,
                                             params.beta, params.M)
    return np.array([exact_thermal_average(truth, o, params.beta, params.M)
                     for o in observables])


def _default_forward(params: RingParams, fwd_cfg: LangevinConfig, train_obs,
                     test_obs, two_level: bool):
    n_train = len(train_obs)

    def run(V, seed):
        cfg = replace(fwd_cfg, seed=seed)
        if two_level:
            sams, _ = sample_weight_series(V, list(train_obs) + list(test_obs),
                                           params, cfg)
        else:
            sams = sample_features(V, list(train_obs) + list(test_obs), params, cfg)
        means = sams.mean(axis=0)
        return means[:n_train], means[n_train:]

    return run


def _initial_potential(truth, prior: PriorSpec):
    if _is_two_level(truth):
        zero = PotentialCoeffs.zero(prior.L)
        return TwoLevelPotential(zero, zero, truth.with_amplitudes(
            np.ones(len(truth.v01))).v01)
    return PotentialCoeffs.zero(prior.L)


def run_inversion(truth, train_obs, test_obs, cfg: InversionConfig, *,
                  params: RingParams, y_star=None, observe_noise: bool = False,
                  forward_fn=None, v_init=None,
                  prediction_burnin: int | None = None,
                  workers: int = 1) -> InversionResult:
    """Full proposal-forward-decide loop over n_runs independent chains.

    truth is a PotentialCoeffs / TwoLevelPotential / closed-form potential;
    y_star overrides the oracle observations computed from it. forward_fn
    (V, seed) -> (y_hat, test_values) replaces the trajectory estimator,
    which is how surrogate forward maps are injected in tests. Predictions
    average the held (accepted) state's test values over every iteration
    past prediction_burnin (default n_proposals // 4); t_ac only sets the
    lag horizon quoted for chain diagnostics. Each summary carries two error
    scales: se_runs/se_pooled gauge the Monte Carlo error of the mean, while
    sd_post is the sample spread of the kept predictions (the sampled
    distribution's own width, which does not shrink with chain length).
    Runs are
    independent; workers > 1 executes them on a thread pool with identical
    results (every draw derives from (seed, run, iteration)).
    """
    two_level = _is_two_level(truth) or _is_two_level(v_init)
    if prediction_burnin is None:
        prediction_burnin = cfg.n_proposals // 4
    if prediction_burnin >= cfg.n_proposals:
        raise ConfigError("prediction_burnin must be below n_proposals")
    n_test = len(test_obs)

    test_truth = None
    if y_star is None:
        y_star = exact_observations(truth, train_obs, params)
    else:
        y_star = np.asarray(y_star, dtype=float)
        if y_star.shape != (len(train_obs),):
            raise DimensionError("y_star length must match the training observables")
    if truth is not None and n_test:
        test_truth = exact_observations(truth, test_obs, params)
    if observe_noise:
        noise_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0xA0B1)))
        y_star = y_star + cfg.noise.sample(noise_rng, y_star.size)

    if forward_fn is None:
        forward_fn = _default_forward(params, cfg.forward, train_obs, test_obs,
                                      two_level)

    def one_run(r: int):
        prop_rng = np.random.default_rng(
            np.random.SeedSequence((cfg.seed, r, _PROPOSAL_STREAM)))
        V = _initial_potential(truth, cfg.prior) if v_init is None else v_init
        records: list[ChainRecord] = []
        series = np.empty((cfg.n_proposals + 1, n_test))
        diverged = False
        diagnostic = ""
        try:
            y_hat, test_vals = forward_fn(V, (cfg.seed, r, 0))
        except DivergenceError as exc:
            return (RunResult([], np.empty((0, n_test)), 0.0, True,
                              f"iteration 0: {exc}"),
                    np.full(n_test, np.nan), np.full(n_test, np.nan))
        phi = neg_log_likelihood(y_hat, y_star, cfg.noise)
        records.append(ChainRecord(0, V, np.asarray(y_hat, dtype=float), phi, True))
        series[0] = test_vals
        n_accept = 0
        for k in range(1, cfg.n_proposals + 1):
            if two_level:
                V_prop = propose_two_level(V, cfg.prior, cfg.rho, prop_rng)
            else:
                V_prop = propose_potential(V, cfg.prior, cfg.rho, prop_rng)
            try:
                y_prop, test_prop = forward_fn(V_prop, (cfg.seed, r, k))
            except DivergenceError as exc:
                diverged = True
                diagnostic = f"iteration {k}: {exc}"
                series = series[:k]
                break
            phi_prop = neg_log_likelihood(y_prop, y_star, cfg.noise)
            accept = mh_decide(phi, phi_prop, prop_rng)
            if accept:
                V, y_hat, phi, test_vals = V_prop, y_prop, phi_prop, test_prop
                n_accept += 1
            records.append(ChainRecord(k, V, np.asarray(y_hat, dtype=float),
                                       phi, accept))
            series[k] = test_vals
        n_done = len(records) - 1
        rate = n_accept / n_done if n_done else 0.0
        result = RunResult(records, series, rate, diverged, diagnostic)
        kept = series[prediction_burnin:] if not diverged else series[:0]
        if kept.shape[0] >= 2:
            pm = kept.mean(axis=0)
            ps = np.array([batch_means(kept[:, j], 16)[1] for j in range(n_test)])
        else:
            pm = np.full(n_test, np.nan)
            ps = np.full(n_test, np.nan)
        return result, pm, ps

    if workers > 1 and cfg.n_runs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one_run, range(cfg.n_runs)))
    else:
        outcomes = [one_run(r) for r in range(cfg.n_runs)]
    runs = [o[0] for o in outcomes]
    per_run_means = [o[1] for o in outcomes]
    per_run_ses = [o[2] for o in outcomes]

    A = np.array(per_run_means)
    S = np.array(per_run_ses)
    kept_all = [r.test_series[prediction_burnin:] for r in runs if not r.diverged]
    pool = np.concatenate(kept_all, axis=0) if kept_all else np.empty((0, n_test))
    predictions = []
    for j in range(n_test):
        col = A[:, j][np.isfinite(A[:, j])]
        secol = S[:, j][np.isfinite(S[:, j])]
        if col.size == 0:
            predictions.append(PredictionSummary(math.nan, math.nan, math.nan,
                                                 math.nan))
            continue
        mean = float(col.mean())
        se_runs = float(col.std(ddof=1) / math.sqrt(col.size)) if col.size > 1 else 0.0
        se_pooled = math.sqrt(se_runs ** 2 + float((secol ** 2).sum()) / col.size ** 2)
        sd_post = float(pool[:, j].std(ddof=1)) if pool.shape[0] > 1 else 0.0
        predictions.append(PredictionSummary(mean, se_runs, se_pooled, sd_post))
    ok_rates = [r.accept_rate for r in runs if not r.diverged]
    overall = float(np.mean(ok_rates)) if ok_rates else 0.0
    return InversionResult(runs, predictions, y_star, test_truth, overall)
