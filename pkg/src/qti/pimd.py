"""BAOAB Langevin sampling of the ring-polymer Gibbs distribution.

Provides the single-step reference integrator, the Monte Carlo forward
estimator for thermal averages, and two independent oracles: a banded
finite-difference eigensolver and the closed-form harmonic ring variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from . import _kernels
from .basis import PotentialCoeffs
from .errors import ConfigError, DivergenceError, InvalidGridError, OracleError
from .ringpoly import GaussianBump, Observable, RingParams, RingState, ScaledHermite, force

_CHUNK = 8192


@dataclass(frozen=True)
class LangevinConfig:
    """Time step, friction, step counts, thinning, and the seed.

    n_steps counts all integrator steps including burn-in, so the retained
    sample count is (n_steps - n_burnin) // thin.
    """

    dt: float
    gamma_f: float
    n_steps: int
    n_burnin: int = 0
    thin: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0 or self.gamma_f < 0:
            raise ConfigError("dt must be positive and gamma_f nonnegative")
        if self.dt * self.gamma_f >= 2:
            raise ConfigError(f"dt*gamma_f = {self.dt * self.gamma_f:.3g} breaks the < 2 stability heuristic")
        if not 0 <= self.n_burnin < self.n_steps:
            raise ConfigError("need 0 <= n_burnin < n_steps")
        if self.thin < 1:
            raise ConfigError("thin must be >= 1")

    @property
    def n_samples(self) -> int:
        return (self.n_steps - self.n_burnin) // self.thin


def default_dt(params: RingParams) -> float:
    """0.05 sqrt(M) beta_N, conservative against the stiffest spring mode."""
    return 0.05 * math.sqrt(params.M) * params.beta_N


@dataclass(frozen=True)
class ForwardEstimate:
    mean: float
    std_err: float
    n_samples: int


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if self.x_min >= self.x_max:
            raise InvalidGridError("x_min must be below x_max")
        if self.n_points < 16:
            raise InvalidGridError("need at least 16 grid points")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)


DEFAULT_GRID = GridSpec(-12.0, 12.0, 1601)


def _ou_coeffs(cfg: LangevinConfig, params: RingParams) -> tuple[float, float]:
    c1 = math.exp(-cfg.gamma_f * cfg.dt)
    c2 = math.sqrt((1.0 - c1 * c1) * params.M / params.beta_N)
    return c1, c2


def baoab_step(state: RingState, V: PotentialCoeffs, params: RingParams,
               cfg: LangevinConfig, rng: np.random.Generator) -> RingState:
    """One B-A-O-A-B step; draws params.N standard normals from rng."""
    c1, c2 = _ou_coeffs(cfg, params)
    half = 0.5 * cfg.dt
    p = state.p + half * force(state.q, V, params)
    q = state.q + half * p / params.M
    p = c1 * p + c2 * rng.standard_normal(params.N)
    q = q + half * p / params.M
    p = p + half * force(q, V, params)
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
        raise DivergenceError("trajectory diverged: dt too large")
    return RingState(q, p)


def _pot_code(V) -> tuple[int, np.ndarray]:
    if isinstance(V, PotentialCoeffs):
        return 0, V.v
    amp = getattr(V, "amp", None)
    freq = getattr(V, "freq", None)
    if amp is not None and freq is not None:
        return 1, np.array([float(amp), float(freq)])
    raise ConfigError(f"no trajectory kernel for potential type {type(V).__name__}")


def _feature_codes(observables) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    kind = np.empty(len(observables), dtype=np.int64)
    a = np.empty(len(observables))
    b = np.empty(len(observables))
    for j, obs in enumerate(observables):
        if isinstance(obs, GaussianBump):
            kind[j], a[j], b[j] = 0, obs.center, obs.exponent
        elif isinstance(obs, ScaledHermite):
            kind[j], a[j], b[j] = 1, obs.order, obs.scale
        elif isinstance(obs, tuple) and obs[0] in ("q_moment", "p_moment"):
            kind[j], a[j], b[j] = (2 if obs[0] == "q_moment" else 3), obs[1], 0.0
        else:
            raise ConfigError(f"no feature kernel for observable {obs!r}")
    return kind, a, b


def sample_features(V, features, params: RingParams, cfg: LangevinConfig,
                    q0: np.ndarray | None = None) -> np.ndarray:
    """Run one BAOAB trajectory and collect per-step ring averages.

    features is a list of Observable instances or ("q_moment", k) /
    ("p_moment", k) tuples; returns an array (n_samples, n_features).
    Beads start at q0 (default 0), momenta thermal.
    """
    pot_kind, pv = _pot_code(V)
    fkind, fa, fb = _feature_codes(features)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    q = np.zeros(params.N) if q0 is None else np.asarray(q0, dtype=float).copy()
    p = math.sqrt(params.M / params.beta_N) * rng.standard_normal(params.N)
    f = np.empty(params.N)
    _kernels.fill_force(pot_kind, pv, params.M, params.beta_N, q, f)
    c1, c2 = _ou_coeffs(cfg, params)
    samples = np.empty((cfg.n_samples, len(features)))
    si = 0
    step = 0
    while step < cfg.n_steps:
        k = min(_CHUNK, cfg.n_steps - step)
        noise = rng.standard_normal((k, params.N))
        si = _kernels.run_baoab_chunk(pot_kind, pv, params.M, params.beta_N,
                                      cfg.dt, c1, c2, q, p, f, noise,
                                      cfg.n_burnin, cfg.thin, step,
                                      fkind, fa, fb, samples, si)
        step += k
        if not np.all(np.isfinite(q)):
            raise DivergenceError("trajectory diverged: dt too large")
    return samples


def batch_means(series: np.ndarray, n_batches: int = 32) -> tuple[float, float]:
    """Mean and batch-means standard error of a correlated series."""
    series = np.asarray(series, dtype=float)
    mean = float(series.mean())
    nb = min(n_batches, series.size)
    if nb < 2:
        return mean, 0.0
    size = series.size // nb
    means = series[: nb * size].reshape(nb, size).mean(axis=1)
    return mean, float(means.std(ddof=1) / math.sqrt(nb))


def forward_estimate(V, observables: list[Observable], params: RingParams,
                     cfg: LangevinConfig) -> list[ForwardEstimate]:
    """Monte Carlo thermal averages of the observables under V."""
    if not observables:
        raise ConfigError("need at least one observable")
    samples = sample_features(V, observables, params, cfg)
    out = []
    for j in range(len(observables)):
        mean, se = batch_means(samples[:, j])
        out.append(ForwardEstimate(mean, se, samples.shape[0]))
    return out


def _observable_values(A, x: np.ndarray) -> np.ndarray:
    if hasattr(A, "value"):
        return np.asarray(A.value(x), dtype=float)
    return np.asarray(A(x), dtype=float)


def _banded_hamiltonian(Vvals: np.ndarray, M: float, h: float) -> np.ndarray:
    """Lower-banded form of -(1/2M) d2/dx2 + V, 5-point centered stencil."""
    n = Vvals.size
    k = 1.0 / (2.0 * M * h * h)
    bands = np.zeros((3, n))
    bands[0] = (30.0 / 12.0) * k + Vvals
    bands[1, :] = -(16.0 / 12.0) * k
    bands[2, :] = (1.0 / 12.0) * k
    return bands


def exact_thermal_average(V, A, beta: float, M: float,
                          grid: GridSpec = DEFAULT_GRID) -> float:
    """Reference thermal average by dense eigensolve of the grid Hamiltonian.

    Uses centered second differences (5-point stencil) with Dirichlet walls;
    accepts any V and A with a value method or plain callables, so unbounded
    test observables like x^2 are allowed here.
    """
    x = grid.x
    Vvals = _observable_values(V, x)
    bands = _banded_hamiltonian(Vvals, M, grid.h)
    try:
        energies, vecs = scipy.linalg.eig_banded(bands, lower=True)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise OracleError(f"eigensolver failed: {exc}") from exc
    energies = energies - energies[0]
    boltz = np.exp(-beta * energies)
    avals = _observable_values(A, x)
    diag = (vecs * vecs * avals[:, None]).sum(axis=0)
    return float((boltz * diag).sum() / boltz.sum())


def rp_harmonic_variance(params: RingParams) -> float:
    """Exact per-bead marginal variance of the harmonic ring polymer.

    (1/N) sum_k 1/lambda_k with
    lambda_k = beta_N [ (2M/beta_N^2)(1 - cos(2 pi k/N)) + 1 ].
    """
    k = np.arange(params.N)
    bn = params.beta_N
    lam = bn * ((2.0 * params.M / (bn * bn)) * (1.0 - np.cos(2.0 * np.pi * k / params.N)) + 1.0)
    return float(np.mean(1.0 / lam))


def with_seed(cfg: LangevinConfig, seed: int) -> LangevinConfig:
    return replace(cfg, seed=seed)
