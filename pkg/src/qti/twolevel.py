"""Two-level ring polymer with surface hopping.

The configuration space gains a level-index vector l in {0,1}^N. The
effective Hamiltonian sums per-bead entries whose potential branch depends
on whether consecutive labels agree; a continuous-time jump process on l
(discretized per BAOAB step) keeps the joint chain ergodic for the Gibbs
weights, and thermal averages come from a reweighting function that
restores the off-diagonal matrix elements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels
from .basis import PotentialCoeffs
from .errors import (ConfigError, DimensionError, DivergenceError,
                     InvalidTransitionError, OracleError)
from .pimd import (DEFAULT_GRID, ForwardEstimate, GridSpec, LangevinConfig,
                   _feature_codes, _ou_coeffs, batch_means)
from .ringpoly import Observable, RingParams

_CHUNK = 8192

# label-jump events simulated per BAOAB window; overflow probability per
# step is Poisson-tail small (< 1e-9 at typical intensities)
_MAX_EVENTS = 8


@dataclass(frozen=True)
class CouplingComponent:
    """One Gaussian component A exp(-(x-c)^2 / (2 sigma^2)) of the coupling."""

    A: float
    c: float
    sigma: float

    def __post_init__(self):
        if self.A <= 0:
            raise ConfigError("coupling amplitudes must be strictly positive")
        if self.sigma <= 0:
            raise ConfigError("coupling widths must be strictly positive")


@dataclass(frozen=True)
class TwoLevelPotential:
    """Diagonal potentials v00, v11 plus a positive Gaussian-mixture coupling.

    Positivity of every amplitude keeps sgn(v01) = +1 on the whole line,
    which the sampler's sign bookkeeping relies on. Component centers and
    widths are structural; only amplitudes are meant to vary.
    """

    v00: PotentialCoeffs
    v11: PotentialCoeffs
    v01: tuple[CouplingComponent, ...]

    def __post_init__(self):
        object.__setattr__(self, "v01", tuple(self.v01))
        if not self.v01:
            raise ConfigError("need at least one coupling component")

    def _mix_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        amps = np.array([g.A for g in self.v01])
        cents = np.array([g.c for g in self.v01])
        wids = np.array([g.sigma for g in self.v01])
        return amps, cents, wids

    def v01_value(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for g in self.v01:
            out += g.A * np.exp(-0.5 * ((x - g.c) / g.sigma) ** 2)
        return out

    def with_amplitudes(self, amps) -> "TwoLevelPotential":
        amps = np.asarray(amps, dtype=float)
        if amps.shape != (len(self.v01),):
            raise DimensionError(f"expected {len(self.v01)} amplitudes, got {amps.shape}")
        comps = tuple(CouplingComponent(float(a), g.c, g.sigma) for a, g in zip(amps, self.v01))
        return TwoLevelPotential(self.v00, self.v11, comps)

    def to_json(self) -> dict:
        return {
            "v00": self.v00.to_json(),
            "v11": self.v11.to_json(),
            "v01": [{"A": g.A, "c": g.c, "sigma": g.sigma} for g in self.v01],
        }

    @classmethod
    def from_json(cls, data: dict) -> "TwoLevelPotential":
        comps = tuple(CouplingComponent(d["A"], d["c"], d["sigma"]) for d in data["v01"])
        return cls(PotentialCoeffs.from_json(data["v00"]),
                   PotentialCoeffs.from_json(data["v11"]), comps)


@dataclass
class TwoLevelState:
    q: np.ndarray
    p: np.ndarray
    l: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        self.l = np.asarray(self.l, dtype=np.int64)
        if not (self.q.ndim == 1 and self.q.shape == self.p.shape == self.l.shape):
            raise DimensionError("q, p, l must be 1-D arrays of equal length")
        if not np.all((self.l == 0) | (self.l == 1)):
            raise ConfigError("level indices must be 0 or 1")


@dataclass(frozen=True)
class TwoLevelObservable:
    """A bounded scalar profile placed on the diagonal or off-diagonal.

    diagonal: matrix a(x) I. offdiagonal: zero diagonal, both off-diagonal
    entries a(x).
    """

    placement: str
    base: Observable

    def __post_init__(self):
        if self.placement not in ("diagonal", "offdiagonal"):
            raise ConfigError(f"unknown placement {self.placement!r}")

    def to_json(self) -> dict:
        return {"placement": self.placement, "base": self.base.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> "TwoLevelObservable":
        return cls(data["placement"], Observable.from_json(data["base"]))


def _potential_branch(l: int, l_next: int, x: float, V: TwoLevelPotential,
                      beta_N: float) -> float:
    """Potential part of the per-bead entry; +inf when the off-diagonal
    branch is forbidden by vanishing coupling."""
    c = float(V.v01_value(x))
    t = beta_N * c
    if l == l_next:
        diag = V.v11 if l == 1 else V.v00
        return float(diag.value(x)) - _kernels._log_cosh(t) / beta_N
    ls = _kernels._log_sinh(t)
    if ls == -math.inf:
        return math.inf
    return 0.5 * (float(V.v00.value(x)) + float(V.v11.value(x))) - ls / beta_N


def g_entry(l: int, l_next: int, k: int, state: TwoLevelState,
            V: TwoLevelPotential, params: RingParams) -> float:
    """Per-bead entry: kinetic + spring to the next bead + potential branch."""
    N = state.q.size
    kn = (k + 1) % N
    bn = params.beta_N
    kin = state.p[k] ** 2 / (2.0 * params.M)
    spring = params.M * (state.q[k] - state.q[kn]) ** 2 / (2.0 * bn * bn)
    return kin + spring + _potential_branch(l, l_next, state.q[k], V, bn)


def h2(state: TwoLevelState, V: TwoLevelPotential, params: RingParams) -> float:
    """Effective Hamiltonian: cyclic sum of g_entry along the label vector."""
    N = state.q.size
    return sum(g_entry(int(state.l[k]), int(state.l[(k + 1) % N]), k, state, V, params)
               for k in range(N))


def weight_fn(A: TwoLevelObservable, state: TwoLevelState, V: TwoLevelPotential,
              params: RingParams) -> float:
    """Reweighting estimator whose Gibbs expectation is the thermal average.

    The exponent uses the potential branches only; kinetic and spring parts
    cancel in the entry difference.
    """
    N = state.q.size
    bn = params.beta_N
    a = np.asarray(A.base.value(state.q), dtype=float)
    if A.placement == "diagonal":
        return float(a.mean())
    total = 0.0
    for k in range(N):
        lk = int(state.l[k])
        ln = int(state.l[(k + 1) % N])
        cur = _potential_branch(lk, ln, state.q[k], V, bn)
        flip = _potential_branch(1 - lk, ln, state.q[k], V, bn)
        d = bn * (cur - flip)
        total -= a[k] * math.exp(min(d, 700.0))
    return total / N


def _neighbor_kind(l_old: np.ndarray, l_new: np.ndarray) -> int:
    """-1 if not an allowed transition, else the Hamming distance (1 or N)."""
    diff = int(np.sum(l_old != l_new))
    if diff == 1 or diff == l_old.size:
        return diff
    return -1


def hop_intensity(state: TwoLevelState, l_new, params: RingParams,
                  V: TwoLevelPotential, eta: float) -> float:
    """Transition intensity eta exp[(beta_N/2)(H(l) - H(l_new))].

    The symmetric square-root form satisfies the detailed balance identity
    lambda(l, l') exp(-beta_N H(l)) = lambda(l', l) exp(-beta_N H(l'))
    exactly; capping it at 1 would break that identity, and the exponential
    jump-time thinning downstream tolerates unbounded intensities. l_new
    must be a single-bead flip or the full flip of state.l. The H
    difference is assembled from the potential branches that actually
    change.
    """
    l_new = np.asarray(l_new, dtype=np.int64)
    if l_new.shape != state.l.shape:
        raise DimensionError("label vectors must have equal length")
    kind = _neighbor_kind(state.l, l_new)
    if kind < 0:
        raise InvalidTransitionError(
            "allowed transitions are single-bead flips or the full flip")
    N = state.q.size
    bn = params.beta_N
    dh = 0.0
    for k in range(N):
        lk, lkn = int(state.l[k]), int(state.l[(k + 1) % N])
        mk, mkn = int(l_new[k]), int(l_new[(k + 1) % N])
        if lk == mk and lkn == mkn:
            continue
        dh += _potential_branch(mk, mkn, state.q[k], V, bn) - \
            _potential_branch(lk, lkn, state.q[k], V, bn)
    if math.isnan(dh):
        return 0.0
    return eta * math.exp(min(-0.5 * bn * dh, 700.0))


def neighbor_labels(l: np.ndarray) -> list[np.ndarray]:
    """All allowed post-hop label vectors: N single flips, then the full flip."""
    l = np.asarray(l, dtype=np.int64)
    out = []
    for j in range(l.size):
        m = l.copy()
        m[j] = 1 - m[j]
        out.append(m)
    out.append(1 - l)
    return out


def default_eta(params: RingParams) -> float:
    return 1.0 / params.beta_N


def sample_weight_series(V: TwoLevelPotential, observables, params: RingParams,
                         cfg: LangevinConfig, eta: float | None = None,
                         ) -> tuple[np.ndarray, int]:
    """Run one PIMD-SH trajectory, returning per-step weights and hop count."""
    if eta is None:
        eta = default_eta(params)
    if eta <= 0:
        raise ConfigError("eta must be positive")
    fkind, fa, fb = _feature_codes([obs.base for obs in observables])
    fplace = np.array([0 if obs.placement == "diagonal" else 1 for obs in observables],
                      dtype=np.int64)
    amps, cents, wids = V._mix_arrays()
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    N = params.N
    q = np.zeros(N)
    p = math.sqrt(params.M / params.beta_N) * rng.standard_normal(N)
    lvec = np.zeros(N, dtype=np.int64)
    f = np.empty(N)
    a00 = np.empty(N)
    a11 = np.empty(N)
    lc = np.empty(N)
    ls = np.empty(N)
    _kernels.tl_refresh(V.v00.v, V.v11.v, amps, cents, wids, params.M,
                        params.beta_N, q, lvec, f, a00, a11, lc, ls)
    c1, c2 = _ou_coeffs(cfg, params)
    samples = np.empty((cfg.n_samples, len(observables)))
    si = 0
    hops = 0
    step = 0
    while step < cfg.n_steps:
        k = min(_CHUNK, cfg.n_steps - step)
        noise = rng.standard_normal((k, N))
        u_jump = rng.random((k, _MAX_EVENTS))
        u_pick = rng.random((k, _MAX_EVENTS))
        si, h = _kernels.run_tl_chunk(V.v00.v, V.v11.v, amps, cents, wids,
                                      params.M, params.beta_N, cfg.dt, c1, c2,
                                      eta, q, p, lvec, f, a00, a11, lc, ls,
                                      noise, u_jump, u_pick, cfg.n_burnin,
                                      cfg.thin, step, fplace, fkind, fa, fb,
                                      samples, si)
        hops += h
        step += k
        if not np.all(np.isfinite(q)):
            raise DivergenceError("trajectory diverged: dt too large")
    return samples, hops


def pimd_sh_estimate(V: TwoLevelPotential, observables: list[TwoLevelObservable],
                     params: RingParams, cfg: LangevinConfig,
                     eta: float | None = None) -> list[ForwardEstimate]:
    """Thermal averages of 2-level observables by the hopping trajectory."""
    if not observables:
        raise ConfigError("need at least one observable")
    samples, _ = sample_weight_series(V, observables, params, cfg, eta)
    out = []
    for j in range(len(observables)):
        mean, se = batch_means(samples[:, j])
        out.append(ForwardEstimate(mean, se, samples.shape[0]))
    return out


def exact_thermal_averages_2level(V: TwoLevelPotential, observables,
                                  beta: float, M: float,
                                  grid: GridSpec = DEFAULT_GRID) -> np.ndarray:
    """Reference 2-level thermal averages by one banded eigensolve.

    Grid-level basis interleaves the two levels at the same point, so the
    block matrix [[-(1/2M) d2 + V00, V01], [V01, -(1/2M) d2 + V11]] has
    bandwidth 4 with the 5-point kinetic stencil. The eigensolve dominates
    the cost and is shared across the whole observable list: everything an
    observable sees is the pointwise diagonal and cross thermal densities.
    """
    x = grid.x
    n = x.size
    kf = 1.0 / (2.0 * M * grid.h ** 2)
    bands = np.zeros((5, 2 * n))
    bands[0, 0::2] = (30.0 / 12.0) * kf + V.v00.value(x)
    bands[0, 1::2] = (30.0 / 12.0) * kf + V.v11.value(x)
    bands[1, 0::2] = V.v01_value(x)
    bands[2, :] = -(16.0 / 12.0) * kf
    bands[4, :] = (1.0 / 12.0) * kf
    try:
        energies, vecs = scipy.linalg.eig_banded(bands, lower=True)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise OracleError(f"eigensolver failed: {exc}") from exc
    energies = energies - energies[0]
    boltz = np.exp(-beta * energies)
    w = boltz / boltz.sum()
    psi0 = vecs[0::2, :]
    psi1 = vecs[1::2, :]
    rho_diag = (psi0 * psi0 + psi1 * psi1) @ w
    rho_cross = (2.0 * psi0 * psi1) @ w
    out = np.empty(len(observables))
    for j, A in enumerate(observables):
        a = np.asarray(A.base.value(x), dtype=float)
        rho = rho_diag if A.placement == "diagonal" else rho_cross
        out[j] = float(a @ rho)
    return out


def exact_thermal_average_2level(V: TwoLevelPotential, A: TwoLevelObservable,
                                 beta: float, M: float,
                                 grid: GridSpec = DEFAULT_GRID) -> float:
    """Single-observable form of exact_thermal_averages_2level."""
    return float(exact_thermal_averages_2level(V, [A], beta, M, grid)[0])
