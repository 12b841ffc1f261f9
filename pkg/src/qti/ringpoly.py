"""Ring-polymer action, extended Hamiltonian, forces, and bead-averaged observables.

Conventions: beads are stored 0-based with the cyclic neighbor q[N] = q[0].
The spring stiffness between neighbors is M / beta_N^2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .basis import PI_QUARTER, PotentialCoeffs, hermite_table
from .errors import ConfigError, DimensionError


@dataclass(frozen=True)
class RingParams:
    """Bead count, particle mass, inverse temperature."""

    N: int
    M: float
    beta: float

    def __post_init__(self):
        if self.N < 2:
            raise ConfigError(f"bead count N must be >= 2, got {self.N}")
        if self.M <= 0 or self.beta <= 0:
            raise ConfigError("M and beta must be positive")

    @property
    def beta_N(self) -> float:
        return self.beta / self.N


@dataclass
class RingState:
    """Positions and auxiliary momenta of the N-bead ring."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.q.shape != self.p.shape or self.q.ndim != 1:
            raise DimensionError(f"q and p must be 1-D of equal length, got {self.q.shape} / {self.p.shape}")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.p))):
            raise ConfigError("state entries must be finite")


class Observable:
    """Bounded position observable. Concrete kinds below."""

    kind: str
    bound: float

    def value(self, x):
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "parameters": self._params(), "bound": self.bound})

    def _params(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_json(text: str) -> "Observable":
        obj = json.loads(text)
        kind = obj["kind"]
        params = obj["parameters"]
        if kind == "gaussian_bump":
            return GaussianBump(params["center"], params["exponent"], bound=obj["bound"])
        if kind == "scaled_hermite":
            return ScaledHermite(params["order"], params["scale"], bound=obj["bound"])
        raise ConfigError(f"unknown observable kind {kind!r}")


@dataclass(frozen=True)
class GaussianBump(Observable):
    """A(x) = exp(-a (x - c)^2); exponent a = 0 gives the constant 1."""

    center: float
    exponent: float
    bound: float = 1.0
    kind: str = "gaussian_bump"

    def __post_init__(self):
        if self.exponent < 0:
            raise ConfigError("bump exponent must be >= 0")
        if self.bound <= 0:
            raise ConfigError("declared bound must be positive")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        d = x - self.center
        return np.exp(-self.exponent * d * d)

    def _params(self) -> dict:
        return {"center": self.center, "exponent": self.exponent}


@dataclass(frozen=True)
class ScaledHermite(Observable):
    """A(x) = phi_n(s x); bounded by pi^(-1/4) for every order and scale."""

    order: int
    scale: float
    bound: float = PI_QUARTER
    kind: str = "scaled_hermite"

    def __post_init__(self):
        if self.order < 0:
            raise ConfigError("hermite order must be >= 0")
        if self.bound <= 0:
            raise ConfigError("declared bound must be positive")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return hermite_table(self.order, self.scale * x)[self.order]

    def _params(self) -> dict:
        return {"order": self.order, "scale": self.scale}


def _check_len(q: np.ndarray, params: RingParams):
    if len(q) != params.N:
        raise DimensionError(f"expected {params.N} beads, got {len(q)}")


def action(state_q, V: PotentialCoeffs, params: RingParams) -> float:
    """S_N(q) = beta_N sum_i [ M (q_i - q_{i+1})^2 / (2 beta_N^2) + V(q_i) ]."""
    q = np.asarray(state_q, dtype=float)
    _check_len(q, params)
    bn = params.beta_N
    dq = q - np.roll(q, -1)
    spring = params.M * np.sum(dq * dq) / (2.0 * bn * bn)
    return bn * (spring + float(np.sum(V.value(q))))


def hamiltonian(state: RingState, V: PotentialCoeffs, params: RingParams) -> float:
    """H_N(q,p) = |p|^2/(2M) + sum_i [ M (q_i - q_{i+1})^2 / (2 beta_N^2) + V(q_i) ]."""
    _check_len(state.q, params)
    bn = params.beta_N
    dq = state.q - np.roll(state.q, -1)
    spring = params.M * np.sum(dq * dq) / (2.0 * bn * bn)
    kinetic = float(np.sum(state.p * state.p)) / (2.0 * params.M)
    return kinetic + spring + float(np.sum(V.value(state.q)))


def force(state_q, V: PotentialCoeffs, params: RingParams) -> np.ndarray:
    """-grad_q H_N: component i is -[ M(2q_i - q_{i-1} - q_{i+1})/beta_N^2 + V'(q_i) ]."""
    q = np.asarray(state_q, dtype=float)
    _check_len(q, params)
    bn = params.beta_N
    spring = params.M / (bn * bn)
    return -(spring * (2.0 * q - np.roll(q, 1) - np.roll(q, -1)) + V.grad(q))


def ring_average(A: Observable, state_q) -> float:
    """(1/N) sum_i A(q_i)."""
    q = np.asarray(state_q, dtype=float)
    return float(np.mean(A.value(q)))
