"""Hermite-function basis, truncated potentials, and the Gaussian coefficient prior.

The potential space is built around the harmonic reference V_o(x) = x^2/2.
A candidate potential is V = V_o + sum_i v_i phi_i with phi_i the orthonormal
Hermite functions; the harmonic part is implicit and never stored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, InvalidGridError, OrderOverflowError

# phi_0(0); also the Cramer sup-norm bound for every phi_n
PI_QUARTER = float(np.pi ** -0.25)

# hard ceiling for the free-function evaluator; instances carry their own
MAX_ORDER = 512


def hermite_table(n_max: int, x) -> np.ndarray:
    """Evaluate phi_0 .. phi_n_max at points x.

    Uses the normalized three-term recurrence
        phi_{n+1}(x) = x sqrt(2/(n+1)) phi_n(x) - sqrt(n/(n+1)) phi_{n-1}(x)
    seeded with phi_0 = pi^(-1/4) exp(-x^2/2), phi_1 = sqrt(2) x phi_0.
    Returns an array of shape (n_max+1, len(x)).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((n_max + 1, x.size))
    out[0] = PI_QUARTER * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = x * np.sqrt(2.0 / (n + 1)) * out[n] - np.sqrt(n / (n + 1.0)) * out[n - 1]
    return out


@dataclass(frozen=True)
class HermiteEvaluator:
    """Hermite-function evaluator with a fixed highest order."""

    max_order: int

    def __post_init__(self):
        if self.max_order < 0:
            raise OrderOverflowError(f"max_order must be >= 0, got {self.max_order}")

    def eval(self, n: int, x):
        """phi_n(x) for scalar or array x."""
        if not 0 <= n <= self.max_order:
            raise OrderOverflowError(f"order {n} outside [0, {self.max_order}]")
        table = hermite_table(n, x)
        val = table[n]
        return float(val[0]) if np.isscalar(x) else val

    def table(self, x) -> np.ndarray:
        """All orders 0..max_order at once, shape (max_order+1, len(x))."""
        return hermite_table(self.max_order, x)


def hermite_eval(n: int, x):
    """phi_n(x) through a module-wide evaluator capped at MAX_ORDER."""
    if not 0 <= n <= MAX_ORDER:
        raise OrderOverflowError(f"order {n} outside [0, {MAX_ORDER}]")
    return HermiteEvaluator(n).eval(n, x)


@dataclass
class PotentialCoeffs:
    """Truncated coefficient representation V(x) = x^2/2 + sum_{i<=L} v_i phi_i(x)."""

    L: int
    v: np.ndarray

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float)
        if self.v.shape != (self.L + 1,):
            raise DimensionError(
                f"expected {self.L + 1} coefficients for L={self.L}, got {self.v.shape}"
            )
        if not np.all(np.isfinite(self.v)):
            raise ConfigError("coefficients must be finite")

    @classmethod
    def zero(cls, L: int) -> "PotentialCoeffs":
        """The harmonic reference V_o in the truncated space."""
        return cls(L, np.zeros(L + 1))

    def value(self, x):
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        table = hermite_table(self.L, x_arr)
        val = 0.5 * x_arr * x_arr + self.v @ table
        return float(val[0]) if np.isscalar(x) else val

    def grad(self, x):
        """V'(x), using phi_n'(x) = x phi_n(x) - sqrt(2(n+1)) phi_{n+1}(x)."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        table = hermite_table(self.L + 1, x_arr)
        g = x_arr.copy()
        for i in range(self.L + 1):
            g += self.v[i] * (x_arr * table[i] - np.sqrt(2.0 * (i + 1)) * table[i + 1])
        return float(g[0]) if np.isscalar(x) else g

    def to_json(self) -> str:
        return json.dumps({"L": self.L, "v": self.v.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "PotentialCoeffs":
        obj = json.loads(text)
        return cls(int(obj["L"]), np.asarray(obj["v"], dtype=float))


def potential_eval(V: PotentialCoeffs, x):
    """x^2/2 + sum v_i phi_i(x)."""
    return V.value(x)


@dataclass(frozen=True)
class PriorSpec:
    """Mean-zero Gaussian prior on coefficients, v_i = gamma_i xi_i."""

    L: int
    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=float))
        if self.gamma.shape != (self.L + 1,):
            raise DimensionError(
                f"expected {self.L + 1} prior scales for L={self.L}, got {self.gamma.shape}"
            )
        if not np.all(self.gamma > 0):
            raise ConfigError("prior scales gamma_i must be strictly positive")

    @classmethod
    def power_law(cls, L: int, scale: float = 4.0, decay: float = 1.2) -> "PriorSpec":
        """gamma_j = scale * (j+1)^(-decay).

        The index is shifted by one relative to the bare power law so that
        gamma_0 is finite; scale and decay stay configurable.
        """
        j = np.arange(L + 1)
        return cls(L, scale * (j + 1.0) ** (-decay))


def sample_prior(spec: PriorSpec, rng: np.random.Generator) -> PotentialCoeffs:
    """Draw v_i = gamma_i xi_i with xi_i i.i.d. standard normal."""
    xi = rng.standard_normal(spec.L + 1)
    return PotentialCoeffs(spec.L, spec.gamma * xi)


def default_norm_grid(x_max: float = 12.0, n_points: int = 4801) -> np.ndarray:
    """Uniform quadrature grid for the L2 and sup norms."""
    return np.linspace(-x_max, x_max, n_points)


def w1_distance(V1: PotentialCoeffs, V2: PotentialCoeffs, grid: np.ndarray | None = None) -> float:
    """||V1 - V2||_{L2(grid)} + max_grid |V1 - V2|; the harmonic parts cancel."""
    if grid is None:
        grid = default_norm_grid()
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise InvalidGridError("empty quadrature grid")
    diff = V1.value(grid) - V2.value(grid)
    l2 = float(np.sqrt(np.trapezoid(diff * diff, grid)))
    return l2 + float(np.max(np.abs(diff)))


@dataclass(frozen=True)
class SineGaussianPotential:
    """Rough reference potential x^2/2 + amp sin(freq x) exp(-x^2/2).

    Outside the scope of any finite coefficient vector; used as ground
    truth when probing how inversion behaves under misspecification.
    """

    amp: float = 5.0
    freq: float = 5.0 / np.pi

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * x * x + self.amp * np.sin(self.freq * x) * np.exp(-0.5 * x * x)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        env = np.exp(-0.5 * x * x)
        return x + self.amp * env * (self.freq * np.cos(self.freq * x) - x * np.sin(self.freq * x))
