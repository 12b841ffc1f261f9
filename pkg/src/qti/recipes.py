"""Bundled experiment setups for the command line and the test suite.

Two systems ship with the package. The one-level showcase is an anharmonic
single-well potential probed through nine Gaussian training observables and
five held-out test observables. The two-level showcase is a Gaussian-coupled
pair of displaced wells; the chain samples both diagonal potentials and the
coupling amplitude, with the coupling center and width held fixed.

Each recipe carries two chain budgets: desk (minutes on a laptop) and paper
(the long-run figures). Forward-trajectory lengths are desk-sized in both
cases; the paper flag only scales the outer chain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import PotentialCoeffs, PriorSpec, SineGaussianPotential
from .errors import ConfigError
from .inversion import InversionConfig, NoiseModel
from .pimd import LangevinConfig, default_dt
from .ringpoly import GaussianBump, RingParams, ScaledHermite
from .twolevel import CouplingComponent, TwoLevelObservable, TwoLevelPotential


@dataclass(frozen=True)
class Budget:
    """Outer-chain size: independent runs x proposals per run."""

    n_runs: int
    n_proposals: int

    def __post_init__(self):
        if self.n_runs < 1 or self.n_proposals < 1:
            raise ConfigError("budget entries must be >= 1")


@dataclass(frozen=True)
class Recipe:
    """Everything an inversion needs, plus desk and paper chain budgets."""

    name: str
    truth: object
    params: RingParams
    prior: PriorSpec
    train_obs: tuple
    test_obs: tuple
    noise: NoiseModel
    rho: float
    t_ac: int
    forward: LangevinConfig
    desk: Budget
    paper: Budget

    def inversion_config(self, seed: int,
                         paper_scale: bool = False) -> InversionConfig:
        b = self.paper if paper_scale else self.desk
        return InversionConfig(rho=self.rho, n_proposals=b.n_proposals,
                               n_runs=b.n_runs, t_ac=self.t_ac,
                               noise=self.noise, prior=self.prior,
                               forward=self.forward, seed=seed)


def one_level_recipe(n_steps: int = 240000, n_burnin: int = 12000,
                     thin: int = 8) -> Recipe:
    """Single-well showcase: V = x^2/2 + 5 sin(5x/pi) exp(-x^2/2).

    Nine unit-width Gaussian training bumps centered at i/2 - 2; the test
    set mixes scaled Hermite probes with two off-grid bumps. Hypothesis
    space is a 12-mode series around the harmonic well. The forward budget
    is sized so the estimator noise stays well under the observation scale
    sqrt(1e-3); thinning only skips feature evaluations, not dynamics.
    """
    params = RingParams(N=16, M=10.0, beta=1.0)
    train = tuple(GaussianBump(0.5 * i - 2.0, 1.0) for i in range(9))
    tests = (ScaledHermite(1, 2.0),
             GaussianBump(-1.25, 1.0),
             GaussianBump(0.25, 1.0),
             ScaledHermite(2, 3.0),
             ScaledHermite(3, 3.0))
    forward = LangevinConfig(dt=default_dt(params), gamma_f=1.0,
                             n_steps=n_steps, n_burnin=n_burnin, thin=thin)
    return Recipe(name="one_level",
                  truth=SineGaussianPotential(),
                  params=params,
                  prior=PriorSpec.power_law(12),
                  train_obs=train,
                  test_obs=tests,
                  noise=NoiseModel.scalar(1e-3),
                  rho=0.95,
                  t_ac=50,
                  forward=forward,
                  desk=Budget(4, 400),
                  paper=Budget(10, 1600))


def two_level_truth() -> TwoLevelPotential:
    """Displaced wells with a Gaussian coupling of unit amplitude."""
    v00 = PotentialCoeffs(4, np.array([0.0, -1.5, 0.0, 0.0, 0.0]))
    v11 = PotentialCoeffs(4, np.array([-0.75, -1.5, -1.0, 0.0, 0.0]))
    # sigma = 0.5 makes A exp(-(x-c)^2 / (2 sigma^2)) equal exp(-2 x^2)
    return TwoLevelPotential(v00, v11, (CouplingComponent(1.0, 0.0, 0.5),))


def two_level_recipe(n_steps: int = 48000, n_burnin: int = 4000) -> Recipe:
    """Two-level showcase: sample both diagonals plus the coupling amplitude.

    Training probes: five unit-exponent diagonal bumps spanning [-2, 2] and
    three exponent-2 off-diagonal bumps spanning [-1, 1]. Test probes sit
    between the training centers (diagonal) and ride the narrow-coupling
    window (off-diagonal). Coupling center and width are structural.
    """
    params = RingParams(N=8, M=10.0, beta=1.0)
    train = tuple(TwoLevelObservable("diagonal", GaussianBump(c, 1.0))
                  for c in (-2.0, -1.0, 0.0, 1.0, 2.0))
    train += tuple(TwoLevelObservable("offdiagonal", GaussianBump(c, 2.0))
                   for c in (-1.0, 0.0, 1.0))
    tests = (TwoLevelObservable("diagonal", GaussianBump(1.25, 0.25)),
             TwoLevelObservable("diagonal", GaussianBump(-0.25, 0.25)),
             TwoLevelObservable("offdiagonal", GaussianBump(0.1, 8.0)),
             TwoLevelObservable("offdiagonal", GaussianBump(0.3, 8.0)))
    forward = LangevinConfig(dt=default_dt(params), gamma_f=1.0,
                             n_steps=n_steps, n_burnin=n_burnin)
    return Recipe(name="two_level",
                  truth=two_level_truth(),
                  params=params,
                  prior=PriorSpec.power_law(4),
                  train_obs=train,
                  test_obs=tests,
                  noise=NoiseModel.scalar(1e-3),
                  rho=0.95,
                  t_ac=50,
                  forward=forward,
                  desk=Budget(4, 400),
                  paper=Budget(10, 1600))


RECIPES = {"one_level": one_level_recipe, "two_level": two_level_recipe}
