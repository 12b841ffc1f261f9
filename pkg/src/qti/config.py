"""Experiment configuration: parsing, validation, canonical rendering.

The on-disk format is line-oriented `key = value` with JSON values, `#`
comments, and no sections. A config either names a bundled recipe or spells
out the system; individual keys override recipe defaults either way.

render_config writes a config back out in canonical key order with every
default made explicit, and parse_config(render_config(cfg)) reproduces cfg
exactly. Replay rests on that round trip: the manifest stores the rendered
text, so a re-run parses the identical document and derives the identical
seed tree.
"""

from __future__ import annotations

import hashlib
import json
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from .basis import PotentialCoeffs, PriorSpec, SineGaussianPotential
from .errors import ConfigError
from .inversion import InversionConfig, NoiseModel
from .pimd import LangevinConfig, default_dt
from .recipes import RECIPES, Budget, Recipe
from .ringpoly import GaussianBump, Observable, RingParams, ScaledHermite
from .twolevel import CouplingComponent, TwoLevelObservable, TwoLevelPotential

MODES = ("forward", "invert", "stability", "twolevel")

_KEY_RE = re.compile(r"^[a-z][a-z0-9_]*$")

# every legal key with its built-in default; None means "derived later"
_DEFAULTS = {
    "mode": None,
    "seed": None,
    "output_dir": None,
    "recipe": None,
    "system": None,
    "truth_coeffs": None,
    "sg_amp": 5.0,
    "sg_freq": 5.0 / np.pi,
    "v00_coeffs": None,
    "v11_coeffs": None,
    "v01_components": None,
    "mass": None,
    "beta": None,
    "n_beads": None,
    "n_modes": None,
    "training_observables": None,
    "testing_observables": None,
    "noise_scale": None,
    "noise_diagonal": None,
    "noise_matrix": None,
    "prior_scale": 4.0,
    "prior_decay": 1.2,
    "dt": None,
    "gamma_f": 1.0,
    "n_steps": None,
    "n_burnin": None,
    "thin": 1,
    "rho": 0.95,
    "n_proposals": None,
    "n_runs": None,
    "t_ac": 50,
    "prediction_burnin": None,
    "observe_noise": False,
    "paper_n_proposals": 1600,
    "paper_n_runs": 10,
    "gamma_scales": (0.01, 0.03, 0.1, 0.3),
    "n_draws": 4,
    "stability_n_runs": None,
    "stability_n_proposals": None,
}


def _parse_lines(text: str) -> dict:
    """Raw key -> (value, line_no) mapping with line-addressed errors."""
    seen: dict[str, tuple] = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {no}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if not _KEY_RE.match(key):
            raise ConfigError(f"line {no}: bad key {key!r}")
        if key not in _DEFAULTS:
            raise ConfigError(f"line {no}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(
                f"line {no}: duplicate key {key!r} (first set on line {seen[key][1]})")
        try:
            parsed = json.loads(val.strip())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {no}: value for {key!r} is not valid JSON: {exc}") from None
        seen[key] = (parsed, no)
    return seen


def _obs_from_entry(entry, two_level: bool):
    if not isinstance(entry, list) or not entry:
        raise ConfigError(f"observable spec must be a nonempty list, got {entry!r}")
    e = list(entry)
    placement = None
    if two_level:
        if e[0] not in ("diag", "offdiag"):
            raise ConfigError(f"two-level observable must start with 'diag' or 'offdiag', got {e[0]!r}")
        placement = "diagonal" if e[0] == "diag" else "offdiagonal"
        e = e[1:]
    if len(e) != 3:
        raise ConfigError(f"observable spec needs kind plus two numbers, got {entry!r}")
    kind, a, b = e
    if kind == "bump":
        base = GaussianBump(float(a), float(b))
    elif kind == "hermite":
        base = ScaledHermite(int(a), float(b))
    else:
        raise ConfigError(f"unknown observable kind {kind!r}")
    return TwoLevelObservable(placement, base) if two_level else base


def _obs_to_entry(obs) -> list:
    placement = None
    if isinstance(obs, TwoLevelObservable):
        placement = "diag" if obs.placement == "diagonal" else "offdiag"
        obs = obs.base
    if isinstance(obs, GaussianBump):
        e = ["bump", obs.center, obs.exponent]
    elif isinstance(obs, ScaledHermite):
        e = ["hermite", obs.order, obs.scale]
    else:
        raise ConfigError(f"cannot render observable {obs!r}")
    return [placement] + e if placement else e


@dataclass
class ExperimentConfig:
    """Fully resolved experiment: system, observables, budgets, seeds."""

    mode: str
    seed: int
    output_dir: str | None
    recipe: str | None
    truth: object
    params: RingParams
    prior: PriorSpec
    train_obs: tuple
    test_obs: tuple
    noise: NoiseModel
    sampler: LangevinConfig
    rho: float
    n_proposals: int
    n_runs: int
    t_ac: int
    prediction_burnin: int | None
    observe_noise: bool
    paper_n_proposals: int
    paper_n_runs: int
    gamma_scales: tuple
    n_draws: int
    stability_n_runs: int
    stability_n_proposals: int
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def two_level(self) -> bool:
        return self.mode == "twolevel"

    def inversion_config(self, paper_scale: bool = False,
                         seed: int | None = None) -> InversionConfig:
        n_prop = self.paper_n_proposals if paper_scale else self.n_proposals
        n_runs = self.paper_n_runs if paper_scale else self.n_runs
        return InversionConfig(rho=self.rho, n_proposals=n_prop, n_runs=n_runs,
                               t_ac=self.t_ac, noise=self.noise,
                               prior=self.prior, forward=self.sampler,
                               seed=self.seed if seed is None else seed)

    def stability_config(self) -> InversionConfig:
        return InversionConfig(rho=self.rho,
                               n_proposals=self.stability_n_proposals,
                               n_runs=self.stability_n_runs, t_ac=self.t_ac,
                               noise=self.noise, prior=self.prior,
                               forward=self.sampler, seed=self.seed)


def parse_config(text: str) -> ExperimentConfig:
    """Validate a key = value document and resolve every default."""
    raw = {k: v for k, (v, _) in _parse_lines(text).items()}

    missing = [k for k in ("mode", "seed") if k not in raw]
    has_system = raw.get("recipe") or raw.get("system") or raw.get("v00_coeffs")
    if not has_system:
        missing.append("recipe (or an explicit system)")
    if missing:
        raise ConfigError("missing required fields: " + ", ".join(missing))

    mode = raw["mode"]
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    seed = raw["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")
    two_level = mode == "twolevel"

    recipe: Recipe | None = None
    if raw.get("recipe") is not None:
        name = raw["recipe"]
        if name not in RECIPES:
            raise ConfigError(f"unknown recipe {name!r}; have {sorted(RECIPES)}")
        if two_level != (name == "two_level"):
            raise ConfigError(f"recipe {name!r} does not fit mode {mode!r}")
        recipe = RECIPES[name]()

    def pick(key, fallback=None):
        if key in raw:
            return raw[key]
        if _DEFAULTS[key] is not None:
            return _DEFAULTS[key]
        return fallback

    # ring parameters
    mass = pick("mass", recipe.params.M if recipe else None)
    beta = pick("beta", recipe.params.beta if recipe else None)
    n_beads = pick("n_beads", recipe.params.N if recipe else None)
    for nm, v in (("mass", mass), ("beta", beta), ("n_beads", n_beads)):
        if v is None:
            raise ConfigError(f"{nm} is required when no recipe is named")
    params = RingParams(N=int(n_beads), M=float(mass), beta=float(beta))

    # prior
    n_modes = pick("n_modes", recipe.prior.L if recipe else None)
    if n_modes is None:
        raise ConfigError("n_modes is required when no recipe is named")
    prior = PriorSpec.power_law(int(n_modes), scale=float(pick("prior_scale")),
                                decay=float(pick("prior_decay")))

    # truth
    if two_level:
        if raw.get("v00_coeffs") is not None:
            if raw.get("v11_coeffs") is None:
                raise ConfigError("v11_coeffs is required with v00_coeffs")
            v00 = PotentialCoeffs(prior.L, np.asarray(raw["v00_coeffs"], dtype=float))
            v11 = PotentialCoeffs(prior.L, np.asarray(raw["v11_coeffs"], dtype=float))
            comps = raw.get("v01_components")
            if not comps:
                raise ConfigError("v01_components is required with v00_coeffs")
            truth = TwoLevelPotential(v00, v11, tuple(
                CouplingComponent(float(a), float(c), float(s)) for a, c, s in comps))
        elif recipe is not None:
            truth = recipe.truth
        else:
            raise ConfigError("twolevel mode needs v00_coeffs/v11_coeffs/v01_components or a recipe")
    else:
        system = raw.get("system") or (None if recipe else "sine_gaussian")
        if system is None:
            truth = recipe.truth
        elif system == "sine_gaussian":
            truth = SineGaussianPotential(amp=float(pick("sg_amp")),
                                          freq=float(pick("sg_freq")))
        elif system == "coeffs":
            if raw.get("truth_coeffs") is None:
                raise ConfigError("system 'coeffs' needs truth_coeffs")
            tc = np.asarray(raw["truth_coeffs"], dtype=float)
            truth = PotentialCoeffs(tc.size - 1, tc)
        else:
            raise ConfigError(f"unknown system {system!r}")

    # observables
    if raw.get("training_observables") is not None:
        train = tuple(_obs_from_entry(e, two_level) for e in raw["training_observables"])
    elif recipe is not None:
        train = recipe.train_obs
    else:
        raise ConfigError("training_observables is required when no recipe is named")
    if raw.get("testing_observables") is not None:
        tests = tuple(_obs_from_entry(e, two_level) for e in raw["testing_observables"])
    elif recipe is not None:
        tests = recipe.test_obs
    else:
        tests = ()
    if not train:
        raise ConfigError("need at least one training observable")

    # noise
    noise_keys = [k for k in ("noise_scale", "noise_diagonal", "noise_matrix") if raw.get(k) is not None]
    if len(noise_keys) > 1:
        raise ConfigError(f"give at most one of noise_scale/noise_diagonal/noise_matrix, got {noise_keys}")
    if noise_keys == ["noise_scale"]:
        noise = NoiseModel.scalar(float(raw["noise_scale"]))
    elif noise_keys == ["noise_diagonal"]:
        noise = NoiseModel.diagonal(np.asarray(raw["noise_diagonal"], dtype=float))
    elif noise_keys == ["noise_matrix"]:
        noise = NoiseModel.full(np.asarray(raw["noise_matrix"], dtype=float))
    elif recipe is not None:
        noise = recipe.noise
    else:
        raise ConfigError("a noise model is required when no recipe is named")

    # forward sampler
    dt = pick("dt", recipe.forward.dt if recipe else None)
    if dt is None:
        dt = default_dt(params)
    n_steps = pick("n_steps", recipe.forward.n_steps if recipe else None)
    if n_steps is None:
        raise ConfigError("n_steps is required when no recipe is named")
    n_burnin = pick("n_burnin", recipe.forward.n_burnin if recipe else 0)
    sampler = LangevinConfig(dt=float(dt), gamma_f=float(pick("gamma_f")),
                             n_steps=int(n_steps), n_burnin=int(n_burnin),
                             thin=int(pick("thin")))

    # outer chain
    n_proposals = pick("n_proposals", recipe.desk.n_proposals if recipe else 400)
    n_runs = pick("n_runs", recipe.desk.n_runs if recipe else 4)
    pb = raw.get("prediction_burnin")
    gamma_scales = tuple(float(s) for s in pick("gamma_scales"))
    st_runs = pick("stability_n_runs", int(n_runs))
    st_props = pick("stability_n_proposals", int(n_proposals))

    cfg = ExperimentConfig(
        mode=mode, seed=int(seed), output_dir=raw.get("output_dir"),
        recipe=raw.get("recipe"), truth=truth, params=params, prior=prior,
        train_obs=train, test_obs=tests, noise=noise, sampler=sampler,
        rho=float(pick("rho")), n_proposals=int(n_proposals),
        n_runs=int(n_runs), t_ac=int(pick("t_ac")),
        prediction_burnin=None if pb is None else int(pb),
        observe_noise=bool(pick("observe_noise")),
        paper_n_proposals=int(pick("paper_n_proposals")),
        paper_n_runs=int(pick("paper_n_runs")),
        gamma_scales=gamma_scales, n_draws=int(pick("n_draws")),
        stability_n_runs=int(st_runs), stability_n_proposals=int(st_props),
        raw=raw)
    cfg.inversion_config()      # runs the cross-field validation
    if len(gamma_scales) < 3 and mode == "stability":
        raise ConfigError("stability mode needs at least 3 gamma_scales")
    return cfg


def render_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; rendering is a fixed point under parse."""
    lines = ["# resolved experiment configuration"]

    def put(key, val):
        lines.append(f"{key} = {json.dumps(val)}")

    put("mode", cfg.mode)
    put("seed", cfg.seed)
    if cfg.output_dir is not None:
        put("output_dir", cfg.output_dir)
    put("mass", cfg.params.M)
    put("beta", cfg.params.beta)
    put("n_beads", cfg.params.N)
    put("n_modes", cfg.prior.L)
    put("prior_scale", cfg.raw.get("prior_scale", _DEFAULTS["prior_scale"]))
    put("prior_decay", cfg.raw.get("prior_decay", _DEFAULTS["prior_decay"]))
    if cfg.two_level:
        put("v00_coeffs", list(cfg.truth.v00.v))
        put("v11_coeffs", list(cfg.truth.v11.v))
        put("v01_components", [[c.A, c.c, c.sigma] for c in cfg.truth.v01])
    elif isinstance(cfg.truth, SineGaussianPotential):
        put("system", "sine_gaussian")
        put("sg_amp", cfg.truth.amp)
        put("sg_freq", cfg.truth.freq)
    else:
        put("system", "coeffs")
        put("truth_coeffs", list(cfg.truth.v))
    put("training_observables", [_obs_to_entry(o) for o in cfg.train_obs])
    put("testing_observables", [_obs_to_entry(o) for o in cfg.test_obs])
    if cfg.noise.kind == "scalar":
        put("noise_scale", float(cfg.noise.data))
    elif cfg.noise.kind == "diagonal":
        put("noise_diagonal", list(cfg.noise.data))
    else:
        put("noise_matrix", [list(r) for r in cfg.noise.data])
    put("dt", cfg.sampler.dt)
    put("gamma_f", cfg.sampler.gamma_f)
    put("n_steps", cfg.sampler.n_steps)
    put("n_burnin", cfg.sampler.n_burnin)
    put("thin", cfg.sampler.thin)
    put("rho", cfg.rho)
    put("n_proposals", cfg.n_proposals)
    put("n_runs", cfg.n_runs)
    put("t_ac", cfg.t_ac)
    if cfg.prediction_burnin is not None:
        put("prediction_burnin", cfg.prediction_burnin)
    put("observe_noise", cfg.observe_noise)
    put("paper_n_proposals", cfg.paper_n_proposals)
    put("paper_n_runs", cfg.paper_n_runs)
    put("gamma_scales", list(cfg.gamma_scales))
    put("n_draws", cfg.n_draws)
    put("stability_n_runs", cfg.stability_n_runs)
    put("stability_n_proposals", cfg.stability_n_proposals)
    return "\n".join(lines) + "\n"


def config_hash(resolved_text: str) -> str:
    return hashlib.sha256(resolved_text.encode("utf-8")).hexdigest()


def build_manifest(cfg: ExperimentConfig, *, paper_scale: bool, workers: int,
                   wall_clock_s: float, outputs: list[str]) -> dict:
    """Replayable record: resolved config text plus provenance."""
    import numpy
    import scipy

    from . import __version__

    resolved = render_config(cfg)
    n_runs = cfg.paper_n_runs if paper_scale else cfg.n_runs
    versions = {"python": sys.version.split()[0], "numpy": numpy.__version__,
                "scipy": scipy.__version__, "qti": __version__}
    try:
        import numba
        versions["numba"] = numba.__version__
    except ImportError:
        versions["numba"] = None
    return {
        "mode": cfg.mode,
        "resolved_config": resolved,
        "content_hash": config_hash(resolved),
        "paper_scale": paper_scale,
        "workers": workers,
        "run_seeds": [[cfg.seed, r] for r in range(n_runs)],
        "wall_clock_s": wall_clock_s,
        "versions": versions,
        "outputs": sorted(outputs),
    }
