"""Command line front end: qti <mode> --config <file> [options].

Modes: forward (trajectory averages of the configured observables), invert
(the full proposal-forward-decide loop), stability (noise-scale sweep),
twolevel (inversion with the surface-hopping forward solver). A config file
is either a key = value document or a previously written manifest.json; the
latter replays the stored resolved configuration, which reproduces every
CSV byte for byte.

Exit codes: 0 success, 2 configuration error, 3 numerical failure. Errors
are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import report
from .config import ExperimentConfig, build_manifest, parse_config
from .errors import ConfigError, QtiError
from .inversion import exact_observations, run_inversion
from .metrics import stability_sweep
from .pimd import forward_estimate
from .twolevel import pimd_sh_estimate


def _load_config(path: str, mode: str) -> tuple[ExperimentConfig, dict | None]:
    """Read a config document or a manifest; returns (config, manifest)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    manifest = None
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            manifest = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} looks like JSON but does not parse: {exc}") from None
        if "resolved_config" not in manifest:
            raise ConfigError(f"{path} is JSON but not a manifest (no resolved_config)")
        text = manifest["resolved_config"]
    cfg = parse_config(text)
    if cfg.mode != mode:
        raise ConfigError(f"config is for mode {cfg.mode!r}, command line says {mode!r}")
    return cfg, manifest


def _resolve_workers(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("QTI_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"QTI_WORKERS must be an integer, got {env!r}") from None
    return 1


def _forward_mode(cfg: ExperimentConfig, out: Path, workers: int) -> list[str]:
    obs = list(cfg.train_obs) + list(cfg.test_obs)
    if cfg.two_level:
        estimates = pimd_sh_estimate(cfg.truth, obs, cfg.params, cfg.sampler)
    else:
        estimates = forward_estimate(cfg.truth, obs, cfg.params, cfg.sampler)
    exact = exact_observations(cfg.truth, obs, cfg.params)
    return report.emit_forward(out, obs, estimates, exact)


def _invert_mode(cfg: ExperimentConfig, out: Path, workers: int,
                 paper_scale: bool) -> list[str]:
    icfg = cfg.inversion_config(paper_scale)
    res = run_inversion(cfg.truth, cfg.train_obs, cfg.test_obs, icfg,
                        params=cfg.params, observe_noise=cfg.observe_noise,
                        prediction_burnin=cfg.prediction_burnin,
                        workers=workers)
    burnin = (cfg.prediction_burnin if cfg.prediction_burnin is not None
              else icfg.n_proposals // 4)
    max_lag = max(cfg.t_ac, min(3 * cfg.t_ac, icfg.n_proposals // 2))
    files = []
    files += report.emit_chains(out, res, cfg.train_obs, cfg.test_obs)
    files += report.emit_predictions(out, res, cfg.test_obs)
    files += report.emit_acceptance(out, res)
    files += report.emit_autocorrelation(out, res, cfg.test_obs, max_lag)
    files += report.emit_potential(out, res, cfg.truth, burnin, cfg.t_ac)
    files += report.emit_prediction_figure(out, res, cfg.test_obs)
    files += report.emit_diagnostics_figure(out, res, cfg.test_obs, max_lag)
    return files


def _stability_mode(cfg: ExperimentConfig, out: Path, workers: int) -> list[str]:
    rep = stability_sweep(cfg.truth, cfg.train_obs, cfg.test_obs,
                          cfg.gamma_scales, cfg.stability_config(),
                          params=cfg.params, n_draws=cfg.n_draws,
                          prediction_burnin=cfg.prediction_burnin,
                          workers=workers)
    return report.emit_stability(out, rep, cfg.test_obs)


def run_experiment(cfg: ExperimentConfig, *, out_dir: str | None = None,
                   paper_scale: bool = False, workers: int = 1) -> list[str]:
    """Execute one configured experiment; returns the artifact paths."""
    out = Path(out_dir or cfg.output_dir or f"runs/{cfg.mode}")
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    if cfg.mode == "forward":
        files = _forward_mode(cfg, out, workers)
    elif cfg.mode in ("invert", "twolevel"):
        files = _invert_mode(cfg, out, workers, paper_scale)
    elif cfg.mode == "stability":
        files = _stability_mode(cfg, out, workers)
    else:
        raise ConfigError(f"unhandled mode {cfg.mode!r}")
    wall = time.perf_counter() - t0
    manifest = build_manifest(cfg, paper_scale=paper_scale, workers=workers,
                              wall_clock_s=wall,
                              outputs=[Path(f).name for f in files])
    files.append(report.write_json(out / "manifest.json", manifest))
    return files


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qti",
        description="Bayesian inversion of quantum thermal averages")
    sub = ap.add_subparsers(dest="mode", required=True)
    for mode, blurb in (("forward", "estimate thermal averages along one trajectory"),
                        ("invert", "sample the posterior over potentials"),
                        ("stability", "sweep the observation noise scale"),
                        ("twolevel", "two-level inversion with surface hopping")):
        p = sub.add_parser(mode, help=blurb)
        p.add_argument("--config", required=True,
                       help="key = value document, or a manifest.json to replay")
        p.add_argument("--seed", type=int, default=None,
                       help="override the seed in the config")
        p.add_argument("--paper-scale", action="store_true",
                       help="use the long-run chain budget")
        p.add_argument("--workers", type=int, default=None,
                       help="thread count for independent runs (or QTI_WORKERS)")
        p.add_argument("--out", default=None, help="output directory")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg, manifest = _load_config(args.config, args.mode)
        if args.seed is not None:
            cfg.seed = args.seed
        workers = _resolve_workers(args.workers)
        paper = args.paper_scale or bool(manifest and manifest.get("paper_scale"))
        files = run_experiment(cfg, out_dir=args.out, paper_scale=paper,
                               workers=workers)
    except ConfigError as exc:
        json.dump({"error": "config", "detail": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except QtiError as exc:
        json.dump({"error": type(exc).__name__, "detail": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 3
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
