"""Config document parsing, canonical rendering, and the qti command line."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from qti.basis import PotentialCoeffs, SineGaussianPotential
from qti.cli import main, run_experiment
from qti.config import build_manifest, config_hash, parse_config, render_config
from qti.errors import ConfigError
from qti.inversion import exact_observations
from qti.ringpoly import GaussianBump, ScaledHermite
from qti.twolevel import TwoLevelPotential

TINY_INVERT = """\
mode = "invert"
seed = 7
system = "coeffs"
truth_coeffs = [0.0, 0.5, -0.2]
mass = 1.0
beta = 1.0
n_beads = 4
n_modes = 2
training_observables = [["bump", 0.0, 1.0], ["bump", 0.5, 1.0]]
testing_observables = [["bump", -0.5, 1.0]]
noise_scale = 0.01
n_steps = 400
n_burnin = 50
n_proposals = 8
n_runs = 2
"""


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# -------------------------------------------------------------------- parsing

def test_parse_line_errors():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("mode invert\n")
    with pytest.raises(ConfigError, match=r"line 2.*bad key"):
        parse_config('mode = "invert"\nN_beads = 4\n')
    with pytest.raises(ConfigError, match=r"line 1.*unknown key"):
        parse_config("walrus = 3\n")
    with pytest.raises(ConfigError, match=r"line 3.*duplicate key.*line 1"):
        parse_config('seed = 1\nmode = "invert"\nseed = 2\n')
    with pytest.raises(ConfigError, match=r"line 1.*not valid JSON"):
        parse_config("seed = 0x12\n")
    # comments and blank lines are skipped, line numbers still count them
    with pytest.raises(ConfigError, match="line 4"):
        parse_config('# header\n\nseed = 1\nbogus = 1\n')


def test_missing_and_invalid_required_fields():
    with pytest.raises(ConfigError, match="mode.*seed.*recipe"):
        parse_config("thin = 2\n")
    with pytest.raises(ConfigError, match="mode must be one of"):
        parse_config('mode = "sideways"\nseed = 1\nrecipe = "one_level"\n')
    for bad_seed in ("-3", "true", '"7"'):
        with pytest.raises(ConfigError, match="seed must be"):
            parse_config(f'mode = "invert"\nseed = {bad_seed}\nrecipe = "one_level"\n')


def test_recipe_resolution_and_overrides():
    cfg = parse_config('mode = "invert"\nseed = 3\nrecipe = "one_level"\n')
    assert (cfg.params.M, cfg.params.beta, cfg.params.N) == (10.0, 1.0, 16)
    assert cfg.prior.L == 12
    assert cfg.noise.kind == "scalar" and float(cfg.noise.data) == 1e-3
    assert len(cfg.train_obs) == 9 and len(cfg.test_obs) == 5
    assert (cfg.n_runs, cfg.n_proposals) == (4, 400)
    assert (cfg.paper_n_runs, cfg.paper_n_proposals) == (10, 1600)
    assert cfg.rho == 0.95
    assert isinstance(cfg.truth, SineGaussianPotential)
    # field overrides win over the recipe
    over = parse_config('mode = "invert"\nseed = 3\nrecipe = "one_level"\n'
                        'n_beads = 8\nnoise_scale = 0.01\nn_proposals = 12\n')
    assert over.params.N == 8
    assert float(over.noise.data) == 0.01
    assert over.n_proposals == 12
    with pytest.raises(ConfigError, match="unknown recipe"):
        parse_config('mode = "invert"\nseed = 3\nrecipe = "three_level"\n')
    with pytest.raises(ConfigError, match="does not fit mode"):
        parse_config('mode = "invert"\nseed = 3\nrecipe = "two_level"\n')


def test_explicit_system_requirements():
    base = 'mode = "invert"\nseed = 1\nsystem = "coeffs"\ntruth_coeffs = [0, 1]\n' \
           'mass = 1.0\nbeta = 1.0\nn_beads = 4\nn_modes = 1\n' \
           'training_observables = [["bump", 0, 1]]\n'
    with pytest.raises(ConfigError, match="noise model is required"):
        parse_config(base + "n_steps = 100\n")
    with pytest.raises(ConfigError, match="n_steps is required"):
        parse_config(base + "noise_scale = 0.1\n")
    cfg = parse_config(base + "noise_scale = 0.1\nn_steps = 100\n")
    assert isinstance(cfg.truth, PotentialCoeffs)
    assert cfg.sampler.thin == 1 and cfg.sampler.n_burnin == 0
    assert cfg.sampler.dt > 0          # derived default
    assert cfg.test_obs == ()
    with pytest.raises(ConfigError, match="training_observables is required"):
        parse_config('mode = "invert"\nseed = 1\nsystem = "sine_gaussian"\n'
                     'mass = 1.0\nbeta = 1.0\nn_beads = 4\nn_modes = 1\n'
                     'noise_scale = 0.1\nn_steps = 100\n')
    with pytest.raises(ConfigError, match="needs truth_coeffs"):
        parse_config('mode = "invert"\nseed = 1\nsystem = "coeffs"\n'
                     'mass = 1.0\nbeta = 1.0\nn_beads = 4\nn_modes = 1\n'
                     'training_observables = [["bump", 0, 1]]\n'
                     'noise_scale = 0.1\nn_steps = 100\n')
    with pytest.raises(ConfigError, match="at most one of"):
        parse_config(base + "noise_scale = 0.1\nnoise_diagonal = [0.1]\n"
                     "n_steps = 100\n")


def test_observable_entry_errors():
    head = 'mode = "invert"\nseed = 1\nrecipe = "one_level"\n'
    with pytest.raises(ConfigError, match="unknown observable kind"):
        parse_config(head + 'training_observables = [["box", 0, 1]]\n')
    with pytest.raises(ConfigError, match="kind plus two numbers"):
        parse_config(head + 'training_observables = [["bump", 0]]\n')
    with pytest.raises(ConfigError, match="nonempty list"):
        parse_config(head + 'training_observables = [3]\n')
    head2 = 'mode = "twolevel"\nseed = 1\nrecipe = "two_level"\n'
    with pytest.raises(ConfigError, match="'diag' or 'offdiag'"):
        parse_config(head2 + 'training_observables = [["bump", 0, 1]]\n')
    two = parse_config(head2 + 'training_observables = '
                       '[["diag", "bump", 0, 1], ["offdiag", "hermite", 2, 3.0]]\n')
    assert two.train_obs[0].placement == "diagonal"
    assert isinstance(two.train_obs[1].base, ScaledHermite)


def test_two_level_truth_keys():
    head = ('mode = "twolevel"\nseed = 1\nmass = 10.0\nbeta = 1.0\n'
            'n_beads = 4\nn_modes = 1\nnoise_scale = 0.01\nn_steps = 100\n'
            'training_observables = [["diag", "bump", 0, 1]]\n')
    with pytest.raises(ConfigError, match="v11_coeffs is required"):
        parse_config(head + "v00_coeffs = [0, 1]\n")
    with pytest.raises(ConfigError, match="v01_components is required"):
        parse_config(head + "v00_coeffs = [0, 1]\nv11_coeffs = [1, 0]\n")
    cfg = parse_config(head + "v00_coeffs = [0, 1]\nv11_coeffs = [1, 0]\n"
                       "v01_components = [[0.5, 0.0, 1.0]]\n")
    assert isinstance(cfg.truth, TwoLevelPotential)
    assert cfg.truth.v01[0].A == 0.5


def test_stability_needs_three_scales():
    head = 'mode = "stability"\nseed = 1\nrecipe = "one_level"\n'
    with pytest.raises(ConfigError, match="at least 3 gamma_scales"):
        parse_config(head + "gamma_scales = [0.1, 0.2]\n")
    cfg = parse_config(head + "gamma_scales = [0.1, 0.2, 0.4]\n"
                       "stability_n_runs = 1\nstability_n_proposals = 50\n")
    assert cfg.stability_config().n_proposals == 50
    assert cfg.stability_config().n_runs == 1
    # defaults inherit the desk budget
    plain = parse_config(head)
    assert plain.stability_n_runs == plain.n_runs
    assert plain.stability_n_proposals == plain.n_proposals


def test_render_is_fixed_point():
    docs = [
        'mode = "invert"\nseed = 3\nrecipe = "one_level"\n',
        TINY_INVERT,
        'mode = "invert"\nseed = 9\nsystem = "sine_gaussian"\nmass = 2.0\n'
        'beta = 0.5\nn_beads = 8\nn_modes = 3\n'
        'training_observables = [["hermite", 1, 2.0]]\n'
        'noise_diagonal = [0.1]\nn_steps = 50\nprediction_burnin = 2\n',
        'mode = "twolevel"\nseed = 4\nrecipe = "two_level"\n'
        'noise_matrix = [[0.2, 0.01], [0.01, 0.1]]\n'
        'training_observables = [["diag", "bump", 0, 1], ["offdiag", "bump", 0, 2]]\n',
    ]
    for doc in docs:
        cfg = parse_config(doc)
        text1 = render_config(cfg)
        cfg2 = parse_config(text1)
        text2 = render_config(cfg2)
        assert text1 == text2
        assert config_hash(text1) == config_hash(text2)
        assert cfg2.seed == cfg.seed
        assert cfg2.params == cfg.params
        assert cfg2.noise.kind == cfg.noise.kind
        assert len(cfg2.train_obs) == len(cfg.train_obs)
    a = config_hash(render_config(parse_config(docs[0])))
    b = config_hash(render_config(parse_config(docs[0].replace("seed = 3",
                                                               "seed = 4"))))
    assert a != b


def test_showcase_configs_parse():
    for name, n_train in (("showcase1.cfg", 9), ("showcase2.cfg", 8)):
        text = Path("examples", name).read_text(encoding="utf-8")
        cfg = parse_config(text)
        assert cfg.seed == 20260816
        assert len(cfg.train_obs) == n_train
        rendered = render_config(cfg)
        assert render_config(parse_config(rendered)) == rendered


def test_build_manifest_contents():
    cfg = parse_config(TINY_INVERT)
    man = build_manifest(cfg, paper_scale=False, workers=2, wall_clock_s=1.5,
                         outputs=["b.csv", "a.csv"])
    assert man["content_hash"] == config_hash(man["resolved_config"])
    assert man["outputs"] == ["a.csv", "b.csv"]
    assert man["run_seeds"] == [[7, 0], [7, 1]]
    assert man["versions"]["numpy"]


# ------------------------------------------------------------------- the CLI

def _run(tmp_path, argv):
    return main([a.replace("@", str(tmp_path)) for a in argv])


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("walrus = 1\n", encoding="utf-8")
    assert main(["invert", "--config", str(bad)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config"
    assert "walrus" in err["detail"]
    missing = main(["invert", "--config", str(tmp_path / "absent.cfg")])
    assert missing == 2


def test_cli_mode_mismatch(tmp_path, capsys):
    p = tmp_path / "t.cfg"
    p.write_text(TINY_INVERT, encoding="utf-8")
    assert main(["forward", "--config", str(p)]) == 2
    assert "mode" in json.loads(capsys.readouterr().err)["detail"]


def test_cli_rejects_non_manifest_json(tmp_path, capsys):
    p = tmp_path / "x.json"
    p.write_text('{"a": 1}\n', encoding="utf-8")
    assert main(["invert", "--config", str(p)]) == 2
    assert "resolved_config" in json.loads(capsys.readouterr().err)["detail"]
    p.write_text("{broken\n", encoding="utf-8")
    assert main(["invert", "--config", str(p)]) == 2


def test_cli_forward_mode(tmp_path, capsys):
    doc = TINY_INVERT.replace('mode = "invert"', 'mode = "forward"')
    p = tmp_path / "f.cfg"
    p.write_text(doc, encoding="utf-8")
    assert main(["forward", "--config", str(p), "--out",
                 str(tmp_path / "out")]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert str(tmp_path / "out" / "forward.csv") in printed
    assert (tmp_path / "out" / "forward.png").exists()
    assert (tmp_path / "out" / "manifest.json").exists()
    header, rows = _read_csv(tmp_path / "out" / "forward.csv")
    assert header == ["observable_id", "mean", "std_err", "n_samples", "exact"]
    assert len(rows) == 3
    cfg = parse_config(doc)
    exact = exact_observations(cfg.truth, list(cfg.train_obs) + list(cfg.test_obs),
                               cfg.params)
    got = np.array([float(r[4]) for r in rows])
    assert np.allclose(got, exact, atol=1e-12)
    for r in rows:
        assert abs(float(r[1]) - float(r[4])) < 6 * float(r[2]) + 0.05


def test_cli_invert_artifacts_and_replay(tmp_path, capsys):
    p = tmp_path / "t.cfg"
    p.write_text(TINY_INVERT, encoding="utf-8")
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert main(["invert", "--config", str(p), "--out", str(out1)]) == 0
    capsys.readouterr()

    man = json.loads((out1 / "manifest.json").read_text(encoding="utf-8"))
    expected = {"acceptance.csv", "autocorrelation.csv", "chain_run0.csv",
                "chain_run1.csv", "diagnostics.png", "potential.csv",
                "potential.png", "predictions.csv", "predictions.png"}
    assert set(man["outputs"]) == expected
    assert man["content_hash"] == config_hash(man["resolved_config"])

    header, rows = _read_csv(out1 / "chain_run0.csv")
    assert header[:3] == ["iteration", "accepted", "phi"]
    assert header[3:5] == ["yhat_bump(0,1)", "yhat_bump(0.5,1)"]
    assert "pred_bump(-0.5,1)" in header
    assert header[-3:] == ["v_0", "v_1", "v_2"]
    assert len(rows) == 9               # iteration 0 plus 8 proposals
    assert rows[0][0] == "0" and rows[0][1] == "1"

    _, acc = _read_csv(out1 / "acceptance.csv")
    assert len(acc) == 2
    _, pred = _read_csv(out1 / "predictions.csv")
    assert len(pred) == 1

    # replaying the manifest reproduces every artifact byte for byte
    assert main(["invert", "--config", str(out1 / "manifest.json"),
                 "--out", str(out2)]) == 0
    capsys.readouterr()
    for name in expected:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
    man2 = json.loads((out2 / "manifest.json").read_text(encoding="utf-8"))
    man.pop("wall_clock_s"), man2.pop("wall_clock_s")
    assert man == man2

    # a different seed changes the chain
    out3 = tmp_path / "run3"
    assert main(["invert", "--config", str(p), "--seed", "8",
                 "--out", str(out3)]) == 0
    capsys.readouterr()
    assert (out1 / "chain_run0.csv").read_bytes() \
        != (out3 / "chain_run0.csv").read_bytes()


def test_cli_workers_env(tmp_path, capsys, monkeypatch):
    p = tmp_path / "t.cfg"
    p.write_text(TINY_INVERT, encoding="utf-8")
    monkeypatch.setenv("QTI_WORKERS", "frog")
    assert main(["invert", "--config", str(p), "--out",
                 str(tmp_path / "o1")]) == 2
    assert "QTI_WORKERS" in json.loads(capsys.readouterr().err)["detail"]
    monkeypatch.setenv("QTI_WORKERS", "2")
    assert main(["invert", "--config", str(p), "--out",
                 str(tmp_path / "o2")]) == 0
    capsys.readouterr()
    # threaded runs reproduce the serial artifacts
    monkeypatch.delenv("QTI_WORKERS")
    assert main(["invert", "--config", str(p), "--workers", "1", "--out",
                 str(tmp_path / "o3")]) == 0
    capsys.readouterr()
    for name in ("chain_run0.csv", "chain_run1.csv", "predictions.csv"):
        assert (tmp_path / "o2" / name).read_bytes() \
            == (tmp_path / "o3" / name).read_bytes()


def test_cli_stability_mode(tmp_path, capsys):
    doc = TINY_INVERT.replace('mode = "invert"', 'mode = "stability"')
    doc += ("gamma_scales = [0.05, 0.1, 0.2]\nn_draws = 2\n"
            "stability_n_runs = 1\nstability_n_proposals = 6\n")
    p = tmp_path / "s.cfg"
    p.write_text(doc, encoding="utf-8")
    out = tmp_path / "out"
    assert main(["stability", "--config", str(p), "--out", str(out)]) == 0
    capsys.readouterr()
    header, rows = _read_csv(out / "stability.csv")
    assert header == ["scale", "observable_id", "mean_abs_error"]
    assert len(rows) == 3               # scales x one test observable
    slopes = json.loads((out / "slopes.json").read_text(encoding="utf-8"))
    assert set(slopes["fitted_slope"]) == {"bump(-0.5,1)"}
    assert (out / "stability.png").exists()


def test_cli_twolevel_mode(tmp_path, capsys):
    doc = ('mode = "twolevel"\nseed = 5\nrecipe = "two_level"\n'
           "n_steps = 1000\nn_burnin = 100\nn_proposals = 4\nn_runs = 1\n")
    p = tmp_path / "2l.cfg"
    p.write_text(doc, encoding="utf-8")
    out = tmp_path / "out"
    assert main(["twolevel", "--config", str(p), "--out", str(out)]) == 0
    capsys.readouterr()
    header, rows = _read_csv(out / "chain_run0.csv")
    assert "v00_0" in header and "v11_4" in header and "a_0" in header
    assert len(rows) == 5
    _, pred = _read_csv(out / "predictions.csv")
    assert len(pred) == 4
    assert (out / "potential.png").exists()


def test_run_experiment_unknown_mode(tmp_path):
    cfg = parse_config(TINY_INVERT)
    cfg.mode = "sideways"
    with pytest.raises(ConfigError):
        run_experiment(cfg, out_dir=str(tmp_path))
