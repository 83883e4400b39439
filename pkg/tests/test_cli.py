import json

import pytest

from sfomkit.cli import build_parser, main, resolve_config


def test_flags_override_config_file(tmp_path):
    cfg_file = tmp_path / "c.json"
    cfg_file.write_text(json.dumps({"dx_values": [0.3], "dt_values": [0.1], "seed": 4}))
    args = build_parser().parse_args(["diffusion-sweep", "--config", str(cfg_file),
                                      "--seed", "7"])
    cfg = resolve_config("diffusion-sweep", args)
    assert cfg.seed == 7 and cfg.dx_values == (0.3,)


def test_defaults_for_seed_and_out_dir():
    args = build_parser().parse_args(["burgers"])
    assert str(args.out_dir).endswith("burgers")
    assert resolve_config("burgers", args).seed == 0


def test_bool_flag():
    args = build_parser().parse_args(["burgers", "--dense-spectrum", "false"])
    assert resolve_config("burgers", args).dense_spectrum is False


def test_end_to_end_diffusion(tmp_path, capsys):
    out = tmp_path / "run"
    rc = main(["diffusion-sweep", "--dx-values", "0.3", "--dt-values", "0.1", "--T", "2",
               "--out-dir", str(out)])
    assert rc == 0
    assert json.loads(capsys.readouterr().out)["rows"] == 2
    summary = json.loads((out / "summary.json").read_text())
    assert summary["provenance"]["seed"] == 0
    assert (out / "results.csv").read_text().startswith("# config_sha256:")


def test_end_to_end_model_tools(tmp_path):
    out = tmp_path / "b"
    assert main(["burgers", "--dx", "0.1", "--T", "0.3", "--aug-count", "30",
                 "--eta-num", "6", "--g-values", "10", "--sweep-alphas", "0.1",
                 "--sweep-mus", "5", "--out-dir", str(out)]) == 0
    model = str(out / "model.json")
    with pytest.warns(UserWarning, match="quadratic"):
        assert main(["stability-report", "--model", model,
                     "--out-dir", str(tmp_path / "r")]) == 0
    assert (tmp_path / "r" / "spectrum.csv").exists()
    assert main(["simulate", "--model", model, "--ic", "gaussian", "--alpha", "0.5",
                 "--steps", "5", "--out-dir", str(tmp_path / "s")]) == 0
    status = json.loads((tmp_path / "s" / "summary.json").read_text())["status"]
    assert status == "completed"


def test_bad_inputs(tmp_path, capsys):
    with pytest.raises(SystemExit):
        main(["diffusion-sweep", "--dt-values", "-1", "--out-dir", str(tmp_path)])
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert main(["stability-report", "--model", str(bad), "--out-dir", str(tmp_path)]) == 2
    assert "malformed" in capsys.readouterr().err
