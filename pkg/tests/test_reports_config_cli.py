import json
import math
import os
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from scenetopo import cli
from scenetopo import reports as rp
from scenetopo.config import ConfigError, RunConfig, parse_floats


@pytest.mark.parametrize("value, text", [
    (True, "true"), (np.bool_(False), "false"), (3, "3"), (np.int64(-2), "-2"),
    (0.1, "0.1"), (np.float32(0.5), "0.5"), (float("nan"), "nan"), (-math.inf, "-inf"),
    (None, ""), ("a,b", "a,b")])
def test_format_value(value, text):
    assert rp.format_value(value) == text


def test_csv_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    rows = [{"a": float(v), "b": i, "c": "x,y"} for i, v in enumerate(rng.standard_normal(20))]
    p = tmp_path / "t.csv"
    rp.write_csv(p, rows, ["b", "a", "c"])
    raw = p.read_bytes()
    assert raw.startswith(b"b,a,c\n") and b"\r" not in raw
    back = rp.read_csv(p)
    assert [float(r["a"]) for r in back] == [r["a"] for r in rows]
    assert back[0]["c"] == "x,y"
    rp.write_csv(tmp_path / "e.csv", [], ["q"])
    assert (tmp_path / "e.csv").read_text() == "q\n"


def test_colormap_endpoints():
    assert rp.colormap(0.0) == "#440154"
    assert rp.colormap(1.0) == "#fde725"
    assert rp.colormap(float("nan")) == rp.colormap(0.0)
    assert rp.colormap(5.0) == rp.colormap(1.0)


def test_svgs_are_well_formed(tmp_path):
    rng = np.random.default_rng(1)
    x, y = rng.standard_normal(30), rng.standard_normal(30)
    x[3] = np.nan
    rp.svg_scatter(tmp_path / "s.svg", x, y, rng.random(30), title="a < b & c")
    rp.svg_bars(tmp_path / "b.svg", ["raw", "res"], [0.9, 0.3], [0.05, 0.02], reference=1.0)
    rp.svg_lines(tmp_path / "l.svg", {"acc": ([0, 1, 2], [0.5, 0.6, 0.55], [0.01] * 3),
                                      "other": ([0, 1, 2], [0.4, 0.4, 0.45])})
    ns = "{http://www.w3.org/2000/svg}"
    for name, tag, count in (("s", "circle", 29), ("b", "rect", 2), ("l", "polyline", 2)):
        root = ET.parse(tmp_path / f"{name}.svg").getroot()
        assert root.tag == ns + "svg"
        assert len(root.findall(f".//{ns}{tag}")) >= count
    c = np.random.default_rng(2).random(30)
    rp.svg_scatter(tmp_path / "a.svg", x, y, c, title="t")
    rp.svg_scatter(tmp_path / "b.svg", x, y, c, title="t")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_run_config_layers(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[global]\nseed = 3\n[emulator]\nd = 64\nnoise_sigma = 0.5\n")
    cfg = RunConfig().read_file(ini)
    assert cfg.seed == 3 and cfg["emulator"]["d"] == 64
    cfg.apply_override("emulator.noise_sigma=0.25")
    assert cfg["emulator"]["noise_sigma"] == 0.25
    cfg.set("train", "lr", 1)
    assert isinstance(cfg["train"]["lr"], float)
    assert RunConfig(cfg.to_dict()) == cfg
    assert RunConfig() != cfg
    assert "[steer]" in cfg.to_ini()
    assert parse_floats("0, 0.3,1") == [0.0, 0.3, 1.0]


@pytest.mark.parametrize("spec", ["nosection=1", "emulator.d", "bogus.key=1",
                                  "emulator.bogus=1", "emulator.d=abc"])
def test_bad_overrides(spec):
    with pytest.raises(ConfigError):
        RunConfig().apply_override(spec)


def test_bad_config_values(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig().set("emulator", "d", 1.5)
    with pytest.raises(ConfigError):
        parse_floats("1,x")
    bad = tmp_path / "bad.ini"
    bad.write_text("seed = 1\n")  # no section header
    with pytest.raises(ConfigError):
        RunConfig().read_file(bad)
    with pytest.raises(ConfigError):
        RunConfig().read_file(tmp_path / "missing.ini")


def test_cli_exit_codes(tmp_path, capsys):
    out = str(tmp_path / "o")
    assert cli.main([]) == cli.EXIT_USAGE
    assert cli.main(["no-such-command"]) == cli.EXIT_USAGE
    assert cli.main(["gen-data", "--set", "emulator.d=x", "--out", out]) == cli.EXIT_CONFIG
    bad = tmp_path / "bad.ini"
    bad.write_text("[nope]\na = 1\n")
    assert cli.main(["gen-data", "--config", str(bad), "--out", out]) == cli.EXIT_CONFIG
    assert cli.main(["extract", "--out", out]) == cli.EXIT_MISSING
    assert cli.main(["report", "--out", out]) == cli.EXIT_MISSING
    assert cli.main(["replay", str(tmp_path / "none.json")]) == cli.EXIT_MISSING
    err = capsys.readouterr().err
    assert "run `scenetopo emulate` first" in err


def test_cli_spectral_verify_passes_and_writes_manifest(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["spectral-verify", "--seed", "7", "--out", str(out)]) == cli.EXIT_OK
    d = out / "spectral-verify"
    summary = rp.read_csv(d / "summary.csv")
    assert {r["check"]: r["status"] for r in summary} == {
        "theorem1": "pass", "kyfan": "pass", "cube": "pass"}
    man = json.loads((d / "manifest.json").read_text())
    assert man["seed"] == 7 and man["config"]["global"]["seed"] == 7
    for rel, digest in man["outputs"].items():
        assert cli._sha256(out / rel) == digest
    assert json.loads((out / "pipeline.json").read_text())["steps"] == [
        os.path.join("spectral-verify", "manifest.json")]


def test_cli_failed_check_exit_code(tmp_path):
    # a cube too sparse for its bandwidth fails the eigenfunction check
    code = cli.main(["spectral-verify", "--out", str(tmp_path),
                     "--set", "spectral-verify.cube_m=200",
                     "--set", "spectral-verify.cube_tau=0.04",
                     "--set", "spectral-verify.theorem1_scenes=2",
                     "--set", "spectral-verify.n_perturb=20"])
    assert code == cli.EXIT_CHECK
    checks = {r["check_name"]: r["pass"] for r in
              rp.read_csv(tmp_path / "spectral-verify" / "checks.csv")}
    assert checks["cube_mean_cosine"] == "false" and checks["kyfan"] == "true"
    # a value the library rejects maps to the config exit code
    assert cli.main(["spectral-verify", "--out", str(tmp_path),
                     "--set", "spectral-verify.cube_m=120"]) == cli.EXIT_CONFIG


def test_cli_empty_corpus(tmp_path):
    out = str(tmp_path)
    assert cli.main(["gen-data", "--scenes", "0", "--out", out]) == cli.EXIT_OK
    assert rp.read_csv(tmp_path / "gen-data" / "scenes.csv") == []
    assert cli.main(["emulate", "--out", out]) == cli.EXIT_OK
    assert cli.main(["fit-basis", "--out", out]) == cli.EXIT_MISSING


def test_cli_small_chain_and_logistic_basis(tmp_path):
    out = str(tmp_path)
    small = ["--out", out, "--set", "emulator.d=64"]
    assert cli.main(["gen-data", "--scenes", "40", *small]) == cli.EXIT_OK
    assert cli.main(["emulate", *small]) == cli.EXIT_OK
    assert cli.main(["fit-basis", *small, "--set", "extraction.method=logistic"]) == cli.EXIT_OK
    rows = rp.read_csv(tmp_path / "fit-basis" / "basis.csv")
    assert len(rows) == 9  # (8 - 1) colour + (3 - 1) shape directions
    assert cli.main(["fit-basis", *small, "--set", "extraction.method=nope"]) == cli.EXIT_CONFIG
    assert cli.main(["fit-basis", *small]) == cli.EXIT_OK
    assert cli.main(["extract", *small]) == cli.EXIT_OK
    assert cli.main(["report", *small]) == cli.EXIT_OK
    svgs = sorted(p.name for p in (tmp_path / "report").glob("*.svg"))
    assert svgs == ["dirichlet_ratio.svg", "pca_embedding_x.svg", "pca_embedding_y.svg"]
    q = {r["quantity"]: float(r["value"]) for r in
         rp.read_csv(tmp_path / "extract" / "summary.csv")}
    assert q["mean_ratio_residualized"] < q["mean_ratio_raw"]
