import json
import math
from pathlib import Path

import pytest

from coverlab.cli import (
    ConfigError,
    ExperimentConfig,
    build_config,
    load_config,
    main,
    parse_complex,
    parse_config_text,
    run,
)

GOOD_CONFIG = """\
# identity-map experiment with the figure-eight and its focus disks
map = z
radii.mode = explicit-list
radii.list = 2
disk.1.center = -0.5+0.5i
disk.1.radius = 0.055
disk.2.center = 0.5+0.5i
disk.2.radius = 0.055
disk.3.center = inf
disk.3.radius = 0.112837916709551
graph.node = 0.5i
graph.scale = 0.5
resolution = 256
seed = 3
samples = 150
verifiers = mean_degree, islands, graph, rh, euler, containment
"""


def test_parse_complex():
    assert parse_complex("1+2i") == 1 + 2j
    assert parse_complex("-0.5i") == -0.5j
    assert parse_complex("inf") == "inf"
    assert parse_complex("3") == 3 + 0j
    with pytest.raises(ValueError):
        parse_complex("wat")


def test_config_parse_roundtrip():
    cfg = parse_config_text(GOOD_CONFIG)
    assert cfg.map_source == "z"
    assert cfg.radii_list == [2.0]
    assert len(cfg.disks) == 3
    assert cfg.graph.node == 0.5j
    assert cfg.resolution == 256
    resolved = cfg.resolved()
    assert resolved["map"] == "z"
    assert resolved["slack"]["c1"] == 4.0


def test_config_two_disks_error():
    text = GOOD_CONFIG.replace("disk.3.center = inf\n", "").replace(
        "disk.3.radius = 0.112837916709551\n", ""
    )
    with pytest.raises(ConfigError, match="exactly 3 disks"):
        parse_config_text(text)


def test_config_unknown_key():
    with pytest.raises(ConfigError, match="unknown configuration key"):
        parse_config_text("map = z\nfrobnicate = 1\n")


def test_config_overlapping_disks():
    text = GOOD_CONFIG.replace("disk.2.center = 0.5+0.5i", "disk.2.center = -0.5+0.5i")
    with pytest.raises(ConfigError, match="disjoint"):
        parse_config_text(text)


def test_config_bad_map():
    with pytest.raises(ConfigError, match="map"):
        parse_config_text("map = exp(2*z\nradii.list = 1\n")


def test_config_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        load_config("definitely-missing.cfg")


def test_cli_profile_output(capsys):
    code = main(["profile", "--map", "z", "--r", "1"])
    out = capsys.readouterr().out
    assert code == 0
    assert "a=0.5" in out
    assert "l=1.77245385091" in out  # sqrt(pi)


def test_cli_islands_exp(capsys):
    code = main(["islands", "--map", "exp(z)", "--r", "20"])
    out = capsys.readouterr().out
    assert code == 0
    assert "islands=13" in out


def test_cli_missing_config_exit_2(capsys):
    assert main(["verify-all", "--config", "missing.cfg"]) == 2


def test_cli_unknown_flag_exit_2(capsys):
    assert main(["profile", "--map", "z", "--frob", "1"]) == 2


def test_cli_missing_map_exit_2(capsys):
    assert main(["profile"]) == 2


def test_run_identity_config_passes(tmp_path):
    cfg = parse_config_text(GOOD_CONFIG + f"outputs = {tmp_path}/out\n")
    code = run(cfg)
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["errors"] == []
    assert all(v["passed"] for v in summary["verifiers"].values()), summary["verifiers"]
    assert code == 0
    assert (tmp_path / "out" / "report.csv").exists()
    assert (tmp_path / "out" / "profile.csv").exists()
    assert (tmp_path / "out" / "graph_2.svg").exists()
    # summary is self-describing
    assert summary["config"]["map"] == "z"
    assert summary["config"]["resolution"] == 256


def test_run_deterministic_outputs(tmp_path):
    cfg1 = parse_config_text(GOOD_CONFIG + f"outputs = {tmp_path}/a\n")
    cfg2 = parse_config_text(GOOD_CONFIG + f"outputs = {tmp_path}/b\n")
    assert run(cfg1) == run(cfg2)
    for name in ("report.csv", "profile.csv", "graph_2.json"):
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        assert a == b, name


def test_run_length_area_selected_mode(tmp_path):
    cfg = ExperimentConfig(
        map_source="exp(z)",
        radii_mode="length-area-selected",
        radii_min=4.0,
        radii_max=12.0,
        radii_count=2,
        verifiers=("mean_degree",),
        samples=120,
        outputs=str(tmp_path / "sel"),
    ).validate()
    code = run(cfg)
    summary = json.loads((tmp_path / "sel" / "summary.json").read_text())
    assert code == 0
    radii = summary["radii"]
    assert len(radii) >= 1
    assert radii == sorted(radii)
