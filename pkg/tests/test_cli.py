import json
import math

import pytest

from genurn.cli import main
from genurn.config import ConfigError, load_config, resolve_text
from genurn.verify import load_preset, preset_names, preset_text

COORDINATION = """
[replicator]
name = "coordination"
R = [
  ["table -1:0.1,0:0.2,1:0.4,2:0.3", "table -1:0.4,0:0.5,1:0.1"],
  ["table -1:0.4,0:0.5,1:0.1", "table -1:0.1,0:0.2,1:0.4,2:0.3"],
]

[simulation]
z0 = [10, 10]
seed = 1
max_steps = 3000
"""

PURE_DEATH = """
[rates]
name = "pure-death"
increments = [[-1, 0], [0, -1]]
linear = [[1, 0], [0, 1]]

[simulation]
z0 = [3, 4]
max_steps = 100
"""

RPS = """
[replicator]
R = [[0, -1, 1], [1, 0, -1], [-1, 1, 0]]
"""

ADDITIVE = """
[fertility]
alleles = 2
gamma = [[0.5, 1.0], [1.0, 0.6]]

[meanfield]
grid_density = 4
"""

BIRTH_DEATH = """
[rates]
increments = [[1], [-1]]
probabilities = [0.6, 0.4]

[simulation]
z0 = [10]
seed = 3
max_steps = 2000
record_stride = 2000

[ensemble]
replicates = {R}
growth_threshold = 0.1
"""


def _write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_simulate_is_byte_identical_on_rerun(tmp_path, capsys):
    cfg = _write(tmp_path, COORDINATION)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    for name in ("trajectory.ndjson", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    out = capsys.readouterr().out
    assert "steps=3000" in out and "outcome=completed" in out


def test_simulate_seed_override_changes_output(tmp_path):
    cfg = _write(tmp_path, COORDINATION)
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["simulate", "--config", cfg, "--seed", "2", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "trajectory.ndjson").read_bytes() != \
        (tmp_path / "b" / "trajectory.ndjson").read_bytes()


def test_simulate_pure_death_reports_extinct(tmp_path, capsys):
    cfg = _write(tmp_path, PURE_DEATH)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    assert "outcome=extinct" in capsys.readouterr().out
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["outcome"] == "extinct"
    assert summary["steps"] == 7


def test_manifest_lists_hashes(tmp_path):
    cfg = _write(tmp_path, PURE_DEATH)
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")])
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    paths = [a["path"] for a in manifest["artifacts"]]
    assert paths == ["config.resolved.json", "summary.json", "trajectory.ndjson"]
    assert all(len(a["sha256"]) == 64 for a in manifest["artifacts"])


def test_resolved_config_round_trips(tmp_path):
    cfg = _write(tmp_path, COORDINATION)
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")])
    echoed = str(tmp_path / "a" / "config.resolved.json")
    main(["simulate", "--config", echoed, "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "trajectory.ndjson").read_bytes() == \
        (tmp_path / "b" / "trajectory.ndjson").read_bytes()
    a = json.loads((tmp_path / "a" / "config.resolved.json").read_text())
    b = json.loads((tmp_path / "b" / "config.resolved.json").read_text())
    a["output"].pop("dir"), b["output"].pop("dir")
    assert a == b


def test_missing_model_section_exits_2(tmp_path, capsys):
    cfg = _write(tmp_path, "[simulation]\nseed = 1\n")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "missing model section" in err and "[replicator]" in err


def test_unknown_key_is_line_anchored(tmp_path, capsys):
    cfg = _write(tmp_path, COORDINATION + "colour = 3\n")
    assert main(["simulate", "--config", cfg]) == 2
    err = capsys.readouterr().err
    line = COORDINATION.count("\n") + 1
    assert f"run.toml:{line}:" in err and "colour" in err


def test_config_errors():
    with pytest.raises(ConfigError, match="unknown section"):
        resolve_text("[model]\nx = 1\n")
    with pytest.raises(ConfigError, match="only one model section"):
        resolve_text(RPS + PURE_DEATH.split("[simulation]")[0])
    with pytest.raises(ConfigError, match=r"<config>:5: .*record_stride"):
        resolve_text(RPS + "[simulation]\nrecord_stride = 0\n")
    with pytest.raises(ConfigError, match="bad law descriptor"):
        resolve_text('[replicator]\nR = [["poisson 2", 0], [0, 0]]\n')
    with pytest.raises(ConfigError, match=r"\[mutation\] needs"):
        resolve_text(RPS + "[mutation]\nrate = 0.1\n")


def test_json_config_accepted(tmp_path):
    cfg = resolve_text(RPS)
    p = _write(tmp_path, cfg.to_json(), "run.json")
    assert load_config(p).to_json() == cfg.to_json()


def test_field_rps_has_four_equilibria(tmp_path):
    cfg = _write(tmp_path, RPS)
    out = tmp_path / "o"
    assert main(["field", "--config", cfg, "--out", str(out), "--flow", "0.5,0.3,0.2", "10"]) == 0
    eqs = json.loads((out / "equilibria.json").read_text())["equilibria"]
    assert len(eqs) == 4
    rows = (out / "flow.csv").read_text().splitlines()
    assert rows[0] == "t,x1,x2,x3"
    assert float(rows[-1].split(",")[0]) == 10.0


def test_field_coordination_mixed_point_unstable(tmp_path):
    cfg = _write(tmp_path, COORDINATION)
    main(["field", "--config", cfg, "--out", str(tmp_path / "o")])
    eqs = json.loads((tmp_path / "o" / "equilibria.json").read_text())["equilibria"]
    mixed = [q for q in eqs if not q["face"]]
    assert len(mixed) == 1
    assert mixed[0]["x"] == pytest.approx([0.5, 0.5])
    assert mixed[0]["class"] == "linearly unstable"


def test_field_additive_fertility_on_hw_manifold(tmp_path):
    cfg = _write(tmp_path, ADDITIVE)
    main(["field", "--config", cfg, "--out", str(tmp_path / "o")])
    eqs = json.loads((tmp_path / "o" / "equilibria.json").read_text())["equilibria"]
    assert eqs
    assert all(q["hw_defect"] <= 1e-8 for q in eqs)


def test_bad_flow_point_is_config_error(tmp_path):
    cfg = _write(tmp_path, RPS)
    assert main(["field", "--config", cfg, "--out", str(tmp_path / "o"),
                 "--flow", "0.5,0.5", "1"]) == 2


def test_montecarlo_birth_death(tmp_path, capsys):
    R = 1000
    cfg = _write(tmp_path, BIRTH_DEATH.format(R=R))
    out = tmp_path / "o"
    assert main(["montecarlo", "--config", cfg, "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    p = 1 - (2 / 3) ** 10
    assert abs(rep["growth_fraction"] - p) <= 3 * math.sqrt(p * (1 - p) / R)
    lines = (out / "replicates.csv").read_text().splitlines()
    assert lines[0] == "replicate,seed,outcome,rate,limit_id"
    assert len(lines) == R + 1


def test_montecarlo_single_replicate(tmp_path):
    cfg = _write(tmp_path, BIRTH_DEATH.format(R=1))
    main(["montecarlo", "--config", cfg, "--out", str(tmp_path / "o")])
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["replicates"] == 1
    assert rep["growth_se"] is None and rep["growth_ci95"] is None


def test_montecarlo_rerun_is_identical(tmp_path):
    cfg = _write(tmp_path, BIRTH_DEATH.format(R=50))
    main(["montecarlo", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["montecarlo", "--config", cfg, "--out", str(tmp_path / "b"), "--threads", "4"])
    for name in ("report.json", "replicates.csv", "curves.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_presets_are_bundled():
    assert len(preset_names()) == 12
    for name in preset_names():
        assert load_preset(name).section("verify")["scenario"] == name


def test_verify_preset_passes(tmp_path, capsys):
    assert main(["verify", "--preset", "additive-fertility-identity", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "verify.json").read_text())
    assert report["passed"] and report["criterion"] == 2


def test_verify_forced_failure_names_criterion(tmp_path, capsys):
    text = preset_text("coordination-growth-rate")
    text = text.replace("band = 0.1", "band = 0.0").replace("replicates = 100", "replicates = 4")
    text = text.replace("max_steps = 100000", "max_steps = 20000")
    cfg = _write(tmp_path, text)
    assert main(["verify", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "criterion 4" in err and "coordination-growth-rate" in err


def test_verify_rejects_unknown_parameter(tmp_path):
    text = preset_text("dominated-exclusion") + "tolerance = 3\n"
    cfg = _write(tmp_path, text)
    assert main(["verify", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_no_configuration_is_config_error(capsys):
    assert main(["simulate"]) == 2
    assert "presets:" in capsys.readouterr().err
