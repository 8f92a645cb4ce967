import math
from pathlib import Path

import pytest

from cornerscatter.cli import (
    EXPERIMENT_KINDS,
    ConfigError,
    ExperimentConfig,
    load_config,
    main,
    parse_config,
    run_experiment,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_parse_numbers_and_tuples():
    cfg = parse_config("""
        kind = corner-scatters   # comment
        domain.kind = sector
        domain.theta0 = 3*pi/4
        incident.orders = 0, 1, 2
        mesh.levels = 0.04, 0.02
    """)
    assert cfg.domain.theta0 == pytest.approx(3 * math.pi / 4)
    assert cfg.incident.orders == (0, 1, 2)
    assert cfg.mesh.levels == (0.04, 0.02)


@pytest.mark.parametrize("text", [
    "kind = nonsense",
    "bogus.key = 1",
    "domain.nope = 1",
    "kappa = __import__('os')",
    "kappa = -1",
    "incident.orders = 1.5",
    "just words",
    "kind = disk-oracle\ndomain.kind = sector",
    "mesh.levels = ",
])
def test_invalid_configs_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_config_roundtrip():
    cfg = load_config(CONFIGS / "corner-scatters.cfg")
    assert parse_config("\n".join(cfg.to_lines())) == cfg


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.cfg")), ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    cfg = load_config(path)
    assert cfg.kind in EXPERIMENT_KINDS


def test_list(capsys):
    assert main(["experiment", "list"]) == 0
    assert capsys.readouterr().out.split() == list(EXPERIMENT_KINDS)


def _run_twice(cfg_name, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["experiment", "run", str(CONFIGS / cfg_name), "--out", str(a)]) == 0
    assert main(["experiment", "run", str(CONFIGS / cfg_name), "--out", str(b)]) == 0
    return a, b


@pytest.mark.parametrize("cfg_name", ["identity-sanity.cfg", "oracle-suite.cfg"])
def test_reruns_are_byte_identical(cfg_name, tmp_path):
    a, b = _run_twice(cfg_name, tmp_path)
    csvs = sorted(p.name for p in a.glob("*.csv") if p.name != "timing.csv")
    assert "summary.csv" in csvs
    for name in csvs:
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert (a / "manifest.txt").read_bytes() == (b / "manifest.txt").read_bytes()
    assert (a / "verdict.txt").read_text().startswith("verdict: pass")


def test_identity_sanity_norms(tmp_path):
    cfg = load_config(CONFIGS / "identity-sanity.cfg")
    report, code = run_experiment(cfg, tmp_path)
    assert code == 0
    col = report.summary_header.index("normalized_norm")
    assert all(row[col] < 1e-8 for row in report.summary_rows)


def test_failing_verdict_exits_one(tmp_path):
    cfg = parse_config("""
        kind = identity-sanity
        domain.kind = disk
        domain.radius = 0.5
        medium.rho = 2
        mesh.levels = 0.1
        mesh.R = 1.5
    """)
    _, code = run_experiment(cfg, tmp_path)
    assert code == 1
    assert (tmp_path / "verdict.txt").read_text().startswith("verdict: fail")


def test_infrastructure_errors_exit_two(tmp_path, capsys):
    assert main(["experiment", "run", str(tmp_path / "missing.cfg")]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("kind = nope\n")
    assert main(["experiment", "run", str(bad)]) == 2
    assert "error" in capsys.readouterr().err


def test_stage_is_named_on_failure(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    # truncation circle inside the scatterer: meshing must fail
    cfg.write_text("kind = identity-sanity\ndomain.kind = disk\ndomain.radius = 0.5\nmesh.R = 0.3\nmesh.levels = 0.1\n")
    assert main(["experiment", "run", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "mesh" in capsys.readouterr().err


def test_oracle_commands(tmp_path, capsys):
    assert main(["oracle", "det", "--m", "1", "--theta0", "pi/2"]) == 0
    out = capsys.readouterr().out
    assert "determinant,4" in out and "neumann_kernel_dim,0" in out
    poly = tmp_path / "p.txt"
    poly.write_text("1 1 2\n")
    assert main(["oracle", "ck", "--poly", str(poly)]) == 0
    lines = sorted(capsys.readouterr().out.split("\n"))
    assert "-1 1 2" in lines and "1/3 3 0" in lines
    assert main(["oracle", "mie", "--kappa", "1", "--rho", "2", "--radius", "0.5"]) == 0
    assert capsys.readouterr().out.startswith("m,re,im")


def test_solve_farfield_blowup_roundtrip(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text((CONFIGS / "blowup-corner.cfg").read_text().replace("mesh.levels = 0.01", "mesh.levels = 0.05"))
    assert main(["solve", str(cfg), "--out", str(tmp_path / "s")]) == 0
    field = tmp_path / "s" / "field_fb1.txt"
    assert field.exists()
    assert main(["farfield", str(field), "--kappa", "1", "--out", str(tmp_path / "ff.csv")]) == 0
    stored = (tmp_path / "s" / "farfield_fb1.csv").read_text().splitlines()[1].split(",")
    again = (tmp_path / "ff.csv").read_text().splitlines()[1].split(",")
    assert float(again[1]) == pytest.approx(float(stored[1]), rel=1e-6, abs=1e-12)
    assert main(["blowup", str(field), "--order", "3", "--radii", "0.4,0.3,0.2", "--out", str(tmp_path / "b")]) == 0
    assert "support:" in (tmp_path / "b" / "blowup_fit.txt").read_text()
