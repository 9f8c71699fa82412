import json
import os

import pytest

from peellab import __version__
from peellab.cli_reports import (RunManifest, config_hash, load_config, main, svg_line_plot, validate_config)
from peellab.errors import SchemaError
from peellab.floating_sandwich import sandwich_params


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def test_peel_csv_header(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["peel", "--polytope", "cube", "--dim", "2", "--lambda", "1000", "--seed", "7", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "id,x1,x2,layer" and len(lines) > 900
    assert all(int(l.split(",")[-1]) >= 1 for l in lines[1:])


def test_unknown_flag_is_usage_error(capsys):
    assert main(["peel", "--lambda", "10", "--bogus"]) == 1
    assert "usage" in capsys.readouterr().err
    assert main(["nosuchcommand"]) == 1


def test_runtime_error_exit_code():
    assert main(["sandwich-check", "--lambda", "2"]) == 2


def test_load_config_defaults(tmp_path):
    cfg = load_config(_write(tmp_path / "c.json", {"dim": 2, "lambda_grid": [1000], "n": 1, "reps": 10}))
    assert cfg.n == [1] and cfg.k == [0] and cfg.seed == 0 and cfg.polytope == "cube"
    assert cfg.window["step"] == 0.25 and cfg.alpha_override is None


@pytest.mark.parametrize("bad,key", [
    ({"reps": -3}, "reps"),
    ({"lambda_grid": [1000, 10]}, "lambda_grid"),
    ({"lambda_grid": [0]}, "lambda_grid[0]"),
    ({"n": [1, 0]}, "n[1]"),
    ({"window": {"radius": "x"}}, "window.radius"),
    ({"colour": 1}, "colour"),
    ({"polytope": "dodecahedron"}, "polytope"),
])
def test_schema_errors_name_key(bad, key):
    raw = {"dim": 2, "lambda_grid": [1000], "n": 1, "reps": 10, **bad}
    with pytest.raises(SchemaError) as ei:
        validate_config(raw)
    assert ei.value.key == key


def test_bad_config_exit_code(tmp_path):
    p = _write(tmp_path / "c.json", {"dim": 2, "lambda_grid": [1000], "n": 1, "reps": -1})
    assert main(["estimate", "--config", p, "--out", str(tmp_path / "o")]) == 1


def test_alpha_override_propagates(tmp_path):
    cfg = load_config(_write(tmp_path / "c.json", {"dim": 2, "lambda_grid": [1e5], "n": 1, "reps": 2,
                                                   "alpha_override": 50}))
    p = sandwich_params(cfg.lambda_grid[0], cfg.dim, cfg.alpha_override)
    assert p.alpha == 50 and not p.alpha_is_formula


def test_config_hash_key_order():
    a = {"dim": 2, "lambda_grid": [1000], "n": 1, "reps": 10, "seed": 3}
    b = dict(reversed(list(a.items())))
    assert config_hash(validate_config(a)) == config_hash(validate_config(b))
    assert config_hash(validate_config(a)) != config_hash(validate_config({**a, "seed": 4}))


def test_estimate_twice_identical_and_report(tmp_path):
    cfg = _write(tmp_path / "exp.json", {"dim": 2, "lambda_grid": [500, 2000], "n": [1, 2], "reps": 4, "seed": 5})
    for name in ("a", "b"):
        assert main(["estimate", "--config", cfg, "--out", str(tmp_path / name), "--workers", "1"]) == 0
    a = (tmp_path / "a" / "results.csv").read_bytes()
    assert a == (tmp_path / "b" / "results.csv").read_bytes()
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["tool_version"] == __version__ and man["seed"] == 5 and len(man["outputs"]) == 2
    rep = tmp_path / "rep"
    assert main(["report", "--in", str(tmp_path / "a" / "summary.json"), "--out", str(rep)]) == 0
    man = json.loads((rep / "manifest.json").read_text())
    svgs = [p for p in man["outputs"] if p.endswith(".svg")]
    assert len(svgs) == 2 and all(os.path.exists(p) for p in svgs)
    assert open(svgs[0]).read().startswith("<svg")


def test_other_subcommands(tmp_path, capsys):
    assert main(["sample", "--lambda", "50", "--out", str(tmp_path / "s.csv")]) == 0
    assert (tmp_path / "s.csv").read_text().startswith("id,x1,x2\n")
    assert main(["sandwich-check", "--lambda", "1e4", "--alpha-override", "50"]) == 0
    js = json.loads(capsys.readouterr().out)
    assert set(js) >= {"lambda", "n", "params", "event", "shell_point_count"}
    assert main(["capcover", "--level", "-6", "--checks", "50"]) == 0
    assert capsys.readouterr().out.startswith("k,center,vol_Kp,vol_Ki,L_i")
    assert main(["rescaled", "--reps", "2", "--radius", "3"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2 and {"window", "labels", "face_counts", "max_heights"} <= set(json.loads(lines[0]))
    assert main(["convexpos", "--n", "4", "--reps", "500"]) == 0
    assert 0 < json.loads(capsys.readouterr().out)["p"] < 1


def test_manifest_and_svg(tmp_path):
    m = RunManifest("0", "abc", 1, "t0", "t1", ["x"])
    m.write(tmp_path / "m.json")
    assert json.loads((tmp_path / "m.json").read_text())["config_hash"] == "abc"
    svg = svg_line_plot({"a": ([10, 100, 1000], [1.0, 2.0, 1.5])}, "t", "x", "y")
    assert svg.count("<circle") == 3 and svg.strip().endswith("</svg>")
