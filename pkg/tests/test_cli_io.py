import dataclasses
import json
import math
import shutil
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotogen import catalog, cli
from rotogen.continuation import BoundaryInit, OriginInit, RegularInit
from rotogen.errors import ConfigError
from rotogen.hfield import ConstantH, PolynomialH
from rotogen.io import (CurveRecord, parse_config_text, parse_hfield, parse_type, read_csv, read_svg_points,
                        svg_points, write_csv)

FIXTURES = Path(__file__).parent / "fixtures"

MINIMAL = """\
type = II ell=1 m=1
H = constant:0
init = origin:0
window = -1, 1
"""


def test_minimal_config():
    cfg = parse_config_text(MINIMAL)
    assert cfg.spec == catalog.type_II(1, 1)
    assert isinstance(cfg.h, ConstantH) and cfg.h(0.3) == 0.0
    assert cfg.init == OriginInit(0)
    assert cfg.window == (-1.0, 1.0)
    assert cfg.csv is None and cfg.svg is None


def test_init_kinds():
    for text, expected in [("init = boundary:1,upper,0.5", BoundaryInit(1, "upper", 0.5)),
                           ("init = regular:0.1,1,0", RegularInit(0.1, 1.0, 0.0)),
                           ("init = regular:0.1,1,0,2", RegularInit(0.1, 1.0, 0.0, 2.0))]:
        cfg = parse_config_text(MINIMAL.replace("init = origin:0", text).replace("-1, 1", "-1, 3"))
        assert cfg.init == expected


@pytest.mark.parametrize("text,line,key", [
    (MINIMAL + "colour = red\n", 5, "colour"),
    (MINIMAL.replace("constant:0", "sin(("), 2, "H"),
    (MINIMAL.replace("-1, 1", "1, 1"), 4, "window"),
    (MINIMAL.replace("-1, 1", "1, -1"), 4, "window"),
    (MINIMAL.replace("origin:0", "center"), 3, "init"),
    (MINIMAL.replace("II ell=1 m=1", "II ell=1"), 1, "type"),
    (MINIMAL.replace("II ell=1 m=1", "VI n=3"), 1, "type"),
    (MINIMAL + "H = constant:1\n", 5, "H"),
    ("# only a comment\n" + MINIMAL.replace("window", "windw"), 5, "windw"),
])
def test_config_errors_carry_line_and_key(text, line, key):
    with pytest.raises(ConfigError) as info:
        parse_config_text(text)
    assert info.value.line == line and info.value.key == key


def test_unknown_key_lists_valid_keys():
    with pytest.raises(ConfigError) as info:
        parse_config_text(MINIMAL + "colour = red\n")
    assert "window" in str(info.value) and "init" in str(info.value)


def test_missing_keys():
    with pytest.raises(ConfigError, match="window"):
        parse_config_text("type = I n=3\nH = 0\ninit = regular:0,1,0\n")


def test_h_expression_parsing():
    h = parse_hfield("0.5 + 0.25*cos(s)")
    assert h(0.0) == pytest.approx(0.75, abs=1e-15)
    assert parse_hfield("expr: s*s")(3.0) == pytest.approx(9.0)
    p = parse_hfield("polynomial:1,2,3")
    assert isinstance(p, PolynomialH) and p(2.0) == pytest.approx(17.0)
    t = parse_hfield("table:0,0;1,2")
    assert t(0.5) == pytest.approx(1.0)


def test_type_parsing():
    assert parse_type("II ell=2 m=3") == catalog.type_II(2, 3)
    assert parse_type(["IV", "variant=SO(5),R10"]) == catalog.type_IV("SO(5),R10")
    assert parse_type("V n0=2") == catalog.type_V(2)


_fin = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(_fin, _fin, _fin, _fin, st.integers(-3, 5), st.floats(0, 1e3),
                          st.sampled_from(["regular", "boundary_startup:0", "origin_startup:1"])),
                min_size=1, max_size=30))
def test_csv_round_trip(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("csv") / "c.csv"
    recs = [CurveRecord(*r) for r in rows]
    write_csv(path, recs)
    assert read_csv(path) == recs


def _run(tmp_path, name, *extra):
    out = tmp_path / Path(name).stem
    code = cli.main(["run", str(FIXTURES / name), "--out-dir", str(out), *extra])
    return code, out


def test_sphere_run_outputs(tmp_path):
    code, out = _run(tmp_path, "sphere.cfg")
    assert code == cli.EXIT_OK
    recs = read_csv(out / "sphere.csv")
    assert max(abs(math.hypot(r.x, r.y) - 1.0) for r in recs) < 1e-4
    diag = json.loads((out / "sphere.json").read_text())
    assert diag["error"] is None
    assert len([e for e in diag["events"] if e["kind"] == "boundary"]) == 2
    assert diag["stitch"]["ok"]
    assert {r.provenance for r in recs} >= {"regular", "boundary_startup:0"}
    pts = read_svg_points(out / "sphere.svg")
    assert len(pts) == len(recs)
    expect, _ = svg_points(recs)
    for a, b in ((pts[0], expect[0]), (pts[-1], expect[-1])):
        assert a[0] == pytest.approx(b[0], abs=1e-3) and a[1] == pytest.approx(b[1], abs=1e-3)
    assert all(0.0 <= c <= 800.0 for p in pts for c in p)


def test_ray_run(tmp_path):
    code, out = _run(tmp_path, "ray.cfg")
    assert code == cli.EXIT_OK
    recs = read_csv(out / "ray.csv")
    assert max(abs(math.remainder(r.tau - math.pi / 4, 2 * math.pi)) for r in recs) < 1e-12
    assert recs[0].s == pytest.approx(-2.0) and recs[-1].s == pytest.approx(2.0)


@pytest.mark.parametrize("name", sorted(p.name for p in FIXTURES.glob("*.cfg")))
def test_reruns_are_byte_identical(tmp_path, name):
    c1, o1 = _run(tmp_path / "a", name)
    c2, o2 = _run(tmp_path / "b", name)
    assert c1 == c2 == cli.EXIT_OK
    files = sorted(p.name for p in o1.iterdir())
    assert files == sorted(p.name for p in o2.iterdir())
    for f in files:
        assert (o1 / f).read_bytes() == (o2 / f).read_bytes()


def test_parallel_jobs_match_serial(tmp_path):
    names = [str(p) for p in sorted(FIXTURES.glob("*.cfg"))]
    assert cli.main(["run", *names, "--out-dir", str(tmp_path / "s")]) == cli.EXIT_OK
    assert cli.main(["run", *names, "--out-dir", str(tmp_path / "p"), "--jobs", "4"]) == cli.EXIT_OK
    for f in (tmp_path / "s").iterdir():
        assert f.read_bytes() == (tmp_path / "p" / f.name).read_bytes()


def test_exit_code_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(MINIMAL + "colour = red\n")
    assert cli.main(["run", str(bad)]) == cli.EXIT_CONFIG
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"]["line"] == 5 and err["error"]["key"] == "colour"


def test_exit_code_solver_error(tmp_path, capsys):
    cfg = tmp_path / "capped.cfg"
    cfg.write_text((FIXTURES / "sphere.cfg").read_text() + "max_events = 1\n")
    assert cli.main(["run", str(cfg)]) == cli.EXIT_SOLVER
    assert "cap" in capsys.readouterr().err
    diag = json.loads((tmp_path / "capped.json").read_text())
    assert diag["error"] is not None
    assert read_csv(tmp_path / "capped.csv")  # partial curve is written


def test_self_check_passes(capsys):
    assert cli.main(["--self-check"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out and "rows pass" in out


def test_self_check_detects_fault():
    good = catalog.type_II(1, 1)
    phi = dict(good.phi)
    phi[0] += 1e-3
    bad = dataclasses.replace(good, phi=phi)
    rows = cli.verify_suite([good, bad])
    k = len(catalog.sector_ids(good))
    assert all(r["pass"] for r in rows[:k])
    assert not any(r["pass"] for r in rows[k:])


def test_theta_command(capsys):
    assert cli.main(["theta", "II", "ell=1", "m=1"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "0.7853981633974483" in out
    assert cli.main(["theta", "III", "n0=2"]) == cli.EXIT_OK
    assert "30.000000" in capsys.readouterr().out
    assert cli.main(["theta", "II", "bogus=1"]) == cli.EXIT_CONFIG
