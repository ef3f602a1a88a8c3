import csv
import json
import subprocess
import sys

import pytest

from distdelay import __version__
from distdelay.cli import main, parse_delays, parse_grid


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    lines = text.splitlines()
    meta = [l for l in lines if l.startswith("#")]
    rows = list(csv.DictReader(l for l in lines if not l.startswith("#")))
    return meta, rows


def test_parse_helpers():
    assert list(parse_grid("0:30:31"))[15] == 15.0
    assert list(parse_grid("25")) == [25.0]
    assert parse_delays("5,inf,zero") == [5.0, "inf", "zero"]
    for bad in ("0:1", "a:b:c", "0:1:0"):
        with pytest.raises(Exception):
            parse_grid(bad)
    with pytest.raises(Exception):
        parse_delays("-1")


def test_crlf_line_endings(capsys):
    _, out, _ = run(["curve", "--snr-db", "15", "--delay", "inf"], capsys)
    assert out.count("\r\n") == out.count("\n") == 4


def test_curve_infinite_delay(capsys):
    code, out, _ = run(["curve", "--mt", "1", "--mr", "1", "--eta", "2", "--snr-db", "0:30:31",
                        "--delay", "inf"], capsys)
    assert code == 0
    meta, rows = read_csv(out)
    assert len(rows) == 31
    assert meta[0] == f"# distdelay {__version__}"
    cfg = json.loads(meta[1].split(":", 1)[1])
    assert cfg["eta"] == 2.0 and cfg["delay"] == ["inf"]
    at15 = next(r for r in rows if float(r["snr_db"]) == 15.0)
    assert float(at15["distortion"]) == pytest.approx(0.0025, abs=1e-4)
    assert list(rows[0]) == ["snr_db", "tau_n", "eta", "distortion", "distortion_db", "method"]


def test_curve_zero_above_inf(capsys):
    _, out, _ = run(["curve", "--snr-db", "0:40:9", "--delay", "zero,inf"], capsys)
    _, rows = read_csv(out)
    by_snr = {}
    for r in rows:
        by_snr.setdefault(r["snr_db"], {})[r["tau_n"]] = float(r["distortion"])
    for v in by_snr.values():
        assert v["0"] >= v["inf"]


def test_curve_small_delay_gap(capsys):
    _, out, _ = run(["curve", "--delay", "5,inf", "--snr-db", "25:25:1"], capsys)
    _, rows = read_csv(out)
    db = {r["tau_n"]: float(r["distortion_db"]) for r in rows}
    assert 0 < db["5"] - db["inf"] < 1.0


def test_twelve_significant_digits(capsys):
    _, out, _ = run(["curve", "--delay", "inf", "--snr-db", "15"], capsys)
    _, rows = read_csv(out)
    digits = rows[0]["distortion"].split("e")[0].replace(".", "").lstrip("0")
    assert len(digits) <= 12


def test_sorted_by_snr_then_delay(capsys):
    _, out, _ = run(["curve", "--delay", "inf,2,zero", "--snr-db", "20:0:3"], capsys)
    _, rows = read_csv(out)
    keys = [(float(r["snr_db"]), float(r["tau_n"])) for r in rows]
    assert keys == sorted(keys)


def test_json_format(capsys, tmp_path):
    path = tmp_path / "c.json"
    code, out, _ = run(["curve", "--delay", "2", "--snr-db", "0:10:3", "--format", "json",
                        "--out", str(path)], capsys)
    assert code == 0 and out == ""
    doc = json.loads(path.read_text())
    assert doc["schema"] == "dd/1" and doc["version"] == __version__
    assert len(doc["rows"]) == 3


def test_exponent_profiles(capsys):
    _, out, _ = run(["exponent", "--mt", "2", "--mr", "2", "--eta-grid", "0:6:13",
                     "--delay", "1,zero"], capsys)
    _, rows = read_csv(out)
    tau1 = {float(r["eta"]): float(r["analytic_alpha"]) for r in rows if r["tau_n"] == "1"}
    nb = {float(r["eta"]): float(r["analytic_alpha"]) for r in rows if r["tau_n"] == "zero"}
    assert tau1 == nb
    assert tau1[3.0] == 4.0 and tau1[2.5] < 4.0 and tau1[6.0] == 4.0

    _, out, _ = run(["exponent", "--eta-grid", "0:10:21", "--delay", "5"], capsys)
    _, rows = read_csv(out)
    a = {float(r["eta"]): float(r["analytic_alpha"]) for r in rows}
    assert a[4.5] < 5.0 and a[5.0] == 5.0 and a[10.0] == 5.0


def test_exponent_fit_column(capsys):
    _, out, _ = run(["exponent", "--eta-grid", "1:2:2", "--delay", "5", "--fit"], capsys)
    _, rows = read_csv(out)
    for r in rows:
        assert float(r["fitted_alpha"]) == pytest.approx(float(r["analytic_alpha"]), abs=0.15)


SIM = ["simulate", "--snr-db", "15", "--eta", "2", "--delay", "5", "--frames", "1000000",
       "--seed", "4", "--format", "json"]


def test_simulate_is_byte_identical(capsys):
    _, a, _ = run(SIM, capsys)
    _, b, _ = run(SIM, capsys)
    assert a == b
    doc = json.loads(a)
    s = doc["summary"]
    assert s["seed"] == 4 and doc["config"]["seed"] == 4
    assert s["fitted_theta"] == pytest.approx(s["predicted_theta"], rel=0.1)
    assert s["stable"]


def test_simulate_static_channel(capsys):
    code, out, _ = run(["simulate", "--model", "static", "--snr-db", "15", "--rs", "1",
                        "--thresholds", "0,1,5", "--frames", "20000", "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert all(r[1] == 0.0 for r in doc["rows"])


def test_simulate_bits(capsys):
    _, nats, _ = run(SIM, capsys)
    _, bits, _ = run(SIM + ["--units", "bits", "--rs", str(json.loads(nats)["config"]["rs"] / 0.6931471805599453)], capsys)
    a, b = json.loads(nats), json.loads(bits)
    assert b["summary"]["fitted_theta"] == pytest.approx(a["summary"]["fitted_theta"] * 0.6931471805599453, rel=1e-9)
    assert b["rows"][0][0] == pytest.approx(a["rows"][0][0] / 0.6931471805599453, rel=1e-9)


def test_reproduce_figures(tmp_path, capsys):
    for fig in (2, 4, 5, 6, 7, 8):
        out = tmp_path / f"f{fig}.csv"
        assert main(["reproduce-figure", str(fig), "--out", str(out)]) == 0
        side = json.loads((tmp_path / f"f{fig}.csv.json").read_text())
        assert side["figure"] == fig and side["parameters"]
    _, rows = read_csv((tmp_path / "f6.csv").read_text())
    assert list(rows[0]) == ["tau_n", "closed_form", "upper_bound", "d_infinite"]
    for r in rows:
        assert float(r["upper_bound"]) >= float(r["closed_form"])
    _, rows = read_csv((tmp_path / "f2.csv").read_text())
    assert all(float(r["d_zero"]) >= float(r["d_infinite"]) for r in rows)
    side = json.loads((tmp_path / "f7.csv.json").read_text())
    assert side["parameters"]["tau_n"] == ["zero", 1.0, 2.0, 4.0]


def test_errors_are_machine_readable(capsys):
    code, _, err = run(["reproduce-figure", "9"], capsys)
    assert code != 0
    rec = json.loads(err)
    assert rec["schema"] == "dd/1" and "figure" in rec["error"]["message"]
    code, _, err = run(["curve", "--mt", "0"], capsys)
    assert code != 0 and json.loads(err)["error"]["type"] == "ValueError"
    with pytest.raises(SystemExit) as exc:
        main(["curve", "--snr-db", "1:2"])
    assert exc.value.code == 2
    assert json.loads(capsys.readouterr().err)["error"]["type"] == "usage"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "distdelay", "curve", "--snr-db", "15",
                          "--delay", "inf", "--format", "json"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["schema"] == "dd/1"
