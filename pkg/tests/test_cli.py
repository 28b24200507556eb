import csv
import json

import numpy as np
import pytest

from fockskin.cli import main


def run(tmp_path, *args, name="out.csv"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_spectra_pbc(tmp_path):
    code, out = run(tmp_path, "spectra", "--nu", "0", "--dim", "50", "--bc", "pbc")
    assert code == 0
    data = rows(out)
    assert len(data) == 51
    assert list(data[0]) == ["index", "re", "im"]
    z = np.array([complex(float(r["re"]), float(r["im"])) for r in data])
    assert np.min(np.abs(z - 0.1j)) < 1e-8
    manifest = json.loads((tmp_path / "out.csv.manifest.json").read_text())
    assert manifest["command"] == "spectra"
    assert manifest["parameters"]["dim"] == 50
    assert {"version", "timestamp", "sha256"} <= set(manifest)


def test_spectra_obc_rows(tmp_path):
    code, out = run(tmp_path, "spectra", "--dim", "3", "--bc", "obc")
    assert code == 0
    ims = sorted(float(r["im"]) for r in rows(out))
    np.testing.assert_allclose(ims, [-0.3, -0.2, -0.1, 0.0], atol=1e-15)


def test_determinism(tmp_path):
    _, a = run(tmp_path, "spectra", "--dim", "30", "--bc", "tbc=0.4", name="a.csv")
    _, b = run(tmp_path, "spectra", "--dim", "30", "--bc", "tbc=0.4", name="b.csv")
    assert a.read_bytes() == b.read_bytes()
    ma = json.loads((tmp_path / "a.csv.manifest.json").read_text())
    mb = json.loads((tmp_path / "b.csv.manifest.json").read_text())
    assert ma["sha256"] == mb["sha256"]


def test_json_output(tmp_path):
    code, out = run(tmp_path, "spectra", "--dim", "4", "--bc", "pbc", "--format", "json", name="s.json")
    assert code == 0
    doc = json.loads(out.read_text())
    assert set(doc) == {"manifest", "data"}
    assert len(doc["data"]) == 5 and set(doc["data"][0]) == {"index", "re", "im"}


@pytest.mark.parametrize(
    "args",
    [
        ["spectra", "--bc", "sideways"],
        ["spectra", "--dim", "0"],
        ["spectra", "--kappa", "-1"],
        ["evolve", "--initial", "bogus=1"],
        ["scaling", "--dims", "10,x"],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_2(tmp_path, args):
    code, _ = run(tmp_path, *args)
    assert code == 2


def test_numerical_failure_exits_3(tmp_path):
    # a reference energy on the spectral circle is ambiguous
    code, _ = run(tmp_path, "annihilate", "--task", "winding", "--dim", "5", "--omega-ref", "1.73026,0")
    assert code == 3


def test_winding_map(tmp_path):
    code, out = run(tmp_path, "winding-map", "--dim", "50", "--nx", "21", "--ny", "21")
    assert code == 0
    data = rows(out)
    assert len(data) == 21 * 21
    for r in data:
        if r["w"]:
            assert (int(r["w"]) == -1) == (float(r["log_abs_R"]) < 0)
    manifest = json.loads((tmp_path / "out.csv.manifest.json").read_text())
    assert manifest["violations"] == 0
    corner = data[0]
    assert int(corner["w"]) == 0


def test_evolve_columns_and_invariants(tmp_path):
    code, out = run(tmp_path, "evolve", "--initial", "sibc=0,0.05", "--t-max", "10", "--dt-out", "0.5")
    assert code == 0
    data = rows(out)
    assert list(data[0]) == ["t", "edge_avg_re", "edge_avg_im", "N", "trace_re", "trace_im", "tail_mass"]
    t = np.array([float(r["t"]) for r in data])
    N = np.array([float(r["N"]) for r in data])
    np.testing.assert_allclose(N / N[0], np.exp(-0.1 * t), rtol=1e-6)
    edge = np.array([float(r["edge_avg_re"]) for r in data])
    slope = np.polyfit(t, np.log(edge), 1)[0]
    assert slope == pytest.approx(0.05, rel=0.05)


def test_evolve_delta_edge_constant_and_frames(tmp_path):
    frames = tmp_path / "frames.csv"
    code, out = run(tmp_path, "evolve", "--initial", "delta=0", "--t-max", "2", "--dt-out", "1", "--frames", str(frames))
    assert code == 0
    assert all(float(r["edge_avg_re"]) == pytest.approx(0.2) for r in rows(out))
    dump = rows(frames)
    assert len(dump) == 3 and len(dump[0]) == 1 + 2 * 51


def test_scaling(tmp_path):
    code, out = run(tmp_path, "scaling", "--dims", "50,100")
    assert code == 0
    data = rows(out)
    assert [int(r["dim"]) for r in data] == [50, 100]
    assert all(float(r["nearest_ikappa"]) < 1e-8 for r in data)
    assert float(data[1]["radius"]) / float(data[0]["radius"]) == pytest.approx(5.1 / 2.6, rel=1e-9)


def test_annihilate_tasks(tmp_path):
    code, out = run(tmp_path, "annihilate", "--dim", "40")
    assert code == 0
    manifest = json.loads((tmp_path / "out.csv.manifest.json").read_text())
    assert manifest["max_root_mismatch"] < 1e-6
    code, out = run(tmp_path, "annihilate", "--task", "winding", "--power", "3", "--dim", "30", "--omega-ref", "0,2")
    assert code == 0 and rows(out)[0]["w"] == "-3"
    code, out = run(tmp_path, "annihilate", "--task", "coherent", "--alpha", "2,0", "--length", "60")
    assert code == 0 and len(rows(out)) == 61
    code, _ = run(tmp_path, "annihilate", "--task", "coherent", "--length", "5")
    assert code == 2


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\ndim = 4\nbc = obc\n")
    code, out = run(tmp_path, "spectra", "--config", str(cfg))
    assert code == 0 and len(rows(out)) == 5
    code, out = run(tmp_path, "spectra", "--config", str(cfg), "--dim", "2")
    assert code == 0 and len(rows(out)) == 3


def test_config_supplies_required_and_boolean_flags(tmp_path):
    cfg = tmp_path / "evolve.cfg"
    cfg.write_text("initial = delta=1\nt-max = 1\nno-cross-check = true\n")
    code, out = run(tmp_path, "evolve", "--config", str(cfg))
    assert code == 0
    manifest = json.loads((tmp_path / "out.csv.manifest.json").read_text())
    assert manifest["parameters"]["no_cross_check"] is True
    assert manifest["cross_check_error"] is None


def test_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("warp = 9\n")
    code, _ = run(tmp_path, "spectra", "--config", str(cfg))
    assert code == 2


def test_stdout_output(capsys):
    assert main(["spectra", "--dim", "2", "--bc", "obc"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "index,re,im"
