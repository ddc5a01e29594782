import json

import pytest

from sfwm_fiber import io
from sfwm_fiber.cli import main
from sfwm_fiber.dispersion import FiberSpec
from sfwm_fiber.fitting import synthesize_peaks
from sfwm_fiber.phasematching import TABLE1, conjugate_nm

SMALL = """
[fiber]
r_um = 1.6
na = 0.27
delta = 4.2e-4

[pump]
w_lp01 = 0.5
w_lp11 = 0.3
w_lp21 = 0.2

[phasematch]
pump_min_nm = 685
pump_max_nm = 700
n_pump = 4
n_grid = 400
processes = A,C,G

[spectrum]
processes = A,B
n_points = 60
n_nodes = 33
n_conj = 24
"""


@pytest.fixture
def small(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL)
    return path


def rows(path):
    return io.read_csv(path)[1]


def test_modes_fitted(tmp_path, small):
    assert main(["modes", "--config", str(small), "--out", str(tmp_path / "o")]) == 0
    names = [r[0] for r in rows(tmp_path / "o" / "modes.csv")]
    assert {"LP01", "LP11", "LP21"} <= set(names)


def test_modes_tiny_v(tmp_path):
    cfg = tmp_path / "thin.ini"
    cfg.write_text("[fiber]\nna = 0.05\n")
    assert main(["modes", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert [r[0] for r in rows(tmp_path / "o" / "modes.csv")] == ["LP01"]


def test_malformed_config(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[fiber]\nr_um = 1.6\nna = zero point two\n")
    assert main(["modes", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "bad.ini:3" in err and "na" in err


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["warp"])
    assert exc.value.code == 2


def test_phasematch_outputs_and_determinism(tmp_path, small):
    for k in range(2):
        assert main(["phasematch", "--config", str(small), "--out", str(tmp_path / f"o{k}"),
                     "--format", "svg", "--format", "json"]) == 0
    for name in ("contours.csv", "contours.json", "contours.svg"):
        assert (tmp_path / "o0" / name).read_bytes() == (tmp_path / "o1" / name).read_bytes()
    text = (tmp_path / "o0" / "contours.csv").read_text()
    assert "# r_um = 1.6" in text
    header, data = io.read_csv(tmp_path / "o0" / "contours.csv")
    assert header == ["process", "lambda_p_nm", "lambda_s_nm", "lambda_i_nm", "residual_rad_m"]
    assert {r[0] for r in data} == {"A", "C", "G"}
    payload = json.loads((tmp_path / "o0" / "contours.json").read_text())
    assert payload["config"]["fiber"]["na"] == "0.27"


def test_spectrum_outputs(tmp_path, small):
    out = tmp_path / "o"
    assert main(["spectrum", "--config", str(small), "--out", str(out), "--jobs", "2"]) == 0
    header, data = io.read_csv(out / "spectrum_signal.csv")
    assert header == ["wavelength_nm", "process", "intensity"]
    assert {r[1] for r in data} == {"A", "B", "total"}
    _, peaks = io.read_csv(out / "spectrum_peaks.csv")
    assert {(r[0], r[1]) for r in peaks} == {("signal", "A"), ("signal", "B"), ("idler", "A"), ("idler", "B")}
    vals, meta = io.read_jsa(out / "jsa_A.bin")
    assert vals.shape == (512, 512) and meta["process"] == "A"


def _peaks_file(path, peaks):
    io.write_csv(path, ["label", "lambda_i_nm", "lambda_s_nm", "height"],
                 [(p.label, p.lambda_i, p.lambda_s, 1.0) for p in peaks])
    return path


def test_fit_success(tmp_path):
    peaks = synthesize_peaks(FiberSpec(1.6, 0.27, 4.2e-4), [TABLE1[k] for k in "ABGC"])
    pf = _peaks_file(tmp_path / "peaks.csv", peaks)
    cfg = tmp_path / "fit.ini"
    cfg.write_text("[fit]\ntolerance_nm = 0\n")
    assert main(["fit", str(pf), "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    report = json.loads((tmp_path / "o" / "fit.json").read_text())
    assert report["best"]["assignment"] == {"I": "A", "II": "B", "III": "G", "IV": "C"}
    assert abs(report["best"]["r_um"] - 1.6) < 0.02
    assert report["n_hypotheses"] == 840 and len(report["ranking"]) == 840
    header, data = io.read_csv(tmp_path / "o" / "fit_contours.csv")
    assert header[-2:] == ["r_um", "na"] and len(data) > 100


def test_fit_no_fit_exit(tmp_path, capsys):
    junk = [(lab, float(conjugate_nm(692.0, s)), s) for lab, s in zip(("I", "II", "III", "IV"), (700, 705, 710, 715))]
    pf = tmp_path / "junk.csv"
    io.write_csv(pf, ["label", "lambda_i_nm", "lambda_s_nm"], junk)
    assert main(["fit", str(pf), "--out", str(tmp_path / "o")]) == 3
    assert "no fit" in capsys.readouterr().err
    report = json.loads((tmp_path / "o" / "fit.json").read_text())
    assert report["converged"] is False and report["surviving"] == []


@pytest.mark.parametrize("content, needle", [
    ("label,lambda_i_nm\nI,600\n", "missing column"),
    ("label,lambda_i_nm,lambda_s_nm\nI,600,790\n", "expected four peaks"),
    ("label,lambda_i_nm,lambda_s_nm\nI,600,abc\nII,1,2\nIII,1,2\nIV,1,2\n", "data row 2"),
    ("label,lambda_i_nm,lambda_s_nm\nI,600,790\nII,610,780\nIII,620,770\nIV,630,700\n", "implies a pump"),
])
def test_fit_bad_peaks(tmp_path, capsys, content, needle):
    pf = tmp_path / "p.csv"
    pf.write_text(content)
    assert main(["fit", str(pf), "--out", str(tmp_path / "o")]) == 2
    assert needle in capsys.readouterr().err
