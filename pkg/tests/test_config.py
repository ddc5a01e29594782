import pytest

from sfwm_fiber.config import ConfigError, RunConfig, load_config, parse_config
from sfwm_fiber.dispersion import ModeId


def test_defaults():
    cfg = parse_config("")
    assert cfg.bands.idler == (584.0, 676.0) and cfg.bands.signal == (768.0, 849.0)
    assert cfg.pump.center == 692.0 and cfg.pump.fwhm == 2.0
    assert cfg.fiber.length == 0.12
    assert cfg == RunConfig()


def test_full_parse():
    cfg = parse_config(
        "[fiber]\nr_um = 1.6\nna = 0.27\ndelta = 4.2e-4\n"
        "[pump]\nw_lp01 = 0.5\nw_lp11 = 0.3\nw_lp21 = 0.2  # inline comment\n"
        "[spectrum]\nprocesses = A, B, G, C\n"
    )
    assert cfg.fiber.delta == 4.2e-4
    assert cfg.pump.fraction(ModeId(1, 1)) == 0.3
    assert cfg.spectrum.processes == ("A", "B", "G", "C")


@pytest.mark.parametrize(
    "text, needle",
    [
        ("[fiber]\nr_um = 1.6\nna = abc\n", "<config>:3: [fiber] na"),
        ("[fiber]\nr_nm = 1600\n", "<config>:2: unknown key 'r_nm'"),
        ("r_um = 1\n", "<config>:1: expected a [section]"),
        ("[fibre]\nr_um = 1\n", "unknown section [fibre]"),
        ("[pump]\nw_lp01 = 0.5\nw_lp11 = 0.2\n", "<config>:2: [pump] w_lp01: pump fractions sum"),
        ("[bands]\nidler_min_nm = 700\n", "[bands] idler_max_nm: must exceed"),
        ("[fiber]\nna = 1.5\n", "<config>:2: [fiber] na: must lie"),
        ("[fiber]\nr_um = 1\nr_um = 2\n", "<config>:3: duplicate key 'r_um'"),
        ("[spectrum]\nprocesses = A,Q\n", "unknown process label(s) Q"),
        ("[fiber]\nmaterial = glass\n", "unknown material"),
        ("[fit]\nn_delta = 1.5\n", "[fit] n_delta = '1.5' is not a valid int"),
    ],
)
def test_diagnostics(text, needle):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert needle in str(err.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.ini")


def test_pump_table(tmp_path):
    (tmp_path / "pump.csv").write_text("wavelength_nm,intensity\n690,0\n692,1\n694,0\n")
    (tmp_path / "run.ini").write_text("[pump]\ntable_csv = pump.csv\n")
    cfg = load_config(tmp_path / "run.ini")
    assert cfg.pump.table == ((690.0, 692.0, 694.0), (0.0, 1.0, 0.0))
    assert cfg.resolved()["pump"]["table_csv"] == "pump.csv"


def test_resolved_round_trip():
    cfg = parse_config("[fiber]\nr_um = 1.9\n[pump]\nw_lp01 = 0.25\nw_lp11 = 0.75\n")
    text = "\n".join(cfg.header_lines())
    again = parse_config(text)
    assert again == cfg
    assert "dir" not in text
