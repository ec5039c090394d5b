import csv
import subprocess
import sys

import numpy as np
import pytest

from rismimo import __version__
from rismimo.channel import save_channel_csv
from rismimo.cli import ConfigError, build_config, main, parse_grid

from oracles import PUBLISHED_MAPPING, circ


def read(path):
    lines = path.read_text().splitlines()
    assert lines[-1].startswith("# seed=")
    rows = list(csv.reader(lines[:-1]))
    return rows[0], rows[1:], lines[-1]


def run(tmp_path, *args, name="out.csv"):
    out = tmp_path / name
    code = main(list(args) + ["--out", str(out)])
    return code, out


def test_parse_grid():
    assert parse_grid("0:24:2") == tuple(float(x) for x in range(0, 25, 2))
    assert len(parse_grid("0:24:2")) == 13
    assert parse_grid("0, 10, inf") == (0.0, 10.0, float("inf"))
    with pytest.raises(ConfigError):
        parse_grid("0:1:0")


def test_config_validation():
    with pytest.raises(ConfigError):
        build_config({"snr_db": "10,5"})
    with pytest.raises(ConfigError):
        build_config({"bits": "9999"})
    with pytest.raises(ConfigError):
        build_config({"nonsense": "1"})
    with pytest.raises(ConfigError):
        build_config({"seed": "abc"})
    assert build_config({"q": "none"}).q is None


def test_ber_sweep_rows_and_footer(tmp_path):
    code, out = run(tmp_path, "ber-sweep", "--snr-db", "0,10,inf", "--bits", "30720", "--seed", "5")
    assert code == 0
    header, rows, footer = read(out)
    assert header == [
        "snr_rx1_db", "ber_stream1", "ber_stream2", "ber_total",
        "ber_theory1", "ber_theory2", "ber_theory_total", "bits",
    ]
    assert len(rows) == 3
    assert footer == f"# seed=5 version={__version__}"
    inf_row = [float(x) for x in rows[-1]]
    assert inf_row[0] == float("inf")
    assert inf_row[1:7] == [0.0] * 6
    assert int(rows[0][-1]) == 30720
    low = [float(x) for x in rows[0]]
    assert 0 < low[4] < 0.5 and low[1] > 0


def test_ber_sweep_is_deterministic(tmp_path):
    args = ["ber-sweep", "--snr-db", "0:8:4", "--bits", "10000", "--seed", "3"]
    _, a = run(tmp_path, *args, name="a.csv")
    _, b = run(tmp_path, *args, name="b.csv")
    assert a.read_bytes() == b.read_bytes()
    _, c = run(tmp_path, *args[:-1], "4", name="c.csv")
    assert a.read_bytes() != c.read_bytes()


def test_config_file_with_override(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# sweep settings\nseed = 9\nsnr_db = 0,20\nbits = 10000\n")
    code, out = run(tmp_path, "ber-sweep", "--config", str(conf), "--snr-db", "5")
    assert code == 0
    _, rows, footer = read(out)
    assert [r[0] for r in rows] == ["5"]
    assert footer.startswith("# seed=9 ")


def test_disc_sweep(tmp_path):
    code, out = run(
        tmp_path, "disc-sweep", "--snr-db", "10", "--bits", "10000",
        "--set", "qs=40,10", "--set", "amp_qs=2,8,40",
        name="disc.csv",
    )
    assert code == 0
    header, rows, _ = read(out)
    assert header == ["q", "a1_amplitude"]
    amp = {int(r[0]): float(r[1]) for r in rows}
    assert amp[8] == pytest.approx(0.9745, abs=5e-4)
    assert amp[2] == pytest.approx(2 / np.pi, abs=1e-9)
    assert amp[2] < amp[8] < amp[40] < 1
    header, rows, _ = read(tmp_path / "disc_ber.csv")
    assert header[0] == "q" and header[1] == "snr_rx1_db"
    assert [r[0] for r in rows] == ["40", "10"]


def test_solve_map_ideal(tmp_path):
    code, out = run(tmp_path, "solve-map")
    assert code == 0
    header, rows, _ = read(out)
    assert header[-2:] == ["amp_residual", "phase_residual"]
    assert len(rows) == 16
    for r, (bits, amp, phase, _t0, _dp) in zip(rows, PUBLISHED_MAPPING):
        assert r[1] == bits
        assert abs(float(r[2]) - amp) < 1e-2
        assert circ(float(r[3]), phase) < 1e-2
        assert float(r[6]) < 1e-4 and float(r[7]) < 1e-4


def test_solve_map_triangular(tmp_path):
    code, out = run(tmp_path, "solve-map", "--set", "profile=triangular")
    assert code == 0
    _, rows, _ = read(out)
    outer = [float(r[2]) for r in rows if r[1] in ("0000", "0010", "1000", "1010")]
    assert outer == pytest.approx([0.85] * 4, abs=1e-6)
    assert max(float(r[6]) for r in rows) < 1e-4


def test_beam_scan(tmp_path):
    code, out = run(tmp_path, "beam-scan")
    assert code == 0
    header, rows, _ = read(out)
    assert header == ["cells", "y_beamformed", "y_random_mean", "gain_vs_one_cell"]
    by = {int(r[0]): [float(x) for x in r[1:]] for r in rows}
    assert sorted(by) == [1, 16, 64, 256]
    assert by[1][2] == 1.0
    assert by[256][0] / by[64][0] == pytest.approx(4.0, rel=0.01)
    for cells in (16, 64, 256):
        assert by[cells][1] < by[cells][0]


def test_predict_identity(tmp_path):
    ch = tmp_path / "h.csv"
    save_channel_csv(np.eye(2), ch)
    code, out = run(tmp_path, "predict", "--snr-db", "0,10", "--set", f"channel={ch}")
    assert code == 0
    _, rows, _ = read(out)
    for r in rows:
        assert float(r[1]) == pytest.approx(float(r[0]), abs=1e-9)
        assert float(r[5]) <= float(r[3])


def test_dump_constellation(tmp_path):
    code, out = run(tmp_path, "dump-constellation", "--snr-db", "30", "--bits", "10000")
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "stream,slot,re,im"
    assert len(lines) == 2 + 2 * 3840
    assert lines[-1].startswith("# seed=0 ")


def test_dump_constellation_from_payload(tmp_path):
    payload = tmp_path / "p.bin"
    payload.write_bytes(b"hello world")
    code, out = run(
        tmp_path, "dump-constellation", "--snr-db", "inf", "--bits", "10000",
        "--set", f"payload={payload}",
    )
    assert code == 0


@pytest.mark.parametrize(
    "args",
    [
        ["ber-sweep", "--snr-db", "10,5"],
        ["ber-sweep", "--bits", "100"],
        ["ber-sweep", "--q", "1"],
        ["predict", "--set", "colour=red"],
        ["predict", "--set", "oops"],
        ["predict", "--config", "/nonexistent/run.conf"],
        ["predict", "--set", "channel=/nonexistent/h.csv"],
    ],
)
def test_config_errors_exit_2(tmp_path, args, capsys):
    code, _ = run(tmp_path, *args)
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_unwritable_output_exit_2(tmp_path):
    assert main(["predict", "--out", str(tmp_path / "missing" / "x.csv")]) == 2


def test_singular_channel_exit_3(tmp_path, capsys):
    ch = tmp_path / "h.csv"
    save_channel_csv(np.array([[1.0, 2.0], [0.5, 1.0]]), ch)
    code, _ = run(tmp_path, "predict", "--set", f"channel={ch}")
    assert code == 3
    assert "numerical error" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    out = tmp_path / "p.csv"
    res = subprocess.run(
        [sys.executable, "-m", "rismimo.cli", "predict", "--snr-db", "10", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert res.returncode == 0
    assert res.stdout.strip() == str(out)
    assert out.exists()
