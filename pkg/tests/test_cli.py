import json
import math
import subprocess
import sys

import pytest

from isk import cli, rs
from isk.errors import ConvergenceError


def write_config(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def summary(out):
    data = json.loads((out / "summary.json").read_text())
    return data, {r["quantity"]: r for r in data["results"]}


PRESSURE = "d = 1\nN = 3\nbeta = 0\nkappa = 0\nh = 0.5\nn_samples = 4\n"


def test_pressure_free_spins(tmp_path):
    cfg = write_config(tmp_path, PRESSURE)
    assert cli.main(["pressure", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    data, res = summary(tmp_path / "o")
    assert res["mean_pressure"]["value"] == pytest.approx(math.log(2 * math.cosh(0.5)), abs=1e-12)
    assert len(data["config_hash"]) == 64
    assert (tmp_path / "o" / "detail.csv").read_text().splitlines()[0] == "sample_index,pressure"


def test_reruns_are_byte_identical(tmp_path):
    cfg = write_config(tmp_path, "d = 1\nN = 3\nkappa = 0.3\nbeta = 0.7\nh = 0.2\nn_samples = 30\n")
    outs = []
    for k, extra in enumerate([[], [], ["--workers", "2"]]):
        out = tmp_path / f"o{k}"
        assert cli.main(["pressure", "--config", cfg, "--seed", "17", "--out", str(out)] + extra) == 0
        outs.append(out)
    for name in ("detail.csv", "summary.json"):
        texts = {(o / name).read_bytes() for o in outs}
        assert len(texts) == 1
    other = tmp_path / "o3"
    cli.main(["pressure", "--config", cfg, "--seed", "18", "--out", str(other)])
    assert (other / "detail.csv").read_bytes() != (outs[0] / "detail.csv").read_bytes()


def test_dobrushin(tmp_path):
    cfg = write_config(tmp_path, "d = 2\nkernel = nn\nkappa = 0.2\n")
    assert cli.main(["dobrushin", "--config", cfg, "--out", str(tmp_path)]) == 0
    _, res = summary(tmp_path)
    assert res["inside"]["value"] is False
    assert res["kappa1"]["value"] == pytest.approx(0.125)


def test_hash_ignores_field_order_and_runtime_keys(tmp_path):
    a = cli.load_config(write_config(tmp_path, "h = 0.5\nbeta = 0.2\n", "a.cfg"), "pressure")
    b = cli.load_config(write_config(tmp_path, "beta = 0.2\n\n# comment\nh = 0.5\nworkers = 3\n",
                                     "b.cfg"), "pressure")
    c = cli.load_config(write_config(tmp_path, "beta = 0.2\nh = 0.6\n", "c.cfg"), "pressure")
    assert a.config_hash() == b.config_hash() != c.config_hash()


def test_sections_and_aliases(tmp_path):
    text = "beta = 0.2\nlambda = 0.3\n[gamma]\nbeta = 0.4\n[pressure]\nmaster_seed = 9\n"
    path = write_config(tmp_path, text)
    g = cli.load_config(path, "gamma")
    p = cli.load_config(path, "pressure")
    assert (g.beta, g.lam, g.seed) == (0.4, 0.3, 0)
    assert (p.beta, p.seed) == (0.2, 9)


def test_print_config_round_trips(tmp_path, capsys):
    cfg = write_config(tmp_path, PRESSURE)
    assert cli.main(["pressure", "--config", cfg, "--print-config"]) == 0
    printed = capsys.readouterr().out
    again = cli.load_config(write_config(tmp_path, printed, "again.cfg"), "pressure")
    assert again.config_hash() == cli.load_config(cfg, "pressure").config_hash()
    assert not (tmp_path / "isk-out").exists()


def test_output_directory_precedence(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, PRESSURE + f"out = {tmp_path / 'from_cfg'}\n")
    monkeypatch.setenv("ISK_OUT", str(tmp_path / "from_env"))
    assert cli.main(["pressure", "--config", cfg]) == 0
    assert (tmp_path / "from_env" / "summary.json").exists()
    assert cli.main(["pressure", "--config", cfg, "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "summary.json").exists()
    monkeypatch.delenv("ISK_OUT")
    assert cli.main(["pressure", "--config", cfg]) == 0
    assert (tmp_path / "from_cfg" / "summary.json").exists()


@pytest.mark.parametrize("text", ["bogus = 1\n", "beta = -1\n", "t = 2\n", "N = x\n", "[nope]\n"])
def test_validation_errors_exit_1(tmp_path, capsys, text):
    cfg = write_config(tmp_path, text)
    assert cli.main(["pressure", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "isk pressure" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_missing_config_exits_1(tmp_path):
    assert cli.main(["pressure", "--config", str(tmp_path / "absent.cfg")]) == 1


def test_non_convergence_exits_2(tmp_path, monkeypatch):
    def stuck(*a, **k):
        raise ConvergenceError("stuck", [0.1, 0.2])

    monkeypatch.setattr(rs, "fixed_point_qbar", stuck)
    cfg = cli.load_config(write_config(tmp_path, "beta = 0.3\nh = 0.4\nchain_length = 20\n"
                                                 "n_samples = 4\ngrid_step = 0.1\n"), "rs-solve")
    assert cli.run(cfg, tmp_path / "o") == 2


def test_rs_solve_plot_files(tmp_path):
    cfg = write_config(tmp_path, "beta = 0.3\nh = 0.4\nchain_length = 100\nn_samples = 20\n")
    assert cli.main(["rs-solve", "--config", cfg, "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "F-curve.dat").read_text().splitlines()
    header = [l for l in lines if l.startswith("#")]
    assert len(header) == 3 and len(lines) - len(header) == 101
    data, res = summary(tmp_path)
    assert data["config_hash"] in header[1]
    assert res["qbar_minimizer"]["value"] == pytest.approx(res["reference_qbar"]["value"], abs=2e-3)


def test_fluctuation_plot_files(tmp_path):
    cfg = write_config(tmp_path, "system = rfim\nN = 2\ngamma = 0.8\nh = 0.3\nn_samples = 2000\n"
                                 "sizes = 1, 2, 3\nbins = 25\n")
    assert cli.main(["fluctuations", "--config", cfg, "--out", str(tmp_path)]) == 0
    hist = [l.split() for l in (tmp_path / "histogram.dat").read_text().splitlines() if l[0] != "#"]
    assert len(hist) == 25 and sum(int(r[2]) for r in hist) == 2000
    scaling = [l.split() for l in (tmp_path / "variance-scaling.dat").read_text().splitlines()
               if l[0] != "#"]
    vols = [float(r[0]) for r in scaling]
    assert vols == sorted(vols) == [3.0, 5.0, 7.0]
    _, res = summary(tmp_path)
    assert res["variance_slope"]["value"] == pytest.approx(-1.0, abs=0.15)


def test_empty_plot_is_a_warning(tmp_path):
    with pytest.warns(RuntimeWarning):
        assert cli.emit_plot_data([], "qq", tmp_path, "abc") is None
    assert not list(tmp_path.iterdir())
    with pytest.raises(cli.ConfigError):
        cli.emit_plot_data([(1, 2)], "pie", tmp_path, "abc")


def test_console_entry_point(tmp_path):
    cfg = write_config(tmp_path, "d = 2\nkappa = 0.1\n")
    proc = subprocess.run([sys.executable, "-m", "isk.cli", "dobrushin", "--config", cfg,
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    _, res = summary(tmp_path / "o")
    assert res["inside"]["value"] is True


from hypothesis import given, settings, strategies as st  # noqa: E402

ENTRIES = ["beta = 0.3", "h = 0.4", "kappa = 0.05", "n_samples = 12", "seed = 5", "workers = 2"]


@settings(max_examples=30, deadline=None)
@given(st.permutations(ENTRIES))
def test_hash_is_order_invariant(lines):
    text = "\n".join(lines) + "\n"
    cfg = cli.ExperimentConfig(subcommand="pressure", **cli.parse_config_text(text, "pressure"))
    ref = cli.ExperimentConfig(subcommand="pressure",
                               **cli.parse_config_text("\n".join(ENTRIES), "pressure"))
    assert cfg.config_hash() == ref.config_hash()
