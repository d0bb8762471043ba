import subprocess
import sys

from fkdroplet.cli import main


def run_cli(args):
    return main(args)


def write_config(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_missing_beta_key_named(tmp_path, capsys):
    cfg = write_config(tmp_path, "q = 2\nseed = 1\nsamples = 100\n")
    rc = run_cli(["oracle", "--config", cfg, "--out-dir", str(tmp_path / "o")])
    captured = capsys.readouterr()
    assert rc == 2
    assert "beta" in captured.err


def test_unknown_key_named(tmp_path, capsys):
    cfg = write_config(tmp_path, "p = 0.5\nq = 2\nwibble = 3\n")
    rc = run_cli(["oracle", "--config", cfg, "--out-dir", str(tmp_path / "o")])
    captured = capsys.readouterr()
    assert rc == 2
    assert "wibble" in captured.err


def test_oracle_writes_report(tmp_path):
    cfg = write_config(tmp_path, "p = 0.5\nq = 2\nseed = 4\nsamples = 30000\n")
    out = tmp_path / "oracle"
    rc = run_cli(["oracle", "--config", cfg, "--out-dir", str(out),
                  "--no-figures"])
    assert rc == 0
    report = (out / "oracle_report.csv").read_text().strip().splitlines()
    assert report[0].startswith("sampler,")
    assert len(report) == 3
    assert (out / "manifest.txt").exists()


def test_oracle_deterministic_bytes(tmp_path):
    cfg = write_config(tmp_path, "p = 0.4\nq = 1.5\nseed = 9\nsamples = 20000\n")
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run_cli(["oracle", "--config", cfg, "--out-dir", str(out1),
                    "--no-figures"]) == 0
    assert run_cli(["oracle", "--config", cfg, "--out-dir", str(out2),
                    "--no-figures"]) == 0
    assert (out1 / "oracle_report.csv").read_bytes() == \
        (out2 / "oracle_report.csv").read_bytes()


def test_sample_outputs(tmp_path):
    cfg = write_config(
        tmp_path,
        "p = 0.3\nq = 1\nseed = 2\nn_box = 5\nsweeps = 400\n"
        "distances = 1 2\nradii = 1 2 3\n")
    out = tmp_path / "s"
    rc = run_cli(["sample", "--config", cfg, "--out-dir", str(out)])
    assert rc == 0
    for name in ("connectivity.csv", "decay.csv", "mixing.csv",
                 "connectivity.png", "decay.png", "manifest.txt"):
        assert (out / name).exists(), name


def test_wulff_outputs(tmp_path):
    cfg = write_config(
        tmp_path,
        "p = 0.35\nq = 1\nseed = 3\nn_box = 8\nsweeps = 600\n"
        "distances = 2 3 4\ndirections = 1,0 0,1 1,1\ngrid = 180\n")
    out = tmp_path / "w"
    rc = run_cli(["wulff", "--config", cfg, "--out-dir", str(out)])
    assert rc == 0
    for name in ("xi_directions.csv", "wulff.csv", "shape_polygon.csv",
                 "wulff_shape.png", "manifest.txt"):
        assert (out / name).exists(), name
    manifest = (out / "manifest.txt").read_text()
    assert "diag.q0=" in manifest and "diag.c0=" in manifest


def test_condition_outputs(tmp_path):
    cfg = write_config(
        tmp_path,
        "p = 0.45\nq = 1\nseed = 5\nn = 2\nn_box = 4\nsweeps = 60\n"
        "burnin = 6\nthin = 2\nchains = 2\ngrid = 180\n")
    out = tmp_path / "c"
    rc = run_cli(["condition", "--config", cfg, "--out-dir", str(out),
                  "--no-figures"])
    assert rc == 0
    regen = (out / "regen.csv").read_text().splitlines()
    assert regen[0].startswith("chain,sweep,n,area,exc")
    assert len(regen) > 10
    assert (out / "tails_theta.csv").exists()


def test_surgery_check_outputs(tmp_path):
    cfg = write_config(tmp_path, "p = 0.5\nq = 2\nseed = 6\nrepeats = 4000\n")
    out = tmp_path / "sc"
    rc = run_cli(["surgery-check", "--config", cfg, "--out-dir", str(out),
                  "--no-figures"])
    assert rc == 0
    text = (out / "surgery_report.csv").read_text()
    assert "sector_two_step_chi2_p" in text
    assert "shift_measure_ratio" in text


def test_geom_test_outputs(tmp_path):
    cfg = write_config(tmp_path, "seed = 8\ntrials = 2000\n")
    out = tmp_path / "g"
    rc = run_cli(["geom-test", "--config", cfg, "--out-dir", str(out),
                  "--no-figures"])
    assert rc == 0
    lines = (out / "geom_report.csv").read_text().strip().splitlines()
    assert all(line.endswith(",1") for line in lines[1:])


def test_console_entrypoint():
    proc = subprocess.run([sys.executable, "-m", "fkdroplet", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "oracle" in proc.stdout
