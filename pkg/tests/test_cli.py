"""Config parsing, run dumps, verify round trip, and exit codes."""

import numpy as np
import pytest

from hitchinlab.cli_runner import (
    build_solve_config,
    parse_config,
    run,
    serialize_config,
)
from hitchinlab.complex_field import ConfigurationError, read_field_csv

CFG = """\
# demo run
n = 2
R = 0.5
grid = 20
mode = full
tol = 1e-08
max_iter = 50
q2 = 0.29999999999999999,0
"""


def write_cfg(tmp_path, text=CFG, name="cfg.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_and_build():
    cfg = build_solve_config(parse_config(CFG))
    assert cfg.n == 2 and cfg.N == 20 and cfg.mode == "full"
    assert cfg.differentials.polys == ((0.3 + 0j,),)


def test_config_round_trip_is_byte_identical():
    text = serialize_config(build_solve_config(parse_config(CFG)))
    again = serialize_config(build_solve_config(parse_config(text)))
    assert text == again
    # and the canonical form preserves the values bit-exactly
    cfg = build_solve_config(parse_config(text))
    assert cfg.differentials.polys[0][0] == 0.29999999999999999


def test_parse_rejects_malformed():
    with pytest.raises(ConfigurationError):
        parse_config("n 2\n")
    with pytest.raises(ConfigurationError):
        parse_config("n = 2\nn = 3\n")
    with pytest.raises(ConfigurationError):
        build_solve_config(parse_config("R = 0.5\n"))        # n missing
    with pytest.raises(ConfigurationError):
        build_solve_config(parse_config("n = 2\nq5 = 1,0\n"))  # q5 needs n>=5
    with pytest.raises(ConfigurationError):
        build_solve_config(parse_config("n = 2\nq2 = 1\n"))  # not re,im


def test_solve_dump_verify_cycle(tmp_path):
    cfgfile = write_cfg(tmp_path)
    outdir = tmp_path / "run"
    assert run(["solve", "--config", str(cfgfile), "--output", str(outdir)]) == 0
    for fname in ("config.txt", "report.txt", "energy.csv", "hopf.csv",
                  "v1.csv", "S_00.csv", "S_01.csv", "S_11.csv"):
        assert (outdir / fname).exists(), fname
    report = (outdir / "report.txt").read_text()
    assert "termination = converged" in report
    assert "[checks]" in report

    # dumped S round-trips through the text format bit-exactly
    name, S01, meta = read_field_csv(outdir / "S_01.csv")
    assert name == "S_01" and meta["N"] == 20

    assert run(["verify", "--input", str(outdir)]) == 0


def test_solve_exit_codes(tmp_path):
    # non-convergence -> 3
    cfgfile = write_cfg(tmp_path, CFG.replace("max_iter = 50", "max_iter = 1")
                                     .replace("tol = 1e-08", "tol = 1e-14"))
    out = tmp_path / "r2"
    code = run(["solve", "--config", str(cfgfile), "--output", str(out), "--max-iter", "1"])
    assert code == 3
    assert "termination = max-iterations" in (out / "report.txt").read_text()
    # verify on a non-converged dump -> 3 as well
    assert run(["verify", "--input", str(out)]) == 3


def test_usage_errors_return_2(tmp_path):
    assert run(["solve", "--config", str(tmp_path / "missing.txt")]) == 2
    assert run(["frobnicate"]) == 2
    assert run([]) == 2
    bad = write_cfg(tmp_path, "n = 2\nwhat = 1\n", name="bad.txt")
    assert run(["solve", "--config", str(bad)]) == 2


def test_help_returns_0(capsys):
    assert run(["--help"]) == 0
    assert "solve" in capsys.readouterr().out


def test_baseline_subcommand(capsys):
    assert run(["baseline", "--n", "3", "--grid", "24"]) == 0
    out = capsys.readouterr().out
    assert "baseline-residual" in out and "FAIL" not in out


def test_identities_subcommand(capsys):
    assert run(["identities", "--n-max", "5", "--samples", "100"]) == 0
    out = capsys.readouterr().out
    assert "sl2-brackets" in out and "amgm-chain" in out


def test_cli_overrides_take_effect(tmp_path):
    cfgfile = write_cfg(tmp_path)
    out = tmp_path / "r3"
    assert run(["solve", "--config", str(cfgfile), "--tol", "1e-6",
                "--output", str(out)]) == 0
    assert "tol = 9.9999999999999995e-07" in (out / "config.txt").read_text()
