import math
import textwrap

import numpy as np
import pytest

from nlacoustics.cli import main
from nlacoustics.config import ConfigError, parse_config
from nlacoustics.fractional import frac_norms
from nlacoustics.io import read_trajectory_csv

SMALL = """\
domain: {dim: 2}
bc_family: DirDir
discretization: {cutoff: 4, dt: 1.0e-2, T: 0.5}
initial:
  - {component: 0, k: [1, 1], amplitude: 0.2}
forcing:
  modes:
    - {component: 1, k: [2, 1], amplitude: 0.1, envelope: {kind: sin, omega: 2.0}}
probes: {samples: 3, holder_samples: 30, seed: 1}
output: {plots: false}
"""


def _write(tmp_path, text, name="c.yaml"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return str(p)


def test_defaults_and_pi_extents():
    c = parse_config("domain: {dim: 2, extents: [pi, 2*pi]}\n")
    assert c.extents == (math.pi, 2 * math.pi) and c.bc_family == "DirDir" and c.sigma == 1.0
    assert parse_config("bc_family: 2c\nsigma: 0.75\n").bc_family == "NeuDir"


@pytest.mark.parametrize("text,line,match", [
    ("domain: {dim: 2}\nbc_family: DirDir\nsigma: 0.3\n", 3, r"\[0.5, 1"),
    ("domain: {dim: 2}\nbc_family: NeuDir\nsigma: 0.5\n", 3, "sigma"),
    ("domain: {dim: 2}\nbc_family: NeuHodge\n", 2, "three dimensions"),
    ("domain: {dim: 2}\nfoo: 1\n", 2, "unknown key"),
    ("discretization:\n  cutoff: 4\n  dt: 0.3\n  T: 1.0\n", 3, "integer"),
    ("initial:\n  - {component: 0, k: [9, 1], amplitude: 1}\n", 2, "not in the basis"),
    ("coefficients:\n  zeta: 1\n  beta: 0\n", 3, "nonzero"),
    ("boundary:\n  - {component: 0, axis: 1, side: 0, k: [0], amplitude: 1}\n", 2, ">= 1"),
    ("domain: {dim: 3}\nbc_family: NeuHodge\nboundary:\n"
     "  - {component: 1, axis: 0, side: 0, k: [1, 1], amplitude: 1}\n", 4, "free-slip"),
    ("domain: [1, 2\n", None, "malformed"),
])
def test_config_errors(text, line, match):
    with pytest.raises(ConfigError, match=match) as exc:
        parse_config(text)
    if line is not None:
        assert exc.value.line == line


def test_alpha_one_warns():
    with pytest.warns(UserWarning, match="alpha equals 1"):
        parse_config("coefficients: {alpha: 1.0}\n")


def test_bad_sigma_exit_code(tmp_path, capsys):
    p = _write(tmp_path, "domain: {dim: 2}\nbc_family: DirDir\nsigma: 0.3\n")
    assert main(["simulate", "--config", p, "--out", str(tmp_path / "o")]) == 2
    assert "admissible range" in capsys.readouterr().err


def test_simulate_csv_and_determinism(tmp_path):
    p = _write(tmp_path, SMALL)
    for d in ("a", "b"):
        assert main(["simulate", "--config", p, "--out", str(tmp_path / d)]) == 0
    a = (tmp_path / "a" / "trajectory.csv").read_bytes()
    assert a == (tmp_path / "b" / "trajectory.csv").read_bytes()
    assert (tmp_path / "a" / "certificate.txt").read_bytes() == \
        (tmp_path / "b" / "certificate.txt").read_bytes()
    header, rows = read_trajectory_csv(tmp_path / "a" / "trajectory.csv")
    assert header[0] == "time" and header[1] == "p[1,1]"
    cfg = parse_config(SMALL)
    sp = cfg.space()
    coef = rows[:, 1:1 + sp.n_dof]
    for name, s in (("norm_H", 0.0), ("norm_W", 0.5)):
        got = rows[:, header.index(name)]
        assert np.abs(got - frac_norms(sp, coef, s)).max() <= 1e-10
    assert b'"verdict": "PASS"' in (tmp_path / "a" / "certificate.txt").read_bytes()


def test_seed_override_changes_probe(tmp_path):
    p = _write(tmp_path, SMALL)
    main(["simulate", "--config", p, "--out", str(tmp_path / "a")])
    main(["simulate", "--config", p, "--out", str(tmp_path / "b"), "--seed", "5"])
    assert (tmp_path / "a" / "certificate.txt").read_text() != \
        (tmp_path / "b" / "certificate.txt").read_text()


def test_certificate_fail_and_divergence_codes(tmp_path):
    big = SMALL.replace("amplitude: 0.2", "amplitude: 2.5").replace("T: 0.5", "T: 1.0")
    big = big.replace("- {component: 0, k: [1, 1], amplitude: 2.5}",
                      "- {component: 0, k: [1, 1], amplitude: 2.5}\n"
                      "  - {component: 1, k: [2, 1], amplitude: 2.5}")
    out = tmp_path / "fail"
    assert main(["simulate", "--config", _write(tmp_path, big, "f.yaml"), "--out", str(out)]) == 3
    assert (out / "trajectory.csv").exists() and (out / "certificate.txt").exists()
    huge = big.replace("amplitude: 2.5", "amplitude: 30")
    assert main(["simulate", "--config", _write(tmp_path, huge, "h.yaml"),
                 "--out", str(tmp_path / "div")]) == 5


def test_verify_and_negative_control(tmp_path, capsys):
    for fam, dim in (("DirDir", 2), ("NeuDir", 2), ("NeuHodge", 3), ("DirHodge", 3)):
        p = _write(tmp_path, f"domain: {{dim: {dim}}}\nbc_family: {fam}\n"
                             "discretization: {cutoff: 3}\nverify: {samples: 10}\n")
        assert main(["verify", "--config", p, "--out", str(tmp_path / fam)]) == 0
    p = _write(tmp_path, "discretization: {cutoff: 4, dealias: false}\n")
    assert main(["verify", "--config", p, "--out", str(tmp_path / "broken")]) == 4
    assert "bilinear_oracle" in capsys.readouterr().err
    text = (tmp_path / "broken" / "properties.csv").read_text()
    assert "bilinear_oracle,FAIL" in text


def test_lift_zero_and_nonzero(tmp_path):
    p = _write(tmp_path, "discretization: {cutoff: 4}\n")
    assert main(["lift", "--config", p, "--out", str(tmp_path / "z")]) == 0
    rows = (tmp_path / "z" / "lift.csv").read_text().splitlines()[1:]
    assert all(r.endswith(",0.0,0.0") for r in rows)
    p = _write(tmp_path, "discretization: {cutoff: 4}\nboundary:\n"
                         "  - {component: 0, axis: 1, side: 0, k: [1], amplitude: 1.0}\n", "n.yaml")
    assert main(["lift", "--config", p, "--out", str(tmp_path / "n")]) == 0


def test_convergence_command(tmp_path):
    p = _write(tmp_path, """\
        domain: {dim: 2}
        bc_family: DirDir
        discretization: {cutoff: 3, dt: 1.0e-2, T: 0.2}
        forcing: {manufactured: modes}
        convergence: {axis: dt, levels: [0.04, 0.02, 0.01]}
        """)
    assert main(["convergence", "--config", p, "--out", str(tmp_path)]) == 0
    text = (tmp_path / "rates_dt.csv").read_text()
    rate = float(text.splitlines()[-1].split(",")[1])
    assert abs(rate - 2.0) < 0.2


def test_sweep_threads(tmp_path):
    p = _write(tmp_path, SMALL + "sweep:\n  - {name: s1, sigma: 1.0}\n  - {name: s2, sigma: 0.5}\n"
                                 "  - {name: bad, sigma: 0.2}\n")
    code = main(["sweep", "--config", p, "--out", str(tmp_path / "sw"), "--threads", "2"])
    assert code == 2
    summary = (tmp_path / "sw" / "sweep.csv").read_text()
    assert "s1,0" in summary and "s2,0" in summary and "bad,2" in summary
    assert (tmp_path / "sw" / "s1" / "trajectory.csv").exists()
