import json
import math

import numpy as np
import pytest

from spallstrip import experiments as ex
from spallstrip.continuation import EvolveOptions, TimePath, evolve
from spallstrip.errors import DomainError
from spallstrip.manifold import seed_initial


def test_report_verdict(tmp_path):
    rep = ex.ExperimentReport("demo")
    assert rep.verdict == "fail"  # no checks yet
    rep.check("a", True)
    rep.metric("x", 1.5)
    rep.metric("z", 1 + 2j)
    assert rep.verdict == "pass"
    rep.check("b", False)
    assert rep.verdict == "fail"
    path = rep.write(tmp_path)
    data = json.loads(path.read_text())
    assert data["verdict"] == "fail"
    assert data["metrics"] == {"x": 1.5, "z_im": 2.0, "z_re": 1.0}


def test_csv_format(tmp_path):
    p = tmp_path / "t.csv"
    ex.write_csv(p, ("a", "b"), [(0.1, 3), (1 / 3, True)])
    raw = p.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines == ["a,b", "0.10000000000000001,3", "0.33333333333333331,1"]
    assert float(lines[2].split(",")[0]) == 1 / 3


def test_blowup_experiment(s128, tmp_path):
    rep = ex.exp_blowup(s128.exp, out_dir=tmp_path)
    assert rep.passed, rep.checks
    for name in rep.artifacts:
        assert (tmp_path / name).exists()
    t = [rep.metrics[f"T_{tau:g}"] for tau in (0.005, 0.01, 0.02)]
    assert t[0] > t[1] > t[2]


def test_foliation_small(s128):
    rep = ex.exp_foliation(s128.exp, n_angles=4)
    assert rep.passed, rep.checks
    assert rep.metrics["n_trapping_checked"] == 4


def test_conjugate_seeds_give_equal_supnorms(s128):
    opts = EvolveOptions(stop_below=1e-6)
    tau = 0.02 * complex(math.cos(1.0), math.sin(1.0))
    a = evolve(seed_initial(tau, s128.exp), TimePath.from_points(0, 60.0), opts)
    b = evolve(seed_initial(tau.conjugate(), s128.exp), TimePath.from_points(0, 60.0), opts)
    assert a.supnorms == b.supnorms and a.times == b.times


def test_blowup_rate_experiment(s128):
    t = ex.blowup_time(s128.exp).blowup_time.real
    rep = ex.exp_blowup_rate(s128.exp, np.pi / s128.pair.mu, t_blowup=t)
    assert rep.passed, rep.checks
    assert 0.5 < rep.metrics["M_fit"] < 5


def test_spall_strip_rejects_bad_height(s128):
    with pytest.raises(DomainError):
        ex.exp_spall_strip(s128.exp, 0.0)


def test_strip_height_two_resolutions(s128, s256):
    d = []
    for s in (s128, s256):
        t = ex.blowup_time(s.exp).blowup_time.real
        rep = ex.exp_strip_width(s.exp, t_blowup=t, locate_singularity=False)
        assert rep.passed, rep.checks
        d.append(rep.metrics["delta_star"])
        assert 0 < d[-1] <= 2 * np.pi / s.pair.mu
    assert abs(d[0] - d[1]) / d[1] < 1e-3


def test_singular_height_at_residue_period(s128):
    t = ex.blowup_time(s128.exp).blowup_time.real
    rep = ex.exp_strip_width(s128.exp, t_blowup=t, xtol=1e-3)
    assert rep.metrics["singular_height_rel_err"] < 1e-6
