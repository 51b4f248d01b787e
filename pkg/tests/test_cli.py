import csv
import io
import json
import math

import pytest

from decorr.cli import main
from decorr.modelio import load_model, model_to_dict

UNIT_OU = {"d": 1, "n": 1, "Q": [[-1.0]], "sigma": [[1.0]], "epsilon": 0.001, "mu0": [0.0], "Sigma0": [[1.0]]}
UNIT_SCALAR = {"theta": 1, "sigma": 1, "epsilon": 0.001, "mu0": 0, "sigma0_sq": 1, "A": {"kind": "zero"}}
ROT = {"Q": [[-1.0, 2.0], [-2.0, -1.0]], "sigma": [[1.0, 0.0], [0.0, 1.0]], "epsilon": 0.001, "mu0": [0, 0],
       "Sigma0": [[1.0, 0.0], [0.0, 1.0]]}
JORDAN = dict(ROT, Q=[[-1.0, 1.0], [0.0, -1.0]], jordan={"P": [[1, 0], [0, 1]], "blocks": [{"lambda_re": -1, "size": 2}]})


@pytest.fixture
def write(tmp_path):
    def _write(data, name="model.json"):
        path = tmp_path / name
        path.write_text(data if isinstance(data, str) else json.dumps(data), encoding="utf-8")
        return str(path)

    return _write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_check_valid_model(write, capsys):
    code, out, _ = run(capsys, "check", "--model", write(UNIT_OU))
    assert code == 0
    assert out.splitlines()[0] == "hurwitz: ok (vartheta=-1), controllability: ok (rank 1/1)"


def test_check_rotation_notes_complex(write, capsys):
    code, out, _ = run(capsys, "check", "--model", write(ROT))
    assert code == 0
    assert "critical eigenvalue: complex" in out


def test_check_zero_diffusion_fails(write, capsys):
    code, out, _ = run(capsys, "check", "--model", write(dict(ROT, sigma=[[0.0, 0.0], [0.0, 0.0]])))
    assert code == 1
    assert "rank condition fails: rank=0<2" in out


def test_check_unstable_fails(write, capsys):
    code, out, _ = run(capsys, "check", "--model", write(dict(UNIT_OU, Q=[[0.5]])))
    assert code == 1
    assert "hurwitz: FAIL" in out


def test_malformed_json_reports_position(write, capsys):
    code, _, err = run(capsys, "check", "--model", write('{"Q": [[-1.0]],\n  "sigma": }'))
    assert code == 2
    assert "line 2" in err and "column" in err
    code, _, err = run(capsys, "check", "--model", write({"Q": [[-1.0]]}))
    assert code == 2 and "missing field" in err


def test_usage_errors(capsys, write):
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "check")[0] == 2
    assert run(capsys, "check", "--model", "/nonexistent/model.json")[0] == 2


def test_invalid_model_exits_one(write, capsys):
    code, _, err = run(capsys, "distance", "--model", write(dict(UNIT_OU, Q=[[0.5]])))
    assert code == 1 and "Hurwitz" in err


def test_spectral_json(write, capsys):
    code, out, _ = run(capsys, "spectral", "--model", write(JORDAN), "--eps", "0.001")
    assert code == 0
    rep = json.loads(out)
    assert (rep["m"], rep["ell"], rep["critical_real"]) == (2, 1, True)
    assert rep["Gamma"] == [[0.0, 1.0], [0.0, 0.0]]
    assert rep["t_eps"]["0.001"] == pytest.approx(8.84040, abs=1e-5)


def test_distance_csv(write, capsys):
    code, out, _ = run(capsys, "distance", "--model", write(UNIT_OU))
    assert code == 0
    row = read_csv(out)[0]
    assert set(row) == {"t", "kl", "kl_rev", "w2", "tv", "tv_err"}
    assert float(row["kl"]) == pytest.approx(0.5493064776676105, rel=1e-12)
    code, out, _ = run(capsys, "distance", "--model", write(JORDAN), "--metric", "kl", "--t", "3")
    assert list(read_csv(out)[0]) == ["t", "kl"]
    assert run(capsys, "distance", "--model", write(UNIT_OU), "--t", "-1")[0] == 2


def test_profile_unit_values(write, capsys):
    code, out, _ = run(capsys, "profile", "--model", write(UNIT_SCALAR), "--metric", "kl")
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 61
    assert list(rows[0])[:2] == ["r", "G_kl"]
    assert [c for c in rows[0] if c.startswith("d_eps")] == [f"d_eps_kl_{e}" for e in ("0.01", "0.001", "0.0001", "1e-05")]
    by_r = {float(r["r"]): float(r["G_kl"]) for r in rows}
    assert by_r[-3.0] == pytest.approx(0.5 * math.log1p(2 * math.exp(6)), rel=1e-14)
    assert by_r[-3.0] == pytest.approx(3.35, abs=1e-2)
    assert by_r[0.0] == pytest.approx(0.549, abs=1e-3)
    assert by_r[3.0] == pytest.approx(0.5 * math.log1p(2 * math.exp(-6)), rel=1e-14)
    assert by_r[3.0] == pytest.approx(0.0025, abs=1e-4)


def test_profile_all_metrics_columns(write, capsys):
    code, out, _ = run(capsys, "profile", "--model", write(UNIT_OU), "--metric", "all", "--r-min", "0", "--r-max", "0",
                       "--eps", "1e-3")
    assert code == 0
    cols = list(read_csv(out)[0])
    for name in ("G_kl", "G_kl_rev", "G_w2", "G_tv", "G_tv_err", "d_eps_tv_0.001", "d_eps_tv_0.001_err"):
        assert name in cols
    row = read_csv(out)[0]
    assert float(row["G_w2"]) == pytest.approx(math.sqrt(3 - math.sqrt(3)), rel=1e-12)


def test_profile_round_trip(write, capsys):
    from decorr.scalar import ScalarLSDEModel, profile

    code, out, _ = run(capsys, "profile", "--model", write(UNIT_SCALAR), "--metric", "kl-rev", "--r-step", "0.5")
    m = ScalarLSDEModel.from_dict(UNIT_SCALAR)
    for row in read_csv(out):
        assert float(row["G_kl_rev"]) == profile(m, "kl_rev", float(row["r"])).value


def test_profile_jordan_converges(write, capsys):
    code, out, _ = run(capsys, "profile", "--model", write(JORDAN), "--metric", "kl", "--r-min", "-1", "--r-max", "1",
                       "--r-step", "1", "--eps", "1e-4,1e-8,1e-12")
    assert code == 0
    # the approach is logarithmic in eps, so the grid spans many decades
    for row in read_csv(out):
        G = float(row["G_kl"])
        gaps = [abs(float(row[f"d_eps_kl_{e}"]) - G) for e in ("0.0001", "1e-08", "1e-12")]
        assert gaps[0] > gaps[1] > gaps[2]


def test_profile_complex_exit_three(write, capsys):
    code, out, err = run(capsys, "profile", "--model", write(ROT))
    assert code == 3
    assert "no decorrelation profile: complex critical eigenvalue (window decorrelation only)" in err
    assert run(capsys, "profile", "--model", write(JORDAN), "--metric", "w2")[0] == 3


def test_profile_bad_grids(write, capsys):
    path = write(UNIT_OU)
    assert run(capsys, "profile", "--model", path, "--eps", "0.5")[0] == 2
    assert run(capsys, "profile", "--model", path, "--r-step", "0")[0] == 2
    assert run(capsys, "profile", "--model", path, "--eps", "a,b")[0] == 2


def test_classify(write, capsys):
    code, out, _ = run(capsys, "classify", "--model", write(UNIT_OU), "--eps", "1e-2,1e-3,1e-4,1e-5,1e-6")
    assert code == 0 and json.loads(out)["classification"] == "profile"
    code, out, _ = run(capsys, "classify", "--model", write(ROT), "--eps", "1e-2,1e-3,1e-4,1e-5,1e-6")
    assert code == 0 and json.loads(out)["classification"] == "window_only"
    assert run(capsys, "classify", "--model", write(UNIT_OU), "--eps", "1e-3")[0] == 2
    assert run(capsys, "classify", "--model", write(UNIT_OU), "--eps", "1e-4,1e-3")[0] == 2


def test_simulate(write, capsys, tmp_path):
    path = write(dict(UNIT_OU, epsilon=1.0))
    code, out, _ = run(capsys, "simulate", "--model", path, "--n", "1000000", "--seed", "42")
    assert code == 0 and out.startswith("covariance check: pass")
    code, _, err = run(capsys, "simulate", "--model", path, "--n", "10")
    assert code == 2 and "batch too small for pass/fail mode" in err
    assert run(capsys, "simulate", "--model", path, "--n", "20000", "--export")[0] == 2
    batch = tmp_path / "batch.csv"
    code, out, _ = run(capsys, "simulate", "--model", path, "--n", "20000", "--export", "--out", str(batch))
    assert code == 0
    assert batch.read_text().splitlines()[0] == "sample,x0_1,xt_1"
    assert len(batch.read_text().splitlines()) == 20001


def test_simulate_euler(write, capsys):
    path = write(dict(UNIT_SCALAR, epsilon=1.0))
    code, out, _ = run(capsys, "simulate", "--model", path, "--n", "20000", "--dt", "0.001")
    assert code == 0 and "scheme=euler" in out


def test_outputs_are_deterministic(write, tmp_path, capsys):
    path = write(JORDAN)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for target in (a, b):
        assert main(["profile", "--model", path, "--metric", "all", "--r-step", "1", "--out", str(target)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert b"\r\n" not in a.read_bytes()
    sim = write(dict(UNIT_OU, epsilon=1.0), "sim.json")
    c, d = tmp_path / "c.csv", tmp_path / "d.csv"
    for target in (c, d):
        main(["simulate", "--model", sim, "--n", "10000", "--seed", "3", "--export", "--out", str(target)])
    capsys.readouterr()
    assert c.read_bytes() == d.read_bytes()


def test_model_round_trip(write):
    for data in (UNIT_SCALAR, JORDAN):
        m = load_model(write(data))
        again = load_model(write(model_to_dict(m), "again.json"))
        assert model_to_dict(again) == model_to_dict(m)
