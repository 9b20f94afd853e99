import json

import pytest

from pseudosurf.cli import main, parse_params
from pseudosurf.report import SCHEMA

GSP_DOC = {
    "delta": 1,
    "f11": "z^2*z_t/2",
    "f12": "z_t",
    "f21": "z^2/2 + 1",
    "f22": "1",
    "f31": "z",
    "f32": "0",
    "coefficients": {"A": "0", "B": "2/z^2", "C": "-2*(z_t^2 + 1)/z"},
}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def test_parse_params():
    assert parse_params("lambda=1, ell=z^2") == {"lambda": "1", "ell": "z^2"}
    assert parse_params(None) == {}


def test_catalog_list(capsys):
    code, out, _ = run(capsys, "catalog", "list")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == SCHEMA
    assert "gsp" in [f["name"] for f in doc["data"]["fixtures"]]


def test_catalog_run_passes(capsys):
    code, out, _ = run(capsys, "catalog", "run", "gsp", "--params", "m=1", "--delta", "-1")
    assert code == 0
    doc = json.loads(out)
    assert doc["status"] == "PASS"
    assert doc["inputs"]["params"]["delta"] == "-1"


def test_verify_good_and_perturbed(tmp_path, capsys):
    good = write(tmp_path, "good.json", GSP_DOC)
    assert run(capsys, "verify", "--sextet", good)[0] == 0
    bad = write(tmp_path, "bad.json", dict(GSP_DOC, f22="1.1"))
    code, out, _ = run(capsys, "verify", "--sextet", bad)
    assert code == 1
    assert json.loads(out)["status"] == "FAIL"


def test_family_build(tmp_path, capsys):
    spec = write(tmp_path, "spec.json", {"psi21": "z^2/2 + 1", "psi22": "1", "psi31": "z", "psi32": "0"})
    code, out, _ = run(capsys, "family", "build", "cor33", "--spec", spec)
    assert code == 0
    assert json.loads(out)["data"]["coefficients"]["B"] == "2/z^2"


def test_family_build_degenerate_input(tmp_path, capsys):
    spec = write(tmp_path, "spec.json", {"psi21": "z", "psi22": "z", "psi31": "z", "psi32": "z"})
    code, _, err = run(capsys, "family", "build", "cor33", "--spec", spec)
    assert code == 2
    assert "Delta0Vanishes" in err


@pytest.mark.parametrize(
    "argv",
    [
        ("catalog", "run", "burgers"),
        ("catalog", "run", "gsp", "--params", "lambda=0"),
        ("catalog", "run", "gsp", "--params", "lambda"),
        ("verify", "--sextet", "/nonexistent.json"),
        ("solve", "sine-gordon"),
    ],
)
def test_input_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["catalog", "run"])
    assert info.value.code == 2


def test_structured_output_is_byte_identical(tmp_path, capsys):
    outs = []
    for i in range(2):
        path = tmp_path / f"r{i}.json"
        assert run(capsys, "catalog", "run", "ca-marvan", "--seed", "5", "--out", str(path))[0] == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert run(capsys, "catalog", "run", "ca-marvan", "--seed", "6", "--out", str(tmp_path / "r2.json"))[0] == 0
    assert (tmp_path / "r2.json").read_bytes() != outs[0]


def test_text_format(capsys):
    code, out, _ = run(capsys, "catalog", "run", "kdv", "--format", "text")
    assert code == 0
    assert out.startswith("catalog run: PASS")
    assert "time total" in out


def test_solve_and_csv(tmp_path, capsys):
    csv_path = tmp_path / "grid.csv"
    code, out, _ = run(
        capsys, "solve", "gsp", "--params", "m=1", "--nx", "64", "--t-end", "0.2",
        "--csv", str(csv_path), "--stride", "4",
    )
    assert code == 0
    assert json.loads(out)["data"]["nx"] == 64
    assert csv_path.read_text().startswith("x,t,z,K,w,r1,r2,r3")


def test_curvature_closed_form(capsys):
    code, out, _ = run(capsys, "curvature", "sine-gordon", "--closed-form", "4*atan(exp(x + t))", "--h", "0.1")
    assert code == 0
    doc = json.loads(out)
    assert doc["checks"][0]["stats"]["median_abs_K_minus_target"] < 1e-3


def test_curvature_tolerance_failure(capsys):
    code, _, _ = run(
        capsys, "curvature", "sine-gordon", "--closed-form", "4*atan(exp(x + t))", "--h", "0.2", "--k-tol", "1e-12"
    )
    assert code == 1
