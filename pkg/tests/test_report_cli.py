import json

import pytest

from hypercount.cli import run_subcommand
from hypercount.counting import BoxSpec, count_affine, count_projective
from hypercount.geometry import Hypersurface, exponent_table
from hypercount.poly import parse_poly
from hypercount.report import CATALOG, emit, fit_exponent, load_instance, render, verify_entry


def test_fit_cubic_growth():
    fit = fit_exponent([(b, b ** 3) for b in (8, 16, 32, 64)])
    assert fit.slope == pytest.approx(3.0, abs=1e-9)
    assert fit.residual == pytest.approx(0.0, abs=1e-12)


def test_fit_constant():
    assert fit_exponent([(b, 7) for b in (4, 8, 16)]).slope == pytest.approx(0.0, abs=1e-12)


def test_fit_needs_three_nonzero():
    with pytest.raises(ValueError):
        fit_exponent([(8, 10), (16, 0), (32, 40)])


def test_fit_comparisons():
    fit = fit_exponent([(b, b ** 3) for b in (8, 16, 32)], exponent_table(4, 6))
    names = [c["bound"] for c in fit.comparisons]
    assert "trivial" in names and "dim-growth" in names


def test_json_counts_are_strings():
    Y = Hypersurface.affine_from(parse_poly("x1^2+x2^2-25"), 2)
    rep = count_affine(Y, BoxSpec(10), cap=None)
    payload = json.loads(emit(rep))
    assert payload["schema"] == "hc/1"
    assert payload["count"] == "12" and int(payload["count"]) == rep.count
    assert len(payload["points"]) == 12
    assert "version" in payload and "wall_ms" in payload


def test_big_count_round_trips():
    payload = json.loads(render({"kind": "x", "count": str(10 ** 40)}))
    assert int(payload["count"]) == 10 ** 40


def test_deterministic_drops_volatile():
    Y = Hypersurface.affine_from(parse_poly("x1^2+x2^2-x3^2-1"), 3)
    texts = {render(count_affine(Y, BoxSpec(12), workers=w), deterministic=True) for w in (1, 3)}
    assert len(texts) == 1
    payload = json.loads(texts.pop())
    assert not {"wall_ms", "workers", "shards", "version"} & payload.keys()


def test_fit_csv():
    text = render(fit_exponent([(b, b ** 2) for b in (2, 4, 8)]), "csv")
    lines = text.splitlines()
    assert lines[0] == "B,N" and lines[1] == "2,4"
    assert any(line.startswith("# slope=2") for line in lines)


def test_unknown_format():
    with pytest.raises(ValueError):
        render({"a": 1}, "yaml")


def test_catalog_loads():
    for name, entry in CATALOG.items():
        H = load_instance(name)
        assert H.projective == entry.projective and H.n == entry.n
    with pytest.raises(KeyError):
        load_instance("nope")


@pytest.mark.parametrize("name", ["fermat6_p4", "plane_degree6_p5", "split_family_a4", "cusp"])
def test_catalog_properties(name):
    assert all(ok for _, ok, _ in verify_entry(CATALOG[name]))


# --- CLI -------------------------------------------------------------------

def run(capsys, *argv):
    code = run_subcommand(list(argv))
    return code, capsys.readouterr().out


def test_cli_count_circle(capsys):
    code, out = run(capsys, "count", "--affine", "-f", "circle", "-B", "10", "--oracle-check")
    assert code == 0 and out.split()[0] == "12"


def test_cli_count_json(capsys, tmp_path):
    path = tmp_path / "c.poly"
    path.write_text("# conic\nx0^2+x1^2-2*x2^2\n")
    code, out = run(capsys, "count", "--projective", "-f", str(path), "-B", "5", "--format", "json")
    assert code == 0
    X = Hypersurface.projective_from(parse_poly("x0^2+x1^2-2*x2^2"), 2)
    assert json.loads(out)["count"] == str(count_projective(X, BoxSpec(5)).count)


def test_cli_output_file(capsys, tmp_path):
    target = tmp_path / "out.json"
    code, out = run(capsys, "theta", "-d", "16", "--format", "json", "-o", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["schema"] == "hc/1"


def test_cli_theta(capsys):
    assert run(capsys, "theta", "-d", "50")[1].strip() == "0"


def test_cli_smooth_exit_codes(capsys):
    assert run(capsys, "smooth", "-f", "fermat6_p4")[0] == 0
    code, out = run(capsys, "smooth", "-f", "cusp")
    assert code == 1


def test_cli_usage_errors(capsys):
    assert run_subcommand(["bogus"]) == 2
    assert run_subcommand(["count", "--affine", "-f", "/no/such/file", "-B", "3"]) == 2
    assert run_subcommand(["theta"]) == 2


def test_cli_budget(capsys):
    assert run_subcommand(["count", "--affine", "-f", "quartic_a4", "-B", "1000", "--budget", "100"]) == 3


def test_cli_slice_and_search(capsys):
    code, out = run(capsys, "slice", "-f", "quartic_p4", "--range=-3..3", "--search-matrix")
    assert code == 0
    code, _ = run(capsys, "slice", "-f", "quartic_p4", "--range=-3..3", "--search-matrix",
                  "--entry-bound", "0")
    assert code == 1


def test_cli_aux(capsys):
    code, out = run(capsys, "aux", "-f", "quartic_a4", "-B", "20", "--r", "11", "--eps", "0.3",
                    "--workers", "1", "--format", "json", "--deterministic")
    assert code == 0
    payload = json.loads(out)
    assert payload["coverage"] == 1.0 and payload["all_verified"]


def test_cli_fit(capsys):
    code, out = run(capsys, "fit", "--projective", "-f", "plane_degree6_p5",
                    "--subspace", "0,1,2", "--B-list", "4,8,16", "--format", "csv")
    assert code == 0 and "# slope=" in out


def test_cli_demo(capsys):
    assert run(capsys, "demo", "--list")[0] == 0
    assert run(capsys, "demo", "--verify")[0] == 0


def test_cli_deterministic_identical(capsys):
    outs = set()
    for w in ("1", "2", "4"):
        code, out = run(capsys, "count", "--affine", "-f", "quartic_a4", "-B", "6",
                        "--workers", w, "--format", "json", "--deterministic")
        assert code == 0
        outs.add(out)
    assert len(outs) == 1
