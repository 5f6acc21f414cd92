import numpy as np

from export import csv_text, levels_svg, write_field_csv, write_study_csv
from operator_models import UnilateralShift, support_convergence
from psi_field import GridSpec, ScalarField, compute_field, extract_level


def test_csv_text():
    assert csv_text(["a", "b"], [[1, "x"]]) == "a,b\n1,x\n"


def test_field_csv_is_row_major(tmp_path):
    g = GridSpec(0, 1, 0, 2, 2, 3)
    field = ScalarField(g, np.arange(6, dtype=float).reshape(3, 2))
    path = write_field_csv(str(tmp_path / "f.csv"), field)
    lines = open(path, encoding="utf-8").read().splitlines()
    assert lines[1:3] == ["0.0,0.0,0.0", "1.0,0.0,1.0"]
    assert lines[-1] == "1.0,2.0,5.0"


def test_svg_has_one_group_per_level():
    g = GridSpec(-1, 1, -1, 1, 41, 41)
    f = compute_field(np.zeros((1, 1)), g)
    svg = levels_svg([extract_level(f, 0.3), extract_level(f, 0.6)], g, curves=[0.8 * np.exp(1j * np.linspace(0, 6, 32))])
    assert svg.count("<g ") == 2
    assert 'stroke-dasharray="4 3"' in svg
    assert "eps=0.3" in svg


def test_support_study_csv(tmp_path):
    table = support_convergence(UnilateralShift("bwd"), [0.0], [4, 8])
    lines = open(write_study_csv(str(tmp_path / "s.csv"), table), encoding="utf-8").read().splitlines()
    assert lines[0] == "theta,n,rho"
    assert len(lines) == 3
