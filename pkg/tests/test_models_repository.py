import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from pydantic import ValidationError

from sonine.config import settings
from sonine.errors import ConfigError
from sonine.models import (
    BvpConfig,
    ConvergeConfig,
    GridFunction,
    RunReport,
    SingularSpec,
)
from sonine.registry import (
    EXPRESSIONS,
    RHS_EXPRESSIONS,
    get_expression,
    get_rhs,
    tolerance_table,
)
from sonine.repository import ReportRepository
from sonine.utils import evaluation_grid, interior_grid, parse_float_list, strictly_decreasing


class TestGridFunction:
    def test_linear_interpolation(self):
        gf = GridFunction(mesh=[0.0, 1.0, 2.0], values=[0.0, 2.0, 0.0])
        assert gf(0.5) == pytest.approx(1.0)
        assert gf.a == 0.0 and gf.b == 2.0

    def test_cubic_interpolation_reproduces_cubics(self):
        mesh = np.linspace(0.0, 1.0, 9)
        gf = GridFunction.from_function(lambda t: t ** 3 - t, mesh, interp_order=3)
        # not-a-knot splines are exact on cubics
        assert gf(0.37) == pytest.approx(0.37 ** 3 - 0.37, abs=1e-12)

    @pytest.mark.parametrize("kwargs", [
        {"mesh": [0.0, 1.0], "values": [1.0]},
        {"mesh": [0.0], "values": [1.0]},
        {"mesh": [0.0, 0.5, 0.5], "values": [1.0, 2.0, 3.0]},
        {"mesh": [0.0, 1.0], "values": [1.0, 2.0], "interp_order": 2},
    ])
    def test_validation(self, kwargs):
        with pytest.raises(ValidationError):
            GridFunction(**kwargs)

    def test_rows(self):
        gf = GridFunction(mesh=[0.0, 1.0], values=[3.0, 4.0])
        assert gf.to_rows() == [[0.0, 3.0], [1.0, 4.0]]


def test_singular_spec_mirror():
    spec = SingularSpec(left_exponent=0.3, right_log=True)
    mirrored = spec.mirrored()
    assert mirrored.right_exponent == 0.3 and mirrored.left_log
    assert mirrored.mirrored() == spec


def test_singular_spec_bounds():
    with pytest.raises(ValidationError):
        SingularSpec(left_exponent=1.0)


def test_converge_config_splits_lists():
    config = ConvergeConfig(alphas="0.2, 0.1,0.05", thetas=[1.3])
    assert config.alphas == [0.2, 0.1, 0.05]
    assert config.thetas == [1.3]


def test_bvp_config_alias_and_bounds():
    config = BvpConfig.model_validate({"family": "rl", "with": "rl", "rhs": "half_u"})
    assert config.with_family.value == "rl"
    with pytest.raises(ValidationError):
        BvpConfig(mesh=2)


class TestRegistry:
    def test_expressions_have_matching_derivatives(self):
        x = np.linspace(0.1, 0.9, 7)
        h = 1e-6
        for name, expr in EXPRESSIONS.items():
            fd = (expr.value(x + h) - expr.value(x - h)) / (2 * h)
            np.testing.assert_allclose(expr.derivative(x), fd, atol=1e-6, err_msg=name)

    def test_rhs_lipschitz_constants_hold(self):
        t = np.linspace(0.0, 1.0, 11)[:, None]
        u = np.linspace(-2.0, 2.0, 201)[None, :]
        for name, rhs in RHS_EXPRESSIONS.items():
            values = rhs.value(t, u)
            quotients = np.abs(np.diff(values, axis=1)) / np.diff(u, axis=1)
            assert np.max(quotients) <= rhs.lipschitz + 1e-9, name

    def test_lookup_is_case_insensitive(self):
        assert get_expression("COS") is EXPRESSIONS["cos"]
        assert get_rhs("Half_U") is RHS_EXPRESSIONS["half_u"]

    @pytest.mark.parametrize("lookup", [get_expression, get_rhs])
    def test_unknown_names(self, lookup):
        with pytest.raises(ConfigError):
            lookup("nope")

    def test_tolerance_table_is_versioned(self):
        table = tolerance_table()
        assert table["version"] == "2"
        assert table["inversion"] == 5e-5

    def test_tolerance_table_reads_conjugacy_settings(self, monkeypatch):
        monkeypatch.setattr(settings, "conjugacy_tol_algebraic", 1e-6)
        table = tolerance_table()
        assert table["conjugacy_algebraic"] == 1e-6
        assert table["conjugacy_logarithmic"] == settings.conjugacy_tol_logarithmic


class TestUtils:
    def test_interior_grid(self):
        np.testing.assert_allclose(interior_grid(0.0, 1.0, 5), [0.1, 0.3, 0.5, 0.7, 0.9])

    def test_evaluation_grid(self):
        grid = evaluation_grid(1.0, 2.0, 3)
        np.testing.assert_allclose(grid, [1.0, 1.5, 2.0])
        with pytest.raises(ConfigError):
            evaluation_grid(0.0, 1.0, 1)

    def test_parse_float_list(self):
        assert parse_float_list("0.2,0.1, 0.05") == [0.2, 0.1, 0.05]
        for bad in ("", "a,b", " , "):
            with pytest.raises(ConfigError):
                parse_float_list(bad)

    @given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
    def test_sorted_distinct_values_are_decreasing(self, values):
        ordered = sorted(set(values), reverse=True)
        assert strictly_decreasing(ordered)
        if len(ordered) > 1:
            assert not strictly_decreasing(ordered[::-1])


class TestRepository:
    def test_save_report(self, tmp_path):
        report = RunReport(command="apply", inputs={"op": "ileft"}, outputs={"n": 3},
                           tolerances={}, wall_time=0.5)
        path = ReportRepository.save_report(report, tmp_path / "out")
        assert path.name == "apply.json"
        data = json.loads(path.read_text())
        assert data["outputs"] == {"n": 3}
        assert data["exit_code"] == 0

    def test_table_keeps_full_precision(self, tmp_path):
        path = ReportRepository.write_table([(0.1, 1 / 3, None)], ["x", "value", "error"], tmp_path / "t.csv")
        raw = path.read_bytes().decode()
        assert raw.startswith("x,value,error\r\n")
        assert repr(1 / 3) in raw
        assert raw.endswith(",\r\n")

    def test_grid_function_round_trip(self, tmp_path):
        gf = GridFunction(mesh=[0.0, 0.5, 1.0], values=[1.0, 0.25, -2.0])
        path = ReportRepository.write_grid_function(gf, tmp_path / "g.csv")
        loaded = ReportRepository.read_grid_function(path)
        assert loaded.mesh == gf.mesh
        assert loaded.values == gf.values

    def test_grid_function_without_header(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("0,1\n1,3\n")
        assert ReportRepository.read_grid_function(path)(0.5) == pytest.approx(2.0)

    def test_bad_grid_function_rows(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("x,value\n0,1\nnot,a number\n")
        with pytest.raises(ConfigError):
            ReportRepository.read_grid_function(path)
        path.write_text("x,value\n1,1\n0,3\n")
        with pytest.raises(ConfigError):
            ReportRepository.read_grid_function(path)

    def test_load_json_config(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"family": "rl", "alpha": 0.3}')
        assert ReportRepository.load_json_config(path) == {"family": "rl", "alpha": 0.3}
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            ReportRepository.load_json_config(path)
        with pytest.raises(ConfigError):
            ReportRepository.load_json_config(tmp_path / "missing.json")
