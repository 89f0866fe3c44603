import math

import pytest

from src.contact_mcm.diagnose.report import (BoundReport, ResidualReport, observed_orders, single_level_pass,
                                             sweep_report)


class TestSingleLevel:

    def test_algebraic_identities_need_round_off(self):
        assert single_level_pass(1e-12, None)
        assert not single_level_pass(1e-8, None)

    def test_truncation_allowance(self):
        assert single_level_pass(0.9, 0.01, scale=8.0)
        assert not single_level_pass(1.0, 0.01, scale=8.0)

    def test_nan_fails(self):
        assert not single_level_pass(math.nan, 0.1)
        assert not ResidualReport("x", math.inf, spacing=0.1).passed

    def test_report_judges_itself_unless_told(self):
        assert ResidualReport("x", 1e-3, spacing=0.01).passed
        assert ResidualReport("x", 1e-3, passed=False, spacing=0.01).passed is False


class TestOrders:

    def test_second_order(self):
        assert observed_orders([0.1, 0.05], [1e-2, 2.5e-3]) == [pytest.approx(2.0)]

    def test_exact_levels_have_no_order(self):
        assert observed_orders([0.1, 0.05, 0.025], [1e-14, 1e-2, 2.5e-3]) == [None, pytest.approx(2.0)]

    def test_sweep_passes_on_min_order(self):
        report = sweep_report("q", [0.1, 0.05, 0.025], [4e-2, 1e-2, 2.5e-3], min_order=1.8)
        assert report.passed
        assert report.order == pytest.approx(2.0)
        assert report.residual == pytest.approx(2.5e-3)
        assert report.detail == {"level_0": 4e-2, "level_1": 1e-2, "level_2": 2.5e-3}

    def test_sweep_fails_below_min_order(self):
        report = sweep_report("q", [0.1, 0.05], [1e-2, 5e-3], min_order=1.8)
        assert report.order == pytest.approx(1.0)
        assert not report.passed

    def test_exact_sweep_passes(self):
        report = sweep_report("q", [0.1, 0.05], [1e-13, 1e-15], min_order=1.0)
        assert report.order is None
        assert report.passed

    def test_single_level_sweep(self):
        with pytest.raises(ValueError):
            sweep_report("q", [0.1], [1e-2], min_order=1.0)


def test_not_applicable_bound():
    report = BoundReport.not_applicable("height", "no lens")
    assert not report.applicable
    assert report.detail["reason"] == "no lens"
    assert report.to_dict()["kind"] == "bound"
