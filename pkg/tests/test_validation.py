import dataclasses
import logging

import pytest

from src.contact_mcm.errors import NotApplicable
from src.contact_mcm.validation import CheckBook, VerifyContext, check_catenoid_drift, verify_trace


def corrupt_first_snapshot(trace):
    first = trace.snapshots[0]
    bad = dataclasses.replace(first, derived={"H": first.derived["H"] + 0.5})
    return dataclasses.replace(trace, snapshots=[bad] + trace.snapshots[1:])


class TestCheckBook:

    def test_registration_order_and_outcomes(self, lens_trace):
        book = CheckBook()

        @book
        def check_nothing(context):
            raise NotApplicable("never applies")

        @book
        def check_broken(context):
            raise ValueError("bad input")

        result = verify_trace(lens_trace, book)
        assert [r.name for r in result.reports] == ["nothing", "broken"]
        assert result.reports[0].passed is None
        assert result.reports[0].detail["reason"] == "never applies"
        assert result.reports[1].passed is False
        assert result.failures == {"broken": 1}


class TestVerify:

    def test_every_check_reports(self, lens_trace):
        result = verify_trace(lens_trace)
        names = {r.name for r in result.reports}
        for name in ("trace_identity", "normal_unit", "h_split", "evolution_H", "height", "extinction",
                     "continuation", "boundary_velocity", "flux_identity", "catenoid_drift"):
            assert name in names
        assert "trace_identity" not in result.failures
        assert "height" not in result.failures

    def test_corrupted_snapshot_fails_first(self, lens_trace, caplog):
        checks_logger = logging.getLogger("verify-test")
        with caplog.at_level(logging.ERROR, logger="verify-test"):
            result = verify_trace(corrupt_first_snapshot(lens_trace), checks_logger=checks_logger)
        assert not result.passed
        assert result.first_failure == "trace_identity"
        assert any("Verify Tracker" in m and '"trace_identity"=1' in m for m in caplog.messages)

    def test_catenoid_drift_skips_lenses(self, lens_trace):
        with pytest.raises(NotApplicable):
            check_catenoid_drift(VerifyContext.from_trace(lens_trace))

    def test_mid_snapshot_skips_the_seed(self, lens_trace):
        context = VerifyContext.from_trace(lens_trace)
        assert context.mid_snapshot().step > 0
        assert context.concave_lens
