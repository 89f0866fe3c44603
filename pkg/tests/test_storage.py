import json

import numpy as np
import pytest

from src.contact_mcm.errors import StorageError
from src.contact_mcm.storage import (SERIES_FILE, TRACE_FILE, load_run, read_series, read_snapshot, save_run,
                                     snapshot_from_json, write_orders, write_snapshot)
from src.contact_mcm.trace import Snapshot
from src.utils import format_float


def test_format_float_round_trips():
    for x in (0.1, 1 / 3, 1e-300, -2.5e17):
        assert float(format_float(x)) == x
    assert format_float(float("nan")) == "nan"


class TestSnapshots:

    def test_bit_exact_round_trip(self, tmp_path, lens_seed):
        snapshot = Snapshot.capture(lens_seed, 3, H=np.linspace(-2.0, -1.0, lens_seed.grid.n_nodes) / 3)
        path = write_snapshot(tmp_path, snapshot)
        assert path.name == "snap_000003.json"
        assert read_snapshot(path) == snapshot

    def test_unknown_format(self):
        with pytest.raises(StorageError, match="format"):
            snapshot_from_json(json.dumps({"format": "other v9"}))

    def test_malformed(self):
        with pytest.raises(StorageError):
            snapshot_from_json("{not json")


class TestRuns:

    def test_save_and_load(self, tmp_path, lens_trace):
        save_run(tmp_path, lens_trace)
        loaded = load_run(tmp_path)
        assert loaded.solver == lens_trace.solver
        assert loaded.exit_reason == lens_trace.exit_reason
        assert loaded.records == lens_trace.records
        assert loaded.initial == lens_trace.initial
        assert loaded.snapshots == lens_trace.snapshots
        np.testing.assert_array_equal(loaded.final_state.u, lens_trace.snapshots[-1].fields["u"])

    def test_series_rows(self, tmp_path, lens_trace):
        save_run(tmp_path, lens_trace)
        rows = read_series(tmp_path)
        assert len(rows) == len(lens_trace.all_records())
        assert rows[-1]["t"] == lens_trace.records[-1].t

    def test_series_header(self, tmp_path):
        (tmp_path / SERIES_FILE).write_text("time,radius\n0.0,1.0\n")
        with pytest.raises(StorageError, match="header"):
            read_series(tmp_path)

    def test_missing_trace(self, tmp_path):
        with pytest.raises(StorageError):
            load_run(tmp_path / "nowhere")

    def test_malformed_trace(self, tmp_path):
        (tmp_path / TRACE_FILE).write_text('{"solver": "radial"}')
        with pytest.raises(StorageError):
            load_run(tmp_path)


def test_orders_file(tmp_path):
    path = write_orders(tmp_path / "orders.csv", [("evolution_H", 0, 0.1, 1e-2, None, True)])
    lines = path.read_text().splitlines()
    assert lines[0] == "quantity,level,spacing,residual,order,passed"
    assert lines[1] == "evolution_H,0,0.1,0.01,,True"
