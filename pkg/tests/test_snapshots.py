import json

import numpy as np
import pytest

from landaulab import (
    SnapshotFormatError,
    VelocityGrid,
    compute_coefficients,
    make_maxwellian,
    q_divergence,
    read_snapshot,
    write_snapshot,
)
from landaulab.snapshots import export_coefficient_fields, export_collision_output, read_raw_field

from conftest import cached_tables


class TestRoundTrip:
    def test_bit_exact(self, tmp_path, grid16):
        rng = np.random.default_rng(0)
        from landaulab import DistributionState

        state = DistributionState(grid16, rng.uniform(0.0, 2.0, grid16.shape), time=0.75)
        path = tmp_path / "state.snap"
        write_snapshot(path, state, gamma=-2.5, metadata={"run": "test"})
        back, gamma, meta = read_snapshot(path)
        assert np.array_equal(back.values, state.values)
        assert back.time == state.time
        assert back.grid == grid16
        assert gamma == -2.5
        assert meta["run"] == "test"
        assert meta["N"] == 16

    def test_x_fastest_layout(self, tmp_path, grid16):
        # byte order on disk: x varies fastest
        from landaulab import DistributionState

        vals = np.zeros(grid16.shape)
        vals[1, 0, 0] = 1.0  # second x-slot
        write_snapshot(tmp_path / "s.snap", DistributionState(grid16, vals), gamma=0.0)
        raw = (tmp_path / "s.snap").read_bytes()
        payload = np.frombuffer(raw, dtype="<f8", offset=40)
        assert payload[1] == 1.0
        assert payload.sum() == 1.0

    def test_no_sidecar_without_metadata(self, tmp_path, maxwellian32):
        path = tmp_path / "bare.snap"
        write_snapshot(path, maxwellian32, gamma=-3.0)
        assert not (tmp_path / "bare.snap.json").exists()
        _, gamma, meta = read_snapshot(path)
        assert gamma == -3.0 and meta is None


class TestFormatErrors:
    def _write_valid(self, tmp_path, grid16):
        path = tmp_path / "v.snap"
        write_snapshot(path, make_maxwellian(grid16), gamma=-2.0)
        return path

    def test_version_mismatch(self, tmp_path, grid16):
        path = self._write_valid(tmp_path, grid16)
        raw = bytearray(path.read_bytes())
        raw[8] = 99  # version field
        path.write_bytes(bytes(raw))
        with pytest.raises(SnapshotFormatError, match="version"):
            read_snapshot(path)

    def test_bad_magic(self, tmp_path, grid16):
        path = self._write_valid(tmp_path, grid16)
        raw = bytearray(path.read_bytes())
        raw[0] = ord(b"X")
        path.write_bytes(bytes(raw))
        with pytest.raises(SnapshotFormatError, match="magic"):
            read_snapshot(path)

    def test_truncated_payload(self, tmp_path, grid16):
        path = self._write_valid(tmp_path, grid16)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(SnapshotFormatError):
            read_snapshot(path)


class TestChannelExports:
    def test_coefficient_channels(self, tmp_path, grid16):
        tables = cached_tables(8.0, 16, -2.0)
        coeffs = compute_coefficients(make_maxwellian(grid16), tables)
        paths = export_coefficient_fields(tmp_path / "fields", coeffs)
        names = sorted(p.name for p in paths)
        assert names == sorted(
            f"coeff_{ch}.snap"
            for ch in ("axx", "ayy", "azz", "axy", "axz", "ayz", "bx", "by", "bz", "c")
        )
        grid, values, _, gamma, meta = read_raw_field(tmp_path / "fields" / "coeff_axx.snap")
        assert np.array_equal(values, coeffs.abar[..., 0, 0])
        assert meta["channel"] == "axx"
        assert gamma == -2.0

    def test_collision_form_tag(self, tmp_path, grid16):
        tables = cached_tables(8.0, 16, -2.0)
        f = make_maxwellian(grid16)
        out = q_divergence(f, f, compute_coefficients(f, tables))
        export_collision_output(tmp_path / "q.snap", out, gamma=-2.0)
        meta = json.loads((tmp_path / "q.snap.json").read_text())
        assert meta["form"] == "divergence"
        _, values, _, _, _ = read_raw_field(tmp_path / "q.snap")
        assert np.array_equal(values, out.values)
