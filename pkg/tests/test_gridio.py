import numpy as np
import pytest

from fieldcal import (
    FieldFile,
    FieldFormatError,
    GridLayout,
    SensorFormatError,
    read_field,
    read_sensors,
    snap_sensor,
    write_field,
    write_heatmap,
    write_sensors,
)

GRID = GridLayout(nx=4, ny=3, dx=0.5, dy=0.25, x0=1.0, y0=-2.0)


def awkward_field():
    rng = np.random.default_rng(0)
    data = rng.uniform(-5, 40, (3, 4))
    data[0, 0] = 1.0 / 3.0
    data[1, 1] = 1e-17
    data[2, 2] = -123456.789012345678
    return FieldFile(GRID, data)


class TestFieldFiles:
    def test_round_trip_bit_exact(self, tmp_path):
        field = awkward_field()
        path = tmp_path / "field.csv"
        write_field(field, path)
        back = read_field(path)
        assert back.grid == field.grid
        np.testing.assert_array_equal(back.data, field.data)

    def test_rewrite_byte_identical(self, tmp_path):
        field = awkward_field()
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_field(field, p1)
        write_field(read_field(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_header_row_names(self, tmp_path):
        path = tmp_path / "field.csv"
        write_field(awkward_field(), path)
        first, second = path.read_text().splitlines()[:2]
        assert first == "nx,ny,dx,dy,x0,y0"
        assert second.split(",")[:2] == ["4", "3"]

    @pytest.mark.parametrize(
        "mutate",
        [
            lambda lines: ["bogus"] + lines[1:],          # wrong header names
            lambda lines: lines[:1] + ["1,2,3"] + lines[2:],  # short header
            lambda lines: lines[:2] + lines[3:],          # missing row
            lambda lines: lines[:2] + ["1,2", *lines[3:]],    # short row
            lambda lines: lines[:2] + [lines[2].replace(",", ",x", 1)] + lines[3:],
        ],
    )
    def test_malformed_field_files(self, tmp_path, mutate):
        path = tmp_path / "field.csv"
        write_field(awkward_field(), path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(mutate(lines)) + "\n")
        with pytest.raises(FieldFormatError):
            read_field(path)

    def test_non_finite_rejected(self, tmp_path):
        path = tmp_path / "field.csv"
        write_field(awkward_field(), path)
        text = path.read_text().replace(
            format(1.0 / 3.0, ".17g"), "inf", 1
        )
        path.write_text(text)
        with pytest.raises(FieldFormatError, match="finite"):
            read_field(path)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(FieldFormatError):
            FieldFile(GRID, np.zeros((4, 3)))

    def test_from_flat_row_major(self):
        flat = np.arange(12, dtype=float)
        field = FieldFile.from_flat(GRID, flat)
        assert field.data[1, 2] == 6.0  # k = 1*4 + 2
        np.testing.assert_array_equal(field.flat(), flat)


class TestSensorFiles:
    def test_round_trip(self, tmp_path):
        rows = [(1.25, -1.75, 25.6), (2.0, -2.0, 1.0 / 3.0)]
        path = tmp_path / "sensors.csv"
        write_sensors(rows, path)
        assert read_sensors(path) == rows

    def test_malformed_rows(self, tmp_path):
        path = tmp_path / "sensors.csv"
        path.write_text("1.0,2.0\n")
        with pytest.raises(SensorFormatError, match="3 values"):
            read_sensors(path)
        path.write_text("1.0,2.0,abc\n")
        with pytest.raises(SensorFormatError):
            read_sensors(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "sensors.csv"
        path.write_text("")
        with pytest.raises(SensorFormatError, match="empty"):
            read_sensors(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SensorFormatError):
            read_sensors(tmp_path / "nope.csv")


class TestSnapSensor:
    def test_snaps_to_nearest(self):
        idx, dist = snap_sensor(GRID, 1.55, -1.80)
        # nearest column to x=1.55 is col 1 (x=1.5); nearest row to y=-1.8 is row 1 (y=-1.75)
        assert idx == 1 * GRID.nx + 1
        assert dist == pytest.approx(np.hypot(0.05, 0.05))

    def test_exact_mesh_point(self):
        idx, dist = snap_sensor(GRID, 2.0, -2.0)
        assert idx == 2 and dist == 0.0

    def test_tie_goes_to_lower_index(self):
        idx, _ = snap_sensor(GRID, 1.25, -1.875)  # midway in both axes
        assert idx == 0  # row 0, col 0 beat row 1, col 1

    def test_outside_bounding_box(self):
        with pytest.raises(SensorFormatError, match=r"\(9, 0\)"):
            snap_sensor(GRID, 9.0, 0.0)
        with pytest.raises(SensorFormatError):
            snap_sensor(GRID, 1.5, -3.0)


class TestHeatmaps:
    def read_pgm(self, path):
        blob = path.read_bytes()
        magic, dims, maxval, rest = blob.split(b"\n", 3)
        assert magic == b"P5" and maxval == b"255"
        nx, ny = (int(t) for t in dims.split())
        pix = np.frombuffer(rest, dtype=np.uint8, count=nx * ny).reshape(ny, nx)
        return pix

    def test_constant_field_mid_gray(self, tmp_path):
        field = FieldFile(GRID, np.full((3, 4), 7.5))
        path = tmp_path / "c.pgm"
        write_heatmap(field, path)
        assert (self.read_pgm(path) == 128).all()

    def test_two_level_field(self, tmp_path):
        data = np.zeros((3, 4))
        data[1:, :] = 1.0
        path = tmp_path / "t.pgm"
        write_heatmap(FieldFile(GRID, data), path)
        pix = self.read_pgm(path)
        assert set(np.unique(pix)) == {0, 255}

    def test_rounding_half_up(self, tmp_path):
        grid = GridLayout(nx=2, ny=2, dx=1.0, dy=1.0)
        field = FieldFile(grid, np.array([[0.0, 0.5], [0.5, 1.0]]))
        path = tmp_path / "r.pgm"
        write_heatmap(field, path)
        np.testing.assert_array_equal(
            self.read_pgm(path), [[0, 128], [128, 255]]
        )

    def test_sidecar_records_range(self, tmp_path):
        field = FieldFile(GRID, np.linspace(-1.5, 2.5, 12).reshape(3, 4))
        path = tmp_path / "s.pgm"
        write_heatmap(field, path)
        sidecar = (tmp_path / "s.pgm.txt").read_text().splitlines()
        assert sidecar[0] == "min -1.5"
        assert sidecar[1] == "max 2.5"
