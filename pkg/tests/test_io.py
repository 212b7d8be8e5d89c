import io as _io

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.signal import find_peaks

from decolab import io
from decolab.analytic import IntensityProfile, pattern
from decolab.errors import InvalidParameterError
from decolab.model import config_from_text, load_preset


def profile(x, y, normalization="peak-normalized"):
    return IntensityProfile(np.asarray(x, float), np.asarray(y, float), 1.0, normalization)


class TestCsv:
    def test_three_points(self):
        text = io.emit_csv(profile([0.0, 1e-6, 2e-6], [0.25, 1.0, 0.5]))
        lines = text.splitlines()
        assert len(lines) == 4
        assert lines[0] == "x_m,intensity_norm"
        assert lines[2] == "9.9999999999999995e-07,1"

    def test_raw_header(self):
        text = io.emit_csv(profile([0.0], [3.0], "raw"))
        assert text.splitlines()[0] == "x_m,intensity_per_m"

    def test_bit_exact_round_trip(self, tmp_path, neon):
        prof = pattern(neon.with_kappa(0.3), neon.flight_time)
        path = tmp_path / "p.csv"
        io.emit_csv(prof, path)
        header, data = io.read_csv(str(path))
        assert header == ["x_m", "intensity_norm"]
        np.testing.assert_array_equal(data[:, 0], prof.x)
        np.testing.assert_array_equal(data[:, 1], prof.intensity)

    def test_stdout_text(self):
        assert io.emit_csv(profile([1.0], [1.0]), "-") == "x_m,intensity_norm\n1,1\n"

    def test_series(self):
        text = io.emit_series([0.0, 0.5], [1.0, 0.5])
        assert text == "t_over_taud,C\n0,1\n0.5,0.5\n"

    def test_series_rows(self):
        text = io.emit_series([1.0], [[0.5, 2.0]], header=("T_K", "C", "tau_d_s"))
        assert text.splitlines() == ["T_K,C,tau_d_s", "1,0.5,2"]

    def test_series_errors(self):
        with pytest.raises(InvalidParameterError):
            io.emit_series([0.0, 1.0], [1.0])
        with pytest.raises(InvalidParameterError):
            io.emit_series([0.0], [[1.0, 2.0]])

    def test_read_from_handle(self):
        header, data = io.read_csv(_io.StringIO("a,b\n1,2\n3,4\n"))
        assert header == ["a", "b"]
        assert_allclose(data, [[1, 2], [3, 4]])


class TestSvg:
    def test_deterministic(self, tmp_path, neon):
        prof = pattern(neon, neon.flight_time)
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        io.emit_svg(prof, a, title="neon")
        io.emit_svg(prof, b, title="neon")
        assert a.read_bytes() == b.read_bytes()
        assert a.read_text().startswith("<svg")

    def test_constant_is_horizontal(self):
        text = io.svg_text(np.linspace(0, 1, 11), np.full(11, 0.7))
        pts = io.svg_points(text)
        assert len(pts) == 11
        assert np.ptp(pts[:, 1]) == 0.0
        assert_allclose(np.diff(pts[:, 0]), np.diff(pts[:, 0])[0], atol=2e-3)

    def test_escaping(self):
        text = io.svg_text([0, 1], [0, 1], title="a<b & c")
        assert "a&lt;b &amp; c" in text

    def test_rejects_bad_data(self):
        with pytest.raises(InvalidParameterError):
            io.svg_text([], [])
        with pytest.raises(InvalidParameterError):
            io.svg_text([0, 1], [0, np.nan])

    def test_peak_positions_survive(self, neon):
        cfg = neon.with_slits(2)
        prof = pattern(cfg, cfg.flight_time)
        text = io.svg_text(prof.x, prof.intensity)
        x = io.svg_to_data(text, (prof.x[0], prof.x[-1]))
        # SVG y grows downwards
        svg_peaks, _ = find_peaks(-io.svg_points(text)[:, 1], prominence=1.0)
        data_peaks, _ = find_peaks(prof.intensity, prominence=1e-3)
        dx = prof.x[1] - prof.x[0]
        assert_allclose(x[svg_peaks], prof.x[data_peaks], atol=0.01 * dx)

    def test_neon_fringe_spacing_readable(self, neon):
        prof = pattern(neon, neon.flight_time)
        # the interference factor removes the envelope pull on the raw peaks
        text = io.svg_text(prof.x, prof.intensity / prof.envelope)
        x = io.svg_to_data(text, (prof.x[0], prof.x[-1]))
        y = -io.svg_points(text)[:, 1]
        peaks, _ = find_peaks(y, height=0.5 * (y.max() + y.min()))
        spacing = np.median(np.diff(x[peaks]))
        assert_allclose(spacing * 1e6, 111.0, atol=(prof.x[1] - prof.x[0]) * 1e6)


class TestConfigText:
    @pytest.mark.parametrize("name", ["neon", "c60"])
    def test_round_trip(self, name):
        cfg = load_preset(name).with_environment(0.25, 300.0)
        back = config_from_text(io.format_config(cfg))
        assert io.format_config(back) == io.format_config(cfg)
        assert back.quanton.mass == cfg.quanton.mass
        np.testing.assert_array_equal(back.screen.grid(), cfg.screen.grid())
