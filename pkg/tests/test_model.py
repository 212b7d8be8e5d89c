import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from decolab import CONSTANTS
from decolab.constants import HBAR, K_B
from decolab.errors import ConfigError, InvalidParameterError
from decolab.model import (
    DetectorOverlaps,
    DimensionlessInstance,
    EnvironmentSpec,
    SourceAmplitudes,
    config_from_text,
    diffusion_coefficient,
    flight_time,
    load_config,
    load_preset,
    nondimensionalize,
    parse_config_text,
    preset_names,
    redimensionalize,
    validate,
)

from conftest import random_fraunhofer_config

# Frozen from an independent 40-digit evaluation of the same closed forms.
NEON_FLIGHT = 0.033661490891399633
C60_FLIGHT = 0.0056594631736580694
NEON_D_GAMMA1 = 2.3118967505e-51
C60_D_GAMMA1 = 2.98220184e-44
NEON_PHI = 0.33963163822592359


class TestConstants:
    def test_h_is_two_pi_hbar(self):
        assert_allclose(CONSTANTS.h, 2 * math.pi * CONSTANTS.hbar, rtol=1e-15)

    def test_exact_si_values(self):
        assert CONSTANTS.h == 6.62607015e-34
        assert CONSTANTS.k_B == 1.380649e-23


class TestDiffusionCoefficient:
    def test_zero_coupling(self):
        assert diffusion_coefficient(3.349e-26, 0.0, 2.5e-3) == 0.0

    def test_neon(self):
        assert_allclose(diffusion_coefficient(3.349e-26, 1.0, 2.5e-3), NEON_D_GAMMA1, rtol=1e-12)

    def test_c60(self):
        assert_allclose(diffusion_coefficient(1.2e-24, 1.0, 900.0), C60_D_GAMMA1, rtol=1e-12)

    @pytest.mark.parametrize("which", [0, 1, 2])
    def test_linear_in_each_argument(self, which):
        args = [3.349e-26, 0.7, 2.5e-3]
        base = diffusion_coefficient(*args)
        args[which] *= 2
        assert_allclose(diffusion_coefficient(*args), 2 * base, rtol=1e-15)

    @pytest.mark.parametrize("bad", [(math.nan, 1, 1), (1, math.inf, 1), (-1, 1, 1), (1, -1, 1)])
    def test_rejects_invalid(self, bad):
        with pytest.raises(InvalidParameterError):
            diffusion_coefficient(*bad)


class TestFlightTime:
    def test_neon(self):
        assert_allclose(flight_time(0.018e-6, 37e-3, 3.349e-26), NEON_FLIGHT, rtol=1e-12)

    def test_c60(self):
        assert_allclose(flight_time(2.5e-12, 1.25, 1.2e-24), C60_FLIGHT, rtol=1e-12)

    def test_zero_path(self):
        assert flight_time(1e-9, 0.0, 1e-25) == 0.0

    @given(lam=st.floats(1e-12, 1e-6), L=st.floats(1e-3, 10), m=st.floats(1e-27, 1e-22))
    def test_velocity_identity(self, lam, L, m):
        t = flight_time(lam, L, m)
        assert_allclose(t * CONSTANTS.h / (m * lam), L, rtol=1e-12)


class TestAmplitudesAndOverlaps:
    def test_uniform_is_normalized(self):
        for n in range(1, 9):
            assert_allclose(SourceAmplitudes.uniform(n).norm, 1.0, rtol=1e-15)

    def test_arrays_are_read_only(self):
        a = SourceAmplitudes.uniform(3)
        with pytest.raises(ValueError):
            a.magnitudes[0] = 1.0

    def test_complex_overlaps_rejected(self):
        with pytest.raises(InvalidParameterError):
            DetectorOverlaps(np.array([[1, 0.5j], [-0.5j, 1]]))

    def test_modes(self):
        assert_allclose(DetectorOverlaps.parallel(3).matrix, np.ones((3, 3)))
        assert_allclose(DetectorOverlaps.orthogonal(3).matrix, np.eye(3))


class TestValidate:
    def test_presets_are_clean(self, neon, c60):
        assert len(validate(neon)) == 0
        assert len(validate(c60)) == 0

    def test_presets_satisfy_fraunhofer(self, neon, c60):
        assert neon.fraunhofer_number < 0.01
        assert c60.fraunhofer_number < 0.01

    def test_unnormalized_amplitudes(self, neon):
        cfg = neon.with_slits(2)
        bad = type(cfg)(cfg.quanton, cfg.slits, SourceAmplitudes([1.0, 1.0], [0, 0]),
                        cfg.detector, cfg.environment, cfg.screen)
        msgs = [v.message for v in validate(bad).errors]
        assert any("amplitude normalization" in m for m in msgs)

    def test_fraunhofer_violation(self, neon):
        # pi (50 um)^2 / (0.018 um * 37 mm) = 11.79
        from dataclasses import replace
        wide = replace(neon, slits=replace(neon.slits, width=50e-6))
        assert_allclose(wide.fraunhofer_number, 11.79276522, rtol=1e-9)
        errs = validate(wide).errors
        assert [v.field for v in errs] == ["fraunhofer"]

    def test_fraunhofer_warning_band(self, neon):
        from dataclasses import replace
        eps = math.sqrt(0.05 * neon.quanton.wavelength * neon.screen.L / math.pi)
        cfg = replace(neon, slits=replace(neon.slits, width=eps))
        report = validate(cfg)
        assert report.ok and [v.field for v in report.warnings] == ["fraunhofer"]

    def test_non_psd_overlaps(self, neon):
        cfg = neon.with_slits(3)
        O = np.array([[1, 1, 0], [1, 1, 1], [0, 1, 1.0]])
        bad = type(cfg)(cfg.quanton, cfg.slits, cfg.amplitudes, DetectorOverlaps(O),
                        cfg.environment, cfg.screen)
        assert any("semidefinite" in v.message for v in validate(bad).errors)

    def test_negative_gamma(self, neon):
        bad = neon.with_environment(-1.0, 1.0)
        assert "env.gamma" in validate(bad).fields()


class TestNondimensionalize:
    def test_neon_phi(self, neon):
        inst = nondimensionalize(neon, neon.flight_time)
        assert_allclose(inst.phi, NEON_PHI, rtol=1e-12)

    def test_length_unit(self, neon):
        inst = nondimensionalize(neon.with_screen(x_min=neon.slits.spacing, x_max=2e-5, points=3),
                                 neon.flight_time)
        assert_allclose(inst.x_hat[0], 1.0, rtol=1e-15)

    def test_no_coupling_means_no_decoherence(self, neon):
        inst = nondimensionalize(neon.with_environment(0.0, 0.0), neon.flight_time)
        assert inst.kappa == 0.0

    def test_kappa_matches_ratio(self, neon):
        cfg = neon.with_environment(1.0, 2.5e-3)
        inst = nondimensionalize(cfg, cfg.flight_time)
        assert_allclose(inst.kappa, cfg.flight_time / cfg.tau_d(), rtol=1e-14)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), gamma=st.floats(0, 10), t_frac=st.floats(0.1, 3))
    def test_round_trip(self, seed, gamma, t_frac):
        cfg = random_fraunhofer_config(np.random.default_rng(seed))
        cfg = cfg.with_environment(gamma, 1e-3) if gamma > 0 else cfg
        t = t_frac * cfg.flight_time
        back, t2 = redimensionalize(nondimensionalize(cfg, t))
        assert_allclose(t2, t, rtol=1e-12)
        assert_allclose(back.quanton.mass, cfg.quanton.mass, rtol=1e-12)
        assert_allclose(back.quanton.wavelength, cfg.quanton.wavelength, rtol=1e-12)
        assert_allclose(back.screen.L, cfg.screen.L, rtol=1e-12)
        assert_allclose(back.slits.width, cfg.slits.width, rtol=1e-12)
        assert_allclose(back.slits.spacing, cfg.slits.spacing, rtol=1e-12)
        assert_allclose(back.environment.gamma, cfg.environment.gamma, rtol=1e-12)
        assert_allclose(back.diffusion, cfg.diffusion, rtol=1e-12, atol=0)
        assert_allclose(back.screen.grid(), cfg.screen.grid(), rtol=1e-12)

    def test_dimensionless_fraunhofer_number(self, neon):
        inst = nondimensionalize(neon, neon.flight_time)
        assert_allclose(inst.fraunhofer_number, neon.fraunhofer_number, rtol=1e-13)


class TestPresets:
    def test_neon_spacing(self):
        assert load_preset("neon").slits.spacing == 6e-6

    def test_c60_distance(self):
        assert load_preset("c60").screen.L == 1.25

    def test_unknown(self):
        with pytest.raises(InvalidParameterError, match="neon, c60"):
            load_preset("xenon")

    def test_catalog(self):
        assert preset_names() == ["neon", "c60"]

    def test_defaults(self, neon):
        assert neon.n == 4
        assert neon.environment.gamma == 0.0
        assert neon.detector.mode == "parallel"
        assert_allclose(0.5 * (neon.screen.x_min + neon.screen.x_max), neon.slits.pattern_center)

    def test_tau_d(self):
        cfg = load_preset("neon").with_environment(1.0, 2.5e-3)
        assert_allclose(cfg.tau_d(), 12 * HBAR**2 / (NEON_D_GAMMA1 * 36e-12), rtol=1e-12)

    def test_with_kappa(self, neon):
        cfg = neon.with_kappa(0.25)
        assert_allclose(cfg.kappa(), 0.25, rtol=1e-14)


MINIMAL = """\
# two slits, equal amplitudes
quanton.mass_kg = 3.349e-26
quanton.lambda_m = 1.8e-8
slits.n = 2
slits.spacing_m = 6e-6
slits.width_m = 1e-6
screen.L_m = 0.037
"""


class TestConfigFiles:
    def test_defaults(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text(MINIMAL)
        cfg = load_config(p)
        assert_allclose(cfg.amplitudes.magnitudes, [1 / math.sqrt(2)] * 2, rtol=1e-15)
        assert cfg.detector.mode == "parallel"
        assert cfg.environment == EnvironmentSpec(0.0, 0.0)

    def test_missing_mass(self):
        text = MINIMAL.replace("quanton.mass_kg = 3.349e-26\n", "")
        with pytest.raises(ConfigError, match="quanton.mass") as exc:
            config_from_text(text)
        assert exc.value.field == "quanton.mass_kg"

    def test_unnormalized(self):
        with pytest.raises(ConfigError, match="normalization"):
            config_from_text(MINIMAL + "amplitudes.c = 0.6, 0.7348469228349534\n")  # sum 0.9

    def test_parse_error_line_number(self):
        with pytest.raises(ConfigError, match="line 3") as exc:
            config_from_text("quanton.mass_kg = 1e-26\n\nslits.n 2\n")
        assert exc.value.line == 3

    def test_unknown_and_duplicate_keys(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config_text("foo = 1\n")
        with pytest.raises(ConfigError, match="line 2: slits.n|duplicate"):
            parse_config_text("slits.n = 2\nslits.n = 3\n")

    def test_bad_number(self):
        with pytest.raises(ConfigError, match="slits.spacing_m"):
            config_from_text(MINIMAL.replace("6e-6", "six"))

    def test_complex_rejected(self):
        with pytest.raises(ConfigError, match="complex"):
            config_from_text(MINIMAL + "amplitudes.c = 0.7071067811865476, 0.7071067811865476j\n")

    def test_matrix_detector(self):
        cfg = config_from_text(MINIMAL + "detector.mode = matrix\ndetector.matrix = 1, 0.3, 0.3, 1\n")
        assert_allclose(cfg.detector.matrix, [[1, 0.3], [0.3, 1]])

    def test_full_round_trip(self, neon):
        from decolab.io import format_config
        cfg = neon.with_environment(0.5, 1e-3)
        back = config_from_text(format_config(cfg))
        assert_allclose(back.screen.grid(), cfg.screen.grid(), rtol=0)
        assert back.environment == cfg.environment
        assert back.quanton == cfg.quanton and back.slits == cfg.slits

    def test_environment_keys(self):
        cfg = config_from_text(MINIMAL + "env.gamma_per_s = 2\nenv.T_K = 3\n")
        assert_allclose(cfg.diffusion, 2 * 3.349e-26 * 2 * K_B * 3, rtol=1e-15)
