"""Tests for utility functions"""

import numpy as np
import pytest

from trajinfo.utils import (
    derive_seed,
    log,
    make_rng,
    parse_seed_list,
    set_verbose,
    warn,
    wrap_angle,
    wrap_periodic,
)


class TestAngleUtils:
    """Test cases for angle wrapping"""

    def test_wrap_angle_range(self):
        angles = np.linspace(-10.0, 10.0, 101)
        wrapped = wrap_angle(angles)
        assert np.all(wrapped >= -np.pi)
        assert np.all(wrapped < np.pi)
        # same point on the circle
        np.testing.assert_allclose(np.cos(wrapped), np.cos(angles), atol=1e-12)
        np.testing.assert_allclose(np.sin(wrapped), np.sin(angles), atol=1e-12)

    def test_wrap_angle_pi_maps_to_minus_pi(self):
        assert wrap_angle(np.pi) == pytest.approx(-np.pi)

    def test_wrap_periodic_only_touches_listed_dims(self):
        values = np.array([[4.0, 4.0, 4.0]])
        wrapped = wrap_periodic(values, (1,))
        assert wrapped[0, 0] == 4.0
        assert wrapped[0, 2] == 4.0
        assert wrapped[0, 1] == pytest.approx(4.0 - 2.0 * np.pi)
        # input untouched
        assert values[0, 1] == 4.0

    def test_wrap_periodic_without_dims_is_copy(self):
        values = np.array([1.0, 2.0])
        wrapped = wrap_periodic(values, ())
        np.testing.assert_array_equal(wrapped, values)
        assert wrapped is not values


class TestSeedUtils:
    """Test cases for seed derivation and parsing"""

    def test_derive_seed_is_deterministic(self):
        assert derive_seed(3, 1, 2) == derive_seed(3, 1, 2)

    def test_derive_seed_depends_on_tags(self):
        seeds = {derive_seed(0), derive_seed(0, 1), derive_seed(0, 2), derive_seed(1), derive_seed(0, 1, 0)}
        assert len(seeds) == 5

    def test_make_rng_streams_repeat(self):
        a = make_rng(7, 4).standard_normal(5)
        b = make_rng(7, 4).standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_parse_seed_range(self):
        assert parse_seed_list("0..4") == [0, 1, 2, 3, 4]

    def test_parse_seed_list(self):
        assert parse_seed_list("1,3,5") == [1, 3, 5]

    def test_parse_seed_mixture(self):
        assert parse_seed_list("0..2, 7") == [0, 1, 2, 7]

    @pytest.mark.parametrize("text", ["", "a", "4..0", "1..x", ","])
    def test_parse_seed_rejects_bad_input(self, text):
        with pytest.raises(ValueError):
            parse_seed_list(text)


class TestConsole:
    """Test cases for console helpers"""

    def test_quiet_mode_keeps_warnings(self, capsys):
        set_verbose(False)
        try:
            log("status-line-hidden")
            warn("warning-line-shown")
        finally:
            set_verbose(True)
        err = capsys.readouterr().err
        assert "status-line-hidden" not in err
        assert "warning-line-shown" in err

    def test_verbose_mode_prints_status(self, capsys):
        set_verbose(True)
        log("status-line-visible")
        assert "status-line-visible" in capsys.readouterr().err
