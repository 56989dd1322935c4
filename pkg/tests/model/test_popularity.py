"""Tests for the Zipf popularity model."""

import numpy as np
import pytest

from icnlab.errors import IndexOutOfRangeError, InvalidParameterError
from icnlab.model.popularity import PopularityModel, new_popularity


class TestPopularityModel:
    """Test popularity masses and tail sums."""

    def test_uniform_popularity(self):
        """Test that gamma=0 gives equal masses and linear tails."""
        pm = new_popularity(4, 0.0)

        assert pm.masses.tolist() == pytest.approx([0.25] * 4)
        assert pm.tails.tolist() == pytest.approx([1.0, 1.0, 0.75, 0.5, 0.25, 0.0])

    def test_zipf_masses(self):
        """Test that gamma=1 over two contents gives q = (2/3, 1/3)."""
        pm = new_popularity(2, 1.0)

        assert pm.omega == pytest.approx(2 / 3)
        assert pm.mass(1) == pytest.approx(2 / 3)
        assert pm.mass(2) == pytest.approx(1 / 3)

    def test_masses_sum_to_one_and_decrease(self):
        """Test normalization and monotone masses for a skewed law."""
        pm = new_popularity(100, 0.8)

        assert float(np.sum(pm.masses)) == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(pm.masses) < 0)

    def test_boundary_masses(self):
        """Test that q(0) and q(M+1) are exactly zero."""
        pm = new_popularity(5, 0.5)

        assert pm.mass(0) == 0.0
        assert pm.mass(6) == 0.0
        assert pm.tail_mass(6) == 0.0
        assert pm.tail_mass(1) == pytest.approx(1.0)
        assert pm.tail_mass(0) == pm.tail_mass(1)

    def test_tail_matches_direct_sum(self):
        """Test that every tail equals the direct sum of the masses after it."""
        pm = new_popularity(30, 0.6)

        for k in range(1, 31):
            assert pm.tail_mass(k) == pytest.approx(float(np.sum(pm.masses[k - 1 :])), abs=1e-12)

    def test_single_content(self):
        """Test that M=1 puts all demand on the only content."""
        pm = new_popularity(1, 0.7)

        assert pm.mass(1) == pytest.approx(1.0)
        assert pm.tail_mass(2) == 0.0

    def test_arrays_are_read_only(self):
        """Test that callers cannot mutate the cached arrays."""
        pm = new_popularity(3, 0.5)

        with pytest.raises(ValueError):
            pm.masses[0] = 1.0


class TestPopularityValidation:
    """Test rejection of invalid parameters."""

    def test_gamma_out_of_range(self):
        """Test that gamma above 1 is rejected with a readable message."""
        with pytest.raises(InvalidParameterError, match=r"gamma out of \[0,1\]"):
            new_popularity(10, 1.5)

    def test_negative_gamma(self):
        """Test that a negative gamma is rejected."""
        with pytest.raises(InvalidParameterError):
            PopularityModel(num_contents=10, gamma=-0.1)

    def test_zero_contents(self):
        """Test that M must be at least 1."""
        with pytest.raises(InvalidParameterError) as exc:
            new_popularity(0, 0.5)

        assert exc.value.field == "m"

    def test_index_out_of_range(self):
        """Test that indices beyond M+1 raise."""
        pm = new_popularity(3, 0.5)

        with pytest.raises(IndexOutOfRangeError):
            pm.mass(5)
        with pytest.raises(IndexOutOfRangeError):
            pm.tail_mass(-1)
