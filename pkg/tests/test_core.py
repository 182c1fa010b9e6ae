import numpy as np
import pytest

from gbridge.core import SamplePath, SeedSpec, TimeGrid, increments, make_uniform_grid, path_from_increments
from gbridge.errors import InvalidArgumentError


class TestTimeGrid:
    def test_uniform_grid_nodes(self):
        grid = make_uniform_grid(2.0, 4)
        np.testing.assert_allclose(grid.times, [0.0, 0.5, 1.0, 1.5, 2.0])
        assert grid.n == 4
        assert grid.T == 2.0

    @pytest.mark.parametrize('times', [[0.1, 0.5, 1.0], [0.0, 0.5, 0.5, 1.0], [0.0]])
    def test_rejects_bad_times(self, times):
        with pytest.raises(InvalidArgumentError):
            TimeGrid(np.array(times))

    @pytest.mark.parametrize('n', [0, -3, 2.5])
    def test_rejects_bad_segment_count(self, n):
        with pytest.raises(InvalidArgumentError):
            make_uniform_grid(1.0, n)

    def test_times_are_read_only(self):
        grid = make_uniform_grid(1.0, 8)
        with pytest.raises(ValueError):
            grid.times[1] = 0.3

    def test_index_of_tolerates_rounding(self):
        grid = make_uniform_grid(1.0, 10)
        assert grid.index_of(0.3) == 3
        assert grid.index_of(0.1 + 0.2) == 3
        with pytest.raises(InvalidArgumentError):
            grid.index_of(0.35)

    def test_last_index_before(self):
        grid = make_uniform_grid(1.0, 10)
        assert grid.last_index_before(0.35) == 3
        assert grid.last_index_before(0.9) == 9
        assert grid.last_index_before(1.0 - 0.1) == 9


class TestSamplePath:
    def test_value_at_and_increments(self):
        grid = make_uniform_grid(1.0, 4)
        path = SamplePath(grid, [0.0, 1.0, 3.0, 2.0, 5.0])
        assert path.value_at(0.5) == 3.0
        np.testing.assert_allclose(increments(path), [1.0, 2.0, -1.0, 3.0])

    def test_round_trip_through_increments(self):
        grid = make_uniform_grid(1.0, 4)
        path = path_from_increments(grid, [1.0, 2.0, -1.0, 3.0], start=0.5)
        np.testing.assert_allclose(path.values, [0.5, 1.5, 3.5, 2.5, 5.5])

    def test_length_must_match_grid(self):
        with pytest.raises(InvalidArgumentError):
            SamplePath(make_uniform_grid(1.0, 4), np.zeros(4))


class TestSeedSpec:
    def test_same_stream_same_numbers(self):
        a = SeedSpec(7, 3).generator().standard_normal(5)
        b = SeedSpec(7, 3).generator().standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = SeedSpec(7, 0).generator().standard_normal(5)
        b = SeedSpec(7, 0).stream(1).generator().standard_normal(5)
        assert not np.array_equal(a, b)

    def test_rejects_negative(self):
        with pytest.raises(InvalidArgumentError):
            SeedSpec(-1)
        with pytest.raises(InvalidArgumentError):
            SeedSpec(1, -2)
