import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from polar_fault_lab.core.analysis.bounds import (
    CovarianceMatrix,
    FerBounds,
    bounds_sweep_blocklength,
    bounds_sweep_rate,
    compute_covariance,
    covariance_step,
    exhaustive_statistics,
    fer_bounds,
    iter_covariance,
    upper_bound_only,
)
from polar_fault_lab.core.analysis.construction import CodeSpec, InfoSet, construct_code
from polar_fault_lab.core.analysis.polarization import compute_z_table, iter_z_tables
from polar_fault_lab.core.errors import ConfigError, ResourceLimitError


def fault_free_covariance(n, p):
    """Reference recursion without any fault terms"""
    tables = list(iter_z_tables(n, p, 0.0))
    C = np.array([[p * (1 - p)]])
    for s in range(1, n + 1):
        Z = tables[s - 1].values
        zs, zt = Z[:, None], Z[None, :]
        c2 = C * C
        new = np.empty((2 * len(Z), 2 * len(Z)))
        new[0::2, 0::2] = 2.0 * ((1.0 - zs) * (1.0 - zt)) * C + c2
        new[0::2, 1::2] = 2.0 * ((1.0 - zs) * zt) * C - c2
        new[1::2, 0::2] = 2.0 * (zs * (1.0 - zt)) * C - c2
        new[1::2, 1::2] = 2.0 * (zs * zt) * C + c2
        z_next = tables[s].values
        np.fill_diagonal(new, z_next * (1.0 - z_next))
        C = new
    return C


class TestCovariance:
    """Covariance recursion of the erasure indicators"""

    def test_level_zero(self):
        cov = compute_covariance(CodeSpec(0, 1, 0.3, 1e-6))
        assert_allclose(cov.entries, [[0.3 * 0.7]])

    def test_first_step(self):
        z0 = compute_z_table(0, 0.5, 0.0)
        cov = covariance_step(CovarianceMatrix(0, np.array([[0.25]])), z0, 0.0)
        assert cov.level == 1
        assert cov[0, 1] == pytest.approx(0.0625)
        assert cov[1, 0] == pytest.approx(0.0625)
        assert_allclose(cov.diagonal(), [0.1875, 0.1875])

    def test_first_minus_minus_entry(self):
        cov = compute_covariance(CodeSpec(2, 0, 0.5, 0.0))
        # 2 * (1 - 3/4) * (1 - 1/4) * 1/16 + (1/16)^2
        assert cov[0, 2] == pytest.approx(0.02734375, abs=1e-15)
        assert cov[2, 0] == cov[0, 2]
        assert cov[0, 2] == pytest.approx(exhaustive_statistics(2, 0.5, 0.0)[1][0, 2], abs=1e-12)

    @pytest.mark.parametrize("p", [0.3, 0.5])
    @pytest.mark.parametrize("delta", [0.0, 0.25])
    def test_matches_exhaustive_enumeration(self, p, delta):
        mean, oracle = exhaustive_statistics(2, p, delta)
        spec = CodeSpec(2, 0, p, delta)
        assert_allclose(compute_covariance(spec).entries, oracle, rtol=0, atol=1e-10)
        assert_allclose(compute_z_table(2, p, delta).values, mean, rtol=0, atol=1e-10)

    @pytest.mark.parametrize("n, n_p", [(2, 1), (2, 2), (1, 0)])
    def test_matches_enumeration_with_protection(self, n, n_p):
        mean, oracle = exhaustive_statistics(n, 0.4, 0.2, n_p)
        cov = compute_covariance(CodeSpec(n, 0, 0.4, 0.2, n_p))
        assert_allclose(cov.entries, oracle, rtol=0, atol=1e-10)
        assert_allclose(compute_z_table(n, 0.4, 0.2, n_p).values, mean, rtol=0, atol=1e-10)

    @pytest.mark.parametrize("n", [1, 4, 7])
    def test_fault_free_recursion_bitwise(self, n):
        cov = compute_covariance(CodeSpec(n, 0, 0.5, 0.0))
        assert_array_equal(cov.entries, fault_free_covariance(n, 0.5))

    def test_full_protection_equals_fault_free(self):
        protected = compute_covariance(CodeSpec(6, 0, 0.5, 1e-3, 7))
        assert_array_equal(protected.entries, compute_covariance(CodeSpec(6, 0, 0.5, 0.0)).entries)

    def test_symmetric_and_diagonal(self):
        for z, cov in iter_covariance(6, 0.37, 0.02):
            assert_array_equal(cov.entries, cov.entries.T)
            assert_allclose(cov.diagonal(), z.values * (1 - z.values), rtol=0, atol=1e-12)

    def test_parallel_rows_identical(self):
        spec_args = (9, 0.5, 1e-3)
        serial = list(iter_covariance(*spec_args, max_workers=1))[-1][1]
        parallel = list(iter_covariance(*spec_args, max_workers=4))[-1][1]
        assert_array_equal(serial.entries, parallel.entries)
        assert parallel.level == 9

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigError):
            covariance_step(CovarianceMatrix(0, np.array([[0.25]])), compute_z_table(1, 0.5, 0.0), 0.0)
        with pytest.raises(ConfigError):
            CovarianceMatrix(2, np.zeros((3, 3)))

    def test_cap(self):
        with pytest.raises(ResourceLimitError, match="bytes"):
            compute_covariance(CodeSpec(14, 0, 0.5, 1e-6))
        with pytest.raises(ResourceLimitError):
            compute_covariance(CodeSpec(6, 0, 0.5, 1e-6), n_max=5)


class TestFerBounds:
    """Union and pairwise bounds"""

    def test_empty_information_set(self):
        spec = CodeSpec(4, 0, 0.5, 1e-6)
        bounds = fer_bounds(spec, InfoSet(4, ()))
        assert (bounds.upper, bounds.lower) == (0.0, 0.0)

    def test_single_channel(self):
        spec = CodeSpec(5, 1, 0.5, 1e-3)
        z, info = construct_code(spec)
        bounds = fer_bounds(spec, info)
        assert bounds.upper == bounds.lower == z.values[info.indices[0]]

    def test_uncoded(self):
        bounds = fer_bounds(CodeSpec(0, 1, 0.5, 1e-6), InfoSet(0, (0,)))
        assert bounds.upper == bounds.lower == 0.5

    def test_bounds_tight_at_low_rate(self):
        for rate in (0.1, 0.2, 0.3):
            spec = CodeSpec.from_rate(10, rate, 0.5, 1e-6)
            bounds = fer_bounds(spec, construct_code(spec)[1])
            assert not bounds.upper_trivialized
            assert bounds.lower <= bounds.upper
            assert (bounds.upper - bounds.lower) / bounds.upper < 0.05

    @pytest.mark.slow
    def test_trivial_substitution_at_high_rate(self):
        spec = CodeSpec.from_rate(12, 0.45, 0.5, 1e-6)
        bounds = fer_bounds(spec, construct_code(spec)[1], n_max=12)
        assert bounds.upper_trivialized and bounds.upper == 1.0
        assert bounds.union_sum > 1.0
        assert bounds.lower <= bounds.upper

    def test_lower_at_least_max_z(self):
        spec = CodeSpec.from_rate(8, 0.6, 0.5, 1e-2)
        z, info = construct_code(spec)
        bounds = fer_bounds(spec, info)
        assert bounds.lower >= min(z.values[list(info.indices)].max(), bounds.upper)

    def test_mismatched_information_set(self):
        with pytest.raises(ConfigError):
            fer_bounds(CodeSpec(3, 1, 0.5, 0.0), InfoSet(2, (1,)))

    def test_upper_only_matches(self):
        spec = CodeSpec.from_rate(8, 0.25, 0.5, 1e-6)
        assert upper_bound_only(spec) == fer_bounds(spec, construct_code(spec)[1]).upper

    def test_overlaps(self):
        a = FerBounds(upper=0.3, lower=0.1)
        assert a.overlaps(FerBounds(upper=0.5, lower=0.3))
        assert not a.overlaps(FerBounds(upper=0.5, lower=0.31))
        assert a.contains(0.2)


class TestSweeps:
    """Rate and blocklength sweeps"""

    def test_rate_zero(self):
        ((rate, bounds),) = bounds_sweep_rate(6, 0.5, 1e-6, 0, [0.0])
        assert rate == 0.0
        assert (bounds.upper, bounds.lower) == (0.0, 0.0)

    def test_upper_nondecreasing_in_rate(self):
        rates = [r / 100 for r in range(1, 60)]
        uppers = [b.upper for _, b in bounds_sweep_rate(8, 0.5, 1e-6, 0, rates)]
        assert all(a <= b for a, b in zip(uppers, uppers[1:]))

    def test_sweep_matches_single_evaluation(self):
        for rate, bounds in bounds_sweep_rate(7, 0.5, 1e-4, 2, [0.1, 0.3]):
            spec = CodeSpec.from_rate(7, rate, 0.5, 1e-4, 2)
            assert bounds == fer_bounds(spec, construct_code(spec)[1])

    def test_blocklength_single_pass_matches(self):
        sweep = dict(bounds_sweep_blocklength(0.25, 0.5, 1e-6, range(0, 9)))
        for n in (0, 3, 8):
            spec = CodeSpec.from_rate(n, 0.25, 0.5, 1e-6)
            assert sweep[n] == fer_bounds(spec, construct_code(spec)[1])

    def test_full_protection_bitwise(self):
        rates = [0.1, 0.25, 0.4]
        protected = bounds_sweep_rate(8, 0.5, 1e-6, 9, rates)
        fault_free = bounds_sweep_rate(8, 0.5, 0.0, 0, rates)
        assert protected == fault_free

    def test_cap_propagates(self):
        with pytest.raises(ResourceLimitError):
            bounds_sweep_blocklength(0.25, 0.5, 1e-6, [4, 9], n_max=8)


class TestFigureTrends:
    """Qualitative behaviour of the bound curves"""

    @pytest.mark.parametrize("rate", [0.05, 0.1, 0.15])
    def test_faults_make_long_codes_worse(self, rate):
        uppers = [upper_bound_only(CodeSpec.from_rate(n, rate, 0.5, 1e-6)) for n in (8, 10, 12)]
        assert uppers[2] > uppers[0]

    def test_low_rate_upper_grows_with_length(self):
        uppers = [upper_bound_only(CodeSpec.from_rate(n, 0.1, 0.5, 1e-6)) for n in (8, 10, 12)]
        assert uppers[0] < uppers[1] < uppers[2]

    def test_protection_restores_gain(self):
        short = upper_bound_only(CodeSpec.from_rate(8, 0.25, 0.5, 1e-6, 3))
        long = upper_bound_only(CodeSpec.from_rate(12, 0.25, 0.5, 1e-6, 7))
        assert long < short

    def test_upper_nonincreasing_in_protection(self):
        uppers = [
            upper_bound_only(CodeSpec.from_rate(10, 0.2, 0.5, 1e-6, n_p)) for n_p in range(12)
        ]
        assert all(a >= b for a, b in zip(uppers, uppers[1:]))
