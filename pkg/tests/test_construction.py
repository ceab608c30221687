import numpy as np
import pytest

from polar_fault_lab.core.analysis.construction import (
    CodeSpec,
    InfoSet,
    code_definition,
    construct_code,
    good_channels,
    k_from_rate,
    load_code_definition,
    protected_fraction_limit,
    protection_report,
    select_info_set,
)
from polar_fault_lab.core.analysis.polarization import ZTable, compute_z_table
from polar_fault_lab.core.errors import ConfigError


class TestCodeSpec:
    """Validation and serialization of code parameters"""

    def test_properties(self):
        spec = CodeSpec(4, 6, 0.5, 1e-6)
        assert spec.N == 16
        assert spec.rate == 6 / 16

    def test_from_rate(self):
        assert CodeSpec.from_rate(7, 0.125, 0.5, 1e-6).k == 16

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n=-1, k=0, p=0.5, delta=0.0),
            dict(n=3, k=9, p=0.5, delta=0.0),
            dict(n=3, k=2, p=1.2, delta=0.0),
            dict(n=3, k=2, p=0.5, delta=-0.1),
            dict(n=3, k=2, p=0.5, delta=0.0, protected_levels=5),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            CodeSpec(**kwargs)

    def test_dict_round_trip(self):
        spec = CodeSpec(5, 11, 0.3, 1e-4, 2)
        assert CodeSpec.from_dict(spec.to_dict()) == spec

    def test_replace(self):
        spec = CodeSpec(5, 11, 0.3, 1e-4)
        assert spec.replace(k=3) == CodeSpec(5, 3, 0.3, 1e-4)
        with pytest.raises(ConfigError):
            spec.replace(k=64)

    def test_missing_key(self):
        with pytest.raises(ConfigError):
            CodeSpec.from_dict({"n": 3, "k": 1, "p": 0.5})


class TestInfoSet:
    """Information set selection"""

    def test_best_channel_of_one_step(self):
        z = compute_z_table(1, 0.5, 0.0, 0)
        assert select_info_set(z, 1).indices == (1,)

    def test_empty_and_full(self):
        z = compute_z_table(3, 0.5, 1e-3)
        assert select_info_set(z, 0).indices == ()
        assert select_info_set(z, 8).indices == tuple(range(8))

    def test_k_out_of_range(self):
        z = compute_z_table(3, 0.5, 1e-3)
        with pytest.raises(ConfigError):
            select_info_set(z, 9)

    def test_ties_go_to_lower_index(self):
        z = ZTable(2, np.array([0.5, 0.2, 0.2, 0.2]))
        assert select_info_set(z, 2).indices == (1, 2)

    def test_order_preserving_rescale(self):
        z = compute_z_table(6, 0.4, 1e-3)
        for factor in (0.25, 2.0):
            scaled = ZTable(6, z.values * factor)
            assert select_info_set(scaled, 20) == select_info_set(z, 20)

    def test_mask_and_frozen(self):
        info = InfoSet(3, (6, 3, 7))
        assert info.indices == (3, 6, 7)
        assert info.mask().tolist() == [False, False, False, True, False, False, True, True]
        assert info.frozen_indices() == (0, 1, 2, 4, 5)
        assert 6 in info and 2 not in info

    def test_duplicates_and_range(self):
        with pytest.raises(ConfigError):
            InfoSet(3, (1, 1))
        with pytest.raises(ConfigError):
            InfoSet(3, (8,))

    @pytest.mark.parametrize("n, rate, k", [(7, 0.125, 16), (4, 0.1, 2), (5, 1.0, 32), (3, 0.5, 4)])
    def test_k_from_rate(self, n, rate, k):
        assert k_from_rate(n, rate) == k


class TestGoodChannels:
    """Good-channel sets and their monotonicity"""

    def test_threshold(self):
        z = ZTable(2, np.array([0.9, 0.1, 0.3, 0.01]))
        assert good_channels(z, 0.3) == frozenset({1, 2, 3})

    def test_nesting_under_channel_improvement(self):
        rng = np.random.default_rng(2024)
        for _ in range(20):
            n = int(rng.integers(1, 11))
            p2, p1 = sorted(rng.random(2))
            delta = float(rng.random() * 0.05)
            eta = float(rng.random())
            worse = good_channels(compute_z_table(n, p1, delta), eta)
            better = good_channels(compute_z_table(n, p2, delta), eta)
            assert worse <= better

    def test_nesting_under_decoder_improvement(self):
        rng = np.random.default_rng(99)
        for _ in range(20):
            n = int(rng.integers(1, 11))
            p = float(rng.random())
            d2, d1 = sorted(rng.random(2) * 0.1)
            eta = float(rng.random())
            assert good_channels(compute_z_table(n, p, d1), eta) <= good_channels(
                compute_z_table(n, p, d2), eta
            )


class TestProtection:
    """Hardware share and rate loss of protected levels"""

    def test_half_protected_decoder(self):
        report = protection_report(10, 5, 0.5, 1e-6)
        assert report.protected_units == 31
        assert report.total_units == 2047
        assert report.fraction == pytest.approx(1.514e-2, abs=1e-4)
        assert report.n_u == 6

    def test_unprotected(self):
        report = protection_report(7, 0, 0.4, 1e-3)
        assert report.protected_units == 0
        assert report.rate_loss == pytest.approx((1 - (1 - 1e-3) ** 8) * 0.6, abs=1e-15)

    def test_fully_protected(self):
        assert protection_report(10, 11, 0.5, 1e-6).rate_loss == 0.0

    def test_out_of_range(self):
        with pytest.raises(ConfigError):
            protection_report(10, 12, 0.5, 1e-6)

    def test_fraction_limit(self):
        assert protected_fraction_limit(5) == 1 / 32
        ratios = [protection_report(n, n + 1 - 3, 0.5, 0.0).fraction for n in (6, 10, 16)]
        assert ratios[-1] == pytest.approx(protected_fraction_limit(3), rel=1e-3)


class TestCodeDefinition:
    """Code definition documents"""

    def test_round_trip(self):
        spec = CodeSpec(6, 20, 0.5, 1e-6, 1)
        _, info = construct_code(spec)
        loaded_spec, loaded_info = load_code_definition(code_definition(spec, info))
        assert loaded_spec == spec
        assert loaded_info == info

    def test_without_info_set(self):
        spec = CodeSpec(4, 5, 0.5, 0.0)
        _, info = load_code_definition(spec.to_dict())
        assert info == construct_code(spec)[1]

    def test_size_mismatch(self):
        doc = {**CodeSpec(3, 2, 0.5, 0.0).to_dict(), "info_set": [5, 6, 7]}
        with pytest.raises(ConfigError):
            load_code_definition(doc)
