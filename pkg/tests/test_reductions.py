import random
from fractions import Fraction

import pytest

from plclab.ffield import PrimeField
from plclab.protocol_core import iplc_capacity, jplc_capacity, random_dataset
from plclab.reductions import (
    SideInfoInstance,
    random_side_info_instance,
    solve_pir_psi_via_jplc,
    solve_pir_si_via_iplc,
)

F3 = PrimeField(3)


def test_side_info_instance_validation():
    with pytest.raises(ValueError):
        SideInfoInstance(2, (2, 3), ((0, 1), (1, 1)))
    with pytest.raises(ValueError):
        SideInfoInstance(1, (2, 2), ((0, 1), (1, 1)))
    with pytest.raises(ValueError):
        SideInfoInstance(1, (2,), ((0, 1), (1, 1)))


def test_random_instance_respects_bounds():
    ds = random_dataset(F3, 5, 4, random.Random(0))
    rng = random.Random(1)
    for _ in range(30):
        inst = random_side_info_instance(ds, 2, rng)
        assert inst.target_index not in inst.side_indices
        assert len(inst.side_indices) == 2
        for idx, vals in zip(inst.side_indices, inst.side_values):
            assert vals == ds.stream(idx).entries


def test_psi_recovers_target_and_rate():
    rng = random.Random(5)
    ds = random_dataset(F3, 3, 8, rng)
    inst = random_side_info_instance(ds, 1, rng)
    out = solve_pir_psi_via_jplc(2, ds, inst, rng)
    assert tuple(out.recovered) == ds.stream(inst.target_index).entries
    assert out.report.rate == Fraction(2, 3)
    assert out.report.rate == jplc_capacity(2, 3, 2)


def test_si_recovers_target_and_rate():
    rng = random.Random(6)
    ds = random_dataset(F3, 5, 16, rng)
    inst = random_side_info_instance(ds, 1, rng)
    out = solve_pir_si_via_iplc(2, ds, inst, rng)
    assert tuple(out.recovered) == ds.stream(inst.target_index).entries
    assert out.report.rate == Fraction(4, 7)
    assert out.report.rate == iplc_capacity(2, 5, 2)


@pytest.mark.parametrize("num_side", [0, 1, 2])
def test_psi_random_trials(num_side):
    rng = random.Random(10 + num_side)
    field = PrimeField(5)
    k = 4
    t = 2 ** _family(k, num_side + 1)
    for _ in range(20):
        ds = random_dataset(field, k, t, rng)
        inst = random_side_info_instance(ds, num_side, rng)
        out = solve_pir_psi_via_jplc(2, ds, inst, rng)
        assert tuple(out.recovered) == ds.stream(inst.target_index).entries


def _family(k, d):
    from math import comb

    return comb(k, d)


def test_si_random_trials():
    rng = random.Random(20)
    ds_len = 16
    for _ in range(20):
        ds = random_dataset(F3, 5, ds_len, rng)
        inst = random_side_info_instance(ds, 1, rng)
        out = solve_pir_si_via_iplc(2, ds, inst, rng)
        assert tuple(out.recovered) == ds.stream(inst.target_index).entries


def test_coded_demand_hides_target_inside_support():
    """The demanded support is the union of side set and target."""
    rng = random.Random(30)
    ds = random_dataset(F3, 5, 16, rng)
    inst = random_side_info_instance(ds, 1, rng)
    out = solve_pir_si_via_iplc(2, ds, inst, rng)
    assert set(out.demand.indices) == set(inst.side_indices) | {
        inst.target_index
    }
