import random

import pytest

from plclab.ffield import PrimeField
from plclab.gflinalg import VectorGF
from plclab.protocol_core import Demand, iplc_capacity, jplc_capacity, random_dataset
from plclab.protocols import (
    InvariantViolation,
    demand_family_streams,
    family_size,
    minimum_stream_length,
    run_iplc,
    run_jplc,
)

F3 = PrimeField(3)


def test_family_size_values():
    assert family_size("jplc", 3, 2) == 3
    assert family_size("jplc", 4, 2) == 6
    assert family_size("iplc", 6, 2) == 3
    assert family_size("iplc", 5, 2) == 4
    with pytest.raises(ValueError):
        family_size("other", 3, 2)


def test_minimum_stream_length():
    assert minimum_stream_length("jplc", 2, 3, 2) == 8
    assert minimum_stream_length("iplc", 2, 5, 2) == 16
    assert minimum_stream_length("iplc", 3, 6, 2) == 27


def test_run_jplc_end_to_end():
    rng = random.Random(0)
    ds = random_dataset(F3, 3, 8, rng)
    demand = Demand((2, 3), VectorGF([2, 1], F3))
    result = run_jplc(2, ds, demand, rng, verify=True)
    assert tuple(result.recovered) == demand.evaluate(ds).entries
    assert result.report.rate == jplc_capacity(2, 3, 2)
    assert result.report.downloaded_symbols == 12


def test_run_iplc_end_to_end():
    rng = random.Random(1)
    ds = random_dataset(F3, 5, 16, rng)
    demand = Demand((2, 5), VectorGF([1, 1], F3))
    result = run_iplc(2, ds, demand, rng, verify=True)
    assert tuple(result.recovered) == demand.evaluate(ds).entries
    assert result.report.rate == iplc_capacity(2, 5, 2)
    assert result.report.downloaded_symbols == 28


def test_run_rejects_bad_stream_length():
    rng = random.Random(2)
    ds = random_dataset(F3, 3, 9, rng)  # 9 is not a multiple of 2^3
    demand = Demand((1, 2), VectorGF([1, 1], F3))
    with pytest.raises(ValueError):
        run_jplc(2, ds, demand, rng)


def test_demand_family_contains_planted_stream():
    rng = random.Random(3)
    ds = random_dataset(F3, 3, 8, rng)
    demand = Demand((1, 3), VectorGF([1, 2], F3))
    result = run_jplc(2, ds, demand, rng)
    streams = demand_family_streams(result.encoder, ds)
    v1 = demand.coefficients.entries[0]
    k_star = result.encoder.demand_index
    target = demand.evaluate(ds).entries
    assert tuple((v1 * z) % 3 for z in streams[k_star - 1]) == target


def test_repetitions_scale_download():
    rng = random.Random(4)
    ds = random_dataset(F3, 3, 24, rng)  # three repetitions of N^M = 8
    demand = Demand((1, 2), VectorGF([1, 1], F3))
    result = run_jplc(2, ds, demand, rng, verify=True)
    assert result.report.downloaded_symbols == 36
    assert result.report.rate == jplc_capacity(2, 3, 2)


def test_invariant_violation_is_assertion_family():
    assert issubclass(InvariantViolation, AssertionError)


@pytest.mark.parametrize("seed", range(5))
def test_jplc_many_seeds_verify(seed):
    rng = random.Random(seed)
    field = PrimeField(5)
    ds = random_dataset(field, 4, 2**6, rng)
    demand = Demand((1, 4), VectorGF([3, 2], field))
    result = run_jplc(2, ds, demand, rng, verify=True)
    assert result.report.rate == jplc_capacity(2, 4, 2)
