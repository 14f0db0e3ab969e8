import random
from itertools import combinations

import pytest

from plclab.ffield import PrimeField
from plclab.gflinalg import MatrixGF, VectorGF, rank, vec_mat
from plclab.jplc_encoder import (
    JplcDraws,
    build_grs_matrix,
    derive_combination_vectors,
    enumerate_supports,
)
from plclab.protocol_core import Demand

F3 = PrimeField(3)


def _golden_encoder():
    """N=2, K=3, D=2, q=3, demand X_1 + 2 X_3, with pinned draws."""
    demand = Demand((1, 3), VectorGF([1, 2], F3))
    draws = JplcDraws(omega_assignment=(0, 1, 2), padding=(1,))
    return build_grs_matrix(2, demand, 3, F3, random.Random(0), draws)


def test_golden_generator_matrix():
    enc = _golden_encoder()
    assert enc.generator.rows == ((1, 2, 1), (0, 1, 1))


def test_golden_row_space_vectors():
    enc = _golden_encoder()
    assert [u.entries for u in enc.row_space_vectors] == [
        (1, 1, 0),
        (1, 0, 2),
        (0, 1, 1),
    ]


def test_golden_combination_vectors():
    enc = _golden_encoder()
    assert [c.entries for c in enc.combination_vectors] == [
        (1, 2),
        (1, 1),
        (0, 1),
    ]


def test_golden_demand_index_and_supports():
    enc = _golden_encoder()
    assert enc.supports == ((1, 2), (1, 3), (2, 3))
    assert enc.demand_index == 2
    assert enc.supports[enc.demand_index - 1] == (1, 3)


def test_enumerate_supports_lexicographic():
    assert enumerate_supports(4, 2) == (
        (1, 2),
        (1, 3),
        (1, 4),
        (2, 3),
        (2, 4),
        (3, 4),
    )


def test_generator_has_full_rank_and_planted_demand():
    """Every draw must plant U_{k*} proportional to the demand on W."""
    rng = random.Random(7)
    for k in range(2, 6):
        field = PrimeField(7)
        for d in range(1, k + 1):
            for _ in range(10):
                w = tuple(sorted(rng.sample(range(1, k + 1), d)))
                v = VectorGF([field.rand_nonzero_int(rng) for _ in w], field)
                demand = Demand(w, v)
                enc = build_grs_matrix(2, demand, k, field, rng)
                g = enc.generator
                assert rank(g) == k - d + 1
                u_star = enc.row_space_vectors[enc.demand_index - 1]
                v1_inv = field.inv(v.entries[0])
                expect = {
                    i: field.mul(v1_inv, c) for i, c in zip(w, v.entries)
                }
                for col in range(1, k + 1):
                    got = u_star.entries[col - 1]
                    assert got == expect.get(col, 0)


def test_every_support_has_unique_row_space_vector():
    rng = random.Random(3)
    demand = Demand((2, 4), VectorGF([1, 1], PrimeField(5)))
    enc = build_grs_matrix(2, demand, 4, PrimeField(5), rng)
    for s, u, c in zip(enc.supports, enc.row_space_vectors, enc.combination_vectors):
        assert tuple(i + 1 for i, x in enumerate(u.entries) if x != 0) == s
        assert vec_mat(c, enc.generator).entries == u.entries
        assert u.entries[s[0] - 1] == 1  # leading entry pinned to one


def test_field_too_small_rejected():
    demand = Demand((1, 2), VectorGF([1, 1], F3))
    with pytest.raises(ValueError):
        build_grs_matrix(2, demand, 4, F3, random.Random(0))


def test_draw_validation():
    demand = Demand((1, 3), VectorGF([1, 2], F3))
    with pytest.raises(ValueError):
        build_grs_matrix(
            2, demand, 3, F3, random.Random(0),
            JplcDraws(omega_assignment=(0, 0, 2), padding=(1,)),
        )
    with pytest.raises(ValueError):
        build_grs_matrix(
            2, demand, 3, F3, random.Random(0),
            JplcDraws(omega_assignment=(0, 1, 2), padding=(0,)),
        )


def test_deterministic_given_draws():
    demand = Demand((1, 3), VectorGF([1, 2], F3))
    draws = JplcDraws(omega_assignment=(2, 0, 1), padding=(2,))
    a = build_grs_matrix(2, demand, 3, F3, random.Random(1), draws)
    b = build_grs_matrix(2, demand, 3, F3, random.Random(99), draws)
    assert a.generator.rows == b.generator.rows
    assert a.demand_index == b.demand_index


def test_derive_combination_vectors_requires_all_supports():
    g = MatrixGF([[1, 0, 0], [0, 1, 0]], F3)
    with pytest.raises(ValueError):
        derive_combination_vectors(g, tuple(combinations(range(1, 4), 2)))
