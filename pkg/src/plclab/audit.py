"""Audits for recoverability, privacy, and reduction marginals.

Two audit styles coexist. Exhaustive audits enumerate every transcript a
parameter set can produce, weight each by its exact probability, and compare
conditional view distributions as exact rationals; they either certify a
guarantee outright or exhibit a counterexample. Sampled audits estimate the
same posteriors from finitely many runs; raw per-view frequencies are noisy,
so the reported statistic accumulates only deviations that clear a
three-sigma allowance for the view's sample count, weighted by view mass.

The server view at the encoder layer is the published pair (G, C_1..C_M).
The full layer appends the server's serialised query blocks.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from itertools import combinations, permutations, product
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .ffield import PrimeField
from .gflinalg import MatrixGF, VectorGF
from .iplc_encoder import (
    IplcDraws,
    algorithm_probabilities,
    build_partition_matrix,
    free_alpha_positions,
    partition_shape,
    planted_slot_map,
)
from .jplc_encoder import JplcDraws, build_grs_matrix
from .plc_engine import (
    PlcInstance,
    PlcRandomness,
    generate_queries,
    identity_plc_randomness,
    random_plc_randomness,
)
from .protocol_core import Demand, random_demand, random_dataset
from .protocols import minimum_stream_length, run_iplc, run_jplc


@dataclass
class DistributionTable:
    """Exact probability masses over hashable view keys."""

    masses: Dict[object, Fraction] = dataclass_field(default_factory=dict)

    def add(self, key, weight: Fraction) -> None:
        self.masses[key] = self.masses.get(key, Fraction(0)) + weight

    def total(self) -> Fraction:
        return sum(self.masses.values(), Fraction(0))

    def tv_distance(self, other: "DistributionTable") -> Fraction:
        keys = set(self.masses) | set(other.masses)
        gap = Fraction(0)
        for k in keys:
            gap += abs(
                self.masses.get(k, Fraction(0)) - other.masses.get(k, Fraction(0))
            )
        return gap / 2


@dataclass(frozen=True)
class AuditReport:
    kind: str
    layer: str
    mode: str
    passed: bool
    statistic: float
    threshold: float
    weight: int  # enumerated paths or drawn samples
    num_views: int
    details: dict

    def __str__(self):
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{self.kind} [{self.layer}/{self.mode}] statistic="
            f"{self.statistic:.6g} threshold={self.threshold:g} "
            f"views={self.num_views} weight={self.weight} {verdict}"
        )


def encoder_view(encoder) -> tuple:
    """The published artifact: generator rows and combination vectors."""
    return (
        encoder.generator.rows,
        tuple(cv.entries for cv in encoder.combination_vectors),
    )


def server_full_view(encoder, descriptor, server: int) -> tuple:
    return encoder_view(encoder) + (descriptor.per_server[server - 1],)


_DUMMY = random.Random(0)


# ---------------------------------------------------------------------------
# Exhaustive transcript enumerators. Weights are conditional on the demanded
# support; the demand coefficients are part of the enumeration.

def enumerate_jplc_paths(
    support: Tuple[int, ...],
    num_servers: int,
    num_streams: int,
    field: PrimeField,
) -> Iterable[Tuple[Fraction, Demand, object]]:
    k, d, q = num_streams, len(support), field.q
    base = (
        Fraction(1, (q - 1) ** d)
        * Fraction(1, (q - 1) ** (k - d))
        * Fraction(1, math.factorial(k))
    )
    for v_vals in product(range(1, q), repeat=d):
        demand = Demand(support, VectorGF(v_vals, field))
        for padding in product(range(1, q), repeat=k - d):
            for omega in permutations(range(k)):
                draws = JplcDraws(omega_assignment=omega, padding=padding)
                enc = build_grs_matrix(
                    num_servers, demand, k, field, _DUMMY, draws
                )
                yield base, demand, enc


def enumerate_iplc_paths(
    support: Tuple[int, ...],
    num_streams: int,
    field: PrimeField,
) -> Iterable[Tuple[Fraction, Demand, object]]:
    k, d, q = num_streams, len(support), field.q
    r, n, m = partition_shape(k, d)
    v_weight = Fraction(1, (q - 1) ** d)
    if r == 0:
        branches = [(None, Fraction(1), n)]
    else:
        p1, p2 = algorithm_probabilities(k, d)
        branches = []
        if p1 > 0:
            branches.append((1, p1, n))
        branches.append((2, p2, m))
    for v_vals in product(range(1, q), repeat=d):
        demand = Demand(support, VectorGF(v_vals, field))
        for alg, p_alg, block_count in branches:
            for block in range(1, block_count + 1):
                for sigma in permutations(range(1, d + 1)):
                    planted = planted_slot_map(demand, k, sigma, alg, block)
                    free_slots = [
                        s for s in range(1, k + 1) if s not in planted
                    ]
                    free_streams = [
                        i
                        for i in range(1, k + 1)
                        if i not in set(planted.values())
                    ]
                    keys = free_alpha_positions(k, d, alg, block)
                    w = (
                        v_weight
                        * p_alg
                        * Fraction(1, block_count)
                        * Fraction(1, math.factorial(d))
                        * Fraction(1, math.factorial(k - d))
                        * Fraction(1, (q - 1) ** len(keys))
                    )
                    for stream_perm in permutations(free_streams):
                        pi = [0] * k
                        for slot, stream in planted.items():
                            pi[slot - 1] = stream
                        for slot, stream in zip(free_slots, stream_perm):
                            pi[slot - 1] = stream
                        for alpha_vals in product(
                            range(1, q), repeat=len(keys)
                        ):
                            draws = IplcDraws(
                                algorithm=alg,
                                block_index=block,
                                sigma=sigma,
                                pi=tuple(pi),
                                free_alphas=dict(zip(keys, alpha_vals)),
                            )
                            enc = build_partition_matrix(
                                demand, k, field, _DUMMY, draws
                            )
                            yield w, demand, enc


def _paths_for(
    protocol: str,
    support: Tuple[int, ...],
    num_servers: int,
    num_streams: int,
    field: PrimeField,
):
    if protocol == "jplc":
        return enumerate_jplc_paths(support, num_servers, num_streams, field)
    if protocol == "iplc":
        return enumerate_iplc_paths(support, num_streams, field)
    raise ValueError(f"unknown protocol {protocol!r}")


# ---------------------------------------------------------------------------
# Debiased statistics for sampled audits.

def _sigma_floor(target: float, n_v: int) -> float:
    return math.sqrt(max(target * (1 - target), 1e-12) / n_v)


def debiased_marginal_statistic(
    view_counts: Dict[object, Tuple[int, Dict[object, int]]],
    labels: Sequence[object],
    target: float,
) -> float:
    """Mass-weighted posterior deviation beyond a 3-sigma allowance.

    view_counts maps view -> (n_v, hits per label). The statistic for one
    label sums (n_v / n) * max(0, |hit rate - target| - 3 sigma(n_v)); the
    reported value is the worst label's sum. Exactly private transcripts give
    0 up to sampling flukes; a real bias survives the debiasing as soon as
    the heavy views accumulate enough samples.
    """
    n = sum(nv for nv, _ in view_counts.values())
    if n == 0:
        return 0.0
    worst = 0.0
    for label in labels:
        acc = 0.0
        for nv, hits in view_counts.values():
            p_hat = hits.get(label, 0) / nv
            allowance = 3.0 * _sigma_floor(target, nv)
            excess = abs(p_hat - target) - allowance
            if excess > 0:
                acc += (nv / n) * excess
        worst = max(worst, acc)
    return worst


def debiased_pairwise_tv_statistic(
    view_counts: Dict[object, Tuple[int, Dict[object, int]]],
    labels: Sequence[object],
) -> float:
    """Estimated worst-pair total variation between conditional view laws.

    Uses TV(P_a, P_b) = (L / 2) * E_view |p(a|view) - p(b|view)| under the
    uniform label prior, with per-view noise debiased at 3 sigma.
    """
    n = sum(nv for nv, _ in view_counts.values())
    if n == 0:
        return 0.0
    num_labels = len(labels)
    target = 1.0 / num_labels
    worst = 0.0
    for a, b in combinations(labels, 2):
        acc = 0.0
        for nv, hits in view_counts.values():
            pa = hits.get(a, 0) / nv
            pb = hits.get(b, 0) / nv
            allowance = 3.0 * math.sqrt(2.0) * _sigma_floor(target, nv)
            excess = abs(pa - pb) - allowance
            if excess > 0:
                acc += (nv / n) * excess
        worst = max(worst, (num_labels / 2.0) * acc)
    return worst


def _record(view_counts, view, label) -> None:
    entry = view_counts.get(view)
    if entry is None:
        entry = [0, {}]
        view_counts[view] = entry
    entry[0] += 1
    entry[1][label] = entry[1].get(label, 0) + 1


def _freeze_counts(view_counts):
    return {v: (nv, dict(hits)) for v, (nv, hits) in view_counts.items()}


# ---------------------------------------------------------------------------
# Recoverability.

def audit_recoverability(
    protocol: str,
    num_servers: int,
    num_streams: int,
    demand_size: int,
    field: PrimeField,
    rng: random.Random,
    trials: int = 50,
    repetitions: int = 1,
) -> AuditReport:
    """Run full random transcripts and compare against direct evaluation."""
    run = {"jplc": run_jplc, "iplc": run_iplc}[protocol]
    t_len = repetitions * minimum_stream_length(
        protocol, num_servers, num_streams, demand_size
    )
    failures = 0
    first_failure = None
    for trial in range(trials):
        dataset = random_dataset(field, num_streams, t_len, rng)
        demand = random_demand(field, num_streams, demand_size, rng)
        result = run(num_servers, dataset, demand, rng)
        expected = demand.evaluate(dataset).entries
        if tuple(result.recovered) != expected:
            failures += 1
            if first_failure is None:
                first_failure = {
                    "trial": trial,
                    "demand_indices": list(demand.indices),
                    "demand_coefficients": list(demand.coefficients.entries),
                }
    return AuditReport(
        kind="recoverability",
        layer="run",
        mode="sampled",
        passed=failures == 0,
        statistic=float(failures),
        threshold=0.0,
        weight=trials,
        num_views=trials,
        details={
            "protocol": protocol,
            "failures": failures,
            "first_failure": first_failure,
            "stream_length": t_len,
        },
    )


# ---------------------------------------------------------------------------
# Joint privacy.

def audit_joint_privacy(
    num_servers: int,
    num_streams: int,
    demand_size: int,
    field: PrimeField,
    rng: Optional[random.Random] = None,
    layer: str = "encoder",
    mode: str = "exhaustive",
    samples: int = 10000,
    threshold: Optional[float] = None,
    max_paths: int = 2_000_000,
    repetitions: int = 1,
) -> AuditReport:
    """Are conditional view distributions identical across demanded supports?

    Exhaustive mode compares exact conditional distributions (one per
    support) and reports the worst pairwise total variation, which must be
    exactly zero. Sampled mode estimates the same quantity with the debiased
    pairwise statistic.
    """
    supports = list(combinations(range(1, num_streams + 1), demand_size))
    if layer not in ("encoder", "full"):
        raise ValueError("layer must be 'encoder' or 'full'")
    if mode == "exhaustive":
        if threshold is None:
            threshold = 0.0
        stream_length = repetitions * minimum_stream_length(
            "jplc", num_servers, num_streams, demand_size
        )
        tables: Dict[tuple, Dict[tuple, DistributionTable]] = {}
        paths = 0
        for support in supports:
            per_server: Dict[tuple, DistributionTable] = {}
            for w, demand, enc in enumerate_jplc_paths(
                support, num_servers, num_streams, field
            ):
                if layer == "encoder":
                    per_server.setdefault(0, DistributionTable()).add(
                        encoder_view(enc), w
                    )
                    paths += 1
                else:
                    stack = MatrixGF(
                        [cv.entries for cv in enc.combination_vectors], field
                    )
                    instance = PlcInstance(
                        num_servers, stack, enc.demand_index, stream_length
                    )
                    t_perm_weight = Fraction(
                        1, math.factorial(stream_length) * 2**stream_length
                    )
                    for tau in permutations(range(1, stream_length + 1)):
                        for signs in product((1, -1), repeat=stream_length):
                            descriptor = generate_queries(
                                instance, PlcRandomness(tau, signs)
                            )
                            for server in range(1, num_servers + 1):
                                per_server.setdefault(
                                    server, DistributionTable()
                                ).add(
                                    server_full_view(enc, descriptor, server),
                                    w * t_perm_weight,
                                )
                            paths += 1
                            if paths > max_paths:
                                raise ValueError(
                                    "path budget exceeded; shrink parameters "
                                    "or use sampled mode"
                                )
                if paths > max_paths:
                    raise ValueError(
                        "path budget exceeded; shrink parameters or use "
                        "sampled mode"
                    )
            tables[support] = per_server
        worst = Fraction(0)
        worst_pair = None
        for sa, sb in combinations(supports, 2):
            for server in tables[sa]:
                tv = tables[sa][server].tv_distance(tables[sb][server])
                if tv > worst:
                    worst = tv
                    worst_pair = (sa, sb, server)
        views = len(
            {v for per in tables.values() for t in per.values() for v in t.masses}
        )
        for support in supports:
            for table in tables[support].values():
                assert table.total() == 1
        return AuditReport(
            kind="joint-privacy",
            layer=layer,
            mode=mode,
            passed=worst <= Fraction(threshold).limit_denominator(10**9),
            statistic=float(worst),
            threshold=threshold,
            weight=paths,
            num_views=views,
            details={
                "exact_statistic": str(worst),
                "worst_pair": repr(worst_pair),
                "supports": len(supports),
            },
        )
    if mode == "sampled":
        if rng is None:
            raise ValueError("sampled mode needs an rng")
        if threshold is None:
            threshold = 0.02
        stream_length = repetitions * minimum_stream_length(
            "jplc", num_servers, num_streams, demand_size
        )
        view_counts: Dict[object, list] = {}
        for _ in range(samples):
            support = supports[rng.randrange(len(supports))]
            demand = Demand(
                support,
                VectorGF(
                    [field.rand_nonzero_int(rng) for _ in support], field
                ),
            )
            enc = build_grs_matrix(
                num_servers, demand, num_streams, field, rng
            )
            if layer == "encoder":
                _record(view_counts, encoder_view(enc), support)
            else:
                stack = MatrixGF(
                    [cv.entries for cv in enc.combination_vectors], field
                )
                instance = PlcInstance(
                    num_servers, stack, enc.demand_index, stream_length
                )
                randomness = random_plc_randomness(stream_length, rng)
                descriptor = generate_queries(instance, randomness)
                for server in range(1, num_servers + 1):
                    _record(
                        view_counts,
                        (server, server_full_view(enc, descriptor, server)),
                        support,
                    )
        stat = debiased_pairwise_tv_statistic(
            _freeze_counts(view_counts), supports
        )
        return AuditReport(
            kind="joint-privacy",
            layer=layer,
            mode=mode,
            passed=stat <= threshold,
            statistic=stat,
            threshold=threshold,
            weight=samples,
            num_views=len(view_counts),
            details={"supports": len(supports)},
        )
    raise ValueError("mode must be 'exhaustive' or 'sampled'")


# ---------------------------------------------------------------------------
# Individual privacy.

def audit_individual_privacy(
    num_servers: int,
    num_streams: int,
    demand_size: int,
    field: PrimeField,
    rng: Optional[random.Random] = None,
    protocol: str = "iplc",
    mode: str = "exhaustive",
    samples: int = 100000,
    threshold: Optional[float] = None,
) -> AuditReport:
    """Does every stream index keep membership probability D / K given the
    encoder view, under the uniform demand prior?"""
    k, d = num_streams, demand_size
    supports = list(combinations(range(1, k + 1), d))
    target = Fraction(d, k)
    if mode == "exhaustive":
        if threshold is None:
            threshold = 0.0
        mass: Dict[tuple, Dict[tuple, Fraction]] = {}
        support_weight = Fraction(1, len(supports))
        paths = 0
        for support in supports:
            for w, demand, enc in _paths_for(
                protocol, support, num_servers, k, field
            ):
                view = encoder_view(enc)
                slot = mass.setdefault(view, {})
                slot[support] = slot.get(support, Fraction(0)) + w * support_weight
                paths += 1
        worst = Fraction(0)
        for view, per_support in mass.items():
            total = sum(per_support.values(), Fraction(0))
            for i in range(1, k + 1):
                p_i = (
                    sum(
                        (m for s, m in per_support.items() if i in s),
                        Fraction(0),
                    )
                    / total
                )
                worst = max(worst, abs(p_i - target))
        return AuditReport(
            kind="individual-privacy",
            layer="encoder",
            mode=mode,
            passed=worst <= Fraction(threshold).limit_denominator(10**9),
            statistic=float(worst),
            threshold=threshold,
            weight=paths,
            num_views=len(mass),
            details={
                "exact_statistic": str(worst),
                "protocol": protocol,
                "target": str(target),
            },
        )
    if mode == "sampled":
        if rng is None:
            raise ValueError("sampled mode needs an rng")
        if threshold is None:
            threshold = 0.02
        view_counts: Dict[object, list] = {}
        for _ in range(samples):
            support = supports[rng.randrange(len(supports))]
            demand = Demand(
                support,
                VectorGF([field.rand_nonzero_int(rng) for _ in support], field),
            )
            if protocol == "iplc":
                enc = build_partition_matrix(demand, k, field, rng)
            else:
                enc = build_grs_matrix(num_servers, demand, k, field, rng)
            view = encoder_view(enc)
            entry = view_counts.get(view)
            if entry is None:
                entry = [0, {}]
                view_counts[view] = entry
            entry[0] += 1
            for i in support:
                entry[1][i] = entry[1].get(i, 0) + 1
        stat = debiased_marginal_statistic(
            _freeze_counts(view_counts), list(range(1, k + 1)), float(target)
        )
        return AuditReport(
            kind="individual-privacy",
            layer="encoder",
            mode=mode,
            passed=stat <= threshold,
            statistic=stat,
            threshold=threshold,
            weight=samples,
            num_views=len(view_counts),
            details={"protocol": protocol, "target": str(target)},
        )
    raise ValueError("mode must be 'exhaustive' or 'sampled'")


# ---------------------------------------------------------------------------
# Reduction marginal: the fetched index must stay uniform given the view.

def audit_reduction_marginal(
    reduction: str,
    num_servers: int,
    num_streams: int,
    num_side: int,
    field: PrimeField,
    rng: Optional[random.Random] = None,
    mode: str = "exhaustive",
    samples: int = 100000,
    threshold: Optional[float] = None,
) -> AuditReport:
    """Posterior of the reduction's hidden target index given the encoder
    view, against the uniform 1/K baseline."""
    if reduction not in ("pir-psi", "pir-si"):
        raise ValueError("reduction must be 'pir-psi' or 'pir-si'")
    protocol = "jplc" if reduction == "pir-psi" else "iplc"
    k = num_streams
    d = num_side + 1
    target = Fraction(1, k)
    pair_weight = Fraction(1, math.comb(k, num_side) * (k - num_side))
    if mode == "exhaustive":
        if threshold is None:
            threshold = 0.0
        mass: Dict[tuple, Dict[int, Fraction]] = {}
        paths = 0
        for side in combinations(range(1, k + 1), num_side):
            for i_star in range(1, k + 1):
                if i_star in side:
                    continue
                support = tuple(sorted(side + (i_star,)))
                for w, demand, enc in _paths_for(
                    protocol, support, num_servers, k, field
                ):
                    view = encoder_view(enc)
                    slot = mass.setdefault(view, {})
                    slot[i_star] = slot.get(i_star, Fraction(0)) + w * pair_weight
                    paths += 1
        worst = Fraction(0)
        for per_target in mass.values():
            total = sum(per_target.values(), Fraction(0))
            for i in range(1, k + 1):
                p_i = per_target.get(i, Fraction(0)) / total
                worst = max(worst, abs(p_i - target))
        return AuditReport(
            kind="reduction-marginal",
            layer="encoder",
            mode=mode,
            passed=worst <= Fraction(threshold).limit_denominator(10**9),
            statistic=float(worst),
            threshold=threshold,
            weight=paths,
            num_views=len(mass),
            details={
                "exact_statistic": str(worst),
                "reduction": reduction,
                "target": str(target),
            },
        )
    if mode == "sampled":
        if rng is None:
            raise ValueError("sampled mode needs an rng")
        if threshold is None:
            threshold = 0.02
        view_counts: Dict[object, list] = {}
        for _ in range(samples):
            side = tuple(sorted(rng.sample(range(1, k + 1), num_side)))
            rest = [i for i in range(1, k + 1) if i not in side]
            i_star = rest[rng.randrange(len(rest))]
            support = tuple(sorted(side + (i_star,)))
            demand = Demand(
                support,
                VectorGF([field.rand_nonzero_int(rng) for _ in support], field),
            )
            if protocol == "iplc":
                enc = build_partition_matrix(demand, k, field, rng)
            else:
                enc = build_grs_matrix(num_servers, demand, k, field, rng)
            _record(view_counts, encoder_view(enc), i_star)
        stat = debiased_marginal_statistic(
            _freeze_counts(view_counts), list(range(1, k + 1)), float(target)
        )
        return AuditReport(
            kind="reduction-marginal",
            layer="encoder",
            mode=mode,
            passed=stat <= threshold,
            statistic=stat,
            threshold=threshold,
            weight=samples,
            num_views=len(view_counts),
            details={"reduction": reduction, "target": str(target)},
        )
    raise ValueError("mode must be 'exhaustive' or 'sampled'")


# ---------------------------------------------------------------------------
# Engine-layer certificate: the canonical query patterns for any two demand
# indices differ only by a position relabeling plus sign flips, which proves
# the randomised queries are identically distributed.

class _ParityDSU:
    def __init__(self):
        self.parent: Dict[object, object] = {}
        self.parity: Dict[object, int] = {}
        self.size: Dict[object, int] = {}
        self.trail: List[tuple] = []

    def _ensure(self, x):
        if x not in self.parent:
            self.parent[x] = x
            self.parity[x] = 0
            self.size[x] = 1
            self.trail.append(("add", x))

    def find(self, x):
        p = 0
        while self.parent[x] != x:
            p ^= self.parity[x]
            x = self.parent[x]
        return x, p

    def union(self, x, y, diff: int) -> bool:
        """Impose parity(x) xor parity(y) == diff; False on conflict."""
        self._ensure(x)
        self._ensure(y)
        rx, px = self.find(x)
        ry, py = self.find(y)
        if rx == ry:
            return (px ^ py) == diff
        if self.size[rx] < self.size[ry]:
            rx, ry = ry, rx
            px, py = py, px
        self.parent[ry] = rx
        self.parity[ry] = px ^ py ^ diff
        self.size[rx] += self.size[ry]
        self.trail.append(("link", ry, rx))
        return True

    def mark(self) -> int:
        return len(self.trail)

    def rollback(self, mark: int) -> None:
        while len(self.trail) > mark:
            op = self.trail.pop()
            if op[0] == "add":
                del self.parent[op[1]]
                del self.parity[op[1]]
                del self.size[op[1]]
            else:
                _, child, root = op
                self.size[root] -= self.size[child]
                self.parent[child] = child
                self.parity[child] = 0


def _match_server_patterns(blocks_a, blocks_b):
    """Search for (position bijection, sign flips) turning pattern a into b.

    Returns (rho, flips) or None. Patterns are per-round tuples of serialised
    sums under identity randomness.
    """
    groups = []
    for block_a, block_b in zip(blocks_a, blocks_b):
        by_streams_a: Dict[tuple, list] = {}
        by_streams_b: Dict[tuple, list] = {}
        for s in block_a:
            by_streams_a.setdefault(tuple(t[0] for t in s), []).append(s)
        for s in block_b:
            by_streams_b.setdefault(tuple(t[0] for t in s), []).append(s)
        if set(by_streams_a) != set(by_streams_b):
            return None
        for key in sorted(by_streams_a):
            la, lb = by_streams_a[key], by_streams_b[key]
            if len(la) != len(lb):
                return None
            groups.append((la, lb))
    rho: Dict[int, int] = {}
    rev: Dict[int, int] = {}
    dsu = _ParityDSU()
    flat: List[tuple] = []
    for gi, (la, lb) in enumerate(groups):
        for ai, a_sum in enumerate(la):
            flat.append((gi, ai, a_sum))

    def try_pair(a_sum, b_sum, gid):
        added = []
        mark = dsu.mark()
        for (ka, pa, ca), (kb, pb, cb) in zip(a_sum, b_sum):
            assert ka == kb
            if rho.get(pa, pb) != pb or rev.get(pb, pa) != pa:
                ok = False
                break
            if pa not in rho:
                rho[pa] = pb
                rev[pb] = pa
                added.append(pa)
            diff = 0 if ca == cb else 1
            if not dsu.union(("v", pa), ("g", gid), diff):
                ok = False
                break
        else:
            ok = True
        if not ok:
            for pa in added:
                del rev[rho[pa]]
                del rho[pa]
            dsu.rollback(mark)
            return None
        return added, mark

    used: List[set] = [set() for _ in groups]

    def backtrack(idx: int) -> bool:
        if idx == len(flat):
            return True
        gi, ai, a_sum = flat[idx]
        lb = groups[gi][1]
        for bi, b_sum in enumerate(lb):
            if bi in used[gi]:
                continue
            attempt = try_pair(a_sum, b_sum, (gi, ai))
            if attempt is None:
                continue
            added, mark = attempt
            used[gi].add(bi)
            if backtrack(idx + 1):
                return True
            used[gi].remove(bi)
            for pa in added:
                del rev[rho[pa]]
                del rho[pa]
            dsu.rollback(mark)
        return False

    if not backtrack(0):
        return None
    flips = set()
    for key in list(dsu.parent):
        if key[0] == "v":
            _, parity = dsu.find(key)
            if parity:
                flips.add(key[1])
    return dict(rho), flips


def apply_pattern_map(blocks, rho, flips, q: int):
    """Transform a pattern by a certificate and renormalise each sum."""
    out = []
    for block in blocks:
        new_sums = []
        for s in block:
            terms = []
            for k, p, c in s:
                c2 = c if p not in flips else (-c) % q
                terms.append((k, rho[p], c2))
            terms.sort()
            lead = terms[0][2]
            if lead != 1:
                inv = pow(lead, q - 2, q)
                terms = [(k, p, (c * inv) % q) for k, p, c in terms]
            new_sums.append(tuple(terms))
        out.append(tuple(sorted(new_sums)))
    return tuple(out)


def certify_engine_privacy(
    num_servers: int,
    combination_matrix: MatrixGF,
    stream_length: int,
) -> AuditReport:
    """Prove (or refute) that the engine's query distribution is identical
    for every demand index, by exhibiting pattern isomorphisms."""
    m = combination_matrix.nrows
    q = combination_matrix.field.q
    ident = identity_plc_randomness(stream_length)
    patterns = []
    for k_star in range(1, m + 1):
        instance = PlcInstance(
            num_servers, combination_matrix, k_star, stream_length
        )
        patterns.append(generate_queries(instance, ident).per_server)
    checked = 0
    failed = None
    for a, b in combinations(range(m), 2):
        for server in range(num_servers):
            found = _match_server_patterns(
                patterns[a][server], patterns[b][server]
            )
            if found is None:
                failed = (a + 1, b + 1, server + 1)
                break
            rho, flips = found
            if apply_pattern_map(
                patterns[a][server], rho, flips, q
            ) != patterns[b][server]:
                failed = (a + 1, b + 1, server + 1)
                break
            checked += 1
        if failed:
            break
    return AuditReport(
        kind="engine-privacy",
        layer="full",
        mode="certificate",
        passed=failed is None,
        statistic=0.0 if failed is None else 1.0,
        threshold=0.0,
        weight=checked,
        num_views=m,
        details={
            "pairs": m * (m - 1) // 2,
            "servers": num_servers,
            "failed": repr(failed),
        },
    )
