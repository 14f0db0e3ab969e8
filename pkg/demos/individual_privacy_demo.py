"""Individually private computation over K=5 streams with demand size 2.

The partition construction pays a shorter download than joint privacy
(rate 4/7 instead of 4/8 at two servers) by promising less: each index's
membership stays hidden, the support as a whole does not.
"""

import argparse
import random
from fractions import Fraction

from plclab import (
    Demand,
    PrimeField,
    VectorGF,
    iplc_capacity,
    jplc_capacity,
    random_dataset,
    run_iplc,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    field = PrimeField(3)
    rng = random.Random(args.seed)
    dataset = random_dataset(field, 5, 16, rng)
    demand = Demand((1, 3), VectorGF([1, 2], field))

    run = run_iplc(2, dataset, demand, rng, verify=True)
    enc = run.encoder

    print("generator rows:")
    for row in enc.generator.rows:
        print(f"  {row}")
    print(f"template supports (public): {enc.template_supports}")
    print(f"actual supports after the permutation draw: {enc.supports}")
    print(f"demanded slot: {enc.demand_index}")

    # The last combination row is forced: it must lie in the row space of
    # the generator restricted to the demanded support, so some rows of the
    # stack are linearly dependent and the engine trims their cost away.
    print("\ncombination stack:")
    for c in enc.combination_vectors:
        print(f"  {c.entries}")

    rep = run.report
    print(f"\ndownloaded {rep.downloaded_symbols} symbols for 16 recovered")
    print(f"rate {rep.rate}, individual-privacy capacity "
          f"{iplc_capacity(2, 5, 2)}")
    print(f"joint privacy would cap at {jplc_capacity(2, 5, 2)} "
          f"(= {float(Fraction(jplc_capacity(2, 5, 2))):.4f})")
    want = demand.evaluate(dataset).entries
    print(f"recovered correctly: {tuple(run.recovered) == want}")


if __name__ == "__main__":
    main()
